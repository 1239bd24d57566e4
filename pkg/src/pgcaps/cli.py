"""pgcaps command line: construct, verify, oracle, export-code, trials.

Exit status: 0 success, 1 verification failure, 2 usage or parse error,
3 resource limit.
"""

from __future__ import annotations

import argparse
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import __version__
from .cap import Cap, is_cap, is_complete, trivial_lower_bound
from .codes import IntractableError, cap_to_parity_check, verify_quasi_perfect
from .diagnostics import all_finite
from .fileio import (ParseError, dumps, parse_cap_points, write_cap, write_code,
                     write_json, write_trace)
from .geometry import GeometryError, ProjectiveSpace, num_points
from .gf import DEFAULT_MAX_ORDER, build_field, is_prime
from .nibble import COMPLETIONS, ESTIMATORS, STOP_RULES, NibbleError, NibbleParams, run
from .oracle import (DEFAULT_ORACLE_LIMIT, OracleTooLarge, exhaustive_min_complete_cap,
                     subset_min_complete_cap)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3
DEFAULT_MAX_POINTS = 1 << 21


class UsageError(Exception):
    pass


class LimitError(Exception):
    pass


# -- argument parsing ------------------------------------------------------------

def _space_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_argument_group("space")
    g.add_argument("--dim", type=int, required=required, help="projective dimension N")
    g.add_argument("--p", type=int, required=required, help="field characteristic")
    g.add_argument("--k", type=int, default=1, help="extension degree, q = p^k (default 1)")
    g.add_argument("--max-points", type=int, default=DEFAULT_MAX_POINTS,
                   help=f"refuse spaces with more points (default {DEFAULT_MAX_POINTS})")


def _nibble_flags(p: argparse.ArgumentParser) -> None:
    d = NibbleParams()
    g = p.add_argument_group("nibble")
    g.add_argument("--seed", type=int, default=d.seed)
    g.add_argument("--theta", type=float, default=None,
                   help="nibble size constant (default min(1/ln(q)^2, 0.5))")
    g.add_argument("--c", type=float, default=d.c, help=f"stop exponent (default {d.c:g})")
    g.add_argument("--c1", type=float, default=d.c1,
                   help=f"phase-1 exponent (default {d.c1:g})")
    g.add_argument("--stop-s-min", type=int, default=d.stop_s_min)
    g.add_argument("--stall-limit", type=int, default=d.stall_limit)
    g.add_argument("--sample-cap", type=int, default=d.sample_cap)
    g.add_argument("--sample-size", type=int, default=d.sample_size)
    g.add_argument("--stop-rule", choices=STOP_RULES, default=d.stop_rule)
    g.add_argument("--completion", choices=COMPLETIONS, default=d.completion)
    g.add_argument("--estimator", choices=ESTIMATORS, default=d.estimator)


def _format_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("text", "json"), default="text",
                   help="stdout format (default text)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pgcaps", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build a complete cap with the nibble")
    _space_flags(c)
    _nibble_flags(c)
    _format_flag(c)
    c.add_argument("--out", help="cap file (default cap_N<N>_q<q>_s<seed>.pgcap)")
    c.add_argument("--trace", help="JSON-lines trace (default: cap file name with .trace.jsonl)")
    c.add_argument("--diagnostics", help="write the per-step residual report here (JSON)")
    c.add_argument("--timing", action="store_true", help="record wall times in the trace")

    v = sub.add_parser("verify", help="check that a cap file holds a complete cap")
    v.add_argument("file")
    _format_flag(v)

    o = sub.add_parser("oracle", help="exact minimum complete-cap size by search")
    _space_flags(o)
    _format_flag(o)
    o.add_argument("--limit", type=int, default=DEFAULT_ORACLE_LIMIT,
                   help=f"largest number of points to search (default {DEFAULT_ORACLE_LIMIT})")
    o.add_argument("--method", choices=("exhaustive", "subset"), default="exhaustive")
    o.add_argument("--out", help="write the minimal witness cap here")

    e = sub.add_parser("export-code", help="parity-check matrix and code report for a cap file")
    e.add_argument("file")
    _format_flag(e)
    e.add_argument("--out", help="PGCODE file (default: input name with .pgcode)")
    e.add_argument("--report", help="JSON report (default: input name with .report.json)")

    t = sub.add_parser("trials", help="seeded batch of constructions with aggregate statistics")
    _space_flags(t)
    _nibble_flags(t)
    _format_flag(t)
    t.add_argument("--trials", type=int, default=10)
    t.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    t.add_argument("--out", help="aggregate JSON file (default trials_N<N>_q<q>_s<seed>.json)")
    return parser


# -- validation --------------------------------------------------------------------

def _space(args) -> ProjectiveSpace:
    if args.dim < 2:
        raise UsageError(f"--dim must be >= 2, got {args.dim}")
    if not is_prime(args.p):
        raise UsageError(f"--p must be prime, got {args.p}")
    if args.k < 1:
        raise UsageError(f"--k must be >= 1, got {args.k}")
    if args.max_points < 1:
        raise UsageError("--max-points must be positive")
    q = args.p**args.k
    if q > DEFAULT_MAX_ORDER:
        raise LimitError(f"field order {q} exceeds the limit {DEFAULT_MAX_ORDER}")
    n = num_points(args.dim, q)
    if n > args.max_points:
        raise LimitError(f"PG({args.dim},{q}) has {n} points, above --max-points {args.max_points}")
    try:
        return ProjectiveSpace(args.dim, build_field(args.p, args.k), max_points=args.max_points)
    except (GeometryError, MemoryError) as e:
        raise LimitError(str(e)) from None


def _params(args, seed: int | None = None) -> NibbleParams:
    prm = NibbleParams(
        theta=args.theta, c=args.c, c1=args.c1, stop_s_min=args.stop_s_min,
        stall_limit=args.stall_limit, sample_cap=args.sample_cap, sample_size=args.sample_size,
        seed=args.seed if seed is None else seed, stop_rule=args.stop_rule,
        completion=args.completion, estimator=args.estimator,
    )
    try:
        prm.validate()
    except NibbleError as e:
        raise UsageError(str(e)) from None
    return prm


def _emit(args, text: str, obj: dict) -> None:
    if args.format == "json":
        sys.stdout.write(dumps(obj))
    else:
        print(text)


def _stem(path: str) -> str:
    return path[:-len(".pgcap")] if path.endswith(".pgcap") else path


# -- commands ----------------------------------------------------------------------

def _verified(cap: Cap) -> bool:
    return bool(is_cap(cap.space, cap.points)) and bool(is_complete(Cap(cap.space, cap.points)))


def cmd_construct(args) -> int:
    space = _space(args)
    params = _params(args)
    out = args.out or f"cap_N{space.n_dim}_q{space.q}_s{params.seed}.pgcap"
    trace = args.trace or _stem(out) + ".trace.jsonl"
    result = run(space, params, with_diagnostics=True, timing=args.timing)
    ok = _verified(result.cap)
    write_cap(out, result.cap)
    write_trace(trace, result)
    if args.diagnostics:
        write_json(args.diagnostics, result.diagnostics)
    diag_ok = all(all_finite(d) for d in result.diagnostics)
    summary = (f"complete cap: N={space.n_dim} q={space.q} size={len(result.cap)} "
               f"seed={params.seed} stop={result.stop_reason}")
    _emit(args, summary if ok else "verification failed: " + summary, {
        "N": space.n_dim, "q": space.q, "size": len(result.cap), "seed": params.seed,
        "stop": result.stop_reason, "nibble_size": result.nibble_size, "steps": result.steps,
        "verified": ok, "diagnostics_finite": diag_ok, "cap_file": out, "trace_file": trace,
    })
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    try:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {args.file}: {e.strerror}") from None
    space, points, _ = parse_cap_points(text)
    report = {"file": args.file, "N": space.n_dim, "q": space.q, "size": len(points),
              "is_cap": True, "is_complete": False, "witness": None}
    check = is_cap(space, points)
    if not check:
        report.update(is_cap=False, witness=[space.coords_from_point(v) for v in check.witness])
        _emit(args, f"not a cap: collinear points {report['witness']}", report)
        return EXIT_FAIL
    comp = is_complete(Cap(space, points))
    if not comp:
        report["witness"] = [space.coords_from_point(comp.witness[0])]
        _emit(args, f"cap of size {len(points)} is not complete: "
                    f"uncovered point {report['witness'][0]}", report)
        return EXIT_FAIL
    report["is_complete"] = True
    _emit(args, f"complete cap: N={space.n_dim} q={space.q} size={len(points)}", report)
    return EXIT_OK


def cmd_oracle(args) -> int:
    space = _space(args)
    search = exhaustive_min_complete_cap if args.method == "exhaustive" else subset_min_complete_cap
    try:
        res = search(space, limit=args.limit)
    except OracleTooLarge as e:
        raise LimitError(str(e)) from None
    cap = Cap(space, res.witness)
    if args.out:
        write_cap(args.out, cap)
    _emit(args, str(res.size), {
        "N": space.n_dim, "q": space.q, "size": res.size, "method": args.method,
        "nodes": res.nodes, "witness": [space.coords_from_point(v) for v in res.witness],
        "verified": _verified(cap),
    })
    return EXIT_OK


def cmd_export_code(args) -> int:
    try:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {args.file}: {e.strerror}") from None
    space, points, _ = parse_cap_points(text)
    if not points:
        raise UsageError("cannot export an empty cap")
    check = is_cap(space, points)
    cap = Cap(space, points, checked=False)
    complete = bool(check) and bool(is_complete(cap))
    H = cap_to_parity_check(cap)
    try:
        code = verify_quasi_perfect(H)
    except IntractableError as e:
        raise LimitError(str(e)) from None
    out = args.out or _stem(args.file) + ".pgcode"
    report_path = args.report or _stem(args.file) + ".report.json"
    report = code.to_dict()
    report.update(q=space.q, m=H.m, short=H.short, source_is_cap=bool(check),
                  source_complete=complete)
    write_code(out, H)
    write_json(report_path, report)
    flag = "" if complete else " (source is not a complete cap)"
    d = "none" if code.d is None else code.d
    R = "unbounded" if code.R is None else code.R
    _emit(args, f"[{code.n},{code.k},{d}]_{space.q} code, R={R}, "
                f"quasi_perfect={str(code.quasi_perfect).lower()}{flag}", report)
    return EXIT_OK if complete else EXIT_FAIL


@dataclass
class _TrialJob:
    space_args: tuple[int, int, int, int]
    params: NibbleParams


def _run_trial(job: _TrialJob) -> dict:
    n_dim, p, k, max_points = job.space_args
    space = ProjectiveSpace(n_dim, build_field(p, k), max_points=max_points)
    result = run(space, job.params, with_diagnostics=True)
    residuals: dict[str, list[float]] = {}
    for d in result.diagnostics:
        for name, entry in d["quantities"].items():
            if entry["residual"] is not None:
                residuals.setdefault(name, []).append(entry["residual"])
    return {
        "seed": job.params.seed,
        "size": len(result.cap),
        "nibble_size": result.nibble_size,
        "steps": result.steps,
        "stop_reason": result.stop_reason,
        "verified": _verified(result.cap),
        "diagnostics_finite": all(all_finite(d) for d in result.diagnostics),
        "residual_mean": {n: statistics.fmean(v) for n, v in sorted(residuals.items())},
    }


def _summary(values) -> dict:
    vals = list(values)
    return {"mean": statistics.fmean(vals), "stddev": statistics.pstdev(vals),
            "min": min(vals), "max": max(vals)}


def aggregate_trials(space: ProjectiveSpace, base: NibbleParams, trials: list[dict]) -> dict:
    names = sorted({n for t in trials for n in t["residual_mean"]})
    return {
        "N": space.n_dim,
        "q": space.q,
        "trials": len(trials),
        "base_seed": base.seed,
        "params": {k: v for k, v in vars(base).items() if k != "seed"},
        "trivial_lower_bound": trivial_lower_bound(space).integer,
        "size": _summary(t["size"] for t in trials),
        "nibble_size": _summary(t["nibble_size"] for t in trials),
        "steps": _summary(t["steps"] for t in trials),
        "residuals": {n: _summary(t["residual_mean"][n] for t in trials if n in t["residual_mean"])
                      for n in names},
        "per_trial": trials,
    }


def cmd_trials(args) -> int:
    space = _space(args)
    base = _params(args)
    if args.trials < 1:
        raise UsageError(f"--trials must be >= 1, got {args.trials}")
    if args.jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {args.jobs}")
    if base.seed + args.trials > 2**64:
        raise UsageError("seed range exceeds 64 bits")
    jobs = [_TrialJob((args.dim, args.p, args.k, args.max_points), _params(args, base.seed + i))
            for i in range(args.trials)]
    results = []
    if args.jobs == 1:
        for job in jobs:
            try:
                results.append(_run_trial(job))
            except Exception as e:
                print(f"pgcaps: trial with seed {job.params.seed} failed: {e}", file=sys.stderr)
                return EXIT_FAIL
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_run_trial, job) for job in jobs]
            for job, fut in zip(jobs, futures):
                try:
                    results.append(fut.result())
                except Exception as e:
                    print(f"pgcaps: trial with seed {job.params.seed} failed: {e}", file=sys.stderr)
                    return EXIT_FAIL
    agg = aggregate_trials(space, base, results)
    out = args.out or f"trials_N{space.n_dim}_q{space.q}_s{base.seed}.json"
    write_json(out, agg)
    bad = [t["seed"] for t in results if not t["verified"]]
    s = agg["size"]
    _emit(args, f"{len(results)} trials PG({space.n_dim},{space.q}): size mean={s['mean']:.3f} "
                f"sd={s['stddev']:.3f} min={s['min']} max={s['max']} -> {out}",
          {k: v for k, v in agg.items() if k != "per_trial"} | {"out": out})
    if bad:
        print(f"pgcaps: unverified caps for seeds {bad}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


COMMANDS = {
    "construct": cmd_construct,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
    "export-code": cmd_export_code,
    "trials": cmd_trials,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"pgcaps: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as e:
        print(f"pgcaps: parse error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except LimitError as e:
        print(f"pgcaps: resource limit: {e}", file=sys.stderr)
        return EXIT_LIMIT


if __name__ == "__main__":
    sys.exit(main())
