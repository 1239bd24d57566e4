"""Text formats: PGCAP cap files, PGCODE matrices, JSON-lines traces, JSON reports.

PGCAP::

    PGCAP 1 <N> <q> <n>
    <N+1 field elements>      # n lines, canonical coordinates

PGCODE::

    PGCODE 1 <q> <m> <n>
    <n field elements>        # m lines, the rows of H

Field elements are written as integer indices (base-p digits of the
polynomial coefficients, constant term least significant).  Blank lines and
lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from typing import Iterable

import numpy as np

from . import __version__
from .cap import Cap, CollinearError, DuplicatePointError
from .codes import ParityCheckMatrix
from .geometry import GeometryError, ProjectiveSpace
from .gf import FieldError, build_field, prime_power
from .rng import RNG_ALGORITHM

CAP_MAGIC = "PGCAP"
CODE_MAGIC = "PGCODE"
FORMAT_VERSION = 1


class ParseError(ValueError):
    def __init__(self, line: int | None, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class CollinearInputError(ParseError):
    def __init__(self, line: int, triple: tuple[int, int, int]):
        self.triple = triple
        super().__init__(line, f"points {triple} are collinear")


def _content_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if s and not s.startswith("#"):
            out.append((no, s))
    return out


def _ints(no: int, s: str, count: int, what: str) -> list[int]:
    parts = s.split()
    if len(parts) != count:
        raise ParseError(no, f"expected {count} {what}, got {len(parts)}")
    try:
        return [int(x) for x in parts]
    except ValueError:
        raise ParseError(no, f"non-integer token in {s!r}") from None


def _field(no: int, q: int):
    try:
        p, k = prime_power(q)
        return build_field(p, k)
    except FieldError as e:
        raise ParseError(no, str(e)) from None


# -- caps ------------------------------------------------------------------------

def format_cap(cap: Cap) -> str:
    space = cap.space
    lines = [f"{CAP_MAGIC} {FORMAT_VERSION} {space.n_dim} {space.q} {len(cap)}"]
    lines += [" ".join(str(int(x)) for x in space.coords[v]) for v in cap.points]
    return "\n".join(lines) + "\n"


def parse_cap_points(text: str) -> tuple[ProjectiveSpace, list[int], list[int]]:
    """Space, points and their line numbers; checks syntax and canonical form only."""
    lines = _content_lines(text)
    if not lines:
        raise ParseError(1, "empty file")
    no, header = lines[0]
    h = header.split()
    if len(h) != 5 or h[0] != CAP_MAGIC:
        raise ParseError(no, f"expected header '{CAP_MAGIC} 1 <N> <q> <n>'")
    version, n_dim, q, n = _ints(no, " ".join(h[1:]), 4, "header fields")
    if version != FORMAT_VERSION:
        raise ParseError(no, f"unsupported format version {version}")
    if n < 0:
        raise ParseError(no, f"negative point count {n}")
    try:
        space = ProjectiveSpace(n_dim, _field(no, q))
    except GeometryError as e:
        raise ParseError(no, str(e)) from None
    body = lines[1:]
    if len(body) < n:
        last = body[-1][0] if body else no
        raise ParseError(last + 1, f"truncated: header announces {n} points, found {len(body)}")
    if len(body) > n:
        raise ParseError(body[n][0], f"extra data after {n} points")
    points, where, seen = [], [], {}
    for no, s in body:
        v = _ints(no, s, n_dim + 1, "coordinates")
        if any(not 0 <= x < q for x in v):
            raise ParseError(no, f"coordinate outside 0..{q - 1}")
        if not any(v):
            raise ParseError(no, "zero vector")
        lead = next(x for x in v if x)
        if lead != 1:
            raise ParseError(no, "not canonical: leading nonzero coordinate must be 1")
        idx = space.point_from_coords(v)
        if idx in seen:
            raise ParseError(no, f"repeats the point on line {seen[idx]}")
        seen[idx] = no
        points.append(idx)
        where.append(no)
    return space, points, where


def parse_cap(text: str) -> Cap:
    """Read a PGCAP file; a collinear triple is reported at the line of its last point."""
    space, points, where = parse_cap_points(text)
    cap = Cap(space)
    for v, no in zip(points, where):
        try:
            cap.add_point(v)
        except CollinearError as e:
            raise CollinearInputError(no, e.triple) from None
        except DuplicatePointError:  # pragma: no cover - rejected above
            raise ParseError(no, "duplicate point") from None
    return cap


def write_cap(path, cap: Cap) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_cap(cap))


def read_cap(path) -> Cap:
    with open(path, encoding="utf-8") as fh:
        return parse_cap(fh.read())


# -- parity-check matrices ------------------------------------------------------------

def format_code(H: ParityCheckMatrix) -> str:
    lines = [f"{CODE_MAGIC} {FORMAT_VERSION} {H.q} {H.m} {H.n}"]
    lines += [" ".join(str(int(x)) for x in row) for row in H.entries]
    return "\n".join(lines) + "\n"


def parse_code(text: str) -> ParityCheckMatrix:
    lines = _content_lines(text)
    if not lines:
        raise ParseError(1, "empty file")
    no, header = lines[0]
    h = header.split()
    if len(h) != 5 or h[0] != CODE_MAGIC:
        raise ParseError(no, f"expected header '{CODE_MAGIC} 1 <q> <m> <n>'")
    version, q, m, n = _ints(no, " ".join(h[1:]), 4, "header fields")
    if version != FORMAT_VERSION:
        raise ParseError(no, f"unsupported format version {version}")
    if m < 1 or n < 1:
        raise ParseError(no, "matrix dimensions must be positive")
    F = _field(no, q)
    body = lines[1:]
    if len(body) < m:
        last = body[-1][0] if body else no
        raise ParseError(last + 1, f"truncated: header announces {m} rows, found {len(body)}")
    if len(body) > m:
        raise ParseError(body[m][0], f"extra data after {m} rows")
    rows = []
    for no, s in body:
        r = _ints(no, s, n, "entries")
        if any(not 0 <= x < q for x in r):
            raise ParseError(no, f"entry outside 0..{q - 1}")
        rows.append(r)
    return ParityCheckMatrix(F, np.array(rows, dtype=np.int64))


def write_code(path, H: ParityCheckMatrix) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_code(H))


def read_code(path) -> ParityCheckMatrix:
    with open(path, encoding="utf-8") as fh:
        return parse_code(fh.read())


# -- traces and reports ------------------------------------------------------------

def dumps(obj) -> str:
    """Canonical JSON: fixed key order, no platform-dependent whitespace."""
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def trace_header(result) -> dict:
    """Run header for a nibble RunResult: space, parameters, seed, generator, outcome."""
    space = result.space
    return {
        "format": "pgcaps-trace",
        "version": FORMAT_VERSION,
        "library_version": __version__,
        "N": space.n_dim,
        "q": space.q,
        "p": space.field.p,
        "k": space.field.k,
        "seed": result.params.seed,
        "rng": RNG_ALGORITHM,
        "params": asdict(result.params),
        "theta": result.theta,
        "steps": result.steps,
        "stop_reason": result.stop_reason,
        "nibble_size": result.nibble_size,
        "cap_size": len(result.cap),
    }


def format_trace(header: dict, rows: Iterable[dict]) -> str:
    out = [json.dumps({"header": header}, allow_nan=False)]
    out += [json.dumps(r, allow_nan=False) for r in rows]
    return "\n".join(out) + "\n"


def write_trace(path, result) -> None:
    text = format_trace(trace_header(result), (t.to_dict() for t in result.trace))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def parse_trace(text: str) -> tuple[dict, list[dict]]:
    recs = []
    for no, s in enumerate(text.splitlines(), start=1):
        if not s.strip():
            continue
        try:
            recs.append(json.loads(s))
        except json.JSONDecodeError as e:
            raise ParseError(no, f"invalid JSON: {e.msg}") from None
    if not recs:
        raise ParseError(1, "empty trace")
    if not isinstance(recs[0], dict) or "header" not in recs[0]:
        raise ParseError(1, "first record must be the run header")
    return recs[0]["header"], recs[1:]


def read_trace(path) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh.read())


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
