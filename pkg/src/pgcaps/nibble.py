"""Randomized nibble construction of complete caps.

One step, starting from the uncovered set ``omega``, its sampling subset
``s`` (``s <= omega``) and the current cap ``A``:

* choose: each point of ``s`` joins the nibble ``B`` with probability
  ``p = theta / (b * q^((N+1)/2))``;
* filter: ``x in B`` is good when no line through ``x`` meets
  ``(A | B) - {x}`` twice; the good points ``M`` join the cap;
* delete: ``D`` is the part of ``omega`` on a secant of the new cap or in ``B``;
* compensate: every other point ``v`` of ``s`` is dropped with probability
  ``(Pu - Pv) / (1 - Pv)`` so that all of ``s`` survives with probability
  ``1 - Pu``;
* ``b`` and ``b'`` are multiplied by ``1 - Pu`` and ``1 - Pl``.

``Pu`` and ``Pl`` come from the extremes over ``omega`` of two counts per
point: ``A(v)``, the points of ``s`` on lines joining ``v`` to the cap, and
``T(v)``, the pairs of ``s`` collinear with ``v``.  ``Pv`` is estimated line
by line through ``v`` (see :func:`line_deletion_estimate`), or in closed form
from ``A(v)`` and ``T(v)`` alone (:func:`deletion_estimate`).

Random draws, in order of use: the ``sample`` stream picks extreme-value
samples when ``omega`` is large; the ``choose`` stream draws one uniform per
point of ``s`` in increasing index order; the ``compensate`` stream draws one
uniform per point of ``s - D``, same order; the ``greedy`` stream drives the
final completion.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .cap import Cap, greedy_complete
from .geometry import ProjectiveSpace
from .rng import streams

DEFAULT_THETA_CAP = 0.5
STOP_RULES = ("practical", "paper", "both")
COMPLETIONS = ("random", "lowest")
ESTIMATORS = ("line", "independent")
# work arrays in the count routines are chunked to roughly this many cells
_CHUNK_CELLS = 1 << 22
_P_MAX = math.nextafter(1.0, 0.0)
# a run keeps its own copy of every line while #lines * (q+1) stays below this
LINE_CACHE_INCIDENCES = 1 << 24


class NibbleError(ValueError):
    pass


@dataclass
class NibbleParams:
    theta: float | None = None  # None: 1/ln(q)^2, capped at DEFAULT_THETA_CAP
    c: float = 300.0
    c1: float = 100.0
    stop_s_min: int = 0
    stall_limit: int = 3
    sample_cap: int = 100_000
    sample_size: int = 4096
    seed: int = 0
    stop_rule: str = "practical"
    completion: str = "random"
    estimator: str = "line"

    def validate(self) -> None:
        if self.theta is not None and not 0.0 < self.theta < 1.0:
            raise NibbleError(f"theta must lie in (0, 1), got {self.theta}")
        if self.c <= 0 or self.c1 < 0:
            raise NibbleError("c must be positive and c1 non-negative")
        if self.stop_s_min < 0 or self.stall_limit < 1:
            raise NibbleError("stop_s_min must be >= 0 and stall_limit >= 1")
        if self.sample_cap < 1 or self.sample_size < 1:
            raise NibbleError("sample_cap and sample_size must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise NibbleError("seed must be a 64-bit unsigned integer")
        if self.stop_rule not in STOP_RULES:
            raise NibbleError(f"stop_rule must be one of {STOP_RULES}")
        if self.completion not in COMPLETIONS:
            raise NibbleError(f"completion must be one of {COMPLETIONS}")
        if self.estimator not in ESTIMATORS:
            raise NibbleError(f"estimator must be one of {ESTIMATORS}")

    def theta_for(self, q: int) -> float:
        if self.theta is not None:
            return self.theta
        return min(math.log(q) ** -2, DEFAULT_THETA_CAP)


@dataclass
class StepTrace:
    """One row of the run trace; field names are a file-format contract."""

    step: int
    size_B: int
    size_M: int
    size_D: int
    size_R: int
    size_S_next: int
    size_Omega_next: int
    p: float
    p_clamped: bool
    P_upper: float
    P_upper_clamped: bool
    P_lower: float
    P_lower_clamped: bool
    extrema_sampled: bool
    a_next: float
    b_next: float
    b_prime_next: float
    phase: str
    stalled: bool
    wall_time: float | None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class NibbleState:
    space: ProjectiveSpace
    params: NibbleParams
    theta: float
    omega: np.ndarray
    s: np.ndarray
    cap: Cap
    step: int = 0
    b: float = 1.0
    b_prime: float = 1.0
    stalls: int = 0
    trace: list[StepTrace] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)
    rng: dict[str, np.random.Generator] = field(default_factory=dict, repr=False)
    _line_cache: list[np.ndarray] | None = field(default=None, repr=False)

    def lines(self):
        """Chunks of every line, cached for the run when small enough."""
        if self._line_cache is not None:
            return self._line_cache
        space = self.space
        rows = max(1, _CHUNK_CELLS // (4 * (space.q + 1)))
        if space.num_points * space.lines_per_point > LINE_CACHE_INCIDENCES:
            return space.iter_lines(max_rows=rows)
        self._line_cache = [L.astype(np.int32) for L in space.iter_lines(max_rows=rows)]
        return self._line_cache

    def fork(self, seed: int) -> NibbleState:
        """Independent copy of the current state with fresh streams from ``seed``."""
        return NibbleState(
            space=self.space, params=self.params, theta=self.theta,
            omega=self.omega.copy(), s=self.s.copy(), cap=self.cap.copy(),
            step=self.step, b=self.b, b_prime=self.b_prime, stalls=self.stalls,
            rng=streams(seed), _line_cache=self._line_cache,
        )

    @property
    def a(self) -> float:
        return len(self.cap) / self.space.q ** ((self.space.n_dim - 1) / 2)

    def s_points(self) -> np.ndarray:
        return np.flatnonzero(self.s)

    def omega_points(self) -> np.ndarray:
        return np.flatnonzero(self.omega)


def initial_state(space: ProjectiveSpace, params: NibbleParams) -> NibbleState:
    params.validate()
    P = space.num_points
    return NibbleState(
        space=space,
        params=params,
        theta=params.theta_for(space.q),
        omega=np.ones(P, dtype=bool),
        s=np.ones(P, dtype=bool),
        cap=Cap(space),
        rng=streams(params.seed),
    )


# -- probabilities -----------------------------------------------------------

class Clamped(NamedTuple):
    value: float
    clamped: bool


def choose_probability(state: NibbleState) -> Clamped:
    if state.b <= 0:
        raise NibbleError(f"b must be positive, got {state.b}")
    N, q = state.space.n_dim, state.space.q
    p = state.theta / (state.b * q ** ((N + 1) / 2))
    return Clamped(min(p, 1.0), p > 1.0)


@dataclass
class Extrema:
    max_A: int
    min_A: int
    max_T: int
    min_T: int
    mean_A: float
    mean_T: float
    sampled: bool
    scanned: int


def upper_P(p: float, ext: Extrema) -> Clamped:
    """p + p max A(v) + p^2 max T(v), kept inside (0, 1)."""
    raw = p + p * ext.max_A + p * p * ext.max_T
    return Clamped(min(raw, _P_MAX), raw > _P_MAX)


def lower_P(p: float, ext: Extrema, p_upper: float) -> Clamped:
    """p min A - 2 p^2 (max A)^2 - p^3 max A max T, kept inside [0, Pu]."""
    raw = p * ext.min_A - 2 * p**2 * ext.max_A**2 - p**3 * ext.max_A * ext.max_T
    val = min(max(raw, 0.0), p_upper)
    return Clamped(val, val != raw)


def deletion_estimate(p: float, a_count, t_count, p_upper: float):
    """Estimate of Pr(v in D) from A(v) and T(v), clipped to [0, Pu].

    ``1 - (1-p) (1-p)^A (1-p^2)^T``: v survives if it is not chosen itself,
    no point on a line from v to the cap is chosen, and no collinear pair is
    chosen, treating the three as independent and ignoring whether the
    chosen points turn out good.
    """
    a_count = np.asarray(a_count, dtype=np.float64)
    t_count = np.asarray(t_count, dtype=np.float64)
    if p >= 1.0:
        return np.full(np.broadcast(a_count, t_count).shape, min(1.0, p_upper))
    log_keep = (1 + a_count) * np.log1p(-p) + t_count * np.log1p(-p * p)
    return np.clip(-np.expm1(log_keep), 0.0, p_upper)


def line_deletion_estimate(state: NibbleState, p: float, A_all: np.ndarray,
                           T_all: np.ndarray) -> np.ndarray:
    """Estimate of Pr(v in D) for every point, one factor per line through v.

    With ``m = |S(l) - {v}|`` and ``g(x) = (1-p)^A(x) (1-p^2)^T(x)`` the chance
    that a chosen x is good, a line l through v deletes v when

    * l carries a cap point and exactly one point of S(l) - {v} is chosen
      and good, or
    * l is cap-free and exactly two points of S(l) - {v} are chosen and good.

    Here g is averaged over S(l) - {v} and divided by the part of it that l
    itself contributes, since that part is already conditioned on.  The
    lines are then treated as independent.  Unclipped; entries are
    meaningful only for points of s.
    """
    space = state.space
    P = space.num_points
    if p >= 1.0:
        return np.ones(P)
    s = state.s.astype(np.float64)
    members = state.cap.members
    q1, q2 = np.log1p(-p), np.log1p(-p * p)
    g = np.exp(A_all * q1 + T_all * q2) * s
    log_keep = np.full(P, q1)
    for L in state.lines():
        sl = s[L]
        tot = sl.sum(axis=1)
        busy = tot >= 2  # other lines leave every point of s alone
        if not busy.any():
            continue
        L, sl = L[busy], sl[busy]
        m = (tot[busy] - 1)[:, None]  # |S(l) - {v}| for the points v of s
        gl = g[L]
        gm = (gl.sum(axis=1)[:, None] - gl) / m
        pairs = m * (m - 1) / 2
        with_cap = members[L].any(axis=1)[:, None]
        with np.errstate(divide="ignore", over="ignore"):
            one = m * p * np.exp((m - 1) * q1) * np.minimum(1.0, gm * np.exp(-m * q1))
            two = pairs * p * p * np.exp((m - 2) * q1) * np.minimum(1.0, gm * np.exp(-pairs * q2)) ** 2
            term = np.where(with_cap, one, two)
            contrib = np.log(np.clip(1.0 - term, 0.0, 1.0)) * sl
        contrib[sl == 0] = 0.0  # keeps -inf * 0 out of the sum
        log_keep += np.bincount(L.ravel(), weights=contrib.ravel(), minlength=P)
    return -np.expm1(log_keep)


# -- per-point counts ----------------------------------------------------------

def point_counts(state: NibbleState, query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """|A(v)| and |T(v)| for every v in ``query`` (points of omega), vectorized.

    Raises NibbleError if some v sits on a secant of the cap, which the
    delete step rules out.
    """
    space = state.space
    P = space.num_points
    query = np.asarray(query, dtype=np.int64)
    s_pts = state.s_points()
    cap_pts = np.array(state.cap.points, dtype=np.int64)
    A = np.zeros(len(query), dtype=np.int64)
    T = np.zeros(len(query), dtype=np.int64)
    if not len(query) or not len(s_pts):
        return A, T
    chunk = max(1, _CHUNK_CELLS // max(P, len(s_pts) * 8))
    for lo in range(0, len(query), chunk):
        vs = query[lo:lo + chunk]
        m = len(vs)
        rows = np.arange(m, dtype=np.int64)[:, None]
        lab = space.pencil_labels_many(vs, s_pts)
        valid = s_pts[None, :] != vs[:, None]
        keys = (rows * P + lab)[valid]
        counts = np.bincount(keys, minlength=m * P)
        T[lo:lo + m] = (counts * (counts - 1) // 2).reshape(m, P).sum(axis=1)
        if len(cap_pts):
            cap_lab = space.pencil_labels_many(vs, cap_pts)
            srt = np.sort(cap_lab, axis=1)
            if len(cap_pts) > 1 and (np.diff(srt, axis=1) == 0).any():
                bad = int(vs[np.flatnonzero((np.diff(srt, axis=1) == 0).any(axis=1))[0]])
                raise NibbleError(f"point {bad} of omega lies on a secant of the cap")
            hit = np.zeros(m * P, dtype=bool)
            hit[(rows * P + cap_lab).ravel()] = True
            A[lo:lo + m] = np.bincount(np.broadcast_to(rows, lab.shape)[valid],
                                       weights=hit[keys], minlength=m).astype(np.int64)
    return A, T


def _require_omega(state: NibbleState, v: int) -> None:
    if not state.omega[v]:
        raise NibbleError(f"point {v} is not in omega")


def count_A_v(state: NibbleState, v: int) -> int:
    """|A(v)| by walking the lines (v, a), a in the cap."""
    _require_omega(state, v)
    if not state.cap.points:
        return 0
    lines = state.space.lines_through_base(v, np.array(state.cap.points, dtype=np.int64))
    total, seen = 0, set()
    for line in lines:
        key = tuple(line.tolist())
        if key in seen:
            raise NibbleError(f"point {v} of omega lies on a secant of the cap")
        seen.add(key)
        total += int(state.s[line].sum()) - int(state.s[v])
    return total


def count_T_v(state: NibbleState, v: int) -> int:
    """|T(v)| as the sum over lines through v of C(|S(l) - {v}|, 2)."""
    _require_omega(state, v)
    total = 0
    for line in state.space.lines_through(v):
        m = int(state.s[line].sum()) - int(state.s[v])
        total += m * (m - 1) // 2
    return total


def sweep_counts(state: NibbleState) -> tuple[np.ndarray, np.ndarray]:
    """|A(v)| and |T(v)| for all points at once, by one pass over every line.

    Per incidence (l, v): ``m = |S(l) - {v}|`` adds C(m, 2) to T(v), and adds
    m to A(v) when l carries a cap point.  Only entries for points of omega
    carry the defined meaning.
    """
    space = state.space
    P = space.num_points
    s = state.s.astype(np.int64)
    members = state.cap.members
    A = np.zeros(P, dtype=np.float64)
    T = np.zeros(P, dtype=np.float64)
    for L in state.lines():
        sl = s[L]
        m = sl.sum(axis=1)[:, None] - sl
        flat = L.ravel()
        T += np.bincount(flat, weights=(m * (m - 1) // 2).ravel(), minlength=P)
        with_cap = members[L].any(axis=1)
        if with_cap.any():
            A += np.bincount(L[with_cap].ravel(), weights=m[with_cap].ravel(), minlength=P)
    return A.astype(np.int64), T.astype(np.int64)


@dataclass
class StepStats:
    p: float
    p_clamped: bool
    extrema: Extrema
    s_points: np.ndarray
    s_A: np.ndarray
    s_T: np.ndarray
    s_est: np.ndarray | None = None  # line estimate on s; None means use the closed form


def step_stats(state: NibbleState) -> StepStats:
    """p, the extremes of A(v) and T(v) over omega, and per-point counts on s.

    Exact (one line sweep) when |omega| <= sample_cap.  Otherwise the
    extremes come from pencil scans of a uniform sample of omega, and points
    of s outside the sample are given the sample means, and the line
    estimator, which needs exact counts everywhere, gives way to the closed
    form.
    """
    prm = state.params
    p, p_clamped = choose_probability(state)
    om = state.omega_points()
    s_pts = state.s_points()
    sampled = len(om) > prm.sample_cap
    s_est = None
    if not sampled:
        A_all, T_all = sweep_counts(state)
        A, T = A_all[om], T_all[om]
        s_A, s_T = A_all[s_pts], T_all[s_pts]
        if prm.estimator == "line":
            s_est = line_deletion_estimate(state, p, A_all, T_all)[s_pts]
    else:
        k = min(prm.sample_size, len(om))
        query = np.sort(state.rng["sample"].choice(om, size=k, replace=False))
        A, T = point_counts(state, query)
        pos = np.minimum(np.searchsorted(query, s_pts), len(query) - 1)
        found = query[pos] == s_pts
        s_A = np.where(found, A[pos], A.mean())
        s_T = np.where(found, T[pos], T.mean())
    if len(A):
        ext = Extrema(int(A.max()), int(A.min()), int(T.max()), int(T.min()),
                      float(A.mean()), float(T.mean()), sampled, len(A))
    else:
        ext = Extrema(0, 0, 0, 0, 0.0, 0.0, sampled, 0)
    return StepStats(p, p_clamped, ext, s_pts, s_A, s_T, s_est)


def point_deletion_probability(stats: StepStats, v: int, p_upper: float | None = None) -> float:
    """The estimate of Pr(v in D) that compensate uses for a point v of s."""
    pos = int(np.searchsorted(stats.s_points, v))
    if pos >= len(stats.s_points) or stats.s_points[pos] != v:
        raise NibbleError(f"point {v} is not in s")
    if p_upper is None:
        p_upper = upper_P(stats.p, stats.extrema).value
    if stats.s_est is not None:
        return float(np.clip(stats.s_est[pos], 0.0, p_upper))
    return float(deletion_estimate(stats.p, stats.s_A[pos], stats.s_T[pos], p_upper))


# -- the sub-steps -------------------------------------------------------------

def choose(state: NibbleState, p: float, rng: np.random.Generator) -> np.ndarray:
    """The nibble B: each point of s kept independently with probability p."""
    s_pts = state.s_points()
    if not len(s_pts):
        return s_pts
    return s_pts[rng.random(len(s_pts)) < p]


def good_filter(state: NibbleState, B: np.ndarray) -> np.ndarray:
    """Points of B with no two points of (A | B) - {x} on one line through them."""
    B = np.asarray(B, dtype=np.int64)
    if not len(B):
        return B
    union = np.concatenate([np.array(state.cap.points, dtype=np.int64), B])
    if len(union) < 3:
        return B
    lab = state.space.pencil_labels_many(B, union)
    self_hit = union[None, :] == B[:, None]
    lab = np.where(self_hit, -1 - np.arange(len(union))[None, :], lab)
    srt = np.sort(lab, axis=1)
    conflict = (np.diff(srt, axis=1) == 0).any(axis=1)
    return B[~conflict]


def delete(state: NibbleState, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """D = omega & (covered by the grown cap | B), and the next omega.

    Expects the good points to have been added to ``state.cap`` already.
    """
    hit = state.cap.covered.copy()
    hit[B] = True
    d_mask = state.omega & hit
    return np.flatnonzero(d_mask), state.omega & ~d_mask


def compensate(state: NibbleState, D: np.ndarray, stats: StepStats, p_upper: float,
               rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """R, the extra removals from s - D, and the next s."""
    s_pts = stats.s_points
    keep = ~np.isin(s_pts, D)
    survivors = s_pts[keep]
    s_next = state.s.copy()
    s_next[D] = False
    if not len(survivors):
        return survivors, s_next
    if stats.s_est is not None:
        est = np.clip(stats.s_est[keep], 0.0, p_upper)
    else:
        est = deletion_estimate(stats.p, stats.s_A[keep], stats.s_T[keep], p_upper)
    prob = (p_upper - est) / (1.0 - est)
    R = survivors[rng.random(len(survivors)) < prob]
    s_next[R] = False
    return R, s_next


def _log_thresholds(state: NibbleState) -> tuple[float, float]:
    """ln of (ln q)^c1 / q and of (ln q)^c / q^((N+1)/2)."""
    q, N, prm = state.space.q, state.space.n_dim, state.params
    llq, lq = math.log(math.log(q)), math.log(q)
    return prm.c1 * llq - lq, prm.c * llq - (N + 1) / 2 * lq


def phase_of(state: NibbleState) -> str:
    t1, t2 = _log_thresholds(state)
    lb = math.log(state.b)
    if lb >= t1:
        return "phase1"
    if lb >= t2:
        return "phase2"
    return "post"


class StopDecision(NamedTuple):
    stop: bool
    reason: str | None


def should_stop(state: NibbleState) -> StopDecision:
    rule = state.params.stop_rule
    if rule in ("paper", "both") and math.log(state.b) <= _log_thresholds(state)[1]:
        return StopDecision(True, "paper-threshold")
    if not state.s.any():
        return StopDecision(True, "s-empty")
    if rule in ("practical", "both"):
        if int(state.s.sum()) <= state.params.stop_s_min:
            return StopDecision(True, "s-floor")
        if state.stalls >= state.params.stall_limit:
            return StopDecision(True, "stall")
    return StopDecision(False, None)


def step(state: NibbleState, with_diagnostics: bool = True, timing: bool = False) -> StepTrace:
    """Run one choose / filter / delete / compensate cycle in place.

    ``wall_time`` stays None unless ``timing`` is set, so traces of equal
    runs are equal byte for byte.
    """
    from .diagnostics import main_lemma_diagnostics

    t0 = time.perf_counter()
    phase = phase_of(state)
    if not state.s.any():
        state.step += 1
        state.stalls += 1
        n_s, n_o = 0, int(state.omega.sum())
        tr = StepTrace(state.step - 1, 0, 0, 0, 0, n_s, n_o, 0.0, False, 0.0, False, 0.0, False,
                       False, state.a, state.b, state.b_prime, phase, True,
                       time.perf_counter() - t0 if timing else None)
        state.trace.append(tr)
        return tr

    stats = step_stats(state)
    p_u, pu_clamped = upper_P(stats.p, stats.extrema)
    p_l, pl_clamped = lower_P(stats.p, stats.extrema, p_u)
    B = choose(state, stats.p, state.rng["choose"])
    M = good_filter(state, B)
    if with_diagnostics:
        state.diagnostics.append(main_lemma_diagnostics(state, stats, B=B, M=M))
    for x in M:
        state.cap.add_point(int(x))
    D, omega_next = delete(state, B)
    R, s_next = compensate(state, D, stats, p_u, state.rng["compensate"])

    state.omega, state.s = omega_next, s_next
    state.b *= 1.0 - p_u
    state.b_prime *= 1.0 - p_l
    state.stalls = state.stalls + 1 if len(M) == 0 else 0
    state.step += 1
    tr = StepTrace(
        step=state.step - 1, size_B=len(B), size_M=len(M), size_D=len(D), size_R=len(R),
        size_S_next=int(s_next.sum()), size_Omega_next=int(omega_next.sum()),
        p=stats.p, p_clamped=stats.p_clamped, P_upper=p_u, P_upper_clamped=pu_clamped,
        P_lower=p_l, P_lower_clamped=pl_clamped, extrema_sampled=stats.extrema.sampled,
        a_next=state.a, b_next=state.b, b_prime_next=state.b_prime, phase=phase,
        stalled=len(M) == 0, wall_time=time.perf_counter() - t0 if timing else None,
    )
    state.trace.append(tr)
    return tr


@dataclass
class RunResult:
    space: ProjectiveSpace
    params: NibbleParams
    theta: float
    cap: Cap
    nibble_size: int
    steps: int
    stop_reason: str
    trace: list[StepTrace]
    diagnostics: list[dict]


def run(space: ProjectiveSpace, params: NibbleParams | None = None,
        with_diagnostics: bool = True, timing: bool = False) -> RunResult:
    """Nibble until a stop rule fires, then complete greedily on what is still uncovered."""
    params = params or NibbleParams()
    state = initial_state(space, params)
    while True:
        decision = should_stop(state)
        if decision.stop:
            break
        step(state, with_diagnostics=with_diagnostics, timing=timing)
    nibble_size = len(state.cap)
    rng = state.rng["greedy"] if params.completion == "random" else None
    greedy_complete(state.cap, rng)
    return RunResult(space, params, state.theta, state.cap, nibble_size, state.step,
                     decision.reason, state.trace, state.diagnostics)
