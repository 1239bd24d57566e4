"""Exact minimum size of a complete cap, for spaces small enough to search."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .cap import trivial_lower_bound
from .geometry import ProjectiveSpace

DEFAULT_ORACLE_LIMIT = 45


class OracleTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    size: int
    witness: tuple[int, ...]
    nodes: int


def _check_limit(space: ProjectiveSpace, limit: int) -> None:
    if space.num_points > limit:
        raise OracleTooLarge(
            f"PG({space.n_dim},{space.q}) has {space.num_points} points; oracle limit is {limit}"
        )


def _secant_masks(space: ProjectiveSpace) -> list[list[int]]:
    P = space.num_points
    masks = [[0] * P for _ in range(P)]
    for a in range(P):
        others = np.arange(a + 1, P, dtype=np.int64)
        if not len(others):
            continue
        for b, line in zip(others, space.lines_through_base(a, others)):
            m = 0
            for x in line:
                m |= 1 << int(x)
            masks[a][b] = masks[b][a] = m
    return masks


def exhaustive_min_complete_cap(space: ProjectiveSpace, limit: int = DEFAULT_ORACLE_LIMIT) -> OracleResult:
    """Iterative deepening over caps listed with increasing point indices.

    For each target size, starting at the counting bound, a depth-first
    search extends caps only by uncovered points of larger index.  A branch
    is cut when the uncovered points outnumber what the remaining additions
    could ever cover: t new points of an n-cap add t(n) + C(t,2) secants with
    at most q-1 fresh points each, plus the t points themselves.
    """
    _check_limit(space, limit)
    P, q = space.num_points, space.q
    full = (1 << P) - 1
    masks = _secant_masks(space)
    nodes = 0

    def search(cap: list[int], covered: int, nxt: int, target: int) -> list[int] | None:
        nonlocal nodes
        nodes += 1
        n = len(cap)
        if n == target:
            return cap if covered == full else None
        t = target - n
        missing = P - covered.bit_count()
        if missing > t + (q - 1) * (t * n + t * (t - 1) // 2):
            return None
        for v in range(nxt, P):
            if covered >> v & 1:
                continue
            new = covered | (1 << v)
            for a in cap:
                new |= masks[v][a]
            found = search(cap + [v], new, v + 1, target)
            if found:
                return found
        return None

    for target in range(max(1, trivial_lower_bound(space).integer), P + 1):
        found = search([], 0, 0, target)
        if found:
            return OracleResult(target, tuple(found), nodes)
    raise AssertionError("the whole space minus nothing must contain a complete cap")


def subset_min_complete_cap(space: ProjectiveSpace, limit: int = DEFAULT_ORACLE_LIMIT,
                            max_points: int = 16) -> OracleResult:
    """Independent check: every subset by increasing size, tested by rank alone.

    Collinearity comes from exact Gaussian elimination on coordinates; no
    coverage bitmaps and no pruning, so this is only usable for spaces of a
    dozen or so points.
    """
    _check_limit(space, limit)
    P = space.num_points
    if P > max_points:
        raise OracleTooLarge(f"subset enumeration is limited to {max_points} points")
    col = np.zeros((P, P, P), dtype=bool)
    for a, b, c in itertools.combinations(range(P), 3):
        if space.collinear(a, b, c):
            for x, y, z in itertools.permutations((a, b, c)):
                col[x, y, z] = True
    nodes = 0
    for size in range(1, P + 1):
        for subset in itertools.combinations(range(P), size):
            nodes += 1
            if any(col[a, b, c] for a, b, c in itertools.combinations(subset, 3)):
                continue
            rest = set(range(P)) - set(subset)
            if all(any(col[a, b, x] for a, b in itertools.combinations(subset, 2)) for x in rest):
                return OracleResult(size, subset, nodes)
    raise AssertionError("unreachable")
