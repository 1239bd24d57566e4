"""Caps with incrementally maintained secant coverage."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .geometry import ProjectiveSpace


class CapError(ValueError):
    pass


class DuplicatePointError(CapError):
    def __init__(self, point: int):
        super().__init__(f"point {point} is already in the cap")
        self.point = point


class CollinearError(CapError):
    def __init__(self, triple: tuple[int, int, int]):
        super().__init__(f"points {triple[0]}, {triple[1]}, {triple[2]} are collinear")
        self.triple = triple


class Cap:
    """An ordered set of points, no three collinear, plus its coverage bitmap.

    ``covered[x]`` is true iff x is a cap point or lies on a line through two
    cap points.  The cap is complete exactly when every bit is set.
    """

    def __init__(self, space: ProjectiveSpace, points: Iterable[int] = (), checked: bool = True):
        self.space = space
        self.points: list[int] = []
        self.members = np.zeros(space.num_points, dtype=bool)
        self.covered = np.zeros(space.num_points, dtype=bool)
        for v in points:
            self.add_point(v, checked=checked)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, v) -> bool:
        return bool(self.members[v])

    def __repr__(self) -> str:
        return f"Cap({self.space!r}, size={len(self)})"

    def copy(self) -> Cap:
        other = Cap.__new__(Cap)
        other.space = self.space
        other.points = list(self.points)
        other.members = self.members.copy()
        other.covered = self.covered.copy()
        return other

    def add_point(self, v: int, checked: bool = True) -> None:
        """Append v and mark the q+1 points of each new secant (v, a).

        In checked mode a point already covered raises CollinearError with a
        witness triple, since lying on a secant is exactly what would break
        the cap property.
        """
        v = self.space._check(v)
        if self.members[v]:
            raise DuplicatePointError(v)
        if checked and self.covered[v]:
            a, b = self.secant_through(v)
            raise CollinearError((a, b, v))
        if self.points:
            lines = self.space.lines_through_base(v, np.array(self.points, dtype=np.int64))
            self.covered[lines.ravel()] = True
        self.points.append(v)
        self.members[v] = True
        self.covered[v] = True

    def secant_through(self, v: int) -> tuple[int, int]:
        """Two cap points collinear with the non-cap point v."""
        pts = np.array(self.points, dtype=np.int64)
        labels = self.space.pencil_labels(v, pts)
        order = np.argsort(labels, kind="stable")
        hit = np.flatnonzero(np.diff(labels[order]) == 0)
        if not len(hit):
            raise CapError(f"point {v} is not on a secant of the cap")
        i, j = order[hit[0]], order[hit[0] + 1]
        return tuple(sorted((int(pts[i]), int(pts[j]))))

    def uncovered(self) -> np.ndarray:
        return np.flatnonzero(~self.covered)

    @property
    def num_covered(self) -> int:
        return int(self.covered.sum())


class Check(NamedTuple):
    ok: bool
    witness: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.ok


def coverage_from_scratch(space: ProjectiveSpace, points: Iterable[int]) -> np.ndarray:
    """Union of all secants plus the points themselves, recomputed pair by pair."""
    pts = list(points)
    cov = np.zeros(space.num_points, dtype=bool)
    cov[pts] = True
    for i, a in enumerate(pts):
        for b in pts[i + 1:]:
            cov[space.line_points(a, b)] = True
    return cov


def is_cap(space: ProjectiveSpace, points: Iterable[int]) -> Check:
    """True iff no three of ``points`` are collinear; otherwise a witness triple."""
    pts = list(points)
    if len(set(pts)) != len(pts):
        raise DuplicatePointError(next(p for p in pts if pts.count(p) > 1))
    cap = Cap(space)
    for v in pts:
        try:
            cap.add_point(v)
        except CollinearError as e:
            return Check(False, e.triple)
    return Check(True)


def is_complete(cap: Cap) -> Check:
    """True iff every point is covered; otherwise the lowest uncovered point."""
    missing = cap.uncovered()
    if len(missing):
        return Check(False, (int(missing[0]),))
    return Check(True)


def greedy_complete(cap: Cap, rng: np.random.Generator | None = None) -> Cap:
    """Add uncovered points until the cap is complete; mutates and returns ``cap``.

    With ``rng=None`` the lowest-index uncovered point is taken each time,
    otherwise one drawn uniformly via ``rng.integers``.
    """
    while True:
        missing = cap.uncovered()
        if not len(missing):
            return cap
        v = missing[0] if rng is None else missing[int(rng.integers(len(missing)))]
        cap.add_point(int(v))


@dataclass(frozen=True)
class TrivialBound:
    real: float
    integer: int


def trivial_lower_bound(space: ProjectiveSpace) -> TrivialBound:
    """sqrt(2) q^((N-1)/2), and the least n with n + C(n,2)(q-1) >= #points.

    Each of the C(n,2) secants of an n-cap covers at most q-1 points outside it.
    """
    q, N = space.q, space.n_dim
    n = 0
    while n + n * (n - 1) * (q - 1) // 2 < space.num_points:
        n += 1
    return TrivialBound(math.sqrt(2) * q ** ((N - 1) / 2), n)
