"""Points and lines of PG(N, q).

Points are integers.  The canonical representative of a point has its first
nonzero coordinate equal to 1, and points are numbered by the lexicographic
order of those representatives: ``(0,...,0,1)`` is point 0 and
``(1,q-1,...,q-1)`` is the last one.

Lines are never given global ids.  A line is a sorted array of q+1 point
indices, and the lines through a point ``v`` are addressed by a *pencil
label*: the point where the line meets the coordinate hyperplane
``x_j = 0``, ``j`` being the position of the leading 1 of ``v``.
"""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from .gf import FieldSpec, NoInverseError, rank

# cap on num_points for a space that materializes its coordinate table
DEFAULT_MAX_POINTS = 1 << 24


class GeometryError(ValueError):
    pass


def num_points(n_dim: int, q: int) -> int:
    """(q^(N+1) - 1) / (q - 1), exactly."""
    if n_dim < 1 or q < 2:
        raise GeometryError(f"need N >= 1 and q >= 2, got N={n_dim}, q={q}")
    return sum(q**j for j in range(n_dim + 1))


class ProjectiveSpace:
    """PG(N, q) with a materialized table of canonical coordinates."""

    def __init__(self, n_dim: int, field: FieldSpec, max_points: int = DEFAULT_MAX_POINTS):
        if n_dim < 2:
            raise GeometryError(f"dimension must be >= 2, got {n_dim}")
        self.n_dim = n_dim
        self.field = field
        q = field.q
        self.q = q
        self.num_points = num_points(n_dim, q)
        if self.num_points > max_points:
            raise GeometryError(
                f"PG({n_dim},{q}) has {self.num_points} points, above the limit {max_points}"
            )
        self.num_points_per_line = q + 1
        self.lines_per_point = num_points(n_dim - 1, q)
        width = n_dim + 1
        # offset[j]: index of the first point whose leading 1 sits at position j
        self._offset = np.array([sum(q**s for s in range(width - 1 - j)) for j in range(width)],
                                dtype=np.int64)
        self._lead_weight = np.array([q ** (width - 1 - j) for j in range(width)], dtype=np.int64)
        self._place = self._lead_weight  # base-q place values, most significant first
        self.coords = self._build_coords()
        self.coords.setflags(write=False)
        self._lead = np.argmax(self.coords != 0, axis=1)

    def __repr__(self) -> str:
        return f"ProjectiveSpace(N={self.n_dim}, q={self.q})"

    def _build_coords(self) -> np.ndarray:
        q, width = self.q, self.n_dim + 1
        blocks = []
        for j in range(width - 1, -1, -1):
            tail_len = width - 1 - j
            n = q**tail_len
            block = np.zeros((n, width), dtype=np.int64)
            block[:, j] = 1
            idx = np.arange(n, dtype=np.int64)
            for t in range(tail_len):
                block[:, width - 1 - t] = (idx // q**t) % q
            blocks.append(block)
        return np.concatenate(blocks)

    # -- indexing --------------------------------------------------------

    def canonical_index(self, vecs: np.ndarray) -> np.ndarray:
        """Point indices of the rows of ``vecs`` (shape (..., N+1), no zero rows)."""
        vecs = np.asarray(vecs, dtype=np.int64)
        nz = vecs != 0
        lead = np.argmax(nz, axis=-1)
        lead_val = np.take_along_axis(vecs, lead[..., None], axis=-1)
        normed = self.field.mul_arr(vecs, self.field.inv_arr(lead_val))
        value = normed @ self._place
        return value - self._lead_weight[lead] + self._offset[lead]

    def point_from_coords(self, v: Sequence[int]) -> int:
        if len(v) != self.n_dim + 1:
            raise GeometryError(f"expected {self.n_dim + 1} coordinates, got {len(v)}")
        for x in v:
            self.field._check(x)
        if not any(v):
            raise GeometryError("the zero vector is not a projective point")
        return int(self.canonical_index(np.array(v, dtype=np.int64)))

    def coords_from_point(self, i: int) -> tuple[int, ...]:
        self._check(i)
        return tuple(int(x) for x in self.coords[i])

    def _check(self, i: int) -> int:
        if not 0 <= i < self.num_points:
            raise GeometryError(f"point {i} out of range for PG({self.n_dim},{self.q})")
        return int(i)

    # -- incidence -------------------------------------------------------

    def collinear(self, a: int, b: int, c: int) -> bool:
        """Rank test on the 3 x (N+1) coordinate matrix, by exact elimination."""
        for x in (a, b, c):
            self._check(x)
        if len({a, b, c}) < 3:
            raise GeometryError(f"degenerate triple {(a, b, c)}")
        return rank(self.field, [self.coords[a], self.coords[b], self.coords[c]]) <= 2

    def line_points(self, a: int, b: int) -> np.ndarray:
        """The q+1 points of the line (ab), sorted."""
        self._check(a)
        self._check(b)
        if a == b:
            raise GeometryError("a line needs two distinct points")
        return self.lines_through_base(b, np.array([a]))[0]

    def lines_through_base(self, base: int, others: np.ndarray) -> np.ndarray:
        """Sorted point arrays of the lines (x, base) for each x in ``others``.

        Every ``x`` must differ from ``base``; the result has shape
        ``(len(others), q+1)``.
        """
        F = self.field
        others = np.asarray(others, dtype=np.int64)
        lam = np.arange(F.q, dtype=np.int64)
        bvec = self.coords[base]
        scaled = F.mul_arr(lam[:, None], bvec[None, :])                # (q, N+1)
        vecs = F.add_arr(self.coords[others][:, None, :], scaled[None, :, :])
        pts = self.canonical_index(vecs)                               # (m, q)
        full = np.concatenate([pts, np.full((len(others), 1), base, dtype=np.int64)], axis=1)
        full.sort(axis=1)
        return full

    def pencil_labels(self, v: int, points: np.ndarray) -> np.ndarray:
        """Label of the line (v, x) for each x in ``points`` (all distinct from v).

        Two points get the same label iff they lie on a common line with v.
        """
        return self.pencil_labels_many(np.array([v]), points)[0]

    def pencil_labels_many(self, vs: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Labels of (v, x) for every v in ``vs`` and x in ``points``; shape (len(vs), len(points)).

        Entries where x == v are meaningless and must be masked by the caller.
        The label is the index of x - x_j v, j the leading position of v.
        """
        F = self.field
        vs = np.asarray(vs, dtype=np.int64)
        points = np.asarray(points, dtype=np.int64)
        lead = self._lead[vs]                                           # (m,)
        xc = self.coords[points]                                        # (n, N+1)
        xj = xc[:, lead].T                                              # (m, n)
        shift = F.mul_arr(F.neg_arr(xj)[:, :, None], self.coords[vs][:, None, :])
        diff = F.add_arr(xc[None, :, :], shift)
        same = ~diff.any(axis=-1)
        diff[same] = self.coords[0]  # x == v; placeholder keeps canonical_index total
        return self.canonical_index(diff)

    def iter_lines(self, max_rows: int = 1 << 16) -> Iterator[np.ndarray]:
        """Every line exactly once, in chunks of shape (m, q+1), rows unsorted.

        A line is spanned by its reduced echelon basis: r1 with leading 1 at
        i, r2 with leading 1 at j > i and r1[j] = 0.  Its points are r2 and
        r1 + t r2, all already in canonical form.  Nothing is cached, so
        memory stays at one chunk.
        """
        F, q, width = self.field, self.q, self.n_dim + 1
        lam = np.arange(q, dtype=np.int64)
        for i in range(width):
            for j in range(i + 1, width):
                free1 = [t for t in range(i + 1, width) if t != j]
                free2 = list(range(j + 1, width))
                free = len(free1) + len(free2)
                total = q**free
                for lo in range(0, total, max_rows):
                    idx = np.arange(lo, min(lo + max_rows, total), dtype=np.int64)
                    digits = (idx[:, None] // q ** np.arange(free, dtype=np.int64)[None, :]) % q
                    m = len(idx)
                    r1 = np.zeros((m, width), dtype=np.int64)
                    r2 = np.zeros((m, width), dtype=np.int64)
                    r1[:, i] = 1
                    r2[:, j] = 1
                    if free1:
                        r1[:, free1] = digits[:, :len(free1)]
                    if free2:
                        r2[:, free2] = digits[:, len(free1):]
                    vecs = F.add_arr(r1[:, None, :], F.mul_arr(lam[None, :, None], r2[:, None, :]))
                    pts = vecs @ self._place - self._lead_weight[i] + self._offset[i]
                    r2_idx = r2 @ self._place - self._lead_weight[j] + self._offset[j]
                    yield np.concatenate([pts, r2_idx[:, None]], axis=1)

    def lines_through(self, v: int) -> Iterator[np.ndarray]:
        """Each line through v exactly once, as a sorted point array."""
        self._check(v)
        others = np.delete(np.arange(self.num_points, dtype=np.int64), v)
        labels = self.pencil_labels(v, others)
        order = np.argsort(labels, kind="stable")
        groups = np.split(others[order], np.flatnonzero(np.diff(labels[order])) + 1)
        for g in groups:
            yield np.sort(np.append(g, v))


def space(n_dim: int, p: int, k: int = 1, **kwargs) -> ProjectiveSpace:
    from .gf import build_field
    return ProjectiveSpace(n_dim, build_field(p, k), **kwargs)


__all__ = ["GeometryError", "NoInverseError", "ProjectiveSpace", "num_points", "space"]
