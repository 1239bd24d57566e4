"""Linear codes from caps: parity-check export, distance and covering radius.

The points of a cap in PG(m-1, q), written as columns, form the parity-check
matrix of a q-ary code of length n and codimension m.  No three columns are
dependent exactly when the points form a cap, and every syndrome is a sum of
at most two columns exactly when the cap is complete.  Everything here is
brute force and meant for desk-sized instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .cap import Cap
from .gf import FieldSpec, nullspace, rank

DEFAULT_SUBSET_LIMIT = 4
MAX_CODEWORDS = 1 << 24
MAX_SYNDROMES = 1 << 24
_CHUNK_CELLS = 1 << 22


class CodeError(ValueError):
    pass


class IntractableError(CodeError):
    pass


class EmptyCodeError(CodeError):
    """The kernel of H is zero, so there is no minimum distance."""


class UnreachableSyndromeError(CodeError):
    """The columns do not span F_q^m, so the covering radius is infinite."""


@dataclass(frozen=True, eq=False)
class ParityCheckMatrix:
    field: FieldSpec
    entries: np.ndarray  # (m, n) field elements

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.int64)
        if e.ndim != 2:
            raise CodeError(f"parity-check matrix must be 2-dimensional, got shape {e.shape}")
        if e.size and (e.min() < 0 or e.max() >= self.field.q):
            raise CodeError(f"entries must be field elements 0..{self.field.q - 1}")
        e = e.copy()
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def short(self) -> bool:
        """n <= m: the nominal dimension n - m is not positive."""
        return self.n <= self.m

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.entries[:, j])

    def rank(self) -> int:
        return rank(self.field, self.entries.T.tolist())

    def dimension(self) -> int:
        return self.n - self.rank()

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParityCheckMatrix):
            return NotImplemented
        return self.q == other.q and np.array_equal(self.entries, other.entries)


def cap_to_parity_check(cap: Cap) -> ParityCheckMatrix:
    """Columns are the canonical coordinates of the cap points, in insertion order."""
    if not len(cap):
        raise CodeError("cannot export an empty cap")
    space = cap.space
    cols = space.coords[np.array(cap.points, dtype=np.int64)]
    return ParityCheckMatrix(space.field, cols.T)


def columns_as_points(H: ParityCheckMatrix):
    """The projective points of the columns, as (space, point list); inverse of the export."""
    from .geometry import ProjectiveSpace

    if H.m < 3:
        raise CodeError("need at least 3 rows to read columns as points of PG(m-1, q)")
    space = ProjectiveSpace(H.m - 1, H.field)
    if (~H.entries.any(axis=0)).any():
        raise CodeError("zero column is not a projective point")
    return space, [int(x) for x in space.canonical_index(H.entries.T)]


# -- minimum distance --------------------------------------------------------

def dependent_subset(H: ParityCheckMatrix, limit: int = DEFAULT_SUBSET_LIMIT) -> tuple[int, ...] | None:
    """The first smallest set of at most ``limit`` linearly dependent columns, if any."""
    cols = H.entries.T.tolist()
    for w in range(1, limit + 1):
        for sub in itertools.combinations(range(H.n), w):
            if rank(H.field, [cols[j] for j in sub]) < w:
                return sub
    return None


def _generator(H: ParityCheckMatrix) -> np.ndarray:
    return np.array(nullspace(H.field, H.entries.tolist(), H.n), dtype=np.int64).reshape(-1, H.n)


def _codeword_weights(H: ParityCheckMatrix, max_codewords: int = MAX_CODEWORDS):
    """Yield the weights of all nonzero codewords, chunk by chunk."""
    F = H.field
    G = _generator(H)
    k = len(G)
    total = F.q**k
    if total > max_codewords:
        raise IntractableError(f"{total} codewords exceed the limit {max_codewords}")
    rows = max(1, _CHUNK_CELLS // max(1, k * H.n))
    place = F.q ** np.arange(k, dtype=np.int64)
    for lo in range(1, total, rows):
        idx = np.arange(lo, min(lo + rows, total), dtype=np.int64)
        coef = (idx[:, None] // place[None, :]) % F.q
        word = np.zeros((len(idx), H.n), dtype=np.int64)
        for i in range(k):
            word = F.add_arr(word, F.mul_arr(coef[:, i:i + 1], G[i][None, :]))
        yield (word != 0).sum(axis=1)


def min_distance_by_codewords(H: ParityCheckMatrix, max_codewords: int = MAX_CODEWORDS) -> int:
    """Minimum weight over every nonzero codeword of the kernel of H."""
    best = None
    for weights in _codeword_weights(H, max_codewords):
        w = int(weights.min())
        best = w if best is None else min(best, w)
    if best is None:
        raise EmptyCodeError("the code has no nonzero codeword")
    return best


def min_distance(H: ParityCheckMatrix, limit: int = DEFAULT_SUBSET_LIMIT,
                 max_codewords: int = MAX_CODEWORDS) -> int:
    """Smallest number of linearly dependent columns.

    Column subsets of size up to ``limit`` are tested by rank first; past
    that the code is enumerated in full.
    """
    sub = dependent_subset(H, limit)
    if sub is not None:
        return len(sub)
    return min_distance_by_codewords(H, max_codewords)


# -- covering radius ------------------------------------------------------------

@dataclass(frozen=True)
class CoveringResult:
    R: int
    layer_sizes: tuple[int, ...]  # syndromes first reached at weight 0, 1, ...
    farthest: tuple[int, ...]  # lowest-indexed syndrome at weight R


def _syndrome_vectors(idx: np.ndarray, q: int, m: int) -> np.ndarray:
    return (idx[:, None] // q ** np.arange(m, dtype=np.int64)[None, :]) % q


def syndrome_layers(H: ParityCheckMatrix, max_syndromes: int = MAX_SYNDROMES) -> CoveringResult:
    """Breadth-first search over F_q^m, one layer per added column multiple.

    A syndrome vector ``s`` is stored at index ``sum s_j q^j``.
    """
    F, q, m = H.field, H.q, H.m
    total = q**m
    if total > max_syndromes:
        raise IntractableError(f"{total} syndromes exceed the limit {max_syndromes}")
    place = q ** np.arange(m, dtype=np.int64)
    scal = np.arange(1, q, dtype=np.int64)
    steps = F.mul_arr(scal[:, None, None], H.entries.T[None, :, :]).reshape(-1, m)
    steps = np.unique(steps[steps.any(axis=1)], axis=0)

    dist = np.full(total, -1, dtype=np.int32)
    dist[0] = 0
    frontier = np.array([0], dtype=np.int64)
    layers = [1]
    reached = 1
    rows = max(1, _CHUNK_CELLS // max(1, len(steps) * m))
    while len(frontier) and reached < total:
        w = len(layers)
        new_parts = []
        for lo in range(0, len(frontier), rows):
            vec = _syndrome_vectors(frontier[lo:lo + rows], q, m)
            nxt = F.add_arr(vec[:, None, :], steps[None, :, :]) @ place
            nxt = np.unique(nxt)
            nxt = nxt[dist[nxt] < 0]
            dist[nxt] = w
            new_parts.append(nxt)
        frontier = np.concatenate(new_parts) if new_parts else np.zeros(0, dtype=np.int64)
        if len(frontier):
            layers.append(len(frontier))
            reached += len(frontier)
    if reached < total:
        raise UnreachableSyndromeError(
            f"{total - reached} of {total} syndromes are not sums of columns")
    R = len(layers) - 1
    far = int(np.flatnonzero(dist == R)[0])
    return CoveringResult(R, tuple(layers), tuple(int(x) for x in _syndrome_vectors(np.array([far]), q, m)[0]))


def covering_radius(H: ParityCheckMatrix, max_syndromes: int = MAX_SYNDROMES) -> int:
    return syndrome_layers(H, max_syndromes).R


def covering_density_exact(n: int, k: int, q: int, R: int) -> Fraction:
    if n < 0 or R < 0 or q < 2:
        raise CodeError(f"inconsistent parameters n={n}, k={k}, q={q}, R={R}")
    ball = sum((q - 1) ** i * math.comb(n, i) for i in range(R + 1))
    return Fraction(ball, q ** (n - k)) if n >= k else Fraction(ball * q ** (k - n))


def covering_density(n: int, k: int, q: int, R: int) -> float:
    """q^(k-n) times the volume of a Hamming ball of radius R."""
    return float(covering_density_exact(n, k, q, R))


# -- quasi-perfect check -----------------------------------------------------------

@dataclass
class CodeReport:
    n: int
    k: int
    d: int | None
    t: int | None
    R: int | None
    quasi_perfect: bool
    mu: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def verify_quasi_perfect(H: ParityCheckMatrix, limit: int = DEFAULT_SUBSET_LIMIT,
                         max_codewords: int = MAX_CODEWORDS,
                         max_syndromes: int = MAX_SYNDROMES) -> CodeReport:
    """d, t = floor((d-1)/2), R and mu; quasi-perfect iff R = t + 1.

    ``k`` is the true dimension n - rank(H).  A code with no nonzero codeword
    reports ``d = t = None``, and columns that miss part of F_q^m report
    ``R = mu = None``; neither is quasi-perfect.
    """
    k = H.dimension()
    try:
        d = min_distance(H, limit, max_codewords)
    except EmptyCodeError:
        d = None
    t = (d - 1) // 2 if d is not None else None
    try:
        R = covering_radius(H, max_syndromes)
    except UnreachableSyndromeError:
        R = None
    mu = covering_density(H.n, k, H.q, R) if R is not None else None
    qp = d is not None and R is not None and R == t + 1
    return CodeReport(H.n, k, d, t, R, qp, mu)


def hamming_parity_check(field: FieldSpec, r: int) -> ParityCheckMatrix:
    """Columns are one representative of every point of PG(r-1, q), lexicographic."""
    cols = [c for c in itertools.product(range(field.q), repeat=r)
            if any(c) and c[next(i for i, x in enumerate(c) if x)] == 1]
    return ParityCheckMatrix(field, np.array(cols, dtype=np.int64).T)
