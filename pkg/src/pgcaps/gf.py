"""Finite fields F_q, q = p^k, with elements encoded as integers.

An element is the integer ``sum(c_j * p**j)`` where ``c_j`` is the coefficient
of ``x**j`` in its polynomial representative, so 0 is zero and 1 is one.
Extension fields are built modulo the lexicographically smallest monic
irreducible polynomial (coefficients compared from the constant term up).
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_MAX_ORDER = 2**20
# full q*q add/mul tables below this order; log/antilog arithmetic above
TABLE_LIMIT = 1024


class FieldError(ValueError):
    """Invalid field parameters or an element outside the field."""


class NoInverseError(ZeroDivisionError):
    """Raised on an attempt to invert zero."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_power(q: int) -> tuple[int, int]:
    """Return ``(p, k)`` with ``q == p**k``, or raise FieldError."""
    if q < 2:
        raise FieldError(f"{q} is not a prime power")
    p = next(d for d in range(2, q + 1) if q % d == 0)
    k, rest = 0, q
    while rest % p == 0:
        rest //= p
        k += 1
    if rest != 1:
        raise FieldError(f"{q} is not a prime power")
    return p, k


def _factor(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# -- polynomials over F_p as coefficient lists, low degree first ------------

def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_rem(a: Sequence[int], m: Sequence[int], p: int) -> list[int]:
    """Remainder of ``a`` modulo the monic polynomial ``m``."""
    r = _trim(list(a))
    dm = len(m) - 1
    while len(r) - 1 >= dm:
        c = r[-1]
        shift = len(r) - 1 - dm
        for j, mj in enumerate(m):
            r[shift + j] = (r[shift + j] - c * mj) % p
        _trim(r)
    return r


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Trial division of a monic ``poly`` by every monic polynomial of degree <= deg/2."""
    k = len(poly) - 1
    if k < 1 or poly[-1] != 1:
        raise FieldError("irreducibility test expects a monic polynomial of degree >= 1")
    if k > 1 and poly[0] == 0:
        return False
    for d in range(1, k // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            if not _poly_rem(poly, (*low, 1), p):
                return False
    return True


def smallest_irreducible(p: int, k: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible polynomial of degree ``k`` over F_p.

    Tuples ``(c_0, ..., c_{k-1})`` are scanned in lexicographic order, constant
    term first, which is what ``itertools.product`` yields.
    """
    for low in itertools.product(range(p), repeat=k):
        poly = (*low, 1)
        if is_irreducible(poly, p):
            return poly
    raise AssertionError(f"no irreducible polynomial of degree {k} over F_{p}")


# -- the field ---------------------------------------------------------------

@dataclass(frozen=True)
class FieldSpec:
    """Arithmetic model of F_q.

    Immutable once built; the lookup arrays are read-only.  Scalar methods
    check their arguments, the ``*_arr`` methods work elementwise on integer
    numpy arrays and trust their input.
    """

    p: int
    k: int
    q: int
    modulus: tuple[int, ...]
    primitive: int = field(repr=False, compare=False)
    exp: np.ndarray = field(repr=False, compare=False)
    log: np.ndarray = field(repr=False, compare=False)
    neg_table: np.ndarray = field(repr=False, compare=False)
    inv_table: np.ndarray = field(repr=False, compare=False)
    add_table: np.ndarray | None = field(default=None, repr=False, compare=False)
    mul_table: np.ndarray | None = field(default=None, repr=False, compare=False)

    # scalar interface

    def _check(self, a: int) -> int:
        if not 0 <= a < self.q:
            raise FieldError(f"element {a} out of range for F_{self.q}")
        return int(a)

    def elements(self) -> range:
        return range(self.q)

    def add(self, a: int, b: int) -> int:
        return int(self.add_arr(self._check(a), self._check(b)))

    def neg(self, a: int) -> int:
        return int(self.neg_table[self._check(a)])

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        return int(self.mul_arr(self._check(a), self._check(b)))

    def inv(self, a: int) -> int:
        if self._check(a) == 0:
            raise NoInverseError(f"zero has no inverse in F_{self.q}")
        return int(self.inv_table[a])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        self._check(a)
        if a == 0:
            if e < 0:
                raise NoInverseError(f"zero has no inverse in F_{self.q}")
            return 1 if e == 0 else 0
        return int(self.exp[(int(self.log[a]) * e) % (self.q - 1)])

    def digits(self, a: int) -> tuple[int, ...]:
        """Polynomial coefficients of ``a``, constant term first."""
        self._check(a)
        return tuple((a // self.p**j) % self.p for j in range(self.k))

    def from_digits(self, coeffs: Iterable[int]) -> int:
        return sum((c % self.p) * self.p**j for j, c in enumerate(coeffs))

    # vectorized interface

    def add_arr(self, a, b):
        if self.add_table is not None:
            return self.add_table[a, b]
        if self.p == 2:
            return np.bitwise_xor(a, b)
        if self.k == 1:
            return (np.asarray(a) + b) % self.p
        a, b = np.asarray(a), np.asarray(b)
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        pw = 1
        for _ in range(self.k):
            out += ((a // pw + b // pw) % self.p) * pw
            pw *= self.p
        return out

    def mul_arr(self, a, b):
        if self.mul_table is not None:
            return self.mul_table[a, b]
        a, b = np.asarray(a), np.asarray(b)
        prod = self.exp[(self.log[a] + self.log[b]) % (self.q - 1)]
        return np.where((a == 0) | (b == 0), 0, prod)

    def neg_arr(self, a):
        return self.neg_table[a]

    def inv_arr(self, a):
        """Elementwise inverse; zero maps to zero."""
        return self.inv_table[a]


def _poly_mulmod(a: Sequence[int], b: Sequence[int], mod: Sequence[int], p: int) -> list[int]:
    prod = [0] * (len(a) + len(b))
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    return _poly_rem(prod, mod, p)


def _element_digits(a: int, p: int, k: int) -> list[int]:
    return [(a // p**j) % p for j in range(k)]


def _element_from(coeffs: Sequence[int], p: int) -> int:
    return sum(c * p**j for j, c in enumerate(coeffs))


def _scalar_mul(a: int, b: int, p: int, k: int, mod: Sequence[int]) -> int:
    if k == 1:
        return a * b % p
    return _element_from(_poly_mulmod(_element_digits(a, p, k), _element_digits(b, p, k), mod, p), p)


def _scalar_pow(a: int, e: int, p: int, k: int, mod: Sequence[int]) -> int:
    result = 1
    while e:
        if e & 1:
            result = _scalar_mul(result, a, p, k, mod)
        a = _scalar_mul(a, a, p, k, mod)
        e >>= 1
    return result


def _exp_table(g: int, p: int, k: int, q: int, mod: Sequence[int]) -> np.ndarray:
    """Powers g^0 .. g^(q-2), built by vectorized doubling.

    Multiplication by a fixed element is F_p-linear on coefficient vectors,
    so each doubling round is one matrix product.
    """
    n = q - 1
    powers_p = np.array([p**j for j in range(k)], dtype=np.int64)
    exp = np.empty(n, dtype=np.int64)
    exp[0] = 1
    filled, g_pow = 1, g  # g_pow = g**filled
    while filled < n:
        images = np.array(
            [_element_digits(_scalar_mul(g_pow, p**j, p, k, mod), p, k) for j in range(k)],
            dtype=np.int64,
        )
        take = min(filled, n - filled)
        block = exp[:take]
        digits = (block[:, None] // powers_p[None, :]) % p
        exp[filled : filled + take] = ((digits @ images) % p) @ powers_p
        filled += take
        g_pow = _scalar_mul(g_pow, g_pow, p, k, mod)
    return exp


@functools.lru_cache(maxsize=None)
def build_field(p: int, k: int = 1, max_order: int = DEFAULT_MAX_ORDER) -> FieldSpec:
    """Build F_{p^k}; repeated calls return the same (cached) object."""
    if not isinstance(p, int) or not is_prime(p):
        raise FieldError(f"characteristic {p} is not prime")
    if not isinstance(k, int) or k < 1:
        raise FieldError(f"extension degree must be >= 1, got {k}")
    q = p**k
    if q > max_order:
        raise FieldError(f"field order {q} exceeds the configured maximum {max_order}")
    modulus = (0, 1) if k == 1 else smallest_irreducible(p, k)

    # smallest generator of the multiplicative group
    n = q - 1
    factors = _factor(n)
    g = next(
        c for c in range(1, q)
        if all(_scalar_pow(c, n // r, p, k, modulus) != 1 for r in factors)
    )
    exp = _exp_table(g, p, k, q, modulus)
    log = np.zeros(q, dtype=np.int64)
    log[exp] = np.arange(n, dtype=np.int64)
    inv = np.zeros(q, dtype=np.int64)
    inv[exp] = exp[(-np.arange(n)) % n]

    elems = np.arange(q, dtype=np.int64)
    if p == 2:
        neg = elems.copy()
    else:
        neg = np.zeros(q, dtype=np.int64)
        for j in range(k):
            pw = p**j
            neg += ((p - (elems // pw) % p) % p) * pw

    spec = FieldSpec(p=p, k=k, q=q, modulus=modulus, primitive=g,
                     exp=exp, log=log, neg_table=neg, inv_table=inv)
    if q <= TABLE_LIMIT:
        a, b = np.meshgrid(elems, elems, indexing="ij")
        add_t = np.ascontiguousarray(spec.add_arr(a, b), dtype=np.int64)
        mul_t = np.ascontiguousarray(spec.mul_arr(a, b), dtype=np.int64)
        object.__setattr__(spec, "add_table", add_t)
        object.__setattr__(spec, "mul_table", mul_t)
    for arr in (spec.exp, spec.log, spec.neg_table, spec.inv_table, spec.add_table, spec.mul_table):
        if arr is not None:
            arr.setflags(write=False)
    return spec


def field_of_order(q: int, max_order: int = DEFAULT_MAX_ORDER) -> FieldSpec:
    p, k = prime_power(q)
    return build_field(p, k, max_order)


# -- exact linear algebra ------------------------------------------------------

def row_reduce(F: FieldSpec, rows: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form over F; returns (nonzero rows, pivot columns)."""
    m = [[int(x) for x in r] for r in rows]
    pivots: list[int] = []
    if not m:
        return m, pivots
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][c]), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        s = F.inv(m[r][c])
        m[r] = [F.mul(s, x) for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = F.neg(m[i][c])
                m[i] = [F.add(x, F.mul(f, y)) for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(F: FieldSpec, rows: Sequence[Sequence[int]]) -> int:
    return len(row_reduce(F, rows)[1])


def nullspace(F: FieldSpec, rows: Sequence[Sequence[int]], ncols: int) -> list[list[int]]:
    """Basis of ``{x : rows @ x = 0}`` over F."""
    red, pivots = row_reduce(F, rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        x = [0] * ncols
        x[f] = 1
        for row, pc in zip(red, pivots):
            x[pc] = F.neg(row[f])
        basis.append(x)
    return basis
