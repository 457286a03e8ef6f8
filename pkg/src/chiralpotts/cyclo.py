"""Exact arithmetic in the ring of cyclotomic integers Z[zeta].

Here zeta is a primitive 2N-th root of unity and omega = zeta^2 is the
primitive N-th root the clock model is built on.  Working with the 2N-th
root (instead of the N-th) keeps half-integer powers omega^(n^2/2) = zeta^(n^2)
exactly representable, which the alternating-sum identities need.

A CycNum is an integer vector over the power basis {zeta^0, ..., zeta^(2N-1)},
kept in the canonical form obtained by reducing modulo the cyclotomic
polynomial Phi_2N.  All coefficients are Python ints, so nothing overflows.
A CycPoly is a dense polynomial in one formal variable with CycNum
coefficients (the generating functions in t and u live here).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction

import mpmath


# ---------------------------------------------------------------------------
# integer polynomial helpers (dense lists, constant term first)


def _poly_divmod(num: list[int], den: list[int]) -> tuple[list[int], list[int]]:
    """Exact division of integer polynomials; the divisor must be monic
    (or at least divide every leading coefficient it meets, which holds in
    the cyclotomic construction)."""
    num = list(num)
    quo = [0] * max(1, len(num) - len(den) + 1)
    while len(num) >= len(den) and any(num):
        while num and num[-1] == 0:
            num.pop()
        if len(num) < len(den):
            break
        c, r = divmod(num[-1], den[-1])
        if r != 0:
            raise ArithmeticError("non-exact polynomial division")
        shift = len(num) - len(den)
        quo[shift] = c
        for i, d in enumerate(den):
            num[shift + i] -= c * d
    while num and num[-1] == 0:
        num.pop()
    return quo, num


@functools.lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Coefficients of the n-th cyclotomic polynomial Phi_n, constant first.

    Built by the divisor construction: (x^n - 1) / prod_{d|n, d<n} Phi_d.

    >>> cyclotomic_poly(4)
    (1, 0, 1)
    >>> cyclotomic_poly(6)
    (1, -1, 1)
    """
    if n < 1:
        raise ValueError("cyclotomic_poly needs n >= 1")
    poly = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            poly, rem = _poly_divmod(poly, list(cyclotomic_poly(d)))
            assert not rem
    return tuple(poly)


@functools.lru_cache(maxsize=None)
def _reduction_rows(order: int) -> tuple[tuple[int, ...], ...]:
    """Canonical vectors (length `order`) for zeta^k mod Phi_order,
    one row per k in [0, order)."""
    phi = cyclotomic_poly(order)
    d = len(phi) - 1
    rows: list[tuple[int, ...]] = []
    for k in range(d):
        row = [0] * order
        row[k] = 1
        rows.append(tuple(row))
    for k in range(d, order):
        prev = rows[k - 1]
        shifted = [0] + list(prev[: order - 1])
        lead = shifted[d] if d < order else 0
        if lead:
            # x^d = -(phi[0] + ... + phi[d-1] x^(d-1))
            shifted[d] = 0
            for i in range(d):
                shifted[i] -= lead * phi[i]
        rows.append(tuple(shifted))
    return tuple(rows)


def _canonical(order: int, vec: list[int]) -> tuple[int, ...]:
    """Reduce a coefficient vector (indices taken mod `order` already)
    to the canonical representative modulo Phi_order, padded to length order."""
    rows = _reduction_rows(order)
    deg_phi = len(cyclotomic_poly(order)) - 1
    out = list(vec[:deg_phi]) + [0] * (order - deg_phi)
    for k in range(deg_phi, order):
        c = vec[k]
        if c:
            row = rows[k]
            for i in range(deg_phi):
                if row[i]:
                    out[i] += c * row[i]
    return tuple(out)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CycNum:
    """A cyclotomic integer in Z[zeta], zeta = exp(i pi / N), order = 2N.

    coeffs always holds the canonical (Phi_2N-reduced) form, padded with
    zeros to length `order`, so equality and hashing are structural.
    """

    order: int
    coeffs: tuple[int, ...]

    def __init__(self, order: int, coeffs) -> None:
        if order < 2:
            raise ValueError("order must be at least 2")
        vec = [0] * order
        for k, c in enumerate(coeffs):
            if c:
                vec[k % order] += c
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", _canonical(order, vec))

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(order: int) -> CycNum:
        return CycNum(order, ())

    @staticmethod
    def integer(value: int, order: int) -> CycNum:
        return CycNum(order, (value,))

    @staticmethod
    def zeta_pow(e: int, order: int) -> CycNum:
        """zeta^e (e may be negative; exponent taken mod order)."""
        vec = [0] * order
        vec[e % order] = 1
        return CycNum(order, vec)

    @staticmethod
    def omega_pow(e: int, order: int) -> CycNum:
        """omega^e = zeta^(2e)."""
        return CycNum.zeta_pow(2 * e, order)

    # -- ring operations ---------------------------------------------------

    def _check(self, other: CycNum) -> None:
        if self.order != other.order:
            raise ValueError("mixed cyclotomic orders %d and %d" % (self.order, other.order))

    def __add__(self, other):
        if isinstance(other, int):
            other = CycNum.integer(other, self.order)
        if not isinstance(other, CycNum):
            return NotImplemented
        self._check(other)
        return CycNum(self.order, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, int):
            other = CycNum.integer(other, self.order)
        if not isinstance(other, CycNum):
            return NotImplemented
        self._check(other)
        return CycNum(self.order, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self) -> CycNum:
        return CycNum(self.order, tuple(-a for a in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, int):
            return CycNum(self.order, tuple(a * other for a in self.coeffs))
        if not isinstance(other, CycNum):
            return NotImplemented
        self._check(other)
        n = self.order
        out = [0] * n
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    if b:
                        k = i + j
                        out[k - n if k >= n else k] += a * b
        return CycNum(n, out)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> CycNum:
        if e < 0:
            raise ValueError("negative powers are not defined in the integer ring")
        result = CycNum.integer(1, self.order)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    # -- predicates / conversions ------------------------------------------

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational_int(self) -> bool:
        return not any(self.coeffs[1:])

    def as_int(self) -> int:
        """The rational integer this element equals; raises if it has a
        nonvanishing cyclotomic part."""
        if not self.is_rational_int():
            raise ValueError("CycNum %r is not a rational integer" % (self.coeffs,))
        return self.coeffs[0]

    def conjugate(self) -> CycNum:
        """Complex conjugation, zeta -> zeta^(-1)."""
        n = self.order
        vec = [0] * n
        for k, c in enumerate(self.coeffs):
            if c:
                vec[(-k) % n] += c
        return CycNum(n, vec)

    def embed(self, precision: int = 53) -> mpmath.mpc:
        """Numeric value with zeta = exp(i pi / N), N = order / 2,
        at `precision` bits."""
        with mpmath.workprec(precision + 10):
            n = self.order
            total = mpmath.mpc(0)
            for k, c in enumerate(self.coeffs):
                if c:
                    total += c * mpmath.expjpi(mpmath.mpf(2 * k) / n)
            return +total

    def __repr__(self) -> str:
        if self.is_rational_int():
            return "CycNum<%d>(%d)" % (self.order, self.coeffs[0])
        terms = " + ".join(
            "%d*z^%d" % (c, k) for k, c in enumerate(self.coeffs) if c
        )
        return "CycNum<%d>(%s)" % (self.order, terms)


def embed_complex(x: CycNum, precision: int = 53) -> mpmath.mpc:
    """Evaluate a CycNum at zeta = exp(i pi / N) in binary precision bits."""
    if precision < 53:
        raise ValueError("precision below 53 bits is not supported")
    return x.embed(precision)


# ---------------------------------------------------------------------------
# Gaussian binomials at omega


_PASCAL: dict[int, list[list[CycNum]]] = {}


def gauss_binom(a: int, b: int, N: int) -> CycNum:
    """The Gaussian binomial [a choose b] at omega = exp(2 pi i / N).

    Built by the q-Pascal recursion
        [a, b] = [a-1, b-1] + omega^b [a-1, b],
    so no division ever happens.  Returns 0 outside 0 <= b <= a.

    >>> gauss_binom(5, 0, 3).as_int()
    1
    >>> gauss_binom(4, 2, 2).as_int()
    2
    """
    if N < 2:
        raise ValueError("need N >= 2")
    if a < 0:
        raise ValueError("need a >= 0")
    order = 2 * N
    if b < 0 or b > a:
        return CycNum.zero(order)
    rows = _PASCAL.setdefault(N, [[CycNum.integer(1, order)]])
    while len(rows) <= a:
        prev = rows[-1]
        arow = len(rows)
        row = [CycNum.integer(1, order)]
        for k in range(1, arow):
            row.append(prev[k - 1] + CycNum.omega_pow(k, order) * prev[k])
        row.append(CycNum.integer(1, order))
        rows.append(row)
    return rows[a][b]


# ---------------------------------------------------------------------------
# polynomials over the cyclotomic ring


def _trim(coeffs: tuple[CycNum, ...]) -> tuple[CycNum, ...]:
    end = len(coeffs)
    while end > 0 and coeffs[end - 1].is_zero():
        end -= 1
    return coeffs[:end]


@dataclass(frozen=True)
class CycPoly:
    """Dense polynomial in one formal variable over Z[zeta]."""

    order: int
    coeffs: tuple[CycNum, ...]

    def __init__(self, order: int, coeffs=()) -> None:
        tup = tuple(coeffs)
        for c in tup:
            if c.order != order:
                raise ValueError("coefficient order mismatch")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", _trim(tup))

    @staticmethod
    def constant(value: CycNum) -> CycPoly:
        return CycPoly(value.order, (value,))

    @staticmethod
    def one(order: int) -> CycPoly:
        return CycPoly(order, (CycNum.integer(1, order),))

    @property
    def degree(self) -> int:
        """Degree of the polynomial; the zero polynomial has degree -1."""
        return len(self.coeffs) - 1

    def coeff(self, k: int) -> CycNum:
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return CycNum.zero(self.order)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: CycPoly) -> CycPoly:
        n = max(len(self.coeffs), len(other.coeffs))
        zero = CycNum.zero(self.order)
        return CycPoly(
            self.order,
            tuple(self.coeff(i) + other.coeff(i) for i in range(n)) or (zero,),
        )

    def __sub__(self, other: CycPoly) -> CycPoly:
        n = max(len(self.coeffs), len(other.coeffs))
        return CycPoly(
            self.order, tuple(self.coeff(i) - other.coeff(i) for i in range(n))
        )

    def __neg__(self) -> CycPoly:
        return CycPoly(self.order, tuple(-c for c in self.coeffs))

    def mul(self, other: CycPoly, max_degree: int | None = None) -> CycPoly:
        """Product, optionally truncated to max_degree (inclusive)."""
        if self.is_zero() or other.is_zero():
            return CycPoly(self.order, ())
        top = self.degree + other.degree
        if max_degree is not None:
            top = min(top, max_degree)
        out = [CycNum.zero(self.order) for _ in range(top + 1)]
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            jmax = top - i
            for j, b in enumerate(other.coeffs[: jmax + 1]):
                if not b.is_zero():
                    out[i + j] = out[i + j] + a * b
        return CycPoly(self.order, out)

    def __mul__(self, other):
        if isinstance(other, CycNum):
            return CycPoly(self.order, tuple(c * other for c in self.coeffs))
        if isinstance(other, int):
            return CycPoly(self.order, tuple(c * other for c in self.coeffs))
        if isinstance(other, CycPoly):
            return self.mul(other)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, e: int) -> CycPoly:
        if e < 0:
            raise ValueError("negative polynomial powers are not defined")
        result = CycPoly.one(self.order)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def truncate(self, max_degree: int) -> CycPoly:
        return CycPoly(self.order, self.coeffs[: max_degree + 1])

    def shift(self, k: int) -> CycPoly:
        """Multiply by t^k."""
        if self.is_zero():
            return self
        zero = CycNum.zero(self.order)
        return CycPoly(self.order, (zero,) * k + self.coeffs)

    def evaluate(self, x: CycNum) -> CycNum:
        acc = CycNum.zero(self.order)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __repr__(self) -> str:
        return "CycPoly(deg=%d over order %d)" % (self.degree, self.order)


def pochhammer(shift: Fraction | int, count: int, N: int) -> CycPoly:
    """The q-Pochhammer polynomial prod_{i=0}^{count-1} (1 - omega^(shift+i) t)
    with q = omega; `shift` may be a half-integer (omega^(1/2) = zeta).

    >>> pochhammer(Fraction(1, 2), 2, 2).coeffs[2].as_int()
    1
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    twice = Fraction(shift) * 2
    if twice.denominator != 1:
        raise ValueError("shift must be an integer or half-integer")
    twice = int(twice)
    order = 2 * N
    one = CycNum.integer(1, order)
    poly = CycPoly(order, (one,))
    for i in range(count):
        factor = CycPoly(order, (one, -CycNum.zeta_pow(twice + 2 * i, order)))
        poly = poly * factor
    return poly
