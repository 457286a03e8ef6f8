"""Charge-sector counting polynomials and their certified real roots.

Each sector Q carries an integer polynomial whose coefficients count the
configurations of total nN + Q; its roots drive every form factor.  The
roots are computed numerically but certified exactly: big-integer sign
evaluation at rational probe points proves there are deg-many simple
real negative roots, so realness is never assumed.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .combi import lambda_block
from .cyclo import CycNum, CycPoly
from .errors import DomainError, NonRealRootError, RootClusterTooTightError


@dataclass(frozen=True)
class DrinfeldPoly:
    """Integer counts polynomial of one charge sector: coefficient n is
    the number of site configurations with total nN + Q."""

    N: int
    L: int
    Q: int
    lam: tuple[int, ...]

    @property
    def m(self) -> int:
        """Polynomial degree."""
        return len(self.lam) - 1

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "L": self.L,
            "Q": self.Q,
            "m": self.m,
            "coefficients": [str(c) for c in self.lam],
        }


def lambda_counts(N: int, L: int, Q: int) -> DrinfeldPoly:
    """Counting polynomial of sector Q, with its structural facts asserted:
    the degree matches floor(((N-1)L - Q)/N), the top coefficient is
    nonzero, and the coefficients total N^(L-1)."""
    if N < 2 or L < 1 or not 0 <= Q < N:
        raise ValueError("need N >= 2, L >= 1, 0 <= Q < N")
    lam = lambda_block(N, L, Q)
    poly = DrinfeldPoly(N=N, L=L, Q=Q, lam=lam)
    assert poly.m == ((N - 1) * L - Q) // N
    assert lam[-1] != 0
    assert sum(lam) == N ** (L - 1)
    return poly


def drinfeld_projection(N: int, L: int, Q: int) -> tuple[int, ...]:
    """Expand  t^(-Q) sum_n omega^(-nQ) [(1 - t^N)/(1 - t omega^n)]^L
    exactly, check that only powers t^(mN) survive after the shift, and
    return the coefficient list in w = t^N.  The result must be exactly
    N times the counting polynomial, which is asserted."""
    order = 2 * N
    one = CycNum.integer(1, order)
    total = CycPoly(order, ())
    for n in range(N):
        # (1 - t^N)/(1 - t omega^n) = prod_{i != n} (1 - t omega^i), exactly
        base = CycPoly.one(order)
        for i in range(N):
            if i != n:
                base = base * CycPoly(order, (one, -CycNum.omega_pow(i, order)))
        total = total + (base**L) * CycNum.omega_pow(-n * Q, order)
    for k, c in enumerate(total.coeffs):
        if not c.is_zero() and (k - Q) % N != 0:
            raise AssertionError("projection kept power %d outside class %d" % (k, Q))
    if any(not total.coeff(k).is_zero() for k in range(Q)):
        raise AssertionError("projection not divisible by t^Q")
    out = tuple(
        total.coeff(Q + j * N).as_int() for j in range((total.degree - Q) // N + 1)
    )
    counts = lambda_counts(N, L, Q)
    assert len(out) == len(counts.lam)
    assert all(c == N * v for c, v in zip(out, counts.lam))
    return out


# ---------------------------------------------------------------------------
# root solving with exact certification


def _horner_sign(coeffs: tuple[int, ...], point: Fraction) -> int:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * point + c
    return (acc > 0) - (acc < 0)


def _mid_fraction(a: mpmath.mpf, b: mpmath.mpf, dps: int) -> Fraction:
    with mpmath.workdps(dps + 5):
        mid = (a + b) / 2
        return Fraction(mpmath.nstr(mid, dps, strip_zeros=False))


@functools.lru_cache(maxsize=None)
def solve_roots(poly: DrinfeldPoly, precision: int = 192) -> tuple[mpmath.mpf, ...]:
    """All m roots of the counts polynomial, ascending, at `precision`
    bits.  The roots are certified real, simple and negative by exact
    sign evaluation at rational probes separating the approximations;
    each root is then Newton-polished and its relative residual checked
    against 2^(-precision/2)."""
    if precision < 128:
        raise ValueError("precision below 128 bits is not supported")
    m = poly.m
    if m == 0:
        return ()
    coeffs = poly.lam
    dps = int(precision * 0.302) + 10

    with mpmath.workprec(2 * precision + 60):
        try:
            approx = mpmath.polyroots(
                [mpmath.mpf(c) for c in reversed(coeffs)], maxsteps=120, extraprec=precision
            )
        except mpmath.libmp.NoConvergence:
            approx = mpmath.polyroots(
                [mpmath.mpf(c) for c in reversed(coeffs)],
                maxsteps=600,
                extraprec=2 * precision,
            )
        scale = max(abs(r) for r in approx)
        for r in approx:
            if abs(mpmath.im(r)) > scale * mpmath.mpf(2) ** (-precision // 2):
                raise NonRealRootError(
                    "root %s of sector (N=%d, L=%d, Q=%d) has a large imaginary part"
                    % (mpmath.nstr(r, 10), poly.N, poly.L, poly.Q)
                )
        reals = sorted(mpmath.re(r) for r in approx)

    # exact certification: probes strictly between consecutive roots, plus a
    # Cauchy lower bound on the left and 0 on the right; the sign of the
    # polynomial at probe i must be (-1)^(m-i)
    bound = -(1 + Fraction(max(abs(c) for c in coeffs), coeffs[-1]))
    probes = [bound]
    for i in range(m - 1):
        probes.append(_mid_fraction(reals[i], reals[i + 1], dps))
    probes.append(Fraction(0))
    for i, p in enumerate(probes):
        want = -1 if (m - i) % 2 else 1
        if _horner_sign(coeffs, p) != want:
            raise RootClusterTooTightError(
                "could not separate roots of sector (N=%d, L=%d, Q=%d) near probe %d; "
                "raise the precision" % (poly.N, poly.L, poly.Q, i)
            )

    deriv = tuple(n * c for n, c in enumerate(coeffs) if n > 0)
    polished = []
    with mpmath.workprec(precision + 40):
        for r in reals:
            x = mpmath.mpf(r)
            for _ in range(80):
                fx = mpmath.polyval([mpmath.mpf(c) for c in reversed(coeffs)], x)
                dfx = mpmath.polyval([mpmath.mpf(c) for c in reversed(deriv)], x)
                step = fx / dfx
                x = x - step
                if abs(step) < abs(x) * mpmath.mpf(2) ** (-(precision + 20)):
                    break
            residual = abs(
                mpmath.polyval([mpmath.mpf(c) for c in reversed(coeffs)], x)
            ) / sum(abs(c) * abs(x) ** n for n, c in enumerate(coeffs))
            if residual > mpmath.mpf(2) ** (-precision // 2):
                raise RootClusterTooTightError(
                    "residual %s too large for sector (N=%d, L=%d, Q=%d)"
                    % (mpmath.nstr(residual, 5), poly.N, poly.L, poly.Q)
                )
            if x >= 0:
                raise NonRealRootError("root %s is not negative" % mpmath.nstr(x, 10))
            polished.append(x)
    return tuple(polished)


# ---------------------------------------------------------------------------
# root transforms


@dataclass(frozen=True)
class RootData:
    """Transformed root records of one sector at one k'.

    z holds the polynomial's own roots (ascending); these are the
    variables every formula downstream consumes.  w = 1/z is kept as
    comparison data for the reciprocal-sector pairing.  Per root:
    c = -(1+z)/(1-z) in (-1,1), lam = sqrt(1 + k'^2 + 2k'(1+z)/(1-z))
    in (1-k', 1+k'), and exp(2 theta) = (lam+1-k')/(lam-1+k')."""

    N: int
    L: int
    Q: int
    kp: str
    precision: int
    z: tuple[mpmath.mpf, ...]
    w: tuple[mpmath.mpf, ...]
    c: tuple[mpmath.mpf, ...]
    lam: tuple[mpmath.mpf, ...]
    theta: tuple[mpmath.mpf, ...]
    consistency_residual: mpmath.mpf

    @property
    def m(self) -> int:
        return len(self.z)

    def to_json(self) -> dict:
        dps = int(self.precision * 0.301)
        return {
            "N": self.N,
            "L": self.L,
            "Q": self.Q,
            "kp": self.kp,
            "precision_bits": self.precision,
            "z": [mpmath.nstr(v, dps) for v in self.z],
            "w": [mpmath.nstr(v, dps) for v in self.w],
            "c": [mpmath.nstr(v, dps) for v in self.c],
            "lambda": [mpmath.nstr(v, dps) for v in self.lam],
            "theta": [mpmath.nstr(v, dps) for v in self.theta],
            "consistency_residual": mpmath.nstr(self.consistency_residual, 5),
        }


def root_transforms(
    poly: DrinfeldPoly, kp, precision: int = 192
) -> RootData:
    """Solve the sector polynomial and map every root z to its derived
    quantities, verifying the hyperbolic-parametrization consistency
    relation  exp(2t) + exp(-2t) = k' + 1/k' - (1-k')^2 z/k'  per root."""
    roots = solve_roots(poly, precision)
    kp_str = str(kp)
    with mpmath.workprec(2 * precision):
        kpv = mpmath.mpf(kp_str)
        if not 0 < kpv < 1:
            raise DomainError("k' must lie in (0,1), got %s" % kp_str)
        zs, ws, cs, lams, thetas = [], [], [], [], []
        worst = mpmath.mpf(0)
        for z in roots:
            ratio = (1 + z) / (1 - z)
            arg = 1 + kpv**2 + 2 * kpv * ratio
            if arg <= 0:
                raise DomainError(
                    "lambda^2 = %s is not positive at z = %s"
                    % (mpmath.nstr(arg, 8), mpmath.nstr(z, 8))
                )
            lam = mpmath.sqrt(arg)
            if not (1 - kpv) < lam < (1 + kpv):
                raise DomainError(
                    "lambda = %s outside (1-k', 1+k') at z = %s"
                    % (mpmath.nstr(lam, 8), mpmath.nstr(z, 8))
                )
            c = -ratio
            if not -1 < c < 1:
                raise DomainError("c = %s outside (-1,1)" % mpmath.nstr(c, 8))
            e2t = (lam + 1 - kpv) / (lam - 1 + kpv)
            theta = mpmath.log(e2t) / 2
            check = e2t + 1 / e2t - (kpv + 1 / kpv - (1 - kpv) ** 2 * z / kpv)
            worst = max(worst, abs(check))
            zs.append(z)
            ws.append(1 / z)
            cs.append(c)
            lams.append(lam)
            thetas.append(theta)
        digits = int(precision * 0.301)
        if worst > mpmath.mpf(10) ** (-(digits - 8)):
            raise DomainError(
                "consistency residual %s too large" % mpmath.nstr(worst, 5)
            )
    return RootData(
        N=poly.N,
        L=poly.L,
        Q=poly.Q,
        kp=kp_str,
        precision=precision,
        z=tuple(zs),
        w=tuple(ws),
        c=tuple(cs),
        lam=tuple(lams),
        theta=tuple(thetas),
        consistency_residual=worst,
    )


def sector_roots(N: int, L: int, Q: int, precision: int = 192) -> tuple[mpmath.mpf, ...]:
    """Convenience: certified roots of sector Q at the given precision."""
    return solve_roots(lambda_counts(N, L, Q), precision)
