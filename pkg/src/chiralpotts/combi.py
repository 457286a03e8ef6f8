"""Exact combinatorics of edge configurations on a ring of L sites.

An edge configuration assigns n_j in [0, N-1] to each site.  Its weight
generating function g(t) collects Gaussian-binomial weights with phases
driven by the left partial sums of the configuration; the dual function
gbar(t) uses right partial sums.  Summing the coefficient products of
gbar and g over all configurations with total N builds an integer matrix
(the overlap table) whose entries factor into products of level
degeneracies.  The three check routines at the bottom verify that
factorization and the polynomial exchange identities behind it, exactly.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .cyclo import CycNum, CycPoly, gauss_binom, pochhammer
from .errors import SizeGuardError

ENUM_GUARD = 10**7


# ---------------------------------------------------------------------------
# configuration enumeration


def compositions(total: int, length: int, max_part: int) -> Iterator[tuple[int, ...]]:
    """All tuples of `length` entries in [0, max_part] summing to `total`,
    in lexicographic order."""
    if total < 0:
        return
    if length == 0:
        if total == 0:
            yield ()
        return
    lo = max(0, total - max_part * (length - 1))
    hi = min(max_part, total)
    for first in range(lo, hi + 1):
        for rest in compositions(total - first, length - 1, max_part):
            yield (first,) + rest


@functools.lru_cache(maxsize=None)
def count_compositions(total: int, length: int, max_part: int) -> int:
    if total < 0:
        return 0
    if length == 0:
        return 1 if total == 0 else 0
    return sum(
        count_compositions(total - first, length - 1, max_part)
        for first in range(min(max_part, total) + 1)
    )


@functools.lru_cache(maxsize=None)
def level_counts(N: int, L: int) -> tuple[int, ...]:
    """Number of configurations in [0, N-1]^L with total s, for every s
    from 0 to (N-1)L; the coefficient list of ((1 - x^N)/(1 - x))^L."""
    counts = [1]
    for _ in range(L):
        new = [0] * (len(counts) + N - 1)
        for s, c in enumerate(counts):
            for k in range(N):
                new[s + k] += c
        counts = new
    return tuple(counts)


def lambda_block(N: int, L: int, Q: int) -> tuple[int, ...]:
    """Degeneracies (Lambda^Q_0, ..., Lambda^Q_m) of the charge-Q levels:
    Lambda^Q_n counts configurations with total nN + Q.  The block length
    is m_Q + 1 with m_Q = floor(((N-1)L - Q) / N)."""
    if not 0 <= Q < N:
        raise ValueError("Q must lie in [0, N)")
    all_counts = level_counts(N, L)
    return tuple(all_counts[s] for s in range(Q, (N - 1) * L + 1, N))


# ---------------------------------------------------------------------------
# edge configurations and their generating functions


@dataclass(frozen=True)
class EdgeConfig:
    """A site occupation tuple n with 0 <= n_j <= N-1, plus its cached
    left partial sums (everything strictly before j) and right partial
    sums (everything strictly after j)."""

    N: int
    L: int
    n: tuple[int, ...]
    left_sums: tuple[int, ...]
    right_sums: tuple[int, ...]

    def __init__(self, N: int, L: int, n) -> None:
        n = tuple(n)
        if len(n) != L:
            raise ValueError("configuration length differs from L")
        if any(not 0 <= v < N for v in n):
            raise ValueError("entries must lie in [0, N-1]")
        total = 0
        left = []
        for v in n:
            left.append(total)
            total += v
        right = tuple(total - left[j] - n[j] for j in range(L))
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "left_sums", tuple(left))
        object.__setattr__(self, "right_sums", right)

    @property
    def total(self) -> int:
        return sum(self.n)

    @property
    def max_degree(self) -> int:
        """Degree of the weight generating function."""
        return (self.N - 1) * self.L - self.total


def _site_factor(N: int, n_j: int, phase: int) -> CycPoly:
    """sum_{n'=0}^{N-1-n_j} [n_j + n' choose n'] (omega^phase t)^n'."""
    order = 2 * N
    coeffs = []
    for np_ in range(N - n_j):
        coeffs.append(gauss_binom(n_j + np_, np_, N) * CycNum.omega_pow(np_ * phase, order))
    return CycPoly(order, coeffs)


def _gen_poly(config: EdgeConfig, sums: tuple[int, ...]) -> CycPoly:
    poly = CycPoly.one(2 * config.N)
    for n_j, phase in zip(config.n, sums):
        poly = poly * _site_factor(config.N, n_j, phase)
    return poly


def k_coeffs(
    config: EdgeConfig, max_degree: int | None = None
) -> tuple[list[CycNum], list[CycNum]]:
    """Coefficient lists (K, Kbar) of the weight generating function and
    its dual, up to max_degree inclusive (default: the full degree)."""
    top = config.max_degree
    if max_degree is None:
        max_degree = top
    if not 0 <= max_degree <= top:
        raise ValueError("max_degree must lie in [0, %d]" % top)
    g = _gen_poly(config, config.left_sums)
    gbar = _gen_poly(config, config.right_sums)
    return (
        [g.coeff(m) for m in range(max_degree + 1)],
        [gbar.coeff(m) for m in range(max_degree + 1)],
    )


def gen_function_pair(config: EdgeConfig) -> tuple[CycPoly, CycPoly]:
    """(definition, closed form) of the weight generating function for a
    configuration of total N.  The definition multiplies the per-site
    binomial factors; the closed form expands

        (1 - t^N)^(L-1) / prod_j (1 - t omega^(left_sum_j))

    as a truncated power series.  Both are polynomials of degree
    (N-1)L - N and must agree coefficient by coefficient."""
    N, L = config.N, config.L
    if config.total != N:
        raise ValueError("closed form needs a configuration of total N")
    order = 2 * N
    definition = _gen_poly(config, config.left_sums)
    top = (N - 1) * L - N

    one = CycNum.integer(1, order)
    numer = CycPoly(order, (one,) + (CycNum.zero(order),) * (N - 1) + (-one,))
    closed = CycPoly.one(order)
    for _ in range(L - 1):
        closed = closed.mul(numer, max_degree=top)
    for phase in config.left_sums:
        # 1 / (1 - t omega^phase) = sum_k omega^(k*phase) t^k
        series = CycPoly(
            order, tuple(CycNum.omega_pow(k * phase, order) for k in range(top + 1))
        )
        closed = closed.mul(series, max_degree=top)
    return definition, closed


# ---------------------------------------------------------------------------
# the overlap table


@dataclass(frozen=True)
class GTable:
    """Symmetric integer table indexed by 0..dim-1, dim = (N-1)L - N + 1:
    entry(a, b) sums the degree-a dual coefficient times the degree-b
    coefficient over all configurations of total N."""

    N: int
    L: int
    entries: tuple[tuple[int, ...], ...]
    n_configs: int

    @property
    def dim(self) -> int:
        return len(self.entries)

    def entry(self, a: int, b: int) -> int:
        if 0 <= a < self.dim and 0 <= b < self.dim:
            return self.entries[a][b]
        return 0


def calG_table(N: int, L: int) -> GTable:
    """Build the full overlap table by exact enumeration.

    Asserts integrality of every entry (each is a rational integer even
    though the summands are cyclotomic) and symmetry of the table."""
    n_configs = count_compositions(N, L, N - 1)
    if n_configs > ENUM_GUARD:
        raise SizeGuardError(
            "overlap table needs %d configurations (guard %d)" % (n_configs, ENUM_GUARD)
        )
    dim = (N - 1) * L - N + 1
    if dim < 1:
        raise ValueError("L is too small for total N")
    order = 2 * N
    acc = [[CycNum.zero(order) for _ in range(dim)] for _ in range(dim)]
    seen = 0
    for n in compositions(N, L, N - 1):
        config = EdgeConfig(N, L, n)
        K, Kbar = k_coeffs(config)
        for a in range(dim):
            ka = Kbar[a]
            if ka.is_zero():
                continue
            row = acc[a]
            for b in range(dim):
                if not K[b].is_zero():
                    row[b] = row[b] + ka * K[b]
        seen += 1
    assert seen == n_configs
    entries = tuple(tuple(acc[a][b].as_int() for b in range(dim)) for a in range(dim))
    for a in range(dim):
        for b in range(a):
            assert entries[a][b] == entries[b][a], "table must be symmetric"
    return GTable(N=N, L=L, entries=entries, n_configs=n_configs)


# ---------------------------------------------------------------------------
# exchange sums (the polynomial kernels of the appendix identities)


def exchange_sum(n: int, mu: tuple[int, ...], lam: tuple[int, ...], N: int) -> CycNum:
    """sum over {n_i >= 0, sum n_i = n} of
    prod_i [mu_i choose n_i] [n_i + lam_i choose n_i]
    omega^(n_i (mu_prefix_i - n_prefix_i + lam_suffix_i))."""
    L = len(mu)
    assert len(lam) == L
    order = 2 * N
    mu_prefix = [0] * L
    for i in range(1, L):
        mu_prefix[i] = mu_prefix[i - 1] + mu[i - 1]
    lam_suffix = [0] * L
    for i in range(L - 2, -1, -1):
        lam_suffix[i] = lam_suffix[i + 1] + lam[i + 1]
    site_cap = [min(mu[i], N - 1 - lam[i]) for i in range(L)]
    tail_cap = [0] * (L + 1)
    for i in range(L - 1, -1, -1):
        tail_cap[i] = tail_cap[i + 1] + site_cap[i]

    total = CycNum.zero(order)

    def recurse(i: int, remaining: int, n_prefix: int, partial: CycNum) -> None:
        nonlocal total
        if i == L:
            if remaining == 0:
                total = total + partial
            return
        lo = max(0, remaining - tail_cap[i + 1])
        for ni in range(lo, min(site_cap[i], remaining) + 1):
            w = gauss_binom(mu[i], ni, N) * gauss_binom(ni + lam[i], ni, N)
            if w.is_zero():
                continue
            if ni:
                w = w * CycNum.omega_pow(
                    ni * (mu_prefix[i] - n_prefix + lam_suffix[i]), order
                )
            recurse(i + 1, remaining - ni, n_prefix + ni, partial * w)

    recurse(0, n, 0, CycNum.integer(1, order))
    return total


def exchange_sum_dual(n: int, lam: tuple[int, ...], mu: tuple[int, ...], N: int) -> CycNum:
    """The dual kernel: sum over {n_i, sum = n} of
    prod_i [lam_i choose n_i] [n_i + mu_i choose n_i]
    omega^(n_i (lam_suffix_i - n_suffix_i + mu_prefix_i))."""
    L = len(mu)
    assert len(lam) == L
    order = 2 * N
    mu_prefix = [0] * L
    for i in range(1, L):
        mu_prefix[i] = mu_prefix[i - 1] + mu[i - 1]
    lam_suffix = [0] * L
    for i in range(L - 2, -1, -1):
        lam_suffix[i] = lam_suffix[i + 1] + lam[i + 1]

    total = CycNum.zero(order)

    def recurse(i: int, remaining: int, partial: CycNum, n_so_far: list[int]) -> None:
        nonlocal total
        if i == L:
            if remaining == 0:
                # suffix sums of n are only known once the whole tuple is fixed
                phase = 0
                nsuf = 0
                for k in range(L - 1, -1, -1):
                    phase += n_so_far[k] * (lam_suffix[k] - nsuf + mu_prefix[k])
                    nsuf += n_so_far[k]
                total = total + partial * CycNum.omega_pow(phase, order)
            return
        cap = min(lam[i], remaining, N - 1 - mu[i])
        for ni in range(cap + 1):
            w = gauss_binom(lam[i], ni, N) * gauss_binom(ni + mu[i], ni, N)
            n_so_far.append(ni)
            recurse(i + 1, remaining - ni, partial * w, n_so_far)
            n_so_far.pop()

    recurse(0, n, CycNum.integer(1, order), [])
    return total


def _alternating_exchange_poly(
    mu: tuple[int, ...], lam: tuple[int, ...], N: int, dual: bool
) -> CycPoly:
    """sum_n (-1)^n omega^(n^2/2) (exchange sum)_n t^n, with
    (-1)^n omega^(n^2/2) = zeta^(n^2 + nN)."""
    order = 2 * N
    cap = min(sum(mu) if not dual else sum(lam), (N - 1) * len(mu))
    coeffs = []
    for n in range(cap + 1):
        val = (
            exchange_sum_dual(n, lam, mu, N) if dual else exchange_sum(n, mu, lam, N)
        )
        coeffs.append(CycNum.zeta_pow(n * n + n * N, order) * val)
    return CycPoly(order, coeffs)


# ---------------------------------------------------------------------------
# check routines


def identity_check(N: int, L: int) -> dict:
    """Verify, for every row index lN + Q and column index jN + P with
    P >= Q, that the overlap table entry equals

        sum_{m=0}^{j} [ (l-m) Lam^Q_{l+1+j-m} Lam^P_m
                        + (j-m+1) Lam^Q_m Lam^P_{l+1+j-m} ]

    and that the table is symmetric (which settles P < Q).  Exact
    integer comparison throughout."""
    table = calG_table(N, L)
    blocks = {Q: lambda_block(N, L, Q) for Q in range(N)}

    def lam(Q: int, m: int) -> int:
        blk = blocks[Q]
        return blk[m] if 0 <= m < len(blk) else 0

    checked = 0
    failures: list[dict] = []
    for a in range(table.dim):
        ell, Q = divmod(a, N)
        for b in range(table.dim):
            j, P = divmod(b, N)
            if P < Q:
                continue
            rhs = 0
            for m in range(j + 1):
                rhs += (ell - m) * lam(Q, ell + 1 + j - m) * lam(P, m)
                rhs += (j - m + 1) * lam(Q, m) * lam(P, ell + 1 + j - m)
            checked += 1
            if rhs != table.entry(a, b):
                failures.append(
                    {"row": a, "col": b, "table": table.entry(a, b), "identity": rhs}
                )
    symmetric = all(
        table.entry(a, b) == table.entry(b, a)
        for a in range(table.dim)
        for b in range(a)
    )
    return {
        "N": N,
        "L": L,
        "dim": table.dim,
        "n_configs": table.n_configs,
        "checked": checked,
        "symmetric": symmetric,
        "failures": failures,
        "ok": symmetric and not failures,
    }


@functools.lru_cache(maxsize=None)
def _configs_with_total(N: int, L: int, total: int) -> tuple[tuple[int, ...], ...]:
    return tuple(compositions(total, L, N - 1))


def _correction_from_exchange(
    N: int, L: int, Q: int, P: int, ell: int, j: int
) -> CycNum:
    """The correction term of the table recursion, evaluated from the
    exchange kernels: sum_{k=0}^{Q} [N-P+Q choose Q-k] omega^(k^2 - kP)
    times the exchange sum of order P - k over all configuration pairs
    with totals (l+1)N + Q + P - k and jN + k."""
    order = 2 * N
    total = CycNum.zero(order)
    for k in range(Q + 1):
        mu_total = (ell + 1) * N + Q + P - k
        lam_total = j * N + k
        if not 0 <= mu_total <= (N - 1) * L:
            continue
        if not 0 <= lam_total <= (N - 1) * L:
            continue
        mus = _configs_with_total(N, L, mu_total)
        lams = _configs_with_total(N, L, lam_total)
        inner = CycNum.zero(order)
        if P - k == 0:
            # the order-0 exchange sum is 1 for every configuration pair
            inner = CycNum.integer(len(mus) * len(lams), order)
        else:
            for mu in mus:
                for lam in lams:
                    inner = inner + exchange_sum(P - k, mu, lam, N)
        prefactor = gauss_binom(N - P + Q, Q - k, N) * CycNum.omega_pow(
            k * k - k * P, order
        )
        total = total + prefactor * inner
    return total


def _correction_from_counts(
    blocks: dict[int, tuple[int, ...]], Q: int, P: int, ell: int, j: int
) -> int:
    """The closed form of the same correction term, a plain integer:
    sum_{n=0}^{j} Lam^Q_n Lam^P_{l+1+j-n} - sum_{n=0}^{j-1} Lam^P_n Lam^Q_{l+1+j-n}."""

    def lam(C: int, m: int) -> int:
        blk = blocks[C]
        return blk[m] if 0 <= m < len(blk) else 0

    first = sum(lam(Q, n) * lam(P, ell + 1 + j - n) for n in range(j + 1))
    second = sum(lam(P, n) * lam(Q, ell + 1 + j - n) for n in range(j))
    return first - second


def uqp_check(N: int, L: int) -> dict:
    """Verify three exact statements about the table recursion, for all
    P >= Q and all (l, j) in range:

      1. the exchange-kernel form of the correction term equals its
         closed form in level degeneracies (a rational integer);
      2. the recursion  entry(lN+Q, jN+P) = (l-j) Lam^Q_{l+1} Lam^P_j
         + entry((l+1)N+Q, (j-1)N+P) + correction  holds on the table;
      3. for P = Q the correction collapses to Lam^Q_{l+1} Lam^Q_j."""
    table = calG_table(N, L)
    blocks = {Q: lambda_block(N, L, Q) for Q in range(N)}

    def lam(C: int, m: int) -> int:
        blk = blocks[C]
        return blk[m] if 0 <= m < len(blk) else 0

    checked = 0
    failures: list[dict] = []
    for a in range(table.dim):
        ell, Q = divmod(a, N)
        for b in range(table.dim):
            j, P = divmod(b, N)
            if P < Q:
                continue
            kernel = _correction_from_exchange(N, L, Q, P, ell, j)
            closed = _correction_from_counts(blocks, Q, P, ell, j)
            recursion = (
                (ell - j) * lam(Q, ell + 1) * lam(P, j)
                + table.entry(a + N, b - N)
                + closed
            )
            checked += 1
            problems = {}
            if not kernel.is_rational_int() or kernel.as_int() != closed:
                problems["kernel_vs_closed"] = (repr(kernel), closed)
            if recursion != table.entry(a, b):
                problems["recursion"] = (recursion, table.entry(a, b))
            if P == Q and closed != lam(Q, ell + 1) * lam(Q, j):
                problems["equal_charge_product"] = closed
            if problems:
                failures.append({"row": a, "col": b, **problems})
    return {
        "N": N,
        "L": L,
        "dim": table.dim,
        "checked": checked,
        "failures": failures,
        "ok": not failures,
    }


def ibi_check(N: int, L: int, mu, lam) -> dict:
    """Verify the two-sided alternating-sum identity for one pair of
    configurations: with S_mu(t) and S_lam(t) the alternating exchange
    polynomials, and totals  sum(mu) = (l+1)N + Q,  sum(lam) = jN + P,

        S_mu(t) = (omega^(1/2+P) t; omega)_(N-P+Q) (1 + t^N)^(l-j) S_lam(t).

    A negative power of (1 + t^N) is handled by cross multiplication."""
    mu, lam = tuple(mu), tuple(lam)
    if len(mu) != L or len(lam) != L:
        raise ValueError("configurations must have length L")
    if any(not 0 <= v < N for v in mu + lam):
        raise ValueError("entries must lie in [0, N-1]")
    if sum(mu) < N:
        raise ValueError("sum(mu) must be at least N")
    ell, Q = divmod(sum(mu) - N, N)
    j, P = divmod(sum(lam), N)
    order = 2 * N

    lhs = _alternating_exchange_poly(mu, lam, N, dual=False)
    rhs = _alternating_exchange_poly(mu, lam, N, dual=True)
    poch = pochhammer(Fraction(1, 2) + P, N - P + Q, N)
    rhs = poch * rhs

    one = CycNum.integer(1, order)
    binomial = CycPoly(order, (one,) + (CycNum.zero(order),) * (N - 1) + (one,))
    power = ell - j
    if power >= 0:
        rhs = rhs * binomial**power
    else:
        lhs = lhs * binomial ** (-power)
    equal = lhs == rhs
    return {
        "N": N,
        "L": L,
        "mu": list(mu),
        "lam": list(lam),
        "ell": ell,
        "Q": Q,
        "j": j,
        "P": P,
        "lhs_degree": lhs.degree,
        "rhs_degree": rhs.degree,
        "ok": equal,
    }
