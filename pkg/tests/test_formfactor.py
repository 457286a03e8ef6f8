"""Form-factor routes: subset sum, determinant, closed products."""

import mpmath
import pytest

from chiralpotts.drinfeld import lambda_counts
from chiralpotts.errors import SizeGuardError
from chiralpotts.formfactor import (
    couplings,
    dhat_closed,
    dhat_det,
    dhat_sum,
    kernel_orthogonality_residual,
    order_param_sq,
    overlap_product_closed,
    psi1_brute,
    psi1_closed,
    psi_closed,
    psi_closed_angular,
    rapidity_ratio,
    rapidity_ratio_limit,
)


def _pairs(N, rs=(1,)):
    for Q in range(N):
        for r in rs:
            yield Q, (Q - r) % N


def test_couplings_normalization_and_ranges():
    inp = couplings(3, 5, Q=2, P=1, kp="0.5")
    assert inp.swapped
    assert (inp.Q, inp.P) == (1, 2)
    assert inp.mp - inp.m in (0, 1)
    assert all(0 < u < 1 for u in inp.u)
    assert all(0 < u < 1 for u in inp.uph)
    assert all(u > 0 for u in inp.up)
    assert all(u > 0 for u in inp.uh)


def test_couplings_rejects_equal_charges():
    with pytest.raises(ValueError):
        couplings(3, 4, Q=1, P=1, kp="0.5")


def test_per_root_cc_factor_frozen():
    # single bra root at z = -1: lambda = sqrt(1 + k'^2), and the cc
    # factor ((lambda+1)^2 - k'^2)/(4 lambda) comes out (1+lambda)/(2 lambda)
    inp = couplings(2, 2, Q=0, P=1, kp="0.5")
    assert inp.m == 0 and inp.mp == 1
    assert abs(inp.cc_product - mpmath.mpf("0.9472135955")) < 1e-9


def test_order_param_two_state_width_two_hand_value():
    res = order_param_sq(2, 1, "0.5", 2)
    assert abs(res["finite_L"] - mpmath.mpf("0.9472135955")) < 1e-9


def test_psi_closed_empty_subsets():
    inp = couplings(3, 5, Q=0, P=2, kp="0.5")
    assert psi_closed(inp, (), ()) == 1


def test_psi_closed_validation():
    inp = couplings(3, 5, Q=0, P=2, kp="0.5")
    with pytest.raises(ValueError):
        psi_closed(inp, (0,), ())
    with pytest.raises(ValueError):
        psi_closed(inp, (0, 0), (0, 1))
    with pytest.raises(ValueError):
        psi_closed(inp, (inp.m,), (0,))
    with pytest.raises(ValueError):
        psi_closed(inp, (0,), (0,), variant="bogus")


def test_psi_closed_angular_route_agrees():
    import itertools

    for Q, P in ((0, 1), (0, 2), (1, 2)):
        inp = couplings(3, 6, Q=Q, P=P, kp="0.5")
        with mpmath.workprec(inp.working):
            for n in range(min(inp.m, inp.mp) + 1):
                for W in itertools.combinations(range(inp.m), n):
                    for Wp in itertools.combinations(range(inp.mp), n):
                        a = psi_closed(inp, W, Wp)
                        b = psi_closed_angular(inp, W, Wp)
                        assert abs(a - b) < mpmath.mpf(10) ** -40


def test_dhat_routes_agree_small():
    for kp in ("0.2", "0.5", "0.8"):
        for L in (4, 5, 6):
            for Q, P in _pairs(3, rs=(1, 2)):
                inp = couplings(3, L, Q=Q, P=P, kp=kp)
                with mpmath.workprec(inp.working):
                    s = dhat_sum(inp)
                    d, resid = dhat_det(inp)
                    c = dhat_closed(inp)
                    h = dhat_sum(inp, variant="hatted")
                    assert abs(s - c) < mpmath.mpf(10) ** -40
                    assert abs(d - c) < mpmath.mpf(10) ** -40
                    assert abs(h - c) < mpmath.mpf(10) ** -40
                    assert resid < mpmath.mpf(10) ** -40


def test_dhat_det_sign_choices_cancel():
    inp = couplings(3, 7, Q=0, P=1, kp="0.7")
    with mpmath.workprec(inp.working):
        a, _ = dhat_det(inp, eps=1)
        b, _ = dhat_det(inp, eps=-1)
        assert abs(a - b) < mpmath.mpf(10) ** -50


def test_dhat_sum_guard():
    inp = couplings(3, 20, Q=0, P=2, kp="0.5")
    assert inp.mp == 13
    with pytest.raises(SizeGuardError):
        dhat_sum(inp)


def test_kernel_orthogonality_small():
    for L in (5, 8):
        for Q, P in _pairs(3):
            inp = couplings(3, L, Q=Q, P=P, kp="0.4")
            resid = kernel_orthogonality_residual(inp)
            assert resid < mpmath.mpf(10) ** -40


def test_overlap_product_identity_both_gaps():
    # gap 0 and gap 1 pairs both satisfy the R-ratio rearrangement
    for L, Q, P in ((4, 0, 1), (5, 0, 2), (6, 1, 2), (7, 0, 1)):
        inp = couplings(3, L, Q=Q, P=P, kp="0.6")
        with mpmath.workprec(inp.working):
            lhs = overlap_product_closed(inp)
            rhs = inp.cc_product * dhat_closed(inp) ** 2
            assert abs(lhs - rhs) < mpmath.mpf(10) ** -40


def test_psi1_brute_matches_closed_exhaustive_small():
    for L in (3, 4):
        for Q, P in _pairs(3, rs=(1, 2)):
            mq = lambda_counts(3, L, Q).m
            mp_ = lambda_counts(3, L, P).m
            for j in range(mq):
                for ell in range(mp_):
                    b = psi1_brute(3, L, Q, P, j, ell)
                    c = psi1_closed(3, L, Q, P, j, ell)
                    assert abs(b - c) < mpmath.mpf(10) ** -40


def test_psi1_transpose_relation():
    from chiralpotts.drinfeld import sector_roots

    with mpmath.workprec(400):
        for Q, P in _pairs(3, rs=(1, 2)):
            zq = sector_roots(3, 4, Q)
            zp = sector_roots(3, 4, P)
            for j in range(len(zq)):
                for ell in range(len(zp)):
                    lhs = psi1_brute(3, 4, P, Q, ell, j)
                    rhs = zq[j] / zp[ell] * psi1_brute(3, 4, Q, P, j, ell)
                    assert abs(lhs - rhs) < mpmath.mpf(10) ** -40


def test_psi1_precision_insensitive():
    # the single-excitation overlap involves no coupling constant; raising
    # the precision must reproduce the same number, not merely a nearby one
    a = psi1_brute(3, 5, 0, 2, 1, 0, precision=128)
    b = psi1_brute(3, 5, 0, 2, 1, 0, precision=256)
    assert abs(a - b) < mpmath.mpf(10) ** -35


def test_psi1_index_validation():
    with pytest.raises(ValueError):
        psi1_brute(3, 3, 0, 1, 5, 0)
    with pytest.raises(ValueError):
        psi1_closed(3, 3, 0, 1, 0, 5)


def test_order_param_validation():
    with pytest.raises(ValueError):
        order_param_sq(3, 0, "0.5", 4)
    with pytest.raises(ValueError):
        order_param_sq(3, 3, "0.5", 4)
    with pytest.raises(ValueError):
        order_param_sq(3, 1, "0.5", 4, method="bogus")


def test_order_param_methods_consistent():
    res = order_param_sq(3, 1, "0.5", 6, method="all")
    for e in res["per_sector"]:
        routes = e["routes"]
        assert abs(routes["sum"] - routes["closed"]) < mpmath.mpf(10) ** -40
        assert abs(routes["det"] - routes["closed"]) < mpmath.mpf(10) ** -40
        assert "orthogonality_residual" in e


def test_order_param_charge_symmetry():
    # r and N - r give the same squared magnetization
    a = order_param_sq(3, 1, "0.5", 9)
    b = order_param_sq(3, 2, "0.5", 9)
    assert abs(a["finite_L"] - b["finite_L"]) < mpmath.mpf(10) ** -40
    assert abs(a["limit"] - b["limit"]) < mpmath.mpf(10) ** -40


def test_order_param_converges_three_state():
    errs = []
    for L in (6, 9, 12):
        res = order_param_sq(3, 1, "0.5", L)
        errs.append(res["abs_error"])
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < mpmath.mpf(10) ** -8


def test_order_param_ising_cross_check():
    # finite-size error decays like k'^(2L), so the width grows with k'
    for kp, L in (("0.2", 8), ("0.5", 16), ("0.8", 48)):
        res = order_param_sq(2, 1, kp, L)
        with mpmath.workprec(200):
            ising = (1 - mpmath.mpf(kp) ** 2) ** mpmath.mpf("0.25")
        assert abs(res["finite_L"] - ising) < 1e-8
        assert abs(res["limit"] - ising) < mpmath.mpf(10) ** -50


def test_rapidity_ratio_approaches_limit():
    inp9 = couplings(3, 9, Q=0, P=2, kp="0.5")
    inp30 = couplings(3, 30, Q=0, P=2, kp="0.5")
    with mpmath.workprec(inp30.working):
        kpv = mpmath.mpf("0.5")
        err9 = abs(
            rapidity_ratio(inp9, 1 - kpv) - rapidity_ratio_limit(inp9, "low")
        )
        err30 = abs(
            rapidity_ratio(inp30, 1 - kpv) - rapidity_ratio_limit(inp30, "low")
        )
        assert err30 < err9
        assert err30 < 1e-10
        err9h = abs(
            rapidity_ratio(inp9, 1 + kpv) - rapidity_ratio_limit(inp9, "high")
        )
        err30h = abs(
            rapidity_ratio(inp30, 1 + kpv) - rapidity_ratio_limit(inp30, "high")
        )
        assert err30h < err9h
        assert err30h < 1e-10
