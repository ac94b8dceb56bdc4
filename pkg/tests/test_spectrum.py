"""Closed-form spectra versus the dense numeric oracle.

The matched-multiset tolerance (1e-8 absolute) is deliberately far looser
than the observed agreement (~1e-13) so failures indicate real defects, not
rounding noise.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfland import (
    NotASaddle,
    Selection,
    build_canonical,
    flatten_tangent,
    dense_hessian,
    lambda_min_balanced,
    lambda_min_closed_form,
    load_data_matrix,
    numeric_spectrum,
    spectrum_balanced,
    spectrum_deficient_rank,
    spectrum_full_rank_scaled,
    spectrum_zero_family,
    zero_family_point,
)

MATCH_TOL = 1e-8
X21 = load_data_matrix(np.diag([2.0, 1.0]) @ np.eye(2, 3))
X321 = load_data_matrix(np.diag([3.0, 2.0, 1.0]) @ np.eye(3, 4))


def _oracle_sorted(X, p):
    return numeric_spectrum(X, p)[0]


def _assert_match(X, rep):
    assert len(rep.eigpairs) == rep.point.k * (X.m + X.n)
    np.testing.assert_allclose(
        np.sort(rep.values), _oracle_sorted(X, rep.point), atol=MATCH_TOL
    )


# ------------------------------------------------------------ pinned cases --

def test_worked_spectrum_diag21():
    rep = spectrum_full_rank_scaled(X21, Selection((1,)), a=1.0)
    np.testing.assert_allclose(np.sort(rep.values), [-1, 0, 1, 2, 3], atol=1e-12)
    assert rep.inertia == (3, 1, 1)
    assert rep.lambda_min == pytest.approx(-1.0, abs=1e-12)


def test_worked_inertia_full_selection():
    rep = spectrum_full_rank_scaled(X321, Selection((0, 1)), a=1.0)
    assert rep.inertia == (10, 0, 4)
    assert rep.lambda_min == pytest.approx(0.0, abs=1e-12)


def test_zero_family_worked_case():
    # sigma_1 = 2 against a kernel weight of 3 gives exactly -1
    C0 = np.array([[np.sqrt(3.0)]])
    rep = spectrum_zero_family(X21, C0, 1)
    _assert_match(X21, rep)
    assert rep.lambda_min == pytest.approx(-1.0, abs=1e-12)
    assert lambda_min_closed_form(X21, Selection(()), 1, C0=C0) == pytest.approx(
        -1.0, abs=1e-12
    )


def test_zero_family_pm_sigma_pairs():
    X = load_data_matrix(np.diag([2.0, 1.0]))
    rep = spectrum_zero_family(X, np.zeros((0, 1)), 1)
    np.testing.assert_allclose(np.sort(rep.values), [-2, -1, 1, 2], atol=1e-12)


def test_scaled_worked_value():
    lam = lambda_min_closed_form(X21, Selection((1,)), 1, a=2.0)
    assert lam == pytest.approx(-24.0 / (17.0 + np.sqrt(481.0)), abs=1e-14)


# ------------------------------------------------------- oracle agreement ---

@pytest.mark.parametrize("seed", range(8))
def test_full_rank_scaled_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    n = int(rng.integers(m + 1, 9))
    X = load_data_matrix(rng.standard_normal((m, n)))
    k = int(rng.integers(1, m + 1))
    sel = Selection(tuple(sorted(rng.choice(X.r, size=min(k, X.r), replace=False).tolist())))
    if sel.q != k:
        k = sel.q
    a = float(rng.uniform(0.3, 2.5))
    rep = spectrum_full_rank_scaled(X, sel, a=a)
    _assert_match(X, rep)


@pytest.mark.parametrize("seed", range(6))
def test_deficient_rank_matches_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    X = load_data_matrix(rng.standard_normal((4, 6)))
    q = int(rng.integers(1, 3))
    k = q + int(rng.integers(1, 3))
    sel = Selection(tuple(sorted(rng.choice(X.r, size=q, replace=False).tolist())))
    C0 = rng.standard_normal((X.n - X.r, k - q))
    rep = spectrum_deficient_rank(build_canonical(X, sel, k, C0=C0))
    _assert_match(X, rep)


@pytest.mark.parametrize("seed", range(4))
def test_zero_family_matches_oracle(seed):
    rng = np.random.default_rng(200 + seed)
    X = load_data_matrix(rng.standard_normal((3, 6)))
    k = int(rng.integers(1, 4))
    C0 = rng.standard_normal((X.n - X.r, k))
    rep = spectrum_zero_family(X, C0, k)
    _assert_match(X, rep)


def test_repeated_sigma_matches_oracle():
    X = load_data_matrix(np.diag([2.0, 2.0, 1.0]) @ np.eye(3, 5))
    for sel, k in [((0,), 1), ((1,), 2), ((0, 1), 2), ((2,), 1)]:
        rep = (
            spectrum_full_rank_scaled(X, Selection(sel), a=1.0)
            if len(sel) == k
            else spectrum_deficient_rank(build_canonical(X, Selection(sel), k))
        )
        _assert_match(X, rep)


def test_balanced_matches_oracle():
    for sel, k in [((1,), 1), ((0,), 2), ((1,), 2), ((0, 1), 2)]:
        rep = spectrum_balanced(X321, Selection(sel), k)
        _assert_match(X321, rep)


# --------------------------------------------------------- eigpair quality --

def test_eigenpairs_are_genuine():
    rep = spectrum_deficient_rank(
        build_canonical(X321, Selection((1,)), 3, C0=np.array([[0.7, -0.4]]))
    )
    H = dense_hessian(X321, rep.point).matrix
    V = np.column_stack([flatten_tangent(e.vector) for e in rep.eigpairs])
    vals = np.array([e.value for e in rep.eigpairs])
    assert np.max(np.abs(H @ V - V * vals)) < 1e-9
    gram = V.T @ V
    assert np.max(np.abs(gram - np.eye(V.shape[1]))) < 1e-9


def test_coupled_pair_vectors_multiply_to_minus_one():
    rep = spectrum_full_rank_scaled(X321, Selection((2,)), a=1.7)
    seen = [e for e in rep.eigpairs if e.coupling is not None]
    assert seen, "expected coupled two-by-two blocks"
    by_block = {}
    for e in seen:
        by_block.setdefault(e.provenance.split(",branch")[0], []).append(e)
    for block, pair in by_block.items():
        if len(pair) == 2:
            assert pair[0].coupling * pair[1].coupling == pytest.approx(-1.0, rel=1e-9)


# ----------------------------------------------------------- lambda_min -----

def test_lambda_min_matches_report_minimum():
    for sel, k, C0 in [
        ((1,), 1, None),
        ((1, 2), 2, None),
        ((0,), 2, np.array([[0.3]])),
        ((), 1, np.array([[2.0]])),
    ]:
        sel = Selection(sel)
        if sel.q == k:
            rep = spectrum_full_rank_scaled(X321, sel, a=1.0)
        elif sel.q == 0:
            rep = spectrum_zero_family(X321, C0, k)
        else:
            rep = spectrum_deficient_rank(build_canonical(X321, sel, k, C0=C0))
        lam = lambda_min_closed_form(X321, sel, k, C0=C0)
        assert lam == pytest.approx(rep.lambda_min, abs=1e-10)


def test_lambda_min_refuses_global_minimum():
    with pytest.raises(NotASaddle):
        lambda_min_closed_form(X321, Selection((0, 1, 2)), 3)
    with pytest.raises(NotASaddle):
        lambda_min_balanced(X321, Selection((0, 1)), 2)


def test_balanced_lambda_min_worked_cases():
    assert lambda_min_balanced(X21, Selection((1,)), 1) == pytest.approx(-1.0, abs=1e-12)
    assert lambda_min_balanced(X321, Selection((0,)), 2) == pytest.approx(-2.0, abs=1e-12)
    assert lambda_min_balanced(X321, Selection((1,)), 2) == pytest.approx(-3.0, abs=1e-12)


def test_scaling_kills_lambda_min():
    mags = [abs(lambda_min_closed_form(X21, Selection((1,)), 1, a=a)) for a in (1, 2, 4, 8)]
    assert all(x > y for x, y in zip(mags, mags[1:]))
    assert mags[-1] < 0.1


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.2, 3.0),
    st.floats(0.2, 3.0),
    st.floats(0.3, 3.0),
)
def test_stable_block_sign_trichotomy(lam, sig, a):
    """The coupled block's small eigenvalue has the sign of lambda^2 - sigma^2."""
    p11, p12, p22 = lam * lam / (a * a), -sig, a * a
    tr, det = p11 + p22, p11 * p22 - p12 * p12
    rho_plus = 0.5 * (tr + np.hypot(p11 - p22, 2 * p12))
    rho_minus = det / rho_plus
    expected = np.sign(lam * lam - sig * sig)
    if abs(lam - sig) > 1e-9:
        assert np.sign(rho_minus) == expected
