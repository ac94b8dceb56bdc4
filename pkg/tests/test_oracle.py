import numpy as np
import pytest

from mfland import (
    FactorPair,
    TangentPair,
    TooLarge,
    dense_hessian,
    fd_validate,
    flatten_tangent,
    hessian_apply,
    inertia_from_values,
    load_data_matrix,
    numeric_spectrum,
    unflatten_tangent,
)


def _setup(seed=0, m=3, n=4, k=2):
    rng = np.random.default_rng(seed)
    X = load_data_matrix(rng.standard_normal((m, n)))
    p = FactorPair(rng.standard_normal((m, k)), rng.standard_normal((k, n)))
    return X, p, rng


def test_flatten_round_trip():
    rng = np.random.default_rng(1)
    d = TangentPair(rng.standard_normal((3, 2)), rng.standard_normal((2, 5)))
    v = flatten_tangent(d)
    assert v.shape == (2 * (3 + 5),)
    back = unflatten_tangent(v, 3, 5, 2)
    np.testing.assert_array_equal(back.G, d.G)
    np.testing.assert_array_equal(back.H, d.H)


def test_dense_matches_operator():
    X, p, rng = _setup()
    H = dense_hessian(X, p)
    assert H.asymmetry < 1e-12
    for _ in range(5):
        d = TangentPair(
            rng.standard_normal((X.m, p.k)), rng.standard_normal((p.k, X.n))
        )
        np.testing.assert_allclose(
            H.matrix @ flatten_tangent(d),
            flatten_tangent(hessian_apply(X, p, d)),
            atol=1e-10 * max(1.0, p.norm()) ** 2,
        )


def test_numeric_spectrum_sorted_and_consistent():
    X, p, _ = _setup(2)
    evals, evecs = numeric_spectrum(X, p)
    assert np.all(np.diff(evals) >= 0)
    H = dense_hessian(X, p).matrix
    np.testing.assert_allclose(H @ evecs, evecs * evals, atol=1e-10)


def test_inertia_from_values():
    vals = np.array([-2.0, -1e-15, 0.0, 3e-12, 5.0, 7.0])
    assert inertia_from_values(vals, tol=1e-9) == (2, 1, 3)
    assert inertia_from_values(vals, tol=1e-16) == (3, 2, 1)


def test_size_guard():
    X = load_data_matrix(np.eye(40) + np.diag(np.arange(40.0)))
    p = FactorPair(np.zeros((40, 63)), np.zeros((63, 40)))
    with pytest.raises(TooLarge):
        dense_hessian(X, p)


def test_fd_validate_clean_point():
    X, p, _ = _setup(3)
    rep = fd_validate(X, p, seed=0)
    assert rep.ok
    assert rep.max_gradient_rel_err < 1e-6
    assert rep.max_second_rel_err < 1e-4


def test_fd_validate_deterministic():
    X, p, _ = _setup(4)
    assert fd_validate(X, p, seed=9) == fd_validate(X, p, seed=9)
