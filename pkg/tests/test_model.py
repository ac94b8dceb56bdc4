import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfland import (
    DimensionError,
    FactorPair,
    InvalidInput,
    evaluate_J,
    load_data_matrix,
    read_matrix_csv,
    residual,
    to_user_orientation,
    write_matrix_csv,
)

RECON_TOL = 1e-12


def test_orientation_wide_kept():
    X = load_data_matrix(np.array([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    assert X.m == 2 and X.n == 3
    assert not X.transposed


def test_orientation_tall_transposed():
    A = np.arange(12, dtype=float).reshape(4, 3) + 1.0
    X = load_data_matrix(A)
    assert X.transposed
    assert (X.m, X.n) == (3, 4)
    np.testing.assert_allclose(X.X, A.T)


def test_svd_reconstruction_and_order():
    rng = np.random.default_rng(11)
    X = load_data_matrix(rng.standard_normal((4, 7)))
    assert X.reconstruction_error() < RECON_TOL * np.linalg.norm(X.X)
    assert np.all(np.diff(X.sigma) <= 0)
    np.testing.assert_allclose(X.U.T @ X.U, np.eye(4), atol=1e-13)
    np.testing.assert_allclose(X.V.T @ X.V, np.eye(7), atol=1e-13)


def test_sign_convention_largest_entry_positive():
    rng = np.random.default_rng(3)
    X = load_data_matrix(rng.standard_normal((3, 5)))
    for i in range(X.r):
        col = X.U[:, i]
        assert col[np.argmax(np.abs(col))] > 0


def test_rank_detection_zero_tail():
    A = np.outer([1.0, 2.0], [3.0, 0.0, -1.0])  # rank one, 2x3
    X = load_data_matrix(A)
    assert X.r == 1
    assert X.sigma[1] == 0.0
    assert X.V0.shape == (3, 2)
    # V0 spans the kernel of X
    np.testing.assert_allclose(X.X @ X.V0, 0.0, atol=1e-12)


def test_zero_matrix_rejected():
    with pytest.raises(InvalidInput):
        load_data_matrix(np.zeros((2, 3)))


def test_bad_rank_tol_rejected():
    with pytest.raises(InvalidInput):
        load_data_matrix(np.eye(2), rank_tol=-1.0)


def test_nonfinite_rejected():
    with pytest.raises(InvalidInput):
        load_data_matrix(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_factor_pair_shape_mismatch():
    with pytest.raises(DimensionError):
        FactorPair(np.zeros((2, 2)), np.zeros((3, 4)))


def test_factor_pair_frozen_arrays():
    p = FactorPair(np.ones((2, 1)), np.ones((1, 3)))
    with pytest.raises(ValueError):
        p.W[0, 0] = 5.0


def test_objective_value():
    X = load_data_matrix(np.array([[2.0, 0.0], [0.0, 1.0]]))
    p = FactorPair(np.array([[1.0], [0.0]]), np.array([[2.0, 0.0]]))
    # W S recovers the top singular component exactly
    np.testing.assert_allclose(residual(X, p), np.array([[0.0, 0.0], [0.0, -1.0]]))
    assert evaluate_J(X, p) == pytest.approx(0.5)


def test_user_orientation_round_trip():
    A = np.arange(12, dtype=float).reshape(6, 2) + 1.0
    X = load_data_matrix(A)
    rng = np.random.default_rng(0)
    p = FactorPair(rng.standard_normal((X.m, 2)), rng.standard_normal((2, X.n)))
    Wu, Su = to_user_orientation(X, p.W, p.S)
    np.testing.assert_allclose(Wu @ Su, (p.W @ p.S).T)


def test_csv_round_trip_exact(tmp_path):
    rng = np.random.default_rng(5)
    A = rng.standard_normal((3, 4)) * 10.0 ** rng.integers(-8, 8, (3, 4))
    path = tmp_path / "a.csv"
    write_matrix_csv(path, A)
    B = read_matrix_csv(path)
    assert (A == B).all()  # 17 significant digits round-trip float64 exactly


def test_csv_ragged_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3\n4,5\n")
    with pytest.raises(InvalidInput):
        read_matrix_csv(path)


def test_csv_non_numeric_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,two\n")
    with pytest.raises(InvalidInput):
        read_matrix_csv(path)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_svd_properties_random(rows, cols, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((rows, cols))
    X = load_data_matrix(A)
    assert X.m <= X.n
    recon = (X.U * X.sigma) @ X.V[:, : X.m].T
    np.testing.assert_allclose(recon, X.X, atol=1e-10 * max(1.0, np.linalg.norm(A)))
    assert np.all(X.sigma >= 0)
