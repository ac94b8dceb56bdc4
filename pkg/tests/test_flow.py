import numpy as np
import pytest

from mfland import (
    InvalidInput,
    balance_residual,
    build_balanced,
    classify_limit,
    integrate_flow,
    load_data_matrix,
    random_balanced_pair,
    random_pair,
    Selection,
)

X21 = load_data_matrix(np.diag([2.0, 1.0]) @ np.eye(2, 3))

GRAD_TOL = 1e-9
DRIFT_TOL = 1e-8


def test_random_balanced_pair_starts_balanced():
    p0 = random_balanced_pair(X21, 2, seed=4)
    assert balance_residual(p0) < 1e-10


def test_flow_converges_to_global_minimum():
    p0 = random_balanced_pair(X21, 1, seed=0)
    traj = integrate_flow(X21, p0, grad_tol=GRAD_TOL)
    assert traj.status == "Converged"
    assert traj.samples[-1].grad_norm < GRAD_TOL * max(1.0, np.linalg.norm(X21.X))
    # best rank-one fit leaves half of sigma_2^2 behind
    assert traj.samples[-1].J == pytest.approx(0.5, abs=1e-6)
    diag = classify_limit(X21, traj)
    assert diag.kind == "GlobalMinimum"
    assert diag.lambdas == pytest.approx((2.0,), abs=1e-5)


def test_objective_monotone_along_flow():
    p0 = random_pair(X21, 2, seed=1)
    traj = integrate_flow(X21, p0)
    J = [s.J for s in traj.samples]
    assert all(a >= b - 1e-12 for a, b in zip(J, J[1:]))


def test_balance_invariant_conserved():
    for seed, init in [(2, random_balanced_pair), (3, random_pair)]:
        p0 = init(X21, 1, seed=seed)
        traj = integrate_flow(X21, p0)
        assert max(s.drift for s in traj.samples) < DRIFT_TOL


def test_flow_from_exact_saddle_stays_put():
    p0 = build_balanced(X21, Selection((1,)), 1)
    traj = integrate_flow(X21, p0, t_max=5.0)
    assert traj.status == "Converged"
    diag = classify_limit(X21, traj)
    assert diag.kind == "StrictSaddle"
    assert diag.lambda_min == pytest.approx(-1.0, abs=1e-6)


def test_short_horizon_reports_max_time():
    p0 = random_pair(X21, 1, seed=5)
    traj = integrate_flow(X21, p0, t_max=1e-3, grad_tol=1e-14)
    assert traj.status == "MaxTimeReached"
    with pytest.raises(InvalidInput):
        classify_limit(X21, traj)


def test_trajectory_samples_well_formed():
    p0 = random_balanced_pair(X21, 1, seed=6)
    traj = integrate_flow(X21, p0)
    ts = [s.t for s in traj.samples]
    assert ts[0] == 0.0
    assert all(b > a for a, b in zip(ts, ts[1:]))
    assert traj.t_final == ts[-1]
    assert traj.steps >= len(ts) - 1
