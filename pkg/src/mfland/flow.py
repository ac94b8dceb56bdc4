"""Gradient flow (W', S') = -grad J, with invariant tracking.

The flow conserves W^T W - S S^T exactly, so the integrator reports its
drift alongside J and the gradient norm at every accepted step.  Time
stepping is classical RK4 with step-doubling error control: each step is
taken once at h and twice at h/2, the Richardson estimate of the local error
decides acceptance, and the extrapolated state is kept.
"""

from dataclasses import dataclass

import numpy as np

from .calculus import gradient
from .errors import InvalidInput, StiffnessFailure
from .model import FactorPair, evaluate_J

DIVERGENCE_NORM = 1e12


@dataclass(frozen=True)
class FlowSample:
    t: float
    J: float
    grad_norm: float
    drift: float


@dataclass(frozen=True)
class FlowTrajectory:
    samples: tuple
    terminal: FactorPair
    status: str  # "Converged" | "MaxTimeReached" | "Diverged"
    steps: int

    @property
    def t_final(self):
        return self.samples[-1].t


def _rhs(X, W, S):
    E = W @ S - X.X
    return -(E @ S.T), -(W.T @ E)


def _rk4_step(X, W, S, h):
    k1W, k1S = _rhs(X, W, S)
    k2W, k2S = _rhs(X, W + 0.5 * h * k1W, S + 0.5 * h * k1S)
    k3W, k3S = _rhs(X, W + 0.5 * h * k2W, S + 0.5 * h * k2S)
    k4W, k4S = _rhs(X, W + h * k3W, S + h * k3S)
    Wn = W + (h / 6.0) * (k1W + 2 * k2W + 2 * k3W + k4W)
    Sn = S + (h / 6.0) * (k1S + 2 * k2S + 2 * k3S + k4S)
    return Wn, Sn


def integrate_flow(
    X,
    p0,
    t_max=200.0,
    grad_tol=1e-9,
    atol=1e-10,
    rtol=1e-10,
    h0=1e-2,
    h_min=1e-13,
    max_steps=200000,
):
    """Integrate gradient flow from p0 until the gradient norm drops below
    grad_tol * max(1, ||X||_F), time runs out, or the iterate diverges.

    Raises StiffnessFailure if the accepted step size underflows h_min.
    """
    if t_max <= 0:
        raise InvalidInput(f"t_max must be positive, got {t_max}")
    W, S = p0.W.copy(), p0.S.copy()
    C_init = W.T @ W - S @ S.T
    scale = max(1.0, float(np.linalg.norm(X.X)))

    def snapshot(t):
        p = FactorPair(W=W, S=S)
        g = gradient(X, p)
        drift = float(np.linalg.norm(W.T @ W - S @ S.T - C_init))
        return p, g.norm(), FlowSample(
            t=float(t), J=evaluate_J(X, p), grad_norm=g.norm(), drift=drift
        )

    t = 0.0
    h = float(h0)
    samples = []
    p, gnorm, s0 = snapshot(t)
    samples.append(s0)
    status = "MaxTimeReached"
    steps = 0

    if gnorm <= grad_tol * scale:
        status = "Converged"
        return FlowTrajectory(samples=tuple(samples), terminal=p, status=status,
                              steps=0)

    while steps < max_steps:
        h = min(h, t_max - t)
        W1, S1 = _rk4_step(X, W, S, h)
        Wh, Sh = _rk4_step(X, W, S, 0.5 * h)
        W2, S2 = _rk4_step(X, Wh, Sh, 0.5 * h)
        err = np.sqrt(np.sum((W1 - W2) ** 2) + np.sum((S1 - S2) ** 2)) / 15.0
        ynorm = np.sqrt(np.sum(W * W) + np.sum(S * S))
        tol_step = atol + rtol * ynorm

        if err <= tol_step:
            # accept, with local extrapolation
            W = W2 + (W2 - W1) / 15.0
            S = S2 + (S2 - S1) / 15.0
            t += h
            steps += 1
            p, gnorm, samp = snapshot(t)
            samples.append(samp)
            if not np.isfinite(samp.J) or p.norm() > DIVERGENCE_NORM:
                status = "Diverged"
                break
            if gnorm <= grad_tol * scale:
                status = "Converged"
                break
            if t >= t_max:
                status = "MaxTimeReached"
                break

        factor = 0.9 * (tol_step / max(err, 1e-300)) ** 0.2
        h *= min(5.0, max(0.2, factor))
        if h < h_min:
            raise StiffnessFailure(
                f"step size underflowed ({h:.2e} < {h_min:.2e}) at t = {t:.3e}"
            )

    return FlowTrajectory(samples=tuple(samples), terminal=p, status=status,
                          steps=steps)


@dataclass(frozen=True)
class LimitDiagnosis:
    status: str
    kind: str
    q: int
    selection: tuple  # 1-based indices
    lambdas: tuple
    p: int | None
    lambda_min: float | None
    balance_residual: float
    J: float


def classify_limit(X, traj, tol=1e-6):
    """Identify which critical-point family a converged trajectory reached."""
    from .canonical import classify_canonical, reduce_to_canonical
    from .orbit import balance_residual

    if traj.status != "Converged":
        raise InvalidInput(
            f"classify_limit needs a converged trajectory, status is {traj.status}"
        )
    cp, _ = reduce_to_canonical(X, traj.terminal, tol=tol)
    res = classify_canonical(cp)
    return LimitDiagnosis(
        status=traj.status,
        kind=res.kind,
        q=cp.q,
        selection=tuple(i + 1 for i in cp.selection.indices),
        lambdas=tuple(float(v) for v in cp.lambdas),
        p=res.p,
        lambda_min=res.lambda_min_closed_form,
        balance_residual=balance_residual(traj.terminal),
        J=evaluate_J(X, traj.terminal),
    )


def random_balanced_pair(X, k, seed):
    """Random W with S = (W^T W)^{1/2} R, R row-orthonormal: starts on M_0."""
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((X.m, k))
    B = W.T @ W
    evals, evecs = np.linalg.eigh(B)
    root = evecs @ (np.sqrt(np.clip(evals, 0.0, None))[:, None] * evecs.T)
    Q, _ = np.linalg.qr(rng.standard_normal((X.n, k)))
    return FactorPair(W=W, S=root @ Q.T)


def random_pair(X, k, seed):
    rng = np.random.default_rng(seed)
    return FactorPair(
        W=rng.standard_normal((X.m, k)), S=rng.standard_normal((k, X.n))
    )
