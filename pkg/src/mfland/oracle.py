"""Independent numerical checks: dense Hessian, eigh spectrum, finite differences.

Nothing in here knows about closed-form spectra.  The dense matrix is built
column by column from the Hessian action in a frozen coordinate order, so any
closed-form claim elsewhere in the package can be validated against plain
``numpy.linalg.eigh`` on this matrix.
"""

from dataclasses import dataclass

import numpy as np

from .calculus import hessian_apply, second_derivative
from .errors import TooLarge
from .model import TangentPair, evaluate_J, check_pair

MAX_DENSE_DIM = 5000


def flatten_tangent(d):
    """Coordinates of (G, H): G column-major first, then H column-major."""
    return np.concatenate([d.G.flatten(order="F"), d.H.flatten(order="F")])


def unflatten_tangent(v, m, n, k):
    G = v[: m * k].reshape((m, k), order="F")
    H = v[m * k:].reshape((k, n), order="F")
    return TangentPair(G=G, H=H)


@dataclass(frozen=True)
class DenseHessian:
    """Symmetrized dense Hessian in the frozen tangent coordinates.

    ``asymmetry`` is the Frobenius norm of the skew part of the raw
    column-assembled matrix before averaging; for a correct Hessian action it
    sits at rounding level.
    """

    matrix: np.ndarray
    m: int
    n: int
    k: int
    asymmetry: float

    @property
    def dim(self):
        return self.matrix.shape[0]


def dense_hessian(X, p):
    check_pair(X, p)
    m, n, k = X.m, X.n, p.k
    N = k * (m + n)
    if N > MAX_DENSE_DIM:
        raise TooLarge(f"dense Hessian would be {N} x {N} (limit {MAX_DENSE_DIM})")
    A = np.empty((N, N))
    e = np.zeros(N)
    for c in range(N):
        e[c] = 1.0
        A[:, c] = flatten_tangent(hessian_apply(X, p, unflatten_tangent(e, m, n, k)))
        e[c] = 0.0
    asym = float(np.linalg.norm(A - A.T))
    sym = 0.5 * (A + A.T)
    return DenseHessian(matrix=sym, m=m, n=n, k=k, asymmetry=asym)


def numeric_spectrum(X, p, hess=None):
    """Eigen-decomposition of the dense Hessian, eigenvalues ascending."""
    if hess is None:
        hess = dense_hessian(X, p)
    evals, evecs = np.linalg.eigh(hess.matrix)
    return evals, evecs


def inertia_from_values(evals, tol):
    """(n_pos, n_neg, n_zero) with |value| <= tol counted as zero."""
    evals = np.asarray(evals, dtype=float)
    n_zero = int(np.count_nonzero(np.abs(evals) <= tol))
    n_pos = int(np.count_nonzero(evals > tol))
    n_neg = int(np.count_nonzero(evals < -tol))
    return (n_pos, n_neg, n_zero)


@dataclass(frozen=True)
class FDReport:
    trials: int
    seed: int
    step_gradient: float
    step_second: float
    max_gradient_rel_err: float
    max_second_rel_err: float

    @property
    def ok(self):
        return self.max_gradient_rel_err < 1e-6 and self.max_second_rel_err < 1e-4


def fd_validate(X, p, seed=0, trials=5, step_gradient=1e-5, step_second=1e-4):
    """Central-difference check of the gradient and the quadratic form.

    Each trial draws a unit-norm tangent direction d and compares
    (J(p + eps d) - J(p - eps d)) / (2 eps) against <grad J, d>, then the
    symmetric second difference against d2 J[d].  Relative errors are taken
    against the analytic value.
    """
    from .calculus import gradient
    from .model import FactorPair, inner

    rng = np.random.default_rng(seed)
    m, n, k = X.m, X.n, p.k
    g = gradient(X, p)
    J0 = evaluate_J(X, p)

    worst_g, worst_h = 0.0, 0.0
    for _ in range(trials):
        G = rng.standard_normal((m, k))
        H = rng.standard_normal((k, n))
        nrm = np.sqrt(np.sum(G * G) + np.sum(H * H))
        d = TangentPair(G=G / nrm, H=H / nrm)

        def J_at(t):
            return evaluate_J(
                X, FactorPair(W=p.W + t * d.G, S=p.S + t * d.H)
            )

        eps = step_gradient
        fd1 = (J_at(eps) - J_at(-eps)) / (2 * eps)
        an1 = inner(g, d)
        worst_g = max(worst_g, abs(fd1 - an1) / max(abs(an1), 1e-12))

        t = step_second
        fd2 = (J_at(t) - 2 * J0 + J_at(-t)) / (t * t)
        an2 = second_derivative(X, p, d)
        worst_h = max(worst_h, abs(fd2 - an2) / max(abs(an2), 1e-12))

    return FDReport(
        trials=trials,
        seed=seed,
        step_gradient=step_gradient,
        step_second=step_second,
        max_gradient_rel_err=float(worst_g),
        max_second_rel_err=float(worst_h),
    )
