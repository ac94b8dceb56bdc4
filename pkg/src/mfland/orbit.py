"""The GL(k) orbit action L_A(W, S) = (W A, A^{-1} S) and its invariants.

J is constant along orbits, so the action transports critical points to
critical points; the composition law is L_A(L_B(p)) = L_{BA}(p).  As an
operator on tangent pairs L_A has norm max(s_max(A), 1/s_min(A)) >= 1,
with equality exactly for orthogonal A.  The Hessians at p and L_A(p) are
congruent (inertia is preserved) and the minimum eigenvalue obeys

    lambda_min(L_A p) <= lambda_min(p) / ||L_A||^2

for saddle points, which is how negative curvature flattens when points are
pushed far out along their orbit.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInput, SingularGroupElement
from .model import FactorPair, TangentPair, _freeze


@dataclass(frozen=True)
class GroupElement:
    """An invertible k x k matrix with its inverse cached at construction."""

    A: np.ndarray
    A_inv: np.ndarray

    @classmethod
    def from_matrix(cls, A):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise SingularGroupElement(f"group elements are square, got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise SingularGroupElement("group element contains non-finite entries")
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] <= 0 or sv[0] / sv[-1] > 1e14:
            raise SingularGroupElement(
                f"matrix is singular to working precision (cond ~ "
                f"{np.inf if sv[-1] == 0 else sv[0] / sv[-1]:.2e})"
            )
        A_inv = np.linalg.solve(A, np.eye(A.shape[0]))
        g = cls(A=_freeze(A.copy()), A_inv=_freeze(A_inv))
        cond = sv[0] / sv[-1]
        err = np.linalg.norm(A @ A_inv - np.eye(A.shape[0]))
        if err > 1e-10 * cond:
            raise SingularGroupElement(
                f"inversion residual {err:.2e} exceeds 1e-10 * cond = {1e-10 * cond:.2e}"
            )
        return g

    @classmethod
    def identity(cls, k):
        return cls(A=_freeze(np.eye(k)), A_inv=_freeze(np.eye(k)))

    @property
    def k(self):
        return self.A.shape[0]

    def inverse(self):
        return GroupElement(A=self.A_inv, A_inv=self.A)

    def cond(self):
        sv = np.linalg.svd(self.A, compute_uv=False)
        return float(sv[0] / sv[-1])


def apply_group_action(p, g):
    """L_A(W, S) = (W A, A^{-1} S)."""
    if p.k != g.k:
        raise InvalidInput(f"group element is {g.k} x {g.k} but the pair has k = {p.k}")
    return FactorPair(W=p.W @ g.A, S=g.A_inv @ p.S)


def push_tangent(d, g):
    """The differential of L_A (same linear formula as the action itself)."""
    return TangentPair(G=d.G @ g.A, H=g.A_inv @ d.H)


def push_gradient(d, g):
    """Gradient transport: grad J(L_A p) = (G A^{-T}, A^T H) for (G, H) = grad J(p)."""
    return TangentPair(G=d.G @ g.A_inv.T, H=g.A.T @ d.H)


def induced_norm(g):
    """Operator norm of L_A on tangent pairs: max(s_max(A), 1/s_min(A))."""
    sv = np.linalg.svd(g.A, compute_uv=False)
    return float(max(sv[0], 1.0 / sv[-1]))


def transported_lambda_min_bound(lambda_min_at_p, g):
    """Upper bound lambda_min(p) / ||L_A||^2 for the transported saddle."""
    nrm = induced_norm(g)
    return float(lambda_min_at_p) / (nrm * nrm)


def action_matrix(g, m, n):
    """Dense matrix of L_A on flattened tangents (G column-major, then H).

    Useful for realizing Hessian congruence explicitly:
    dense(L_A p) = M^T dense(p) M with M = action_matrix(g.inverse(), m, n).
    """
    k = g.k
    return scipy.linalg.block_diag(
        np.kron(g.A.T, np.eye(m)), np.kron(np.eye(n), g.A_inv)
    )


def balance_residual(p, C=None):
    """|| W^T W - S S^T - C ||_F; with C = 0 this is the conserved quantity
    of gradient flow, and a zero value places p in the balanced set."""
    if C is None:
        C = np.zeros((p.k, p.k))
    else:
        C = np.asarray(C, dtype=float)
        if C.shape != (p.k, p.k):
            raise InvalidInput(f"C must be {p.k} x {p.k}, got {C.shape}")
        if not np.allclose(C, C.T, atol=1e-12, rtol=0.0):
            raise InvalidInput("C must be symmetric")
    return float(np.linalg.norm(p.W.T @ p.W - p.S @ p.S.T - C))


def inertia_of(X, p, zero_tol=None):
    """Numerical inertia (n_pos, n_neg, n_zero) of the dense Hessian at p."""
    from .oracle import dense_hessian, inertia_from_values

    evals = np.linalg.eigvalsh(dense_hessian(X, p).matrix)
    if zero_tol is None:
        zero_tol = 1e-8 * max(1.0, float(np.max(np.abs(evals))))
    return inertia_from_values(evals, zero_tol)


def intersect_M0(cp):
    """Group element carrying a canonical point into the balanced set M_0.

    One exists exactly when every selected singular value is positive and C0
    vanishes; then A = blockdiag(sqrt(diag(lambda)), I) gives
    W^T W - S S^T = 0 at L_A(p).  Returns None when the orbit misses M_0.
    """
    lam = cp.lambdas
    if np.any(lam <= 0):
        return None
    if cp.C0.size and np.linalg.norm(cp.C0) > 1e-12:
        return None
    A = scipy.linalg.block_diag(np.diag(np.sqrt(lam)), np.eye(cp.k - cp.q))
    return GroupElement.from_matrix(A)
