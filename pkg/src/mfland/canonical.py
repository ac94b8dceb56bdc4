"""Critical-point families of the factorization objective.

Every critical point of J lies on the GL(k) orbit of a *canonical point*

    W_c = [ U_sel  0 ],   S_c = [ diag(lambda) V_sel^T ; C0^T V0^T ]

where U_sel/V_sel are singular-vector columns picked by a selection of q
singular values (lambda_j = sigma picked, nonincreasing), and the free block
C0 couples the remaining k - q rows of S to the kernel of X.  The q = 0 case
(W = 0) is the zero family, and rescaling the q = k case by the positive
square roots of lambda gives the balanced points with W^T W = S S^T.

This module builds those representatives, classifies them, and inverts the
parametrization: ``reduce_to_canonical`` maps any critical point back to a
canonical point plus the group element connecting them.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .calculus import is_critical
from .errors import (
    DimensionError,
    InvalidSelection,
    NotCritical,
    NumericalFailure,
    RankAmbiguous,
)
from .model import FactorPair, _freeze

# Relative tolerance under which two singular values are treated as tied, so
# that maximality is decided by value rather than by index.
TIE_REL = 1e-9


@dataclass(frozen=True)
class Selection:
    """Strictly increasing 0-based indices into the sorted singular values.

    An empty selection designates the zero family (W = 0).
    """

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 0 for i in idx):
            raise InvalidSelection(f"negative selection index in {idx}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidSelection(f"selection must be strictly increasing: {idx}")
        object.__setattr__(self, "indices", idx)

    @property
    def q(self):
        return len(self.indices)


def _validate_selection(X, sel, k):
    if k < 1 or k > min(X.m, X.n):
        raise InvalidSelection(f"k = {k} outside [1, min(m, n) = {min(X.m, X.n)}]")
    if sel.q > min(k, X.m):
        raise InvalidSelection(
            f"selection has q = {sel.q} > min(k, m) = {min(k, X.m)}"
        )
    if sel.indices and sel.indices[-1] >= X.m:
        raise InvalidSelection(
            f"selection index {sel.indices[-1]} out of range for m = {X.m}"
        )


def selected_values(X, sel):
    """The lambda vector: selected singular values, nonincreasing."""
    return X.sigma[list(sel.indices)] if sel.q else np.zeros(0)


@dataclass(frozen=True)
class CanonicalPoint:
    """A canonical critical point, stored by its discrete data.

    ``C0`` has shape (n - r) x (k - q); it parametrizes the part of S living
    in the kernel of X under the unused rows of W.
    """

    X: object
    selection: Selection
    k: int
    C0: np.ndarray

    def __post_init__(self):
        X, sel, k = self.X, self.selection, self.k
        _validate_selection(X, sel, k)
        C0 = np.asarray(self.C0, dtype=float)
        want = (X.n - X.r, k - sel.q)
        if C0.shape != want:
            raise DimensionError(f"C0 must be {want}, got {C0.shape}")
        object.__setattr__(self, "C0", _freeze(C0))

    @property
    def q(self):
        return self.selection.q

    @property
    def lambdas(self):
        return selected_values(self.X, self.selection)

    def materialize(self, scale=1.0):
        """The factor pair (a W_c, a^-1 S_c) for a scale a != 0."""
        if scale == 0:
            raise InvalidSelection("scale must be nonzero")
        X, q, k = self.X, self.q, self.k
        W = np.zeros((X.m, k))
        S = np.zeros((k, X.n))
        if q:
            idx = list(self.selection.indices)
            W[:, :q] = X.U[:, idx]
            S[:q, :] = self.lambdas[:, None] * X.V[:, idx].T
        if k > q:
            S[q:, :] = self.C0.T @ X.V0.T
        return FactorPair(W=scale * W, S=S / scale)

    def objective_value(self):
        """J at the point: half the unexplained spectral energy."""
        lam = self.lambdas
        return 0.5 * float(np.sum(self.X.sigma**2) - np.sum(lam**2))


def build_canonical(X, sel, k, C0=None):
    """Canonical critical point for a nonempty selection."""
    if sel.q < 1:
        raise InvalidSelection("build_canonical needs at least one selected index")
    _validate_selection(X, sel, k)
    if C0 is None:
        C0 = np.zeros((X.n - X.r, k - sel.q))
    return CanonicalPoint(X=X, selection=sel, k=k, C0=C0)


def build_zero_family(X, C0, k):
    """The zero-family point (0, C0^T V0^T) as a factor pair."""
    return zero_family_point(X, C0, k).materialize()


def zero_family_point(X, C0, k):
    return CanonicalPoint(X=X, selection=Selection(()), k=k, C0=C0)


def build_balanced(X, sel, k):
    """Balanced representative: W = U_sel sqrt(L), S = [sqrt(L) V_sel^T; 0].

    Requires every selected singular value to be positive (q <= min(k, r)),
    otherwise the square-root rescaling is undefined.
    """
    _validate_selection(X, sel, k)
    if sel.q < 1:
        raise InvalidSelection("balanced points need a nonempty selection")
    lam = selected_values(X, sel)
    if np.any(lam <= 0):
        raise InvalidSelection(
            "balanced points require strictly positive selected singular values"
        )
    idx = list(sel.indices)
    root = np.sqrt(lam)
    W = np.zeros((X.m, k))
    S = np.zeros((k, X.n))
    W[:, : sel.q] = X.U[:, idx] * root
    S[: sel.q, :] = root[:, None] * X.V[:, idx].T
    return FactorPair(W=W, S=S)


def _tie_tol(X):
    return TIE_REL * max(1.0, float(X.sigma[0]))


def first_defect(X, sel):
    """Least 0-based position j with lambda_j < sigma_j (value-wise), or None.

    Comparisons use a tie tolerance so equal-up-to-rounding singular values
    never produce a spurious defect.
    """
    lam = selected_values(X, sel)
    tol = _tie_tol(X)
    for j in range(sel.q):
        if X.sigma[j] - lam[j] > tol:
            return j
    return None


def is_maximal(X, sel):
    """True when the selection picks the q largest singular values by value."""
    return first_defect(X, sel) is None


def strict_saddle_test(X, sel):
    """For a full-rank selection (q = k): is the canonical point a saddle?"""
    return not is_maximal(X, sel)


@dataclass(frozen=True)
class ClassificationResult:
    kind: str  # "GlobalMinimum" | "StrictSaddle"
    p: int | None  # 1-based least defect position, None when maximal
    lambda_min_closed_form: float | None
    maximal: bool


def classify_canonical(cp):
    """Second-order type of a canonical point, with closed-form lambda_min.

    Global minima are exactly q = m, or q = k < m with a maximal selection.
    Everything else is a strict saddle.
    """
    from .spectrum import lambda_min_closed_form

    X = cp.X
    defect = first_defect(X, cp.selection) if cp.q else 0
    maximal = defect is None if cp.q else False
    if cp.q == X.m or (cp.q == cp.k and maximal):
        return ClassificationResult(
            kind="GlobalMinimum", p=None, lambda_min_closed_form=None,
            maximal=True,
        )
    lam_min = lambda_min_closed_form(X, cp.selection, cp.k, C0=cp.C0)
    p = None if maximal else defect + 1
    return ClassificationResult(
        kind="StrictSaddle", p=p, lambda_min_closed_form=lam_min, maximal=maximal,
    )


def _sigma_groups(X):
    """Indices 0..m-1 grouped by tied singular value, in descending order."""
    tol = _tie_tol(X)
    groups = []
    start = 0
    for i in range(1, X.m + 1):
        if i == X.m or X.sigma[start] - X.sigma[i] > tol:
            groups.append(list(range(start, i)))
            start = i
    return groups


def _polar_orthogonal(M):
    u, _, vt = np.linalg.svd(M)
    return u @ vt


def reduce_to_canonical(X, p, tol=1e-8):
    """Express a critical point p as L_A of a canonical point.

    Returns ``(cp, g)`` with ``p approx (W_c A, A^{-1} S_c)``.  The rank of W
    is read off its singular values at relative threshold ``tol``; values
    within a factor of 10 of the threshold raise RankAmbiguous.  A final
    reconstruction residual above 1e-8 * max(1, ||p||) raises
    NumericalFailure (this can happen for critical points whose column space
    cuts across a repeated-sigma eigenspace in a basis incompatible with the
    stored SVD).
    """
    from .orbit import GroupElement

    if not is_critical(X, p, tol):
        raise NotCritical(
            "reduce_to_canonical requires a critical point "
            f"(gradient norm {np.round(_grad_norm(X, p), 3)})"
        )
    W, S, k = p.W, p.S, p.k
    m, n, r = X.m, X.n, X.r

    sW = np.linalg.svd(W, compute_uv=False)
    wmax = float(sW[0]) if sW.size else 0.0
    if wmax <= tol * max(1.0, p.norm()):
        q = 0
    else:
        lo = int(np.count_nonzero(sW > 10 * tol * wmax))
        hi = int(np.count_nonzero(sW > 0.1 * tol * wmax))
        if lo != hi:
            raise RankAmbiguous(
                f"rank of W ambiguous at tolerance {tol}: between {lo} and {hi}",
                candidates=(lo, hi),
            )
        q = lo

    if q == 0:
        C0 = X.V0.T @ S.T
        cp = zero_family_point(X, C0, k)
        g = GroupElement.identity(k)
        _check_reduction(X, p, cp, g, tol)
        return cp, g

    # (i) a well-conditioned column basis of W via pivoted QR.
    _, R_qr, perm = scipy.linalg.qr(W, pivoting=True, mode="economic")
    P = np.eye(k)[:, perm]
    F = scipy.linalg.solve_triangular(R_qr[:q, :q], R_qr[:q, q:])
    What = W[:, perm[:q]]

    # (ii) orthonormalize: What = Uh diag(sh) Vht.
    Uh, sh, Vht = np.linalg.svd(What, full_matrices=False)

    # (iii) align Uh with the stored left singular vectors, one tied group of
    # sigmas at a time; record which indices the column space occupies.
    rot_cols, R_blocks, sel_idx = [], [], []
    for g_idx in _sigma_groups(X):
        B = X.U[:, g_idx].T @ Uh
        Y, sv, _ = np.linalg.svd(B)
        d = int(np.count_nonzero(sv > 0.5))
        if d == 0:
            continue
        grp_rot = X.U[:, g_idx] @ Y[:, :d]
        rot_cols.append(grp_rot)
        # Inside a tied group any subset of columns carries the same value, so
        # pick the d fixed columns the rotated subspace actually lies along
        # (largest projections); for on-orbit inputs these are exact 0/1.
        row_weight = np.linalg.norm(B, axis=1)
        chosen = sorted(np.argsort(-row_weight)[:d])
        chosen = [g_idx[c] for c in chosen]
        sel_idx.extend(chosen)
        R_blocks.append(_polar_orthogonal(X.U[:, chosen].T @ grp_rot))
    if sum(b.shape[1] for b in rot_cols) != q:
        raise NumericalFailure(
            "column space of W does not split along the singular subspaces of X"
        )
    U_rot = np.hstack(rot_cols)
    Q = _polar_orthogonal(U_rot.T @ Uh)

    # (iv) peel the invertible change of basis accumulated so far.
    SV = sh[:, None] * Vht
    C_full = np.block(
        [[SV, SV @ F], [np.zeros((k - q, q)), np.eye(k - q)]]
    ) @ P.T
    D = scipy.linalg.block_diag(Q, np.eye(k - q))
    A1 = D @ C_full
    S2 = A1 @ S

    # (v) absorb the mixed block of S2 with a unipotent factor, read off C0.
    lam = X.sigma[sel_idx]
    pos = lam > 0
    Sb = S2[q:, :]
    Cbar = np.zeros((q, k - q))
    if np.any(pos):
        V_rot_pos = (X.X.T @ U_rot[:, pos]) / lam[pos]
        Cbar[pos, :] = V_rot_pos.T @ Sb.T
    C0 = X.V0.T @ Sb.T
    inv_lam = np.divide(1.0, lam, out=np.zeros_like(lam), where=pos)
    E = np.eye(k)
    E[q:, :q] = -Cbar.T * inv_lam

    # (vi) fold the within-group rotation into A so the canonical point uses
    # the stored singular-vector basis.
    R = scipy.linalg.block_diag(*R_blocks) if R_blocks else np.eye(q)
    R_tilde = scipy.linalg.block_diag(R, np.eye(k - q))
    A = R_tilde @ E @ A1

    cp = CanonicalPoint(X=X, selection=Selection(tuple(sel_idx)), k=k, C0=C0)
    g = GroupElement.from_matrix(A)
    _check_reduction(X, p, cp, g, tol)
    return cp, g


def _grad_norm(X, p):
    from .calculus import gradient_norm

    return gradient_norm(X, p)


def _check_reduction(X, p, cp, g, tol):
    pc = cp.materialize()
    scale = max(1.0, p.norm())
    err = np.sqrt(
        np.linalg.norm(pc.W @ g.A - p.W) ** 2
        + np.linalg.norm(g.A_inv @ pc.S - p.S) ** 2
    )
    if err > 1e-8 * scale:
        raise NumericalFailure(
            f"orbit reconstruction residual {err:.3e} exceeds "
            f"{1e-8 * scale:.3e}; the point may not be expressible in the "
            "stored singular-vector basis"
        )
