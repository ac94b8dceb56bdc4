"""Closed-form Hessian spectra at the canonical and balanced critical points.

At a scaled canonical point (a W_c, a^-1 S_c) the Hessian block-diagonalizes
over an adapted tangent basis built from outer products of singular vectors.
Every block is either 1 x 1 or a symmetric 2 x 2 coupling one left direction
with one right direction, so all k (m + n) eigenvalues (and unit
eigenvectors) come out exactly.  The 2 x 2 families:

  - sigma_lambda_pair   [[l_j^2/a^2, -s_i], [-s_i, a^2]]   (unselected s_i > 0
        against selected column j); determinant l_j^2 - s_i^2 decides the sign
        of the lower branch.
  - sigma_omega_pair    [[w_l/a^2, -s_i], [-s_i, 0]]       (unselected s_i > 0
        against a kernel row of S with weight w_l = gamma_l^2); the lower
        branch is always negative.
  - selected_cross_pair [[l_s^2/a^2, l_s], [l_s, a^2]]     (determinant zero:
        branches 0 and l_s^2/a^2 + a^2).
  - c0_cross_pair       [[w_l/a^2, g_l], [g_l, a^2]]       (determinant zero:
        branches 0 and w_l/a^2 + a^2).

plus 1 x 1 families for left kernel rows, dead coordinates, and the right
kernel.  Balanced points get their negative eigenvalues in closed form and
the rest from an eigendecomposition restricted to the orthogonal complement.
"""

from dataclasses import dataclass

import numpy as np

from .canonical import (
    CanonicalPoint,
    Selection,
    _tie_tol,
    build_balanced,
    build_canonical,
    first_defect,
    selected_values,
    zero_family_point,
)
from .errors import DimensionError, InvalidInput, InvalidSelection, NotASaddle
from .model import TangentPair

# |value| <= INERTIA_REL * max(1, |largest value|) counts as zero.
INERTIA_REL = 1e-10


@dataclass(frozen=True)
class EigPair:
    """One closed-form (or numerically completed) Hessian eigenpair.

    ``provenance`` names the construction family and its indices; for the
    2 x 2 families ``coupling`` is the ratio of the right-direction to the
    left-direction coefficient in the unit eigenvector, and the two branches
    of one block multiply to -1.
    """

    value: float
    vector: TangentPair
    provenance: str
    coupling: float | None


@dataclass(frozen=True)
class SpectrumReport:
    eigpairs: tuple
    inertia: tuple  # (positive, negative, zero)
    lambda_min: float
    point: object  # the FactorPair the spectrum belongs to

    @property
    def values(self):
        return np.array([e.value for e in self.eigpairs])


def _report(eigpairs, point):
    eigpairs = sorted(eigpairs, key=lambda e: e.value)
    vals = np.array([e.value for e in eigpairs])
    tol = INERTIA_REL * max(1.0, float(np.max(np.abs(vals))))
    inertia = (
        int(np.count_nonzero(vals > tol)),
        int(np.count_nonzero(vals < -tol)),
        int(np.count_nonzero(np.abs(vals) <= tol)),
    )
    return SpectrumReport(
        eigpairs=tuple(eigpairs),
        inertia=inertia,
        lambda_min=float(vals[0]),
        point=point,
    )


def _pair_vectors(p11, p12, p22, rho):
    """Unit eigenvector of [[p11, p12], [p12, p22]] for eigenvalue rho.

    Returns (c_left, c_right).  Of the two analytically equivalent forms the
    better-conditioned one is used; p12 != 0 guarantees both components are
    nonzero.
    """
    cand1 = (p12, rho - p11)
    cand2 = (rho - p22, p12)
    c = cand1 if cand1[0] ** 2 + cand1[1] ** 2 >= cand2[0] ** 2 + cand2[1] ** 2 else cand2
    nrm = np.hypot(c[0], c[1])
    return c[0] / nrm, c[1] / nrm


def _split_pair(p11, p12, p22):
    """Eigenvalues of [[p11, p12], [p12, p22]], stable against cancellation."""
    tr = p11 + p22
    disc = np.hypot(p11 - p22, 2.0 * p12)
    rho_hi = 0.5 * (tr + disc)
    det = p11 * p22 - p12 * p12
    rho_lo = det / rho_hi if rho_hi != 0.0 else 0.5 * (tr - disc)
    return rho_hi, rho_lo


def _canonical_eigpairs(cp, a=1.0):
    """All k (m + n) closed-form eigenpairs at (a W_c, a^-1 S_c)."""
    X, q, k = cp.X, cp.q, cp.k
    m, n, r = X.m, X.n, X.r
    a2 = a * a
    idx = list(cp.selection.indices)
    lam = cp.lambdas
    chosen = set(idx)
    us_r = [i for i in range(r) if i not in chosen]
    us_m = [i for i in range(r, m) if i not in chosen]

    # Adapted bases: rotate the kernel columns of V so that C0 = Y diag(gamma) Z^T
    # becomes diagonal across them.  With q = k there is no C0 and the raw
    # kernel basis serves as zeta.
    if k > q and n > r:
        Y, gs, Zt = np.linalg.svd(cp.C0, full_matrices=True)
        Z = Zt.T
        gamma = np.zeros(k - q)
        gamma[: gs.size] = gs
        zeta = X.V0 @ Y
    else:
        Z = np.eye(k - q)
        gamma = np.zeros(k - q)
        zeta = X.V0
    gtol = 1e-13 * max(1.0, gamma[0] if gamma.size else 0.0)
    omega = gamma**2

    def ztilde(l):
        out = np.zeros(k)
        out[q:] = Z[:, l]
        return out

    G0 = np.zeros((X.m, k))
    H0 = np.zeros((k, X.n))
    out = []

    def single(value, G, H, prov):
        out.append(EigPair(value=float(value), vector=TangentPair(G=G, H=H),
                           provenance=prov, coupling=None))

    def mixed(p11, p12, p22, uG, cG_slot, cH_slot, vH, prov, exact_zero=False):
        """Emit both branches of a 2 x 2 block over (uG cG_slot^T, cH_slot vH^T)."""
        if exact_zero:
            rho_hi, rho_lo = p11 + p22, 0.0
        else:
            rho_hi, rho_lo = _split_pair(p11, p12, p22)
        for rho, tagb in ((rho_lo, "-"), (rho_hi, "+")):
            cl, cr = _pair_vectors(p11, p12, p22, rho)
            out.append(
                EigPair(
                    value=float(rho),
                    vector=TangentPair(
                        G=cl * np.outer(uG, cG_slot),
                        H=cr * np.outer(cH_slot, vH),
                    ),
                    provenance=f"{prov},branch={tagb}",
                    coupling=float(cr / cl),
                )
            )

    ek = np.eye(k)

    # Unselected positive singular values against every column of W / row of S.
    for i in us_r:
        s_i = X.sigma[i]
        u_i, v_i = X.U[:, i], X.V[:, i]
        for j in range(q):
            mixed(lam[j] ** 2 / a2, -s_i, a2, u_i, ek[j], ek[j], v_i,
                  f"sigma_lambda_pair(i={i},j={j})")
        for l in range(k - q):
            mixed(omega[l] / a2, -s_i, 0.0, u_i, ztilde(l), ztilde(l), v_i,
                  f"sigma_omega_pair(i={i},l={l})")

    # Left kernel rows (sigma_i = 0) only feel S S^T.
    for i in us_m:
        u_i = X.U[:, i]
        for j in range(q):
            single(lam[j] ** 2 / a2, np.outer(u_i, ek[j]), H0,
                   f"left_kernel_lambda(i={i},j={j})")
        for l in range(k - q):
            single(omega[l] / a2, np.outer(u_i, ztilde(l)), H0,
                   f"left_kernel_omega(i={i},l={l})")

    # Selected columns coupled with selected rows and with the C0 block.
    for j in range(q):
        ub_j = X.U[:, idx[j]]
        for s in range(q):
            if lam[s] > 0:
                vb_s = X.V[:, idx[s]]
                mixed(lam[s] ** 2 / a2, lam[s], a2, ub_j, ek[s], ek[j], vb_s,
                      f"selected_cross_pair(j={j},s={s})", exact_zero=True)
            else:
                single(0.0, np.outer(ub_j, ek[s]), H0,
                       f"zero_lambda_column(j={j},s={s})")
        for l in range(n - r):
            if l < k - q and gamma[l] > gtol:
                mixed(omega[l] / a2, gamma[l], a2, ub_j, ztilde(l), ek[j],
                      zeta[:, l], f"c0_cross_pair(j={j},l={l})",
                      exact_zero=True)
            else:
                single(a2, G0, np.outer(ek[j], zeta[:, l]),
                       f"right_kernel_selected(j={j},l={l})")
        for l in range(k - q):
            if gamma[l] <= gtol:
                single(0.0, np.outer(ub_j, ztilde(l)), H0,
                       f"c0_dead_coord(j={j},l={l})")

    # Rows of S carried by the zero columns of W never feel the Hessian.
    for lp in range(k - q):
        zt = ztilde(lp)
        for s in range(q):
            if lam[s] > 0:
                single(0.0, G0, np.outer(zt, X.V[:, idx[s]]),
                       f"right_kernel_null(l={lp},s={s})")
        for l in range(n - r):
            single(0.0, G0, np.outer(zt, zeta[:, l]),
                   f"right_kernel_null(l={lp},z={l})")

    assert len(out) == k * (m + n), (len(out), k * (m + n))
    return out


def spectrum_zero_family(X, C0, k):
    """Spectrum at the zero-family point (0, C0^T V0^T)."""
    cp = zero_family_point(X, np.asarray(C0, dtype=float), k)
    return _report(_canonical_eigpairs(cp, a=1.0), cp.materialize())


def spectrum_full_rank_scaled(X, sel, a=1.0):
    """Spectrum at (a W_c, a^-1 S_c) for a full-rank selection (q = k)."""
    if a == 0 or not np.isfinite(a):
        raise InvalidInput(f"scale must be a nonzero finite number, got {a}")
    if sel.q < 1:
        raise InvalidSelection("full-rank spectrum needs a nonempty selection")
    cp = build_canonical(X, sel, k=sel.q)
    return _report(_canonical_eigpairs(cp, a=a), cp.materialize(scale=a))


def spectrum_deficient_rank(cp):
    """Spectrum at a canonical point with 1 <= q < k (arbitrary C0)."""
    if not isinstance(cp, CanonicalPoint):
        raise InvalidInput("spectrum_deficient_rank expects a CanonicalPoint")
    if not (1 <= cp.q < cp.k):
        raise InvalidSelection(
            f"deficient-rank spectrum needs 1 <= q < k, got q={cp.q}, k={cp.k}"
        )
    return _report(_canonical_eigpairs(cp, a=1.0), cp.materialize())


def spectrum_balanced(X, sel, k):
    """Spectrum at the balanced point: closed-form negative part, numeric rest.

    The negative eigenvalues all couple an unselected positive singular value
    s_i either with a selected column (value lambda_j - s_i when that is
    negative) or with an unused column of W (value -s_i); their eigenvectors
    are (u_i e^T, e v_i^T) / sqrt(2).  The nonnegative part is completed with
    a dense eigendecomposition on the orthogonal complement.
    """
    from .oracle import dense_hessian, flatten_tangent, unflatten_tangent

    p = build_balanced(X, sel, k)
    q = sel.q
    lam = selected_values(X, sel)
    tie = _tie_tol(X)
    chosen = set(sel.indices)
    ek = np.eye(k)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)

    neg = []
    for i in [i for i in range(X.r) if i not in chosen]:
        s_i = X.sigma[i]
        u_i, v_i = X.U[:, i], X.V[:, i]
        for j in range(q):
            if s_i - lam[j] > tie:
                neg.append(
                    EigPair(
                        value=float(lam[j] - s_i),
                        vector=TangentPair(
                            G=inv_sqrt2 * np.outer(u_i, ek[j]),
                            H=inv_sqrt2 * np.outer(ek[j], v_i),
                        ),
                        provenance=f"balanced_sigma_lambda_pair(i={i},j={j})",
                        coupling=1.0,
                    )
                )
        for l in range(q, k):
            neg.append(
                EigPair(
                    value=float(-s_i),
                    vector=TangentPair(
                        G=inv_sqrt2 * np.outer(u_i, ek[l]),
                        H=inv_sqrt2 * np.outer(ek[l], v_i),
                    ),
                    provenance=f"balanced_sigma_pair(i={i},l={l})",
                    coupling=1.0,
                )
            )

    hess = dense_hessian(X, p)
    N = hess.dim
    eig = list(neg)
    if neg:
        Ncols = np.column_stack([flatten_tangent(e.vector) for e in neg])
        Qfull, _ = np.linalg.qr(Ncols, mode="complete")
        B = Qfull[:, len(neg):]
    else:
        B = np.eye(N)
    evals, evecs = np.linalg.eigh(B.T @ hess.matrix @ B)
    lifted = B @ evecs
    for c in range(evals.size):
        eig.append(
            EigPair(
                value=float(evals[c]),
                vector=unflatten_tangent(lifted[:, c], X.m, X.n, k),
                provenance="numeric_complement",
                coupling=None,
            )
        )
    return _report(eig, p)


def lambda_min_closed_form(X, sel, k, C0=None, a=1.0):
    """Smallest Hessian eigenvalue at a scaled canonical point, in closed form.

    Negative eigenvalues only arise from the two mixed families, so the
    minimum is the worse of (evaluated at the largest unselected singular
    value s):

        sigma_omega branch:   w/(2 a^2) - sqrt(s^2 + (w/(2 a^2))^2)
        sigma_lambda branch:  -(s^2 - l^2) / (l^2/(2 a^2) + a^2/2
                                + sqrt(s^2 + (l^2/(2 a^2) - a^2/2)^2))

    with w the smallest eigenvalue of C0^T C0 and l the smallest selected
    value.  Raises NotASaddle when no negative direction exists.
    """
    if a == 0 or not np.isfinite(a):
        raise InvalidInput(f"scale must be a nonzero finite number, got {a}")
    if sel is None:
        sel = Selection(())
    q = sel.q
    if q == X.m:
        raise NotASaddle("every singular value is selected; the point is a minimum")
    sigma_dag = max(
        float(X.sigma[i]) for i in range(X.m) if i not in set(sel.indices)
    )
    maximal = (first_defect(X, sel) is None) if q else False
    a2 = a * a

    terms = []
    if q < k:
        if C0 is None:
            w_min = 0.0
        else:
            C0 = np.asarray(C0, dtype=float)
            gs = np.linalg.svd(C0, compute_uv=False) if C0.size else np.zeros(0)
            w_min = float(gs[-1] ** 2) if gs.size >= k - q else 0.0
        half = w_min / (2.0 * a2)
        terms.append(half - np.hypot(sigma_dag, half))
    if q >= 1 and not maximal:
        l2 = float(selected_values(X, sel)[-1]) ** 2
        lo = l2 / (2.0 * a2) - 0.5 * a2
        denom = l2 / (2.0 * a2) + 0.5 * a2 + np.hypot(sigma_dag, lo)
        terms.append(-(sigma_dag**2 - l2) / denom)
    if not terms:
        raise NotASaddle(
            "maximal full-rank selection: the canonical point is a minimum"
        )
    return float(min(terms))


def lambda_min_balanced(X, sel, k):
    """Closed-form smallest eigenvalue at a balanced strict saddle."""
    q = sel.q
    lam = selected_values(X, sel)
    if np.any(lam <= 0) or q > min(k, X.r):
        raise InvalidSelection("balanced points need positive selected values")
    maximal = first_defect(X, sel) is None
    if q == min(k, X.r):
        if maximal:
            raise NotASaddle("maximal balanced point is a global minimum")
        sigma_dag = max(
            float(X.sigma[i]) for i in range(X.m) if i not in set(sel.indices)
        )
        return float(lam[-1] - sigma_dag)
    sigma_dag = max(
        float(X.sigma[i]) for i in range(X.m) if i not in set(sel.indices)
    )
    return float(-sigma_dag)
