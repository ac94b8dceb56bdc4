"""Self-contained invariant checks, runnable against any data matrix.

Each check returns (name, passed, detail).  ``run_all`` executes the whole
battery, optionally in a thread pool sized by the MFLAND_THREADS environment
variable, and is what the command-line ``verify`` subcommand calls.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import (
    GroupElement,
    Selection,
    TangentPair,
    action_matrix,
    apply_group_action,
    balance_residual,
    build_balanced,
    build_canonical,
    build_zero_family,
    dense_hessian,
    evaluate_J,
    fd_validate,
    flatten_tangent,
    gradient,
    gradient_norm,
    hessian_apply,
    induced_norm,
    inertia_of,
    integrate_flow,
    intersect_M0,
    lambda_min_closed_form,
    load_data_matrix,
    numeric_spectrum,
    push_gradient,
    push_tangent,
    random_balanced_pair,
    random_pair,
    second_derivative,
    spectrum_balanced,
    spectrum_deficient_rank,
    spectrum_full_rank_scaled,
    spectrum_zero_family,
    transported_lambda_min_bound,
)


def _default_X(seed):
    rng = np.random.default_rng(seed)
    return load_data_matrix(rng.standard_normal((4, 6)))


def _random_group(k, rng, cond_max=50.0):
    while True:
        A = rng.standard_normal((k, k))
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] > 0 and sv[0] / sv[-1] <= cond_max:
            return GroupElement.from_matrix(A)


def _pair_err(a, b):
    # Works for factor pairs (W, S) and tangent pairs (G, H) alike.
    xa, ya = (a.G, a.H) if hasattr(a, "G") else (a.W, a.S)
    xb, yb = (b.G, b.H) if hasattr(b, "G") else (b.W, b.S)
    return float(np.sqrt(np.linalg.norm(xa - xb) ** 2 + np.linalg.norm(ya - yb) ** 2))


def check_svd_conventions(X, seed):
    errs = []
    errs.append(X.reconstruction_error() <= 1e-10 * max(1.0, np.linalg.norm(X.X)))
    errs.append(X.m <= X.n)
    errs.append(np.all(np.diff(X.sigma) <= 0) and np.all(X.sigma[X.r:] == 0.0))
    errs.append(np.allclose(X.U.T @ X.U, np.eye(X.m), atol=1e-12))
    errs.append(np.allclose(X.V.T @ X.V, np.eye(X.n), atol=1e-12))
    return all(errs), f"reconstruction={X.reconstruction_error():.2e}"


def check_finite_differences(X, seed):
    p = random_pair(X, min(2, X.m), seed)
    rep = fd_validate(X, p, seed=seed, trials=5)
    ok = rep.max_gradient_rel_err < 1e-6 and rep.max_second_rel_err < 1e-4
    return ok, (
        f"grad={rep.max_gradient_rel_err:.2e} second={rep.max_second_rel_err:.2e}"
    )


def check_hessian_symmetry(X, seed):
    rng = np.random.default_rng(seed)
    k = min(2, X.m)
    p = random_pair(X, k, seed)
    h = dense_hessian(X, p)
    d1 = TangentPair(G=rng.standard_normal((X.m, k)), H=rng.standard_normal((k, X.n)))
    d2 = TangentPair(G=rng.standard_normal((X.m, k)), H=rng.standard_normal((k, X.n)))
    lhs = float(np.sum(flatten_tangent(hessian_apply(X, p, d1)) * flatten_tangent(d2)))
    rhs = float(np.sum(flatten_tangent(d1) * flatten_tangent(hessian_apply(X, p, d2))))
    ok = h.asymmetry < 1e-10 and abs(lhs - rhs) < 1e-9 * max(1.0, abs(lhs))
    return ok, f"asymmetry={h.asymmetry:.2e} bilinear={abs(lhs - rhs):.2e}"


def check_families_critical(X, seed):
    rng = np.random.default_rng(seed)
    k = min(2, X.m)
    pts = [build_zero_family(X, rng.standard_normal((X.n - X.r, k)), k)]
    sel = Selection((0,))
    pts.append(build_canonical(X, sel, k, C0=rng.standard_normal((X.n - X.r, k - 1))).materialize())
    if X.sigma[0] > 0:
        pts.append(build_balanced(X, sel, k))
    worst = max(gradient_norm(X, p) for p in pts)
    scale = max(1.0, float(np.linalg.norm(X.X)))
    return worst <= 1e-10 * scale, f"worst gradient norm {worst:.2e}"


def check_degenerate_directions(X, seed):
    rng = np.random.default_rng(seed)
    k = min(2, X.m)
    p = build_canonical(X, Selection((0,)), k).materialize()
    worst = 0.0
    for _ in range(5):
        K = rng.standard_normal((k, k))
        d = TangentPair(G=p.W @ K, H=-K @ p.S)
        nrm2 = d.norm() ** 2
        if nrm2 > 0:
            worst = max(worst, abs(second_derivative(X, p, d)) / nrm2)
    return worst <= 1e-10, f"worst |d2J|/||d||^2 = {worst:.2e}"


def check_spectra_match_oracle(X, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    cases = []
    k = min(2, X.m)
    cases.append(spectrum_zero_family(X, rng.standard_normal((X.n - X.r, k)), k))
    cases.append(spectrum_full_rank_scaled(X, Selection((0,)), a=1.5))
    if k > 1:
        cp = build_canonical(X, Selection((1,)), k, C0=rng.standard_normal((X.n - X.r, k - 1)))
        cases.append(spectrum_deficient_rank(cp))
    cases.append(spectrum_balanced(X, Selection((0,)), k))
    for rep in cases:
        ev, _ = numeric_spectrum(X, rep.point)
        worst = max(worst, float(np.max(np.abs(np.sort(rep.values) - ev))))
    return worst < 1e-8, f"worst |closed - numeric| = {worst:.2e}"


def check_eigpair_quality(X, seed):
    rng = np.random.default_rng(seed)
    k = min(2, X.m)
    cp = build_canonical(X, Selection((0,)), k,
                         C0=rng.standard_normal((X.n - X.r, k - 1)))
    rep = (spectrum_deficient_rank(cp) if k > 1
           else spectrum_full_rank_scaled(X, Selection((0,)), a=1.0))
    h = dense_hessian(X, rep.point)
    V = np.column_stack([flatten_tangent(e.vector) for e in rep.eigpairs])
    vals = rep.values
    res = float(np.max(np.linalg.norm(h.matrix @ V - V * vals, axis=0)))
    gram = float(np.max(np.abs(V.T @ V - np.eye(V.shape[1]))))
    count_ok = len(rep.eigpairs) == k * (X.m + X.n)
    # coupled branches of one 2x2 block multiply to -1
    worst_c = 0.0
    by_block = {}
    for e in rep.eigpairs:
        if e.coupling is None:
            continue
        key = e.provenance.split(",branch")[0]
        by_block.setdefault(key, []).append(e.coupling)
    for c in by_block.values():
        if len(c) == 2:
            worst_c = max(worst_c, abs(c[0] * c[1] + 1.0))
    ok = res < 1e-9 and gram < 1e-9 and count_ok and worst_c < 1e-9
    return ok, f"residual={res:.2e} gram={gram:.2e} coupling={worst_c:.2e}"


def _saddle_selection(X):
    """A single-index selection that is a strict saddle at q = k = 1, if any."""
    from .canonical import is_maximal

    sel = Selection((X.m - 1,))
    return sel if X.m > 1 and not is_maximal(X, sel) else None


def check_lambda_min_formulas(X, seed):
    rng = np.random.default_rng(seed)
    k = min(2, X.m)
    worst = 0.0
    C0 = rng.standard_normal((X.n - X.r, k))
    rep = spectrum_zero_family(X, C0, k)
    worst = max(worst, abs(rep.lambda_min - lambda_min_closed_form(X, None, k, C0=C0)))
    sel = _saddle_selection(X)
    if sel is not None:
        for a in (1.0, 2.0):
            rep = spectrum_full_rank_scaled(X, sel, a=a)
            worst = max(worst, abs(rep.lambda_min - lambda_min_closed_form(X, sel, 1, a=a)))
            ev, _ = numeric_spectrum(X, rep.point)
            worst = max(worst, abs(rep.lambda_min - ev[0]))
    return worst < 1e-10, f"worst formula deviation {worst:.2e}"


def check_orbit_identities(X, seed):
    rng = np.random.default_rng(seed)
    k = min(2, X.m)
    p = random_pair(X, k, seed)
    g = _random_group(k, rng)
    pg = apply_group_action(p, g)
    scale = max(1.0, evaluate_J(X, p))
    errs = [abs(evaluate_J(X, p) - evaluate_J(X, pg)) / scale]
    errs.append(_pair_err(push_gradient(gradient(X, p), g), gradient(X, pg)))
    d = TangentPair(G=rng.standard_normal((X.m, k)), H=rng.standard_normal((k, X.n)))
    lhs = hessian_apply(X, pg, d)
    rhs = push_gradient(hessian_apply(X, p, push_tangent(d, g.inverse())), g)
    errs.append(_pair_err(lhs, rhs) / max(1.0, lhs.norm()))
    errs.append(
        abs(second_derivative(X, pg, d)
            - second_derivative(X, p, push_tangent(d, g.inverse())))
        / max(1.0, abs(second_derivative(X, pg, d)))
    )
    g2 = _random_group(k, rng)
    p1 = apply_group_action(apply_group_action(p, g2), g)
    p2 = apply_group_action(p, GroupElement.from_matrix(g2.A @ g.A))
    errs.append(_pair_err(p1, p2))
    worst = max(errs)
    return worst < 1e-8, f"worst identity error {worst:.2e}"


def check_congruence_inertia(X, seed):
    rng = np.random.default_rng(seed)
    k = min(2, X.m)
    cp = build_canonical(X, Selection((X.m - 1,)), k,
                         C0=rng.standard_normal((X.n - X.r, k - 1)))
    p = cp.materialize()
    g = _random_group(k, rng)
    pg = apply_group_action(p, g)
    Hp = dense_hessian(X, p).matrix
    Hq = dense_hessian(X, pg).matrix
    M = action_matrix(g.inverse(), X.m, X.n)
    cong = float(np.linalg.norm(Hq - M.T @ Hp @ M) / max(1.0, np.linalg.norm(Hq)))
    same = inertia_of(X, p) == inertia_of(X, pg, zero_tol=1e-8 * g.cond() ** 2)
    qo, _ = np.linalg.qr(rng.standard_normal((k, k)))
    go = GroupElement.from_matrix(qo)
    e0, _ = numeric_spectrum(X, p)
    e1, _ = numeric_spectrum(X, apply_group_action(p, go))
    orth = float(np.max(np.abs(e0 - e1)))
    norm1 = abs(induced_norm(go) - 1.0)
    ok = cong < 1e-8 and same and orth < 1e-8 and norm1 < 1e-10
    return ok, f"congruence={cong:.2e} inertia={same} orth-transport={orth:.2e}"


def check_lambda_min_bound(X, seed):
    rng = np.random.default_rng(seed)
    sel = _saddle_selection(X)
    if sel is None:
        return True, "skipped: X offers no q = k = 1 strict saddle"
    rep = spectrum_full_rank_scaled(X, sel, a=1.0)
    worst = -np.inf
    for _ in range(5):
        g = _random_group(1, rng)
        bound = transported_lambda_min_bound(rep.lambda_min, g)
        ev, _ = numeric_spectrum(X, apply_group_action(rep.point, g))
        worst = max(worst, float(ev[0]) - bound)
        if induced_norm(g) < 1.0:
            return False, "induced norm fell below 1"
    return worst <= 1e-10, f"worst (actual - bound) = {worst:.2e}"


def check_balanced_set(X, seed):
    sel = Selection((0,))
    k = min(2, X.m)
    cp = build_canonical(X, sel, k)  # C0 = 0
    g = intersect_M0(cp)
    if g is None:
        return False, "intersect_M0 missed a C0 = 0 canonical point"
    bal = apply_group_action(cp.materialize(), g)
    res = balance_residual(bal)
    direct = build_balanced(X, sel, k)
    same = _pair_err(bal, direct)
    rep = spectrum_balanced(X, sel, k)
    ev, _ = numeric_spectrum(X, rep.point)
    dev = float(np.max(np.abs(np.sort(rep.values) - ev)))
    ok = res < 1e-10 and same < 1e-10 and dev < 1e-8
    return ok, f"residual={res:.2e} matches-direct={same:.2e} oracle={dev:.2e}"


def check_scaling_trichotomy(X, seed):
    rng = np.random.default_rng(seed)
    worst_sign = True
    for _ in range(50):
        lam = rng.uniform(0.1, 3.0)
        sig = rng.uniform(0.1, 3.0)
        a = rng.uniform(0.3, 3.0)
        a2 = a * a
        tr = lam**2 / a2 + a2
        disc = np.hypot(lam**2 / a2 - a2, 2 * sig)
        rho_lo = (lam**2 - sig**2) / (0.5 * (tr + disc))
        if lam < sig and not rho_lo < 0:
            worst_sign = False
        if lam > sig and not rho_lo > 0:
            worst_sign = False
    # |lambda_min| shrinks as the scale runs away in either direction
    sel = _saddle_selection(X)
    if sel is None:
        mono = True
    else:
        vals = [abs(lambda_min_closed_form(X, sel, 1, a=a)) for a in (1, 2, 4, 8)]
        mono = all(x > y for x, y in zip(vals, vals[1:]))
    return worst_sign and mono, f"trichotomy={worst_sign} monotone={mono}"


def check_flow_conservation(X, seed):
    k = min(2, X.m)
    out = []
    for p0, label in ((random_balanced_pair(X, k, seed), "balanced"),
                      (random_pair(X, k, seed + 1), "generic")):
        traj = integrate_flow(X, p0, t_max=30.0, grad_tol=1e-9)
        drift = max(s.drift for s in traj.samples)
        Js = [s.J for s in traj.samples]
        mono = all(b <= a + 1e-9 for a, b in zip(Js, Js[1:]))
        out.append((label, drift, mono))
    ok = all(d < 1e-8 and m for _, d, m in out)
    return ok, "; ".join(f"{l}: drift={d:.2e} monotone={m}" for l, d, m in out)


ALL_CHECKS = [
    ("svd_conventions", check_svd_conventions),
    ("finite_differences", check_finite_differences),
    ("hessian_symmetry", check_hessian_symmetry),
    ("families_critical", check_families_critical),
    ("degenerate_directions", check_degenerate_directions),
    ("spectra_match_oracle", check_spectra_match_oracle),
    ("eigpair_quality", check_eigpair_quality),
    ("lambda_min_formulas", check_lambda_min_formulas),
    ("orbit_identities", check_orbit_identities),
    ("congruence_inertia", check_congruence_inertia),
    ("lambda_min_bound", check_lambda_min_bound),
    ("balanced_set", check_balanced_set),
    ("scaling_trichotomy", check_scaling_trichotomy),
    ("flow_conservation", check_flow_conservation),
]


def thread_count():
    raw = os.environ.get("MFLAND_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_all(X=None, seed=0):
    """Run every check; returns a list of dicts in a deterministic order."""
    if X is None:
        X = _default_X(seed)

    def run_one(item):
        name, fn = item
        try:
            passed, detail = fn(X, seed)
        except Exception as exc:  # a crashed check is a failed check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        return {"name": name, "passed": bool(passed), "detail": detail}

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_one, ALL_CHECKS))
    return [run_one(item) for item in ALL_CHECKS]
