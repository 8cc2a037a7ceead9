"""Numerical certification of the compatibility equations.

Three layers of checks on a dataset: pointwise operator algebra (symmetry,
the four sum rules, the four product rules, the rank condition), the three
covariant-derivative relations tying the operators to the second
fundamental form and the bundle connection, and the Gauss, Codazzi and
Ricci equations with both curvature tensors obtained by finite differences
of the metric and of the bundle connection coefficients.

All residuals are reported in the orthonormal gauge (every tangent slot
contracted with the Gram-Schmidt frame), so the numbers are invariant
under chart-coordinate scalings and E-frame rotations.  The fourth
derivative relation is the exact metric adjoint of the second once the
adjoint operators are derived rather than stored; its residual field
equals the transposed residual of that relation and is reported under its
own key for completeness.
"""

import numpy as np

from .dataset import (
    CompatReport,
    GeometricDataset,
    christoffels,
    frame_inverse,
    orthonormal_projections,
    resolve_profile,
    tangent_frame,
)
from .errors import DimensionError
from .grid import d_du, d_dv

__all__ = [
    "check_algebraic",
    "check_differential",
    "check_curvature_equations",
    "compatibility_verdict",
    "algebraic_residual_fields",
    "gauss_curvature",
    "normal_curvature",
    "riemann_tensor",
]

ALGEBRAIC_KEYS = ("sym_f", "sym_t", "(1.0)_f", "(1.0)_t", "(1.0)_s", "(1.0)_h",
                  "(1.1)", "(1.2)", "(1.3)", "(1.4)", "rank")
DIFFERENTIAL_KEYS = ("(2.1)", "(2.2)", "(2.3)", "(2.4)")
CURVATURE_KEYS = ("(G)", "(C)", "(R)")


def _specnorm(stack):
    """Largest singular value over the trailing two axes."""
    return np.linalg.svd(stack, compute_uv=False)[..., 0]


def _fro(stack, naxes):
    """Frobenius norm over the trailing ``naxes`` axes."""
    axes = tuple(range(-naxes, 0))
    return np.sqrt(np.sum(stack * stack, axis=axes))


def _diff_stack(field, chart):
    return np.stack([d_du(field, chart), d_dv(field, chart)])


# ---------------------------------------------------------------------------
# algebraic layer
# ---------------------------------------------------------------------------

def _general_frame(g):
    """Inverse-transpose Cholesky frame for base dimension other than two."""
    chol = np.linalg.cholesky(g)
    return np.linalg.inv(np.swapaxes(chol, -1, -2))


def algebraic_residual_fields(g, f, h, t):
    """Residual fields of the algebraic relations for raw operator stacks.

    ``f`` (m, ..., n, n), ``h`` (m, ..., d, n), ``t`` (m, ..., d, d) over an
    arbitrary leading shape, metric ``g`` (..., n, n); adjoints are derived
    internally.  Shared by the dataset checks and by the operators coming
    out of the complex-structure dictionary.
    """
    g = np.asarray(g, dtype=float)
    f = np.asarray(f, dtype=float)
    h = np.asarray(h, dtype=float)
    t = np.asarray(t, dtype=float)
    p = tangent_frame(g) if g.shape[-1] == 2 else _general_frame(g)
    fhat = np.einsum("...bp,...bc,i...cd,...dq->i...pq", p, g, f, p)
    hhat = np.einsum("i...ab,...bq->i...aq", h, p)
    shat = np.swapaxes(hhat, -1, -2)
    m = fhat.shape[0]
    eye_n = np.eye(fhat.shape[-1])
    eye_d = np.eye(t.shape[-1])

    res = {
        "sym_f": _specnorm(fhat - np.swapaxes(fhat, -1, -2)).max(axis=0),
        "sym_t": _specnorm(t - np.swapaxes(t, -1, -2)).max(axis=0),
        "(1.0)_f": _specnorm(fhat.sum(axis=0) - eye_n),
        "(1.0)_t": _specnorm(t.sum(axis=0) - eye_d),
        "(1.0)_s": _specnorm(shat.sum(axis=0)),
        "(1.0)_h": _specnorm(hhat.sum(axis=0)),
    }
    worst = {k: None for k in ("(1.1)", "(1.2)", "(1.3)", "(1.4)")}
    for i in range(m):
        for j in range(m):
            delta = 1.0 if i == j else 0.0
            pairs = (
                ("(1.1)", fhat[i] @ fhat[j] + shat[i] @ hhat[j] - delta * fhat[i]),
                ("(1.2)", t[i] @ t[j] + hhat[i] @ shat[j] - delta * t[i]),
                ("(1.3)", fhat[i] @ shat[j] + shat[i] @ t[j] - delta * shat[i]),
                ("(1.4)", hhat[i] @ fhat[j] + t[i] @ hhat[j] - delta * hhat[i]),
            )
            for key, r in pairs:
                val = _specnorm(r)
                worst[key] = val if worst[key] is None else np.maximum(worst[key], val)
    res.update(worst)
    return res


def check_algebraic(ds: GeometricDataset, profile="default"):
    """Symmetries, sum rules (1.0), product rules (1.1)-(1.4), and ranks."""
    prof = resolve_profile(profile)
    report = CompatReport(profile=prof.name)
    for key, val in algebraic_residual_fields(ds.g, ds.f, ds.h, ds.t).items():
        report.add(key, val, prof.algebraic)
    # rank pi_i = n_i, counting singular values above rank_gap * sigma_max
    pis = orthonormal_projections(ds)
    sv = np.linalg.svd(pis, compute_uv=False)
    counts = np.sum(sv > prof.rank_gap * sv[..., :1], axis=-1)
    expected = np.array([fac.dim for fac in ds.spec.factors])
    rank_res = np.abs(counts - expected[:, None, None]).max(axis=0).astype(float)
    report.add("rank", rank_res, 0.5)
    return report


# ---------------------------------------------------------------------------
# differential layer
# ---------------------------------------------------------------------------

def _weingarten(ds):
    """Operators of every E-frame vector: aop[..., alpha, c, b] = (A_alpha)^c_b."""
    ginv = np.linalg.inv(ds.g)
    return np.einsum("vuce,vuieb->vuicb", ginv, ds.B)


def check_differential(ds: GeometricDataset, profile="default"):
    """Covariant-derivative relations (2.1)-(2.3), plus (2.4) by duality."""
    if ds.n != 2:
        raise DimensionError("differential checks require a 2D chart")
    prof = resolve_profile(profile)
    report = CompatReport(profile=prof.name)
    chart = ds.chart
    gamma = christoffels(ds.g, chart)
    p = tangent_frame(ds.g)
    pinv = frame_inverse(p, ds.g)
    aop = _weingarten(ds)
    conn = np.stack([ds.conn_u, ds.conn_v])
    s_field = ds.s

    worst = {k: None for k in DIFFERENTIAL_KEYS}
    for i in range(ds.m):
        f_i, h_i, t_i, s_i = ds.f[i], ds.h[i], ds.t[i], s_field[i]
        df = _diff_stack(f_i, chart)
        dh = _diff_stack(h_i, chart)
        dt = _diff_stack(t_i, chart)

        r21, r22, r23 = [], [], []
        for a in (0, 1):
            ga = gamma[..., a, :]                      # [c, e] = Gamma^c_{a e}
            cov_f = (
                df[a]
                + np.einsum("vuce,vueb->vucb", ga, f_i)
                - np.einsum("vueb,vuce->vucb", ga, f_i)
            )
            rhs_f = (
                np.einsum("vuxb,vuxc->vucb", h_i, aop[..., a])
                + np.einsum("vucx,vuxb->vucb", s_i, ds.B[:, :, :, a, :])
            )
            r21.append(cov_f - rhs_f)

            cov_h = (
                dh[a]
                + np.einsum("vuxy,vuyb->vuxb", conn[a], h_i)
                - np.einsum("vueb,vuxe->vuxb", ga, h_i)
            )
            rhs_h = (
                np.einsum("vuxy,vuyb->vuxb", t_i, ds.B[:, :, :, a, :])
                - np.einsum("vuxe,vueb->vuxb", ds.B[:, :, :, a, :], f_i)
            )
            r22.append(cov_h - rhs_h)

            cov_t = conn[a] @ t_i - t_i @ conn[a] + dt[a]
            rhs_t = (
                -np.einsum("vuxe,vueg->vuxg", ds.B[:, :, :, :, a], s_i)
                - np.einsum("vuxe,vuge->vuxg", h_i, aop[..., a])
            )
            r23.append(cov_t - rhs_t)

        res21 = np.stack(r21, axis=2)                  # [v, u, a, c, b]
        res22 = np.stack(r22, axis=2)                  # [v, u, a, x, b]
        res23 = np.stack(r23, axis=2)                  # [v, u, a, x, g]
        val21 = _fro(np.einsum("vupc,vuacb,vuaq,vubr->vupqr", pinv, res21, p, p), 3)
        val22 = _fro(np.einsum("vuaxb,vuaq,vubr->vuxqr", res22, p, p), 3)
        val23 = _fro(np.einsum("vuaxg,vuaq->vuxqg", res23, p), 3)
        for key, val in (("(2.1)", val21), ("(2.2)", val22),
                         ("(2.3)", val23), ("(2.4)", val22)):
            worst[key] = val if worst[key] is None else np.maximum(worst[key], val)
    for key in DIFFERENTIAL_KEYS:
        report.add(key, worst[key], prof.differential)
    return report


# ---------------------------------------------------------------------------
# curvature layer
# ---------------------------------------------------------------------------

def riemann_tensor(ds: GeometricDataset):
    """R^d_{cab} of the base metric from finite-differenced Christoffels.

    Index order of the result is [..., d, c, a, b] with
    R(e_a, e_b) e_c = R^d_{cab} e_d.
    """
    gamma = christoffels(ds.g, ds.chart)
    dg = _diff_stack(gamma, ds.chart)                  # [x, v, u, d, a, b]
    x = np.einsum("avudbc->vudcab", dg) + np.einsum("vudae,vuebc->vudcab", gamma, gamma)
    return x - np.swapaxes(x, -1, -2)


def normal_curvature(ds: GeometricDataset):
    """Curvature of the bundle connection on the orthonormal frame bivector."""
    p = tangent_frame(ds.g)
    detp = p[..., 0, 0] * p[..., 1, 1]
    rbar = (
        d_du(ds.conn_v, ds.chart)
        - d_dv(ds.conn_u, ds.chart)
        + ds.conn_u @ ds.conn_v
        - ds.conn_v @ ds.conn_u
    )
    return rbar * detp[..., None, None]


def gauss_curvature(ds: GeometricDataset):
    """Sectional curvature field of the base metric, O(h^2) accurate."""
    r = riemann_tensor(ds)
    w = r[..., :, 1, 0, 1]                             # R(du, dv) dv
    detg = np.linalg.det(ds.g)
    return np.einsum("vud,vud->vu", w, ds.g[..., :, 0]) / detg


def check_curvature_equations(ds: GeometricDataset, profile="default"):
    """Gauss, Codazzi and Ricci residual fields."""
    if ds.n != 2:
        raise DimensionError("curvature checks require a 2D chart")
    prof = resolve_profile(profile)
    report = CompatReport(profile=prof.name)
    chart = ds.chart
    gamma = christoffels(ds.g, chart)
    p = tangent_frame(ds.g)
    pinv = frame_inverse(p, ds.g)
    aop = _weingarten(ds)
    conn = np.stack([ds.conn_u, ds.conn_v])

    # --- Gauss ---
    riem = riemann_tensor(ds)
    rhs = np.zeros_like(riem)
    for i in range(ds.m):
        c = ds.spec.curvatures[i]
        if c != 0.0:
            gf = np.einsum("vuce,vueb->vucb", ds.g, ds.f[i])
            rhs += c * (
                np.einsum("vucb,vuda->vudcab", gf, ds.f[i])
                - np.einsum("vuca,vudb->vudcab", gf, ds.f[i])
            )
    rhs += np.einsum("vuxbc,vuxda->vudcab", ds.B, aop)
    rhs -= np.einsum("vuxac,vuxdb->vudcab", ds.B, aop)
    res_g = np.einsum("vupd,vudcab,vucr,vuaq,vubs->vuprqs", pinv, riem - rhs, p, p, p)
    report.add("(G)", _fro(res_g, 4), prof.curvature)

    # --- Codazzi ---
    db = _diff_stack(ds.B, chart)
    cov_b = []
    for a in (0, 1):
        ga = gamma[..., a, :]
        cov_b.append(
            db[a]
            + np.einsum("vuxy,vuybc->vuxbc", conn[a], ds.B)
            - np.einsum("vueb,vuxec->vuxbc", ga, ds.B)
            - np.einsum("vuec,vuxbe->vuxbc", ga, ds.B)
        )
    cov_b = np.stack(cov_b, axis=2)                    # [v, u, a, x, b, c]
    term = np.einsum("vuaxbc->vuxabc", cov_b)
    res_c = term - np.swapaxes(term, -3, -2)           # antisymmetrize (X, Y)
    for i in range(ds.m):
        c = ds.spec.curvatures[i]
        if c != 0.0:
            gf = np.einsum("vuce,vueb->vucb", ds.g, ds.f[i])
            res_c -= c * (
                np.einsum("vucb,vuxa->vuxabc", gf, ds.h[i])
                - np.einsum("vuca,vuxb->vuxabc", gf, ds.h[i])
            )
    res_c = np.einsum("vuxabc,vuaq,vubr,vucs->vuxqrs", res_c, p, p, p)
    report.add("(C)", _fro(res_c, 4), prof.curvature)

    # --- Ricci ---
    detp = p[..., 0, 0] * p[..., 1, 1]
    rbar = (
        d_du(ds.conn_v, chart) - d_dv(ds.conn_u, chart)
        + ds.conn_u @ ds.conn_v - ds.conn_v @ ds.conn_u
    )
    rhs_r = np.zeros_like(rbar)
    for i in range(ds.m):
        c = ds.spec.curvatures[i]
        if c != 0.0:
            h_i = ds.h[i]
            rhs_r += c * (
                np.einsum("vug,vux->vuxg", h_i[..., 1], h_i[..., 0])
                - np.einsum("vug,vux->vuxg", h_i[..., 0], h_i[..., 1])
            )
    rhs_r += np.einsum("vuxe,vuge->vuxg", ds.B[..., 0], aop[..., 1])
    rhs_r -= np.einsum("vuxe,vuge->vuxg", ds.B[..., 1], aop[..., 0])
    res_r = (rbar - rhs_r) * detp[..., None, None]
    report.add("(R)", _fro(res_r, 2), prof.curvature)
    return report


def compatibility_verdict(ds: GeometricDataset, profile="default"):
    """Aggregate of the three check layers under one tolerance profile."""
    prof = resolve_profile(profile)
    report = check_algebraic(ds, prof)
    if ds.n == 2:
        report.merge(check_differential(ds, prof))
        report.merge(check_curvature_equations(ds, prof))
    return report
