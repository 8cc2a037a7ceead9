"""Complex-structure calculus for surfaces in the product of two unit spheres.

The two product complex structures (rotation by a quarter turn on each
sphere, with matching and with opposite signs) decompose along an immersed
surface into tangent, mixed and normal blocks.  The dictionary back to the
factor-projection operators is

    f1 = (Id + j1 j2 + l1 k2) / 2,    h1 = (k1 j2 + m1 k2) / 2,
    s1 = (j1 l2 + l1 m2) / 2,         t1 = (Id + k1 l2 + m1 m2) / 2,

with the complementary factor carrying minus signs.  The one-half is
forced by the sum rules (without it the f's add to twice the identity).
Labeling: the projector whose tangent block of J1 J2 is +Id is the one
onto the second sphere, so "factor 1" of the dictionary is the second
geometric factor; the algebraic checks are label-symmetric.

The literally printed product-form Gauss equation disagrees with the
general one (it yields curvature zero on a slice where the correct value
is one); both are evaluated and their discrepancy is reported instead of
silently correcting the printed form.
"""

from dataclasses import dataclass

import numpy as np

from .dataset import (
    GeometricDataset,
    frame_inverse,
    spin_connection,
    tangent_frame,
)
from .errors import DimensionError
from .grid import d_du, d_dv
from .immersion import ImmersionField

__all__ = [
    "ComplexDecomposition",
    "decompose_complex",
    "to_projection_operators",
    "check_complex_relations",
    "gauss_curvature_s2s2",
    "kahler_functions",
    "classify_surface",
    "export_classification_csv",
]


@dataclass
class ComplexDecomposition:
    """Blocks of both product complex structures in adapted orthonormal frames.

    Arrays are indexed [i, iv, iu, row, col] with i in {0, 1} for the two
    structures; j maps tangent to tangent, k tangent to normal, l normal to
    tangent, m normal to normal.
    """

    j: np.ndarray
    k: np.ndarray
    l: np.ndarray
    m: np.ndarray

    @property
    def shape(self):
        return self.j.shape[1:3]

    def invariant_residuals(self):
        """Antisymmetry, duality, square and commutation residuals."""
        j, k, l, m = self.j, self.k, self.l, self.m
        eye = np.eye(2)
        res = {
            "antisym_j": _maxnorm(j + np.swapaxes(j, -1, -2)),
            "antisym_m": _maxnorm(m + np.swapaxes(m, -1, -2)),
            "duality_kl": _maxnorm(l + np.swapaxes(k, -1, -2)),
            "(5cx1)": _maxnorm(j @ j + l @ k + eye),
            "(5cx2)": _maxnorm(k @ j + m @ k),
            "(5cx3)": _maxnorm(j @ l + l @ m),
            "(5cx4)": _maxnorm(k @ l + m @ m + eye),
            "(5com1)": _maxnorm(j[0] @ j[1] + l[0] @ k[1] - j[1] @ j[0] - l[1] @ k[0]),
            "(5com2)": _maxnorm(k[0] @ j[1] + m[0] @ k[1] - k[1] @ j[0] - m[1] @ k[0]),
            "(5com3)": _maxnorm(j[0] @ l[1] + l[0] @ m[1] - j[1] @ l[0] - l[1] @ m[0]),
            "(5com4)": _maxnorm(k[0] @ l[1] + m[0] @ m[1] - k[1] @ l[0] - m[1] @ m[0]),
        }
        return res


def _maxnorm(stack):
    """Spectral norm, maximized over any leading structure index."""
    sv = np.linalg.svd(stack, compute_uv=False)[..., 0]
    return sv.max(axis=0) if sv.ndim == 3 else sv


def _require_two_spheres(spec):
    ok = (
        spec.num_factors == 2
        and all(f.dim == 2 and f.curvature == 1.0 for f in spec.factors)
    )
    if not ok:
        raise DimensionError(
            "the complex-structure calculus needs exactly two unit 2-spheres"
        )


def decompose_complex(im: ImmersionField):
    """Blocks of both product complex structures along an immersed surface.

    The tangent frame is the Gram-Schmidt orthonormalization of the stored
    pushforwards; the normal frame is used as stored.  The complex
    structure of each sphere acts as the cross product with the base point.
    """
    _require_two_spheres(im.spec)
    push = im.push                       # (2, nv, nu, 6)
    normals = im.normal_frames           # (2, nv, nu, 6)
    gram = np.einsum("avuD,bvuD->vuab", push, push)
    p = tangent_frame(gram)
    tau = np.einsum("vuba,bvuD->avuD", p, push)   # orthonormal tangent frame

    x1 = im.points[..., :3]
    x2 = im.points[..., 3:]

    def apply_j(i, vec):
        v1 = np.cross(x1, vec[..., :3])
        v2 = np.cross(x2, vec[..., 3:])
        if i == 1:
            v2 = -v2
        return np.concatenate([v1, v2], axis=-1)

    blocks = {}
    for i in (0, 1):
        jt = np.stack([apply_j(i, tau[a]) for a in (0, 1)])
        jn = np.stack([apply_j(i, normals[al]) for al in (0, 1)])
        blocks[i] = {
            "j": np.einsum("bvuD,qvuD->vuqb", jt, tau),
            "k": np.einsum("bvuD,qvuD->vuqb", jt, normals),
            "l": np.einsum("bvuD,qvuD->vuqb", jn, tau),
            "m": np.einsum("bvuD,qvuD->vuqb", jn, normals),
        }
    return ComplexDecomposition(
        j=np.stack([blocks[0]["j"], blocks[1]["j"]]),
        k=np.stack([blocks[0]["k"], blocks[1]["k"]]),
        l=np.stack([blocks[0]["l"], blocks[1]["l"]]),
        m=np.stack([blocks[0]["m"], blocks[1]["m"]]),
    )


def to_projection_operators(cd: ComplexDecomposition):
    """Factor projection operators from the complex blocks.

    Returns (f, h, s, t) stacks shaped (2, nv, nu, 2, 2) in the adapted
    orthonormal frames; the effective metric for algebraic checks is the
    identity.  The sum rules hold by construction; the product rules hold
    exactly when the decomposition invariants do.
    """
    j1, j2 = cd.j
    k1, k2 = cd.k
    l1, l2 = cd.l
    m1, m2 = cd.m
    eye = np.eye(2)
    q = j1 @ j2 + l1 @ k2
    w = k1 @ j2 + m1 @ k2
    sg = j1 @ l2 + l1 @ m2
    r = k1 @ l2 + m1 @ m2
    f = np.stack([0.5 * (eye + q), 0.5 * (eye - q)])
    h = np.stack([0.5 * w, -0.5 * w])
    s = np.stack([0.5 * sg, -0.5 * sg])
    t = np.stack([0.5 * (eye + r), 0.5 * (eye - r)])
    return f, h, s, t


# ---------------------------------------------------------------------------
# differential relations in the orthonormal gauge
# ---------------------------------------------------------------------------

def _orthonormal_b(ds):
    p = tangent_frame(ds.g)
    return np.einsum("vuiab,vuap,vubq->vuipq", ds.B, p, p), p


def check_complex_relations(cd: ComplexDecomposition, ds: GeometricDataset,
                            profile="default"):
    """Residuals of the algebraic and derivative relations of the blocks."""
    from .dataset import CompatReport, resolve_profile

    prof = resolve_profile(profile)
    report = CompatReport(profile=prof.name)
    for key, val in cd.invariant_residuals().items():
        report.add(key, val, prof.algebraic)

    bhat, p = _orthonormal_b(ds)
    pinv = frame_inverse(p, ds.g)
    btilde = np.einsum("vuiab,vubq->vuiaq", ds.B, p)   # B(d_a, e_q)
    omega = spin_connection(ds.g, ds.chart)
    conn = np.stack([ds.conn_u, ds.conn_v])
    chart = ds.chart

    worst = {k: None for k in ("(5.1)", "(5.2)", "(5.3)", "(5.4)")}
    for i in (0, 1):
        j, k, l, m = cd.j[i], cd.k[i], cd.l[i], cd.m[i]
        dj = np.stack([d_du(j, chart), d_dv(j, chart)])
        dk = np.stack([d_du(k, chart), d_dv(k, chart)])
        dl = np.stack([d_du(l, chart), d_dv(l, chart)])
        dm = np.stack([d_du(m, chart), d_dv(m, chart)])
        r51, r52, r53, r54 = [], [], [], []
        for a in (0, 1):
            bt = btilde[:, :, :, a, :]                 # [alpha, q]
            cov_j = dj[a] + omega[a] @ j - j @ omega[a]
            rhs = (
                np.einsum("vuxq,vuxr->vurq", k, bt)
                + np.einsum("vurx,vuxq->vurq", l, bt)
            )
            r51.append(cov_j - rhs)

            cov_k = dk[a] + conn[a] @ k - k @ omega[a]
            rhs = (
                np.einsum("vuxy,vuyq->vuxq", m, bt)
                - np.einsum("vuxr,vurq->vuxq", bt, j)
            )
            r52.append(cov_k - rhs)

            cov_m = dm[a] + conn[a] @ m - m @ conn[a]
            rhs = (
                -np.einsum("vurg,vuxr->vuxg", l, bt)
                - np.einsum("vuxr,vugr->vuxg", k, bt)
            )
            r53.append(cov_m - rhs)

            cov_l = dl[a] + omega[a] @ l - l @ conn[a]
            rhs = (
                -np.einsum("vurq,vugq->vurg", j, bt)
                + np.einsum("vuxg,vuxr->vurg", m, bt)
            )
            r54.append(cov_l - rhs)
        for key, res in (("(5.1)", r51), ("(5.2)", r52),
                         ("(5.3)", r53), ("(5.4)", r54)):
            stacked = np.stack(res, axis=2)            # [v, u, a, row, col]
            orth = np.einsum("vuarc,vuaq->vuqrc", stacked, p)
            val = np.sqrt(np.sum(orth * orth, axis=(-3, -2, -1)))
            worst[key] = val if worst[key] is None else np.maximum(worst[key], val)
    for key in ("(5.1)", "(5.2)", "(5.3)", "(5.4)"):
        report.add(key, worst[key], prof.differential)
    return report


# ---------------------------------------------------------------------------
# curvature, Kaehler functions, classification
# ---------------------------------------------------------------------------

def gauss_curvature_s2s2(cd: ComplexDecomposition, ds: GeometricDataset):
    """Curvature and curvature-equation residuals through the dictionary.

    Returns a dict with the curvature from the general Gauss equation, the
    literally printed product-form value, their discrepancy field, and
    Codazzi / Ricci residual fields evaluated with dictionary operators.
    """
    _require_two_spheres(ds.spec)
    f, h, s, t = to_projection_operators(cd)
    bhat, p = _orthonormal_b(ds)
    pinv = frame_inverse(p, ds.g)

    # general Gauss equation, contracted on (e1, e2, e2, e1)
    k_general = np.zeros(ds.chart.shape)
    for i in (0, 1):
        k_general += f[i][..., 1, 1] * f[i][..., 0, 0] - f[i][..., 0, 1] * f[i][..., 1, 0]
    k_general += np.einsum("vux,vux->vu", bhat[..., 0, 0], bhat[..., 1, 1])
    k_general -= np.einsum("vux,vux->vu", bhat[..., 0, 1], bhat[..., 0, 1])

    # printed product form
    j1, j2 = cd.j
    k1, k2 = cd.k

    def pair(a_blk, b_blk, qa, qb):
        return np.einsum("vur,vur->vu", a_blk[..., qa], b_blk[..., qb])

    term1 = pair(j1, j2, 0, 1) + pair(k1, k2, 0, 1)
    term2 = pair(j1, j2, 1, 0) + pair(k1, k2, 1, 0)
    term3 = pair(j1, j2, 0, 0) + pair(k1, k2, 0, 0)
    term4 = pair(j1, j2, 1, 1) - pair(k1, k2, 1, 1)
    mean_h = 0.5 * (bhat[..., 0, 0] + bhat[..., 1, 1])
    norm_h2 = np.einsum("vux,vux->vu", mean_h, mean_h)
    norm_b2 = np.sum(bhat * bhat, axis=(-3, -2, -1))
    k_printed = 0.5 * (1.0 + term1 * term2 - term3 * term4) + 2.0 * norm_h2 - 0.5 * norm_b2

    # Codazzi residual with dictionary operators (general structure)
    conn = np.stack([ds.conn_u, ds.conn_v])
    omega = spin_connection(ds.g, ds.chart)
    btilde = np.einsum("vuiab,vubq->vuiaq", ds.B, p)
    chart = ds.chart
    dbh = np.stack([d_du(bhat, chart), d_dv(bhat, chart)])
    cov_b = []
    for a in (0, 1):
        cov_b.append(
            dbh[a]
            + np.einsum("vuxy,vuyqr->vuxqr", conn[a], bhat)
            - np.einsum("vusq,vuxsr->vuxqr", omega[a], bhat)
            - np.einsum("vusr,vuxqs->vuxqr", omega[a], bhat)
        )
    cov_b = np.stack(cov_b, axis=2)                    # [v, u, a, x, q, r]
    cov_b = np.einsum("vuaxqr,vuap->vuxpqr", cov_b, p)
    anti = cov_b - np.swapaxes(cov_b, -3, -2)
    rhs = np.zeros_like(anti)
    for i in (0, 1):
        rhs += (
            np.einsum("vurq,vuxp->vuxpqr", f[i], h[i])
            - np.einsum("vurp,vuxq->vuxpqr", f[i], h[i])
        )
    res_codazzi = np.sqrt(np.sum((anti - rhs) ** 2, axis=(-4, -3, -2, -1)))

    # Ricci residual with dictionary operators
    detp = p[..., 0, 0] * p[..., 1, 1]
    rbar = (
        d_du(ds.conn_v, chart) - d_dv(ds.conn_u, chart)
        + ds.conn_u @ ds.conn_v - ds.conn_v @ ds.conn_u
    ) * detp[..., None, None]
    rhs_r = np.zeros_like(rbar)
    for i in (0, 1):
        rhs_r += (
            np.einsum("vug,vux->vuxg", h[i][..., 1], h[i][..., 0])
            - np.einsum("vug,vux->vuxg", h[i][..., 0], h[i][..., 1])
        )
    rhs_r += np.einsum("vuxs,vugs->vuxg", bhat[..., 0], bhat[..., 1])
    rhs_r -= np.einsum("vuxs,vugs->vuxg", bhat[..., 1], bhat[..., 0])
    res_ricci = np.sqrt(np.sum((rbar - rhs_r) ** 2, axis=(-2, -1)))

    return {
        "K": k_general,
        "K_printed": k_printed,
        "K_discrepancy": k_printed - k_general,
        "codazzi_residual": res_codazzi,
        "ricci_residual": res_ricci,
    }


def kahler_functions(cd: ComplexDecomposition):
    """(C_1, C_2): pullback factors of the two Kaehler forms, in [-1, 1]."""
    return cd.j[0][..., 1, 0].copy(), cd.j[1][..., 1, 0].copy()


LABELS = ("complex_J1", "complex_J2", "lagrangian_J1", "lagrangian_J2")


def classify_surface(cd: ComplexDecomposition, tol=1e-8):
    """Multi-label complex / Lagrangian classification per node.

    A node is complex for a structure when the mixed blocks vanish, and
    Lagrangian when the tangent and normal blocks vanish, each to ``tol``.
    Returns a dict of boolean masks keyed by label.
    """
    masks = {}
    for i in (0, 1):
        mixed = _maxnorm(cd.k[i]) + _maxnorm(cd.l[i])
        diag = _maxnorm(cd.j[i]) + _maxnorm(cd.m[i])
        masks[f"complex_J{i + 1}"] = mixed <= tol
        masks[f"lagrangian_J{i + 1}"] = diag <= tol
    return masks


def node_labels(masks, iv, iu):
    """Sorted label string of one node, or 'generic'."""
    tags = [lab for lab in LABELS if masks[lab][iv, iu]]
    return "|".join(tags) if tags else "generic"


def export_classification_csv(cd: ComplexDecomposition, path, tol=1e-8):
    """CSV dump of per-node labels."""
    masks = classify_surface(cd, tol)
    nv, nu = cd.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iu,iv,labels\n")
        for iv in range(nv):
            for iu in range(nu):
                fh.write(f"{iu},{iv},{node_labels(masks, iv, iu)}\n")


def export_kahler_csv(cd: ComplexDecomposition, path):
    """CSV dump of the two Kaehler functions."""
    c1, c2 = kahler_functions(cd)
    nv, nu = cd.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iu,iv,C1,C2\n")
        for iv in range(nv):
            for iu in range(nu):
                fh.write(f"{iu},{iv},{format(c1[iv, iu], '.17g')},"
                         f"{format(c2[iv, iu], '.17g')}\n")
