"""Target geometry: products of real space forms and their flat embeddings.

Each factor of curvature c != 0 and dimension k is modelled inside a flat
(k+1)-dimensional space: the sphere of radius 1/sqrt(c) in Euclidean space
for c > 0, and the upper sheet of the hyperboloid <x,x> = 1/c in Minkowski
space (signature -,+,...,+) for c < 0.  A flat factor (c = 0, allowed only
in last position) is its own model.  Ambient points and vectors are stored
as flat rows of reals in factor order.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import AlignmentError, DimensionError, ValidationError

__all__ = [
    "SpaceFormFactor",
    "MultiproductSpec",
    "IsometryAlignment",
    "factor_constraint_residual",
    "ambient_curvature",
    "ambient_inner",
    "geodesic_distance",
    "align_isometry",
]


@dataclass(frozen=True)
class SpaceFormFactor:
    """One simply connected space form: dimension and constant curvature."""

    dim: int
    curvature: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError(f"factor dimension must be >= 1, got {self.dim}")

    @property
    def ambient_dim(self):
        return self.dim + 1 if self.curvature != 0.0 else self.dim

    @property
    def signature(self):
        """Diagonal of the flat metric on this factor's model space."""
        s = np.ones(self.ambient_dim)
        if self.curvature < 0:
            s[0] = -1.0
        return s


@dataclass(frozen=True)
class MultiproductSpec:
    """Ordered list of space-form factors with the derived flat embedding."""

    factors: tuple

    def __init__(self, factors):
        object.__setattr__(self, "factors", tuple(factors))
        for i, f in enumerate(self.factors[:-1]):
            if f.curvature == 0.0:
                raise ValidationError(
                    f"factor {i} is flat; only the last factor may have zero curvature"
                )

    @property
    def num_factors(self):
        return len(self.factors)

    @property
    def ambient_dims(self):
        return [f.ambient_dim for f in self.factors]

    @property
    def total_ambient_dim(self):
        return sum(self.ambient_dims)

    @property
    def block_slices(self):
        """Per-factor slices into the flat coordinate row."""
        out, start = [], 0
        for f in self.factors:
            out.append(slice(start, start + f.ambient_dim))
            start += f.ambient_dim
        return out

    @property
    def signature(self):
        return np.concatenate([f.signature for f in self.factors])

    @property
    def curvatures(self):
        return [f.curvature for f in self.factors]

    @property
    def base_total_dim(self):
        """Sum of factor dimensions n_i (= n + d for admissible data)."""
        return sum(f.dim for f in self.factors)

    def split(self, row):
        """Split trailing coordinates of an array into per-factor blocks."""
        row = np.asarray(row, dtype=float)
        if row.shape[-1] != self.total_ambient_dim:
            raise DimensionError(
                f"expected {self.total_ambient_dim} ambient coordinates, got {row.shape[-1]}"
            )
        return [row[..., s] for s in self.block_slices]

    def join(self, blocks):
        return np.concatenate([np.asarray(b, dtype=float) for b in blocks], axis=-1)


def _factor_inner(factor, x, y):
    s = factor.signature
    return np.einsum("...k,k,...k->...", x, s, y)


def factor_constraint_residual(point, spec: MultiproductSpec):
    """|<x_i, x_i>_i - 1/c_i| per curved factor; 0 by convention when flat.

    Raises a DimensionError naming the offending coordinate count when the
    point does not match the spec's block layout.
    """
    blocks = spec.split(point)
    out = []
    for f, b in zip(spec.factors, blocks):
        if f.curvature == 0.0:
            out.append(np.zeros(np.shape(b)[:-1]))
        else:
            out.append(np.abs(_factor_inner(f, b, b) - 1.0 / f.curvature))
    return np.stack(out, axis=-1)


def ambient_inner(spec: MultiproductSpec, x, y):
    """Flat (pseudo-)Euclidean inner product of ambient vectors."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.total_ambient_dim:
        raise DimensionError(
            f"expected {spec.total_ambient_dim} ambient coordinates, got {x.shape[-1]}"
        )
    return np.einsum("...k,k,...k->...", x, spec.signature, np.asarray(y, dtype=float))


def ambient_curvature(spec: MultiproductSpec, x, y, z):
    """Curvature tensor of the product applied to ambient vector blocks.

    Blockwise, each factor contributes the constant-curvature tensor
    c [<pi y, pi z> pi x - <pi x, pi z> pi y] of that factor, with its own
    flat metric; cross-factor arguments annihilate.
    """
    xs, ys, zs = spec.split(x), spec.split(y), spec.split(z)
    blocks = []
    for f, xb, yb, zb in zip(spec.factors, xs, ys, zs):
        if f.curvature == 0.0:
            blocks.append(np.zeros_like(xb))
        else:
            yz = _factor_inner(f, yb, zb)
            xz = _factor_inner(f, xb, zb)
            blocks.append(f.curvature * (yz[..., None] * xb - xz[..., None] * yb))
    return spec.join(blocks)


def _clamp(x, lo, hi):
    return np.minimum(np.maximum(x, lo), hi)


def geodesic_distance(spec: MultiproductSpec, p, q):
    """Per-node distance in the product: factor distances summed in quadrature.

    Chord-based formulas (arcsin of half the chord on spheres, arcsinh of
    half the Minkowski chord on hyperboloids) stay accurate down to
    machine precision for nearly coincident points, where the arccos and
    arccosh of a clamped inner product lose half the digits.  Arguments
    are clamped before the inverse trig calls so antipodal and coincident
    points cannot produce NaNs.
    """
    ps, qs = spec.split(p), spec.split(q)
    total = None
    for f, pb, qb in zip(spec.factors, ps, qs):
        if f.curvature == 0.0:
            d = np.linalg.norm(pb - qb, axis=-1)
        elif f.curvature > 0.0:
            r = 1.0 / math.sqrt(f.curvature)
            chord = np.linalg.norm(pb - qb, axis=-1)
            d = 2.0 * r * np.arcsin(_clamp(0.5 * chord / r, -1.0, 1.0))
        else:
            r = 1.0 / math.sqrt(-f.curvature)
            diff = pb - qb
            q2 = np.maximum(_factor_inner(f, diff, diff), 0.0)
            d = 2.0 * r * np.arcsinh(0.5 * np.sqrt(q2) / r)
        total = d * d if total is None else total + d * d
    return np.sqrt(total)


@dataclass
class IsometryAlignment:
    """Per-factor form-preserving maps aligning one point cloud to another.

    Curved factors carry a linear block Q (orthogonal, or restricted Lorentz
    for hyperbolic factors); the flat factor additionally carries a
    translation.  ``residual`` is the sup over nodes of the post-alignment
    geodesic distance; ``form_errors`` measure |Q^T eta Q - eta| per block.
    """

    spec: MultiproductSpec
    blocks: list
    translations: list
    residual: float = 0.0
    form_errors: list = field(default_factory=list)

    def apply(self, points):
        points = np.asarray(points, dtype=float)
        out = []
        for i, b in enumerate(self.spec.split(points)):
            mapped = b @ self.blocks[i].T
            if self.translations[i] is not None:
                mapped = mapped + self.translations[i]
            out.append(mapped)
        return self.spec.join(out)


def _check_rank(mat, need, what):
    sv = np.linalg.svd(mat, compute_uv=False)
    if len(sv) < need or sv[need - 1] <= 1e-10 * max(sv[0], 1.0):
        raise AlignmentError(f"degenerate point cloud: rank < {need} on {what}")


def _procrustes_orthogonal(a, b):
    # minimize sum |Q a_j - b_j|^2 over Q in O(k); closed form via SVD.
    h = b.T @ a
    u, _, vt = np.linalg.svd(h)
    return u @ vt


def _lorentz_adjoint(m, eta):
    return eta[:, None] * m.T * (1.0 / eta)[None, :]


def _procrustes_lorentz(a, b, factor):
    """Closest O(1,k) block: unconstrained solve, then indefinite polar.

    Falls back to Gauss-Newton refinement on the eta-skew Lie algebra when
    the polar factor fails to preserve the upper sheet.
    """
    eta = factor.signature
    m, *_ = np.linalg.lstsq(a, b, rcond=None)
    m = m.T
    s2 = _lorentz_adjoint(m, eta) @ m
    s = np.real(scipy.linalg.sqrtm(s2))
    q = m @ np.linalg.inv(s)
    if not np.isfinite(q).all() or q[0, 0] <= 0:
        q = _refine_lorentz(a, b, eta)
    err = np.max(np.abs(q.T @ np.diag(eta) @ q - np.diag(eta)))
    if err > 1e-8:
        q = _refine_lorentz(a, b, eta, q0=_project_lorentz(q, eta))
        err = np.max(np.abs(q.T @ np.diag(eta) @ q - np.diag(eta)))
    return q, err


def _project_lorentz(q, eta):
    s2 = _lorentz_adjoint(q, eta) @ q
    s = np.real(scipy.linalg.sqrtm(s2))
    return q @ np.linalg.inv(s)


def _refine_lorentz(a, b, eta, q0=None, iters=60):
    # Gauss-Newton on Q = Q0 exp(X), X eta-skew, for the least-squares cost.
    k = len(eta)
    q = np.eye(k) if q0 is None else q0.copy()
    basis = []
    for i in range(k):
        for j in range(i + 1, k):
            x = np.zeros((k, k))
            x[i, j] = 1.0
            x -= np.diag(eta) @ x.T @ np.diag(eta)
            basis.append(x)
    for _ in range(iters):
        r = b - a @ q.T
        jac = np.stack([(a @ (q @ x).T).reshape(-1) for x in basis], axis=1)
        sol, *_ = np.linalg.lstsq(jac, r.reshape(-1), rcond=None)
        x = sum(c * m for c, m in zip(sol, basis))
        q = q @ scipy.linalg.expm(x)
        if np.linalg.norm(sol) < 1e-14:
            break
    return q


def align_isometry(points_a, points_b, spec: MultiproductSpec, strict=False):
    """Least-squares per-factor alignment of corresponding point clouds.

    Orthogonal Procrustes on sphere blocks, Lorentz Procrustes on
    hyperboloid blocks (both fixing the model's center), rigid registration
    with translation on the flat block.  The returned residual is the sup
    over nodes of the geodesic distance after alignment.

    Rank-deficient sphere and flat clouds (an image inside a lower
    subsphere or plane) still produce a valid minimizer: the SVD completes
    the map arbitrarily but deterministically on the unseen complement.
    With ``strict=True`` such clouds raise instead, enforcing the
    points-in-general-position precondition.  Hyperboloid blocks always
    require full rank (the unconstrained solve needs it).
    """
    a = np.asarray(points_a, dtype=float).reshape(-1, np.shape(points_a)[-1])
    b = np.asarray(points_b, dtype=float).reshape(-1, np.shape(points_b)[-1])
    if a.shape != b.shape:
        raise AlignmentError("point lists must have equal shapes")
    if a.shape[0] < spec.total_ambient_dim + 1:
        raise AlignmentError(
            f"need at least {spec.total_ambient_dim + 1} corresponding points"
        )
    blocks, translations, form_errors = [], [], []
    for i, (fa, sl) in enumerate(zip(spec.factors, spec.block_slices)):
        ab, bb = a[:, sl], b[:, sl]
        if fa.curvature > 0.0:
            if strict:
                _check_rank(ab, fa.ambient_dim, f"factor {i}")
            q = _procrustes_orthogonal(ab, bb)
            blocks.append(q)
            translations.append(None)
            form_errors.append(float(np.max(np.abs(q.T @ q - np.eye(len(q))))))
        elif fa.curvature < 0.0:
            _check_rank(ab, fa.ambient_dim, f"factor {i}")
            for name, cloud in (("source", ab), ("target", bb)):
                if np.min(cloud[:, 0]) <= 0:
                    raise AlignmentError(
                        f"mixed or lower hyperboloid sheets in {name} cloud, factor {i}"
                    )
            q, err = _procrustes_lorentz(ab, bb, fa)
            blocks.append(q)
            translations.append(None)
            form_errors.append(float(err))
        else:
            ca, cb = ab.mean(axis=0), bb.mean(axis=0)
            h = (bb - cb).T @ (ab - ca)
            if fa.ambient_dim > 1:
                if strict:
                    _check_rank(ab - ca, fa.ambient_dim, f"flat factor {i}")
                u, _, vt = np.linalg.svd(h)
                q = u @ vt
            else:
                q = np.eye(1) if h[0, 0] >= 0 else -np.eye(1)
            blocks.append(q)
            translations.append(cb - q @ ca)
            form_errors.append(float(np.max(np.abs(q.T @ q - np.eye(len(q))))))
    out = IsometryAlignment(spec, blocks, translations, form_errors=form_errors)
    mapped = out.apply(a)
    out.residual = float(np.max(geodesic_distance(spec, mapped, b)))
    return out
