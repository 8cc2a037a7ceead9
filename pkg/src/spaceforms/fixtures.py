"""Analytic surface generators used as oracles throughout the test suite.

Every fixture samples closed-form expressions for the immersion, its
derivatives, an adapted normal frame, and all induced operators; no
numerical differentiation enters generation.  Charts avoid coordinate
singularities (sphere charts use a polar-cap-free band).

The "diagonal" fixture is realized as the graph of the antipodal map,
x -> (sigma, -sigma): with the product complex structures (J, J) and
(J, -J) this is the surface that is Lagrangian for the first and complex
for the second, and it is ambient-congruent to the diagonal itself, with
identical induced data (metric twice the round one, vanishing second
fundamental form, curvature one half).
"""

import math
from dataclasses import dataclass

import numpy as np

from .ambient import MultiproductSpec, SpaceFormFactor
from .dataset import GeometricDataset
from .errors import FixtureError
from .grid import Chart
from .immersion import ImmersionField

__all__ = ["FixtureBundle", "generate", "list_fixtures", "default_chart"]


@dataclass
class FixtureBundle:
    """Dataset plus ground truth and closed-form scalars for one fixture."""

    name: str
    dataset: GeometricDataset
    ground_truth: ImmersionField
    gauss_curvature: np.ndarray
    norm_b_squared: np.ndarray
    kahler: tuple | None = None
    params: dict | None = None


# chart domains: name -> (u0, v0, length_u, length_v)
_DOMAINS = {
    "slice": (0.0, -0.5, 1.2, 1.0),
    "diagonal": (0.0, -0.5, 1.2, 1.0),
    "round_sphere_in_r3": (0.0, -0.5, 1.2, 1.0),
    "clifford_torus": (0.0, 0.0, 2.0, 2.0),
    "product_of_curves": (0.0, 0.0, 2.0, 2.0),
    "helicoid": (0.0, -0.8, 1.5, 1.6),
    "catenoid": (0.0, -0.8, 1.5, 1.6),
    "plane": (0.0, 0.0, 1.0, 1.0),
    "geodesic_cylinder_s2xr": (0.0, 0.0, 2.0, 1.5),
}

_SPECS = {
    "slice": [(2, 1.0), (2, 1.0)],
    "diagonal": [(2, 1.0), (2, 1.0)],
    "clifford_torus": [(2, 1.0), (2, 1.0)],
    "product_of_curves": [(2, 1.0), (2, 1.0)],
    "helicoid": [(3, 0.0)],
    "catenoid": [(3, 0.0)],
    "plane": [(3, 0.0)],
    "round_sphere_in_r3": [(3, 0.0)],
    "geodesic_cylinder_s2xr": [(2, 1.0), (1, 0.0)],
}


def list_fixtures():
    """Static registry: fixture names with their product factors."""
    return {name: list(_SPECS[name]) for name in sorted(_SPECS)}


def default_chart(name, nu=33, nv=33):
    """Canonical chart of a fixture at the requested grid size."""
    if name not in _DOMAINS:
        raise FixtureError(f"unknown fixture {name!r}")
    _, _, lu, lv = _DOMAINS[name]
    return Chart(nu=nu, nv=nv, hu=lu / (nu - 1), hv=lv / (nv - 1))


def _grid_coords(name, chart):
    u0, v0, _, _ = _DOMAINS[name]
    u = u0 + chart.hu * np.arange(chart.nu)
    v = v0 + chart.hv * np.arange(chart.nv)
    return np.meshgrid(u, v)


def _spec(name):
    return MultiproductSpec([SpaceFormFactor(d, c) for d, c in _SPECS[name]])


def _bundle(name, spec, chart, g, B, au, av, f, h, t, points, push_u, push_v,
            normals, curv, nb2, kahler=None, params=None):
    ds = GeometricDataset(
        spec=spec, chart=chart, base_dim=2, bundle_rank=B.shape[2],
        g=g, B=B, conn_u=au, conn_v=av,
        f=np.stack(f), h=np.stack(h), t=np.stack(t),
    ).validate()
    gt = ImmersionField(
        spec=spec, chart=chart, points=points,
        push=np.stack([push_u, push_v]), normal_frames=np.stack(normals),
    )
    return FixtureBundle(name, ds, gt, curv, nb2, kahler, params)


def _const(chart, mat):
    return np.broadcast_to(np.asarray(mat, dtype=float),
                           chart.shape + np.shape(mat)).copy()


def _sphere_band(u, v):
    """Band parametrization of the unit sphere with its derivatives."""
    cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
    sig = np.stack([cu * cv, su * cv, sv], axis=-1)
    sig_u = np.stack([-su * cv, cu * cv, np.zeros_like(u)], axis=-1)
    sig_v = np.stack([-cu * sv, -su * sv, cv], axis=-1)
    e1 = np.stack([-su, cu, np.zeros_like(u)], axis=-1)      # sig_u / cos v
    e2 = sig_v
    return sig, sig_u, sig_v, e1, e2


# ---------------------------------------------------------------------------
# S2 x S2 fixtures
# ---------------------------------------------------------------------------

def _make_slice(chart):
    name = "slice"
    spec = _spec(name)
    u, v = _grid_coords(name, chart)
    sig, sig_u, sig_v, _, _ = _sphere_band(u, v)
    zeros3 = np.zeros_like(sig)
    q0 = np.array([0.0, 0.0, 1.0])
    e1q = np.array([1.0, 0.0, 0.0])
    e2q = np.array([0.0, 1.0, 0.0])

    g = np.zeros(chart.shape + (2, 2))
    g[..., 0, 0] = np.cos(v) ** 2
    g[..., 1, 1] = 1.0
    B = np.zeros(chart.shape + (2, 2, 2))
    au = np.zeros(chart.shape + (2, 2))
    av = np.zeros(chart.shape + (2, 2))
    eye = np.eye(2)
    f = [_const(chart, eye), _const(chart, 0.0 * eye)]
    h = [np.zeros(chart.shape + (2, 2))] * 2
    t = [_const(chart, 0.0 * eye), _const(chart, eye)]

    points = np.concatenate([sig, _const(chart, q0)], axis=-1)
    push_u = np.concatenate([sig_u, zeros3], axis=-1)
    push_v = np.concatenate([sig_v, zeros3], axis=-1)
    normals = [np.concatenate([zeros3, _const(chart, e1q)], axis=-1),
               np.concatenate([zeros3, _const(chart, e2q)], axis=-1)]
    curv = np.ones(chart.shape)
    nb2 = np.zeros(chart.shape)
    return _bundle(name, spec, chart, g, B, au, av, f, h, t,
                   points, push_u, push_v, normals, curv, nb2, kahler=(1.0, 1.0))


def _make_diagonal(chart):
    name = "diagonal"
    spec = _spec(name)
    u, v = _grid_coords(name, chart)
    sig, sig_u, sig_v, e1, e2 = _sphere_band(u, v)
    rt2 = math.sqrt(2.0)

    g = np.zeros(chart.shape + (2, 2))
    g[..., 0, 0] = 2.0 * np.cos(v) ** 2
    g[..., 1, 1] = 2.0
    B = np.zeros(chart.shape + (2, 2, 2))
    au = np.zeros(chart.shape + (2, 2))
    au[..., 0, 1] = -np.sin(v)
    au[..., 1, 0] = np.sin(v)
    av = np.zeros(chart.shape + (2, 2))
    f = [_const(chart, 0.5 * np.eye(2))] * 2
    h1 = np.zeros(chart.shape + (2, 2))
    h1[..., 0, 0] = np.cos(v) / rt2
    h1[..., 1, 1] = 1.0 / rt2
    h = [h1, -h1]
    t = [_const(chart, 0.5 * np.eye(2))] * 2

    points = np.concatenate([sig, -sig], axis=-1)
    push_u = np.concatenate([sig_u, -sig_u], axis=-1)
    push_v = np.concatenate([sig_v, -sig_v], axis=-1)
    normals = [np.concatenate([e1, e1], axis=-1) / rt2,
               np.concatenate([e2, e2], axis=-1) / rt2]
    curv = np.full(chart.shape, 0.5)
    nb2 = np.zeros(chart.shape)
    return _bundle(name, spec, chart, g, B, au, av, f, h, t,
                   points, push_u, push_v, normals, curv, nb2, kahler=(0.0, 1.0))


def _circle(vals, kappa):
    """Arc-length circle of geodesic curvature kappa on the unit sphere."""
    r = 1.0 / math.sqrt(1.0 + kappa * kappa)
    z = kappa * r
    c, s = np.cos(vals / r), np.sin(vals / r)
    zero = np.zeros_like(vals)
    curve = np.stack([r * c, r * s, np.full_like(vals, z)], axis=-1)
    d1 = np.stack([-s, c, zero], axis=-1)
    normal = np.stack([-z * c, -z * s, np.full_like(vals, r)], axis=-1)
    return curve, d1, normal, r


def _make_product_of_curves(chart, kappa1=0.0, kappa2=0.0, name="product_of_curves"):
    spec = _spec(name)
    u, v = _grid_coords(name, chart)
    alpha, alpha_p, n_alpha, r1 = _circle(u, kappa1)
    beta, beta_p, n_beta, r2 = _circle(v, kappa2)
    for periodic, n_nodes, h_step, r in (
        (chart.periodic_u, chart.nu, chart.hu, r1),
        (chart.periodic_v, chart.nv, chart.hv, r2),
    ):
        if periodic and abs((n_nodes - 1) * h_step - 2.0 * math.pi * r) > 1e-9:
            raise FixtureError(
                "periodic chart does not close up: need (n-1)*h = 2*pi*r "
                f"with r = {r}"
            )
    zeros3 = np.zeros(chart.shape + (3,))

    g = _const(chart, np.eye(2))
    B = np.zeros(chart.shape + (2, 2, 2))
    B[..., 0, 0, 0] = kappa1
    B[..., 1, 1, 1] = kappa2
    au = np.zeros(chart.shape + (2, 2))
    av = np.zeros(chart.shape + (2, 2))
    f = [_const(chart, np.diag([1.0, 0.0])), _const(chart, np.diag([0.0, 1.0]))]
    h = [np.zeros(chart.shape + (2, 2))] * 2
    t = [_const(chart, np.diag([1.0, 0.0])), _const(chart, np.diag([0.0, 1.0]))]

    points = np.concatenate([alpha, beta], axis=-1)
    push_u = np.concatenate([alpha_p, zeros3], axis=-1)
    push_v = np.concatenate([zeros3, beta_p], axis=-1)
    normals = [np.concatenate([n_alpha, zeros3], axis=-1),
               np.concatenate([zeros3, n_beta], axis=-1)]
    curv = np.zeros(chart.shape)
    nb2 = np.full(chart.shape, kappa1 ** 2 + kappa2 ** 2)
    return _bundle(name, spec, chart, g, B, au, av, f, h, t,
                   points, push_u, push_v, normals, curv, nb2, kahler=(0.0, 0.0),
                   params={"kappa1": kappa1, "kappa2": kappa2})


def _make_clifford(chart):
    return _make_product_of_curves(chart, 0.0, 0.0, name="clifford_torus")


# ---------------------------------------------------------------------------
# codimension-one fixtures in R^3
# ---------------------------------------------------------------------------

def _conformal_minimal_common(chart, name):
    u, v = _grid_coords(name, chart)
    ch, sh = np.cosh(v), np.sinh(v)
    g = np.zeros(chart.shape + (2, 2))
    g[..., 0, 0] = ch * ch
    g[..., 1, 1] = ch * ch
    au = np.zeros(chart.shape + (1, 1))
    av = np.zeros(chart.shape + (1, 1))
    f = [_const(chart, np.eye(2))]
    h = [np.zeros(chart.shape + (1, 2))]
    t = [_const(chart, np.eye(1))]
    curv = -1.0 / ch ** 4
    nb2 = 2.0 / ch ** 4
    return u, v, ch, sh, g, au, av, f, h, t, curv, nb2


def _make_helicoid(chart):
    name = "helicoid"
    spec = _spec(name)
    u, v, ch, sh, g, au, av, f, h, t, curv, nb2 = _conformal_minimal_common(chart, name)
    cu, su = np.cos(u), np.sin(u)
    points = np.stack([sh * su, -sh * cu, u], axis=-1)
    push_u = np.stack([sh * cu, sh * su, np.ones_like(u)], axis=-1)
    push_v = np.stack([ch * su, -ch * cu, np.zeros_like(u)], axis=-1)
    normal = np.stack([cu / ch, su / ch, -sh / ch], axis=-1)
    B = np.zeros(chart.shape + (1, 2, 2))
    B[..., 0, 0, 1] = 1.0
    B[..., 0, 1, 0] = 1.0
    return _bundle(name, spec, chart, g, B, au, av, f, h, t,
                   points, push_u, push_v, [normal], curv, nb2)


def _make_catenoid(chart):
    name = "catenoid"
    spec = _spec(name)
    u, v, ch, sh, g, au, av, f, h, t, curv, nb2 = _conformal_minimal_common(chart, name)
    cu, su = np.cos(u), np.sin(u)
    points = np.stack([ch * cu, ch * su, v], axis=-1)
    push_u = np.stack([-ch * su, ch * cu, np.zeros_like(u)], axis=-1)
    push_v = np.stack([sh * cu, sh * su, np.ones_like(u)], axis=-1)
    # normal oriented so B here equals the quarter-turn rotation of the
    # helicoid's second fundamental form (conjugate pair convention)
    normal = np.stack([-cu / ch, -su / ch, sh / ch], axis=-1)
    B = np.zeros(chart.shape + (1, 2, 2))
    B[..., 0, 0, 0] = 1.0
    B[..., 0, 1, 1] = -1.0
    return _bundle(name, spec, chart, g, B, au, av, f, h, t,
                   points, push_u, push_v, [normal], curv, nb2)


def _make_plane(chart):
    name = "plane"
    spec = _spec(name)
    u, v = _grid_coords(name, chart)
    zero = np.zeros_like(u)
    one = np.ones_like(u)
    g = _const(chart, np.eye(2))
    B = np.zeros(chart.shape + (1, 2, 2))
    au = np.zeros(chart.shape + (1, 1))
    av = np.zeros(chart.shape + (1, 1))
    f = [_const(chart, np.eye(2))]
    h = [np.zeros(chart.shape + (1, 2))]
    t = [_const(chart, np.eye(1))]
    points = np.stack([u, v, zero], axis=-1)
    push_u = np.stack([one, zero, zero], axis=-1)
    push_v = np.stack([zero, one, zero], axis=-1)
    normal = np.stack([zero, zero, one], axis=-1)
    return _bundle(name, spec, chart, g, B, au, av, f, h, t,
                   points, push_u, push_v, [normal],
                   np.zeros(chart.shape), np.zeros(chart.shape))


def _make_round_sphere(chart):
    name = "round_sphere_in_r3"
    spec = _spec(name)
    u, v = _grid_coords(name, chart)
    sig, sig_u, sig_v, _, _ = _sphere_band(u, v)
    g = np.zeros(chart.shape + (2, 2))
    g[..., 0, 0] = np.cos(v) ** 2
    g[..., 1, 1] = 1.0
    B = np.zeros(chart.shape + (1, 2, 2))
    B[..., 0, 0, 0] = -np.cos(v) ** 2
    B[..., 0, 1, 1] = -1.0
    au = np.zeros(chart.shape + (1, 1))
    av = np.zeros(chart.shape + (1, 1))
    f = [_const(chart, np.eye(2))]
    h = [np.zeros(chart.shape + (1, 2))]
    t = [_const(chart, np.eye(1))]
    return _bundle(name, spec, chart, g, B, au, av, f, h, t,
                   sig, sig_u, sig_v, [sig],
                   np.ones(chart.shape), np.full(chart.shape, 2.0))


def _make_geodesic_cylinder(chart):
    name = "geodesic_cylinder_s2xr"
    spec = _spec(name)
    u, v = _grid_coords(name, chart)
    cu, su = np.cos(u), np.sin(u)
    zero = np.zeros_like(u)
    one = np.ones_like(u)
    g = _const(chart, np.eye(2))
    B = np.zeros(chart.shape + (1, 2, 2))
    au = np.zeros(chart.shape + (1, 1))
    av = np.zeros(chart.shape + (1, 1))
    f = [_const(chart, np.diag([1.0, 0.0])), _const(chart, np.diag([0.0, 1.0]))]
    h = [np.zeros(chart.shape + (1, 2))] * 2
    t = [_const(chart, np.eye(1)), _const(chart, np.zeros((1, 1)))]
    points = np.stack([cu, su, zero, v], axis=-1)
    push_u = np.stack([-su, cu, zero, zero], axis=-1)
    push_v = np.stack([zero, zero, zero, one], axis=-1)
    normal = np.stack([zero, zero, one, zero], axis=-1)
    return _bundle(name, spec, chart, g, B, au, av, f, h, t,
                   points, push_u, push_v, [normal],
                   np.zeros(chart.shape), np.zeros(chart.shape))


_GENERATORS = {
    "slice": _make_slice,
    "diagonal": _make_diagonal,
    "clifford_torus": _make_clifford,
    "product_of_curves": _make_product_of_curves,
    "helicoid": _make_helicoid,
    "catenoid": _make_catenoid,
    "plane": _make_plane,
    "round_sphere_in_r3": _make_round_sphere,
    "geodesic_cylinder_s2xr": _make_geodesic_cylinder,
}


def generate(name, chart=None, nu=33, nv=33, **params):
    """Build a fixture on the given chart (or its default chart).

    ``product_of_curves`` accepts ``kappa1``/``kappa2`` geodesic
    curvatures; other fixtures take no parameters.
    """
    if name not in _GENERATORS:
        raise FixtureError(f"unknown fixture {name!r}")
    if chart is None:
        chart = default_chart(name, nu=nu, nv=nv)
    if params and name != "product_of_curves":
        raise FixtureError(f"fixture {name!r} takes no parameters")
    return _GENERATORS[name](chart, **params)
