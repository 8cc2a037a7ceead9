"""Discrete submanifold data on a chart, with I/O and derived operators.

A dataset holds, per node of a 2D chart: the metric g of the abstract base
(in chart coordinates), the bundle-valued second fundamental form B, the
connection coefficients of the bundle connection in a fixed global
orthonormal frame of E (skew matrices, one per chart direction), and per
product factor the induced operators f_i (tangent), h_i (tangent to E) and
t_i (E to E).  The adjoint s_i = g^{-1} h_i^T is always derived, never
stored.

Index conventions: tangent coordinate indices are a, b, ... with u = 0 and
v = 1; E-frame indices are alpha, beta, ...; node fields are indexed
[iv, iu, ...].
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .ambient import MultiproductSpec, SpaceFormFactor
from .errors import DimensionError, SchemaError, ValidationError
from .grid import Chart, check_seam, d_du, d_dv

FORMAT_VERSION = 1

__all__ = [
    "GeometricDataset",
    "OperatorQuadruple",
    "CompatReport",
    "ResidualStat",
    "ToleranceProfile",
    "PROFILES",
    "load_dataset",
    "loads_dataset",
    "save_dataset",
    "dumps_dataset",
    "derive_adjoint_s",
    "shape_operator",
    "christoffels",
    "tangent_frame",
]


# ---------------------------------------------------------------------------
# tolerance profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ToleranceProfile:
    """Named set of residual tolerances used by verdicts."""

    name: str
    algebraic: float
    differential: float
    curvature: float
    verify: float
    rank_gap: float = 1e-8
    transport: float = 1e-9


PROFILES = {
    "default": ToleranceProfile("default", 1e-10, 1e-2, 1e-2, 1e-2),
    "strict": ToleranceProfile("strict", 1e-11, 1e-3, 1e-3, 1e-3),
}


def resolve_profile(profile):
    if isinstance(profile, ToleranceProfile):
        return profile
    try:
        return PROFILES[profile]
    except KeyError:
        raise ValidationError(f"unknown tolerance profile {profile!r}") from None


# ---------------------------------------------------------------------------
# residual reports
# ---------------------------------------------------------------------------

@dataclass
class ResidualStat:
    """Max/mean of a nonnegative residual field plus the arg-max node."""

    max: float
    mean: float
    argmax_node: tuple

    @classmethod
    def from_field(cls, res):
        res = np.asarray(res, dtype=float)
        if res.ndim < 2:
            val = float(np.max(res)) if res.size else 0.0
            return cls(val, float(np.mean(res)) if res.size else 0.0, (0, 0))
        per_node = res if res.ndim == 2 else res.reshape(res.shape[0], res.shape[1], -1).max(axis=-1)
        iv, iu = np.unravel_index(int(np.argmax(per_node)), per_node.shape)
        return cls(float(np.max(per_node)), float(np.mean(per_node)), (int(iu), int(iv)))


@dataclass
class CompatReport:
    """Residual statistics keyed by equation name, with a pass/fail verdict."""

    equations: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    profile: str = ""

    def add(self, name, res_field, tol):
        self.equations[name] = ResidualStat.from_field(res_field)
        self.tolerances[name] = float(tol)

    def merge(self, other):
        self.equations.update(other.equations)
        self.tolerances.update(other.tolerances)
        if not self.profile:
            self.profile = other.profile
        return self

    @property
    def verdict(self):
        return all(
            self.equations[k].max <= self.tolerances[k] for k in self.equations
        )

    def failing(self):
        return [k for k in self.equations if self.equations[k].max > self.tolerances[k]]

    def max_residual(self, keys=None):
        keys = keys if keys is not None else list(self.equations)
        return max((self.equations[k].max for k in keys), default=0.0)

    def to_dict(self):
        return {
            "profile": self.profile,
            "verdict": bool(self.verdict),
            "equations": {
                k: {
                    "max": v.max,
                    "mean": v.mean,
                    "argmax_node": list(v.argmax_node),
                    "tolerance": self.tolerances[k],
                }
                for k, v in sorted(self.equations.items())
            },
        }

    def to_json(self):
        return dumps_json(self.to_dict())


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------

@dataclass
class OperatorQuadruple:
    """One factor's induced operators at a node (or node field)."""

    f: np.ndarray
    h: np.ndarray
    s: np.ndarray
    t: np.ndarray

    def block_matrix(self):
        """The (n+d)x(n+d) map [f s; h t] acting on TM + E."""
        top = np.concatenate([self.f, self.s], axis=-1)
        bot = np.concatenate([self.h, self.t], axis=-1)
        return np.concatenate([top, bot], axis=-2)


@dataclass
class GeometricDataset:
    """Immutable discrete data of a candidate submanifold of a multiproduct."""

    spec: MultiproductSpec
    chart: Chart
    base_dim: int
    bundle_rank: int
    g: np.ndarray        # (nv, nu, n, n)
    B: np.ndarray        # (nv, nu, d, n, n)
    conn_u: np.ndarray   # (nv, nu, d, d)
    conn_v: np.ndarray   # (nv, nu, d, d)
    f: np.ndarray        # (m, nv, nu, n, n)
    h: np.ndarray        # (m, nv, nu, d, n)
    t: np.ndarray        # (m, nv, nu, d, d)

    def __post_init__(self):
        self._validate_shapes()

    # -- structure ---------------------------------------------------------

    @property
    def n(self):
        return self.base_dim

    @property
    def d(self):
        return self.bundle_rank

    @property
    def m(self):
        return self.spec.num_factors

    def conn(self, direction):
        return self.conn_u if direction == 0 else self.conn_v

    @property
    def s(self):
        """Adjoints s_i = g^{-1} h_i^T, shape (m, nv, nu, n, d)."""
        ginv = np.linalg.inv(self.g)
        return np.einsum("vuab,ivucb->ivuac", ginv, self.h)

    def quadruple(self, i):
        return OperatorQuadruple(self.f[i], self.h[i], self.s[i], self.t[i])

    def copy(self):
        return GeometricDataset(
            self.spec, self.chart, self.base_dim, self.bundle_rank,
            self.g.copy(), self.B.copy(), self.conn_u.copy(), self.conn_v.copy(),
            self.f.copy(), self.h.copy(), self.t.copy(),
        )

    # -- validation ---------------------------------------------------------

    def _validate_shapes(self):
        nv, nu = self.chart.nv, self.chart.nu
        n, d, m = self.base_dim, self.bundle_rank, self.spec.num_factors
        expect = {
            "g": (nv, nu, n, n),
            "B": (nv, nu, d, n, n),
            "e_connection_u": (nv, nu, d, d),
            "e_connection_v": (nv, nu, d, d),
            "f": (m, nv, nu, n, n),
            "h": (m, nv, nu, d, n),
            "t": (m, nv, nu, d, d),
        }
        arrays = {
            "g": self.g, "B": self.B,
            "e_connection_u": self.conn_u, "e_connection_v": self.conn_v,
            "f": self.f, "h": self.h, "t": self.t,
        }
        for name, arr in arrays.items():
            if arr.shape != expect[name]:
                raise DimensionError(
                    f"field {name!r} has shape {arr.shape}, expected {expect[name]}"
                )
        if self.spec.base_total_dim != n + d:
            raise DimensionError(
                f"dimension bookkeeping failed: sum n_i = {self.spec.base_total_dim} "
                f"but n + d = {n + d}"
            )

    def validate(self, tol=1e-12):
        """Check all type invariants; failures name the field and node."""
        self._validate_shapes()
        # g positive definite everywhere (Cholesky succeeds)
        try:
            np.linalg.cholesky(self.g)
        except np.linalg.LinAlgError:
            node = self._first_bad_node(lambda q: not _is_spd(q), self.g)
            raise ValidationError(
                f"metric g is not positive definite at node {node}",
                field="g", node=node,
            ) from None
        sym_gap = np.abs(self.B - np.swapaxes(self.B, -1, -2))
        if np.max(sym_gap) > tol:
            node = _argmax_node(sym_gap.reshape(sym_gap.shape[0], sym_gap.shape[1], -1).max(axis=-1))
            raise ValidationError(
                f"second fundamental form B is not symmetric at node {node}",
                field="B", node=node,
            )
        for name, a in (("e_connection_u", self.conn_u), ("e_connection_v", self.conn_v)):
            skew_gap = np.abs(a + np.swapaxes(a, -1, -2))
            if np.max(skew_gap) > tol:
                node = _argmax_node(skew_gap.reshape(a.shape[0], a.shape[1], -1).max(axis=-1))
                raise ValidationError(
                    f"connection field {name} is not skew at node {node}",
                    field=name, node=node,
                )
        for name, arr in self._fields_for_io().items():
            check_seam(arr, self.chart, name)
        return self

    def _fields_for_io(self):
        out = {"g": self.g, "B": self.B,
               "e_connection_u": self.conn_u, "e_connection_v": self.conn_v}
        for i in range(self.m):
            out[f"f_{i + 1}"] = self.f[i]
            out[f"h_{i + 1}"] = self.h[i]
            out[f"t_{i + 1}"] = self.t[i]
        return out

    @staticmethod
    def _first_bad_node(pred, field_arr):
        nv, nu = field_arr.shape[:2]
        for iv in range(nv):
            for iu in range(nu):
                if pred(field_arr[iv, iu]):
                    return (iu, iv)
        return None


def _is_spd(q):
    try:
        np.linalg.cholesky(q)
        return True
    except np.linalg.LinAlgError:
        return False


def _argmax_node(per_node):
    iv, iu = np.unravel_index(int(np.argmax(per_node)), per_node.shape)
    return (int(iu), int(iv))


# ---------------------------------------------------------------------------
# derived quantities
# ---------------------------------------------------------------------------

def derive_adjoint_s(g, h_i):
    """Metric adjoint of h_i: the unique s_i with g(X, s_i xi) = gbar(h_i X, xi).

    In the orthonormal E-frame this is s_i = g^{-1} h_i^T.  Accepts single
    nodes or node fields.
    """
    g = np.asarray(g, dtype=float)
    h_i = np.asarray(h_i, dtype=float)
    return np.einsum("...ab,...cb->...ac", np.linalg.inv(g), h_i)


def shape_operator(B_node, xi, g_node):
    """Weingarten operator A_xi with <A_xi X, Y> = <B(X, Y), xi>.

    ``B_node`` has shape (d, n, n) with E index first; ``xi`` is a d-vector
    in the orthonormal E-frame.  The result is g-symmetric.
    """
    m = np.einsum("a,abc->bc", np.asarray(xi, dtype=float), np.asarray(B_node, dtype=float))
    return np.linalg.solve(np.asarray(g_node, dtype=float), m)


def christoffels(g_field, chart: Chart):
    """Levi-Civita symbols Gamma^c_{ab} of a metric field, O(h^2) accurate.

    Returns shape (nv, nu, n, n, n) indexed [c, a, b]; symmetric in (a, b)
    and metric compatible up to the second-order stencil error.
    """
    g_field = np.asarray(g_field, dtype=float)
    if g_field.shape[-1] != 2:
        raise DimensionError("christoffels requires a 2D chart metric")
    dg = np.stack([d_du(g_field, chart), d_dv(g_field, chart)], axis=2)  # [v,u,a,i,j]
    ginv = np.linalg.inv(g_field)
    # Gamma^c_ab = 1/2 g^{cd} (d_a g_db + d_b g_da - d_d g_ab)
    return 0.5 * (
        np.einsum("vucd,vuadb->vucab", ginv, dg)
        + np.einsum("vucd,vubda->vucab", ginv, dg)
        - np.einsum("vucd,vudab->vucab", ginv, dg)
    )


def tangent_frame(g_field):
    """Gram-Schmidt frame matrix P with P^T g P = Id and det P > 0.

    Columns are the components of the orthonormal frame vectors in chart
    coordinates; the exact inverse is P^{-1} = P^T g.
    """
    g_field = np.asarray(g_field, dtype=float)
    guu = g_field[..., 0, 0]
    guv = g_field[..., 0, 1]
    gvv = g_field[..., 1, 1]
    p = np.zeros_like(g_field)
    r = np.sqrt(guu)
    w = np.sqrt(np.maximum(gvv - guv * guv / guu, 0.0))
    p[..., 0, 0] = 1.0 / r
    p[..., 0, 1] = -guv / (guu * w)
    p[..., 1, 1] = 1.0 / w
    return p


def frame_inverse(p_field, g_field):
    """P^{-1} = P^T g, exact by construction of the frame."""
    return np.einsum("...ba,...bc->...ac", p_field, g_field)


def spin_connection(g_field, chart: Chart):
    """Connection coefficients of the Levi-Civita connection in the
    Gram-Schmidt frame, per direction: omega[a][p, q] = <nabla_a e_q, e_p>.

    The symmetric part of the raw expression is pure stencil error (metric
    compatibility holds exactly for Christoffels built from the same
    differences), so the result is projected onto its skew part.
    """
    p = tangent_frame(g_field)
    gamma = christoffels(g_field, chart)
    out = []
    for a, dp in enumerate((d_du(p, chart), d_dv(p, chart))):
        cov = dp + np.einsum("vuce,vueq->vucq", gamma[..., a, :], p)
        om = np.einsum("vubp,vubc,vucq->vupq", p, g_field, cov)
        out.append(0.5 * (om - np.swapaxes(om, -1, -2)))
    return np.stack(out)


def orthonormal_projections(ds: "GeometricDataset"):
    """Block maps [f s; h t] of every factor in the orthonormal gauge.

    Returns shape (m, nv, nu, n+d, n+d).  With exactly compatible data each
    matrix is a symmetric idempotent, so its singular values sit in {0, 1}
    and the rank test has a wide gap.
    """
    p = tangent_frame(ds.g)
    fhat = np.einsum("vubp,vubc,ivucd,vudq->ivupq", p, ds.g, ds.f, p)
    hhat = np.einsum("ivuab,vubq->ivuaq", ds.h, p)
    m, nv, nu = ds.m, ds.chart.nv, ds.chart.nu
    n, d = ds.n, ds.d
    out = np.zeros((m, nv, nu, n + d, n + d))
    out[:, :, :, :n, :n] = fhat
    out[:, :, :, n:, :n] = hhat
    out[:, :, :, :n, n:] = np.swapaxes(hhat, -1, -2)
    out[:, :, :, n:, n:] = ds.t
    return out


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def _emit_json(obj, parts):
    if isinstance(obj, dict):
        parts.append("{")
        for k, key in enumerate(obj):
            if k:
                parts.append(",")
            parts.append(json.dumps(key))
            parts.append(":")
            _emit_json(obj[key], parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for k, item in enumerate(obj):
            if k:
                parts.append(",")
            _emit_json(item, parts)
        parts.append("]")
    elif isinstance(obj, bool):
        parts.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        if not np.isfinite(obj):
            raise ValidationError("cannot serialize non-finite real")
        text = format(float(obj), ".17g")
        if not any(c in text for c in ".eE"):
            text += ".0"  # keep zero signs and float typing through JSON
        parts.append(text)
    elif obj is None:
        parts.append("null")
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    else:
        raise SchemaError(f"cannot serialize object of type {type(obj).__name__}")


def dumps_json(obj):
    """Serialize to JSON with all reals at 17 significant digits."""
    parts = []
    _emit_json(obj, parts)
    return "".join(parts)


def dumps_dataset(ds: GeometricDataset):
    doc = {
        "version": FORMAT_VERSION,
        "factors": [{"dim": f.dim, "curvature": f.curvature} for f in ds.spec.factors],
        "chart": {
            "nu": ds.chart.nu, "nv": ds.chart.nv,
            "hu": ds.chart.hu, "hv": ds.chart.hv,
            "periodic_u": ds.chart.periodic_u, "periodic_v": ds.chart.periodic_v,
        },
        "base_dim": ds.base_dim,
        "bundle_rank": ds.bundle_rank,
        "fields": {
            name: arr.ravel(order="C").tolist()
            for name, arr in ds._fields_for_io().items()
        },
    }
    return dumps_json(doc)


def save_dataset(ds: GeometricDataset, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_dataset(ds))
        fh.write("\n")


def _require(doc, key, kind):
    if key not in doc:
        raise SchemaError(f"missing key {key!r} in dataset document")
    val = doc[key]
    if kind is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise SchemaError(f"key {key!r} must be a number")
        return float(val)
    if not isinstance(val, kind):
        raise SchemaError(f"key {key!r} must be of type {kind.__name__}")
    return val


def loads_dataset(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("dataset document must be a JSON object")
    version = _require(doc, "version", int)
    if version != FORMAT_VERSION:
        raise SchemaError(f"unsupported format version {version}")
    raw_factors = _require(doc, "factors", list)
    factors = [
        SpaceFormFactor(_require(f, "dim", int), _require(f, "curvature", float))
        for f in raw_factors
    ]
    spec = MultiproductSpec(factors)
    ch = _require(doc, "chart", dict)
    chart = Chart(
        nu=_require(ch, "nu", int), nv=_require(ch, "nv", int),
        hu=_require(ch, "hu", float), hv=_require(ch, "hv", float),
        periodic_u=_require(ch, "periodic_u", bool),
        periodic_v=_require(ch, "periodic_v", bool),
    )
    n = _require(doc, "base_dim", int)
    d = _require(doc, "bundle_rank", int)
    if spec.base_total_dim != n + d:
        raise DimensionError(
            f"dimension bookkeeping failed: sum n_i = {spec.base_total_dim} "
            f"but n + d = {n + d}"
        )
    fields = _require(doc, "fields", dict)
    nv, nu, m = chart.nv, chart.nu, spec.num_factors
    shapes = {"g": (nv, nu, n, n), "B": (nv, nu, d, n, n),
              "e_connection_u": (nv, nu, d, d), "e_connection_v": (nv, nu, d, d)}
    for i in range(m):
        shapes[f"f_{i + 1}"] = (nv, nu, n, n)
        shapes[f"h_{i + 1}"] = (nv, nu, d, n)
        shapes[f"t_{i + 1}"] = (nv, nu, d, d)
    arrays = {}
    for name, shape in shapes.items():
        if name not in fields:
            raise SchemaError(f"missing field {name!r}")
        flat = np.asarray(fields[name], dtype=float)
        want = int(np.prod(shape))
        if flat.ndim != 1 or flat.size != want:
            raise SchemaError(
                f"field {name!r} has {flat.size} entries, expected {want}"
            )
        arrays[name] = flat.reshape(shape)
    ds = GeometricDataset(
        spec=spec, chart=chart, base_dim=n, bundle_rank=d,
        g=arrays["g"], B=arrays["B"],
        conn_u=arrays["e_connection_u"], conn_v=arrays["e_connection_v"],
        f=np.stack([arrays[f"f_{i + 1}"] for i in range(m)]),
        h=np.stack([arrays[f"h_{i + 1}"] for i in range(m)]),
        t=np.stack([arrays[f"t_{i + 1}"] for i in range(m)]),
    )
    return ds.validate()


def load_dataset(path):
    """Load and validate a dataset document from a file path."""
    with open(path, "r", encoding="utf-8") as fh:
        return loads_dataset(fh.read())
