"""Shared helpers: cached fixture bundles and a hyperbolic test surface."""

import functools

import numpy as np
import pytest

from spaceforms import fixtures
from spaceforms.ambient import MultiproductSpec, SpaceFormFactor
from spaceforms.dataset import GeometricDataset
from spaceforms.grid import Chart
from spaceforms.immersion import ImmersionField


@functools.lru_cache(maxsize=64)
def bundle(name, n=33, **params):
    """Cached fixture bundle; treat as read-only, copy before mutating."""
    return fixtures.generate(name, nu=n, nv=n, **params)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def hyperbolic_distance_sphere(n=33, r0=1.0):
    """Geodesic distance sphere of radius r0 inside hyperbolic 3-space.

    Umbilic, with induced metric sinh(r0)^2 times the round band metric
    and shape operator -coth(r0) Id; the image spans all of Minkowski
    4-space.  Exercises every Minkowski branch: the timelike line section,
    signed Gram-Schmidt, sheet conventions and Lorentz alignment.
    """
    spec = MultiproductSpec([SpaceFormFactor(3, -1.0)])
    chart = Chart(nu=n, nv=n, hu=1.2 / (n - 1), hv=1.0 / (n - 1))
    u = chart.hu * np.arange(n)
    v = -0.5 + chart.hv * np.arange(n)
    uu, vv = np.meshgrid(u, v)
    sh, ch = np.sinh(r0), np.cosh(r0)
    band = np.zeros(chart.shape + (2, 2))
    band[..., 0, 0] = np.cos(vv) ** 2
    band[..., 1, 1] = 1.0
    ds = GeometricDataset(
        spec=spec, chart=chart, base_dim=2, bundle_rank=1,
        g=sh * sh * band,
        B=(-sh * ch) * band[:, :, None, :, :],
        conn_u=np.zeros(chart.shape + (1, 1)),
        conn_v=np.zeros(chart.shape + (1, 1)),
        f=np.broadcast_to(np.eye(2), (1,) + chart.shape + (2, 2)).copy(),
        h=np.zeros((1,) + chart.shape + (1, 2)),
        t=np.ones((1,) + chart.shape + (1, 1)),
    ).validate()
    cu, su, cv, sv = np.cos(uu), np.sin(uu), np.cos(vv), np.sin(vv)
    sigma = np.stack([cu * cv, su * cv, sv], axis=-1)
    sigma_u = np.stack([-su * cv, cu * cv, np.zeros_like(uu)], axis=-1)
    sigma_v = np.stack([-cu * sv, -su * sv, cv], axis=-1)
    const = np.full(chart.shape + (1,), 1.0)
    points = np.concatenate([ch * const, sh * sigma], axis=-1)
    push_u = np.concatenate([0.0 * const, sh * sigma_u], axis=-1)
    push_v = np.concatenate([0.0 * const, sh * sigma_v], axis=-1)
    normal = np.concatenate([sh * const, ch * sigma], axis=-1)
    gt = ImmersionField(spec=spec, chart=chart, points=points,
                        push=np.stack([push_u, push_v]),
                        normal_frames=np.stack([normal]))
    return ds, gt


def conjugate_e_frame(ds, q):
    """Relabel the E-frame by a constant orthogonal matrix q (new = old @ q)."""
    out = ds.copy()
    out.B = np.einsum("ba,vubcd->vuacd", q, ds.B)
    out.h = np.einsum("ba,ivubc->ivuac", q, ds.h)
    out.t = np.einsum("ba,ivubc,cd->ivuad", q, ds.t, q)
    out.conn_u = np.einsum("ba,vubc,cd->vuad", q, ds.conn_u, q)
    out.conn_v = np.einsum("ba,vubc,cd->vuad", q, ds.conn_v, q)
    return out


def measured_order(coarse, fine):
    """log2 convergence order from residuals at h and h/2."""
    return np.log2(coarse / fine)
