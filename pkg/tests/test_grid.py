"""Stencil accuracy and periodic seam handling."""

import numpy as np
import pytest

from spaceforms.errors import ValidationError
from spaceforms.grid import Chart, check_seam, d_du, d_dv


def test_chart_minimum_size():
    with pytest.raises(ValidationError):
        Chart(nu=4, nv=9, hu=0.1, hv=0.1)
    with pytest.raises(ValidationError):
        Chart(nu=9, nv=9, hu=-0.1, hv=0.1)


def test_derivative_second_order_including_boundary():
    errs = []
    for n in (33, 65):
        ch = Chart(nu=n, nv=5, hu=1.0 / (n - 1), hv=1.0)
        u = (np.arange(n) * ch.hu)[None, :] * np.ones((5, 1))
        f = np.sin(3.0 * u)
        err = d_du(f, ch) - 3.0 * np.cos(3.0 * u)
        errs.append(np.max(np.abs(err)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)


def test_boundary_error_matches_interior_error_shape():
    # the one-sided stencil is built to reproduce the central stencil's
    # +h^2 f'''/6 leading error, so nested differences stay second order
    n = 65
    ch = Chart(nu=5, nv=n, hu=1.0, hv=1.0 / (n - 1))
    v = (np.arange(n) * ch.hv)[:, None] * np.ones((1, 5))
    f = np.sin(3.0 * v)
    err = d_dv(f, ch) - 3.0 * np.cos(3.0 * v)
    predicted = (ch.hv ** 2) / 6.0 * (-27.0 * np.cos(3.0 * v))
    assert np.allclose(err[0], predicted[0], rtol=0.05)
    assert np.allclose(err[n // 2], predicted[n // 2], rtol=0.05)


def test_nested_derivative_uniform_second_order():
    vals = []
    for n in (33, 65):
        ch = Chart(nu=5, nv=n, hu=1.0, hv=1.0 / (n - 1))
        v = (np.arange(n) * ch.hv)[:, None] * np.ones((1, 5))
        f = np.sin(3.0 * v)
        second = d_dv(d_dv(f, ch), ch)
        vals.append(np.max(np.abs(second + 9.0 * np.sin(3.0 * v))))
    assert vals[0] / vals[1] == pytest.approx(4.0, rel=0.25)


def test_periodic_derivative_exact_wrap():
    n = 33
    ch = Chart(nu=n, nv=5, hu=2.0 * np.pi / (n - 1), hv=1.0, periodic_u=True)
    u = (np.arange(n) * ch.hu)[None, :] * np.ones((5, 1))
    f = np.sin(u)
    err = np.abs(d_du(f, ch) - np.cos(u))
    # no boundary layer: wrap-around differences are uniformly central
    assert np.max(err[:, 0]) <= 2.0 * np.max(err[:, n // 2]) + 1e-12


def test_check_seam():
    ch = Chart(nu=9, nv=5, hu=2.0 * np.pi / 8, hv=1.0, periodic_u=True)
    u = (np.arange(9) * ch.hu)[None, :] * np.ones((5, 1))
    good = np.cos(u)
    check_seam(good, ch, "field")
    bad = good.copy()
    bad[:, -1] += 1e-6
    with pytest.raises(ValidationError, match="periodic"):
        check_seam(bad, ch, "field")
