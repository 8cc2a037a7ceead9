"""Structured 2D chart and second-order finite differences.

Fields live on a rectangular grid with u along axis 1 (inner index) and v
along axis 0 (outer index), matching the node-major (v-outer, u-inner)
serialization order.  Derivatives are central in the interior and
second-order one-sided at non-periodic boundaries, so every stencil is
O(h^2).

Periodic directions use the duplicated-seam convention: the first and last
grid line of a periodic direction sample the same geometric point, and
fields must agree there.  Wrap-around differences act on the reduced set of
distinct nodes.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Chart:
    """Uniform grid on a simply connected coordinate rectangle."""

    nu: int
    nv: int
    hu: float
    hv: float
    periodic_u: bool = False
    periodic_v: bool = False

    def __post_init__(self):
        if self.nu < 5 or self.nv < 5:
            raise ValidationError(
                f"chart must be at least 5x5 for the difference stencils, got {self.nu}x{self.nv}",
                field="chart",
            )
        if self.hu <= 0 or self.hv <= 0:
            raise ValidationError("chart spacings must be positive", field="chart")

    @property
    def shape(self):
        """(nv, nu) leading shape of node fields."""
        return (self.nv, self.nu)

    def nodes(self):
        """Iterate (iu, iv) over all nodes, u fastest."""
        for iv in range(self.nv):
            for iu in range(self.nu):
                yield iu, iv


def _d_nonperiodic(field, h, axis):
    # The boundary stencil is chosen so its leading error equals the
    # central stencil's (-h^2 f'''/6): nested differences then see a
    # globally smooth error field and stay second-order up to the edge.
    out = np.empty_like(field)
    f = np.moveaxis(field, axis, 0)
    g = np.moveaxis(out, axis, 0)
    g[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    g[0] = (-2.0 * f[0] + 3.5 * f[1] - 2.0 * f[2] + 0.5 * f[3]) / h
    g[-1] = (2.0 * f[-1] - 3.5 * f[-2] + 2.0 * f[-3] - 0.5 * f[-4]) / h
    return out


def _d_periodic(field, h, axis):
    # Duplicated seam: drop the last line, wrap, then copy line 0 back to
    # the seam so the output has the same duplicated layout.
    f = np.moveaxis(field, axis, 0)
    red = f[:-1]
    der = (np.roll(red, -1, axis=0) - np.roll(red, 1, axis=0)) / (2.0 * h)
    out = np.concatenate([der, der[:1]], axis=0)
    return np.moveaxis(out, 0, axis)


def d_du(field, chart: Chart):
    """Partial derivative along u (axis 1) of a node field."""
    if chart.periodic_u:
        return _d_periodic(field, chart.hu, 1)
    return _d_nonperiodic(field, chart.hu, 1)


def d_dv(field, chart: Chart):
    """Partial derivative along v (axis 0) of a node field."""
    if chart.periodic_v:
        return _d_periodic(field, chart.hv, 0)
    return _d_nonperiodic(field, chart.hv, 0)


def check_seam(field, chart: Chart, name, tol=1e-12):
    """Verify duplicated-seam equality on periodic directions."""
    if chart.periodic_u:
        gap = np.max(np.abs(field[:, 0] - field[:, -1]))
        if gap > tol:
            raise ValidationError(
                f"field {name!r} is not periodic in u (seam mismatch {gap:.3e})",
                field=name,
            )
    if chart.periodic_v:
        gap = np.max(np.abs(field[0] - field[-1]))
        if gap > tol:
            raise ValidationError(
                f"field {name!r} is not periodic in v (seam mismatch {gap:.3e})",
                field=name,
            )
