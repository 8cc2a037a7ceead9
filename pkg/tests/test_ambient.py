"""Ambient model spaces, curvature tensor, and isometry alignment."""

import numpy as np
import pytest
import scipy.linalg

from spaceforms.ambient import (
    MultiproductSpec,
    SpaceFormFactor,
    align_isometry,
    ambient_curvature,
    ambient_inner,
    factor_constraint_residual,
    geodesic_distance,
)
from spaceforms.errors import AlignmentError, DimensionError, ValidationError

S2 = SpaceFormFactor(2, 1.0)
H2 = SpaceFormFactor(2, -1.0)
R2 = SpaceFormFactor(2, 0.0)


def test_factor_validation():
    with pytest.raises(ValidationError):
        SpaceFormFactor(0, 1.0)
    with pytest.raises(ValidationError):
        MultiproductSpec([R2, S2])  # flat factor only allowed last
    MultiproductSpec([S2, R2])


def test_spec_derived_structure():
    spec = MultiproductSpec([S2, H2, R2])
    assert spec.ambient_dims == [3, 3, 2]
    assert spec.total_ambient_dim == 8
    sig = spec.signature
    assert list(sig) == [1, 1, 1, -1, 1, 1, 1, 1]


def test_constraint_residual_examples():
    spec = MultiproductSpec([S2])
    north = np.array([0.0, 0.0, 1.0])
    assert factor_constraint_residual(north, spec)[0] == 0.0
    assert factor_constraint_residual(np.array([2.0, 0.0, 0.0]), spec)[0] == 3.0
    spec_h = MultiproductSpec([H2])
    pt = np.array([np.sqrt(2.0), 1.0, 0.0])
    assert factor_constraint_residual(pt, spec_h)[0] == pytest.approx(0.0, abs=1e-15)


def test_constraint_flat_convention_and_mismatch():
    spec = MultiproductSpec([S2, SpaceFormFactor(1, 0.0)])
    p = np.array([1.0, 0.0, 0.0, 7.0])
    res = factor_constraint_residual(p, spec)
    assert res[0] == 0.0 and res[1] == 0.0
    with pytest.raises(DimensionError):
        factor_constraint_residual(np.zeros(5), spec)


def test_curvature_flat_factor_vanishes():
    spec = MultiproductSpec([SpaceFormFactor(3, 0.0)])
    rng = np.random.default_rng(0)
    x, y, z = rng.normal(size=(3, 3))
    assert np.allclose(ambient_curvature(spec, x, y, z), 0.0)


def test_curvature_unit_sphere_identity():
    spec = MultiproductSpec([S2])
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([0.0, 1.0, 0.0])
    assert np.allclose(ambient_curvature(spec, x, y, y), x)


def test_curvature_cross_factor_annihilation():
    spec = MultiproductSpec([S2, S2])
    x = np.array([1.0, 2.0, 3.0, 0.0, 0.0, 0.0])
    y = np.array([0.0, 0.0, 0.0, 1.0, -1.0, 2.0])
    rng = np.random.default_rng(1)
    z = rng.normal(size=6)
    assert np.allclose(ambient_curvature(spec, x, y, z), 0.0)


def test_curvature_antisymmetry_and_skew_pairing():
    rng = np.random.default_rng(2)
    spec = MultiproductSpec([S2, H2, R2])
    for _ in range(25):
        x, y, z, w = rng.normal(size=(4, spec.total_ambient_dim))
        rxy = ambient_curvature(spec, x, y, z)
        ryx = ambient_curvature(spec, y, x, z)
        assert np.max(np.abs(rxy + ryx)) < 1e-12
        lhs = ambient_inner(spec, ambient_curvature(spec, x, y, z), w)
        rhs = -ambient_inner(spec, ambient_curvature(spec, x, y, w), z)
        assert abs(lhs - rhs) < 1e-12


def _sphere_cloud(rng, count):
    pts = rng.normal(size=(count, 3))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _hyperboloid_cloud(rng, count):
    xy = 0.8 * rng.normal(size=(count, 2))
    x0 = np.sqrt(1.0 + np.sum(xy * xy, axis=1))
    return np.column_stack([x0, xy])


def _random_lorentz(rng, k=3):
    gen = np.zeros((k, k))
    gen[0, 1:] = rng.normal(size=k - 1) * 0.3
    gen[1:, 0] = gen[0, 1:]
    rot = np.zeros((k, k))
    rot[1:, 1:] = rng.normal(size=(k - 1, k - 1))
    rot = rot - rot.T
    return scipy.linalg.expm(gen + 0.5 * rot)


def test_align_identity_and_exact_rotation(rng):
    spec = MultiproductSpec([S2])
    cloud = _sphere_cloud(rng, 40)
    al = align_isometry(cloud, cloud, spec)
    assert al.residual < 1e-12
    th = np.pi / 3.0
    rot = np.array([[np.cos(th), -np.sin(th), 0.0],
                    [np.sin(th), np.cos(th), 0.0],
                    [0.0, 0.0, 1.0]])
    al = align_isometry(cloud, cloud @ rot.T, spec)
    assert al.residual < 1e-10
    assert np.max(np.abs(al.blocks[0] - rot)) < 1e-10


def test_align_recovers_product_isometry(rng):
    spec = MultiproductSpec([S2, H2, R2])
    n = 60
    sph = _sphere_cloud(rng, n)
    hyp = _hyperboloid_cloud(rng, n)
    flat = rng.normal(size=(n, 2))
    src = np.concatenate([sph, hyp, flat], axis=1)
    q_s = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    q_h = _random_lorentz(rng)
    q_f = np.linalg.qr(rng.normal(size=(2, 2)))[0]
    t_f = rng.normal(size=2)
    dst = np.concatenate([sph @ q_s.T, hyp @ q_h.T, flat @ q_f.T + t_f], axis=1)
    al = align_isometry(src, dst, spec)
    assert al.residual < 1e-9
    assert max(al.form_errors) < 1e-10
    eta = np.diag([-1.0, 1.0, 1.0])
    assert np.max(np.abs(al.blocks[1].T @ eta @ al.blocks[1] - eta)) < 1e-10


def test_align_mixed_sheets_rejected(rng):
    spec = MultiproductSpec([H2])
    cloud = _hyperboloid_cloud(rng, 20)
    flipped = cloud.copy()
    flipped[3] = -flipped[3]
    with pytest.raises(AlignmentError, match="sheet"):
        align_isometry(flipped, cloud, spec)


def test_align_degenerate_cloud_strict(rng):
    spec = MultiproductSpec([S2])
    cloud = np.tile(np.array([0.0, 0.0, 1.0]), (10, 1))
    with pytest.raises(AlignmentError, match="degenerate"):
        align_isometry(cloud, cloud, spec, strict=True)
    # non-strict mode still produces a valid zero-residual minimizer
    assert align_isometry(cloud, cloud, spec).residual < 1e-12


def test_align_too_few_points(rng):
    spec = MultiproductSpec([S2])
    cloud = _sphere_cloud(rng, 3)
    with pytest.raises(AlignmentError):
        align_isometry(cloud, cloud, spec)


def test_geodesic_distance_floor_and_values():
    spec = MultiproductSpec([S2])
    p = np.array([1.0, 0.0, 0.0])
    q = np.array([0.0, 1.0, 0.0])
    assert geodesic_distance(spec, p, q) == pytest.approx(np.pi / 2.0)
    assert geodesic_distance(spec, p, p) < 1e-15
    assert geodesic_distance(spec, p, -p) == pytest.approx(np.pi)
    spec_h = MultiproductSpec([H2])
    a = np.array([1.0, 0.0, 0.0])
    b = np.array([np.cosh(0.7), np.sinh(0.7), 0.0])
    assert geodesic_distance(spec_h, a, b) == pytest.approx(0.7, abs=1e-12)


def test_constraint_invariant_under_alignment_blocks(rng):
    spec = MultiproductSpec([S2, H2])
    sph = _sphere_cloud(rng, 30)
    hyp = _hyperboloid_cloud(rng, 30)
    pts = np.concatenate([sph, hyp], axis=1)
    al = align_isometry(pts, pts, spec)
    mapped = al.apply(pts)
    before = factor_constraint_residual(pts, spec)
    after = factor_constraint_residual(mapped, spec)
    assert np.max(np.abs(before - after)) < 1e-12
