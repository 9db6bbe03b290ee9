import math

import numpy as np
import pytest

from vdm.geometry import (GeometryError, Plane, RigidMotion, best_fit_point,
                          intersect_2_planes, intersect_3_planes,
                          rotation_matrix, unit)


def test_plane_normalizes():
    p = Plane([0, 0, 2], 4.0)
    assert np.allclose(p.normal, [0, 0, 1])
    assert p.offset == 4.0


def test_unit_rejects_zero():
    with pytest.raises(GeometryError):
        unit([0, 0, 0])


def test_plane_evaluate_signed():
    p = Plane([0, 0, 1], 1.0)
    assert p.evaluate([0, 0, 3]) == pytest.approx(2.0)
    assert p.evaluate([5, -2, 0.5]) == pytest.approx(-0.5)


def test_basis_orthonormal_right_handed():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = unit(rng.normal(size=3))
        p = Plane(n, rng.normal())
        u, v = p.basis()
        assert abs(u @ v) < 1e-12
        assert abs(u @ n) < 1e-12
        assert np.allclose(np.cross(u, v), n, atol=1e-12)


def test_project_lift_roundtrip():
    p = Plane(unit([1, 2, 3]), 0.7)
    pts2 = np.array([[0.0, 0.0], [1.5, -2.0], [0.3, 4.0]])
    back = p.project_2d(p.lift_3d(pts2))
    assert np.allclose(back, pts2, atol=1e-12)


def test_three_plane_intersection():
    a = Plane([1, 0, 0], 1.0)
    b = Plane([0, 1, 0], 2.0)
    c = Plane([0, 0, 1], 3.0)
    assert np.allclose(intersect_3_planes(a, b, c), [1, 2, 3])
    assert intersect_3_planes(a, a, c) is None


def test_two_plane_line():
    a = Plane([1, 0, 0], 1.0)
    b = Plane([0, 1, 0], 2.0)
    res = intersect_2_planes(a, b)
    assert res is not None
    p, d = res
    assert abs(abs(d[2]) - 1.0) < 1e-12
    assert a.evaluate(p) == pytest.approx(0.0, abs=1e-12)
    assert b.evaluate(p) == pytest.approx(0.0, abs=1e-12)
    assert intersect_2_planes(a, Plane([1, 0, 0], 5.0)) is None


def test_rotated_plane_matches_point_transform():
    # rotate plane z=1 by 90 degrees about the x axis through the origin:
    # the rotated plane is y = -1
    p = Plane([0, 0, 1], 1.0)
    q = p.rotated([0, 0, 0], [1, 0, 0], math.pi / 2)
    # verify by transforming three non-collinear points of the plane
    r = rotation_matrix([1, 0, 0], math.pi / 2)
    for pt in ([0, 0, 1], [1, 0, 1], [0, 1, 1]):
        moved = r @ np.asarray(pt, dtype=float)
        assert abs(q.evaluate(moved)) < 1e-12
    assert np.allclose(q.normal, [0, -1, 0], atol=1e-12)
    assert q.offset == pytest.approx(1.0)


def test_best_fit_point_consistency():
    planes = [Plane([1, 0, 0], 1.0), Plane([0, 1, 0], 1.0),
              Plane([0, 0, 1], 1.0), Plane(unit([1, 1, 1]), unit([1, 1, 1]) @ [1, 1, 1])]
    pt, resid = best_fit_point(planes)
    assert np.allclose(pt, [1, 1, 1], atol=1e-9)
    assert resid < 1e-9


def test_rigid_motion_preserves_incidence():
    rng = np.random.default_rng(3)
    m = RigidMotion(rotation_matrix(unit(rng.normal(size=3)), 0.8), [1.0, -2.0, 0.5])
    p = Plane(unit([2, -1, 0.5]), 1.3)
    x = p.lift_3d(np.array([[0.4, -0.2]]))[0]
    assert abs(m.apply_plane(p).evaluate(m.apply_point(x))) < 1e-12
