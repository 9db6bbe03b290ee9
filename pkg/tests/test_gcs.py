import math

import numpy as np
import pytest

from gcs_fixtures import cuboid_faces, well_constrained_cuboid
from oracles import fd_jacobian
from vdm.construct import unit_cube
from vdm.errors import IllPosedConstraintError, SolveError
from vdm.gcs import (Constraint, Gcs, assemble, jacobian, measured_distance,
                     solve_parametric, witness_from_solid)
from vdm.mesh import solid_volume


def test_perpendicular_residual_zero_at_witness():
    c = unit_cube()
    f = cuboid_faces(c)
    gcs = Gcs(sorted(c.faces), [Constraint(1, "perpendicular", [f["B"], f["L"]])])
    w, system = assemble(gcs, c)
    assert abs(system.residuals(w.q)[0]) < 1e-12


def test_witness_residuals_vanish_on_consistent_model():
    c, gcs, _f = well_constrained_cuboid()
    w, system = assemble(gcs, c)
    assert np.max(np.abs(system.residuals(w.q))) <= 1e-12


def test_angle_residual_value():
    # measured 40 degrees against a 30 degree target: cos40 - cos30
    c = unit_cube()
    f = cuboid_faces(c)
    gcs = Gcs(sorted(c.faces),
              [Constraint(1, "angle", [f["B"], f["L"]], math.radians(30.0))])
    w, system = assemble(gcs, c)
    q = w.q.copy()
    k = w.entity_index[f["L"]]
    q[k:k + 3] = [-math.cos(math.radians(50.0)), 0, -math.sin(math.radians(50.0))]
    # normals now 40 degrees apart
    got = system.residuals(q)[0]
    na = q[w.entity_index[f["B"]]:w.entity_index[f["B"]] + 3]
    expected = float(na @ q[k:k + 3]) - math.cos(math.radians(30.0))
    assert got == pytest.approx(expected, abs=1e-12)


def test_distance_requires_parallel_witness():
    c = unit_cube()
    f = cuboid_faces(c)
    gcs = Gcs(sorted(c.faces), [Constraint(1, "distance", [f["B"], f["L"]], 1.0)])
    with pytest.raises(IllPosedConstraintError):
        assemble(gcs, c)


def test_unit_norm_row_gradient():
    c, gcs, f = well_constrained_cuboid()
    w, system = assemble(gcs, c)
    jm = jacobian(w, system)
    for i, lab in enumerate(jm.row_labels):
        if isinstance(lab, tuple) and lab[0] == "unit":
            k = jm.entity_index[lab[1]]
            n = w.q[k:k + 3]
            assert np.allclose(jm.matrix[i, k:k + 3], 2 * n, atol=1e-12)
            assert jm.matrix[i, k + 3] == 0.0


def test_parallel_rows_ignore_offsets():
    c, gcs, f = well_constrained_cuboid()
    w, system = assemble(gcs, c)
    jm = jacobian(w, system)
    rows = jm.rows_of(1)  # parallel(B, T)
    for fid in gcs.entities:
        k = jm.entity_index[fid]
        assert np.all(jm.matrix[np.ix_(rows, [k + 3])] == 0.0)


def test_jacobian_matches_finite_differences_all_types():
    c = unit_cube()
    f = cuboid_faces(c)
    gcs = Gcs(sorted(c.faces), [
        Constraint(1, "parallel", [f["B"], f["T"]]),
        Constraint(2, "distance", [f["B"], f["T"]], 1.0),
        Constraint(3, "perpendicular", [f["B"], f["L"]]),
        Constraint(4, "angle", [f["L"], f["F"]], math.radians(90.0)),
        Constraint(5, "coincident", [f["B"], f["T"]]),
        Constraint(6, "fixed", [f["K"]]),
    ])
    w, system = assemble(gcs, c)
    rng = np.random.default_rng(11)
    for _ in range(10):
        q = w.q + rng.normal(scale=0.05, size=len(w.q))
        jm = system.jacobian(q)
        fd = fd_jacobian(system, q)
        assert np.max(np.abs(jm.matrix - fd)) < 1e-6


def test_parametric_height_change():
    c, gcs, f = well_constrained_cuboid()
    solved = solve_parametric(gcs, c, {2: 1.5})
    tol = solved.default_tol()
    assert measured_distance(solved, f["B"], f["T"], tol) == pytest.approx(1.5, abs=1e-8)
    assert measured_distance(solved, f["L"], f["R"], tol) == pytest.approx(1.0, abs=1e-8)
    assert solid_volume(solved) == pytest.approx(1.5, abs=1e-8)


def test_parametric_noop_keeps_geometry():
    c, gcs, _f = well_constrained_cuboid()
    solved = solve_parametric(gcs, c, {2: 1.0})
    for vid in c.vertices:
        assert np.allclose(solved.vertices[vid].position,
                           c.vertices[vid].position, atol=1e-12)


def test_parametric_idempotent():
    c, gcs, f = well_constrained_cuboid()
    s1 = solve_parametric(gcs, c, {2: 1.4})
    gcs2 = gcs.replaced([Constraint(cc.id, cc.type, list(cc.refs),
                                    1.4 if cc.id == 2 else cc.value)
                         for cc in gcs.constraints])
    s2 = solve_parametric(gcs2, s1, {2: 1.4})
    w1 = witness_from_solid(gcs, s1)
    w2 = witness_from_solid(gcs, s2)
    assert np.max(np.abs(w1.q - w2.q)) < 1e-10


def test_parametric_rejects_nondimensional():
    c, gcs, _f = well_constrained_cuboid()
    with pytest.raises(SolveError):
        solve_parametric(gcs, c, {1: 2.0})
