import math

import numpy as np
import pytest

from gcs_fixtures import (cuboid_faces, pocket_block_gcs,
                          well_constrained_cuboid)
from vdm.construct import unit_cube
from vdm.direct_edit import (ResolutionPolicy, apply_direct_edit, rotate_faces,
                             translate_faces)
from vdm.errors import StaleOptionsError
from vdm.gcs import Constraint, Gcs, assemble, jacobian
from vdm.sai_detection import evaluate_state, find_minimal_overconstrained
from vdm.sai_pipeline import analyze_gcs
from vdm.sai_resolution import (apply_resolution, auto_resolve,
                                generate_options, prioritize,
                                prioritized_options, sensitivity,
                                update_gcs_after_edit)


def test_state_matrix_well_under_over():
    """Three edits on the constrained cuboid family: a dimensional pull keeps
    the system well-constrained, an edit that consumes a face leaves it
    under-constrained, and a redundant gap chain surfaces as over-constraint
    after the update."""
    # row 1: pure dimension change -> well
    c, gcs, f = well_constrained_cuboid()
    out = apply_direct_edit(c, gcs, translate_faces([f["T"]], [0, 0, 1], 0.5),
                            ResolutionPolicy(auto=False))
    assert out.gtip_count == 0
    assert out.update_plan.remeasured == {2: pytest.approx(1.5)}
    assert out.state_report.state == "well"

    # row 2: rotation consumes the top face -> under
    c, gcs, f = well_constrained_cuboid()
    edit = rotate_faces([f["R"]], [1, 0, 0], [0, 1, 0], math.radians(-55.0))
    out = apply_direct_edit(c, gcs, edit, ResolutionPolicy(auto=False))
    assert out.gtip_count >= 1
    assert f["T"] not in out.face_map  # top face gone
    plan = out.update_plan
    assert 1 in plan.removed and 2 in plan.removed  # constraints on the lost top
    assert out.state_report.state == "under"

    # row 3: redundant gap chain -> over, cyclical dependency {5, 6, 7}
    m, gcs, f = pocket_block_gcs(extra_cycle=True)
    out = apply_direct_edit(m, gcs, translate_faces([f["P"]], [0, 0, -1], 0.3),
                            ResolutionPolicy(auto=False))
    assert out.gtip_count == 0
    assert out.state_report.state == "over"
    assert [c.support for c in out.certificates] == [[5, 6, 7]]
    assert out.update_plan.remeasured[5] == pytest.approx(0.7)
    assert out.update_plan.remeasured[7] == pytest.approx(1.3)


def test_update_plan_keeps_untouched():
    c, gcs, f = well_constrained_cuboid()
    out = apply_direct_edit(c, gcs, translate_faces([f["T"]], [0, 0, 1], 0.5),
                            ResolutionPolicy(auto=False))
    plan = out.update_plan
    assert set(plan.kept) == {1, 3, 4, 5, 6, 7, 8, 9}
    assert plan.removed == []


def test_violated_parallel_removed():
    c, gcs, f = well_constrained_cuboid()
    edit = rotate_faces([f["R"]], [1, 0, 0], [0, 1, 0], math.radians(-5.0))
    out = apply_direct_edit(c, gcs, edit, ResolutionPolicy(auto=False))
    plan = out.update_plan
    assert 3 in plan.removed  # parallel(L, R) rotated apart
    assert 4 in plan.removed  # distance needs parallel planes


def test_options_for_over_are_exactly_the_support():
    m, gcs, _f = pocket_block_gcs(extra_cycle=True)
    jm, rep, certs, parts = analyze_gcs(gcs, m)
    opts = generate_options(rep, certs, parts, gcs, m, jm)
    assert sorted(o.constraint_id for o in opts) == [5, 6, 7]
    assert all(o.kind == "remove" for o in opts)


def test_applying_any_over_option_resolves():
    m, gcs, _f = pocket_block_gcs(extra_cycle=True)
    jm, rep, certs, parts = analyze_gcs(gcs, m)
    pr = prioritized_options(rep, certs, parts, gcs, m, jm)
    for opt in pr.options:
        g2 = apply_resolution(gcs, opt, pr)
        rep2 = evaluate_state(analyze_gcs(g2, m)[0])
        assert rep2.state == "well"


def test_auto_mode_single_step_on_over():
    m, gcs, _f = pocket_block_gcs(extra_cycle=True)
    g2, steps, rep, _left = auto_resolve(gcs, m)
    assert len(steps) == 1
    assert steps[0].option.kind == "remove"
    assert rep.state == "well"


def test_auto_mode_noop_when_well():
    c, gcs, _f = well_constrained_cuboid()
    g2, steps, rep, _ = auto_resolve(gcs, c)
    assert steps == []
    assert rep.state == "well"
    assert g2 is gcs


def test_under_options_respect_part_interiors():
    c = unit_cube()
    f = cuboid_faces(c)
    gcs = Gcs(entities=[f["B"], f["T"], f["L"], f["R"]], constraints=[
        Constraint(1, "parallel", [f["B"], f["T"]]),
        Constraint(2, "distance", [f["B"], f["T"]], 1.0),
        Constraint(3, "parallel", [f["L"], f["R"]]),
        Constraint(4, "distance", [f["L"], f["R"]], 1.0),
    ])
    jm, rep, certs, parts = analyze_gcs(gcs, c)
    opts = generate_options(rep, certs, parts, gcs, c, jm)
    assert opts, "cross-part candidates must exist"
    part_sets = [set(p.entities) for p in parts]
    for o in opts:
        assert o.kind == "add"
        refs = set(o.candidate.refs)
        assert not any(refs <= ps for ps in part_sets)


def test_no_option_creates_new_overconstraint():
    c = unit_cube()
    f = cuboid_faces(c)
    gcs = Gcs(entities=[f["B"], f["T"], f["L"], f["R"]], constraints=[
        Constraint(1, "parallel", [f["B"], f["T"]]),
        Constraint(2, "distance", [f["B"], f["T"]], 1.0),
        Constraint(3, "parallel", [f["L"], f["R"]]),
        Constraint(4, "distance", [f["L"], f["R"]], 1.0),
    ])
    jm, rep, certs, parts = analyze_gcs(gcs, c)
    opts = generate_options(rep, certs, parts, gcs, c, jm)
    for o in opts:
        g2 = gcs.replaced(gcs.constraints +
                          [Constraint(gcs.next_id(), o.candidate.type,
                                      list(o.candidate.refs), o.candidate.value)])
        jm2 = analyze_gcs(g2, c)[0]
        assert find_minimal_overconstrained(jm2) == []


def test_sensitivity_unit_gap_response():
    # one plane pinned, partner tied by parallel+gap: unit parameter change
    # moves the free plane by one unit of offset
    c = unit_cube()
    f = cuboid_faces(c)
    gcs = Gcs(entities=[f["B"], f["T"]], constraints=[
        Constraint(1, "fixed", [f["B"]]),
        Constraint(2, "parallel", [f["B"], f["T"]]),
        Constraint(3, "distance", [f["B"], f["T"]], 1.0),
    ])
    w, system = assemble(gcs, c)
    jm = jacobian(w, system)
    assert sensitivity(3, jm) == pytest.approx(1.0, abs=1e-9)


def test_sensitivity_scaling_keeps_order():
    m, gcs, _f = pocket_block_gcs(extra_cycle=False)
    jm = analyze_gcs(gcs, m)[0]
    dist_ids = [c.id for c in gcs.constraints if c.type == "distance"]
    s1 = [sensitivity(cid, jm) for cid in dist_ids]
    jm.matrix = jm.matrix * 2.0
    s2 = [sensitivity(cid, jm) for cid in dist_ids]
    assert np.argsort(s1).tolist() == np.argsort(s2).tolist()


def test_prioritize_angle_before_parallel():
    m, gcs, f = pocket_block_gcs(extra_cycle=False)
    # fabricate one remove-option of each type with equal sensitivity
    from vdm.sai_resolution import ResolutionOption
    a = ResolutionOption("remove", 1, None, rough_rank=3, sensitivity=0.5,
                         explanation="parallel")
    b = ResolutionOption("remove", 2, None, rough_rank=1, sensitivity=0.5,
                         explanation="angle")
    ordered = prioritize([a, b])
    assert ordered[0].explanation == "angle"


def test_prioritize_sensitivity_breaks_ties():
    from vdm.sai_resolution import ResolutionOption
    lo = ResolutionOption("remove", 1, None, rough_rank=2, sensitivity=0.1,
                          explanation="lo")
    hi = ResolutionOption("remove", 2, None, rough_rank=2, sensitivity=3.0,
                          explanation="hi")
    ordered = prioritize([lo, hi])
    assert ordered[0].explanation == "hi"  # touchier constraint removed first


def test_prioritize_deterministic():
    m, gcs, _f = pocket_block_gcs(extra_cycle=True)
    jm, rep, certs, parts = analyze_gcs(gcs, m)
    o1 = prioritized_options(rep, certs, parts, gcs, m, jm)
    o2 = prioritized_options(rep, certs, parts, gcs, m, jm)
    assert [o.option_id for o in o1.options] == [o.option_id for o in o2.options]


def test_stale_options_rejected():
    m, gcs, _f = pocket_block_gcs(extra_cycle=True)
    jm, rep, certs, parts = analyze_gcs(gcs, m)
    pr = prioritized_options(rep, certs, parts, gcs, m, jm)
    g2 = apply_resolution(gcs, pr.options[0], pr)
    with pytest.raises(StaleOptionsError):
        apply_resolution(g2, pr.options[1], pr)


def test_zero_sensitivity_for_orthogonal_residual():
    # if a constraint's residual rows vanish, a unit perturbation of them is
    # orthogonal to everything the geometry can do: S = 0 exactly
    from vdm.gcs import JacobianMatrix
    m = np.zeros((3, 8))
    m[0, 0] = 1.0
    m[1, 4] = 1.0
    q = np.zeros(8)
    q[0:3] = [0, 0, 1]
    q[4:7] = [1, 0, 0]
    jm = JacobianMatrix(m, [1, 2, 3], {10: 0, 11: 4}, witness_q=q)
    assert sensitivity(3, jm) == 0.0


def test_unreachable_perturbation_uses_least_squares():
    # distance between two pinned planes: the exact system is inconsistent,
    # so the sensitivity falls back to the least-squares response
    c = unit_cube()
    f = cuboid_faces(c)
    gcs = Gcs(entities=[f["B"], f["T"]], constraints=[
        Constraint(1, "fixed", [f["B"]]),
        Constraint(2, "fixed", [f["T"]]),
        Constraint(3, "distance", [f["B"], f["T"]], 1.0),
    ])
    w, system = assemble(gcs, c)
    jm = jacobian(w, system)
    s = sensitivity(3, jm)
    assert 0.0 < s < 1.0


def test_options_empty_on_well_model():
    c, gcs, _f = well_constrained_cuboid()
    jm, rep, certs, parts = analyze_gcs(gcs, c)
    assert generate_options(rep, certs, parts, gcs, c, jm) == []
