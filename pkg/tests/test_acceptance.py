"""Acceptance criteria, one test per criterion.

Each test prints a PASS line (run with -s or -rP to see them); a pytest
failure is the FAIL signal. Tolerances are pinned here and only here.
"""
import json
import math
import time

import numpy as np
import pytest

from corpus import MODEL_BUILDERS, campaign_edits, face_by
from gcs_fixtures import pocket_block_gcs, well_constrained_cuboid
from oracles import fd_jacobian, oracle_gtips, enumerate_circuits
from vdm.booleans import SUBTRACT, UNION, boolean
from vdm.brep import validate_solid
from vdm.construct import convex_from_halfspaces, make_box
from vdm.direct_edit import (ResolutionPolicy, _EditState, apply_direct_edit,
                             rotate_faces, translate_faces)
from vdm.errors import EditRejectedError
from vdm.gcs import (Constraint, Gcs, assemble, jacobian, measured_distance,
                     solve_parametric, witness_from_solid)
from vdm.geometry import Plane
from vdm.io import canonical_json, save_model
from vdm.mesh import solid_volume
from vdm.pipeline import run_script
from vdm.sai_detection import (evaluate_state, find_minimal_overconstrained,
                               projected_user_rows, _constraint_subset_dependent)
from vdm.sai_pipeline import analyze_gcs
from vdm.sai_resolution import auto_resolve, generate_options

P1_MODELS = ["cube", "slab", "l_block", "u_channel", "pocket_block",
             "through_slot", "rib_block", "bracket", "cross_prism",
             "notched_beam"]

_campaign_cache = {}


def _run_campaign():
    """Run the P1 campaign once; P1 and P9 both read from it."""
    if _campaign_cache:
        return _campaign_cache
    policy = ResolutionPolicy(auto=False)
    results = []
    elapsed = 0.0
    for name in P1_MODELS:
        for edit, changes in campaign_edits(name, MODEL_BUILDERS[name]()):
            solid = MODEL_BUILDERS[name]()
            gcs = Gcs(entities=sorted(solid.faces), constraints=[])
            t0 = time.perf_counter()
            try:
                out = apply_direct_edit(solid, gcs, edit, policy)
                elapsed += time.perf_counter() - t0
                results.append({"model": name, "edit": edit, "changes": changes,
                                "outcome": out, "rejected": None,
                                "source": solid})
            except EditRejectedError as exc:
                elapsed += time.perf_counter() - t0
                results.append({"model": name, "edit": edit, "changes": changes,
                                "outcome": None, "rejected": exc,
                                "source": solid})
    _campaign_cache["results"] = results
    _campaign_cache["elapsed"] = elapsed
    return _campaign_cache


def test_p1_validity_campaign():
    data = _run_campaign()
    results, elapsed = data["results"], data["elapsed"]
    assert len(results) == 100
    completed = [r for r in results if r["outcome"] is not None]
    rejected = [r for r in results if r["rejected"] is not None]
    for r in completed:
        out = r["outcome"]
        assert validate_solid(out.solid).is_valid, (r["model"], r["edit"])
        for inter in out.intermediates:
            assert validate_solid(inter).is_valid, (r["model"], "intermediate")
    for r in rejected:
        assert 0.0 <= r["rejected"].last_valid_t <= 1.0
    topo = sum(1 for r in completed if r["outcome"].gtip_count > 0) + len(rejected)
    assert topo >= 50, f"only {topo} topology-changing edits"
    assert elapsed < 60.0, f"campaign took {elapsed:.1f}s"
    print(f"\nP1: PASS - {len(completed)} completed valid, {len(rejected)} "
          f"rejected with last-valid t, {topo} topology-changing, "
          f"{elapsed:.1f}s")


P2_EDITS = [  # (model, edit index) drawn across the corpus
    ("cube", 0), ("cube", 2), ("cube", 4), ("cube", 7), ("cube", 9),
    ("slab", 0), ("slab", 3), ("slab", 7), ("slab", 8),
    ("l_block", 1), ("l_block", 2), ("l_block", 3), ("l_block", 4), ("l_block", 6),
    ("u_channel", 1), ("u_channel", 2), ("u_channel", 4), ("u_channel", 8),
    ("pocket_block", 0), ("pocket_block", 1), ("pocket_block", 2),
    ("pocket_block", 5), ("pocket_block", 6),
    ("through_slot", 2), ("through_slot", 3), ("through_slot", 4),
    ("rib_block", 1), ("rib_block", 3), ("rib_block", 4),
    ("notched_beam", 2), ("notched_beam", 3), ("notched_beam", 5),
]


def test_p2_gtip_oracle_equivalence():
    assert len(P2_EDITS) >= 30
    total_events = 0
    for (name, idx) in P2_EDITS:
        solid = MODEL_BUILDERS[name]()
        edit, _ = campaign_edits(name, solid)[idx]
        tol = solid.default_tol()
        oracle_ts, detected = oracle_gtips(solid, edit, tol)
        assert len(detected) == len(oracle_ts), \
            f"{name}[{idx}]: detected {detected} vs oracle {oracle_ts}"
        for d, o in zip(detected, oracle_ts):
            assert abs(d - o) <= 1e-6, f"{name}[{idx}]: {d} vs {o}"
        total_events += len(detected)
    print(f"\nP2: PASS - {len(P2_EDITS)} edits, {total_events} events, "
          f"zero missed / zero spurious, t within 1e-6")


def test_p3_blind_pocket_rotation_pattern():
    stepped = boolean(make_box([0, 0, 0], [2, 2, 2]),
                      make_box([2, 0, 0.5], [4, 2, 2]), UNION)
    model = boolean(stepped, make_box([1, 0.5, 1], [3, 1.5, 3]), SUBTRACT)
    floor = face_by(model, [0, 0, 1], 1.0)
    edit = rotate_faces([floor], [1, 0, 1], [0, 1, 0], math.radians(55.0))
    out = apply_direct_edit(model, Gcs(sorted(model.faces), []), edit,
                            ResolutionPolicy(auto=False))
    assert out.gtip_count == 3, f"expected 3 events, got {out.gtip_count}"
    expected_t = [math.degrees(math.atan(0.25)) / 55.0,
                  math.degrees(math.atan(0.5)) / 55.0, 45.0 / 55.0]
    for ev, want in zip(out.events, expected_t):
        assert ev.t_event == pytest.approx(want, abs=1e-9)

    # hand-scripted Boolean oracle for the final model: the original model
    # minus the wedge between the floor's start and end planes, bounded by
    # the pocket walls
    t55 = math.tan(math.radians(55.0))
    n_tilt = np.array([math.sin(math.radians(55.0)), 0.0,
                       math.cos(math.radians(55.0))])
    wedge = convex_from_halfspaces([
        Plane([0, 0, 1], 1.0),                       # below the start plane
        Plane(-n_tilt, -float(n_tilt @ [1, 0, 1])),  # above the end plane
        Plane([1, 0, 0], 3.0),                       # pocket right wall
        Plane([0, -1, 0], -0.5), Plane([0, 1, 0], 1.5),
        Plane([-1, 0, 0], 0.5),                      # clip behind the hinge
        Plane([0, 0, -1], 3.0),                      # generous lower bound
    ], model.default_tol())
    oracle = boolean(model, wedge, SUBTRACT)
    v_got = solid_volume(out.solid)
    v_want = solid_volume(oracle)
    assert v_got == pytest.approx(v_want, rel=1e-9)
    # sampling oracle finds the same three brackets
    oracle_ts, detected = oracle_gtips(model, edit, model.default_tol())
    assert len(oracle_ts) == 3 and len(detected) == 3
    for got, want in zip(oracle_ts, expected_t):
        assert abs(got - want) <= 1e-6
    print(f"\nP3: PASS - 3 events at t={[round(e.t_event, 6) for e in out.events]}, "
          f"final volume {v_got:.12f} matches scripted oracle within 1e-9")


def test_p4_constraint_state_matrix():
    # row 1: dimension-only edit -> well, distance remeasured
    c, gcs, f = well_constrained_cuboid()
    out1 = apply_direct_edit(c, gcs, translate_faces([f["T"]], [0, 0, 1], 0.5),
                             ResolutionPolicy(auto=False))
    assert out1.state_report.state == "well"
    assert out1.update_plan.remeasured == {2: pytest.approx(1.5)}

    # row 2: rotation consumes the top face -> under
    c, gcs, f = well_constrained_cuboid()
    out2 = apply_direct_edit(
        c, gcs, rotate_faces([f["R"]], [1, 0, 0], [0, 1, 0], math.radians(-55.0)),
        ResolutionPolicy(auto=False))
    assert f["T"] not in out2.face_map
    assert out2.state_report.state == "under"

    # row 3: redundant gap chain -> over with the 3-constraint cycle {5,6,7}
    m, gcs3, f3 = pocket_block_gcs(extra_cycle=True)
    out3 = apply_direct_edit(m, gcs3, translate_faces([f3["P"]], [0, 0, -1], 0.3),
                             ResolutionPolicy(auto=False))
    assert out3.state_report.state == "over"
    assert [c.support for c in out3.certificates] == [[5, 6, 7]]

    # the valid resolution options are exactly the dependency's constraints
    jm, rep, certs, parts = analyze_gcs(out3.gcs, out3.solid)
    opts = generate_options(rep, certs, parts, out3.gcs, out3.solid, jm)
    assert sorted(o.constraint_id for o in opts) == [5, 6, 7]
    print("\nP4: PASS - states {well, under, over}; over-cycle {5,6,7}; "
          "options are exactly its members")


def _random_small_gcs(m, rng, n_constraints):
    fids = sorted(m.faces)
    cons = []
    cid = 1
    while len(cons) < n_constraints:
        a, b = (int(x) for x in rng.choice(fids, size=2, replace=False))
        na, nb = m.faces[a].outward_normal(), m.faces[b].outward_normal()
        cr = float(np.linalg.norm(np.cross(na, nb)))
        kind = int(rng.integers(0, 3))
        if cr < 1e-9:
            if kind == 0:
                cons.append(Constraint(cid, "parallel", [a, b]))
            else:
                d = abs(m.faces[a].outward_offset() -
                        float(na @ nb) * m.faces[b].outward_offset())
                cons.append(Constraint(cid, "distance", [a, b], d))
        else:
            ang = math.acos(float(np.clip(na @ nb, -1, 1)))
            if abs(ang - math.pi / 2) < 1e-9 and kind != 2:
                cons.append(Constraint(cid, "perpendicular", [a, b]))
            else:
                cons.append(Constraint(cid, "angle", [a, b], ang))
        cid += 1
    return Gcs(sorted(m.faces), cons)


def test_p5_sparse_recovery_oracle():
    rng = np.random.default_rng(2024)
    m = MODEL_BUILDERS["pocket_block"]()
    # small systems: exact set equality against independent enumeration
    for trial in range(8):
        gcs = _random_small_gcs(m, rng, int(rng.integers(5, 12)))
        w, system = assemble(gcs, m)
        jm = jacobian(w, system)
        ju, labels = projected_user_rows(jm)
        expected = enumerate_circuits(ju, labels)
        got = sorted(tuple(c.support) for c in find_minimal_overconstrained(jm))
        assert got == expected, f"trial {trial}"

    # larger synthetic systems through the relaxation path
    big = MODEL_BUILDERS["double_pocket"]()
    times = []
    total_certs = 0
    for trial in range(4):
        gcs = _random_small_gcs(big, rng, 36)
        w, system = assemble(gcs, big)
        jm = jacobian(w, system)
        t0 = time.perf_counter()
        certs = find_minimal_overconstrained(jm, exact_limit=12)
        times.append(time.perf_counter() - t0)
        ju, labels = projected_user_rows(jm)
        for cert in certs:
            x = cert.x
            assert np.linalg.norm(jm.matrix.T @ x) <= 1e-8 * np.linalg.norm(x)
            assert _constraint_subset_dependent(ju, labels, tuple(cert.support))
            for cid in cert.support:
                rest = tuple(s for s in cert.support if s != cid)
                if rest:
                    assert not _constraint_subset_dependent(ju, labels, rest)
        total_certs += len(certs)
        assert times[-1] < 10.0, f"system took {times[-1]:.1f}s"
    print(f"\nP5: PASS - small systems equal exhaustive enumeration; "
          f"{total_certs} certificates on 36-constraint systems all minimal, "
          f"max {max(times):.2f}s/system")


def test_p6_jacobian_correctness():
    c, gcs, f = well_constrained_cuboid()
    gcs = gcs.replaced(gcs.constraints + [
        Constraint(20, "angle", [f["L"], f["F"]], math.radians(90.0)),
        Constraint(21, "coincident", [f["B"], f["T"]]),
        Constraint(22, "fixed", [f["K"]]),
    ])
    w, system = assemble(gcs, c)
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        q = w.q + rng.normal(scale=0.08, size=len(w.q))
        jm = system.jacobian(q)
        fd = fd_jacobian(system, q, step=1e-6)
        worst = max(worst, float(np.max(np.abs(jm.matrix - fd))))
    assert worst <= 1e-6
    print(f"\nP6: PASS - analytic vs central differences, worst deviation "
          f"{worst:.2e} over 100 random witnesses, all constraint types")


def _two_rib_bracket():
    base = make_box([0, 0, 0], [6, 3, 1])
    m = boolean(base, make_box([1, 0, 1], [2, 3, 2]), UNION)
    m = boolean(m, make_box([4, 0, 1], [5, 3, 2]), UNION)
    f = {
        "L": face_by(m, [-1, 0, 0], 0.0), "R": face_by(m, [1, 0, 0], 6.0),
        "r1l": face_by(m, [-1, 0, 0], -1.0), "r1r": face_by(m, [1, 0, 0], 2.0),
        "r2l": face_by(m, [-1, 0, 0], -4.0), "r2r": face_by(m, [1, 0, 0], 5.0),
        "F": face_by(m, [0, -1, 0], 0.0), "K": face_by(m, [0, 1, 0], 3.0),
        "B": face_by(m, [0, 0, -1], 0.0), "T": face_by(m, [0, 0, 1], 1.0),
        "t1": face_by(m, [0, 0, 1], 2.0),
    }
    f["t2"] = [fid for fid in sorted(m.faces)
               if fid != f["t1"]
               and np.allclose(m.faces[fid].outward_normal(), [0, 0, 1])
               and abs(m.faces[fid].outward_offset() - 2.0) < 1e-9][0]
    cons = [
        Constraint(1, "parallel", [f["L"], f["r1l"]]),
        Constraint(2, "distance", [f["L"], f["r1l"]], 1.0),
        Constraint(3, "parallel", [f["r1l"], f["r1r"]]),
        Constraint(4, "distance", [f["r1l"], f["r1r"]], 1.0),
        Constraint(5, "parallel", [f["r1r"], f["r2l"]]),
        Constraint(6, "distance", [f["r1r"], f["r2l"]], 2.0),  # rib spacing
        Constraint(7, "parallel", [f["r2l"], f["r2r"]]),
        Constraint(8, "distance", [f["r2l"], f["r2r"]], 1.0),
        Constraint(9, "parallel", [f["r2r"], f["R"]]),
        Constraint(10, "distance", [f["r2r"], f["R"]], 1.0),
        Constraint(11, "parallel", [f["F"], f["K"]]),
        Constraint(12, "distance", [f["F"], f["K"]], 3.0),
        Constraint(13, "parallel", [f["B"], f["T"]]),
        Constraint(14, "distance", [f["B"], f["T"]], 1.0),
        Constraint(15, "parallel", [f["B"], f["t1"]]),
        Constraint(16, "distance", [f["B"], f["t1"]], 2.0),
        Constraint(17, "parallel", [f["B"], f["t2"]]),
        Constraint(18, "distance", [f["B"], f["t2"]], 2.0),
        Constraint(19, "perpendicular", [f["B"], f["L"]]),
        Constraint(20, "perpendicular", [f["B"], f["F"]]),
        # perpendicular(L, F) intentionally missing: auto-resolution adds it
    ]
    return m, Gcs(sorted(m.faces), cons), f


def test_p7_parametric_round_trip():
    m, gcs, f = _two_rib_bracket()
    rep0 = evaluate_state(analyze_gcs(gcs, m)[0])
    assert rep0.state == "under"
    gcs2, steps, rep, _left = auto_resolve(gcs, m)
    assert rep.state == "well", f"auto-resolution ended {rep.state}"
    assert len(steps) >= 1

    # closed-form prediction for the spacing change: offsets decouple from
    # orientations, so the minimum-norm response solves the linear gap system
    x_faces = [f["L"], f["r1l"], f["r1r"], f["r2l"], f["r2r"], f["R"]]
    idx = {fid: k for k, fid in enumerate(x_faces)}
    rows = []
    rhs = []
    chain = [(f["L"], f["r1l"]), (f["r1l"], f["r1r"]), (f["r1r"], f["r2l"]),
             (f["r2l"], f["r2r"]), (f["r2r"], f["R"])]
    delta = 0.5
    for (a, b) in chain:
        row = np.zeros(len(x_faces))
        na = m.faces[a].outward_normal()
        nb = m.faces[b].outward_normal()
        s = 1.0 if float(na @ nb) > 0 else -1.0
        gap = m.faces[a].outward_offset() - s * m.faces[b].outward_offset()
        sgn = 1.0 if gap >= 0 else -1.0
        row[idx[a]] = sgn
        row[idx[b]] = -sgn * s
        rows.append(row)
        rhs.append(delta if (a, b) == (f["r1r"], f["r2l"]) else 0.0)
    do, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    # outward offset change of the counterpart outer face, as face motion
    n_r2r = m.faces[f["r2r"]].outward_normal()
    predicted_motion = do[idx[f["r2r"]]] * n_r2r

    pos_before = m.faces[f["r2r"]].outward_offset()
    solved = solve_parametric(gcs2, m, {6: 2.5})
    assert validate_solid(solved).is_valid
    w, system = assemble(gcs2.replaced(
        [Constraint(c.id, c.type, list(c.refs), 2.5 if c.id == 6 else c.value)
         for c in gcs2.constraints]), solved)
    assert float(np.max(np.abs(system.residuals(w.q)))) < 1e-8
    moved = solved.faces[f["r2r"]].outward_offset() - pos_before
    assert moved == pytest.approx(do[idx[f["r2r"]]], abs=1e-8)
    assert abs(moved) > 1e-3  # the symmetric counterpart genuinely moved
    assert measured_distance(solved, f["r1r"], f["r2l"],
                             solved.default_tol()) == pytest.approx(2.5, abs=1e-8)
    print(f"\nP7: PASS - auto-resolved to well in {len(steps)} step(s); "
          f"spacing 2.0->2.5 moved the counterpart face by {moved:+.9f} "
          f"(predicted {do[idx[f['r2r']]]:+.9f})")


def test_p8_determinism(tmp_path):
    import subprocess
    import sys

    m, gcs, f = pocket_block_gcs(extra_cycle=True)
    doc = save_model(m, gcs)
    script = [
        {"op": "push_pull_translate", "faces": [f["P"]],
         "direction": [0, 0, -1], "distance": 2.0},
        {"op": "resolve", "mode": "auto"},
        {"op": "analyze"},
    ]
    (tmp_path / "model.json").write_bytes(doc)
    (tmp_path / "script.json").write_text(json.dumps(script))
    reports = set()
    finals = set()
    for run in range(3):
        out = tmp_path / f"final{run}.json"
        rep = tmp_path / f"report{run}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "vdm.cli", "apply",
             "--model", str(tmp_path / "model.json"),
             "--script", str(tmp_path / "script.json"),
             "--out", str(out), "--report", str(rep)],
            capture_output=True)
        assert proc.returncode == 0, proc.stderr.decode()
        reports.add(rep.read_bytes())
        finals.add(out.read_bytes())
    assert len(reports) == 1 and len(finals) == 1
    # and the in-process path produces the same bytes as the CLI
    final, report = run_script(doc, script)
    assert final in finals
    assert canonical_json(report).encode() in reports
    print("\nP8: PASS - byte-identical report and document across 3 separate "
          "processes and the in-process path")


def test_p9_continuity_at_events():
    data = _run_campaign()
    eps = 1e-9  # parameter_eps of the default tolerance context
    checked = 0
    for r in data["results"]:
        out = r["outcome"]
        if out is None or not out.events:
            continue
        solid = r["source"]
        edit = r["edit"]
        tol = solid.default_tol()
        state = _EditState(solid, edit)
        for ev, inter in zip(out.events, out.intermediates):
            state_before = _EditState(state.solid.copy(),
                                      state.edit.with_faces(state.edit.face_ids))
            state_before.t = state.t
            state_before.advance_to(ev.t_event - 10 * eps, tol,
                                    boolean_landing=False)
            v_before = solid_volume(state_before.solid)
            v_after = solid_volume(inter)
            # sweep bound: moved-face area x motion rate over the 2 eps window
            area = sum(abs(solid_volume(inter)) ** (2 / 3) for _ in [0])
            bound = 1e-7 * max(abs(v_before), abs(v_after), 1.0) + \
                1e3 * eps * max(abs(v_before), 1.0)
            assert abs(v_after - v_before) <= bound, \
                (r["model"], ev.t_event, v_before, v_after)
            checked += 1
            state.advance_to(ev.t_event, tol, boolean_landing=True)
            if not state.faces_alive:
                break
    assert checked >= 30
    print(f"\nP9: PASS - {checked} event crossings, volume continuous within "
          f"the eps-sweep bound at 1e-7 relative")
