"""Post-edit constraint stage: update the GCS against the new shape, detect
inconsistencies, and resolve them (auto mode) or hand back prioritized
options (manual mode)."""
from __future__ import annotations

from .brep import Solid
from .gcs import Gcs, assemble, jacobian
from .sai_detection import (evaluate_state, find_maximal_wellconstrained,
                            find_minimal_overconstrained)
from .sai_resolution import (auto_resolve, prioritized_options,
                             update_gcs_after_edit)
from .tolerances import ToleranceContext


def analyze_gcs(gcs: Gcs, solid: Solid, tol: ToleranceContext | None = None):
    """(jacobian, state report, certificates, parts) for the current witness."""
    tol = tol or solid.default_tol()
    w, system = assemble(gcs, solid, tol)
    jm = jacobian(w, system)
    report = evaluate_state(jm)
    certs = (find_minimal_overconstrained(jm)
             if report.state in ("over", "over-and-under") else [])
    parts = (find_maximal_wellconstrained(gcs, jm)
             if report.state in ("under", "over-and-under") else [])
    return jm, report, certs, parts


def run_sai_stage(old_solid: Solid, gcs: Gcs, new_solid: Solid,
                  face_map: dict[int, int], events, intermediates,
                  policy, tol: ToleranceContext | None = None,
                  completed_t: float = 1.0):
    from .direct_edit import EditOutcome

    tol = tol or new_solid.default_tol()
    plan = update_gcs_after_edit(gcs, old_solid, new_solid, face_map, tol)
    updated = plan.apply(gcs, new_solid)

    jm, report, certs, parts = analyze_gcs(updated, new_solid, tol)

    steps = []
    options_left = None
    final_gcs = updated
    final_report = report
    if report.state != "well":
        if policy.auto:
            final_gcs, steps, final_report, options_left = auto_resolve(
                updated, new_solid, tol, policy.type_precedence)
        else:
            options_left = prioritized_options(report, certs, parts, updated,
                                               new_solid, jm, tol,
                                               policy.type_precedence)

    return EditOutcome(solid=new_solid, gcs=final_gcs, events=list(events),
                       intermediates=list(intermediates), face_map=dict(face_map),
                       update_plan=plan, state_report=final_report,
                       certificates=certs, parts=parts,
                       resolution_steps=steps, options_remaining=options_left,
                       completed_t=completed_t)
