"""
Constraint-state analysis at the witness configuration
======================================================

The current geometry serves as the evaluation point: dependent constraint
rows mean over-constraint, spare degrees of freedom beyond rigid motion mean
under-constraint. Minimal over-constrained parts come out of a sparse
null-space recovery.
"""
import numpy as np

from vdm import (Constraint, Gcs, SUBTRACT, assemble, boolean, evaluate_state,
                 find_maximal_wellconstrained, find_minimal_overconstrained,
                 jacobian, make_box)

model = boolean(make_box([0, 0, 0], [4, 2, 2]),
                make_box([1, 0.5, 1], [3, 1.5, 3]), SUBTRACT)


def face(n, o):
    return [f for f in sorted(model.faces)
            if np.allclose(model.faces[f].outward_normal(), n)
            and abs(model.faces[f].outward_offset() - o) < 1e-9][0]


B, P, T = face([0, 0, -1], 0), face([0, 0, 1], 1.0), face([0, 0, 1], 2.0)

# %% a redundant chain of gaps: bottom->floor, floor->top, bottom->top
gcs = Gcs(entities=sorted(model.faces), constraints=[
    Constraint(1, "parallel", [B, P]),
    Constraint(2, "parallel", [B, T]),
    Constraint(5, "distance", [B, P], 1.0),
    Constraint(6, "distance", [B, T], 2.0),
    Constraint(7, "distance", [P, T], 1.0),
])
w, system = assemble(gcs, model)
jm = jacobian(w, system)
report = evaluate_state(jm)
print("state:", report.as_dict())

# %% the minimal over-constrained part is the three-gap cycle
for cert in find_minimal_overconstrained(jm):
    print("dependency support:", cert.support, " |J^T x| / |x| =", cert.residual)

# %% under-constraint decomposes into maximal well-constrained parts
gcs2 = Gcs(entities=[B, P, T], constraints=[
    Constraint(1, "parallel", [B, P]), Constraint(2, "distance", [B, P], 1.0)])
w2, sys2 = assemble(gcs2, model)
jm2 = jacobian(w2, sys2)
print("two-entity system state:", evaluate_state(jm2).state)
for part in find_maximal_wellconstrained(gcs2, jm2):
    print("  part:", part.entities, "constraints:", part.constraint_ids)
