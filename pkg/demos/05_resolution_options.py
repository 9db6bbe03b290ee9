"""
Resolving constraint inconsistencies with prioritized options
=============================================================

After an edit the constraint system is updated against the new shape; any
over- or under-constraint yields a ranked option list (type precedence
first, sensitivity second). Auto mode takes the top option repeatedly.
"""
import numpy as np

from vdm import (Constraint, Gcs, SUBTRACT, auto_resolve, boolean, make_box,
                 solid_volume)
from vdm.sai_pipeline import analyze_gcs
from vdm.sai_resolution import prioritized_options

model = boolean(make_box([0, 0, 0], [4, 2, 2]),
                make_box([1, 0.5, 1], [3, 1.5, 3]), SUBTRACT)


def face(n, o):
    return [f for f in sorted(model.faces)
            if np.allclose(model.faces[f].outward_normal(), n)
            and abs(model.faces[f].outward_offset() - o) < 1e-9][0]


B, P, T = face([0, 0, -1], 0), face([0, 0, 1], 1.0), face([0, 0, 1], 2.0)
gcs = Gcs(entities=sorted(model.faces), constraints=[
    Constraint(1, "parallel", [B, P]),
    Constraint(2, "parallel", [B, T]),
    Constraint(5, "distance", [B, P], 1.0),
    Constraint(6, "distance", [B, T], 2.0),
    Constraint(7, "distance", [P, T], 1.0),
])

# %% generate and rank the options for the redundant gap chain
jm, report, certs, parts = analyze_gcs(gcs, model)
pr = prioritized_options(report, certs, parts, gcs, model, jm)
for opt in pr.options[:5]:
    print(f"{opt.option_id:<22} rank={opt.rough_rank} "
          f"sensitivity={opt.sensitivity:.3f}  {opt.explanation}")

# %% auto mode applies the top option until the system is consistent
gcs2, steps, final_report, _ = auto_resolve(gcs, model)
print("auto steps:", [s.option.option_id for s in steps])
print("final state:", final_report.state)
