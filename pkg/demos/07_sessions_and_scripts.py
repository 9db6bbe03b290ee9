"""
Scripted editing sessions and reports
=====================================

The same pipeline drives the CLI, the HTTP service, and direct library use.
Scripts replay deterministically: identical inputs give byte-identical
reports.
"""
import json

import numpy as np

from vdm import Constraint, Gcs, make_box, run_script, save_model

cube = make_box([0, 0, 0], [1, 1, 1])


def face(n):
    return [f for f in sorted(cube.faces)
            if np.allclose(cube.faces[f].outward_normal(), n)][0]


T = face([0, 0, 1])
B = face([0, 0, -1])
gcs = Gcs(entities=sorted(cube.faces), constraints=[
    Constraint(1, "parallel", [B, T]), Constraint(2, "distance", [B, T], 1.0)])
doc = save_model(cube, gcs)

script = [
    {"op": "push_pull_translate", "faces": [T], "direction": [0, 0, 1],
     "distance": 0.5},
    {"op": "analyze"},
]

# %% run it twice: identical bytes out
final1, report1 = run_script(doc, script)
final2, report2 = run_script(doc, script)
print("deterministic:", final1 == final2 and report1 == report2)
print("final volume:", report1["final"]["volume"])
print("step summary:", json.dumps(report1["steps"][0], sort_keys=True)[:120], "...")
