"""
Parametric edits: drive dimensions through the constraint system
================================================================

With a well-constrained system, changing one parameter re-solves the
geometry from the witness with minimum-norm updates and regenerates the
boundary.
"""
import numpy as np

from vdm import Constraint, Gcs, make_box, solid_volume, solve_parametric
from vdm.gcs import measured_distance

cube = make_box([0, 0, 0], [1, 1, 1])


def face(n):
    return [f for f in sorted(cube.faces)
            if np.allclose(cube.faces[f].outward_normal(), n)][0]


L, R = face([-1, 0, 0]), face([1, 0, 0])
F, K = face([0, -1, 0]), face([0, 1, 0])
B, T = face([0, 0, -1]), face([0, 0, 1])

gcs = Gcs(entities=sorted(cube.faces), constraints=[
    Constraint(1, "parallel", [B, T]), Constraint(2, "distance", [B, T], 1.0),
    Constraint(3, "parallel", [L, R]), Constraint(4, "distance", [L, R], 1.0),
    Constraint(5, "parallel", [F, K]), Constraint(6, "distance", [F, K], 1.0),
    Constraint(7, "perpendicular", [B, L]),
    Constraint(8, "perpendicular", [B, F]),
    Constraint(9, "perpendicular", [L, F]),
])

# %% stretch the height to 1.5: both capping planes share the motion
solved = solve_parametric(gcs, cube, {2: 1.5})
tol = solved.default_tol()
print("new height:", measured_distance(solved, B, T, tol))
print("width unchanged:", measured_distance(solved, L, R, tol))
print("volume:", solid_volume(solved))
