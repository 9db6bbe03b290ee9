"""
Push-pull edits across topology changes
=======================================

A pocket floor rotated far enough hits one feature after another. The edit
loop finds each critical motion value, repairs the model there with a swept
Boolean, and continues -- every intermediate is a valid solid.
"""
import math

import numpy as np

from vdm import (Gcs, ResolutionPolicy, SUBTRACT, UNION, apply_direct_edit,
                 boolean, make_box, rotate_faces, solid_volume,
                 translate_faces, validate_solid)

# stepped block with a blind pocket
stepped = boolean(make_box([0, 0, 0], [2, 2, 2]),
                  make_box([2, 0, 0.5], [4, 2, 2]), UNION)
model = boolean(stepped, make_box([1, 0.5, 1], [3, 1.5, 3]), SUBTRACT)
floor = [f for f in model.faces
         if np.allclose(model.faces[f].outward_normal(), [0, 0, 1])
         and abs(model.faces[f].outward_offset() - 1.0) < 1e-9][0]
gcs = Gcs(entities=sorted(model.faces), constraints=[])

# %% rotating the pocket floor by 55 degrees crosses three features
edit = rotate_faces([floor], [1, 0, 1], [0, 1, 0], math.radians(55))
out = apply_direct_edit(model, gcs, edit, ResolutionPolicy(auto=False))
print("events at t =", [round(e.t_event, 6) for e in out.events])
for k, inter in enumerate(out.intermediates):
    print(f"  intermediate {k}: volume {solid_volume(inter):.6f}",
          "valid" if validate_solid(inter).is_valid else "INVALID")
print("final volume:", solid_volume(out.solid))

# %% pushing the floor down through the bottom punches the pocket through
out2 = apply_direct_edit(model, gcs, translate_faces([floor], [0, 0, -1], 2.0),
                         ResolutionPolicy(auto=False))
print("punch-through events:", [round(e.t_event, 4) for e in out2.events],
      "motion completed at t =", out2.completed_t)

# %% pulling the floor up to the rim makes the pocket vanish
out3 = apply_direct_edit(model, gcs, translate_faces([floor], [0, 0, 1], 1.0),
                         ResolutionPolicy(auto=False))
print("fill-flush: faces", len(out3.solid.faces), "volume",
      solid_volume(out3.solid))
