"""
Regularized Booleans and the membership oracle
==============================================

Union, subtraction and intersection keep solids valid, drop lower-
dimensional junk, and agree with an independent volume bookkeeping.
"""
import numpy as np

from vdm import (EMPTY, INTERSECT, SUBTRACT, UNION, boolean, make_box,
                 point_classify, solid_volume)

a = make_box([0, 0, 0], [1, 1, 1])
b = make_box([0.5, 0, 0], [1.5, 1, 1])

# %% inclusion-exclusion holds exactly
vu = solid_volume(boolean(a, b, UNION))
vi = solid_volume(boolean(a, b, INTERSECT))
print("vol(A)+vol(B) =", 2.0, "  vol(A|B)+vol(A&B) =", vu + vi)

# %% touching solids merge; their interface wall disappears
c = make_box([1, 0, 0], [2, 1, 1])
merged = boolean(a, c, UNION)
print("touching union faces:", len(merged.faces), "volume:", solid_volume(merged))
print("touching intersection:", boolean(a, c, INTERSECT))

# %% membership queries
print("center of A:", point_classify(a, [0.5, 0.5, 0.5]))
print("far away:", point_classify(a, [9, 9, 9]))
print("on the top face:", point_classify(a, [0.5, 0.5, 1.0]))

# %% subtracting an embedded box leaves a closed internal cavity
hollow = boolean(make_box([0, 0, 0], [3, 3, 3]), make_box([1, 1, 1], [2, 2, 2]),
                 SUBTRACT)
print("hollow cube shells:", len(hollow.shells), "volume:", solid_volume(hollow))
