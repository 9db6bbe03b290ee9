"""Constraint-system fixtures shared by the GCS/SAI tests and acceptance."""
from __future__ import annotations

from corpus import face_by, pocket_block
from vdm.construct import unit_cube
from vdm.gcs import Constraint, Gcs


def cuboid_faces(c):
    return {
        "L": face_by(c, [-1, 0, 0]), "R": face_by(c, [1, 0, 0]),
        "F": face_by(c, [0, -1, 0]), "K": face_by(c, [0, 1, 0]),
        "B": face_by(c, [0, 0, -1]), "T": face_by(c, [0, 0, 1]),
    }


def well_constrained_cuboid() -> tuple:
    """Unit cuboid with a fully well-constrained system: three parallel+gap
    pairs plus three perpendicularities."""
    c = unit_cube()
    f = cuboid_faces(c)
    gcs = Gcs(entities=sorted(c.faces), constraints=[
        Constraint(1, "parallel", [f["B"], f["T"]]),
        Constraint(2, "distance", [f["B"], f["T"]], 1.0),
        Constraint(3, "parallel", [f["L"], f["R"]]),
        Constraint(4, "distance", [f["L"], f["R"]], 1.0),
        Constraint(5, "parallel", [f["F"], f["K"]]),
        Constraint(6, "distance", [f["F"], f["K"]], 1.0),
        Constraint(7, "perpendicular", [f["B"], f["L"]]),
        Constraint(8, "perpendicular", [f["B"], f["F"]]),
        Constraint(9, "perpendicular", [f["L"], f["F"]]),
    ])
    return c, gcs, f


def pocket_faces(m):
    return {
        "L": face_by(m, [-1, 0, 0], 0.0), "R": face_by(m, [1, 0, 0], 4.0),
        "F": face_by(m, [0, -1, 0], 0.0), "K": face_by(m, [0, 1, 0], 2.0),
        "B": face_by(m, [0, 0, -1], 0.0), "T": face_by(m, [0, 0, 1], 2.0),
        "PL": face_by(m, [1, 0, 0], 1.0), "PR": face_by(m, [-1, 0, 0], -3.0),
        "PF": face_by(m, [0, 1, 0], 0.5), "PK": face_by(m, [0, -1, 0], -1.5),
        "P": face_by(m, [0, 0, 1], 1.0),
    }


def pocket_block_gcs(extra_cycle: bool = False) -> tuple:
    """Fully constrained pocket block; with extra_cycle, a third gap
    dimension over the bottom/floor/top planes closes a redundant chain
    (constraints 5, 6, 7)."""
    m = pocket_block()
    f = pocket_faces(m)
    cons = [
        # z-stack: bottom - floor - top
        Constraint(1, "parallel", [f["B"], f["P"]]),
        Constraint(2, "parallel", [f["B"], f["T"]]),
        Constraint(5, "distance", [f["B"], f["P"]], 1.0),
        Constraint(6, "distance", [f["B"], f["T"]], 2.0),
    ]
    if extra_cycle:
        cons.append(Constraint(7, "distance", [f["P"], f["T"]], 1.0))
    nid = 10
    for (a, b, d) in (("L", "PL", 1.0), ("L", "PR", 3.0), ("L", "R", 4.0)):
        cons.append(Constraint(nid, "parallel", [f[a], f[b]])); nid += 1
        cons.append(Constraint(nid, "distance", [f[a], f[b]], d)); nid += 1
    for (a, b, d) in (("F", "PF", 0.5), ("F", "PK", 1.5), ("F", "K", 2.0)):
        cons.append(Constraint(nid, "parallel", [f[a], f[b]])); nid += 1
        cons.append(Constraint(nid, "distance", [f[a], f[b]], d)); nid += 1
    cons.append(Constraint(nid, "perpendicular", [f["B"], f["L"]])); nid += 1
    cons.append(Constraint(nid, "perpendicular", [f["B"], f["F"]])); nid += 1
    cons.append(Constraint(nid, "perpendicular", [f["L"], f["F"]])); nid += 1
    return m, Gcs(entities=sorted(m.faces), constraints=cons), f
