"""Triangle mesh extraction for rendering and the volume oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .brep import Solid, validate_solid
from .errors import InvalidSolidError
from .polygon2d import triangulate_region
from .tolerances import ToleranceContext


@dataclass
class TriangleMesh:
    vertices: np.ndarray          # Nx3
    triangles: np.ndarray         # Mx3 indices into vertices
    face_ids: np.ndarray          # M, source face id per triangle

    def volume(self) -> float:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return float(np.sum(np.einsum("ij,ij->i", a, np.cross(b, c)))) / 6.0

    def as_dict(self) -> dict:
        return {
            "vertices": [[float(x) for x in v] for v in self.vertices],
            "triangles": [[int(i) for i in t] for t in self.triangles],
            "face_ids": [int(f) for f in self.face_ids],
        }


def tessellate(solid: Solid, tol: ToleranceContext | None = None) -> TriangleMesh:
    """Watertight triangle mesh with per-triangle face ids; refuses invalid solids."""
    tol = tol or solid.default_tol()
    report = validate_solid(solid, tol)
    if not report.is_valid:
        raise InvalidSolidError(report)

    vid_order = sorted(solid.vertices)
    vid_index = {v: i for i, v in enumerate(vid_order)}
    verts = np.array([solid.vertices[v].position for v in vid_order])

    tris: list[tuple[int, int, int]] = []
    fids: list[int] = []
    for fid in sorted(solid.faces):
        outer, holes = solid.face_loops_2d(fid)
        loop_ids: list[int] = []
        for li in range(len(solid.faces[fid].loops)):
            loop_ids.extend(solid.loop_vertices(fid, li))
        for (i, j, k) in triangulate_region(outer, holes, tol.linear_eps):
            tris.append((vid_index[loop_ids[i]], vid_index[loop_ids[j]],
                         vid_index[loop_ids[k]]))
            fids.append(fid)
    return TriangleMesh(verts, np.array(tris, dtype=int), np.array(fids, dtype=int))


def solid_volume(solid: Solid, tol: ToleranceContext | None = None) -> float:
    """Enclosed volume by signed tetrahedra (the standing volume oracle)."""
    from .brep import solid_signed_volume
    return solid_signed_volume(solid, tol)
