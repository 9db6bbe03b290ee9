"""Boundary representation for planar-faced solids, and solid validity.

Topology is id-based: faces reference signed edge ids in loops, edges
reference vertex ids. Geometry lives in vertex positions and face planes;
vertex positions are always re-derivable as plane intersections, which the
regeneration machinery exploits.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StructuralError
from .geometry import Plane
from .polygon2d import (loop_is_simple, region_location, regions_overlap,
                        line_region_intervals, signed_area)
from .geometry import intersect_2_planes
from .tolerances import ToleranceContext, default_tolerance


@dataclass
class Vertex:
    id: int
    position: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)


@dataclass
class Edge:
    id: int
    v0: int
    v1: int
    left_face: int | None = None   # face traversing v0 -> v1
    right_face: int | None = None  # face traversing v1 -> v0


@dataclass
class Face:
    """Planar face. Outward normal = sense * plane.normal; loops hold signed
    edge ids (positive = v0->v1), first loop is the outer boundary."""
    id: int
    plane: Plane
    sense: int
    loops: list[list[int]]

    def outward_normal(self) -> np.ndarray:
        return self.sense * self.plane.normal

    def outward_offset(self) -> float:
        return self.sense * self.plane.offset

    def outward_plane(self) -> Plane:
        return Plane(self.outward_normal(), self.outward_offset(), _skip_normalize=True)


@dataclass
class Shell:
    face_ids: list[int]


@dataclass
class Solid:
    vertices: dict[int, Vertex]
    edges: dict[int, Edge]
    faces: dict[int, Face]
    shells: list[Shell] = field(default_factory=list)
    genus: int = 0

    def __post_init__(self):
        if not self.shells and self.faces:
            self.shells = [Shell(sorted(self.faces))]
        self._derive_edge_faces()

    # --- structural derivations -------------------------------------------

    def _derive_edge_faces(self):
        for e in self.edges.values():
            e.left_face = None
            e.right_face = None
        for f in sorted(self.faces):
            for loop in self.faces[f].loops:
                for se in loop:
                    eid = abs(se)
                    if eid not in self.edges:
                        raise StructuralError(f"face {f} references missing edge {eid}")
                    edge = self.edges[eid]
                    if se > 0:
                        edge.left_face = f
                    else:
                        edge.right_face = f

    def check_references(self):
        for e in self.edges.values():
            if e.v0 not in self.vertices or e.v1 not in self.vertices:
                raise StructuralError(f"edge {e.id} references missing vertex")
        for f in self.faces.values():
            for loop in f.loops:
                for se in loop:
                    if abs(se) not in self.edges:
                        raise StructuralError(f"face {f.id} references missing edge {se}")
        shell_faces = [fid for s in self.shells for fid in s.face_ids]
        for fid in shell_faces:
            if fid not in self.faces:
                raise StructuralError(f"shell references missing face {fid}")
        if sorted(shell_faces) != sorted(self.faces):
            raise StructuralError("shells do not partition the face set")

    def loop_vertices(self, face_id: int, loop_index: int) -> list[int]:
        """Ordered vertex ids along a loop."""
        loop = self.faces[face_id].loops[loop_index]
        out = []
        for se in loop:
            e = self.edges[abs(se)]
            out.append(e.v0 if se > 0 else e.v1)
        return out

    def loop_points(self, face_id: int, loop_index: int) -> np.ndarray:
        ids = self.loop_vertices(face_id, loop_index)
        return np.array([self.vertices[v].position for v in ids])

    def face_loops_2d(self, face_id: int) -> tuple[np.ndarray, list[np.ndarray]]:
        """Face loops projected into the outward-oriented plane basis.

        In this basis the outer loop of a valid face is CCW (positive area)
        and holes are CW.
        """
        f = self.faces[face_id]
        pl = f.outward_plane()
        loops = [pl.project_2d(self.loop_points(face_id, i))
                 for i in range(len(f.loops))]
        return loops[0], loops[1:]

    def vertex_faces(self) -> dict[int, set[int]]:
        out: dict[int, set[int]] = {v: set() for v in self.vertices}
        for fid in self.faces:
            for i in range(len(self.faces[fid].loops)):
                for v in self.loop_vertices(fid, i):
                    out[v].add(fid)
        return out

    def face_adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {f: set() for f in self.faces}
        for e in self.edges.values():
            if e.left_face is not None and e.right_face is not None:
                adj[e.left_face].add(e.right_face)
                adj[e.right_face].add(e.left_face)
        return adj

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        pts = np.array([v.position for v in self.vertices.values()])
        return pts.min(axis=0), pts.max(axis=0)

    def bbox_diag(self) -> float:
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    def default_tol(self) -> ToleranceContext:
        return default_tolerance(self.bbox_diag())

    def counts(self) -> dict[str, int]:
        inner = sum(len(f.loops) - 1 for f in self.faces.values())
        return {"V": len(self.vertices), "E": len(self.edges),
                "F": len(self.faces), "L_inner": inner,
                "S": len(self.shells), "G": self.genus}

    def copy(self) -> "Solid":
        return Solid(
            vertices={k: Vertex(v.id, v.position.copy()) for k, v in self.vertices.items()},
            edges={k: Edge(e.id, e.v0, e.v1) for k, e in self.edges.items()},
            faces={k: Face(f.id, Plane(f.plane.normal.copy(), f.plane.offset,
                                       _skip_normalize=True), f.sense,
                           [list(l) for l in f.loops]) for k, f in self.faces.items()},
            shells=[Shell(list(s.face_ids)) for s in self.shells],
            genus=self.genus,
        )


@dataclass
class Violation:
    kind: str              # non-manifold-edge | open-face | self-intersection |
                           # euler-mismatch | face-face-penetration
    entities: list[int]
    faces: list[int] = field(default_factory=list)  # involved face ids only

    def as_dict(self) -> dict:
        return {"kind": self.kind, "entities": sorted(self.entities),
                "faces": sorted(self.faces)}


@dataclass
class ValidityReport:
    is_valid: bool
    violations: list[Violation]

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def summary(self) -> str:
        if self.is_valid:
            return "valid"
        return ", ".join(sorted(self.kinds()))

    def as_dict(self) -> dict:
        return {"is_valid": self.is_valid,
                "violations": [v.as_dict() for v in self.violations]}


def _loop_checks(solid: Solid, tol: ToleranceContext, violations: list[Violation],
                 quick: bool, geo: dict | None = None) -> bool:
    """Per-face loop geometry: closure, simplicity, orientation. Returns False
    to request early exit in quick mode."""
    for fid in sorted(solid.faces):
        f = solid.faces[fid]
        structurally_ok = True
        for li, loop in enumerate(f.loops):
            if len(loop) < 3:
                structurally_ok = False
                break
            # closure: consecutive signed edges must chain end -> start
            for k in range(len(loop)):
                e0 = solid.edges[abs(loop[k])]
                e1 = solid.edges[abs(loop[(k + 1) % len(loop)])]
                end0 = e0.v1 if loop[k] > 0 else e0.v0
                start1 = e1.v0 if loop[(k + 1) % len(loop)] > 0 else e1.v1
                if end0 != start1:
                    structurally_ok = False
                    break
            if not structurally_ok:
                break
        if not structurally_ok:
            violations.append(Violation("open-face", [fid], faces=[fid]))
            if quick:
                return False
            continue
        if geo is not None and fid in geo:
            outer, holes = geo[fid][0], geo[fid][1]
        else:
            outer, holes = solid.face_loops_2d(fid)
        tol2 = tol.linear_eps
        bad = False
        if not loop_is_simple(outer, tol2) or signed_area(outer) <= tol2 * tol2:
            bad = True
        for h in holes:
            if bad:
                break
            if not loop_is_simple(h, tol2) or signed_area(h) >= -tol2 * tol2:
                bad = True
            elif region_location(h.mean(axis=0), outer, [], tol2) == "out":
                bad = True
        if not bad:
            # distinct loops of one face must not cross each other
            all_loops = [outer] + holes
            for a in range(len(all_loops)):
                for b in range(a + 1, len(all_loops)):
                    if _loops_cross(all_loops[a], all_loops[b], tol2):
                        bad = True
                        break
                if bad:
                    break
        if bad:
            violations.append(Violation("self-intersection", [fid], faces=[fid]))
            if quick:
                return False
    return True


def _loops_cross(l1: np.ndarray, l2: np.ndarray, tol: float) -> bool:
    from .polygon2d import segments_properly_cross
    n1 = np.concatenate([l1[1:], l1[:1]], axis=0)
    n2 = np.concatenate([l2[1:], l2[:1]], axis=0)
    for a, b in zip(l1, n1):
        for c, d in zip(l2, n2):
            if segments_properly_cross(a, b, c, d, tol):
                return True
    return False


def _line_bbox_params(p: np.ndarray, d: np.ndarray, lo: np.ndarray,
                      hi: np.ndarray, pad: float) -> tuple[float, float] | None:
    tmin, tmax = -np.inf, np.inf
    for k in range(3):
        if abs(d[k]) < 1e-15:
            if p[k] < lo[k] - pad or p[k] > hi[k] + pad:
                return None
        else:
            t0 = (lo[k] - pad - p[k]) / d[k]
            t1 = (hi[k] + pad - p[k]) / d[k]
            if t0 > t1:
                t0, t1 = t1, t0
            tmin = max(tmin, t0)
            tmax = min(tmax, t1)
    if tmin > tmax:
        return None
    return tmin, tmax


def _penetration_checks(solid: Solid, tol: ToleranceContext,
                        violations: list[Violation], quick: bool,
                        geo: dict | None = None) -> bool:
    """Global pairwise face-face interference (transversal and coplanar)."""
    fids = sorted(solid.faces)
    cache: dict[int, tuple] = geo if geo is not None else {}

    def data(fid):
        if fid not in cache:
            outer, holes = solid.face_loops_2d(fid)
            pts = solid.loop_points(fid, 0)
            lo = pts.min(axis=0)
            hi = pts.max(axis=0)
            for li in range(1, len(solid.faces[fid].loops)):
                p = solid.loop_points(fid, li)
                lo = np.minimum(lo, p.min(axis=0))
                hi = np.maximum(hi, p.max(axis=0))
            cache[fid] = (outer, holes, lo, hi)
        return cache[fid]

    eps = tol.linear_eps
    for i, fa in enumerate(fids):
        for fb in fids[i + 1:]:
            oa, ha, loa, hia = data(fa)
            ob, hb, lob, hib = data(fb)
            if np.any(loa > hib + eps) or np.any(lob > hia + eps):
                continue
            pa = solid.faces[fa].outward_plane()
            pb = solid.faces[fb].outward_plane()
            dot = float(np.dot(pa.normal, pb.normal))
            if abs(dot) > 1.0 - tol.angular_eps:
                # parallel planes: only coplanar pairs can interfere
                off_b = pb.offset * (1.0 if dot > 0 else -1.0)
                if abs(pa.offset - off_b) > eps:
                    continue
                # express face b in face a's basis for a shared-plane overlap test
                ob3 = [solid.loop_points(fb, li)
                       for li in range(len(solid.faces[fb].loops))]
                ob2 = [pa.project_2d(p) for p in ob3]
                outer_b = ob2[0] if signed_area(ob2[0]) > 0 else ob2[0][::-1]
                holes_b = [h if signed_area(h) < 0 else h[::-1] for h in ob2[1:]]
                if regions_overlap(oa, ha, outer_b, holes_b, eps):
                    violations.append(Violation("face-face-penetration", [fa, fb], faces=[fa, fb]))
                    if quick:
                        return False
                continue
            line = intersect_2_planes(pa, pb)
            if line is None:
                continue
            p0, d = line
            # the crossing line must pass through both faces' boxes at all
            if _line_bbox_params(p0, d, loa, hia, eps) is None:
                continue
            if _line_bbox_params(p0, d, lob, hib, eps) is None:
                continue
            ua, va = pa.basis()
            pa2_p = np.array([p0 @ ua, p0 @ va])
            pa2_d = np.array([d @ ua, d @ va])
            ub, vb = pb.basis()
            pb2_p = np.array([p0 @ ub, p0 @ vb])
            pb2_d = np.array([d @ ub, d @ vb])
            ia = line_region_intervals(pa2_p, pa2_d, oa, ha, eps)
            if not ia:
                continue
            ib = line_region_intervals(pb2_p, pb2_d, ob, hb, eps)
            if not ib:
                continue
            for (a0, a1) in ia:
                for (b0, b1) in ib:
                    lo_t, hi_t = max(a0, b0), min(a1, b1)
                    if hi_t - lo_t > eps:
                        violations.append(Violation("face-face-penetration", [fa, fb], faces=[fa, fb]))
                        if quick:
                            return False
                        break
                else:
                    continue
                break
    return True


def solid_signed_volume(solid: Solid, tol: ToleranceContext | None = None) -> float:
    """Signed volume by the divergence theorem.

    Planar faces allow a fan evaluation from any loop vertex (the shoelace
    generalization), so no triangulation is needed and holes, which wind
    opposite the outer loop, subtract automatically.
    """
    vol = 0.0
    for fid in sorted(solid.faces):
        for li in range(len(solid.faces[fid].loops)):
            pts = solid.loop_points(fid, li)
            a = pts[0]
            b = pts[1:-1]
            c = pts[2:]
            vol += float(np.einsum("i,ji->", a, np.cross(b, c))) / 6.0
    return vol


def validate_solid(solid: Solid, tol: ToleranceContext | None = None,
                   quick: bool = False) -> ValidityReport:
    """Full validity check: manifoldness, loop geometry, planarity,
    Euler-Poincare bookkeeping, global face-face penetration, volume sign.

    quick=True returns at the first violation (used by sampling oracles).
    """
    solid.check_references()
    tol = tol or solid.default_tol()
    violations: list[Violation] = []

    # edge usage: exactly one positive and one negative traversal
    usage: dict[int, list[int]] = {e: [] for e in solid.edges}
    for fid in sorted(solid.faces):
        for loop in solid.faces[fid].loops:
            for se in loop:
                usage[abs(se)].append(1 if se > 0 else -1)
    for eid in sorted(usage):
        u = usage[eid]
        if len(u) == 1:
            e = solid.edges[eid]
            faces = [x for x in (e.left_face, e.right_face) if x is not None]
            violations.append(Violation("open-face", faces + [eid], faces=faces))
            if quick:
                return ValidityReport(False, violations)
        elif len(u) != 2 or sorted(u) != [-1, 1]:
            e = solid.edges[eid]
            nm_faces = [x for x in (e.left_face, e.right_face) if x is not None]
            violations.append(Violation("non-manifold-edge", [eid], faces=nm_faces))
            if quick:
                return ValidityReport(False, violations)

    # vertices must lie on every incident face plane
    vf = solid.vertex_faces()
    for vid in sorted(vf):
        p = solid.vertices[vid].position
        for fid in sorted(vf[vid]):
            if abs(solid.faces[fid].plane.evaluate(p)) > tol.linear_eps:
                violations.append(Violation("open-face", [vid, fid], faces=[fid]))
                if quick:
                    return ValidityReport(False, violations)
                break

    geo: dict[int, tuple] = {}
    for fid in sorted(solid.faces):
        try:
            outer, holes = solid.face_loops_2d(fid)
        except Exception:
            continue
        pts = solid.loop_points(fid, 0)
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        for li in range(1, len(solid.faces[fid].loops)):
            p = solid.loop_points(fid, li)
            lo = np.minimum(lo, p.min(axis=0))
            hi = np.maximum(hi, p.max(axis=0))
        geo[fid] = (outer, holes, lo, hi)

    if not _loop_checks(solid, tol, violations, quick, geo):
        return ValidityReport(False, violations)

    # Euler-Poincare: V - E + F - L_inner = 2(S - G)
    c = solid.counts()
    if c["V"] - c["E"] + c["F"] - c["L_inner"] != 2 * (c["S"] - c["G"]):
        violations.append(Violation("euler-mismatch", []))
        if quick:
            return ValidityReport(False, violations)

    if not _penetration_checks(solid, tol, violations, quick, geo):
        return ValidityReport(False, violations)

    if not violations:
        # inside-out shells produce negative enclosed volume
        try:
            if solid_signed_volume(solid, tol) <= 0.0:
                violations.append(Violation("self-intersection", []))
        except Exception:
            violations.append(Violation("self-intersection", []))

    return ValidityReport(not violations, violations)
