"""Regularized Booleans on planar-faced solids.

Strategy: face splitting + membership classification, with all split
geometry derived from a per-plane *shared registry* of intersection lines
and line-pair points. Both operands' faces on a given plane consume the same
registry, so matching fragment boundaries are bitwise identical and the
final merge step can cancel opposite half-edges exactly -- no T-junctions,
no tolerance stitching.

Classification of a fragment against the other solid is a point test of its
interior: coplanar fragments are resolved against the other solid's faces on
the same plane (deterministic keep/drop keyed on operand order), everything
else by perturbation-retried ray casting.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .brep import Solid, validate_solid
from .construct import FaceDef, assemble_solid
from .errors import BooleanDegeneracyError, InvalidSolidError
from .geometry import Plane, intersect_2_planes
from .polygon2d import Arrangement, region_location, signed_area
from .tolerances import ToleranceContext, default_tolerance


@dataclass(frozen=True)
class BooleanOp:
    kind: str  # union | subtract | intersect

    def __post_init__(self):
        if self.kind not in ("union", "subtract", "intersect"):
            raise ValueError(f"unknown boolean kind '{self.kind}'")


UNION = BooleanOp("union")
SUBTRACT = BooleanOp("subtract")
INTERSECT = BooleanOp("intersect")


class EmptySolid:
    """Regularized result with no volume."""

    def __repr__(self):
        return "Empty"

    def __bool__(self):
        return False


EMPTY = EmptySolid()


# --------------------------------------------------------------------------
# point membership


def point_classify(solid: Solid, p, tol: ToleranceContext | None = None) -> str:
    """'inside' / 'outside' / 'on-boundary' via ray casting with retry."""
    tol = tol or solid.default_tol()
    p = np.asarray(p, dtype=float)
    eps = tol.linear_eps

    regions = {}
    for fid in sorted(solid.faces):
        pl = solid.faces[fid].outward_plane()
        if abs(pl.evaluate(p)) <= eps:
            outer, holes = _region_in_basis(solid, fid, pl)
            if region_location(pl.project_2d(p)[0], outer, holes, eps) != "out":
                return "on-boundary"

    rng = np.random.default_rng(20240613)
    for _ in range(32):
        d = rng.normal(size=3)
        nd = np.linalg.norm(d)
        if nd < 1e-6:
            continue
        d = d / nd
        count = 0
        ok = True
        for fid in sorted(solid.faces):
            f = solid.faces[fid]
            pl = f.outward_plane()
            denom = float(pl.normal @ d)
            if abs(denom) < 1e-9:
                continue
            t = (pl.offset - float(pl.normal @ p)) / denom
            if t <= eps:
                continue
            hit = p + t * d
            if fid not in regions:
                regions[fid] = _region_in_basis(solid, fid, pl)
            outer, holes = regions[fid]
            loc = region_location(pl.project_2d(hit)[0], outer, holes, eps)
            if loc == "on":
                ok = False
                break
            if loc == "in":
                count += 1
        if ok:
            return "inside" if count % 2 == 1 else "outside"
    raise BooleanDegeneracyError("ray casting failed to find a clean direction")


def _region_in_basis(solid: Solid, fid: int, basis_plane: Plane):
    """Face loops projected into an externally chosen plane basis."""
    loops = [basis_plane.project_2d(solid.loop_points(fid, li))
             for li in range(len(solid.faces[fid].loops))]
    return loops[0], loops[1:]


# --------------------------------------------------------------------------
# scene: unified plane table + per-plane line/point registries


class _Scene:
    def __init__(self, a: Solid, b: Solid, tol: ToleranceContext):
        self.tol = tol
        self.planes: list[Plane] = []
        self.face_plane: dict[tuple[str, int], tuple[int, int]] = {}
        for operand, solid in (("a", a), ("b", b)):
            for fid in sorted(solid.faces):
                out_pl = solid.faces[fid].outward_plane()
                self.face_plane[(operand, fid)] = self._register(out_pl)
        self.solids = {"a": a, "b": b}
        self._registries: dict[int, Arrangement | None] = {}
        self._faces_on_plane: dict[int, list[tuple[str, int, int]]] = {}
        for (operand, fid), (pi, orient) in self.face_plane.items():
            self._faces_on_plane.setdefault(pi, []).append((operand, fid, orient))

    def _register(self, pl: Plane) -> tuple[int, int]:
        eps, aeps = self.tol.linear_eps, self.tol.angular_eps
        band = 25.0
        for i, rep in enumerate(self.planes):
            cr = float(np.linalg.norm(np.cross(rep.normal, pl.normal)))
            dot = float(rep.normal @ pl.normal)
            if cr <= aeps or cr <= 1e-12:
                same = dot > 0
                gap = abs(pl.offset - rep.offset) if same else abs(pl.offset + rep.offset)
                if gap <= eps:
                    return i, (1 if same else -1)
            elif cr <= band * aeps:
                gap_s = abs(pl.offset - dot * rep.offset)
                if gap_s <= band * eps:
                    raise BooleanDegeneracyError(
                        "near-coincident planes straddle the merge tolerance")
        self.planes.append(pl)
        return len(self.planes) - 1, 1

    def registry(self, pi: int) -> Arrangement | None:
        """Shared line arrangement for one scene plane (lazy)."""
        if pi in self._registries:
            return self._registries[pi]
        rep = self.planes[pi]
        eps = self.tol.linear_eps

        lo = np.array([np.inf, np.inf])
        hi = -np.array([np.inf, np.inf])
        for (operand, fid, _o) in self._faces_on_plane[pi]:
            solid = self.solids[operand]
            for li in range(len(solid.faces[fid].loops)):
                pts = rep.project_2d(solid.loop_points(fid, li))
                lo = np.minimum(lo, pts.min(axis=0))
                hi = np.maximum(hi, pts.max(axis=0))
        pad = 16.0 * eps + 1e-9 * float(np.linalg.norm(hi - lo))
        lo -= pad
        hi += pad

        lines = []
        for j, other in enumerate(self.planes):
            if j == pi:
                continue
            res = intersect_2_planes(rep, other, parallel_eps=1e-12)
            if res is None:
                continue
            p3, d3 = res
            p2 = rep.project_2d(p3)[0]
            d2 = rep.project_2d(p3 + d3)[0] - p2
            nl = float(np.linalg.norm(d2))
            if nl < 1e-12:
                continue
            d2 = d2 / nl
            if _line_hits_bbox(p2, d2, lo, hi):
                lines.append((p2, d2))
        arr = Arrangement(lines, eps) if lines else None
        self._registries[pi] = arr
        return arr


def _line_hits_bbox(p, d, lo, hi) -> bool:
    tmin, tmax = -np.inf, np.inf
    for k in range(2):
        if abs(d[k]) < 1e-15:
            if p[k] < lo[k] or p[k] > hi[k]:
                return False
        else:
            t0 = (lo[k] - p[k]) / d[k]
            t1 = (hi[k] - p[k]) / d[k]
            if t0 > t1:
                t0, t1 = t1, t0
            tmin = max(tmin, t0)
            tmax = min(tmax, t1)
    return tmin <= tmax


# --------------------------------------------------------------------------
# fragments


@dataclass
class _Fragment:
    plane_idx: int
    outward: int                # outward normal = outward * rep.normal
    loop_rep: np.ndarray        # CCW w.r.t. outward normal, in rep basis coords
    point_ids: list[int] | None # registry ids (None for unsplit whole faces)
    operand: str
    source_fid: int

    def interior_point(self) -> np.ndarray:
        return self.loop_rep.mean(axis=0)

    def flipped(self) -> "_Fragment":
        return _Fragment(self.plane_idx, -self.outward, self.loop_rep[::-1],
                         None if self.point_ids is None else self.point_ids[::-1],
                         self.operand, self.source_fid)


def _face_fragments(scene: _Scene, operand: str, fid: int) -> list[_Fragment]:
    solid = scene.solids[operand]
    pi, orient = scene.face_plane[(operand, fid)]
    rep = scene.planes[pi]
    eps = scene.tol.linear_eps

    outer, holes = _region_in_basis(solid, fid, rep)
    # region_location is parity-based, orientation-insensitive; keep as-is
    arr = scene.registry(pi)
    frags: list[_Fragment] = []
    if arr is None:
        loops = [outer] + holes
        pts = loops[0]
        frags.append(_Fragment(pi, orient, pts if orient > 0 else pts[::-1],
                               None, operand, fid))
        return frags
    cells = arr.cells(outer, holes)
    for ids, coords in cells:
        if orient > 0:
            frags.append(_Fragment(pi, orient, coords, list(ids), operand, fid))
        else:
            frags.append(_Fragment(pi, orient, coords[::-1], list(ids)[::-1],
                                   operand, fid))
    return frags


def _classify_fragment(scene: _Scene, frag: _Fragment, other: str) -> str:
    """'in' | 'out' | 'on_same' | 'on_opp' relative to the other operand."""
    tol = scene.tol
    rep = scene.planes[frag.plane_idx]
    c2 = frag.interior_point()
    for (operand, fid, orient) in scene._faces_on_plane.get(frag.plane_idx, []):
        if operand != other:
            continue
        solid = scene.solids[operand]
        outer, holes = _region_in_basis(solid, fid, rep)
        if region_location(c2, outer, holes, tol.linear_eps) != "out":
            return "on_same" if orient == frag.outward else "on_opp"
    c3 = rep.lift_3d(c2)[0]
    side = point_classify(scene.solids[other], c3, tol)
    return "in" if side == "inside" else "out"


_KEEP_A = {
    "union": {"out", "on_same"},
    "intersect": {"in", "on_same"},
    "subtract": {"out", "on_opp"},
}
_KEEP_B = {
    "union": {"out"},
    "intersect": {"in"},
    "subtract": {"in"},  # flipped
}


# --------------------------------------------------------------------------
# merge: cancellation + loop chaining per oriented plane


def _chain_loops(edges: dict[tuple[int, int], None], pos: dict[int, np.ndarray],
                 flip: bool) -> list[list[int]]:
    """Chain directed edges into closed loops; at multi-way junctions take the
    sharpest turn consistent with the winding (keeps loops simple)."""
    outgoing: dict[int, list[int]] = {}
    for (a, b) in edges:
        outgoing.setdefault(a, []).append(b)

    def angle(a, b):
        d = pos[b] - pos[a]
        return float(np.arctan2(d[1], d[0]))

    remaining = dict.fromkeys(edges.keys())
    loops = []
    while remaining:
        start = min(remaining)
        loop = [start[0]]
        cur = start
        for _ in range(len(edges) + 2):
            del remaining[cur]
            a, b = cur
            loop.append(b)
            cands = [c for c in outgoing[b] if (b, c) in remaining]
            if not cands:
                break
            ang_in = angle(b, a)

            def turn(c):
                if flip:
                    diff = (angle(b, c) - ang_in) % (2.0 * np.pi)
                else:
                    diff = (ang_in - angle(b, c)) % (2.0 * np.pi)
                return diff if diff > 1e-12 else 2.0 * np.pi

            nxt = min(cands, key=lambda c: (turn(c), c))
            cur = (b, nxt)
            if cur == start:
                break
        if loop[0] == loop[-1]:
            loops.append(loop[:-1])
        # open chains indicate cancellation mismatch; drop defensively
    return loops


def _merge_group(frags: list[_Fragment], rep: Plane, outward: int,
                 eps: float) -> list[tuple[np.ndarray, list[np.ndarray], list[_Fragment]]]:
    """Merge fragments sharing an oriented plane into faces (outer + holes).

    Fragments carry registry point ids, so opposite half-edges cancel
    exactly. Unsplit whole-face fragments pass through unmerged.
    """
    out: list[tuple[np.ndarray, list[np.ndarray], list[_Fragment]]] = []
    keyed = [f for f in frags if f.point_ids is not None]
    passthrough = [f for f in frags if f.point_ids is None]
    for f in passthrough:
        out.append((f.loop_rep, [], [f]))
    if not keyed:
        return out

    pos: dict[int, np.ndarray] = {}
    edge_count: dict[tuple[int, int], int] = {}
    for f in keyed:
        ids = f.point_ids
        for k, pid in enumerate(ids):
            pos[pid] = f.loop_rep[k]
        for k in range(len(ids)):
            a, b = ids[k], ids[(k + 1) % len(ids)]
            if a == b:
                continue
            if (b, a) in edge_count:
                edge_count[b, a] -= 1
                if edge_count[b, a] == 0:
                    del edge_count[b, a]
            else:
                edge_count[a, b] = edge_count.get((a, b), 0) + 1
    edges = {}
    for k, c in edge_count.items():
        if c != 0:
            edges[k] = None

    loops = _chain_loops(edges, pos, flip=(outward < 0))
    outers, holes = [], []
    for loop in loops:
        coords = np.array([pos[i] for i in loop])
        area = signed_area(coords) * (1 if outward > 0 else -1)
        if abs(area) <= eps * eps:
            continue
        (outers if area > 0 else holes).append(coords)

    comps: list[tuple[np.ndarray, list[np.ndarray]]] = []
    for o in outers:
        comps.append((o, []))
    for h in holes:
        probe = h.mean(axis=0)
        best, best_area = None, None
        for ci, (o, _hl) in enumerate(comps):
            if region_location(probe, o, [], eps) == "in":
                a = abs(signed_area(o))
                if best_area is None or a < best_area:
                    best, best_area = ci, a
        if best is not None:
            comps[best][1].append(h)
    for (o, hl) in comps:
        members = [f for f in keyed
                   if region_location(f.interior_point(), o, hl, eps) == "in"]
        out.append((o, hl, members))
    return out


# --------------------------------------------------------------------------
# public op


def boolean(a: Solid, b: Solid, op: BooleanOp,
            tol: ToleranceContext | None = None,
            validate_inputs: bool = True) -> Solid | EmptySolid:
    """Regularized union / subtract / intersect of two valid solids."""
    if tol is None:
        diag = max(a.bbox_diag(), b.bbox_diag())
        tol = default_tolerance(diag)
    if validate_inputs:
        for s in (a, b):
            rep = validate_solid(s, tol)
            if not rep.is_valid:
                raise InvalidSolidError(rep)

    scene = _Scene(a, b, tol)
    kept: list[_Fragment] = []
    for fid in sorted(a.faces):
        for frag in _face_fragments(scene, "a", fid):
            cls = _classify_fragment(scene, frag, "b")
            if cls in _KEEP_A[op.kind]:
                kept.append(frag)
    for fid in sorted(b.faces):
        for frag in _face_fragments(scene, "b", fid):
            cls = _classify_fragment(scene, frag, "a")
            if cls in _KEEP_B[op.kind]:
                kept.append(frag.flipped() if op.kind == "subtract" else frag)

    if not kept:
        return EMPTY

    groups: dict[tuple[int, int], list[_Fragment]] = {}
    for f in kept:
        groups.setdefault((f.plane_idx, f.outward), []).append(f)

    face_defs: list[FaceDef] = []
    for (pi, outward) in sorted(groups):
        rep = scene.planes[pi]
        comps = _merge_group(groups[(pi, outward)], rep, outward, tol.linear_eps)
        for (outer2, holes2, members) in comps:
            loops3 = [rep.lift_3d(outer2)] + [rep.lift_3d(h) for h in holes2]
            sources = sorted({(m.operand, m.source_fid) for m in members})
            face_defs.append(FaceDef(rep, outward, loops3, source=sources))

    # deterministic id assignment: keep unique A-source ids where possible
    used: set[int] = set()
    face_ids: list[int] = []
    fresh = max(list(a.faces) + list(b.faces)) + 1
    for fd in face_defs:
        fid = None
        if fd.source and len(fd.source) == 1 and fd.source[0][0] == "a":
            cand = fd.source[0][1]
            if cand not in used:
                fid = cand
        if fid is None:
            fid = fresh
            fresh += 1
        used.add(fid)
        face_ids.append(fid)

    solid = assemble_solid(face_defs, tol, face_ids=face_ids)
    if solid is None:
        return EMPTY

    report = validate_solid(solid, tol)
    if not report.is_valid:
        raise BooleanDegeneracyError(
            f"boolean produced a non-regular result: {report.summary()}")
    from .brep import solid_signed_volume
    if solid_signed_volume(solid, tol) <= (10 * tol.linear_eps) ** 3:
        return EMPTY
    return solid
