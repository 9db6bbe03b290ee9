"""Auxiliary swept volumes and Boolean repair at detected events.

The auxiliary model for one edited face over a motion segment is the prism
(translation) or hinge wedge (rotation) between the face's start and end
surfaces, laterally bounded by its neighbor faces' planes extended across
the sweep. Subtracting it (material-removing motion) or uniting it
(material-adding motion) with the current model yields the valid model at
the segment end, regardless of what topological contact happens there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .booleans import EMPTY, SUBTRACT, UNION, boolean
from .brep import Solid, validate_solid
from .construct import FaceDef, assemble_solid
from .errors import UnsupportedGeometryError, VdmError
from .direct_edit import PushPullEdit
from .geometry import Plane, intersect_3_planes
from .tolerances import ToleranceContext


@dataclass
class AuxiliaryModel:
    solid: Solid
    polarity: str  # additive | subtractive
    source_face: int


def _newell_normal(pts: np.ndarray) -> np.ndarray:
    n = np.zeros(3)
    for i in range(len(pts)):
        a, b = pts[i], pts[(i + 1) % len(pts)]
        n += np.cross(a, b)
    nn = np.linalg.norm(n)
    if nn < 1e-14:
        return np.zeros(3)
    return n / nn


def _face_def(plane: Plane, loops: list[np.ndarray], source) -> FaceDef | None:
    outer_n = _newell_normal(loops[0])
    if not np.any(outer_n):
        return None
    sense = 1 if float(outer_n @ plane.normal) > 0 else -1
    return FaceDef(plane, sense, loops, source=source)


def _loop_chain(solid: Solid, fid: int, li: int):
    """(vertex ids, neighbor face per segment) for one loop of a face."""
    f = solid.faces[fid]
    loop = f.loops[li]
    vids = solid.loop_vertices(fid, li)
    neighbors = []
    for se in loop:
        e = solid.edges[abs(se)]
        other = e.right_face if se > 0 else e.left_face
        neighbors.append(other)
    return vids, neighbors


def _top_vertex_planes(solid: Solid, fid: int, vid: int,
                       vf: dict[int, set[int]]) -> tuple[int, int] | None:
    others = sorted(vf[vid] - {fid})
    if len(others) < 2:
        return None
    if len(others) == 2:
        return others[0], others[1]
    # over-determined corner: pick the best-conditioned pair
    base = solid.faces[fid].plane.normal
    best, best_det = None, 0.0
    for i in range(len(others)):
        for j in range(i + 1, len(others)):
            m = np.array([base, solid.faces[others[i]].plane.normal,
                          solid.faces[others[j]].plane.normal])
            d = abs(np.linalg.det(m))
            if d > best_det:
                best, best_det = (others[i], others[j]), d
    return best


def _polarity_signs(solid: Solid, fid: int, edit: PushPullEdit,
                    pts: np.ndarray) -> np.ndarray:
    """Sign of outward-normal . velocity at given points of the face."""
    n_out = solid.faces[fid].outward_normal()
    if edit.kind == "translate":
        v = edit.distance * edit.direction
        return np.full(len(pts), np.sign(float(n_out @ v)))
    omega = edit.angle * edit.axis_dir
    vel = np.cross(omega, pts - edit.axis_point)
    return np.sign(vel @ n_out)


def _wall_plane(solid: Solid, edit: PushPullEdit, gid: int,
                b0: np.ndarray, b1: np.ndarray,
                moved: set[int]) -> Plane | None:
    """Plane bounding the sweep across one boundary edge."""
    if gid not in moved:
        return solid.faces[gid].plane
    if edit.kind == "translate":
        # shared edge between two co-moving faces sweeps a plane spanned by
        # the edge and the translation direction
        d = b1 - b0
        n = np.cross(d, edit.direction)
        nn = np.linalg.norm(n)
        if nn < 1e-12:
            return None  # edge slides along itself, wall degenerates
        n = n / nn
        return Plane(n, float(n @ b0), _skip_normalize=True)
    raise UnsupportedGeometryError(
        "rotational multi-face edits with adjacent moved faces sweep "
        "non-planar walls")


def build_auxiliary(solid: Solid, edit: PushPullEdit, t_from: float, t_to: float,
                    tol: ToleranceContext | None = None) -> list[AuxiliaryModel]:
    """Swept auxiliary volumes for every edited face over [t_from, t_to].

    Returns an empty list for a zero-length sweep. A rotational edit whose
    face straddles the zero-velocity line yields one additive and one
    subtractive model for that face.
    """
    tol = tol or solid.default_tol()
    if t_to <= t_from + tol.parameter_eps * 0.5:
        return []
    dt = t_to - t_from
    if edit.kind == "rotate" and abs(dt * edit.angle) > math.pi * 0.51:
        raise UnsupportedGeometryError("rotational sweep segment exceeds pi/2")

    moved = set(edit.face_ids) & set(solid.faces)
    vf = solid.vertex_faces()
    out: list[AuxiliaryModel] = []
    for fid in sorted(moved):
        out.extend(_face_auxes(solid, fid, edit, dt, moved, vf, tol))
    return out


def _face_auxes(solid: Solid, fid: int, edit: PushPullEdit, dt: float,
                moved: set[int], vf, tol: ToleranceContext) -> list[AuxiliaryModel]:
    f = solid.faces[fid]
    plane_from = f.plane
    plane_to = edit.move_plane(plane_from, dt)

    loops_data = []
    all_pts = []
    for li in range(len(f.loops)):
        vids, neighbors = _loop_chain(solid, fid, li)
        pts = np.array([solid.vertices[v].position for v in vids])
        loops_data.append((vids, neighbors, pts))
        all_pts.append(pts)
    all_pts = np.vstack(all_pts)

    signs = _polarity_signs(solid, fid, edit, all_pts)
    pos_any = bool(np.any(signs > 1e-9)) or _centroid_sign(solid, fid, edit) > 0
    neg_any = bool(np.any(signs < -1e-9)) or _centroid_sign(solid, fid, edit) < 0

    if not pos_any and not neg_any:
        return []  # plane does not move materially
    if pos_any and neg_any:
        return _mixed_rotation_auxes(solid, fid, edit, dt, moved, vf, tol,
                                     loops_data, plane_from, plane_to)
    polarity = "additive" if pos_any else "subtractive"
    prism = _build_prism(solid, fid, edit, dt, moved, vf, tol,
                         loops_data, plane_from, plane_to, polarity)
    if prism is None:
        return []
    return [AuxiliaryModel(prism, polarity, fid)]


def _centroid_sign(solid: Solid, fid: int, edit: PushPullEdit) -> float:
    outer, _ = solid.face_loops_2d(fid)
    c2 = outer.mean(axis=0)
    c3 = solid.faces[fid].outward_plane().lift_3d(c2)[0]
    return float(_polarity_signs(solid, fid, edit, np.array([c3]))[0])


def _orient_and_assemble(raw_faces: list[tuple[Plane, list[np.ndarray], object]],
                         tol: ToleranceContext) -> Solid | None:
    """Assemble a closed solid from faces with arbitrary loop winding.

    Orientation is made globally consistent by propagating across shared
    edges, then fixed outward by requiring positive enclosed volume.
    """
    eps = tol.linear_eps
    cleaned: list[tuple[Plane, list[np.ndarray], object]] = []
    for plane, loops, source in raw_faces:
        keep = []
        for l in loops:
            d = _dedupe_loop(np.asarray(l, dtype=float), eps)
            if d is not None and np.any(_newell_normal(d)):
                keep.append(d)
        if keep:
            cleaned.append((plane, keep, source))
    if len(cleaned) < 4:
        return None

    def vkey(p):
        return tuple(np.round(np.asarray(p) / max(4 * eps, 1e-12)).astype(np.int64))

    def edges_of(loops):
        out = []
        for l in loops:
            ks = [vkey(p) for p in l]
            for i in range(len(ks)):
                out.append((ks[i], ks[(i + 1) % len(ks)]))
        return out

    flips = [None] * len(cleaned)
    flips[0] = False
    by_edge: dict[tuple, list[tuple[int, bool]]] = {}
    for fi, (_pl, loops, _s) in enumerate(cleaned):
        for (a, b) in edges_of(loops):
            if a == b:
                continue
            und = (a, b) if a < b else (b, a)
            by_edge.setdefault(und, []).append((fi, (a, b) == und))
    queue = [0]
    while queue:
        fi = queue.pop()
        for (a, b) in edges_of(cleaned[fi][1]):
            if a == b:
                continue
            und = (a, b) if a < b else (b, a)
            for (fj, fwd) in by_edge.get(und, []):
                if fj == fi or flips[fj] is not None:
                    continue
                # manifold pairing: the partner must traverse und oppositely
                my_fwd = ((a, b) == und) != bool(flips[fi])
                flips[fj] = (fwd == my_fwd)
                queue.append(fj)
    if any(f is None for f in flips):
        return None  # disconnected sliver; let the caller treat as degenerate

    oriented = []
    for (plane, loops, source), flip in zip(cleaned, flips):
        ll = [l[::-1] for l in loops] if flip else loops
        oriented.append((plane, ll, source))

    vol = 0.0
    for (_pl, loops, _s) in oriented:
        for l in loops:
            for i in range(1, len(l) - 1):
                vol += float(np.linalg.det(np.array([l[0], l[i], l[i + 1]]))) / 6.0
    if vol < 0:
        oriented = [(pl, [l[::-1] for l in loops], s) for (pl, loops, s) in oriented]

    fds = []
    for (plane, loops, source) in oriented:
        fd = _face_def(plane, loops, source)
        if fd is not None:
            fds.append(fd)
    return assemble_solid(fds, tol)


def _build_prism(solid: Solid, fid: int, edit: PushPullEdit, dt: float,
                 moved: set[int], vf, tol: ToleranceContext,
                 loops_data, plane_from: Plane, plane_to: Plane,
                 polarity: str) -> Solid | None:
    eps = tol.linear_eps
    raw_faces: list[tuple[Plane, list[np.ndarray], object]] = []
    bottom_loops: list[np.ndarray] = []
    top_loops: list[np.ndarray] = []

    for li, (vids, neighbors, pts) in enumerate(loops_data):
        n = len(vids)
        wall_planes = []
        for k in range(n):
            wp = _wall_plane(solid, edit, neighbors[k], pts[k], pts[(k + 1) % n],
                             moved)
            wall_planes.append(wp)
        tops = []
        for k, vid in enumerate(vids):
            # a corner slides along the two walls of its adjacent loop edges
            p_prev = wall_planes[k - 1]
            p_next = wall_planes[k]
            top = None
            if p_prev is not None and p_next is not None:
                top = intersect_3_planes(plane_to, p_prev, p_next)
            if top is None:
                pair = _top_vertex_planes(solid, fid, vid, vf)
                if pair is None:
                    return None
                g1, g2 = pair
                p1 = solid.faces[g1].plane
                p2 = solid.faces[g2].plane
                if g1 in moved:
                    p1 = edit.move_plane(p1, dt)
                if g2 in moved:
                    p2 = edit.move_plane(p2, dt)
                top = intersect_3_planes(plane_to, p1, p2)
            if top is None:
                raise UnsupportedGeometryError(
                    f"sweep of face {fid} is unbounded at a corner of its "
                    f"boundary")
            tops.append(top)
        tops = np.array(tops)
        bottom_loops.append(pts)
        top_loops.append(tops)

        # walls, one per boundary segment
        for k in range(n):
            gid = neighbors[k]
            b0, b1 = pts[k], pts[(k + 1) % n]
            t0p, t1p = tops[k], tops[(k + 1) % n]
            wall_plane = wall_planes[k]
            if wall_plane is None:
                continue
            raw_faces.append((wall_plane, [np.array([b0, b1, t1p, t0p])],
                              ("wall", fid, gid)))

    raw_faces.append((plane_from, bottom_loops, ("cap0", fid)))
    raw_faces.append((plane_to, top_loops, ("cap1", fid)))

    prism = _orient_and_assemble(raw_faces, tol)
    if prism is None:
        return None
    from .brep import solid_signed_volume
    if abs(solid_signed_volume(prism, tol)) <= (10 * eps) ** 3:
        return None
    return prism


def _dedupe_loop(pts: np.ndarray, eps: float) -> np.ndarray | None:
    keep = []
    for p in pts:
        if not keep or np.linalg.norm(p - keep[-1]) > eps:
            keep.append(p)
    while len(keep) > 1 and np.linalg.norm(keep[0] - keep[-1]) <= eps:
        keep.pop()
    if len(keep) < 3:
        return None
    return np.array(keep)


def _mixed_rotation_auxes(solid, fid, edit, dt, moved, vf, tol,
                          loops_data, plane_from, plane_to):
    """Rotation whose face straddles the zero-velocity line: split the face
    at the line and emit one additive and one subtractive wedge."""
    if edit.kind != "rotate":
        raise UnsupportedGeometryError("mixed polarity under translation")
    n_out = solid.faces[fid].outward_normal()
    if abs(float(edit.axis_dir @ n_out)) > 1e-7 or \
       abs(solid.faces[fid].plane.evaluate(edit.axis_point)) > 100 * tol.linear_eps:
        raise UnsupportedGeometryError(
            "mixed-polarity rotation requires the axis to lie in the face plane")
    if len(loops_data) != 1:
        raise UnsupportedGeometryError(
            "mixed-polarity rotation of a face with holes is not supported")
    vids, neighbors, pts = loops_data[0]
    omega = edit.angle * edit.axis_dir
    m = np.cross(n_out, omega)  # zero-velocity plane normal
    c = float(m @ edit.axis_point)

    out = []
    for side, polarity in ((1.0, "additive"), (-1.0, "subtractive")):
        # clip the loop to one side of the zero-velocity line, remembering for
        # every chain point which wall its outgoing segment runs along
        # (None = the segment lies on the zero line itself)
        chain_pts, chain_tops_kind, seg_neighbors = [], [], []
        n = len(vids)
        vals = pts @ (side * m) - side * c
        for k in range(n):
            k2 = (k + 1) % n
            va, vb = vals[k], vals[k2]
            if va >= -tol.linear_eps:
                chain_pts.append(pts[k])
                chain_tops_kind.append(("v", vids[k]))
                seg_neighbors.append(neighbors[k])
            if (va > tol.linear_eps and vb < -tol.linear_eps) or \
               (va < -tol.linear_eps and vb > tol.linear_eps):
                t = va / (va - vb)
                xp = pts[k] + t * (pts[k2] - pts[k])
                chain_pts.append(xp)
                chain_tops_kind.append(("axis",))
                # exiting crossing: continue along the zero line; entering:
                # continue along the original segment
                seg_neighbors.append(None if va > 0 else neighbors[k])
        if len(chain_pts) < 3:
            continue

        ppts = np.array(chain_pts)
        if _dedupe_loop(ppts, tol.linear_eps) is None:
            continue
        tops = []
        for k, kind in enumerate(chain_tops_kind):
            if kind[0] == "axis":
                tops.append(ppts[k])
            else:
                pair = _top_vertex_planes(solid, fid, kind[1], vf)
                if pair is None:
                    raise UnsupportedGeometryError("corner with too few planes")
                p1 = solid.faces[pair[0]].plane
                p2 = solid.faces[pair[1]].plane
                top = intersect_3_planes(plane_to, p1, p2)
                if top is None:
                    raise UnsupportedGeometryError("unbounded mixed wedge")
                tops.append(top)
        tops = np.array(tops)

        raw_faces = []
        nn = len(ppts)
        for k in range(nn):
            gid = seg_neighbors[k]
            if gid is None:
                continue
            b0, b1 = ppts[k], ppts[(k + 1) % nn]
            t0p, t1p = tops[k], tops[(k + 1) % nn]
            wall_plane = _wall_plane(solid, edit, gid, b0, b1, moved)
            if wall_plane is None:
                continue
            raw_faces.append((wall_plane, [np.array([b0, b1, t1p, t0p])],
                              ("wall", fid, gid)))
        raw_faces.append((plane_from, [ppts], ("cap0", fid)))
        raw_faces.append((plane_to, [tops], ("cap1", fid)))
        prism = _orient_and_assemble(raw_faces, tol)
        if prism is None:
            continue
        from .brep import solid_signed_volume
        if abs(solid_signed_volume(prism, tol)) <= (10 * tol.linear_eps) ** 3:
            continue
        out.append(AuxiliaryModel(prism, polarity, fid))
    return out


def resolve_at_gtip(solid: Solid, auxes: list[AuxiliaryModel],
                    tol: ToleranceContext | None = None):
    """Apply the auxiliary volumes: subtractive ones first, then additive.

    Returns (new solid, provenance new-face-id -> source-face-ids) or None if
    the model vanished. An empty aux list is a no-op.
    """
    tol = tol or solid.default_tol()
    if not auxes:
        return solid, {fid: [fid] for fid in solid.faces}

    cur = solid
    prov: dict[int, list[int]] = {fid: [fid] for fid in solid.faces}
    order = sorted(auxes, key=lambda a: (a.polarity != "subtractive", a.source_face))
    for aux in order:
        rep = validate_solid(aux.solid, tol, quick=True)
        if not rep.is_valid:
            raise VdmError(f"auxiliary model invalid: {rep.summary()}")
        op = SUBTRACT if aux.polarity == "subtractive" else UNION
        res = boolean(cur, aux.solid, op, tol, validate_inputs=False)
        if res is EMPTY or isinstance(res, type(EMPTY)):
            return None
        aux_tags = getattr(aux.solid, "provenance", {})
        new_prov: dict[int, list[int]] = {}
        for nf, sources in res.provenance.items():
            acc: list[int] = []
            for (operand, sf) in (sources or []):
                if operand == "a":
                    acc.extend(prov.get(sf, []))
                else:
                    # the aux cap at t_to carries the moved face forward
                    tag = aux_tags.get(sf)
                    if isinstance(tag, tuple) and tag and tag[0] == "cap1":
                        acc.extend(prov.get(tag[1], []))
            new_prov[nf] = sorted(set(acc))
        prov = new_prov
        cur = res
    return cur, prov
