"""Constructing solids: from raw face loops, boxes, convex half-space hulls.

`assemble_solid` is the shared back end: it takes bare planar faces with
oriented boundary loops in 3D, snaps coincident corners into shared vertices,
derives edges/shells/genus, and regularizes away collinear chain points and
degenerate loops. The Boolean engine and all primitive builders feed it.
"""
from __future__ import annotations

import numpy as np

from .brep import Edge, Face, Shell, Solid, Vertex
from .geometry import Plane, RigidMotion, intersect_3_planes
from .tolerances import ToleranceContext


class FaceDef:
    """Input face for assembly: stored plane + sense + oriented 3D loops
    (outer first, CCW w.r.t. outward normal; holes CW)."""

    __slots__ = ("plane", "sense", "loops", "source")

    def __init__(self, plane: Plane, sense: int, loops: list[np.ndarray], source=None):
        self.plane = plane
        self.sense = int(sense)
        self.loops = [np.atleast_2d(np.asarray(l, dtype=float)) for l in loops]
        self.source = source


def _cluster_positions(points: list[np.ndarray], eps: float) -> tuple[list[np.ndarray], list[int]]:
    """Deterministic greedy clustering; returns representatives and per-point ids."""
    if not points:
        return [], []
    arr = np.array(points)
    order = sorted(range(len(arr)), key=lambda i: tuple(np.round(arr[i], 12)))
    reps: list[np.ndarray] = []
    ids = [0] * len(arr)
    for i in order:
        hit = -1
        for ri, r in enumerate(reps):
            if np.linalg.norm(arr[i] - r) <= eps:
                hit = ri
                break
        if hit < 0:
            reps.append(arr[i])
            hit = len(reps) - 1
        ids[i] = hit
    return reps, ids


def assemble_solid(face_defs: list[FaceDef], tol: ToleranceContext,
                   face_ids: list[int] | None = None) -> Solid | None:
    """Build a Solid from face definitions; returns None if nothing survives.

    Vertices within linear_eps are merged; loop points that are globally
    collinear pass-throughs are pruned; loops below 3 distinct vertices and
    faces without an outer loop are dropped (regularization).
    """
    eps = tol.linear_eps
    all_pts: list[np.ndarray] = []
    spans: list[list[tuple[int, int]]] = []
    for fd in face_defs:
        fs = []
        for loop in fd.loops:
            start = len(all_pts)
            all_pts.extend(list(loop))
            fs.append((start, len(loop)))
        spans.append(fs)
    reps, ids = _cluster_positions(all_pts, eps)

    # loops as vertex-id chains, consecutive duplicates removed
    face_loops: list[list[list[int]]] = []
    for fd, fs in zip(face_defs, spans):
        loops_ids: list[list[int]] = []
        for (start, count) in fs:
            chain = [ids[start + k] for k in range(count)]
            dedup: list[int] = []
            for v in chain:
                if not dedup or dedup[-1] != v:
                    dedup.append(v)
            while len(dedup) > 1 and dedup[0] == dedup[-1]:
                dedup.pop()
            loops_ids.append(dedup)
        face_loops.append(loops_ids)

    # prune vertices that are straight pass-throughs in every incidence
    def _prune_pass():
        incid: dict[int, list[tuple[int, int, int]]] = {}
        for fi, loops_ids in enumerate(face_loops):
            for li, chain in enumerate(loops_ids):
                for k, v in enumerate(chain):
                    incid.setdefault(v, []).append((fi, li, k))
        removable: list[int] = []
        for v in sorted(incid):
            ok = True
            for (fi, li, k) in incid[v]:
                chain = face_loops[fi][li]
                if len(chain) < 3:
                    ok = False
                    break
                a = reps[chain[k - 1]]
                b = reps[chain[(k + 1) % len(chain)]]
                p = reps[v]
                ab = b - a
                nrm = np.linalg.norm(ab)
                if nrm <= eps:
                    ok = False
                    break
                d = np.linalg.norm(np.cross(p - a, ab)) / nrm
                t = float((p - a) @ ab) / (nrm * nrm)
                if d > eps or not (0.0 < t < 1.0):
                    ok = False
                    break
            if ok:
                removable.append(v)
        if not removable:
            return False
        rm = set(removable)
        for fi, loops_ids in enumerate(face_loops):
            for li, chain in enumerate(loops_ids):
                face_loops[fi][li] = [v for v in chain if v not in rm]
        return True

    for _ in range(8):
        if not _prune_pass():
            break

    # realize faces, edges, vertices
    vertices: dict[int, Vertex] = {}
    vid_map: dict[int, int] = {}
    edges: dict[int, Edge] = {}
    edge_key: dict[tuple[int, int], int] = {}
    faces: dict[int, Face] = {}
    next_face_id = 1

    def vert(rep_id: int) -> int:
        if rep_id not in vid_map:
            nid = len(vid_map) + 1
            vid_map[rep_id] = nid
            vertices[nid] = Vertex(nid, reps[rep_id].copy())
        return vid_map[rep_id]

    def edge_ref(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        if key not in edge_key:
            eid = len(edge_key) + 1
            edge_key[key] = eid
            edges[eid] = Edge(eid, key[0], key[1])
        eid = edge_key[key]
        return eid if (a, b) == (edges[eid].v0, edges[eid].v1) else -eid

    source_map: dict[int, object] = {}
    for fi, (fd, loops_ids) in enumerate(zip(face_defs, face_loops)):
        loops_ids = [c for c in loops_ids if len(c) >= 3]
        if not loops_ids:
            continue
        signed_loops: list[list[int]] = []
        for chain in loops_ids:
            vl = [vert(r) for r in chain]
            signed_loops.append([edge_ref(vl[k], vl[(k + 1) % len(vl)])
                                 for k in range(len(vl))])
        fid = face_ids[fi] if face_ids is not None else next_face_id
        while fid in faces:
            fid = max(faces) + 1
        next_face_id = max(next_face_id, fid + 1)
        faces[fid] = Face(fid, fd.plane, fd.sense, signed_loops)
        source_map[fid] = fd.source

    if not faces:
        return None

    # drop edges that no surviving face references
    used = {abs(se) for f in faces.values() for loop in f.loops for se in loop}
    edges = {k: v for k, v in edges.items() if k in used}
    used_v = {v for e in edges.values() for v in (e.v0, e.v1)}
    vertices = {k: v for k, v in vertices.items() if k in used_v}

    # shells: edge-connected face components
    adj: dict[int, set[int]] = {f: set() for f in faces}
    by_edge: dict[int, list[int]] = {}
    for fid, f in sorted(faces.items()):
        for loop in f.loops:
            for se in loop:
                by_edge.setdefault(abs(se), []).append(fid)
    for eid, fl in by_edge.items():
        for a in fl:
            for b in fl:
                if a != b:
                    adj[a].add(b)
    shells: list[Shell] = []
    seen: set[int] = set()
    for fid in sorted(faces):
        if fid in seen:
            continue
        comp = []
        stack = [fid]
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            comp.append(cur)
            stack.extend(sorted(adj[cur] - seen))
        shells.append(Shell(sorted(comp)))

    inner = sum(len(f.loops) - 1 for f in faces.values())
    euler = len(vertices) - len(edges) + len(faces) - inner
    genus = len(shells) - euler // 2 if euler % 2 == 0 else 0

    solid = Solid(vertices=vertices, edges=edges, faces=faces, shells=shells,
                  genus=genus)
    solid.provenance = {fid: source_map.get(fid) for fid in faces}
    return solid


def make_box(lo, hi, tol: ToleranceContext | None = None) -> Solid:
    """Axis-aligned box from corner points."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi <= lo):
        raise ValueError("box corners must satisfy lo < hi componentwise")
    if tol is None:
        tol = ToleranceContext(linear_eps=1e-9 * float(np.linalg.norm(hi - lo)))
    x0, y0, z0 = lo
    x1, y1, z1 = hi

    def quad(n, o, pts):
        return FaceDef(Plane(n, o), 1, [np.array(pts, dtype=float)])

    fds = [
        quad([-1, 0, 0], -x0, [[x0, y0, z0], [x0, y0, z1], [x0, y1, z1], [x0, y1, z0]]),
        quad([1, 0, 0], x1, [[x1, y0, z0], [x1, y1, z0], [x1, y1, z1], [x1, y0, z1]]),
        quad([0, -1, 0], -y0, [[x0, y0, z0], [x1, y0, z0], [x1, y0, z1], [x0, y0, z1]]),
        quad([0, 1, 0], y1, [[x0, y1, z0], [x0, y1, z1], [x1, y1, z1], [x1, y1, z0]]),
        quad([0, 0, -1], -z0, [[x0, y0, z0], [x0, y1, z0], [x1, y1, z0], [x1, y0, z0]]),
        quad([0, 0, 1], z1, [[x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1]]),
    ]
    solid = assemble_solid(fds, tol)
    assert solid is not None
    return solid


def unit_cube() -> Solid:
    return make_box([0, 0, 0], [1, 1, 1])


def convex_from_halfspaces(planes: list[Plane], tol: ToleranceContext) -> Solid | None:
    """Bounded convex solid { x : n_i . x <= o_i for all i }, or None if empty.

    Planes are outward half-space boundaries. The result must be bounded by
    the given set (callers clip unbounded regions with a box first).
    """
    eps = tol.linear_eps
    n = len(planes)
    cand: list[np.ndarray] = []
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                p = intersect_3_planes(planes[i], planes[j], planes[k])
                if p is None:
                    continue
                if all(pl.evaluate(p) <= eps for pl in planes):
                    cand.append(p)
    if len(cand) < 4:
        return None
    reps, _ = _cluster_positions(cand, eps)
    pts = np.array(reps)

    fds: list[FaceDef] = []
    for pl in planes:
        on = pts[np.abs(pts @ pl.normal - pl.offset) <= eps]
        if len(on) < 3:
            continue
        pts2 = pl.project_2d(on)
        ctr = pts2.mean(axis=0)
        ang = np.arctan2(pts2[:, 1] - ctr[1], pts2[:, 0] - ctr[0])
        order = np.argsort(ang)
        ordered = on[order]
        # skip degenerate slivers
        area2 = 0.0
        p2 = pts2[order]
        x, y = p2[:, 0], p2[:, 1]
        area2 = 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
        if area2 <= eps * eps:
            continue
        fds.append(FaceDef(pl, 1, [ordered]))
    if len(fds) < 4:
        return None
    return assemble_solid(fds, tol)


def transform_solid(solid: Solid, motion: RigidMotion) -> Solid:
    out = solid.copy()
    for v in out.vertices.values():
        v.position = motion.apply_point(v.position)
    for f in out.faces.values():
        f.plane = motion.apply_plane(f.plane)
    return out
