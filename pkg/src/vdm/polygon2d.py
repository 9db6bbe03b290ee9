"""2D polygon machinery: regions with holes, triangulation, line arrangements.

A *region* is an outer loop (CCW) plus zero or more hole loops (CW), given as
Nx2 float arrays. All tolerances are absolute lengths in the 2D plane.
"""
from __future__ import annotations

import numpy as np

from .geometry import GeometryError


def signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def loop_perimeter(pts: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)))


def point_segment_distance(p, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-300:
        return float(np.linalg.norm(p - a))
    t = np.clip(float((p - a) @ ab) / denom, 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


def point_loop_location(p, loop: np.ndarray, tol: float) -> str:
    """'on' if within tol of the boundary, else 'in'/'out' by crossing parity."""
    a = loop
    b = np.concatenate([loop[1:], loop[:1]], axis=0)
    # boundary proximity, vectorized
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    denom = np.where(denom < 1e-300, 1.0, denom)
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / denom, 0.0, 1.0)
    closest = a + t[:, None] * ab
    if np.min(np.linalg.norm(p - closest, axis=1)) <= tol:
        return "on"
    # crossing number with a ray along +x
    ya, yb = a[:, 1], b[:, 1]
    cond = (ya > p[1]) != (yb > p[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = a[:, 0] + (p[1] - ya) / (yb - ya) * (b[:, 0] - a[:, 0])
    hits = cond & (xs > p[0])
    return "in" if (int(np.count_nonzero(hits)) % 2) == 1 else "out"


def region_location(p, outer: np.ndarray, holes: list[np.ndarray], tol: float) -> str:
    loc = point_loop_location(p, outer, tol)
    if loc != "in":
        return loc
    for h in holes:
        hl = point_loop_location(p, h, tol)
        if hl == "on":
            return "on"
        if hl == "in":
            return "out"
    return "in"


def segments_properly_cross(a0, a1, b0, b1, tol: float) -> bool:
    """True if open segments cross transversally (not mere endpoint touches)."""
    d1 = a1 - a0
    d2 = b1 - b0
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) < 1e-14 * (np.linalg.norm(d1) * np.linalg.norm(d2) + 1e-300):
        return False
    w = b0 - a0
    t = (w[0] * d2[1] - w[1] * d2[0]) / denom
    s = (w[0] * d1[1] - w[1] * d1[0]) / denom
    lt = tol / (np.linalg.norm(d1) + 1e-300)
    ls = tol / (np.linalg.norm(d2) + 1e-300)
    return (lt < t < 1.0 - lt) and (ls < s < 1.0 - ls)


def loop_is_simple(loop: np.ndarray, tol: float) -> bool:
    """No transversal self-crossings and no degenerate (repeated) vertices."""
    n = len(loop)
    if n < 3:
        return False
    nxt = np.roll(loop, -1, axis=0)
    seg = nxt - loop
    if np.any(np.einsum("ij,ij->i", seg, seg) <= tol * tol):
        return False
    # all segment pairs at once
    i_idx, j_idx = np.triu_indices(n, k=1)
    adjacent = ((j_idx - i_idx) == 1) | ((i_idx == 0) & (j_idx == n - 1))
    i_idx, j_idx = i_idx[~adjacent], j_idx[~adjacent]
    if len(i_idx) == 0:
        return True
    a0, d1 = loop[i_idx], seg[i_idx]
    b0, d2 = loop[j_idx], seg[j_idx]
    denom = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    w = b0 - a0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[:, 0] * d2[:, 1] - w[:, 1] * d2[:, 0]) / denom
        s2 = (w[:, 0] * d1[:, 1] - w[:, 1] * d1[:, 0]) / denom
    l1 = np.sqrt(np.einsum("ij,ij->i", d1, d1))
    l2 = np.sqrt(np.einsum("ij,ij->i", d2, d2))
    ok_denom = np.abs(denom) > 1e-14 * (l1 * l2 + 1e-300)
    lt = tol / (l1 + 1e-300)
    ls = tol / (l2 + 1e-300)
    crossing = ok_denom & (t > lt) & (t < 1 - lt) & (s2 > ls) & (s2 < 1 - ls)
    if np.any(crossing):
        return False
    # vertex of one segment lying inside another non-adjacent segment
    for i, j in zip(i_idx, j_idx):
        if point_segment_distance(loop[j], loop[i], nxt[i]) <= tol * 0.5:
            if np.linalg.norm(loop[j] - loop[i]) > tol and \
               np.linalg.norm(loop[j] - nxt[i]) > tol:
                return False
    return True


def _segment_visible(p, q, loops: list[np.ndarray], tol: float) -> bool:
    for loop in loops:
        nxt = np.roll(loop, -1, axis=0)
        for a, b in zip(loop, nxt):
            if segments_properly_cross(p, q, a, b, tol):
                return False
    return True


def _bridge_hole(outer_idx: list[int], hole_idx: list[int], pts: np.ndarray,
                 all_loops: list[np.ndarray], tol: float) -> list[int]:
    """Splice a hole into the outer index loop via a mutually visible vertex pair."""
    hx = [pts[i][0] for i in hole_idx]
    im = hole_idx[int(np.argmax(hx))]
    m = pts[im]
    order = sorted(outer_idx, key=lambda i: (float(np.linalg.norm(pts[i] - m)), i))
    for iv in order:
        if _segment_visible(m, pts[iv], all_loops, tol * 0.5):
            km = hole_idx.index(im)
            kv = outer_idx.index(iv)
            rotated_hole = hole_idx[km:] + hole_idx[:km]
            return outer_idx[:kv + 1] + rotated_hole + [im, iv] + outer_idx[kv + 1:]
    raise GeometryError("no visible bridge vertex found for hole")


def triangulate_region(outer: np.ndarray, holes: list[np.ndarray],
                       tol: float) -> list[tuple[int, int, int]]:
    """Ear-clipping triangulation; returns index triples into [outer]+holes stacked.

    Outer must be CCW and holes CW (the caller's loops already follow this).
    """
    pts_list = [np.asarray(outer, dtype=float)]
    idx_loops = [list(range(len(outer)))]
    off = len(outer)
    for h in holes:
        pts_list.append(np.asarray(h, dtype=float))
        idx_loops.append(list(range(off, off + len(h))))
        off += len(h)
    pts = np.vstack(pts_list)
    all_loops = [np.asarray(outer, dtype=float)] + [np.asarray(h, dtype=float) for h in holes]

    poly = idx_loops[0]
    hole_order = sorted(range(len(holes)),
                        key=lambda k: -max(p[0] for p in all_loops[k + 1]))
    for k in hole_order:
        poly = _bridge_hole(poly, idx_loops[k + 1], pts, all_loops, tol)

    tris: list[tuple[int, int, int]] = []
    verts = list(poly)

    def tri_area(i, j, k):
        a, b, c = pts[i], pts[j], pts[k]
        return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))

    def is_ear(pos):
        n = len(verts)
        i, j, k = verts[pos - 1], verts[pos], verts[(pos + 1) % n]
        if tri_area(i, j, k) <= tol * tol:
            return False
        a, b, c = pts[i], pts[j], pts[k]
        for w in verts:
            if w in (i, j, k):
                continue
            p = pts[w]
            # bridge duplicates share corner coordinates and never block
            if (np.linalg.norm(p - a) <= tol or np.linalg.norm(p - b) <= tol
                    or np.linalg.norm(p - c) <= tol):
                continue
            d1 = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            d2 = (c[0] - b[0]) * (p[1] - b[1]) - (c[1] - b[1]) * (p[0] - b[0])
            d3 = (a[0] - c[0]) * (p[1] - c[1]) - (a[1] - c[1]) * (p[0] - c[0])
            if d1 > 0 and d2 > 0 and d3 > 0:
                return False
            # a vertex on the ear boundary (e.g. exactly on the diagonal)
            # makes the ear unsafe as well
            if min(point_segment_distance(p, a, b),
                   point_segment_distance(p, b, c),
                   point_segment_distance(p, c, a)) <= tol:
                return False
        return True

    guard = 0
    while len(verts) > 3:
        guard += 1
        if guard > 4 * (len(pts) ** 2) + 64:
            raise GeometryError("ear clipping failed to terminate")
        n = len(verts)
        clipped = False
        # degenerate ears (collinear or duplicate) are removed without emitting
        for pos in range(n):
            i, j, k = verts[pos - 1], verts[pos], verts[(pos + 1) % n]
            if np.linalg.norm(pts[i] - pts[k]) <= tol or abs(tri_area(i, j, k)) <= tol * tol * 0.25:
                if tri_area(i, j, k) > 0:
                    tris.append((i, j, k))
                del verts[pos]
                clipped = True
                break
        if clipped:
            continue
        for pos in range(n):
            if is_ear(pos):
                i, j, k = verts[pos - 1], verts[pos], verts[(pos + 1) % n]
                tris.append((i, j, k))
                del verts[pos]
                clipped = True
                break
        if not clipped:
            # numerical fallback: clip the largest-area candidate
            pos = max(range(n), key=lambda q: tri_area(verts[q - 1], verts[q],
                                                       verts[(q + 1) % n]))
            i, j, k = verts[pos - 1], verts[pos], verts[(pos + 1) % n]
            if tri_area(i, j, k) > 0:
                tris.append((i, j, k))
            del verts[pos]
    if len(verts) == 3 and tri_area(*verts) > tol * tol * 0.25:
        tris.append(tuple(verts))
    return tris


def region_interior_point(outer: np.ndarray, holes: list[np.ndarray],
                          tol: float) -> np.ndarray:
    """A point strictly inside the region (centroid of the largest triangle)."""
    tris = triangulate_region(outer, holes, tol)
    pts = np.vstack([outer] + list(holes)) if holes else np.asarray(outer, dtype=float)
    best, best_area = None, -1.0
    for (i, j, k) in tris:
        a, b, c = pts[i], pts[j], pts[k]
        ar = 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        if ar > best_area:
            best_area, best = ar, (a + b + c) / 3.0
    if best is None:
        raise GeometryError("region has no interior")
    return best


def regions_overlap(outer1, holes1, outer2, holes2, tol: float) -> bool:
    """True if the two region interiors share area (shared boundary does not count)."""
    loops1 = [outer1] + list(holes1)
    loops2 = [outer2] + list(holes2)
    for l1 in loops1:
        n1 = np.roll(l1, -1, axis=0)
        for l2 in loops2:
            n2 = np.roll(l2, -1, axis=0)
            for a, b in zip(l1, n1):
                for c, d in zip(l2, n2):
                    if segments_properly_cross(a, b, c, d, tol):
                        return True
    # thin overlaps whose boundaries only touch at endpoints: probe each
    # region's boundary vertices and edge midpoints against the other
    for (la, ob, hb) in ((loops1, outer2, list(holes2)),
                         (loops2, outer1, list(holes1))):
        for loop in la:
            nxt = np.roll(loop, -1, axis=0)
            for a, b in zip(loop, nxt):
                for probe in (a, 0.5 * (a + b)):
                    if region_location(probe, ob, hb, tol) == "in":
                        return True
    try:
        p1 = region_interior_point(outer1, holes1, tol)
        if region_location(p1, outer2, list(holes2), tol) == "in":
            return True
    except GeometryError:
        pass
    try:
        p2 = region_interior_point(outer2, holes2, tol)
        if region_location(p2, outer1, list(holes1), tol) == "in":
            return True
    except GeometryError:
        pass
    return False


def line_region_intervals(p, d, outer, holes, tol: float) -> list[tuple[float, float]]:
    """Parameter intervals of line p + t*d lying strictly inside a region."""
    params: list[float] = []
    for loop in [outer] + list(holes):
        a = loop
        e = np.concatenate([loop[1:], loop[:1]], axis=0) - loop
        denom = d[0] * e[:, 1] - d[1] * e[:, 0]
        w = a - p
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / denom
            s = (w[:, 0] * d[1] - w[:, 1] * d[0]) / denom
        hit = (np.abs(denom) >= 1e-14) & (s >= -1e-12) & (s <= 1.0 + 1e-12)
        params.extend(float(x) for x in t[hit])
    if not params:
        return []
    params.sort()
    out: list[tuple[float, float]] = []
    for t0, t1 in zip(params[:-1], params[1:]):
        if t1 - t0 <= tol:
            continue
        mid = p + 0.5 * (t0 + t1) * d
        if region_location(mid, outer, list(holes), tol) == "in":
            out.append((t0, t1))
    return out


def clip_loop_halfplane(loop: np.ndarray, n2: np.ndarray, c: float,
                        tol: float) -> list[np.ndarray]:
    """Clip a simple loop to the halfplane n2 . x >= c (Sutherland-Hodgman).

    Output loops with bridge-induced repeated vertices are split apart so each
    returned loop is simple.
    """
    vals = loop @ n2 - c
    if np.all(vals >= -tol):
        return [loop]
    if np.all(vals <= tol):
        return []
    out: list[np.ndarray] = []
    n = len(loop)
    for i in range(n):
        a, b = loop[i], loop[(i + 1) % n]
        va, vb = vals[i], vals[(i + 1) % n]
        if va >= -tol:
            out.append(a)
        if (va > tol and vb < -tol) or (va < -tol and vb > tol):
            t = va / (va - vb)
            out.append(a + t * (b - a))
    if len(out) < 3:
        return []
    pts = np.array(out)
    # drop consecutive duplicates
    keep = [0]
    for i in range(1, len(pts)):
        if np.linalg.norm(pts[i] - pts[keep[-1]]) > tol:
            keep.append(i)
    if len(keep) > 1 and np.linalg.norm(pts[keep[-1]] - pts[keep[0]]) <= tol:
        keep.pop()
    pts = pts[keep]
    if len(pts) < 3:
        return []
    # split at repeated positions (disconnected clip components share a bridge)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if np.linalg.norm(pts[i] - pts[j]) <= tol:
                l1 = np.vstack([pts[:i], pts[j:]])
                l2 = pts[i:j]
                res = []
                if len(l1) >= 3 and abs(signed_area(l1)) > tol * tol:
                    res.append(l1)
                if len(l2) >= 3 and abs(signed_area(l2)) > tol * tol:
                    res.append(l2)
                return res
    return [pts]


class Arrangement:
    """Planar line arrangement restricted to a polygonal region.

    Lines are (point, unit direction) pairs. Cells of the arrangement that lie
    inside the region are returned as convex CCW loops over a shared, exactly
    consistent vertex table -- two calls over the same line table produce
    bitwise identical vertex coordinates, which is what the Boolean merge
    stage relies on.
    """

    def __init__(self, lines: list[tuple[np.ndarray, np.ndarray]], tol: float):
        self.tol = tol
        self.lines = self._cluster_lines(lines)
        self._build_points()

    def _cluster_lines(self, lines):
        reps: list[tuple[np.ndarray, np.ndarray]] = []
        for p, d in lines:
            d = d / np.linalg.norm(d)
            found = False
            for (q, e) in reps:
                if abs(d[0] * e[1] - d[1] * e[0]) < 1e-9:
                    if abs((p - q)[0] * e[1] - (p - q)[1] * e[0]) <= self.tol:
                        found = True
                        break
            if not found:
                reps.append((p, d))
        return reps

    def _build_points(self):
        lines = self.lines
        n = len(lines)
        raw_pts: list[np.ndarray] = []
        on_line: list[list[tuple[float, int]]] = [[] for _ in range(n)]
        for i in range(n):
            pi, di = lines[i]
            for j in range(i + 1, n):
                pj, dj = lines[j]
                denom = di[0] * dj[1] - di[1] * dj[0]
                if abs(denom) < 1e-12:
                    continue
                w = pj - pi
                t = (w[0] * dj[1] - w[1] * dj[0]) / denom
                s = (w[0] * di[1] - w[1] * di[0]) / denom
                pt = pi + t * di
                idx = len(raw_pts)
                raw_pts.append(pt)
                on_line[i].append((t, idx))
                on_line[j].append((s, idx))
        if raw_pts:
            arr = np.array(raw_pts)
        else:
            arr = np.zeros((0, 2))
        # deterministic position clustering
        order = sorted(range(len(raw_pts)),
                       key=lambda k: (round(arr[k, 0], 12), round(arr[k, 1], 12)))
        canon: dict[int, int] = {}
        reps: list[int] = []
        for k in order:
            assigned = False
            for r in reps:
                if np.linalg.norm(arr[k] - arr[r]) <= self.tol:
                    canon[k] = r
                    assigned = True
                    break
            if not assigned:
                canon[k] = k
                reps.append(k)
        self.points = arr
        self.canon = canon
        self.on_line = on_line

    def cells(self, outer: np.ndarray, holes: list[np.ndarray]):
        """Convex cells inside the region: list of (vertex-id list, Nx2 coords)."""
        tol = self.tol
        segs: dict[tuple[int, int], None] = {}
        for li, entries in enumerate(self.on_line):
            if not entries:
                continue
            entries = sorted(entries)
            ids = []
            for t, idx in entries:
                c = self.canon[idx]
                if not ids or ids[-1][1] != c:
                    ids.append((t, c))
            for (t0, a), (t1, b) in zip(ids[:-1], ids[1:]):
                if a == b:
                    continue
                mid = 0.5 * (self.points[a] + self.points[b])
                if region_location(mid, outer, holes, tol) != "out":
                    key = (a, b) if a < b else (b, a)
                    segs[key] = None

        # prune dangling spurs (tangential contacts bound no area and would
        # corrupt the face walk)
        while True:
            degree: dict[int, int] = {}
            for (a, b) in segs:
                degree[a] = degree.get(a, 0) + 1
                degree[b] = degree.get(b, 0) + 1
            spurs = [k for k in segs if degree[k[0]] < 2 or degree[k[1]] < 2]
            if not spurs:
                break
            for k in spurs:
                del segs[k]

        outgoing: dict[int, list[int]] = {}
        for (a, b) in segs:
            outgoing.setdefault(a, []).append(b)
            outgoing.setdefault(b, []).append(a)

        def angle(a, b):
            d = self.points[b] - self.points[a]
            return float(np.arctan2(d[1], d[0]))

        for v in outgoing:
            outgoing[v] = sorted(set(outgoing[v]), key=lambda w: angle(v, w))

        visited: set[tuple[int, int]] = set()
        cells = []
        for (a0, b0) in sorted(segs):
            for start in ((a0, b0), (b0, a0)):
                if start in visited:
                    continue
                cycle = [start[0]]
                cur = start
                ok = True
                for _ in range(len(segs) * 2 + 4):
                    a, b = cur
                    cands = outgoing[b]
                    ang_in = angle(b, a)
                    best, best_diff = None, None
                    for c in cands:
                        diff = (ang_in - angle(b, c)) % (2.0 * np.pi)
                        if diff < 1e-12:
                            diff = 2.0 * np.pi
                        if best_diff is None or diff < best_diff:
                            best, best_diff = c, diff
                    visited.add(cur)
                    cur = (b, best)
                    if cur == start:
                        break
                    cycle.append(b)
                else:
                    ok = False
                if not ok or len(cycle) < 3:
                    continue
                coords = self.points[np.array(cycle)]
                if signed_area(coords) <= tol * tol:
                    continue
                centroid = coords.mean(axis=0)
                if region_location(centroid, outer, holes, tol) == "in":
                    cells.append((cycle, coords))
        return cells
