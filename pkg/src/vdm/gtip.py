"""Next-event detection for push-pull edits.

Every geometric degeneracy a planar model can hit during a translational or
rotational push-pull reduces to one of two analytic conditions on the motion
parameter:

  * four planes become concurrent (vertex hits a plane, an edge crosses
    another edge, a loop edge collapses), i.e. det of the 4x4 homogeneous
    plane matrix vanishes, or
  * two planes become parallel / coincident.

For one moving row the determinant is affine in t (translation) or a
first-order trig polynomial (rotation), both solved in closed form; rigid
multi-face edits raise the degree and fall back to Chebyshev root finding.
Candidates are then filtered by an actual-occurrence check: regenerate just
past the candidate and require a validity transition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .brep import Solid
from .direct_edit import PushPullEdit, regenerate_boundary
from .tolerances import ToleranceContext

EVENT_KINDS = ("surface-surface-intersection", "surface-face-collision",
               "surface-surface-tangency", "face-workspace-collision")
_KIND_RANK = {k: i for i, k in enumerate(EVENT_KINDS)}


@dataclass
class DegenerateEvent:
    kind: str
    t_event: float
    faces: list[int]
    vertices: list[int] = field(default_factory=list)
    edges: list[int] = field(default_factory=list)
    plausible: bool = True  # cheap contact-locus screen; see next_gtip

    def __post_init__(self):
        assert self.kind in EVENT_KINDS
        self.faces = sorted(set(self.faces))

    @property
    def entities(self) -> list[int]:
        return self.faces + self.vertices + self.edges

    def as_dict(self) -> dict:
        return {"kind": self.kind, "t": self.t_event, "faces": self.faces,
                "vertices": sorted(self.vertices), "edges": sorted(self.edges)}


@dataclass
class AffectedFaceSet:
    face_ids: set[int]

    def __contains__(self, fid) -> bool:
        return fid in self.face_ids


# --------------------------------------------------------------------------
# candidate enumeration


def _plane_row(solid: Solid, fid: int) -> np.ndarray:
    pl = solid.faces[fid].plane
    return np.array([pl.normal[0], pl.normal[1], pl.normal[2], pl.offset])


def _moved_row(solid: Solid, edit: PushPullEdit, fid: int, dt: float) -> np.ndarray:
    pl = edit.move_plane(solid.faces[fid].plane, dt)
    return np.array([pl.normal[0], pl.normal[1], pl.normal[2], pl.offset])


def _vertex_triple(solid: Solid, vid: int, vf: dict[int, set[int]],
                   moved: set[int]) -> tuple[int, ...] | None:
    """Three incident faces defining the vertex, moved faces first."""
    fids = sorted(vf[vid], key=lambda f: (f not in moved, f))
    if len(fids) < 3:
        return None
    best = tuple(sorted(fids[:3]))
    m = np.array([solid.faces[f].plane.normal for f in best])
    if abs(np.linalg.det(m)) < 1e-9:
        from itertools import combinations
        for combo in combinations(sorted(vf[vid]), 3):
            m = np.array([solid.faces[f].plane.normal for f in combo])
            if abs(np.linalg.det(m)) >= 1e-9:
                return tuple(sorted(combo))
        return None
    return best


def _quad_specs(solid: Solid, edit: PushPullEdit):
    """Deduplicated 4-plane quadruples worth checking, with diagnostics."""
    moved = set(edit.face_ids) & set(solid.faces)
    vf = solid.vertex_faces()
    adj = solid.face_adjacency()
    all_faces = sorted(solid.faces)

    specs: dict[tuple[int, ...], dict] = {}

    def add(fids, kind, vertices=(), edges=()):
        fids = tuple(sorted(set(fids)))
        if len(fids) != 4:
            return
        cur = specs.get(fids)
        if cur is None:
            specs[fids] = {"kind": kind, "vertices": set(vertices),
                           "edges": set(edges)}
        else:
            if _KIND_RANK[kind] < _KIND_RANK[cur["kind"]]:
                cur["kind"] = kind
            cur["vertices"].update(vertices)
            cur["edges"].update(edges)

    moving_verts = sorted(v for v in vf if vf[v] & moved)
    static_verts = sorted(v for v in vf if not (vf[v] & moved))

    # moving vertex sweeps across any other plane
    for vid in moving_verts:
        triple = _vertex_triple(solid, vid, vf, moved)
        if triple is None:
            continue
        near = set().union(*(adj[f] for f in triple)) | set(triple)
        for h in all_faces:
            if h in triple:
                continue
            kind = ("face-workspace-collision" if h in near
                    else "surface-face-collision")
            add(triple + (h,), kind, vertices=[vid])

    # moved plane passes a stationary vertex
    for fid in sorted(moved):
        for vid in static_verts:
            triple = _vertex_triple(solid, vid, vf, moved)
            if triple is None or fid in triple:
                continue
            add(triple + (fid,), "surface-face-collision", vertices=[vid])

    # moving edge crosses another edge
    moving_edges = sorted(e for e in solid.edges
                          if {solid.edges[e].left_face, solid.edges[e].right_face} & moved)
    for eid in moving_edges:
        e = solid.edges[eid]
        pair = {e.left_face, e.right_face}
        if None in pair:
            continue
        for oid in sorted(solid.edges):
            if oid == eid:
                continue
            o = solid.edges[oid]
            other = {o.left_face, o.right_face}
            if None in other or (pair & other):
                continue
            add(tuple(pair) + tuple(other), "surface-face-collision",
                edges=[eid, oid])
    return specs, moved


def _closed_form_translate(d0: float, dD: float, D: float) -> list[float]:
    den = d0 - dD
    scale = max(abs(d0), abs(dD), 1e-30)
    if abs(den) <= 1e-13 * scale:
        return []
    dt = d0 * D / den
    return [dt]


def _closed_form_rotate(c0: float, c90: float, c180: float,
                        lo: float, hi: float) -> list[float]:
    """Roots of a*cos(phi) + b*sin(phi) + c in [lo, hi] (phi radians)."""
    c = 0.5 * (c0 + c180)
    a = c0 - c
    b = c90 - c
    r = math.hypot(a, b)
    scale = max(abs(a), abs(b), abs(c), 1e-30)
    if r <= 1e-13 * scale:
        return []
    x = -c / r
    if abs(x) > 1.0 + 1e-9:
        return []
    x = min(1.0, max(-1.0, x))
    psi = math.atan2(b, a)
    roots = []
    base = math.acos(x)
    for s in (base, -base):
        phi0 = psi + s
        for k in (-2, -1, 0, 1, 2):
            phi = phi0 + 2.0 * math.pi * k
            if lo - 1e-12 <= phi <= hi + 1e-12:
                roots.append(min(max(phi, lo), hi))
    return roots


def _cheb_roots(fn, lo: float, hi: float, deg: int = 24) -> list[float]:
    if hi - lo < 1e-14:
        return []
    xs = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
    ts = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xs
    ys = np.array([fn(t) for t in ts])
    scale = float(np.max(np.abs(ys)))
    if scale < 1e-30:
        return []
    coef = _cheb.chebfit(xs, ys / scale, deg)
    roots = _cheb.chebroots(coef)
    out = []
    for r in roots:
        if abs(r.imag) > 1e-7 or abs(r.real) > 1.0 + 1e-9:
            continue
        t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * float(np.clip(r.real, -1, 1))
        # newton polish on the true function
        for _ in range(3):
            h = max(1e-9, 1e-7 * (hi - lo))
            f0 = fn(t)
            df = (fn(t + h) - fn(t - h)) / (2 * h)
            if abs(df) < 1e-300:
                break
            t2 = t - f0 / df
            if not (lo - 1e-9 <= t2 <= hi + 1e-9):
                break
            t = t2
        out.append(min(max(t, lo), hi))
    return out


def _quad_roots(solid: Solid, edit: PushPullEdit, quads: list[tuple],
                moved: set[int], t0: float, tol: ToleranceContext) -> dict:
    """Map quad -> list of global t roots in (t0, 1]."""
    D = 1.0 - t0
    if D <= tol.parameter_eps:
        return {}
    base_rows = {f: _plane_row(solid, f) for f in
                 sorted({f for q in quads for f in q})}

    def det_at(quad, dt):
        m = np.array([_moved_row(solid, edit, f, dt) if f in moved else base_rows[f]
                      for f in quad])
        return float(np.linalg.det(m))

    out: dict = {}
    if edit.kind == "translate":
        k1 = [q for q in quads if sum(f in moved for f in q) == 1]
        kn = [q for q in quads if sum(f in moved for f in q) > 1]
        if k1:
            m0 = np.array([[base_rows[f] if f not in moved else
                            _moved_row(solid, edit, f, 0.0) for f in q] for q in k1])
            mD = np.array([[base_rows[f] if f not in moved else
                            _moved_row(solid, edit, f, D) for f in q] for q in k1])
            d0s = np.linalg.det(m0)
            dDs = np.linalg.det(mD)
            for q, d0, dD in zip(k1, d0s, dDs):
                out[q] = _closed_form_translate(float(d0), float(dD), D)
        for q in kn:
            k = sum(f in moved for f in q)
            out[q] = _cheb_roots(lambda dt, q=q: det_at(q, dt), 0.0, D,
                                 deg=max(4, k + 1))
    else:
        phi_total = edit.angle * D
        lo, hi = (phi_total, 0.0) if phi_total < 0 else (0.0, phi_total)
        k1 = [q for q in quads if sum(f in moved for f in q) == 1]
        kn = [q for q in quads if sum(f in moved for f in q) > 1]
        if k1:
            samples = {}
            for phi in (0.0, 0.5 * math.pi, math.pi):
                samples[phi] = np.array(
                    [[_moved_row(solid, edit, f, phi / edit.angle) if f in moved
                      else base_rows[f] for f in q] for q in k1])
            dets = {phi: np.linalg.det(mm) for phi, mm in samples.items()}
            for i, q in enumerate(k1):
                phis = _closed_form_rotate(float(dets[0.0][i]),
                                           float(dets[0.5 * math.pi][i]),
                                           float(dets[math.pi][i]), lo, hi)
                out[q] = [phi / edit.angle for phi in phis]
        for q in kn:
            roots = _cheb_roots(lambda phi, q=q: det_at(q, phi / edit.angle),
                                lo, hi, deg=24)
            out[q] = [phi / edit.angle for phi in roots]
    return {q: [t0 + dt for dt in dts] for q, dts in out.items()}


def _parallel_events(solid: Solid, edit: PushPullEdit, moved: set[int],
                     t0: float, tol: ToleranceContext) -> list[tuple[float, int, int]]:
    """(t, moved face, other face) where planes become parallel/coincident."""
    out = []
    D = 1.0 - t0
    for fid in sorted(moved):
        pf = solid.faces[fid].plane
        for gid in sorted(solid.faces):
            if gid == fid or gid in moved:
                continue
            pg = solid.faces[gid].plane
            if edit.kind == "translate":
                cr = float(np.linalg.norm(np.cross(pf.normal, pg.normal)))
                if cr > tol.angular_eps:
                    continue
                s = 1.0 if float(pf.normal @ pg.normal) > 0 else -1.0
                rate = edit.distance * float(pf.normal @ edit.direction)
                if abs(rate) < 1e-15:
                    continue
                dt = (s * pg.offset - pf.offset) / rate
                if 0.0 < dt <= D + 1e-12:
                    out.append((t0 + dt, fid, gid))
            else:
                def dot_at(phi):
                    return float(edit.move_plane(pf, phi / edit.angle).normal
                                 @ pg.normal)
                phi_total = edit.angle * D
                lo, hi = (phi_total, 0.0) if phi_total < 0 else (0.0, phi_total)
                c0, c90, c180 = dot_at(0.0), dot_at(0.5 * math.pi), dot_at(math.pi)
                for target in (1.0, -1.0):
                    phis = _closed_form_rotate(c0 - target, c90 - target,
                                               c180 - target, lo, hi)
                    for phi in phis:
                        dt = phi / edit.angle
                        if dt > 1e-12:
                            out.append((t0 + dt, fid, gid))
    return out


def _face_bboxes(solid: Solid) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    out = {}
    for fid in solid.faces:
        pts = solid.loop_points(fid, 0)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        for li in range(1, len(solid.faces[fid].loops)):
            p = solid.loop_points(fid, li)
            lo = np.minimum(lo, p.min(axis=0))
            hi = np.maximum(hi, p.max(axis=0))
        out[fid] = (lo, hi)
    return out


def _sweep_reach(solid: Solid, edit: PushPullEdit) -> float:
    """Upper bound on how far any moved point can travel over the motion."""
    if edit.kind == "translate":
        return abs(edit.distance)
    rmax = 0.0
    for fid in edit.face_ids:
        if fid not in solid.faces:
            continue
        for li in range(len(solid.faces[fid].loops)):
            pts = solid.loop_points(fid, li)
            rel = pts - edit.axis_point
            axial = np.outer(rel @ edit.axis_dir, edit.axis_dir)
            rmax = max(rmax, float(np.linalg.norm(rel - axial, axis=1).max()))
    return abs(edit.angle) * rmax


def _contact_plausible(solid: Solid, edit: PushPullEdit, quad: tuple,
                       t: float, t0: float, moved: set[int], mobile: set[int],
                       bboxes: dict, reach: float, eps: float) -> bool:
    """Necessary condition for a real contact: the four planes' common point
    at the root pose lies within every *static* member's box. Faces adjacent
    to the moved ones regenerate with sliding corners, which no rigid sweep
    bound can cap, so they are exempt from the test."""
    rows = []
    for f in quad:
        pl = solid.faces[f].plane
        if f in moved:
            pl = edit.move_plane(pl, t - t0)
        rows.append((pl.normal, pl.offset))
    m = np.array([r[0] for r in rows])
    rhs = np.array([r[1] for r in rows])
    pt, *_ = np.linalg.lstsq(m, rhs, rcond=None)
    if float(np.max(np.abs(m @ pt - rhs))) > 1e-6 + 100 * eps:
        return True  # not actually concurrent; leave to the probe
    margin = 10 * eps + 1e-9
    for f in quad:
        if f in mobile:
            continue
        lo, hi = bboxes[f]
        if np.any(pt < lo - margin) or np.any(pt > hi + margin):
            return False
    return True


def enumerate_candidate_events(solid: Solid, edit: PushPullEdit, t0: float,
                               tol: ToleranceContext | None = None
                               ) -> list[DegenerateEvent]:
    """Exhaustive candidate degeneracies in (t0, 1], merged within
    parameter_eps and sorted by time. Surface-surface tangency is structurally
    unreachable with planar geometry and never emitted."""
    tol = tol or solid.default_tol()
    if edit.is_identity():
        return []
    specs, moved = _quad_specs(solid, edit)
    if not moved:
        return []
    roots = _quad_roots(solid, edit, sorted(specs), moved, t0, tol)
    bboxes = _face_bboxes(solid)
    reach = _sweep_reach(solid, edit)
    vf = solid.vertex_faces()
    mobile = set(moved)
    for vid, fl in vf.items():
        if fl & moved:
            mobile |= fl

    raw: list[DegenerateEvent] = []
    for quad in sorted(specs):
        info = specs[quad]
        for t in roots.get(quad, []):
            if t0 + tol.parameter_eps < t <= 1.0 + 1e-12:
                ok = _contact_plausible(solid, edit, quad, min(t, 1.0), t0,
                                        moved, mobile, bboxes, reach,
                                        tol.linear_eps)
                raw.append(DegenerateEvent(info["kind"], min(t, 1.0), list(quad),
                                           sorted(info["vertices"]),
                                           sorted(info["edges"]), plausible=ok))
    for (t, fid, gid) in _parallel_events(solid, edit, moved, t0, tol):
        if t0 + tol.parameter_eps < t <= 1.0 + 1e-12:
            loa, hia = bboxes[fid]
            lob, hib = bboxes[gid]
            pad = reach + 10 * tol.linear_eps + 1e-9
            ok = bool(np.all(loa - pad <= hib) and np.all(lob <= hia + pad))
            raw.append(DegenerateEvent("surface-surface-intersection", min(t, 1.0),
                                       [fid, gid], plausible=ok))

    raw.sort(key=lambda e: (e.t_event, _KIND_RANK[e.kind], e.faces))
    merged: list[DegenerateEvent] = []
    for ev in raw:
        if merged and abs(ev.t_event - merged[-1].t_event) <= tol.parameter_eps:
            last = merged[-1]
            if _KIND_RANK[ev.kind] < _KIND_RANK[last.kind]:
                last.kind = ev.kind
            last.faces = sorted(set(last.faces) | set(ev.faces))
            last.vertices = sorted(set(last.vertices) | set(ev.vertices))
            last.edges = sorted(set(last.edges) | set(ev.edges))
            last.plausible = last.plausible or ev.plausible
        else:
            merged.append(DegenerateEvent(ev.kind, ev.t_event, list(ev.faces),
                                          list(ev.vertices), list(ev.edges),
                                          plausible=ev.plausible))
    return merged


# --------------------------------------------------------------------------
# occurrence filtering


def _probe_delta(t0: float, t_ev: float, t_next: float | None,
                 tol: ToleranceContext) -> float:
    d = 1e-5
    d = min(d, (t_ev - t0) / 4.0) if t_ev > t0 else d
    if t_next is not None:
        d = min(d, (t_next - t_ev) / 4.0)
    return max(d, 3.0 * tol.parameter_eps)


def violation_signature(solid: Solid, edit: PushPullEdit, dt: float,
                        tol: ToleranceContext) -> frozenset:
    """Canonical description of what is geometrically wrong at a pose:
    the set of (violation kind, involved faces). Empty = valid."""
    regen = regenerate_boundary(solid, edit, dt, tol)
    if regen.is_valid:
        return frozenset()
    return frozenset((v.kind, frozenset(v.faces))
                     for v in regen.report.violations)


def next_gtip(solid: Solid, edit: PushPullEdit, t0: float,
              tol: ToleranceContext | None = None) -> DegenerateEvent | None:
    """Closest candidate that actually occurs.

    A candidate is confirmed when the violation signature of fixed-topology
    regeneration changes across it: a validity flip, or (in post-contact
    stretches where regeneration stays invalid) a new face contact entering
    the picture. None means the rest of the edit is event-free.
    """
    tol = tol or solid.default_tol()
    cands = enumerate_candidate_events(solid, edit, t0, tol)
    sig_cache: dict[float, frozenset] = {}

    def sig(t: float) -> frozenset:
        key = round(t, 15)
        if key not in sig_cache:
            sig_cache[key] = violation_signature(solid, edit, t - t0, tol)
        return sig_cache[key]

    for i, ev in enumerate(cands):
        if not ev.plausible:
            continue
        t_next = cands[i + 1].t_event if i + 1 < len(cands) else None
        delta = _probe_delta(t0, ev.t_event, t_next, tol)
        if sig(ev.t_event - delta) != sig(ev.t_event + delta):
            return ev
    return None


def find_affected_faces(solid: Solid, edit: PushPullEdit,
                        tol: ToleranceContext | None = None,
                        t0: float = 0.0, n_probes: int = 17) -> AffectedFaceSet:
    """Faces plausibly involved in events of this edit: the edited faces,
    every face carrying a violation at probe poses (t=1 plus intermediates
    plus just-past-candidate poses), and their edge neighbors."""
    tol = tol or solid.default_tol()
    adj = solid.face_adjacency()
    moved = set(edit.face_ids) & set(solid.faces)
    affected = set(moved)
    for f in moved:
        affected |= adj[f]

    probe_ts = {1.0}
    for k in range(1, n_probes):
        probe_ts.add(t0 + (1.0 - t0) * k / n_probes)
    for ev in enumerate_candidate_events(solid, edit, t0, tol)[:40]:
        probe_ts.add(min(1.0, ev.t_event + _probe_delta(t0, ev.t_event, None, tol)))

    for t in sorted(probe_ts):
        regen = regenerate_boundary(solid, edit, t - t0, tol)
        if regen.is_valid:
            continue
        bad = set()
        for v in regen.report.violations:
            bad |= set(v.faces)
        affected |= bad
        for f in bad:
            affected |= adj[f]
    return AffectedFaceSet(affected)
