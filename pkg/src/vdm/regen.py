"""Boundary regeneration: recompute vertices from (possibly moved) face planes
while keeping topology fixed."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .brep import Solid, ValidityReport, Violation, validate_solid
from .geometry import Plane, best_fit_point, intersect_3_planes
from .tolerances import ToleranceContext


@dataclass
class RegenResult:
    """Outcome of fixed-topology boundary re-evaluation."""
    solid: Solid | None
    report: ValidityReport

    @property
    def is_valid(self) -> bool:
        return self.solid is not None


def regenerate_with_planes(solid: Solid, new_planes: dict[int, Plane],
                           tol: ToleranceContext | None = None,
                           quick: bool = False) -> RegenResult:
    """Re-derive every vertex from its incident face planes.

    new_planes maps face id -> replacement *stored* plane (same sense
    convention as the face). Faces not in the map keep their planes. A vertex
    with more than three incident planes must stay consistent within
    linear_eps; inconsistency or unformable intersections are reported as
    open-face evidence, matching the lost-connection failure mode.
    """
    tol = tol or solid.default_tol()
    out = solid.copy()
    for fid, pl in new_planes.items():
        out.faces[fid].plane = pl

    vf = out.vertex_faces()
    violations: list[Violation] = []
    for vid in sorted(vf):
        fids = sorted(vf[vid])
        planes = [out.faces[f].plane for f in fids]
        if len(planes) < 3:
            violations.append(Violation("open-face", [vid] + fids, faces=fids))
            if quick:
                return RegenResult(None, ValidityReport(False, violations))
            continue
        if len(planes) == 3:
            p = intersect_3_planes(*planes)
            if p is None:
                violations.append(Violation("open-face", [vid] + fids, faces=fids))
                if quick:
                    return RegenResult(None, ValidityReport(False, violations))
                continue
        else:
            p, resid = best_fit_point(planes)
            if resid > tol.linear_eps:
                violations.append(Violation("open-face", [vid] + fids, faces=fids))
                if quick:
                    return RegenResult(None, ValidityReport(False, violations))
                # an over-determined corner whose planes no longer agree: the
                # connection cannot be formed. Still position it from the
                # best triple (edited planes first) so the rest of the
                # violation picture stays meaningful for event probing.
                p = _best_triple_point(planes, fids, set(new_planes))
                if p is None:
                    continue
        out.vertices[vid].position = p

    report = validate_solid(out, tol, quick=quick)
    if violations or not report.is_valid:
        merged = violations + report.violations
        return RegenResult(None, ValidityReport(False, merged))
    return RegenResult(out, report)


def _best_triple_point(planes, fids, moved: set[int]):
    import numpy as np
    from itertools import combinations
    best, best_key = None, None
    for combo in combinations(range(len(planes)), 3):
        m = np.array([planes[i].normal for i in combo])
        det = abs(float(np.linalg.det(m)))
        if det < 1e-9:
            continue
        n_moved = sum(1 for i in combo if fids[i] in moved)
        key = (n_moved, det)
        if best_key is None or key > best_key:
            p = intersect_3_planes(*[planes[i] for i in combo])
            if p is not None:
                best, best_key = p, key
    return best
