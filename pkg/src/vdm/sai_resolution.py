"""Constraint-system update after shape changes, and resolution of
over-/under-constraint through prioritized remove/add options.

Prioritization is two-level: a configurable type-precedence table first
(constraints presumed to carry more design intent are surrendered last and
proposed first), then the quantitative sensitivity of each constraint --
the norm of the minimum-norm geometry response to a unit perturbation of
its residual.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .brep import Solid
from .errors import StaleOptionsError
from .gcs import (Constraint, Gcs, JacobianMatrix, Witness, assemble,
                  jacobian, measured_angle, measured_distance,
                  normals_parallel, parallel_check_tol,
                  rigid_motion_generators)
from .sai_detection import (ConstraintStateReport, OverconstraintCertificate,
                            WellConstrainedPart, evaluate_state,
                            find_maximal_wellconstrained,
                            find_minimal_overconstrained)
from .tolerances import ToleranceContext

#: Higher value = more design intent = removed later, proposed sooner.
DEFAULT_TYPE_PRECEDENCE = {
    "fixed": 6,
    "coincident": 5,
    "perpendicular": 4,
    "parallel": 3,
    "distance": 2,
    "angle": 1,
}


@dataclass
class GcsUpdatePlan:
    """Partition of the pre-edit constraints against the post-edit shape."""
    remeasured: dict[int, float]       # constraint id -> new parameter
    removed: list[int]
    kept: list[int]
    new_refs: dict[int, list[int]]     # surviving id -> refs in the new solid

    def as_dict(self) -> dict:
        return {"remeasured": {str(k): v for k, v in sorted(self.remeasured.items())},
                "removed": sorted(self.removed), "kept": sorted(self.kept)}

    def apply(self, gcs: Gcs, new_solid: Solid) -> Gcs:
        out = []
        for c in gcs.constraints:
            if c.id in self.removed:
                continue
            value = self.remeasured.get(c.id, c.value)
            out.append(Constraint(c.id, c.type, list(self.new_refs[c.id]), value))
        return Gcs(entities=sorted(new_solid.faces), constraints=out)


def update_gcs_after_edit(gcs: Gcs, old_solid: Solid, new_solid: Solid,
                          face_map: dict[int, int],
                          tol: ToleranceContext | None = None) -> GcsUpdatePlan:
    """Classify every pre-edit constraint against the post-edit witness:
    constraints on lost faces go, violated logical constraints go,
    dimensional constraints on surviving faces are re-measured, untouched
    ones are kept."""
    tol = tol or new_solid.default_tol()
    remeasured: dict[int, float] = {}
    removed: list[int] = []
    kept: list[int] = []
    new_refs: dict[int, list[int]] = {}

    for c in gcs.constraints:
        refs = [face_map.get(r) for r in c.refs]
        if any(r is None or r not in new_solid.faces for r in refs):
            removed.append(c.id)
            continue
        new_refs[c.id] = refs
        if c.type == "distance":
            d = measured_distance(new_solid, refs[0], refs[1], tol)
            if d is None:
                removed.append(c.id)
            elif abs(d - c.value) > tol.linear_eps:
                remeasured[c.id] = d
            else:
                kept.append(c.id)
        elif c.type == "angle":
            ang = measured_angle(new_solid, refs[0], refs[1])
            if abs(ang - c.value) > parallel_check_tol(tol):
                remeasured[c.id] = ang
            else:
                kept.append(c.id)
        elif c.type == "parallel":
            na = new_solid.faces[refs[0]].outward_normal()
            nb = new_solid.faces[refs[1]].outward_normal()
            (kept if normals_parallel(na, nb, tol) else removed).append(c.id)
        elif c.type == "perpendicular":
            na = new_solid.faces[refs[0]].outward_normal()
            nb = new_solid.faces[refs[1]].outward_normal()
            ok = abs(float(na @ nb)) <= parallel_check_tol(tol)
            (kept if ok else removed).append(c.id)
        elif c.type == "coincident":
            d = measured_distance(new_solid, refs[0], refs[1], tol)
            ok = d is not None and d <= max(tol.linear_eps, 1e-9)
            (kept if ok else removed).append(c.id)
        elif c.type == "fixed":
            fo = old_solid.faces[c.refs[0]]
            fn = new_solid.faces[refs[0]]
            same = (float(np.linalg.norm(fo.outward_normal() - fn.outward_normal()))
                    <= parallel_check_tol(tol)
                    and abs(fo.outward_offset() - fn.outward_offset()) <= tol.linear_eps)
            (kept if same else removed).append(c.id)
    removed = sorted(removed)
    return GcsUpdatePlan(remeasured=remeasured, removed=removed,
                         kept=sorted(kept), new_refs=new_refs)


# --------------------------------------------------------------------------
# options


@dataclass
class ResolutionOption:
    kind: str                      # remove | add
    constraint_id: int | None      # for remove
    candidate: Constraint | None   # for add
    rough_rank: int
    sensitivity: float
    explanation: str

    @property
    def option_id(self) -> str:
        if self.kind == "remove":
            return f"remove:{self.constraint_id}"
        c = self.candidate
        val = "" if c.value is None else f":{c.value:.12g}"
        return f"add:{c.type}:{'-'.join(map(str, c.refs))}{val}"

    def as_dict(self) -> dict:
        d = {"id": self.option_id, "kind": self.kind,
             "rough_rank": self.rough_rank, "sensitivity": self.sensitivity,
             "explanation": self.explanation}
        if self.kind == "remove":
            d["constraint_id"] = self.constraint_id
        else:
            c = self.candidate
            d["candidate"] = {"type": c.type, "refs": list(c.refs),
                              "value": (math.degrees(c.value) if c.type == "angle"
                                        else c.value)}
        return d


@dataclass
class PrioritizedOptions:
    options: list[ResolutionOption]
    gcs_revision: str
    explanations: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"revision": self.gcs_revision,
                "options": [o.as_dict() for o in self.options]}


def sensitivity(constraint_id: int, jm: JacobianMatrix,
                witness: Witness | None = None) -> float:
    """Norm of the minimum-norm geometry response to a unit perturbation of
    the constraint's residual rows, rigid components projected out."""
    rows = jm.rows_of(constraint_id)
    if rows.size == 0:
        return 0.0
    j = jm.matrix
    e = np.zeros((j.shape[0], rows.size))
    for k, r in enumerate(rows):
        e[r, k] = 1.0
    dq, *_ = np.linalg.lstsq(j, -e, rcond=None)
    # project out rigid motions that J leaves free
    q = jm.witness_q if witness is None else witness.q
    g = rigid_motion_generators(Witness(q, jm.entity_index))
    _, s, vt = np.linalg.svd(j @ g, full_matrices=True)
    smax = s[0] if s.size else 0.0
    null_coeff = vt[int(np.sum(s > smax * 1e-9)):].T  # g-coefficients with Jg ~ 0
    if null_coeff.size:
        b = g @ null_coeff
        bq, _ = np.linalg.qr(b)
        nb = int(np.linalg.matrix_rank(b, tol=1e-12))
        bq = bq[:, :nb]
        dq = dq - bq @ (bq.T @ dq)
    return float(np.linalg.norm(dq))


def _augmented_analysis(gcs: Gcs, solid: Solid, candidate: Constraint,
                        tol: ToleranceContext):
    trial = gcs.replaced(gcs.constraints + [candidate])
    w, system = assemble(trial, solid, tol)
    return trial, jacobian(w, system)


def generate_options(report: ConstraintStateReport,
                     certificates: list[OverconstraintCertificate],
                     parts: list[WellConstrainedPart],
                     gcs: Gcs, solid: Solid,
                     jm: JacobianMatrix,
                     tol: ToleranceContext | None = None,
                     precedence: dict[str, int] | None = None
                     ) -> list[ResolutionOption]:
    """Valid resolution options for the current constraint state.

    Over-constraint: removing any constraint of a minimal part's support.
    Under-constraint: adding a catalogue constraint between representative
    faces of distinct maximal well-constrained parts, provided it strictly
    reduces the excess DOFs without introducing a new dependency.
    """
    tol = tol or solid.default_tol()
    prec = precedence or DEFAULT_TYPE_PRECEDENCE
    options: dict[str, ResolutionOption] = {}

    for cert in certificates:
        for cid in cert.support:
            c = gcs.constraint(cid)
            opt = ResolutionOption(
                kind="remove", constraint_id=cid, candidate=None,
                rough_rank=prec.get(c.type, 0),
                sensitivity=sensitivity(cid, jm),
                explanation=(f"remove {c.type} {cid} to break the dependency "
                             f"{sorted(cert.support)}"))
            options.setdefault(opt.option_id, opt)

    if report.state in ("under", "over-and-under") and len(parts) > 1:
        base_rank = _user_rank(jm)
        part_sets = [set(p.entities) for p in parts]
        pairs: set[tuple[int, int]] = set()
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                for a in parts[i].entities:
                    for b in parts[j].entities:
                        if a == b:
                            continue
                        pair = (a, b) if a < b else (b, a)
                        # constraints inside one maximal part restrict nothing
                        if any({*pair} <= ps for ps in part_sets):
                            continue
                        pairs.add(pair)
        for (a, b) in sorted(pairs):
            for cand in _candidate_constraints(gcs, solid, a, b, tol):
                trial_gcs, jm2 = _augmented_analysis(gcs, solid, cand, tol)
                rep2 = evaluate_state(jm2)
                new_rows = len(jm2.rows_of(cand.id))
                no_new_dep = _user_rank(jm2) == base_rank + new_rows
                if rep2.excess_dof < report.excess_dof and no_new_dep:
                    opt = ResolutionOption(
                        kind="add", constraint_id=None, candidate=cand,
                        rough_rank=prec.get(cand.type, 0),
                        sensitivity=sensitivity(cand.id, jm2),
                        explanation=(f"add {cand.type} between faces {a} and "
                                     f"{b} to tie two well-constrained parts"))
                    options.setdefault(opt.option_id, opt)
    return sorted(options.values(), key=lambda o: o.option_id)


def _user_rank(jm: JacobianMatrix) -> int:
    from .sai_detection import projected_user_rows, _rank
    ju, _ = projected_user_rows(jm)
    return _rank(ju)


def _candidate_constraints(gcs: Gcs, solid: Solid, a: int, b: int,
                           tol: ToleranceContext) -> list[Constraint]:
    """Catalogue candidates between two faces, filtered to those already
    satisfied at the witness (adding them must not change the shape)."""
    out = []
    a, b = min(a, b), max(a, b)
    na = solid.faces[a].outward_normal()
    nb = solid.faces[b].outward_normal()
    nid = max(gcs.next_id(), 100000)
    par = normals_parallel(na, nb, tol)
    if par:
        out.append(Constraint(nid + 0, "parallel", [a, b]))
        d = measured_distance(solid, a, b, tol)
        if d is not None:
            out.append(Constraint(nid + 1, "distance", [a, b], d))
            if d <= max(tol.linear_eps, 1e-9):
                out.append(Constraint(nid + 2, "coincident", [a, b]))
    else:
        if abs(float(na @ nb)) <= parallel_check_tol(tol):
            out.append(Constraint(nid + 3, "perpendicular", [a, b]))
        out.append(Constraint(nid + 4, "angle", [a, b], measured_angle(solid, a, b)))
    return out


def prioritize(options: list[ResolutionOption],
               precedence: dict[str, int] | None = None) -> list[ResolutionOption]:
    """Deterministic two-level ordering.

    Remove options: low-design-intent types first, ties broken by higher
    sensitivity (a touchy constraint indicates a poor constraining scheme),
    then id. Add options: high-design-intent types first, ties by lower
    sensitivity, then id.
    """
    removes = [o for o in options if o.kind == "remove"]
    adds = [o for o in options if o.kind == "add"]
    removes.sort(key=lambda o: (o.rough_rank, -o.sensitivity, o.constraint_id))
    adds.sort(key=lambda o: (-o.rough_rank, o.sensitivity, o.option_id))
    return removes + adds


def prioritized_options(report, certificates, parts, gcs, solid, jm,
                        tol=None, precedence=None) -> PrioritizedOptions:
    opts = generate_options(report, certificates, parts, gcs, solid, jm, tol,
                            precedence)
    ordered = prioritize(opts, precedence)
    return PrioritizedOptions(options=ordered, gcs_revision=gcs.revision_token())


def apply_resolution(gcs: Gcs, option: ResolutionOption,
                     prioritized: PrioritizedOptions) -> Gcs:
    """Apply one option; the option must have been generated against the
    current GCS revision."""
    if prioritized.gcs_revision != gcs.revision_token():
        raise StaleOptionsError("options were generated for an older GCS")
    if option.kind == "remove":
        return gcs.replaced([c for c in gcs.constraints
                             if c.id != option.constraint_id])
    cand = option.candidate
    return gcs.replaced(gcs.constraints +
                        [Constraint(gcs.next_id(), cand.type, list(cand.refs),
                                    cand.value)])


@dataclass
class AutoResolveStep:
    option: ResolutionOption
    state_after: str

    def as_dict(self) -> dict:
        return {"option": self.option.as_dict(), "state_after": self.state_after}


def auto_resolve(gcs: Gcs, solid: Solid, tol: ToleranceContext | None = None,
                 precedence: dict[str, int] | None = None,
                 max_steps: int = 32):
    """Pick the top prioritized option repeatedly until the system is
    well-constrained or no valid options remain.

    Returns (gcs, steps, final report, final leftover options or None).
    """
    tol = tol or solid.default_tol()
    steps: list[AutoResolveStep] = []
    cur = gcs
    for _ in range(max_steps):
        w, system = assemble(cur, solid, tol)
        jm = jacobian(w, system)
        report = evaluate_state(jm)
        if report.state == "well":
            return cur, steps, report, None
        certs = (find_minimal_overconstrained(jm)
                 if report.state in ("over", "over-and-under") else [])
        parts = (find_maximal_wellconstrained(cur, jm)
                 if report.state in ("under", "over-and-under") else [])
        pr = prioritized_options(report, certs, parts, cur, solid, jm, tol,
                                 precedence)
        if not pr.options:
            return cur, steps, report, pr
        top = pr.options[0]
        cur = apply_resolution(cur, top, pr)
        w2, system2 = assemble(cur, solid, tol)
        rep2 = evaluate_state(jacobian(w2, system2))
        steps.append(AutoResolveStep(option=top, state_after=rep2.state))
    w, system = assemble(cur, solid, tol)
    report = evaluate_state(jacobian(w, system))
    return cur, steps, report, None
