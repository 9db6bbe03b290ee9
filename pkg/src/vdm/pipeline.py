"""Session orchestration: scripted edits, analysis reports, history.

A session owns one (solid, constraint system) pair and serializes mutations
behind a revision counter; the service and CLI are thin wrappers over this
module, so scripted and interactive use share one code path.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .brep import Solid, validate_solid
from .direct_edit import (PushPullEdit, ResolutionPolicy, apply_direct_edit,
                          rotate_faces, translate_faces)
from .errors import (DocumentError, EditRejectedError, StaleOptionsError,
                     StaleRevisionError, VdmError)
from .gcs import Gcs, solve_parametric
from .io import canonical_json, gcs_to_dict, load_model, solid_to_dict
from .mesh import solid_volume
from .sai_pipeline import analyze_gcs
from .sai_resolution import (apply_resolution, auto_resolve,
                             prioritized_options)
from .tolerances import ToleranceContext


def parse_edit(spec: dict, path: str = "$") -> PushPullEdit:
    op = spec.get("op")
    if op == "push_pull_translate":
        for key in ("faces", "direction", "distance"):
            if key not in spec:
                raise DocumentError(f"missing '{key}'", path)
        return translate_faces(spec["faces"], spec["direction"], spec["distance"])
    if op == "push_pull_rotate":
        for key in ("faces", "axis_point", "axis_dir", "angle_deg"):
            if key not in spec:
                raise DocumentError(f"missing '{key}'", path)
        return rotate_faces(spec["faces"], spec["axis_point"], spec["axis_dir"],
                            math.radians(spec["angle_deg"]))
    raise DocumentError(f"unknown edit op '{op}'", path)


@dataclass
class HistoryEntry:
    operation: dict
    solid_doc: dict
    gcs_doc: dict
    events: list
    diagnostics: dict

    def as_dict(self) -> dict:
        return {"operation": self.operation, "solid": self.solid_doc,
                "gcs": self.gcs_doc, "events": self.events,
                "diagnostics": self.diagnostics}


class Session:
    """Single-writer editing session with full-copy history snapshots."""

    def __init__(self, solid: Solid, gcs: Gcs, session_id: str = "local",
                 auto_resolve_default: bool = False):
        self.id = session_id
        self.solid = solid
        self.gcs = gcs
        self.revision = 0
        self.history: list[HistoryEntry] = []
        self.pending_options = None
        self.auto_default = auto_resolve_default
        self._lock = threading.Lock()
        self.tol: ToleranceContext = solid.default_tol()
        self._snapshot({"op": "load"}, [], {})

    # -- helpers -----------------------------------------------------------

    def _snapshot(self, operation: dict, events: list, diagnostics: dict):
        self.history.append(HistoryEntry(
            operation=operation, solid_doc=solid_to_dict(self.solid),
            gcs_doc=gcs_to_dict(self.gcs), events=list(events),
            diagnostics=dict(diagnostics)))

    def check_revision(self, revision: int | None):
        if revision is not None and revision != self.revision:
            raise StaleRevisionError(
                f"revision {revision} is stale (current {self.revision})")

    def analysis(self) -> dict:
        jm, report, certs, parts = analyze_gcs(self.gcs, self.solid, self.tol)
        validity = validate_solid(self.solid, self.tol)
        return {
            "validity": validity.as_dict(),
            "constraint_state": report.as_dict(),
            "certificates": [c.as_dict() for c in certs],
            "well_constrained_parts": [p.as_dict() for p in parts],
            "volume": solid_volume(self.solid, self.tol),
        }

    def options_payload(self) -> dict:
        jm, report, certs, parts = analyze_gcs(self.gcs, self.solid, self.tol)
        pr = prioritized_options(report, certs, parts, self.gcs, self.solid,
                                 jm, self.tol)
        self.pending_options = pr
        return pr.as_dict()

    # -- mutations ----------------------------------------------------------

    def apply_edit(self, edit_spec: dict, auto: bool | None = None,
                   revision: int | None = None) -> dict:
        with self._lock:
            self.check_revision(revision)
            edit = parse_edit(edit_spec)
            policy = ResolutionPolicy(auto=self.auto_default if auto is None else auto)
            outcome = apply_direct_edit(self.solid, self.gcs, edit, policy,
                                        self.tol)
            self.solid = outcome.solid
            self.gcs = outcome.gcs
            self.tol = self.solid.default_tol()
            self.revision += 1
            self.pending_options = None
            diagnostics = {
                "gtips": [e.as_dict() for e in outcome.events],
                "completed_t": outcome.completed_t,
                "face_map": {str(k): v for k, v in sorted(outcome.face_map.items())},
                "update_plan": outcome.update_plan.as_dict(),
                "constraint_state": outcome.state_report.as_dict(),
                "certificates": [c.as_dict() for c in outcome.certificates],
                "well_constrained_parts": [p.as_dict() for p in outcome.parts],
                "auto_steps": [s.as_dict() for s in outcome.resolution_steps],
                "intermediate_volumes": [solid_volume(s) for s in outcome.intermediates],
                "intermediates": [solid_to_dict(s) for s in outcome.intermediates],
            }
            self._snapshot({"op": "edit", "edit": edit_spec}, diagnostics["gtips"],
                           diagnostics)
            return diagnostics

    def set_parameter(self, constraint_id: int, value: float,
                      revision: int | None = None, degrees: bool = False) -> dict:
        with self._lock:
            self.check_revision(revision)
            c = self.gcs.constraint(constraint_id)
            v = math.radians(value) if (degrees and c.type == "angle") else value
            solved = solve_parametric(self.gcs, self.solid, {constraint_id: v},
                                      self.tol)
            new_constraints = [
                type(c)(cc.id, cc.type, list(cc.refs),
                        v if cc.id == constraint_id else cc.value)
                for cc in self.gcs.constraints]
            self.solid = solved
            self.gcs = self.gcs.replaced(new_constraints)
            self.revision += 1
            self.pending_options = None
            diagnostics = {"set_parameter": {"constraint_id": constraint_id,
                                             "value": v},
                           "volume": solid_volume(self.solid, self.tol)}
            self._snapshot({"op": "set_parameter", "constraint_id": constraint_id,
                            "value": v}, [], diagnostics)
            return diagnostics

    def resolve(self, mode: str = "auto", option_id: str | None = None,
                revision: int | None = None) -> dict:
        with self._lock:
            self.check_revision(revision)
            if mode == "auto":
                gcs2, steps, report, leftover = auto_resolve(self.gcs, self.solid,
                                                             self.tol)
                self.gcs = gcs2
                self.revision += 1
                self.pending_options = None
                diagnostics = {"auto_steps": [s.as_dict() for s in steps],
                               "constraint_state": report.as_dict()}
                self._snapshot({"op": "resolve", "mode": "auto"}, [], diagnostics)
                return diagnostics
            if mode != "choice" or option_id is None:
                raise VdmError("resolve needs mode 'auto' or 'choice' + option id")
            if self.pending_options is None:
                raise StaleOptionsError("no options generated for this revision")
            match = [o for o in self.pending_options.options
                     if o.option_id == option_id]
            if not match:
                raise StaleOptionsError(f"unknown option '{option_id}'")
            self.gcs = apply_resolution(self.gcs, match[0], self.pending_options)
            self.revision += 1
            self.pending_options = None
            jm, report, certs, parts = analyze_gcs(self.gcs, self.solid, self.tol)
            diagnostics = {"applied": option_id,
                           "constraint_state": report.as_dict()}
            self._snapshot({"op": "resolve", "mode": "choice",
                            "option": option_id}, [], diagnostics)
            return diagnostics


def run_script(model_doc: bytes | str, script: list[dict],
               auto_resolve_edits: bool = False) -> tuple[bytes, dict]:
    """Execute a script against a model document.

    Returns (final document bytes, analysis report). On a failing step the
    report carries the step index and the last valid state is emitted.
    """
    solid, gcs = load_model(model_doc)
    session = Session(solid, gcs, auto_resolve_default=auto_resolve_edits)
    steps_report: list[dict] = []
    failure = None
    for idx, step in enumerate(script):
        op = step.get("op")
        try:
            if op in ("push_pull_translate", "push_pull_rotate"):
                diag = session.apply_edit(step, auto=step.get(
                    "auto_resolve", auto_resolve_edits))
                steps_report.append({"index": idx, "op": op, "ok": True,
                                     "gtips": diag["gtips"],
                                     "completed_t": diag["completed_t"],
                                     "constraint_state": diag["constraint_state"]})
            elif op == "set_parameter":
                diag = session.set_parameter(step["constraint_id"], step["value"],
                                             degrees=step.get("degrees", False))
                steps_report.append({"index": idx, "op": op, "ok": True,
                                     "volume": diag["volume"]})
            elif op == "resolve":
                mode = step.get("mode", "auto")
                diag = session.resolve(mode, step.get("option"))
                steps_report.append({"index": idx, "op": op, "ok": True,
                                     "constraint_state": diag["constraint_state"]})
            elif op == "analyze":
                steps_report.append({"index": idx, "op": op, "ok": True,
                                     "analysis": session.analysis()})
            else:
                raise DocumentError(f"unknown script op '{op}'",
                                    f"$.script[{idx}]")
        except (VdmError,) as exc:
            failure = {"index": idx, "op": op, "error": str(exc)}
            if isinstance(exc, EditRejectedError):
                failure["last_valid_t"] = exc.last_valid_t
            steps_report.append({"index": idx, "op": op, "ok": False,
                                 "error": str(exc)})
            break

    report = {
        "steps": steps_report,
        "failure": failure,
        "final": session.analysis(),
    }
    from .io import save_model
    return save_model(session.solid, session.gcs), _round_trip_json(report)


def _round_trip_json(obj) -> dict:
    """Normalize numpy scalars so reports serialize canonically."""
    import json
    return json.loads(canonical_json(_plain(obj)))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    return obj
