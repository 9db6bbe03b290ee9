"""Push-pull direct edits: motion specification, moved-surface evaluation,
fixed-topology boundary regeneration, and the iterative edit loop that
alternates event detection with Boolean repair until the motion completes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .brep import Solid, validate_solid
from .errors import EditRejectedError, VdmError
from .geometry import Plane, unit, vec3
from .regen import RegenResult, regenerate_with_planes
from .tolerances import ToleranceContext


@dataclass(frozen=True)
class PushPullEdit:
    """Translational or rotational motion of a set of boundary faces.

    The motion parameter t runs over [0, 1]: t=0 is the pre-edit pose,
    t=1 the target pose. Angles are radians.
    """

    face_ids: tuple[int, ...]
    kind: str  # translate | rotate
    direction: np.ndarray | None = None
    distance: float = 0.0
    axis_point: np.ndarray | None = None
    axis_dir: np.ndarray | None = None
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in ("translate", "rotate"):
            raise ValueError(f"unknown edit kind '{self.kind}'")
        if not self.face_ids:
            raise ValueError("edit needs at least one face")
        object.__setattr__(self, "face_ids", tuple(sorted(set(self.face_ids))))

    def with_faces(self, face_ids) -> "PushPullEdit":
        return PushPullEdit(tuple(sorted(set(face_ids))), self.kind,
                            self.direction, self.distance,
                            self.axis_point, self.axis_dir, self.angle)

    def is_identity(self) -> bool:
        if self.kind == "translate":
            return self.distance == 0.0
        return self.angle == 0.0

    def move_plane(self, plane: Plane, dt: float) -> Plane:
        """Plane after a motion-parameter increment dt."""
        if self.kind == "translate":
            return plane.translated(dt * self.distance * self.direction)
        return plane.rotated(self.axis_point, self.axis_dir, dt * self.angle)

    def move_point(self, p: np.ndarray, dt: float) -> np.ndarray:
        if self.kind == "translate":
            return p + dt * self.distance * self.direction
        from .geometry import rotation_matrix
        r = rotation_matrix(self.axis_dir, dt * self.angle)
        return r @ (p - self.axis_point) + self.axis_point


def translate_faces(face_ids, direction, distance: float) -> PushPullEdit:
    return PushPullEdit(tuple(face_ids), "translate",
                        direction=unit(direction), distance=float(distance))


def rotate_faces(face_ids, axis_point, axis_dir, angle: float) -> PushPullEdit:
    return PushPullEdit(tuple(face_ids), "rotate",
                        axis_point=vec3(axis_point), axis_dir=unit(axis_dir),
                        angle=float(angle))


def check_edit(solid: Solid, edit: PushPullEdit, tol: ToleranceContext):
    """Edit/solid consistency: faces exist; rotations actually move planes."""
    for fid in edit.face_ids:
        if fid not in solid.faces:
            raise VdmError(f"edit references missing face {fid}")
    if edit.kind == "rotate" and edit.angle != 0.0:
        for fid in edit.face_ids:
            n = solid.faces[fid].plane.normal
            if float(np.linalg.norm(np.cross(edit.axis_dir, n))) <= tol.angular_eps:
                raise VdmError(
                    f"rotation axis is normal to face {fid}: its plane would not move")


def surface_at(solid: Solid, edit: PushPullEdit, face_id: int, t: float) -> Plane:
    """Moved surface of an edited face at motion parameter t (stored
    orientation). Faces outside the edit set are returned unchanged."""
    pl = solid.faces[face_id].plane
    if face_id not in edit.face_ids:
        return pl
    return edit.move_plane(pl, t)


def edited_planes_at(solid: Solid, edit: PushPullEdit, dt: float) -> dict[int, Plane]:
    return {fid: edit.move_plane(solid.faces[fid].plane, dt)
            for fid in edit.face_ids if fid in solid.faces}


def regenerate_boundary(solid: Solid, edit: PushPullEdit, t: float,
                        tol: ToleranceContext | None = None,
                        quick: bool = False) -> RegenResult:
    """Re-evaluate the boundary at motion parameter t with topology fixed.

    The solid is taken to be at pose t=0 of the edit; vertices are recomputed
    from the moved planes and the result validated.
    """
    tol = tol or solid.default_tol()
    return regenerate_with_planes(solid, edited_planes_at(solid, edit, t),
                                  tol, quick=quick)


@dataclass
class ResolutionPolicy:
    """How the post-edit constraint workflow behaves."""
    auto: bool = True
    type_precedence: dict[str, int] | None = None


@dataclass
class EditOutcome:
    solid: Solid
    gcs: object
    events: list            # confirmed events, in motion order
    intermediates: list[Solid]
    face_map: dict[int, int]
    update_plan: object | None = None
    state_report: object | None = None
    certificates: list = field(default_factory=list)
    parts: list = field(default_factory=list)
    resolution_steps: list = field(default_factory=list)
    options_remaining: object | None = None
    completed_t: float = 1.0  # < 1 when the moved faces were consumed mid-motion

    @property
    def gtip_count(self) -> int:
        return len(self.events)


_MAX_ROT_STEP = math.pi / 3


class _EditState:
    """Mutable cursor of the edit loop: current model at pose t, the edit
    with face ids remapped to the current model, and ancestry of the
    pre-edit faces."""

    def __init__(self, solid: Solid, edit: PushPullEdit):
        self.solid = solid
        self.edit = edit
        self.face_map = {fid: fid for fid in solid.faces}
        self.t = 0.0
        self.faces_alive = True

    def apply_boolean_step(self, t_end: float, tol: ToleranceContext):
        from .gti_resolution import build_auxiliary, resolve_at_gtip
        try:
            auxes = build_auxiliary(self.solid, self.edit, self.t, t_end, tol)
            resolved = resolve_at_gtip(self.solid, auxes, tol)
        except VdmError:
            # landing exactly on a near-degenerate pose can starve the
            # regularizer; a hair of overshoot clears the contact band
            t_retry = min(t_end + 1e-5, 1.0)
            if t_retry <= t_end:
                raise
            auxes = build_auxiliary(self.solid, self.edit, self.t, t_retry, tol)
            resolved = resolve_at_gtip(self.solid, auxes, tol)
            t_end = t_retry
        if resolved is None:
            raise EditRejectedError(
                "model vanished during the edit",
                last_valid_t=max(self.t, t_end - 10 * tol.parameter_eps))
        new_solid, provenance = resolved
        self.face_map = _compose_face_map(self.face_map, provenance, new_solid)
        new_edit_faces = sorted(
            {nf for nf, srcs in provenance.items()
             if any(sf in self.edit.face_ids for sf in srcs)} & set(new_solid.faces))
        self.solid = new_solid
        self.t = t_end
        if new_edit_faces:
            self.edit = self.edit.with_faces(new_edit_faces)
        else:
            self.faces_alive = False

    def advance_to(self, t_target: float, tol: ToleranceContext,
                   boolean_landing: bool):
        """Walk to t_target in bounded sub-steps; regeneration where it stays
        valid, Boolean sweeps where it does not (post-contact stretches) and
        at confirmed-event landings."""
        while self.t < t_target - tol.parameter_eps and self.faces_alive:
            if self.edit.kind == "rotate" and \
                    abs((t_target - self.t) * self.edit.angle) > _MAX_ROT_STEP:
                step = self.t + math.copysign(_MAX_ROT_STEP, self.edit.angle) / self.edit.angle
                landing = False
            else:
                step = t_target
                landing = True
            if landing and boolean_landing:
                self.apply_boolean_step(step, tol)
                continue
            regen = regenerate_boundary(self.solid, self.edit, step - self.t, tol)
            if regen.is_valid:
                self.solid = regen.solid
                self.t = step
            else:
                self.apply_boolean_step(step, tol)


def apply_direct_edit(solid: Solid, gcs, edit: PushPullEdit,
                      policy: ResolutionPolicy | None = None,
                      tol: ToleranceContext | None = None) -> EditOutcome:
    """Full edit pipeline: iterate {next event -> Boolean repair} to t=1,
    then update the constraint system against the new shape, analyze its
    state, and (in auto mode) resolve inconsistencies.
    """
    from .gtip import next_gtip
    from .sai_pipeline import run_sai_stage

    policy = policy or ResolutionPolicy()
    tol = tol or solid.default_tol()
    check_edit(solid, edit, tol)

    report0 = validate_solid(solid, tol)
    if not report0.is_valid:
        raise EditRejectedError(f"input solid invalid: {report0.summary()}",
                                last_valid_t=0.0)

    if edit.is_identity():
        return run_sai_stage(solid, gcs, solid.copy(),
                             {fid: fid for fid in solid.faces}, [], [],
                             policy, tol)

    state = _EditState(solid, edit)
    events = []
    intermediates: list[Solid] = []

    for _ in range(64):
        ev = next_gtip(state.solid, state.edit, state.t, tol)
        try:
            if ev is None:
                state.advance_to(1.0, tol, boolean_landing=False)
            else:
                state.advance_to(ev.t_event, tol, boolean_landing=True)
        except VdmError as exc:
            if isinstance(exc, EditRejectedError):
                raise
            raise EditRejectedError(
                f"advance failed: {exc}",
                last_valid_t=max(0.0, state.t)) from exc
        if ev is not None:
            events.append(ev)
            intermediates.append(state.solid.copy())
        if ev is None or state.t >= 1.0 - tol.parameter_eps or not state.faces_alive:
            break
    else:
        raise EditRejectedError("edit loop did not terminate",
                                last_valid_t=state.t)

    final_report = validate_solid(state.solid, tol)
    if not final_report.is_valid:
        raise EditRejectedError(
            f"final model invalid: {final_report.summary()}",
            last_valid_t=state.t)

    return run_sai_stage(solid, gcs, state.solid, state.face_map, events,
                         intermediates, policy, tol, completed_t=state.t)


def _compose_face_map(face_map: dict[int, int], provenance: dict[int, list[int]],
                      new_solid: Solid) -> dict[int, int]:
    """Track pre-edit face ids through one Boolean repair.

    provenance maps new face id -> source face ids in the previous model.
    Surviving pre-edit faces map to a deterministic descendant; faces with no
    descendant drop out (lost by the edit).
    """
    desc: dict[int, int] = {}
    for nf in sorted(provenance):
        for sf in provenance[nf]:
            if sf not in desc:
                desc[sf] = nf
    out: dict[int, int] = {}
    for orig, cur in face_map.items():
        if cur in desc:
            out[orig] = desc[cur]
        elif cur in new_solid.faces and cur not in desc:
            # face untouched by the Boolean keeps its id
            out[orig] = cur
    return out
