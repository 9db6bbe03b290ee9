"""Geometric constraint system over face surfaces.

Each constrained face contributes four variables -- its outward plane
(normal, offset) -- plus one unit-norm auxiliary equation, so the system is
deliberately over-parameterized and chart-free. Residuals are differentiated
at the current geometry (the witness); non-smooth elements (distance
orientation sign, the projection basis of parallelism) are frozen there.

Residual catalogue, for outward planes (n_a, o_a), (n_b, o_b):

    parallel       b_k . (n_a x n_b) = 0   for the two witness basis vectors
                   b_1, b_2 spanning the orthogonal complement of n_a*
    perpendicular  n_a . n_b = 0
    angle(alpha)   n_a . n_b - cos(alpha) = 0
    distance(d)    sgn* . (o_a - s* o_b) - d = 0, s* = sign(n_a* . n_b*)
    coincident     parallel rows + zero-gap row
    fixed          n - n* = 0 (3 rows), o - o* = 0
    unit-norm aux  ||n||^2 - 1 = 0 per entity
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .brep import Solid
from .errors import IllPosedConstraintError, SolveError
from .geometry import Plane
from .regen import regenerate_with_planes
from .tolerances import ToleranceContext


@dataclass
class Constraint:
    id: int
    type: str
    refs: list[int]
    value: float | None = None  # radians for angle, model units for distance

    ARITY = {"distance": 2, "angle": 2, "parallel": 2, "perpendicular": 2,
             "coincident": 2, "fixed": 1}
    DIMENSIONAL = ("distance", "angle")

    def __post_init__(self):
        if self.type not in self.ARITY:
            raise ValueError(f"unknown constraint type '{self.type}'")
        if len(self.refs) != self.ARITY[self.type]:
            raise ValueError(f"'{self.type}' takes {self.ARITY[self.type]} refs")
        if (self.value is not None) != (self.type in self.DIMENSIONAL):
            raise ValueError(f"'{self.type}' value presence mismatch")

    def is_dimensional(self) -> bool:
        return self.type in self.DIMENSIONAL

    def key(self) -> tuple:
        return (self.id, self.type, tuple(self.refs),
                None if self.value is None else round(self.value, 15))


@dataclass
class Gcs:
    entities: list[int]                 # constrained surfaces, by face id
    constraints: list[Constraint] = field(default_factory=list)

    def __post_init__(self):
        ids = [c.id for c in self.constraints]
        if len(ids) != len(set(ids)):
            raise ValueError("constraint ids must be unique")

    def constraint(self, cid: int) -> Constraint:
        for c in self.constraints:
            if c.id == cid:
                return c
        raise KeyError(f"no constraint {cid}")

    def next_id(self) -> int:
        return max((c.id for c in self.constraints), default=0) + 1

    def revision_token(self) -> str:
        h = hashlib.sha256()
        h.update(repr(sorted(self.entities)).encode())
        for c in sorted(self.constraints, key=lambda c: c.id):
            h.update(repr(c.key()).encode())
        return h.hexdigest()[:16]

    def replaced(self, constraints: list[Constraint], entities=None) -> "Gcs":
        return Gcs(entities=list(self.entities if entities is None else entities),
                   constraints=constraints)


@dataclass
class Witness:
    """Variable vector assembled from the current geometry."""
    q: np.ndarray
    entity_index: dict[int, int]   # face id -> variable block start

    def plane_of(self, fid: int) -> tuple[np.ndarray, float]:
        k = self.entity_index[fid]
        return self.q[k:k + 3], float(self.q[k + 3])


@dataclass
class JacobianMatrix:
    matrix: np.ndarray
    row_labels: list            # constraint id, or ("unit", face id)
    entity_index: dict[int, int]
    witness_q: np.ndarray | None = None

    @property
    def shape(self):
        return self.matrix.shape

    def user_rows(self) -> np.ndarray:
        return np.array([i for i, lab in enumerate(self.row_labels)
                         if not isinstance(lab, tuple)], dtype=int)

    def aux_rows(self) -> np.ndarray:
        return np.array([i for i, lab in enumerate(self.row_labels)
                         if isinstance(lab, tuple)], dtype=int)

    def rows_of(self, cid: int) -> np.ndarray:
        return np.array([i for i, lab in enumerate(self.row_labels) if lab == cid],
                        dtype=int)


class _Row:
    __slots__ = ("label", "fn", "grad")

    def __init__(self, label, fn, grad):
        self.label = label
        self.fn = fn
        self.grad = grad


class ResidualSystem:
    """Residual vector and analytic Jacobian as functions of q."""

    def __init__(self, rows: list[_Row], entity_index: dict[int, int], n_vars: int):
        self.rows = rows
        self.entity_index = entity_index
        self.n_vars = n_vars

    @property
    def row_labels(self):
        return [r.label for r in self.rows]

    def residuals(self, q: np.ndarray) -> np.ndarray:
        return np.array([r.fn(q) for r in self.rows])

    def jacobian(self, q: np.ndarray) -> JacobianMatrix:
        m = np.zeros((len(self.rows), self.n_vars))
        for i, r in enumerate(self.rows):
            r.grad(q, m[i])
        return JacobianMatrix(m, self.row_labels, dict(self.entity_index),
                              witness_q=np.array(q))


def witness_from_solid(gcs: Gcs, solid: Solid) -> Witness:
    index: dict[int, int] = {}
    q = np.zeros(4 * len(gcs.entities))
    for k, fid in enumerate(gcs.entities):
        if fid not in solid.faces:
            raise KeyError(f"GCS entity {fid} is not a face of the solid")
        f = solid.faces[fid]
        index[fid] = 4 * k
        q[4 * k:4 * k + 3] = f.outward_normal()
        q[4 * k + 3] = f.outward_offset()
    return Witness(q, index)


def _complement_basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    b1 = np.cross(n, e)
    b1 = b1 / np.linalg.norm(b1)
    b2 = np.cross(n, b1)
    return b1, b2


def parallel_check_tol(tol: ToleranceContext) -> float:
    """Angular slack for satisfaction checks; numerical solves land around
    1e-8, so the strict geometric angular_eps would misclassify solved
    geometry."""
    return max(tol.angular_eps, 1e-6)


def normals_parallel(na: np.ndarray, nb: np.ndarray, tol: ToleranceContext) -> bool:
    return float(np.linalg.norm(np.cross(na, nb))) <= parallel_check_tol(tol)


def assemble(gcs: Gcs, solid: Solid,
             tol: ToleranceContext | None = None) -> tuple[Witness, ResidualSystem]:
    """Build the residual system at the current geometry."""
    tol = tol or solid.default_tol()
    witness = witness_from_solid(gcs, solid)
    idx = witness.entity_index
    rows: list[_Row] = []

    def nvec(q, fid):
        k = idx[fid]
        return q[k:k + 3]

    def offs(q, fid):
        return q[idx[fid] + 3]

    def add_parallel_rows(cid, a, b):
        na_w = nvec(witness.q, a).copy()
        b1, b2 = _complement_basis(na_w)
        for bk in (b1, b2):
            def fn(q, a=a, b=b, bk=bk):
                return float(bk @ np.cross(nvec(q, a), nvec(q, b)))

            def grad(q, row, a=a, b=b, bk=bk):
                row[idx[a]:idx[a] + 3] += np.cross(nvec(q, b), bk)
                row[idx[b]:idx[b] + 3] += np.cross(bk, nvec(q, a))
            rows.append(_Row(cid, fn, grad))

    def add_gap_row(cid, a, b, target):
        na_w = nvec(witness.q, a)
        nb_w = nvec(witness.q, b)
        if not normals_parallel(na_w, nb_w, tol):
            raise IllPosedConstraintError(
                f"constraint {cid}: planes {a},{b} are not parallel at the witness")
        s = 1.0 if float(na_w @ nb_w) > 0 else -1.0
        gap_w = float(offs(witness.q, a)) - s * float(offs(witness.q, b))
        sgn = 1.0 if gap_w >= 0 else -1.0

        def fn(q, a=a, b=b, s=s, sgn=sgn, target=target):
            return sgn * (offs(q, a) - s * offs(q, b)) - target

        def grad(q, row, a=a, b=b, s=s, sgn=sgn):
            row[idx[a] + 3] += sgn
            row[idx[b] + 3] += -sgn * s
        rows.append(_Row(cid, fn, grad))

    for c in gcs.constraints:
        if c.type == "perpendicular":
            a, b = c.refs

            def fn(q, a=a, b=b):
                return float(nvec(q, a) @ nvec(q, b))

            def grad(q, row, a=a, b=b):
                row[idx[a]:idx[a] + 3] += nvec(q, b)
                row[idx[b]:idx[b] + 3] += nvec(q, a)
            rows.append(_Row(c.id, fn, grad))
        elif c.type == "angle":
            a, b = c.refs
            target = math.cos(c.value)

            def fn(q, a=a, b=b, target=target):
                return float(nvec(q, a) @ nvec(q, b)) - target

            def grad(q, row, a=a, b=b):
                row[idx[a]:idx[a] + 3] += nvec(q, b)
                row[idx[b]:idx[b] + 3] += nvec(q, a)
            rows.append(_Row(c.id, fn, grad))
        elif c.type == "parallel":
            add_parallel_rows(c.id, *c.refs)
        elif c.type == "distance":
            add_gap_row(c.id, c.refs[0], c.refs[1], c.value)
        elif c.type == "coincident":
            add_parallel_rows(c.id, *c.refs)
            add_gap_row(c.id, c.refs[0], c.refs[1], 0.0)
        elif c.type == "fixed":
            a = c.refs[0]
            n_star = nvec(witness.q, a).copy()
            o_star = float(offs(witness.q, a))
            for comp in range(3):
                def fn(q, a=a, comp=comp, n_star=n_star):
                    return float(nvec(q, a)[comp] - n_star[comp])

                def grad(q, row, a=a, comp=comp):
                    row[idx[a] + comp] += 1.0
                rows.append(_Row(c.id, fn, grad))

            def fn(q, a=a, o_star=o_star):
                return float(offs(q, a) - o_star)

            def grad(q, row, a=a):
                row[idx[a] + 3] += 1.0
            rows.append(_Row(c.id, fn, grad))

    for fid in gcs.entities:
        def fn(q, fid=fid):
            n = nvec(q, fid)
            return float(n @ n) - 1.0

        def grad(q, row, fid=fid):
            row[idx[fid]:idx[fid] + 3] += 2.0 * nvec(q, fid)
        rows.append(_Row(("unit", fid), fn, grad))

    return witness, ResidualSystem(rows, idx, len(witness.q))


def jacobian(witness: Witness, system: ResidualSystem) -> JacobianMatrix:
    """Analytic Jacobian evaluated at the witness."""
    return system.jacobian(witness.q)


def rigid_motion_generators(witness: Witness) -> np.ndarray:
    """n x 6 matrix of rigid-motion directions in variable space.

    A generator (omega, v) acts on an outward plane as
    dn = omega x n, do = n . v.
    """
    n_vars = len(witness.q)
    gens = np.zeros((n_vars, 6))
    basis = np.eye(3)
    for fid, k in witness.entity_index.items():
        n = witness.q[k:k + 3]
        for g in range(3):
            gens[k:k + 3, g] = np.cross(basis[g], n)
        for g in range(3):
            gens[k + 3, 3 + g] = n[g]
    return gens


def measured_angle(solid: Solid, a: int, b: int) -> float:
    na = solid.faces[a].outward_normal()
    nb = solid.faces[b].outward_normal()
    return float(np.arccos(np.clip(na @ nb, -1.0, 1.0)))


def measured_distance(solid: Solid, a: int, b: int,
                      tol: ToleranceContext) -> float | None:
    """Gap between parallel faces at the witness; None if not parallel."""
    na = solid.faces[a].outward_normal()
    nb = solid.faces[b].outward_normal()
    if not normals_parallel(na, nb, tol):
        return None
    s = 1.0 if float(na @ nb) > 0 else -1.0
    return abs(solid.faces[a].outward_offset() - s * solid.faces[b].outward_offset())


def write_back_geometry(gcs: Gcs, solid: Solid, q: np.ndarray,
                        witness: Witness,
                        tol: ToleranceContext | None = None):
    """Push solved plane variables back into a copy of the solid and
    regenerate its boundary. Returns (solid, report)."""
    tol = tol or solid.default_tol()
    new_planes = {}
    for fid in gcs.entities:
        k = witness.entity_index[fid]
        n = np.array(q[k:k + 3])
        nn = float(np.linalg.norm(n))
        n_out = n / nn
        o_out = float(q[k + 3]) / nn
        sense = solid.faces[fid].sense
        new_planes[fid] = Plane(sense * n_out, sense * o_out, _skip_normalize=True)
    return regenerate_with_planes(solid, new_planes, tol)


def solve_parametric(gcs: Gcs, solid: Solid, changes: dict[int, float],
                     tol: ToleranceContext | None = None,
                     max_iter: int = 100, r_tol: float = 1e-8) -> Solid:
    """Re-solve the GCS with new parameter values (damped Gauss-Newton from
    the witness, smallest-norm steps) and update the model shape.

    `changes` maps constraint id -> new parameter (radians for angles).
    """
    tol = tol or solid.default_tol()
    new_constraints = []
    for c in gcs.constraints:
        if c.id in changes:
            if not c.is_dimensional():
                raise SolveError(f"constraint {c.id} ({c.type}) has no parameter")
            new_constraints.append(Constraint(c.id, c.type, list(c.refs),
                                              float(changes[c.id])))
        else:
            new_constraints.append(c)
    target_gcs = gcs.replaced(new_constraints)

    witness, system = assemble(target_gcs, solid, tol)
    q = witness.q.copy()
    history = []
    converged = False
    for _ in range(max_iter):
        r = system.residuals(q)
        history.append(float(np.max(np.abs(r))))
        if history[-1] < r_tol:
            converged = True
            break
        jm = system.jacobian(q)
        dq, *_ = np.linalg.lstsq(jm.matrix, -r, rcond=None)
        alpha = 1.0
        base = float(np.linalg.norm(r))
        while alpha > 1e-8:
            r_new = system.residuals(q + alpha * dq)
            if float(np.linalg.norm(r_new)) <= base * (1.0 - 1e-4 * alpha) + 1e-16:
                break
            alpha *= 0.5
        q = q + alpha * dq
    else:
        r = system.residuals(q)
        history.append(float(np.max(np.abs(r))))
        converged = history[-1] < r_tol
    if not converged:
        raise SolveError("parametric solve did not converge", history)

    regen = write_back_geometry(target_gcs, solid, q, witness, tol)
    if not regen.is_valid:
        raise SolveError(
            f"solved geometry fails validity: {regen.report.summary()}", history)
    return regen.solid
