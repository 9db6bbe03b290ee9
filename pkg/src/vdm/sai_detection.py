"""Constraint-state analysis at the witness configuration.

The Jacobian of the residual system, evaluated at the current geometry,
carries the whole story: dependent user rows mean over-constraint, and a
null space larger than the surviving rigid-motion freedom means
under-constraint.

Unit-norm auxiliary rows are parameterization artifacts: they are projected
out before the dependency search, and the degree-of-freedom bookkeeping
counts them separately. Minimal over-constrained parts are recovered by an
l0-minimization over the null space of J^T -- reweighted l1 with linear
programming, each support certified minimal by rank tests, with exhaustive
subset enumeration as the small-system oracle and fallback.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from .gcs import Gcs, JacobianMatrix, rigid_motion_generators

_RANK_REL = 1e-9


def _rank(m: np.ndarray) -> int:
    if m.size == 0 or min(m.shape) == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] <= 0:
        return 0
    return int(np.sum(s > s[0] * _RANK_REL))


@dataclass
class ConstraintStateReport:
    state: str          # well | over | under | over-and-under
    rank: int
    nullity: int
    excess_dof: int
    rigid_dof: int = 6
    effective_rigid_dof: int = 6
    self_symmetric: bool = False

    def as_dict(self) -> dict:
        return {"state": self.state, "rank": self.rank, "nullity": self.nullity,
                "excess_dof": self.excess_dof, "rigid_dof": self.rigid_dof,
                "effective_rigid_dof": self.effective_rigid_dof,
                "self_symmetric": self.self_symmetric}


@dataclass
class OverconstraintCertificate:
    x: np.ndarray                    # over all rows of J, J^T x = 0
    support: list[int]               # constraint ids with nonzero coefficients
    residual: float

    def as_dict(self) -> dict:
        return {"support": sorted(self.support), "residual": self.residual}


@dataclass
class WellConstrainedPart:
    entities: list[int]
    constraint_ids: list[int]

    def as_dict(self) -> dict:
        return {"entities": sorted(self.entities),
                "constraints": sorted(self.constraint_ids)}


# --------------------------------------------------------------------------
# row bookkeeping


def _row_groups(jm: JacobianMatrix):
    """(user constraint ids in order, rows per id, aux row indices)."""
    by_cid: dict[int, list[int]] = {}
    aux = []
    for i, lab in enumerate(jm.row_labels):
        if isinstance(lab, tuple):
            aux.append(i)
        else:
            by_cid.setdefault(lab, []).append(i)
    return sorted(by_cid), by_cid, np.array(aux, dtype=int)


def projected_user_rows(jm: JacobianMatrix) -> tuple[np.ndarray, list[int]]:
    """User rows with the auxiliary rowspace projected out, plus one
    constraint-id label per row."""
    cids, by_cid, aux = _row_groups(jm)
    user_rows = [i for cid in cids for i in by_cid[cid]]
    labels = [cid for cid in cids for _ in by_cid[cid]]
    ju = jm.matrix[user_rows]
    if len(aux):
        a = jm.matrix[aux]
        # aux rows live in disjoint blocks; orthonormalize for stability
        q, _ = np.linalg.qr(a.T)
        k = _rank(a)
        q = q[:, :k]
        ju = ju - (ju @ q) @ q.T
    return ju, labels


def effective_rigid_dof(jm: JacobianMatrix) -> tuple[int, int]:
    """(rank of the rigid orbit, dim of rigid motions preserved by J)."""
    if jm.witness_q is None:
        raise ValueError("Jacobian lacks witness data")
    from .gcs import Witness
    w = Witness(jm.witness_q, jm.entity_index)
    g = rigid_motion_generators(w)
    rg = _rank(g)
    jg = jm.matrix @ g
    preserved = rg - _rank(jg)
    return rg, preserved


def evaluate_state(jm: JacobianMatrix) -> ConstraintStateReport:
    """Classify the constraint state from rank/nullity arithmetic.

    well <=> no user-row dependency and no freedoms beyond the rigid motions
    the constraints allow.
    """
    m = jm.matrix
    rank = _rank(m)
    nullity = m.shape[1] - rank
    ju, labels = projected_user_rows(jm)
    over = _rank(ju) < len(labels)
    rigid_rank, preserved = effective_rigid_dof(jm)
    excess = nullity - preserved
    under = excess > 0
    state = ("over-and-under" if over and under else
             "over" if over else "under" if under else "well")
    return ConstraintStateReport(state=state, rank=rank, nullity=nullity,
                                 excess_dof=excess,
                                 effective_rigid_dof=preserved,
                                 self_symmetric=rigid_rank < 6)


# --------------------------------------------------------------------------
# minimal over-constrained parts


def _constraint_subset_dependent(ju: np.ndarray, labels: list[int],
                                 subset: tuple[int, ...]) -> bool:
    rows = [i for i, lab in enumerate(labels) if lab in subset]
    sub = ju[rows]
    return _rank(sub) < len(rows)


def exact_minimal_circuits(ju: np.ndarray, labels: list[int]) -> list[tuple[int, ...]]:
    """All minimal dependent constraint subsets by exhaustive enumeration."""
    cids = sorted(set(labels))
    circuits: list[tuple[int, ...]] = []
    for size in range(1, len(cids) + 1):
        for subset in combinations(cids, size):
            if any(set(c) <= set(subset) for c in circuits):
                continue
            if _constraint_subset_dependent(ju, labels, subset):
                circuits.append(subset)
    return circuits


def _null_basis(m: np.ndarray, rel: float = _RANK_REL) -> np.ndarray:
    """Orthonormal basis of the left null space of m (vectors y, y^T m = 0)."""
    if m.size == 0:
        return np.zeros((m.shape[0], 0))
    u, s, _ = np.linalg.svd(m, full_matrices=True)
    tol = (s[0] * rel) if s.size else 0.0
    rank = int(np.sum(s > tol))
    return u[:, rank:]


def _sparse_null_vector(basis: np.ndarray, pivot_row: int,
                        max_rounds: int = 50) -> np.ndarray | None:
    """Reweighted-l1 sparsest vector in span(basis) with x[pivot_row] = 1."""
    m, d = basis.shape
    if d == 0:
        return None
    w = np.ones(m)
    x_prev = None
    for _ in range(max_rounds):
        # variables: c (d), t (m); minimize w.t  s.t. -t <= B c <= t, (Bc)_pivot = 1
        c_obj = np.concatenate([np.zeros(d), w])
        a_ub = np.block([[basis, -np.eye(m)], [-basis, -np.eye(m)]])
        b_ub = np.zeros(2 * m)
        a_eq = np.concatenate([basis[pivot_row], np.zeros(m)])[None, :]
        b_eq = np.array([1.0])
        res = linprog(c_obj, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                      bounds=[(None, None)] * d + [(0, None)] * m,
                      method="highs")
        if not res.success:
            return x_prev
        x = basis @ res.x[:d]
        nrm = float(np.max(np.abs(x)))
        if nrm <= 0:
            return x_prev
        x = x / nrm
        if x_prev is not None and float(np.max(np.abs(x - x_prev))) < 1e-12:
            break
        x_prev = x
        eps = max(1e-8, 0.1 * float(np.partition(np.abs(x), m // 2)[m // 2]))
        w = 1.0 / (np.abs(x) + eps)
        w = w / np.sum(w)
    return x_prev


def _minimalize_support(ju: np.ndarray, labels: list[int],
                        support: set[int], keep: int) -> tuple[int, ...] | None:
    """Greedily shrink a dependent constraint set to a minimal one containing
    `keep` (the exact-oracle step of the fallback path)."""
    cur = set(support)
    if not _constraint_subset_dependent(ju, labels, tuple(cur)):
        return None
    changed = True
    while changed:
        changed = False
        for cid in sorted(cur):
            if cid == keep:
                continue
            trial = cur - {cid}
            if len(trial) >= 1 and _constraint_subset_dependent(ju, labels, tuple(trial)):
                cur = trial
                changed = True
    if keep not in cur:
        return None
    return tuple(sorted(cur))


def _certify_minimal(ju: np.ndarray, labels: list[int],
                     support: tuple[int, ...]) -> bool:
    if not _constraint_subset_dependent(ju, labels, support):
        return False
    for cid in support:
        rest = tuple(c for c in support if c != cid)
        if rest and _constraint_subset_dependent(ju, labels, rest):
            return False
    return True


def find_minimal_overconstrained(jm: JacobianMatrix,
                                 exact_limit: int = 12) -> list[OverconstraintCertificate]:
    """Minimal over-constrained parts (circuits of the constraint-row matroid).

    Systems with at most `exact_limit` constraints are enumerated exactly;
    larger ones go through reweighted-l1 sparse recovery pivoted at each
    dependency-involved constraint, followed by greedy minimalization and a
    minimality certificate.
    """
    ju, labels = projected_user_rows(jm)
    cids = sorted(set(labels))
    if not cids:
        return []

    if len(cids) <= exact_limit:
        circuits = exact_minimal_circuits(ju, labels)
    else:
        circuits_set: set[tuple[int, ...]] = set()
        basis = _null_basis(ju)
        if basis.shape[1]:
            involved_rows = [i for i in range(len(labels))
                             if float(np.linalg.norm(basis[i])) > 1e-8]
            involved_cids = sorted({labels[i] for i in involved_rows})
            for cid in involved_cids:
                pivot = next(i for i in involved_rows if labels[i] == cid)
                x = _sparse_null_vector(basis, pivot)
                if x is None:
                    support = set(involved_cids)
                else:
                    thr = 1e-6 * float(np.max(np.abs(x)))
                    support = {labels[i] for i in range(len(labels))
                               if abs(x[i]) > thr}
                support.add(cid)
                minimal = _minimalize_support(ju, labels, support, keep=cid)
                if minimal is None:
                    # pivot constraint not actually in a circuit through here
                    minimal = _minimalize_support(ju, labels,
                                                  set(involved_cids), keep=cid)
                if minimal is not None and _certify_minimal(ju, labels, minimal):
                    circuits_set.add(minimal)
        circuits = sorted(circuits_set)

    out = []
    for circuit in sorted(circuits):
        cert = _certificate_for(jm, ju, labels, circuit)
        if cert is not None:
            out.append(cert)
    return out


def _certificate_for(jm: JacobianMatrix, ju: np.ndarray, labels: list[int],
                     circuit: tuple[int, ...]) -> OverconstraintCertificate | None:
    rows = [i for i, lab in enumerate(labels) if lab in circuit]
    sub = ju[rows]
    basis = _null_basis(sub)
    if basis.shape[1] == 0:
        return None
    y = basis[:, 0]
    # expand to the full row set of J: user coefficients + aux completion
    cids, by_cid, aux = _row_groups(jm)
    user_rows = [i for cid in cids for i in by_cid[cid]]
    x = np.zeros(jm.matrix.shape[0])
    for k, ri in enumerate(rows):
        x[user_rows[ri]] = y[k]
    if len(aux):
        a = jm.matrix[aux]
        rhs = -(jm.matrix[user_rows].T @ _embed(y, rows, len(user_rows)))
        mu, *_ = np.linalg.lstsq(a.T, rhs, rcond=None)
        x[aux] = mu
    resid = float(np.linalg.norm(jm.matrix.T @ x) / max(np.linalg.norm(x), 1e-300))
    return OverconstraintCertificate(x=x, support=sorted(circuit), residual=resid)


def _embed(y: np.ndarray, rows: list[int], n: int) -> np.ndarray:
    out = np.zeros(n)
    for k, r in enumerate(rows):
        out[r] = y[k]
    return out


# --------------------------------------------------------------------------
# maximal well-constrained parts


def _induced_system(gcs: Gcs, jm: JacobianMatrix, entities: set[int]):
    cols = []
    for fid in sorted(entities):
        k = jm.entity_index[fid]
        cols.extend(range(k, k + 4))
    cols = np.array(cols, dtype=int)
    rows = []
    row_cids = []
    for i, lab in enumerate(jm.row_labels):
        if isinstance(lab, tuple):
            if lab[0] == "unit" and lab[1] in entities:
                rows.append(i)
                row_cids.append(None)
        else:
            c = gcs.constraint(lab)
            if set(c.refs) <= entities:
                rows.append(i)
                row_cids.append(lab)
    sub = jm.matrix[np.array(rows, dtype=int)][:, cols]
    user = [i for i, cid in enumerate(row_cids) if cid is not None]
    return sub, user, sorted({cid for cid in row_cids if cid is not None}), cols


def _subsystem_state(gcs: Gcs, jm: JacobianMatrix, entities: set[int]) -> tuple[bool, int]:
    """(internally well-constrained?, excess dof) of the induced subsystem."""
    sub, user_rows, _cids, cols = _induced_system(gcs, jm, entities)
    rank = _rank(sub)
    nullity = sub.shape[1] - rank
    if len(user_rows) and _rank(sub[user_rows]) < len(user_rows):
        return False, max(0, nullity)
    from .gcs import Witness
    w = Witness(jm.witness_q, jm.entity_index)
    g = rigid_motion_generators(w)[cols]
    rg = _rank(g)
    preserved = rg - _rank(sub @ g)
    excess = nullity - preserved
    return excess == 0, excess


def find_maximal_wellconstrained(gcs: Gcs, jm: JacobianMatrix) -> list[WellConstrainedPart]:
    """Grow maximal internally well-constrained entity sets from each seed.

    Growth keeps the part well-constrained at every step; maximality is
    certified by single-entity extension tests (which the greedy stopping
    rule makes true by construction).
    """
    entities = list(gcs.entities)
    if not entities:
        return []
    whole = set(entities)
    well_whole, _ = _subsystem_state(gcs, jm, whole)
    if well_whole:
        return [_part_for(gcs, whole)]

    found: dict[frozenset, WellConstrainedPart] = {}
    for seed in entities:
        part = {seed}
        while True:
            best = None
            for e in entities:
                if e in part:
                    continue
                ok, _ = _subsystem_state(gcs, jm, part | {e})
                if ok:
                    linked = sum(1 for c in gcs.constraints
                                 if e in c.refs and set(c.refs) <= part | {e})
                    key = (-linked, e)
                    if best is None or key < best[0]:
                        best = (key, e)
            if best is None:
                break
            part.add(best[1])
        found.setdefault(frozenset(part), _part_for(gcs, part))
    return sorted(found.values(), key=lambda p: (len(p.entities), p.entities))


def _part_for(gcs: Gcs, entities: set[int]) -> WellConstrainedPart:
    cids = [c.id for c in gcs.constraints if set(c.refs) <= entities]
    return WellConstrainedPart(entities=sorted(entities), constraint_ids=sorted(cids))
