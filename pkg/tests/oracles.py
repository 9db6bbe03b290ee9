"""Independent test oracles.

These deliberately avoid the code paths they check: dense sampling instead of
analytic event roots, finite differences instead of analytic gradients,
exhaustive subset enumeration instead of sparse recovery.
"""
from __future__ import annotations

import numpy as np

from vdm.direct_edit import regenerate_boundary


def signature(solid, edit, dt, tol):
    regen = regenerate_boundary(solid, edit, dt, tol)
    if regen.is_valid:
        return frozenset()
    return frozenset((v.kind, frozenset(v.faces)) for v in regen.report.violations)


def bisect_change(solid, edit, t0, lo, hi, tol, depth=40, eps=1e-8):
    """Refine a signature change inside (lo, hi) to within eps."""
    sig_lo = signature(solid, edit, lo - t0, tol)
    for _ in range(depth):
        if hi - lo <= eps:
            break
        mid = 0.5 * (lo + hi)
        if signature(solid, edit, mid - t0, tol) == sig_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sampled_transitions(solid, edit, t0, tol, dt=1e-3, eps=1e-8):
    """All violation-signature transition points of fixed-topology
    regeneration over (t0, 1], by dense sampling + bisection.

    The baseline signature is taken just after t0: a model sitting exactly at
    a repaired contact pose is degenerate for any further motion, and that
    standing condition is not a new event.
    """
    start = t0 + 1e-6
    if start >= 1.0:
        return []
    ts = np.arange(start, 1.0 + dt * 0.5, dt)
    ts[-1] = 1.0
    sigs = [signature(solid, edit, t - t0, tol) for t in ts]
    out = []
    for k in range(len(ts) - 1):
        if sigs[k] != sigs[k + 1]:
            out.append(bisect_change(solid, edit, t0, ts[k], ts[k + 1], tol,
                                     eps=eps))
    return out


def _merge_close(ts, window=2e-6):
    """Collapse transition samples within one validity-fuzz band."""
    out = []
    for t in ts:
        if out and t - out[-1][-1] <= window:
            out[-1].append(t)
        else:
            out.append([t])
    return [c[0] for c in out]


def oracle_gtips(solid, edit, tol, dt=1e-3, max_events=16):
    """Per-segment sampling oracle for event detection.

    Each segment's transitions come purely from dense sampling + bisection of
    the fixed-topology violation signature -- independent of the analytic
    candidate enumeration. Advancing between segments uses the kernel's own
    exact event landing, which is the subject under test anyway; a detection
    disagreement (missed, spurious, or shifted events) still surfaces because
    every segment is sampled.

    Returns (oracle transition list, detected event list).
    """
    from vdm.direct_edit import _EditState
    from vdm.gtip import next_gtip

    state = _EditState(solid, edit)
    oracle_ts = []
    detected_ts = []
    for _ in range(max_events):
        trans = _merge_close(sampled_transitions(state.solid, state.edit,
                                                 state.t, tol, dt=dt))
        ev = next_gtip(state.solid, state.edit, state.t, tol)
        if ev is None:
            oracle_ts.extend(trans)  # anything left is a detection miss
            break
        detected_ts.append(ev.t_event)
        if trans:
            oracle_ts.append(trans[0])
        try:
            state.advance_to(ev.t_event, tol, boolean_landing=True)
        except Exception:
            break
        if state.t >= 1.0 - 1e-9 or not state.faces_alive:
            # transitions beyond the motion end or after the moved faces were
            # consumed are unreachable for both sides
            break
    return oracle_ts, detected_ts


def fd_jacobian(system, q, step=1e-6):
    """Central finite differences of the residual system."""
    m = len(system.rows)
    n = len(q)
    out = np.zeros((m, n))
    for k in range(n):
        h = step * max(1.0, abs(q[k]))
        qp = q.copy()
        qm = q.copy()
        qp[k] += h
        qm[k] -= h
        out[:, k] = (system.residuals(qp) - system.residuals(qm)) / (2 * h)
    return out


def enumerate_circuits(ju, labels):
    """All minimal dependent constraint subsets, written independently of the
    package's enumeration (same brute force, different code path)."""
    from itertools import combinations
    cids = sorted(set(labels))
    rows_of = {c: [i for i, l in enumerate(labels) if l == c] for c in cids}

    def dependent(subset):
        rows = [i for c in subset for i in rows_of[c]]
        sub = ju[rows]
        if sub.size == 0:
            return False
        s = np.linalg.svd(sub, compute_uv=False)
        rank = int(np.sum(s > s[0] * 1e-9)) if s.size and s[0] > 0 else 0
        return rank < len(rows)

    circuits = []
    for size in range(1, len(cids) + 1):
        for sub in combinations(cids, size):
            if any(set(c) <= set(sub) for c in circuits):
                continue
            if dependent(sub):
                circuits.append(sub)
    return sorted(tuple(sorted(c)) for c in circuits)
