"""Independent validity checkers for reorderings and race witnesses.

These simulate a candidate sequence event by event and are deliberately
decoupled from the analysis pipeline: every reported race must pass
:func:`exhibits_race` with its emitted witness.
"""

from __future__ import annotations

from .model import ACQUIRE, Event, FORK, JOIN, READ, RELEASE, Trace, WRITE


def _simulate(trace: Trace, positions, check_obs_until=None):
    """Replay positions as a schedule; return None if valid, else a reason.

    ``check_obs_until``: number of leading events whose reads must observe
    their original writes (a correct-reordering prefix); reads after that only
    need some earlier write to the same variable.
    """
    if check_obs_until is None:
        check_obs_until = len(positions)
    done_per_thread = [0] * len(trace.thread_names)
    holder = {}
    last_write = {}
    executed = set()
    for step, p in enumerate(positions):
        if p in executed:
            return f"event {p + 1} scheduled twice"
        th = trace.thr[p]
        if trace.ord_in_thread[p] != done_per_thread[th] + 1:
            return f"event {p + 1} out of program order"
        ep = trace.extra_pred.get(p)
        if ep is not None and ep not in executed:
            return f"event {p + 1} runs before its fork/join predecessor"
        kind = trace.kind[p]
        tid = trace.tgt[p]
        if kind == ACQUIRE:
            if tid in holder:
                return f"event {p + 1} acquires a held lock"
            holder[tid] = th
        elif kind == RELEASE:
            if holder.get(tid) != th:
                return f"event {p + 1} releases a lock it does not hold"
            del holder[tid]
        elif kind == READ:
            if tid not in last_write:
                return f"event {p + 1} reads never-written variable"
            if step < check_obs_until and last_write[tid] != trace.obs[p]:
                return f"event {p + 1} observes a different write"
        elif kind == WRITE:
            last_write[tid] = p
        executed.add(p)
        done_per_thread[th] += 1
    return None


def is_correct_reordering(t_star, trace: Trace) -> bool:
    """Valid trace whose thread projections are prefixes of the original and
    whose reads observe the same writes."""
    positions = [e.pos if isinstance(e, Event) else e for e in t_star]
    return _simulate(trace, positions) is None


def exhibits_race(t_star, e1, e2, trace: Trace | None = None) -> bool:
    """The sequence ends with the conflicting pair back to back and its prefix
    is a correct reordering."""
    if trace is None:
        raise ValueError("trace required")
    positions = [e.pos if isinstance(e, Event) else e for e in t_star]
    p1 = e1.pos if isinstance(e1, Event) else e1
    p2 = e2.pos if isinstance(e2, Event) else e2
    if len(positions) < 2:
        return False
    tail = positions[-2:]
    if tail != [p1, p2] and tail != [p2, p1]:
        return False
    a, b = tail
    if trace.thr[a] == trace.thr[b]:
        return False
    if not trace.conflicting(a, b):
        return False
    # Prefix must be a correct reordering; the racy pair itself only needs
    # trace validity (its observations are unconstrained).
    return _simulate(trace, positions, check_obs_until=len(positions) - 2) is None
