"""Max-min linearization of a closed partial order.

One part of the set (X1, totally ordered) is scheduled as early as the order
allows; every other event waits until it is forced before the X1 cursor.  For
a closed order whose complement X2 is conflict-complete, the result is a
correct reordering of the underlying trace.
"""

from __future__ import annotations

from .model import Trace


class PreconditionViolation(Exception):
    pass


def _linearize_positions(q, x1_order: list[int]) -> list[int]:
    ds = q.ds
    node_of = q.node_of
    chains = q.chains
    nchains = len(chains)
    emitted = [0] * nchains
    x1_idx = 0
    out: list[int] = []
    total = len(q.positions)

    def ready(node) -> bool:
        c, j = node
        if j != emitted[c] + 1:
            return False
        for c2 in range(nchains):
            if c2 == c:
                continue
            p = ds.predecessor(node, c2)
            if p is not None and p[1] > emitted[c2]:
                return False
        return True

    while len(out) < total:
        cursor_node = None
        if x1_idx < len(x1_order):
            cursor_node = node_of[x1_order[x1_idx]]
            if ready(cursor_node):
                c, j = cursor_node
                emitted[c] = j
                out.append(x1_order[x1_idx])
                x1_idx += 1
                continue
        progressed = False
        for c in range(nchains):
            j = emitted[c] + 1
            if j > len(chains[c]):
                continue
            node = (c, j)
            p = chains[c][j - 1]
            if cursor_node is not None:
                if node == cursor_node:
                    continue
                # Unordered events must wait for the X1 cursor.
                if not ds.query(node, cursor_node):
                    continue
            if ready(node):
                emitted[c] = j
                out.append(p)
                progressed = True
                break
        if not progressed:
            raise PreconditionViolation("no linearization step available")
    return out


def max_min(trace: Trace, q, x1_events, x2_events):
    """Linearize q with X1 maximal; returns the events in schedule order.

    Preconditions (checked): X1 and X2 partition the order's event set, X1 is
    totally ordered, and every conflicting pair within X2 is ordered.
    """
    x1 = [e.pos for e in x1_events]
    x2 = [e.pos for e in x2_events]
    if set(x1) | set(x2) != set(q.positions) or set(x1) & set(x2):
        raise PreconditionViolation("X1, X2 must partition the event set")
    for i, a in enumerate(x1):
        for b in x1[i + 1:]:
            if q.unordered(a, b):
                raise PreconditionViolation("X1 is not totally ordered")
    x2s = sorted(x2)
    for i, a in enumerate(x2s):
        for b in x2s[i + 1:]:
            if trace.conflicting_or_lock(a, b) and q.unordered(a, b):
                raise PreconditionViolation("X2 is not conflict-complete")
    order = sorted(x1, key=lambda p: sum(q.query(o, p) for o in x1))
    return [trace.events[p] for p in _linearize_positions(q, order)]


def max_min_thread(q, thread: int) -> list[int]:
    """Internal fast path: X1 is one thread's events; skips validation."""
    if thread in q.chain_threads:
        chain = q.chains[q.chain_threads.index(thread)]
    else:
        chain = []
    return _linearize_positions(q, list(chain))
