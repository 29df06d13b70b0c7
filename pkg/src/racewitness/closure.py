"""Trace-closure of partial orders over feasible event sets.

A partial order is kept as per-thread chains plus cross edges in a
reachability structure.  Closing repeatedly applies the observation and lock
rules to newly implied orderings until a fixpoint, or reports infeasibility
when a required ordering would close a cycle.  The closure is unique, so the
worklist discipline only affects edge insertion order, not the result.
"""

from __future__ import annotations

from bisect import bisect_left
from collections import deque

from .dagreach import CycleError, PartialOrderDS
from .model import ACQUIRE, READ, RELEASE, Trace, WRITE


class Infeasible:
    """Verdict value: the set admits no trace-closed partial order."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFEASIBLE"


INFEASIBLE = Infeasible()


class ClosedPO:
    """A partial order over a feasible set X, backed by PartialOrderDS.

    Produced unclosed by :func:`respect_po`; :func:`closure` closes it in
    place.  Single-owner mutable.
    """

    def __init__(self, trace: Trace, positions):
        self.trace = trace
        self.positions = frozenset(positions)
        by_thread: dict[int, list[int]] = {}
        for p in sorted(self.positions):
            by_thread.setdefault(trace.thr[p], []).append(p)
        self.chain_threads = sorted(by_thread)
        self.chains = [by_thread[t] for t in self.chain_threads]
        self.node_of: dict[int, tuple[int, int]] = {}
        for c, chain in enumerate(self.chains):
            for i, p in enumerate(chain):
                self.node_of[p] = (c, i + 1)
        # X is prefix-closed, so per-thread membership is an ordinal bound.
        self.thread_len = {t: len(c) for t, c in zip(self.chain_threads, self.chains)}
        self.ds: PartialOrderDS | None = None
        self.insert_count = 0

    def pos_of(self, node) -> int:
        return self.chains[node[0]][node[1] - 1]

    def query(self, a: int, b: int) -> bool:
        """a <= b in the current order (positions)."""
        return self.ds.query(self.node_of[a], self.node_of[b])

    def unordered(self, a: int, b: int) -> bool:
        return not self.query(a, b) and not self.query(b, a)

    def edges(self):
        """Materialized ordered pairs (quadratic; for tests and debugging)."""
        ps = sorted(self.positions)
        return {(a, b) for a in ps for b in ps if a != b and self.query(a, b)}


def _cross_edges(trace: Trace, positions) -> list[tuple[int, int]]:
    edges = []
    pos_set = positions
    open_acqs: dict[int, list[int]] = {}
    rels: dict[int, list[int]] = {}
    for p in sorted(pos_set):
        kind = trace.kind[p]
        if kind == READ:
            w = trace.obs[p]
            if trace.thr[w] != trace.thr[p]:
                edges.append((w, p))
        elif kind == ACQUIRE:
            m = trace.match[p]
            if m == -1 or m not in pos_set:
                open_acqs.setdefault(trace.tgt[p], []).append(p)
        elif kind == RELEASE:
            rels.setdefault(trace.tgt[p], []).append(p)
        ep = trace.extra_pred.get(p)
        if ep is not None and ep in pos_set:
            edges.append((ep, p))
    for lock, acqs in open_acqs.items():
        for rel in rels.get(lock, ()):
            for acq in acqs:
                if trace.thr[rel] != trace.thr[acq]:
                    edges.append((rel, acq))
    return edges


def respect_po(trace: Trace, positions) -> ClosedPO:
    """Weakest partial order over X that refines program order, orders each
    observation before its read, and orders releases before conflicting open
    acquires.  Raises CycleError when even these orderings are contradictory
    (the set then admits no correct reordering)."""
    po = ClosedPO(trace, positions)
    edges = [(po.node_of[a], po.node_of[b])
             for a, b in _cross_edges(trace, po.positions)]
    po.ds = PartialOrderDS([len(c) for c in po.chains], edges)
    return po


def _obs_pushes(po: ClosedPO, a: int, b: int, out):
    trace, maps = po.trace, po.trace.maps
    ta, tb = trace.thr[a], trace.thr[b]
    locs = maps.wlocs[ta] & (maps.rlocs[tb] | maps.wlocs[tb])
    if not locs:
        return
    pos_set = po.positions
    for x in sorted(locs):
        w = maps.before_write(a, x)
        if w == -1:
            continue
        rlist = maps.r[tb].get(x)
        if rlist:
            # Skip reads observing w itself (they constrain nothing) and push
            # for the first divergent observation; later divergences follow
            # transitively from that write's own observation chain.
            i = bisect_left(rlist, b)
            lim = po.thread_len.get(tb, 0)
            while i < len(rlist):
                r = rlist[i]
                if trace.ord_in_thread[r] > lim:
                    break
                ow = trace.obs[r]
                if ow != w:
                    out.append((w, ow))
                    break
                i += 1
        wbar = maps.after_write(b, x)
        if wbar != -1 and wbar in pos_set:
            readers = maps.flow.get(w)
            if readers:
                for p in readers:
                    fr = maps.flow_read(w, p, po.thread_len.get(p, 0))
                    if fr != -1:
                        out.append((fr, wbar))


def _lock_pushes(po: ClosedPO, a: int, b: int, out):
    trace, maps = po.trace, po.trace.maps
    locks = maps.lockuse[trace.thr[a]] & maps.lockuse[trace.thr[b]]
    if not locks:
        return
    pos_set = po.positions
    for lock in sorted(locks):
        acq1 = maps.before_acquire(a, lock)
        if acq1 == -1:
            continue
        rel1 = trace.match[acq1]
        if rel1 == -1 or rel1 not in pos_set:
            continue
        rel2 = maps.after_release(b, lock)
        if rel2 == -1 or rel2 not in pos_set:
            continue
        acq2 = trace.match[rel2]
        if acq1 != acq2:  # the same critical section constrains nothing
            out.append((rel1, acq2))


def _drain(po: ClosedPO, work, lifo=False):
    """Insert queued orderings and their consequences until fixpoint."""
    ds = po.ds
    node_of = po.node_of
    while work:
        a, b = work.pop() if lifo else work.popleft()
        na, nb = node_of[a], node_of[b]
        if ds.query(nb, na):
            return INFEASIBLE  # cycle formed, abort
        if ds.query(na, nb):
            continue  # edge already present
        new_pairs = ds.insert_with_newpairs(na, nb)
        po.insert_count += 1
        pushes: list[tuple[int, int]] = []
        for nu, nv in new_pairs:
            u, v = po.pos_of(nu), po.pos_of(nv)
            _obs_pushes(po, u, v, pushes)
            _lock_pushes(po, u, v, pushes)
        work.extend(pushes)
    return po


def closure(po: ClosedPO, lifo=False):
    """Smallest trace-closed refinement of the order, or INFEASIBLE."""
    work = deque()
    seeds: list[tuple[int, int]] = []
    for c, chain in enumerate(po.chains):
        for i, p in enumerate(chain):
            for c2 in range(len(po.chains)):
                if c2 == c:
                    v = chain[i + 1] if i + 1 < len(chain) else None
                else:
                    node = po.ds.successor((c, i + 1), c2)
                    v = po.pos_of(node) if node is not None else None
                if v is not None:
                    _obs_pushes(po, p, v, seeds)
                    _lock_pushes(po, p, v, seeds)
    work.extend(seeds)
    return _drain(po, work, lifo=lifo)


def close_set(trace: Trace, positions, lifo=False):
    """respect_po followed by closure; INFEASIBLE when either step fails."""
    try:
        po = respect_po(trace, positions)
    except CycleError:
        return INFEASIBLE
    return closure(po, lifo=lifo)


def insert_and_close(po: ClosedPO, a: int, b: int, lifo=False):
    """Refine a closed order with a <= b and re-close incrementally."""
    work = deque([(a, b)])
    return _drain(po, work, lifo=lifo)
