"""Relative causal cones: the least feasible past needed to enable an event.

A cone is kept as a per-thread frontier (prefix lengths), grown monotonically:
program-order predecessors, observations of included reads, fork/join
predecessors, and a first write for a racy read are pulled in; critical
sections left open by a pull are completed when the lock is contended, since
at most one critical section per lock may stay open in a feasible set.
Lock completions record the cp4 flag: they are the one trace-order-arbitrary
choice, and rejections depending on them are only conditionally trustworthy.
"""

from __future__ import annotations

from .model import ACQUIRE, Event, READ, Trace


class _FrontierSet:
    """Monotone per-thread frontier with pull-closure under PO/obs edges."""

    __slots__ = ("trace", "frontier", "cp4_used", "lock_doomed", "_pending")

    def __init__(self, trace: Trace):
        self.trace = trace
        self.frontier = [0] * len(trace.thread_names)
        self.cp4_used = False
        self.lock_doomed = False  # two uncompletable sections on one lock
        self._pending: list[tuple[int, int]] = []

    # -- membership ---------------------------------------------------------

    def contains_pos(self, pos: int) -> bool:
        t = self.trace
        return t.ord_in_thread[pos] <= self.frontier[t.thr[pos]]

    def positions(self):
        t = self.trace
        out = []
        for th, f in enumerate(self.frontier):
            out.extend(t.per_thread[th][:f])
        return sorted(out)

    def open_acquires(self) -> list[int]:
        t = self.trace
        out = []
        for th, f in enumerate(self.frontier):
            if f:
                top = t.stack_top[th][f]
                while top != -1:
                    if t.match[top] == -1 or not self.contains_pos(t.match[top]):
                        out.append(top)
                    top = t.encl[top]
        return out

    # -- growth -------------------------------------------------------------

    def pull(self, pos: int):
        t = self.trace
        self._pending.append((t.thr[pos], t.ord_in_thread[pos]))

    def pull_prefix(self, thread: int, upto_ord: int):
        self._pending.append((thread, upto_ord))

    def _scan(self):
        t = self.trace
        frontier = self.frontier
        pending = self._pending
        while pending:
            thread, upto = pending.pop()
            f = frontier[thread]
            if upto <= f:
                continue
            events = t.per_thread[thread]
            frontier[thread] = upto
            for o in range(f, upto):
                p = events[o]
                if t.kind[p] == READ:
                    w = t.obs[p]
                    if t.ord_in_thread[w] > frontier[t.thr[w]]:
                        pending.append((t.thr[w], t.ord_in_thread[w]))
                ep = t.extra_pred.get(p)
                if ep is not None and t.ord_in_thread[ep] > frontier[t.thr[ep]]:
                    pending.append((t.thr[ep], t.ord_in_thread[ep]))

    def settle(self, unclosable, lock_trigger=None):
        """Run pulls to fixpoint, completing contended open sections.

        ``unclosable(acq_pos)`` says a section may not be completed (it guards
        a racy anchor or never releases).  ``lock_trigger(lock_id)`` may force
        completion even without a second open section on the lock.
        """
        t = self.trace
        self._scan()
        while True:
            by_lock: dict[int, list[int]] = {}
            for acq in self.open_acquires():
                by_lock.setdefault(t.tgt[acq], []).append(acq)
            to_close = None
            for lock in sorted(by_lock):
                opens = by_lock[lock]
                triggered = lock_trigger is not None and lock_trigger(lock, opens)
                if len(opens) < 2 and not triggered:
                    continue
                closable = sorted(a for a in opens if not unclosable(a))
                blocked = len(opens) - len(closable)
                if blocked >= 2:
                    # Two sections that can never be completed share a lock:
                    # no feasible superset exists.
                    self.lock_doomed = True
                    return
                allowed_open = 0 if triggered else 1
                if len(closable) > max(0, allowed_open - blocked):
                    to_close = closable[0]  # complete the earliest section
                    break
            if to_close is None:
                return
            self.cp4_used = True
            self.pull(t.match[to_close])
            self._scan()


class Cone:
    """Feasible causal past of one event relative to a foreign process."""

    def __init__(self, trace: Trace, event: Event, process: int, _fs=None):
        self.trace = trace
        self.event = event
        self.process = process
        self._fs = _fs

    @property
    def cp4_used(self) -> bool:
        return self._fs.cp4_used

    @property
    def events(self) -> frozenset:
        return frozenset(self.trace.events[p] for p in self._fs.positions()
                         if p != self.event.pos)

    @property
    def open_acqs(self) -> frozenset:
        return frozenset(self.trace.events[p] for p in self._fs.open_acquires())

    def contains(self, event: Event) -> bool:
        return self._fs.contains_pos(event.pos)


def _anchor_unclosable(trace: Trace, anchors):
    anchor_by_thread = {}
    for pos in anchors:
        o = trace.ord_in_thread[pos]
        th = trace.thr[pos]
        if th not in anchor_by_thread or o < anchor_by_thread[th]:
            anchor_by_thread[th] = o

    def unclosable(acq: int) -> bool:
        rel = trace.match[acq]
        if rel == -1:
            return True
        th = trace.thr[acq]
        a = anchor_by_thread.get(th)
        return a is not None and trace.ord_in_thread[rel] > a

    return unclosable


def _seed(fs: _FrontierSet, trace: Trace, pos: int, first_write=True):
    o = trace.ord_in_thread[pos]
    fs.pull_prefix(trace.thr[pos], o - 1)
    ep = trace.extra_pred.get(pos)
    if ep is not None:
        fs.pull(ep)
    if first_write and trace.kind[pos] == READ:
        # A read is only enabled once its variable has been written.
        fw = trace.first_write.get(trace.tgt[pos])
        if fw is not None and fw < pos:
            fs.pull(fw)


def rcone(trace: Trace, event: Event, process: int) -> Cone:
    """Causal cone of ``event`` relative to ``process``.

    Sections of other threads left open by observation pulls are completed
    when their lock is contended within the cone or used by ``process``
    elsewhere in the trace.
    """
    fs = _FrontierSet(trace)
    _seed(fs, trace, event.pos)
    maps = trace.maps
    epos = event.pos

    def lock_trigger(lock, opens):
        plist = maps.la[process].get(lock)
        if not plist:
            return False
        return any(not fs.contains_pos(a) for a in plist)

    fs.settle(_anchor_unclosable(trace, [epos]), lock_trigger)
    return Cone(trace, event, process, _fs=fs)


def rcone_extend(trace: Trace, cone: Cone, event: Event) -> Cone:
    """Cone for a later event of the same thread, grown incrementally."""
    if trace.thr[event.pos] != trace.thr[cone.event.pos]:
        raise ValueError("extension must stay on the cone's thread")
    if event.pos < cone.event.pos:
        raise ValueError("extension must move forward in program order")
    fs = cone._fs
    _seed(fs, trace, event.pos)
    maps = trace.maps
    process = cone.process

    def lock_trigger(lock, opens):
        plist = maps.la[process].get(lock)
        if not plist:
            return False
        return any(not fs.contains_pos(a) for a in plist)

    fs.settle(_anchor_unclosable(trace, [event.pos]), lock_trigger)
    return Cone(trace, event, process, _fs=fs)


class PairCone:
    """Joint cone of a candidate racy pair, extended partner by partner.

    Holds X = cone(e1, Proc(e2)) union cone(e2, Proc(e1)) as one frontier;
    completions are triggered only by genuine lock contention inside X, with
    sections guarding either racy event never completed.
    """

    def __init__(self, trace: Trace, e1_pos: int):
        self.trace = trace
        self.e1 = e1_pos
        self.e2 = None
        self.fs = _FrontierSet(trace)
        _seed(self.fs, trace, e1_pos)
        self.fs.settle(_anchor_unclosable(trace, [e1_pos]))

    def extend(self, e2_pos: int):
        self.e2 = e2_pos
        # The later racy event, if a read, observes its partner in the witness;
        # no extra first-write pull is needed for it.
        _seed(self.fs, trace := self.trace, e2_pos, first_write=False)
        self.fs.settle(_anchor_unclosable(trace, [self.e1, e2_pos]))

    def contains(self, pos: int) -> bool:
        return self.fs.contains_pos(pos)

    def open_acquires(self):
        return self.fs.open_acquires()

    def positions(self):
        return self.fs.positions()

    @property
    def cp4_used(self):
        return self.fs.cp4_used

    @property
    def lock_doomed(self):
        return self.fs.lock_doomed
