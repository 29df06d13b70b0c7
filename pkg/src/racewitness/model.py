"""Trace model: events, lock matching, observations, program order, feasible sets.

A trace is an immutable, validated sequence of events.  Construction interns
thread/variable/lock names to dense integers, resolves the observation of every
read, matches acquire/release pairs, and wires fork/join edges into the program
order.  Everything downstream (closure, cones, oracle) works on the integer
arrays built here.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

READ = "r"
WRITE = "w"
ACQUIRE = "acq"
RELEASE = "rel"
FORK = "fork"
JOIN = "join"

KINDS = (READ, WRITE, ACQUIRE, RELEASE, FORK, JOIN)

INIT_THREAD = 0
INIT_LOCATION = "<init>"


class MalformedTrace(Exception):
    """Raised when an event sequence violates trace well-formedness."""

    def __init__(self, reason, position=None):
        self.reason = reason
        self.position = position
        suffix = f" (event {position})" if position is not None else ""
        super().__init__(reason + suffix)


@dataclass(frozen=True, slots=True)
class Event:
    """One atomic trace action.

    ``index`` is the 1-based position in the built trace (init writes
    included).  ``thread`` is the dense thread id; 0 is the reserved init
    thread.  ``target`` is a variable, lock, or thread name depending on
    ``kind``.
    """

    index: int
    thread: int
    thread_name: str
    kind: str
    target: str
    location: str | None = None

    @property
    def pos(self) -> int:
        """0-based position in the trace."""
        return self.index - 1

    def __repr__(self):
        loc = f"@{self.location}" if self.location else ""
        return f"<{self.thread_name} {self.kind} {self.target}{loc} #{self.index}>"


@dataclass(frozen=True, slots=True)
class RawEvent:
    """Unvalidated parser/generator output, consumed by build_trace."""

    thread: str
    kind: str
    target: str
    location: str | None = None


class Trace:
    """Immutable validated trace with derived lookup structures.

    Not constructed directly; use :func:`build_trace`.
    """

    def __init__(self):
        self.events: list[Event] = []
        self.n = 0
        self.thread_names: list[str] = ["T0"]
        self.var_names: list[str] = []
        self.lock_names: list[str] = []
        # Parallel arrays, 0-based positions.
        self.kind: list[str] = []
        self.thr: list[int] = []
        self.tgt: list[int] = []          # var id / lock id / thread id by kind
        self.ord_in_thread: list[int] = []  # 1-based ordinal within the thread
        self.obs: list[int] = []          # read pos -> observed write pos, else -1
        self.match: list[int] = []        # acq<->rel positions, else -1
        self.encl: list[int] = []         # innermost enclosing acquire pos, else -1
        self.per_thread: list[list[int]] = []
        self.stack_top: list[list[int]] = []  # per thread, per prefix length
        self.extra_pred: dict[int, int] = {}  # fork/join cross-thread PO edges
        self.extra_succ: dict[int, list[int]] = {}
        self.first_write: dict[int, int] = {}  # var id -> earliest write pos
        self.init_count = 0
        self.warnings: list[str] = []
        self._maps = None

    # -- basic queries ------------------------------------------------------

    @property
    def k(self) -> int:
        """Number of real threads (init thread excluded)."""
        return len(self.thread_names) - 1

    @property
    def threads(self) -> list[int]:
        return [t for t in range(1, len(self.thread_names))]

    @property
    def locations(self) -> list[str]:
        return list(self.var_names)

    @property
    def locks(self) -> list[str]:
        return list(self.lock_names)

    def event(self, index: int) -> Event:
        return self.events[index - 1]

    def original_event(self, i: int) -> Event:
        """The i-th (1-based) non-init event, matching source numbering."""
        return self.events[self.init_count + i - 1]

    def display_label(self, pos: int) -> str:
        if self.thr[pos] == INIT_THREAD:
            return f"i{pos + 1}"
        return f"e{pos + 1 - self.init_count}"

    def is_init(self, pos: int) -> bool:
        return self.thr[pos] == INIT_THREAD

    def conflicting(self, a: int, b: int) -> bool:
        """Read/write conflict: same variable, at least one write."""
        ka, kb = self.kind[a], self.kind[b]
        if ka not in (READ, WRITE) or kb not in (READ, WRITE):
            return False
        return self.tgt[a] == self.tgt[b] and (ka == WRITE or kb == WRITE)

    def conflicting_or_lock(self, a: int, b: int) -> bool:
        """Conflict extended to lock events: same-lock acquire/release pairs."""
        ka, kb = self.kind[a], self.kind[b]
        if ka in (ACQUIRE, RELEASE) and kb in (ACQUIRE, RELEASE):
            return self.tgt[a] == self.tgt[b]
        return self.conflicting(a, b)

    def locks_held_at(self, thread: int, prefix_len: int) -> list[int]:
        """Open acquire positions after the thread executed prefix_len events."""
        top = self.stack_top[thread][prefix_len]
        out = []
        while top != -1:
            out.append(top)
            top = self.encl[top]
        return out

    def locks_held_by_event(self, pos: int) -> set[int]:
        """Lock ids guarding the given event (its enclosing critical sections)."""
        out = set()
        a = pos if self.kind[pos] == ACQUIRE else self.encl[pos]
        while a != -1:
            out.add(self.tgt[a])
            a = self.encl[a]
        return out

    @property
    def maps(self):
        if self._maps is None:
            from .maps import EventMaps

            self._maps = EventMaps(self)
        return self._maps


def build_trace(raw_events, synthesize_init=True) -> Trace:
    """Validate a raw event sequence and build the trace model.

    With ``synthesize_init`` (default), one write per variable is prepended on
    the reserved init thread so every read has an observation; those events are
    excluded from race reporting.  Without it, a read of a never-written
    variable is an error.
    """
    raw = list(raw_events)
    if not raw:
        raise MalformedTrace("empty trace")

    thread_ids: dict[str, int] = {}
    var_ids: dict[str, int] = {}
    lock_ids: dict[str, int] = {}
    t = Trace()

    def intern_thread(name: str) -> int:
        if name not in thread_ids:
            thread_ids[name] = len(t.thread_names)
            t.thread_names.append(name)
            t.per_thread.append([])
        return thread_ids[name]

    t.per_thread.append([])  # init thread

    # First pass: discover variables so init writes can be synthesized in
    # first-appearance order.
    for i, ev in enumerate(raw, 1):
        if ev.kind not in KINDS:
            raise MalformedTrace(f"unknown event kind {ev.kind!r}", i)
        if ev.kind in (READ, WRITE) and ev.target not in var_ids:
            var_ids[ev.target] = len(t.var_names)
            t.var_names.append(ev.target)
        elif ev.kind in (ACQUIRE, RELEASE) and ev.target not in lock_ids:
            lock_ids[ev.target] = len(t.lock_names)
            t.lock_names.append(ev.target)

    combined: list[tuple[str, str, str, str | None]] = []
    if synthesize_init:
        for name in t.var_names:
            combined.append(("T0", WRITE, name, INIT_LOCATION))
        t.init_count = len(t.var_names)
    combined.extend((ev.thread, ev.kind, ev.target, ev.location) for ev in raw)

    holder: dict[int, int] = {}          # lock id -> acquire pos
    per_thread_stack: dict[int, list[int]] = {}
    last_write: dict[int, int] = {}      # var id -> pos
    forked: dict[int, int] = {}          # thread id -> fork pos
    joined: dict[int, int] = {}          # thread id -> join pos

    for pos, (tname, kind, target, location) in enumerate(combined):
        if tname == "T0" and pos < t.init_count:
            thread = INIT_THREAD
        else:
            thread = intern_thread(tname)
        if kind in (READ, WRITE):
            tid = var_ids[target]
        elif kind in (ACQUIRE, RELEASE):
            tid = lock_ids[target]
        else:
            tid = intern_thread(target)

        ev = Event(pos + 1, thread, "T0" if thread == INIT_THREAD else tname,
                   kind, target, location)
        t.events.append(ev)
        t.kind.append(kind)
        t.thr.append(thread)
        t.tgt.append(tid)
        t.per_thread[thread].append(pos)
        t.ord_in_thread.append(len(t.per_thread[thread]))
        t.obs.append(-1)
        t.match.append(-1)
        stack = per_thread_stack.setdefault(thread, [])
        t.encl.append(stack[-1] if stack else -1)

        src = pos + 1 - t.init_count  # 1-based source event number

        if thread in joined:
            raise MalformedTrace(
                f"thread {tname} has events after being joined", src)
        if kind == READ:
            if tid not in last_write:
                raise MalformedTrace(
                    f"read of never-written variable {target}", src)
            t.obs[pos] = last_write[tid]
        elif kind == WRITE:
            last_write[tid] = pos
            t.first_write.setdefault(tid, pos)
        elif kind == ACQUIRE:
            if tid in holder:
                other = holder[tid]
                if t.thr[other] == thread:
                    raise MalformedTrace(
                        f"re-entrant acquire of lock {target}", src)
                raise MalformedTrace(
                    f"acquire of lock {target} already held by "
                    f"{t.thread_names[t.thr[other]]}", src)
            holder[tid] = pos
            stack.append(pos)
            t.encl[pos] = stack[-2] if len(stack) > 1 else -1
        elif kind == RELEASE:
            if tid not in holder:
                raise MalformedTrace(f"release of free lock {target}", src)
            acq = holder[tid]
            if t.thr[acq] != thread:
                raise MalformedTrace(
                    f"release of lock {target} held by another thread", src)
            if stack[-1] != acq:
                raise MalformedTrace(
                    f"non-well-nested critical sections at release of {target}",
                    src)
            stack.pop()
            del holder[tid]
            t.match[acq] = pos
            t.match[pos] = acq
        elif kind == FORK:
            if tid == thread:
                raise MalformedTrace("thread forks itself", src)
            if tid in forked:
                t.warnings.append(
                    f"duplicate fork of {target} ignored (event {src})")
                log.debug("duplicate fork of %s ignored", target)
            elif t.per_thread[tid]:
                raise MalformedTrace(
                    f"forked thread {target} already has events", src)
            else:
                forked[tid] = pos
        elif kind == JOIN:
            if tid == thread:
                raise MalformedTrace("thread joins itself", src)
            if not t.per_thread[tid]:
                t.warnings.append(
                    f"join of never-started thread {target} skipped (event {src})")
                log.debug("join of never-started thread %s skipped", target)
            else:
                joined[tid] = pos
                last = t.per_thread[tid][-1]
                t.extra_pred[pos] = last
                t.extra_succ.setdefault(last, []).append(pos)

    for child, fpos in forked.items():
        if t.per_thread[child]:
            first = t.per_thread[child][0]
            t.extra_pred[first] = fpos
            t.extra_succ.setdefault(fpos, []).append(first)
        else:
            t.warnings.append(
                f"fork of thread {t.thread_names[child]} with no events")

    t.n = len(t.events)
    # Open-acquire stack snapshots per thread prefix length.
    for thread, positions in enumerate(t.per_thread):
        tops = [-1]
        for p in positions:
            if t.kind[p] == ACQUIRE:
                tops.append(p)
            elif t.kind[p] == RELEASE:
                tops.append(t.encl[t.match[p]])
            else:
                tops.append(tops[-1])
        t.stack_top.append(tops)
    return t


class EventSet:
    """A subset of trace events: membership set plus per-thread frontier."""

    def __init__(self, trace: Trace, positions):
        self.trace = trace
        self.positions = frozenset(positions)
        frontier = [0] * len(trace.thread_names)
        for p in self.positions:
            o = trace.ord_in_thread[p]
            th = trace.thr[p]
            if o > frontier[th]:
                frontier[th] = o
        self.frontier = tuple(frontier)

    @classmethod
    def of_events(cls, trace: Trace, events) -> "EventSet":
        return cls(trace, (e.pos for e in events))

    def __contains__(self, item):
        pos = item.pos if isinstance(item, Event) else item
        return pos in self.positions

    def __len__(self):
        return len(self.positions)

    def events(self) -> list[Event]:
        return [self.trace.events[p] for p in sorted(self.positions)]

    def is_prefix_closed(self) -> bool:
        t = self.trace
        for p in self.positions:
            o = t.ord_in_thread[p]
            if o > 1 and t.per_thread[t.thr[p]][o - 2] not in self.positions:
                return False
            ep = t.extra_pred.get(p)
            if ep is not None and ep not in self.positions:
                return False
        return True

    def matches_frontier(self) -> bool:
        """True iff the membership set equals its frontier representation."""
        total = sum(self.frontier)
        return self.is_prefix_closed() and total == len(self.positions)


def open_acquires(trace: Trace, xset: EventSet) -> set[Event]:
    """Acquires in the set whose matching release is outside it."""
    out = set()
    for p in xset.positions:
        if trace.kind[p] == ACQUIRE:
            m = trace.match[p]
            if m == -1 or m not in xset.positions:
                out.add(trace.events[p])
    return out


def is_feasible(trace: Trace, xset: EventSet) -> bool:
    """Prefix-closed, observation-feasible, and lock-feasible."""
    if not xset.is_prefix_closed():
        return False
    for p in xset.positions:
        if trace.kind[p] == READ and trace.obs[p] not in xset.positions:
            return False
        if trace.kind[p] == RELEASE and trace.match[p] not in xset.positions:
            return False
    seen_locks = set()
    for ev in open_acquires(trace, xset):
        lid = trace.tgt[ev.pos]
        if lid in seen_locks:
            return False
        seen_locks.add(lid)
    return True
