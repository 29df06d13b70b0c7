"""The full-trace analysis driver.

A cheap clock pass narrows the candidate pairs (conflicting, not ordered by
the must-precede relation, not guarded by a common lock); each surviving pair
is settled by the joint-cone fast path or the per-pair decision procedure.
Alongside the race set Z, a ledger C collects rejections that rested on
arbitrary choices: when C is empty, the race set is provably exhaustive.
"""

from __future__ import annotations

import os
from bisect import bisect_right
from dataclasses import dataclass, field

from .cones import PairCone
from .decision import race_decision
from .model import ACQUIRE, Event, FORK, JOIN, READ, RELEASE, Trace, WRITE
from .validity import exhibits_race


@dataclass(frozen=True)
class RaceReport:
    e1: Event
    e2: Event
    witness: tuple[Event, ...]
    fast_path: bool
    cp4_used: bool
    insert_and_close_used: bool

    @property
    def pair(self):
        return (self.e1.pos, self.e2.pos)


@dataclass(frozen=True)
class MissedCandidate:
    """A rejected pair whose rejection is not certificate-grade."""

    e1: Event
    e2: Event
    cp4_used: bool
    insert_and_close_used: bool

    @property
    def pair(self):
        return (self.e1.pos, self.e2.pos)


@dataclass
class RaceSet:
    races: list[RaceReport] = field(default_factory=list)
    possibly_missed: list[MissedCandidate] = field(default_factory=list)
    candidate_count: int = 0
    truncated: bool = False

    def pairs(self) -> set[tuple[int, int]]:
        return {r.pair for r in self.races}

    @property
    def dynamically_complete(self) -> bool:
        return not self.possibly_missed and not self.truncated


@dataclass
class CandidateSet:
    pairs: list[tuple[int, int]]
    racy_locations: set[int]
    truncated: bool = False


def build_po_with_forkjoin(trace: Trace):
    """Program order as per-thread chains plus fork/join cross edges."""
    edges = sorted((p, s) for s, p in trace.extra_pred.items())
    return {"chains": [list(c) for c in trace.per_thread], "edges": edges}


class _ClockPass:
    """Streaming must-precede clocks: program order, observations, fork/join."""

    def __init__(self, trace: Trace):
        self.trace = trace
        n = len(trace.thread_names)
        self.nthreads = n
        self.clock = [[0] * n for _ in range(n)]
        self.write_clock: dict[int, list[int]] = {}
        self.pending_fork: dict[int, list[int]] = {}
        self.started: set[int] = set()

    def pre_clock(self, pos: int) -> list[int]:
        t = self.trace
        th = t.thr[pos]
        if th not in self.started:
            self.started.add(th)
            init = self.pending_fork.get(th)
            if init is not None:
                self._join(self.clock[th], init)
        return self.clock[th]

    def advance(self, pos: int):
        t = self.trace
        th = t.thr[pos]
        c = self.clock[th]
        kind = t.kind[pos]
        if kind == READ:
            wc = self.write_clock.get(t.obs[pos])
            if wc is not None:
                self._join(c, wc)
        elif kind == JOIN:
            child = t.tgt[pos]
            if t.per_thread[child]:
                self._join(c, self.clock[child])
        c[th] += 1
        if kind == WRITE:
            self.write_clock[pos] = c.copy()
        elif kind == FORK:
            self.pending_fork[t.tgt[pos]] = c.copy()

    @staticmethod
    def _join(a, b):
        for i, v in enumerate(b):
            if v > a[i]:
                a[i] = v


def prune_candidates(trace: Trace, max_pairs: int | None = None) -> CandidateSet:
    """Conflicting pairs that survive must-precede ordering and common-lock
    protection; every predictable race is among them."""
    # Pass 1: find locations with at least one unordered conflicting pair.
    accesses: dict[int, dict[int, tuple[list[int], list[int], list[int], list[int]]]] = {}
    racy: set[int] = set()
    cp = _ClockPass(trace)
    for pos in range(trace.n):
        kind = trace.kind[pos]
        if kind in (READ, WRITE):
            var = trace.tgt[pos]
            th = trace.thr[pos]
            pre = cp.pre_clock(pos)
            if var not in racy:
                per_var = accesses.setdefault(var, {})
                for q, (words, _, rords, _) in per_var.items():
                    if q == th:
                        continue
                    if bisect_right(words, pre[q]) < len(words):
                        racy.add(var)
                        break
                    if kind == WRITE and bisect_right(rords, pre[q]) < len(rords):
                        racy.add(var)
                        break
            entry = accesses.setdefault(var, {}).setdefault(
                th, ([], [], [], []))
            if kind == WRITE:
                entry[0].append(trace.ord_in_thread[pos])
                entry[1].append(pos)
            else:
                entry[2].append(trace.ord_in_thread[pos])
                entry[3].append(pos)
        else:
            cp.pre_clock(pos)
        cp.advance(pos)
    if not racy:
        return CandidateSet([], racy)

    # Pass 2: enumerate unordered pairs on racy locations, dropping pairs
    # guarded by a common lock (these can never be adjacent in any trace).
    pairs: list[tuple[int, int]] = []
    truncated = False
    accesses = {}
    cp = _ClockPass(trace)
    for pos in range(trace.n):
        kind = trace.kind[pos]
        if kind in (READ, WRITE) and trace.tgt[pos] in racy and not truncated:
            var = trace.tgt[pos]
            th = trace.thr[pos]
            pre = cp.pre_clock(pos)
            held = None
            per_var = accesses.setdefault(var, {})
            for q, (words, wpos, rords, rpos) in per_var.items():
                if q == th:
                    continue
                lists = ((words, wpos),) if kind == READ else ((words, wpos), (rords, rpos))
                for ords, positions in lists:
                    i = bisect_right(ords, pre[q])
                    for f in positions[i:]:
                        if trace.is_init(f):
                            continue
                        if held is None:
                            held = trace.locks_held_by_event(pos)
                        if held and held & trace.locks_held_by_event(f):
                            continue
                        pairs.append((f, pos))
                        if max_pairs is not None and len(pairs) >= max_pairs:
                            truncated = True
                            break
                    if truncated:
                        break
                if truncated:
                    break
            if not trace.is_init(pos):
                entry = per_var.setdefault(th, ([], [], [], []))
                if kind == WRITE:
                    entry[0].append(trace.ord_in_thread[pos])
                    entry[1].append(pos)
                else:
                    entry[2].append(trace.ord_in_thread[pos])
                    entry[3].append(pos)
        else:
            cp.pre_clock(pos)
        cp.advance(pos)
    pairs.sort()
    return CandidateSet(pairs, racy, truncated)


def _fast_witness(trace: Trace, pc: PairCone, a: int, b: int):
    events = tuple(trace.events[p] for p in pc.positions())
    return events + (trace.events[a], trace.events[b])


def _scan_group(trace: Trace, anchor: int, partners: list[int]):
    """Analyze (anchor, b) for partners after the anchor, sharing one cone."""
    races: list[RaceReport] = []
    missed: list[MissedCandidate] = []
    pc = PairCone(trace, anchor)
    e1 = trace.events[anchor]

    def reject(b: int, cone: PairCone, iac=False, cp4=None):
        cp4 = cone.cp4_used if cp4 is None else cp4
        if cp4 or iac:
            missed.append(MissedCandidate(e1, trace.events[b], cp4, iac))

    idx = 0
    while idx < len(partners):
        b = partners[idx]
        if pc.lock_doomed:
            # A previous extension wedged this cone; restart for this partner.
            pc = PairCone(trace, anchor)
        if pc.contains(b):
            reject(b, pc)
            idx += 1
            continue
        pc.extend(b)
        if pc.contains(anchor):
            # The anchor is needed before b (and every later partner).
            for rest in partners[idx:]:
                reject(rest, pc)
            return races, missed
        if pc.lock_doomed or pc.contains(b):
            reject(b, pc)
            idx += 1
            continue
        if not pc.open_acquires():
            witness = _fast_witness(trace, pc, anchor, b)
            e2 = trace.events[b]
            if not exhibits_race(witness, e1, e2, trace):
                raise AssertionError(
                    f"fast-path witness failed verification for "
                    f"({e1.index}, {e2.index})")
            races.append(RaceReport(e1, e2, witness, True,
                                    pc.cp4_used, False))
        else:
            d = race_decision(trace, e1, trace.events[b], pair_cone=pc)
            if d.is_race:
                races.append(RaceReport(d.e1, d.e2, d.witness, False,
                                        d.cp4_used, d.insert_and_close_used))
            else:
                reject(b, pc, iac=d.insert_and_close_used, cp4=d.cp4_used)
        idx += 1
    return races, missed


def m2_scan(trace: Trace, e1: Event, p: int, partners=None):
    """Races between e1 and events of process p (both directions)."""
    if p == trace.thr[e1.pos]:
        raise ValueError("p must be a different process")
    if partners is None:
        partners = [b for b in trace.per_thread[p]
                    if trace.conflicting(e1.pos, b)]
    anchor = e1.pos
    before = [b for b in partners if b < anchor]
    after = [b for b in partners if b > anchor]
    races: list[RaceReport] = []
    missed: list[MissedCandidate] = []
    for b in before:
        r, m = _scan_group(trace, b, [anchor])
        races.extend(r)
        missed.extend(m)
    r, m = _scan_group(trace, anchor, after)
    races.extend(r)
    missed.extend(m)
    return races, missed


def _run_groups(trace: Trace, groups):
    out = []
    for anchor, partners in groups:
        out.append(_scan_group(trace, anchor, partners))
    return out


_WORKER_TRACE: Trace | None = None


def _pool_init(trace):
    global _WORKER_TRACE
    _WORKER_TRACE = trace


def _pool_run(args):
    return _run_groups(_WORKER_TRACE, args)


def m2(trace: Trace, jobs: int = 1, max_pairs: int | None = None) -> RaceSet:
    """All predictable races of the trace, with verified witnesses and the
    possibly-missed ledger."""
    cands = prune_candidates(trace, max_pairs=max_pairs)
    # One scan unit per (anchor, partner thread): cones grow monotonically
    # only along a single thread's partners.
    grouped: dict[tuple[int, int], list[int]] = {}
    for a, b in cands.pairs:
        grouped.setdefault((a, trace.thr[b]), []).append(b)
    groups = [(key[0], sorted(bs)) for key, bs in sorted(grouped.items())]

    result = RaceSet(candidate_count=len(cands.pairs), truncated=cands.truncated)
    if jobs <= 1 or len(groups) <= 1:
        chunk_results = _run_groups(trace, groups)
    else:
        import concurrent.futures as cf

        indexed = list(enumerate(groups))
        chunks = [indexed[i::jobs] for i in range(jobs)]
        chunks = [c for c in chunks if c]
        with cf.ProcessPoolExecutor(max_workers=len(chunks),
                                    initializer=_pool_init,
                                    initargs=(trace,)) as pool:
            nested = pool.map(_pool_run, [[g for _, g in c] for c in chunks])
        # Restore the deterministic group order.
        by_index = {}
        for chunk, res in zip(chunks, nested):
            for (i, _), r in zip(chunk, res):
                by_index[i] = r
        chunk_results = [by_index[i] for i in range(len(groups))]
    for r, m in chunk_results:
        result.races.extend(r)
        result.possibly_missed.extend(m)
    result.races.sort(key=lambda r: r.pair)
    result.possibly_missed.sort(key=lambda m: m.pair)
    return result


def default_jobs() -> int:
    env = os.environ.get("RACEWITNESS_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1
