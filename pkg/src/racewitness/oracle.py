"""Exhaustive ground truth for small traces.

Enumerates every correct reordering by scheduling one enabled event at a time
(reads only when their original write is the latest one), recording each pair
of conflicting events that are simultaneously schedulable next.  This is the
authority behind every derived expected value and differential test.
"""

from __future__ import annotations

import random

from .model import (ACQUIRE, FORK, JOIN, READ, RELEASE, RawEvent, Trace,
                    WRITE, build_trace)

DEFAULT_CAP = 16
HARD_CAP = 20


class TooLarge(Exception):
    pass


def oracle_races(trace: Trace, max_events: int = DEFAULT_CAP) -> set[tuple[int, int]]:
    """All predictable races as (pos1, pos2) pairs ordered by trace position.

    Pairs involving synthesized init writes are not reported, mirroring the
    analysis side.  State space: (per-thread progress, last write per
    variable); lock ownership is implied by thread progress.
    """
    cap = min(max_events, HARD_CAP)
    if trace.n - trace.init_count > cap:
        raise TooLarge(
            f"{trace.n - trace.init_count} events exceeds the oracle cap {cap}")

    nthreads = len(trace.thread_names)
    nvars = len(trace.var_names)
    per_thread = trace.per_thread
    kind, tgt, obs = trace.kind, trace.tgt, trace.obs

    def holder_of(frontier, lock):
        for th in range(nthreads):
            f = frontier[th]
            if f:
                top = trace.stack_top[th][f]
                while top != -1:
                    if tgt[top] == lock:
                        return th
                    top = trace.encl[top]
        return -1

    def po_ready(frontier, pos):
        ep = trace.extra_pred.get(pos)
        if ep is None:
            return True
        return trace.ord_in_thread[ep] <= frontier[trace.thr[ep]]

    init = (tuple(0 for _ in range(nthreads)), tuple([-1] * nvars))
    seen = {init}
    stack = [init]
    races: set[tuple[int, int]] = set()
    while stack:
        frontier, last_write = stack.pop()
        nexts = []
        for th in range(nthreads):
            f = frontier[th]
            if f >= len(per_thread[th]):
                nexts.append(None)
                continue
            pos = per_thread[th][f]
            nexts.append(pos if po_ready(frontier, pos) else None)

        # Racy pairs: both events schedulable next, conflicting, cross-thread.
        for t1 in range(1, nthreads):
            p1 = nexts[t1]
            if p1 is None or kind[p1] not in (READ, WRITE):
                continue
            for t2 in range(t1 + 1, nthreads):
                p2 = nexts[t2]
                if p2 is None or not trace.conflicting(p1, p2):
                    continue
                a, b = (p1, p2) if p1 < p2 else (p2, p1)
                if (a, b) in races:
                    continue
                # The pair is appended in trace order; a leading read needs
                # some write to its variable already scheduled.
                if kind[a] == READ and last_write[tgt[a]] == -1:
                    continue
                races.add((a, b))

        # Transitions: schedule one enabled event.
        for th in range(nthreads):
            pos = nexts[th]
            if pos is None:
                continue
            k = kind[pos]
            if k == READ:
                if last_write[tgt[pos]] != obs[pos]:
                    continue
            elif k == ACQUIRE:
                if holder_of(frontier, tgt[pos]) != -1:
                    continue
            new_front = list(frontier)
            new_front[th] += 1
            if k == WRITE:
                lw = list(last_write)
                lw[tgt[pos]] = pos
                state = (tuple(new_front), tuple(lw))
            else:
                state = (tuple(new_front), last_write)
            if state not in seen:
                seen.add(state)
                stack.append(state)
    return races


def oracle_race_events(trace: Trace, max_events: int = DEFAULT_CAP):
    return {(trace.events[a], trace.events[b])
            for a, b in oracle_races(trace, max_events)}


def random_trace(seed, threads=2, events=10, variables=2, locks=1,
                 synthesize_init=True) -> Trace:
    """Deterministic random well-formed trace for differential testing."""
    rng = random.Random(seed)
    tnames = [f"T{i}" for i in range(1, threads + 1)]
    vnames = [f"x{i}" for i in range(1, variables + 1)]
    lnames = [f"l{i}" for i in range(1, locks + 1)]
    held: dict[str, str] = {}
    stacks: dict[str, list[str]] = {t: [] for t in tnames}
    raw: list[RawEvent] = []
    for _ in range(events):
        tname = rng.choice(tnames)
        ops = [READ, WRITE]
        free = [l for l in lnames if l not in held]
        if free:
            ops.append(ACQUIRE)
        if stacks[tname]:
            ops.append(RELEASE)
        op = rng.choice(ops)
        if op in (READ, WRITE):
            target = rng.choice(vnames)
        elif op == ACQUIRE:
            target = rng.choice(free)
            held[target] = tname
            stacks[tname].append(target)
        else:
            target = stacks[tname].pop()
            del held[target]
        raw.append(RawEvent(tname, op, target, f"L{len(raw) + 1}"))
    return build_trace(raw, synthesize_init=synthesize_init)
