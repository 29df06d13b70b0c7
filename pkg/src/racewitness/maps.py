"""Nearest-access event maps and per-thread access indexes.

For each thread and variable (or lock), the positions of its accesses are kept
sorted; After/Before lookups are binary searches over them.  The flow map F
links each write to the last read per thread that observes it.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right

from .model import ACQUIRE, READ, RELEASE, Trace, WRITE


class EventMaps:
    def __init__(self, trace: Trace):
        self.trace = trace
        nthreads = len(trace.thread_names)
        # accesses[thread][class][target id] -> sorted positions
        self.w: list[dict[int, list[int]]] = [dict() for _ in range(nthreads)]
        self.r: list[dict[int, list[int]]] = [dict() for _ in range(nthreads)]
        self.la: list[dict[int, list[int]]] = [dict() for _ in range(nthreads)]
        self.lr: list[dict[int, list[int]]] = [dict() for _ in range(nthreads)]
        self.wlocs: list[set[int]] = [set() for _ in range(nthreads)]
        self.rlocs: list[set[int]] = [set() for _ in range(nthreads)]
        self.lockuse: list[set[int]] = [set() for _ in range(nthreads)]
        # flow[write pos][thread] -> (ordinals, positions) of the thread's
        # reads observing the write, ascending.  Keeping them all lets a
        # prefix-restricted view still find its last observing read.
        self.flow: dict[int, dict[int, tuple[list[int], list[int]]]] = {}

        table = {WRITE: self.w, READ: self.r, ACQUIRE: self.la, RELEASE: self.lr}
        for p in range(trace.n):
            kind = trace.kind[p]
            if kind not in table:
                continue
            th, tid = trace.thr[p], trace.tgt[p]
            table[kind][th].setdefault(tid, []).append(p)
            if kind == WRITE:
                self.wlocs[th].add(tid)
            elif kind == READ:
                self.rlocs[th].add(tid)
                ords, positions = self.flow.setdefault(
                    trace.obs[p], {}).setdefault(th, ([], []))
                ords.append(trace.ord_in_thread[p])
                positions.append(p)
            else:
                self.lockuse[th].add(tid)

    # All lookups take and return 0-based positions; -1 means none.

    def _after(self, index, thread, tid, pos):
        lst = index[thread].get(tid)
        if not lst:
            return -1
        i = bisect_left(lst, pos)
        return lst[i] if i < len(lst) else -1

    def _before(self, index, thread, tid, pos):
        lst = index[thread].get(tid)
        if not lst:
            return -1
        i = bisect_right(lst, pos)
        return lst[i - 1] if i > 0 else -1

    def after_write(self, pos, var):
        return self._after(self.w, self.trace.thr[pos], var, pos)

    def before_write(self, pos, var):
        return self._before(self.w, self.trace.thr[pos], var, pos)

    def after_read(self, pos, var):
        return self._after(self.r, self.trace.thr[pos], var, pos)

    def before_read(self, pos, var):
        return self._before(self.r, self.trace.thr[pos], var, pos)

    def after_acquire(self, pos, lock):
        return self._after(self.la, self.trace.thr[pos], lock, pos)

    def before_acquire(self, pos, lock):
        return self._before(self.la, self.trace.thr[pos], lock, pos)

    def after_release(self, pos, lock):
        return self._after(self.lr, self.trace.thr[pos], lock, pos)

    def before_release(self, pos, lock):
        return self._before(self.lr, self.trace.thr[pos], lock, pos)

    def flow_read(self, write_pos, thread, max_ord=None):
        """Last read of the thread observing the write (optionally restricted
        to thread ordinals <= max_ord), or -1."""
        entry = self.flow.get(write_pos, {}).get(thread)
        if not entry:
            return -1
        ords, positions = entry
        if max_ord is None:
            return positions[-1]
        i = bisect_right(ords, max_ord)
        return positions[i - 1] if i else -1
