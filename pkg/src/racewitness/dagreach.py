"""Incremental reachability on DAGs of small width.

The graph is k totally ordered chains plus cross edges.  For each ordered
chain pair a dynamic suffix-minima tree stores, per source position, the
highest position of the target chain known reachable; edge insertion refreshes
the k*k frontier entries, queries are single suffix-minimum lookups.  All
operations are O(log n) after O(n) initialization.
"""

from __future__ import annotations

from collections import deque

INF = 1 << 60


class CycleError(Exception):
    pass


class SuffixMinTree:
    """Array of ints with point lower-updates, suffix minima, and rightmost
    index with value <= bound.  Positions are 1-based."""

    __slots__ = ("n", "size", "vals")

    def __init__(self, n):
        self.n = n
        size = 1
        while size < max(n, 1):
            size *= 2
        self.size = size
        self.vals = [INF] * (2 * size)

    def assign_min(self, i, v):
        """Lower A[i] to v; returns True if the value changed."""
        vals = self.vals
        node = self.size + i - 1
        if vals[node] <= v:
            return False
        vals[node] = v
        node >>= 1
        while node:
            new = min(vals[2 * node], vals[2 * node + 1])
            if vals[node] == new:
                break
            vals[node] = new
            node >>= 1
        return True

    def suffix_min(self, i):
        """min(A[i..n]); INF when empty."""
        vals = self.vals
        lo = self.size + i - 1
        hi = self.size + self.n
        res = INF
        while lo < hi:
            if lo & 1:
                if vals[lo] < res:
                    res = vals[lo]
                lo += 1
            if hi & 1:
                hi -= 1
                if vals[hi] < res:
                    res = vals[hi]
            lo >>= 1
            hi >>= 1
        return res

    def bulk_load(self, values_1based):
        """Overwrite the whole array in O(n); values beyond n stay INF."""
        vals = self.vals
        for j, v in enumerate(values_1based, self.size):
            vals[j] = v
        for node in range(self.size - 1, 0, -1):
            vals[node] = min(vals[2 * node], vals[2 * node + 1])

    def argleq(self, bound):
        """max{j : A[j] <= bound}, or 0 when no entry qualifies."""
        vals = self.vals
        if vals[1] > bound:
            return 0
        node = 1
        while node < self.size:
            node *= 2
            if vals[node + 1] <= bound:
                node += 1
        j = node - self.size + 1
        return j if j <= self.n else 0


class PartialOrderDS:
    """k chains with cross edges; supports insert/query/successor/predecessor.

    Nodes are (chain, pos) pairs with 1-based positions.  Trees are allocated
    lazily per ordered chain pair.
    """

    def __init__(self, chain_lens, cross_edges=()):
        self.chain_lens = list(chain_lens)
        self.k = len(self.chain_lens)
        self.trees: dict[tuple[int, int], SuffixMinTree] = {}
        self._init_edges(list(cross_edges))

    def _tree(self, i1, i2):
        t = self.trees.get((i1, i2))
        if t is None:
            t = self.trees[(i1, i2)] = SuffixMinTree(self.chain_lens[i1])
        return t

    def _init_edges(self, edges):
        # Kahn pass over chain edges + cross edges: cycle detection and a
        # topological order for the reverse reachability sweep.
        total = sum(self.chain_lens)
        if total == 0:
            if edges:
                raise CycleError("edges on empty graph")
            return
        out_cross: dict[tuple[int, int], list[tuple[int, int]]] = {}
        indeg: dict[tuple[int, int], int] = {}
        for u, v in edges:
            self._check_node(u)
            self._check_node(v)
            if u[0] == v[0]:
                if v[1] < u[1]:
                    raise CycleError("backward edge within a chain")
                continue  # forward same-chain edges are implicit
            out_cross.setdefault(u, []).append(v)
            indeg[v] = indeg.get(v, 0) + 1

        chain_done = [0] * self.k
        ready = deque()

        def try_ready(v):
            if chain_done[v[0]] == v[1] - 1 and indeg.get(v, 0) == 0:
                ready.append(v)

        for c, ln in enumerate(self.chain_lens):
            if ln:
                try_ready((c, 1))
        order = []
        while ready:
            u = ready.popleft()
            c, j = u
            chain_done[c] = j
            order.append(u)
            if j < self.chain_lens[c]:
                try_ready((c, j + 1))
            for v in out_cross.get(u, ()):
                indeg[v] -= 1
                try_ready(v)
        if len(order) != total:
            raise CycleError("initial edges close a cycle")

        # Reverse-topological sweep filling reachability frontiers.
        arrays: dict[tuple[int, int], list[int]] = {}

        def arr(i1, i2):
            a = arrays.get((i1, i2))
            if a is None:
                a = arrays[(i1, i2)] = [INF] * (self.chain_lens[i1] + 2)
            return a

        active: list[set[int]] = [set() for _ in range(self.k)]
        for c, j in reversed(order):
            contrib: dict[int, int] = {}
            for (d, q) in out_cross.get((c, j), ()):
                if q < contrib.get(d, INF):
                    contrib[d] = q
                for d2 in active[d]:
                    if d2 != c:
                        val = arrays[(d, d2)][q]
                        if val < contrib.get(d2, INF):
                            contrib[d2] = val
            targets = set(contrib)
            targets.update(d for d in active[c] if arrays[(c, d)][j + 1] < INF)
            for d in targets:
                a = arr(c, d)
                a[j] = min(a[j + 1], contrib.get(d, INF))
                active[c].add(d)
        for (i1, i2), a in arrays.items():
            self._tree(i1, i2).bulk_load(a[1:self.chain_lens[i1] + 1])

    def _check_node(self, u):
        c, j = u
        if not (0 <= c < self.k) or not (1 <= j <= self.chain_lens[c]):
            raise ValueError(f"node {u} out of range")

    def query(self, u, v) -> bool:
        c1, j1 = u
        c2, j2 = v
        if c1 == c2:
            return j1 <= j2
        t = self.trees.get((c1, c2))
        return t is not None and t.suffix_min(j1) <= j2

    def successor(self, u, i):
        """Highest node of chain i reachable from u, or None."""
        c, j = u
        if c == i:
            return u
        t = self.trees.get((c, i))
        if t is None:
            return None
        m = t.suffix_min(j)
        return (i, m) if m < INF else None

    def predecessor(self, u, i):
        """Lowest node of chain i that reaches u, or None."""
        c, j = u
        if c == i:
            return u
        t = self.trees.get((i, c))
        if t is None:
            return None
        m = t.argleq(j)
        return (i, m) if m else None

    def insert(self, u, v):
        """Add edge u -> v.  Requires that v does not already reach u."""
        self.insert_with_newpairs(u, v)

    def insert_with_newpairs(self, u, v):
        """Insert u -> v; return frontier pairs that became reachable.

        Pairs are (pred-of-u, succ-of-v) per ordered chain pair, restricted to
        those whose reachability was false before the insert, listed in chain
        order.
        """
        self._check_node(u)
        self._check_node(v)
        if self.query(v, u):
            raise CycleError(f"insert {u}->{v} would close a cycle")
        preds = []
        succs = []
        for i in range(self.k):
            p = self.predecessor(u, i)
            if p is not None:
                preds.append(p)
            s = self.successor(v, i)
            if s is not None:
                succs.append(s)
        new_pairs = [(p, s) for p in preds for s in succs if not self.query(p, s)]
        for (c1, j1) in preds:
            for (c2, j2) in succs:
                if c1 != c2:
                    self._tree(c1, c2).assign_min(j1, j2)
        return new_pairs


# Functional aliases mirroring the operation names used elsewhere.

def ds_init(chains, cross_edges=()):
    return PartialOrderDS(chains, cross_edges)


def ds_insert(ds, u, v):
    ds.insert(u, v)


def ds_query(ds, u, v):
    return ds.query(u, v)


def ds_successor(ds, u, i):
    return ds.successor(u, i)


def ds_predecessor(ds, u, i):
    return ds.predecessor(u, i)
