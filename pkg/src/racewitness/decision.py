"""Per-pair race decision with witness synthesis.

The joint causal cone of the candidate pair is closed into a partial order;
conflicting events outside a designated thread are then ordered by trace
order, and a max-min linearization of the survivor yields a witness.  Both
choices of designated thread are tried.  Every positive answer is replayed
through the independent witness checker before being returned.
"""

from __future__ import annotations

from dataclasses import dataclass

from .closure import INFEASIBLE, close_set, insert_and_close
from .cones import PairCone
from .linearize import max_min_thread
from .model import Event, Trace
from .validity import exhibits_race

RACE = "race"
GATE_ANCHOR = "anchor-in-cone"
GATE_INFEASIBLE = "infeasible-set"
INFEASIBLE_CLOSURE = "infeasible-closure"
INFEASIBLE_INSERT = "infeasible-insert"


@dataclass(frozen=True)
class BranchResult:
    index: int
    x1_thread: int
    outcome: str
    inserts: int


@dataclass(frozen=True)
class Decision:
    is_race: bool
    e1: Event
    e2: Event
    witness: tuple[Event, ...] | None
    cp4_used: bool
    insert_and_close_used: bool
    gate: str | None
    branches: tuple[BranchResult, ...]

    @property
    def certified(self) -> bool:
        """A rejection that did not rest on arbitrary choices is final."""
        return (not self.is_race and not self.cp4_used
                and not self.insert_and_close_used)


class WitnessCheckFailed(AssertionError):
    pass


def _conflict_candidates(trace: Trace, positions, exclude_thread: int):
    """Cross-thread conflicting pairs (trace-ordered) outside one thread."""
    by_target: dict[tuple[str, int], list[int]] = {}
    for p in sorted(positions):
        if trace.thr[p] == exclude_thread:
            continue
        k = trace.kind[p]
        if k in ("r", "w"):
            by_target.setdefault(("v", trace.tgt[p]), []).append(p)
        elif k in ("acq", "rel"):
            by_target.setdefault(("l", trace.tgt[p]), []).append(p)
    pairs = []
    for (_, _), evs in sorted(by_target.items()):
        for i, a in enumerate(evs):
            for b in evs[i + 1:]:
                if trace.thr[a] != trace.thr[b] and trace.conflicting_or_lock(a, b):
                    pairs.append((a, b))
    # Resolve the pair whose later endpoint comes earliest first: orderings
    # then cascade outward from the front of the trace.
    pairs.sort(key=lambda ab: (ab[1], ab[0]))
    return pairs


def race_decision(trace: Trace, e1: Event, e2: Event,
                  pair_cone: PairCone | None = None) -> Decision:
    """Decide one conflicting pair; Race answers carry a checked witness."""
    if trace.thr[e1.pos] == trace.thr[e2.pos]:
        raise ValueError("events of the same thread cannot race")
    if not trace.conflicting(e1.pos, e2.pos):
        raise ValueError("events do not conflict")
    if trace.is_init(e1.pos) or trace.is_init(e2.pos):
        raise ValueError("synthesized initial writes are not reported")
    if e2.pos < e1.pos:
        e1, e2 = e2, e1

    pc = pair_cone
    if pc is None:
        pc = PairCone(trace, e1.pos)
        pc.extend(e2.pos)
    cp4 = pc.cp4_used

    def no_race(gate, branches=(), iac=False):
        return Decision(False, e1, e2, None, cp4, iac, gate, tuple(branches))

    if pc.lock_doomed:
        return no_race(GATE_INFEASIBLE)
    if pc.contains(e1.pos) or pc.contains(e2.pos):
        return no_race(GATE_ANCHOR)
    X = pc.positions()
    open_locks = [trace.tgt[a] for a in pc.open_acquires()]
    if len(open_locks) != len(set(open_locks)):
        return no_race(GATE_INFEASIBLE)

    branches: list[BranchResult] = []
    witness: tuple[Event, ...] | None = None
    # Branch 1 designates the later event's thread as the maximal side.
    for index, x1_thread in ((1, trace.thr[e2.pos]), (2, trace.thr[e1.pos])):
        inserts = 0
        q = close_set(trace, X)
        if q is INFEASIBLE:
            branches.append(BranchResult(index, x1_thread, INFEASIBLE_CLOSURE, 0))
            continue
        outcome = RACE
        cands = _conflict_candidates(trace, X, x1_thread)
        for a, b in cands:
            if not q.unordered(a, b):
                continue
            inserts += 1
            if insert_and_close(q, a, b) is INFEASIBLE:
                outcome = INFEASIBLE_INSERT
                break
        branches.append(BranchResult(index, x1_thread, outcome, inserts))
        if outcome == RACE and witness is None:
            assert not any(q.unordered(a, b) for a, b in cands), \
                "conflict-complete invariant broken before linearization"
            order = max_min_thread(q, x1_thread)
            witness = tuple(trace.events[p] for p in order) + (e1, e2)

    iac_used = any(b.inserts for b in branches)
    if witness is not None:
        decision = Decision(True, e1, e2, witness, cp4, iac_used, None,
                            tuple(branches))
        if not verify_decision(trace, e1, e2, decision):
            raise WitnessCheckFailed(
                f"constructed witness fails the race check for "
                f"({e1.index}, {e2.index})")
        return decision
    return no_race(None, branches, iac_used)


def verify_decision(trace: Trace, e1: Event, e2: Event, decision: Decision) -> bool:
    """Race decisions must exhibit the race via their witness; rejections are
    vacuously fine."""
    if not decision.is_race:
        return True
    if decision.witness is None:
        return False
    return exhibits_race(decision.witness, e1, e2, trace)
