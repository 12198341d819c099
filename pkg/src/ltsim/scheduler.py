"""Schedulers over LTS traces and their semantic checks.

A scheduler maps every finite trace to a set of next actions.  Two
kinds are provided: finite tables (for tests and serialized runs) and
strategies, which replay the trace on an LTS while folding a finite
memory value.  Finite memory is what makes admissibility, determinism
and divergence checks exact instead of depth-bounded: the reachable
(state, memory) graph is the whole behavior.
"""

from __future__ import annotations

import os
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterator, Mapping, Sequence

from .errors import BudgetExceeded, ModelError
from .lts import Action, ActionKind, Lasso, Lts, Trace, sort_actions

DEFAULT_NODE_BUDGET = 1_000_000


def node_budget(budget: int | None = None) -> int:
    if budget is not None:
        return budget
    return int(os.environ.get("LTSIM_NODE_BUDGET", DEFAULT_NODE_BUDGET))


# --- scheduler kinds ----------------------------------------------------


class Scheduler(ABC):
    """Pure function from finite traces to sets of next actions."""

    @abstractmethod
    def schedule(self, trace: Trace) -> frozenset[Action]:
        raise NotImplementedError


class TableScheduler(Scheduler):
    """Finite explicit table; traces outside the table get the empty set."""

    def __init__(self, table: Mapping[Sequence[Action], Any]):
        self._table: dict[Trace, frozenset[Action]] = {
            tuple(k): frozenset(v) for k, v in table.items()
        }

    def schedule(self, trace: Trace) -> frozenset[Action]:
        return self._table.get(tuple(trace), frozenset())

    def items(self) -> Iterator[tuple[Trace, frozenset[Action]]]:
        return iter(self._table.items())


class Strategy(Scheduler):
    """Scheduler realized by replaying the trace on an LTS with finite memory.

    Subclasses override decide() and, when history matters, the memory
    hooks.  Memory values must be hashable; the default is the constant
    None, i.e. a memoryless state-feedback scheduler.
    """

    def __init__(self, lts: Lts):
        self.lts = lts

    def initial_memory(self) -> Hashable:
        return None

    def update_memory(self, mem: Hashable, state: int, action: Action) -> Hashable:
        return mem

    @abstractmethod
    def decide(self, state: int, mem: Hashable) -> frozenset[Action]:
        raise NotImplementedError

    def schedule(self, trace: Trace) -> frozenset[Action]:
        s = self.lts.initial
        mem = self.initial_memory()
        for a in trace:
            t = self.lts.step(s, a)
            if t is None:
                return frozenset()
            mem = self.update_memory(mem, s, a)
            s = t
        return self.decide(s, mem)


class MaximalStrategy(Strategy):
    """Schedules every enabled action; admitted but rarely deterministic."""

    def decide(self, state: int, mem: Hashable) -> frozenset[Action]:
        return self.lts.enabled(state)


class ObjectFirstStrategy(Strategy):
    """Drains object work before the program moves.

    Internal actions first, then calls and returns, then the whole set
    of enabled program actions, then idle; non-program picks are
    canonical-first singletons, so the scheduler is deterministic.
    """

    def decide(self, state: int, mem: Hashable) -> frozenset[Action]:
        enabled = self.lts.enabled(state)
        alpha = self.lts.alphabet
        for group in (alpha.internal, alpha.cr):
            hits = sort_actions(enabled & group)
            if hits:
                return frozenset({hits[0]})
        prog = enabled & alpha.program
        if prog:
            return frozenset(prog)
        return frozenset({alpha.idle}) if alpha.idle in enabled else frozenset()


class FifoStrategy(Strategy):
    """Rotates turns through thread tags, least recently served first.

    Memory is the queue of thread tags (untagged actions share one slot).
    The front-most tag with an enabled action acts, canonical-first.
    """

    def __init__(self, lts: Lts):
        super().__init__(lts)
        tags = {a.thread for a in lts.alphabet.non_idle()}
        self._tags = tuple(sorted(tags, key=lambda t: (t is None, t)))

    def initial_memory(self) -> Hashable:
        return self._tags

    def update_memory(self, mem: Hashable, state: int, action: Action) -> Hashable:
        queue: tuple = mem  # type: ignore[assignment]
        if action.thread in queue:
            return tuple(t for t in queue if t != action.thread) + (action.thread,)
        return queue

    def decide(self, state: int, mem: Hashable) -> frozenset[Action]:
        enabled = self.lts.enabled(state)
        queue: tuple = mem  # type: ignore[assignment]
        for tag in queue:
            hits = sort_actions(a for a in enabled if a.thread == tag and a.kind is not ActionKind.IDLE)
            if hits:
                return frozenset({hits[0]})
        idle = self.lts.alphabet.idle
        return frozenset({idle}) if idle in enabled else frozenset()


STRATEGIES: dict[str, Callable[[Lts], Scheduler]] = {
    "maximal": MaximalStrategy,
    "object-first": ObjectFirstStrategy,
    "fifo": FifoStrategy,
}


def register_strategy(name: str, factory: Callable[[Lts], Scheduler]) -> None:
    STRATEGIES[name] = factory


def make_scheduler(name: str, lts: Lts) -> Scheduler:
    try:
        factory = STRATEGIES[name]
    except KeyError:
        known = ", ".join(sorted(STRATEGIES))
        raise ModelError(f"unknown strategy {name!r} (known: {known})") from None
    return factory(lts)


# --- consistency --------------------------------------------------------


def is_consistent(tau: Sequence[Action], s: Scheduler) -> bool:
    """Every next action of tau is scheduled after the prefix before it."""
    tau = tuple(tau)
    return all(tau[n] in s.schedule(tau[:n]) for n in range(len(tau)))


# --- trace prefix trees -------------------------------------------------


@dataclass(eq=False)
class TraceNode:
    """One node of a prefix tree; the root carries action None.

    Nodes compare by identity: a node is a position in one tree.
    """

    action: Action | None
    state: int
    depth: int
    parent: "TraceNode | None" = None
    children: dict[Action, "TraceNode"] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    def trace(self) -> Trace:
        parts = []
        node = self
        while node.parent is not None:
            parts.append(node.action)
            node = node.parent
        return tuple(reversed(parts))


class TracePrefixTree:
    """Prefix-closed set of bounded traces with per-node annotations."""

    def __init__(self, root_state: int, depth: int):
        self.root = TraceNode(action=None, state=root_state, depth=0)
        self.depth = depth
        self.size = 1

    def extend(self, node: TraceNode, action: Action, state: int) -> TraceNode:
        if action in node.children:
            raise ModelError(f"duplicate child {action.label()} in prefix tree")
        child = TraceNode(action=action, state=state, depth=node.depth + 1, parent=node)
        node.children[action] = child
        self.size += 1
        return child

    def nodes(self) -> Iterator[TraceNode]:
        """All nodes, preorder, children in insertion (canonical) order."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(list(node.children.values())))

    def traces(self) -> Iterator[Trace]:
        for node in self.nodes():
            yield node.trace()

    def find(self, trace: Sequence[Action]) -> TraceNode | None:
        node = self.root
        for a in trace:
            node = node.children.get(a)
            if node is None:
                return None
        return node

    def leaves(self) -> Iterator[TraceNode]:
        for node in self.nodes():
            if not node.children:
                yield node


def enumerate_traces(
    a: Lts, s: Scheduler, depth: int, budget: int | None = None
) -> TracePrefixTree:
    """The consistent traces of a under s, up to the given length.

    Children of a node are the scheduled actions that are enabled, in
    canonical order, so the tree is reproducible byte for byte.
    """
    limit = node_budget(budget)
    tree = TracePrefixTree(a.initial, depth)
    queue: deque[TraceNode] = deque([tree.root])
    while queue:
        node = queue.popleft()
        if node.depth >= depth:
            continue
        scheduled = s.schedule(node.trace())
        for act in sort_actions(scheduled):
            t = a.step(node.state, act)
            if t is None:
                continue
            child = tree.extend(node, act, t)
            if tree.size > limit:
                raise BudgetExceeded(limit)
            queue.append(child)
    return tree


# --- admissibility and determinism --------------------------------------


@dataclass(frozen=True)
class SchedulerCheck:
    """Verdict of a scheduler property check.

    complete distinguishes exact verdicts (finite-memory walk) from
    depth-bounded ones; witness/detail describe the first violation.
    """

    ok: bool
    complete: bool
    witness: Trace | None = None
    detail: str | None = None


def _strategy_graph(
    s: Strategy, budget: int
) -> tuple[dict[tuple[int, Hashable], Trace], dict[tuple[int, Hashable], list[tuple[Action, tuple[int, Hashable]]]]]:
    """Reachable (state, memory) nodes of a strategy with shortest access traces.

    Only scheduled-and-enabled moves are followed, so paths in this
    graph are exactly the consistent traces.
    """
    lts = s.lts
    start = (lts.initial, s.initial_memory())
    access: dict[tuple[int, Hashable], Trace] = {start: ()}
    edges: dict[tuple[int, Hashable], list[tuple[Action, tuple[int, Hashable]]]] = {}
    queue: deque[tuple[int, Hashable]] = deque([start])
    while queue:
        node = queue.popleft()
        state, mem = node
        out = []
        for act in sort_actions(s.decide(state, mem)):
            t = lts.step(state, act)
            if t is None:
                continue
            nxt = (t, s.update_memory(mem, state, act))
            out.append((act, nxt))
            if nxt not in access:
                access[nxt] = access[node] + (act,)
                if len(access) > budget:
                    raise BudgetExceeded(budget)
                queue.append(nxt)
        edges[node] = out
    return access, edges


def check_admitted(
    s: Scheduler, a: Lts, depth: int, budget: int | None = None
) -> SchedulerCheck:
    """Non-empty and all-enabled scheduling along every consistent trace.

    Exact for strategies over a (finite reachable memory); bounded to
    depth otherwise.
    """
    limit = node_budget(budget)

    def violation(trace: Trace, scheduled: frozenset[Action], state: int) -> SchedulerCheck | None:
        if not scheduled:
            return SchedulerCheck(False, True, trace, "scheduled set is empty")
        stuck = sort_actions(x for x in scheduled if a.step(state, x) is None)
        if stuck:
            return SchedulerCheck(
                False, True, trace, f"scheduled action {stuck[0].label()} is not enabled"
            )
        return None

    if isinstance(s, Strategy) and s.lts is a:
        access, _ = _strategy_graph(s, limit)
        for (state, mem), trace in access.items():
            bad = violation(trace, s.decide(state, mem), state)
            if bad is not None:
                return bad
        return SchedulerCheck(True, True)

    queue: deque[tuple[Trace, int]] = deque([((), a.initial)])
    seen = 0
    while queue:
        trace, state = queue.popleft()
        seen += 1
        if seen > limit:
            raise BudgetExceeded(limit)
        scheduled = s.schedule(trace)
        bad = violation(trace, scheduled, state)
        if bad is not None:
            return SchedulerCheck(False, False, bad.witness, bad.detail)
        if len(trace) < depth:
            for act in sort_actions(scheduled):
                queue.append((trace + (act,), a.step(state, act)))
    return SchedulerCheck(True, False)


def check_deterministic_scheduler(
    s: Scheduler, prod: Lts, depth: int, budget: int | None = None
) -> SchedulerCheck:
    """Every scheduled set is program-only or a singleton, along consistent traces."""
    limit = node_budget(budget)
    program = prod.alphabet.program

    def bad_set(scheduled: frozenset[Action]) -> bool:
        return len(scheduled) > 1 and not scheduled <= program

    if isinstance(s, Strategy) and s.lts is prod:
        access, _ = _strategy_graph(s, limit)
        for (state, mem), trace in access.items():
            scheduled = s.decide(state, mem)
            if bad_set(scheduled):
                names = ", ".join(x.label() for x in sort_actions(scheduled))
                return SchedulerCheck(
                    False, True, trace, f"scheduled set {{{names}}} is neither program-only nor a singleton"
                )
        return SchedulerCheck(True, True)

    queue: deque[tuple[Trace, int]] = deque([((), prod.initial)])
    seen = 0
    while queue:
        trace, state = queue.popleft()
        seen += 1
        if seen > limit:
            raise BudgetExceeded(limit)
        scheduled = s.schedule(trace)
        if bad_set(scheduled):
            names = ", ".join(x.label() for x in sort_actions(scheduled))
            return SchedulerCheck(
                False, False, trace, f"scheduled set {{{names}}} is neither program-only nor a singleton"
            )
        if len(trace) < depth:
            for act in sort_actions(scheduled):
                t = prod.step(state, act)
                if t is not None:
                    queue.append((trace + (act,), t))
    return SchedulerCheck(True, False)


# --- divergence ---------------------------------------------------------


def find_divergence(
    prod: Lts,
    s: Scheduler,
    gamma_p: frozenset[Action] | set[Action],
    depth: int,
    budget: int | None = None,
) -> Lasso | None:
    """A consistent lasso whose cycle stays inside the silent actions.

    Silent means outside gamma_p and not idle.  Exact for strategies
    over prod: a cycle in the reachable (state, memory) graph repeats
    forever, so a found lasso is a real divergence and absence of one
    is a proof.  Opaque schedulers get no witness (bounded verdict).
    """
    if not (isinstance(s, Strategy) and s.lts is prod):
        return None
    limit = node_budget(budget)
    access, edges = _strategy_graph(s, limit)
    idle = prod.alphabet.idle
    gamma = frozenset(gamma_p)

    def silent(a: Action) -> bool:
        return a not in gamma and a != idle

    silent_edges = {
        node: [(a, t) for a, t in out if silent(a)] for node, out in edges.items()
    }

    # iterative DFS over silent edges only; a back edge closes a cycle
    color: dict[tuple[int, Hashable], int] = {}  # 1 = on stack, 2 = done
    for start in access:
        if color.get(start):
            continue
        stack: list[tuple[tuple[int, Hashable], Iterator[tuple[Action, tuple[int, Hashable]]]]] = []
        path_actions: list[Action] = []
        color[start] = 1
        stack.append((start, iter(silent_edges[start])))
        while stack:
            node, it = stack[-1]
            step = next(it, None)
            if step is None:
                color[node] = 2
                stack.pop()
                if path_actions:
                    path_actions.pop()
                continue
            act, nxt = step
            if color.get(nxt) == 1:
                # cycle: suffix of the DFS path from nxt back to nxt
                idx = next(i for i, (n, _) in enumerate(stack) if n == nxt)
                cycle = tuple(path_actions[idx:]) + (act,)
                return Lasso(stem=access[nxt], cycle=cycle)
            if not color.get(nxt):
                color[nxt] = 1
                path_actions.append(act)
                stack.append((nxt, iter(silent_edges[nxt])))
        # fall through: this component has no silent cycle
    return None
