"""Forward simulation checking between deterministic LTSs.

A relation F relates concrete to abstract states; each concrete step
s1 -a-> s1' from a related pair must be matched by an abstract action
sequence alpha with the same projection onto an observation alphabet
gamma, landing back in F.  The progressive variant additionally demands
a well-founded order that strictly decreases on every stuttering match
(alpha empty), here realized as a natural-number rank.

The checker computes the greatest such F by deleting unsupported
pairs.  The choice of alpha per (pair, step) prefers non-empty
matches, so a step gets alpha = empty only when nothing else lands in
F within the length bound: the stuttering edges are exactly the forced
ones, which makes the acyclicity test for ranks sharp rather than
heuristic.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import BudgetExceeded, ContractViolation, ParseError
from .lts import Action, Lts, Trace, project, sort_actions

SCHEMA_VERSION = 1


# --- result types -------------------------------------------------------


@dataclass(frozen=True)
class ChoiceEntry:
    """Matching move for one (concrete pair, concrete action): alpha and its landing."""

    alpha: Trace
    target: int


@dataclass(frozen=True)
class SimulationCertificate:
    """A forward simulation presented so a validator can replay every clause."""

    relation: frozenset[tuple[int, int]]
    choice: dict[tuple[int, Action, int], ChoiceEntry]
    gamma: frozenset[Action]
    alpha_bound: int

    def partners(self, s1: int) -> list[int]:
        return sorted(s2 for (c, s2) in self.relation if c == s1)


@dataclass(frozen=True)
class ProgressWitness:
    """Natural-number rank per concrete state; stutter steps must descend."""

    rank: dict[int, int]

    def of(self, s: int) -> int:
        return self.rank.get(s, 0)


@dataclass(frozen=True)
class StutterEdge:
    """One concrete step that only the empty abstract sequence can match."""

    source: int
    action: Action
    target: int
    partners: tuple[int, ...]  # abstract states for which the step is forced


@dataclass(frozen=True)
class StutterCycle:
    """A cycle of forced stuttering steps; no rank can decrease around it."""

    edges: tuple[StutterEdge, ...]

    def states(self) -> list[int]:
        return [e.source for e in self.edges]


@dataclass(frozen=True)
class ForwardResult:
    """Outcome of the greatest-fixpoint computation."""

    certificate: SimulationCertificate | None
    relation: frozenset[tuple[int, int]]
    complete: bool  # False when the alpha length bound may have hidden matches
    deletions: tuple[tuple[int, int, Action], ...]


@dataclass(frozen=True)
class ProgressiveResult:
    """Outcome of the progressive check: yes, no, unknown, or no-forward."""

    verdict: str  # "yes" | "no" | "unknown" | "no-forward"
    certificate: SimulationCertificate | None = None
    witness: ProgressWitness | None = None
    cycle: StutterCycle | None = None
    complete: bool = True
    note: str | None = None
    relation: frozenset[tuple[int, int]] = frozenset()  # the greatest forward simulation


def sufficient_alpha_bound(a2: Lts) -> int:
    """Bound making the per-step match search exhaustive.

    A shortest match never revisits an (abstract state, progress bit)
    pair, so its length is at most twice the abstract state count.
    """
    return 2 * a2.num_states


# --- match search -------------------------------------------------------


class MatchTable:
    """Per (concrete action, abstract state) candidate matches, cached.

    Candidates are (alpha, landing) pairs with alpha's projection onto
    gamma equal to the action's, one entry per reachable landing, in
    shortest-then-canonical order; the empty alpha comes last so that
    consumers prefer progress over stuttering.
    """

    def __init__(self, a2: Lts, gamma: frozenset[Action], alpha_bound: int):
        if alpha_bound < 1:
            raise ContractViolation("alpha bound must be at least 1")
        self.a2 = a2
        self.gamma = gamma
        self.alpha_bound = alpha_bound
        self.truncated = False  # some consulted search was cut by the bound
        self._cache: dict[tuple[Action, int], tuple[tuple[Trace, int], ...]] = {}

    def candidates(self, a: Action, s2: int) -> tuple[tuple[Trace, int], ...]:
        hit = self._cache.get((a, s2))
        if hit is None:
            hit = self._search(a, s2)
            self._cache[(a, s2)] = hit
        return hit

    def _search(self, a: Action, s2: int) -> tuple[tuple[Trace, int], ...]:
        observable = a in self.gamma
        # nodes are (abstract state, progress); progress flips on emitting a
        start = (s2, 0)
        best: dict[tuple[int, int], Trace] = {start: ()}
        queue: deque[tuple[int, int]] = deque([start])
        found: list[tuple[Trace, int]] = []
        looped = False  # non-empty silent path back to s2 recorded
        while queue:
            t, progress = queue.popleft()
            alpha = best[(t, progress)]
            if len(alpha) >= self.alpha_bound:
                if any(
                    ((u, progress) not in best and b not in self.gamma)
                    or (not observable and not looped and u == s2 and b not in self.gamma)
                    or (observable and progress == 0 and b == a and (u, 1) not in best)
                    for b, u in self.a2.out_edges(t)
                ):
                    self.truncated = True
                continue
            for b, u in self.a2.out_edges(t):
                if b in self.gamma:
                    if not (observable and progress == 0 and b == a):
                        continue
                    node = (u, 1)
                else:
                    node = (u, progress)
                if node in best:
                    # the start node holds the empty sequence, so a real
                    # silent loop back to it is a distinct candidate
                    if node == start and not observable and not looped:
                        looped = True
                        found.append((alpha + (b,), s2))
                    continue
                best[node] = alpha + (b,)
                queue.append(node)
                if node[1] == (1 if observable else 0) and best[node]:
                    found.append((best[node], node[0]))
        if not observable:
            found.append(((), s2))  # stuttering match, deliberately last
        return tuple(found)


def _run_from(lts: Lts, s: int, seq: Sequence[Action]) -> int | None:
    for a in seq:
        nxt = lts.step(s, a)
        if nxt is None:
            return None
        s = nxt
    return s


# --- greatest fixpoint --------------------------------------------------


def _greatest_relation(
    a1: Lts, a2: Lts, table: MatchTable
) -> tuple[set[tuple[int, int]], list[tuple[int, int, Action]]]:
    relation = {
        (s1, s2)
        for s1 in range(a1.num_states)
        for s2 in range(a2.num_states)
    }
    deletions: list[tuple[int, int, Action]] = []
    changed = True
    while changed:
        changed = False
        for s1, s2 in itertools.product(range(a1.num_states), range(a2.num_states)):
            if (s1, s2) not in relation:
                continue
            for a, s1n in a1.out_edges(s1):
                if not any(
                    (s1n, t) in relation for _, t in table.candidates(a, s2)
                ):
                    relation.discard((s1, s2))
                    deletions.append((s1, s2, a))
                    changed = True
                    break
    return relation, deletions


def _greedy_choice(
    a1: Lts, relation: set[tuple[int, int]], table: MatchTable
) -> dict[tuple[int, Action, int], ChoiceEntry]:
    choice: dict[tuple[int, Action, int], ChoiceEntry] = {}
    for s1, s2 in sorted(relation):
        for a, s1n in a1.out_edges(s1):
            for alpha, t in table.candidates(a, s2):
                if (s1n, t) in relation:
                    choice[(s1, a, s2)] = ChoiceEntry(alpha, t)
                    break
    return choice


def check_forward(
    a1: Lts, a2: Lts, gamma: Iterable[Action], alpha_bound: int = 4
) -> ForwardResult:
    """Greatest forward simulation between a1 and a2 for the given gamma.

    Starts from the full product of state sets and deletes pairs with an
    unmatchable step until stable.  A certificate is returned iff the
    initial pair survives; it is valid by construction, and complete is
    False only when the alpha bound cut off some search, in which case a
    missing certificate is inconclusive.
    """
    gamma = frozenset(gamma)
    table = MatchTable(a2, gamma, alpha_bound)
    relation, deletions = _greatest_relation(a1, a2, table)
    complete = not table.truncated
    if (a1.initial, a2.initial) not in relation:
        return ForwardResult(None, frozenset(relation), complete, tuple(deletions))
    cert = SimulationCertificate(
        relation=frozenset(relation),
        choice=_greedy_choice(a1, relation, table),
        gamma=gamma,
        alpha_bound=alpha_bound,
    )
    return ForwardResult(cert, cert.relation, complete, tuple(deletions))


# --- progressive check --------------------------------------------------


def _find_cycle(
    succ: dict[int, list[tuple[StutterEdge, int]]]
) -> tuple[StutterEdge, ...] | None:
    """Back-edge DFS over stutter edges; returns one cycle's edge list."""
    color: dict[int, int] = {}
    for start in sorted(succ):
        if color.get(start):
            continue
        stack: list[tuple[int, Iterator[tuple[StutterEdge, int]]]] = [
            (start, iter(succ.get(start, ())))
        ]
        path: list[StutterEdge] = []
        color[start] = 1
        while stack:
            node, it = stack[-1]
            step = next(it, None)
            if step is None:
                color[node] = 2
                stack.pop()
                if path:
                    path.pop()
                continue
            edge, nxt = step
            if color.get(nxt) == 1:
                idx = next(i for i, (n, _) in enumerate(stack) if n == nxt)
                return tuple(path[idx:]) + (edge,)
            if not color.get(nxt):
                color[nxt] = 1
                path.append(edge)
                stack.append((nxt, iter(succ.get(nxt, ()))))
    return None


def _ranks_from_edges(edges: Iterable[StutterEdge], num_states: int) -> ProgressWitness:
    """Longest-path ranks over the stutter DAG: every edge strictly descends."""
    succ: dict[int, list[int]] = {}
    for e in edges:
        succ.setdefault(e.source, []).append(e.target)
    memo: dict[int, int] = {}

    def height(s: int) -> int:
        if s in memo:
            return memo[s]
        memo[s] = 0  # placeholder; acyclicity established by the caller
        memo[s] = max((1 + height(t) for t in succ.get(s, ())), default=0)
        return memo[s]

    return ProgressWitness({s: height(s) for s in range(num_states)})


def _stutter_succ(
    edges: Iterable[StutterEdge],
) -> dict[int, list[tuple[StutterEdge, int]]]:
    succ: dict[int, list[tuple[StutterEdge, int]]] = {}
    for e in edges:
        succ.setdefault(e.source, []).append((e, e.target))
    return succ


def _forced_everywhere_edges(
    a1: Lts, relation: set[tuple[int, int]], table: MatchTable
) -> list[StutterEdge]:
    """Steps that stutter for every abstract partner of their source.

    Any simulation pairs each reachable concrete state with at least one
    partner, and shrinking the relation only removes landing options, so
    a cycle of such steps defeats every rank under any simulation.
    """
    partners: dict[int, list[int]] = {}
    for s1, s2 in relation:
        partners.setdefault(s1, []).append(s2)
    out: list[StutterEdge] = []
    for s1 in a1.reachable():
        mine = partners.get(s1)
        if not mine:
            continue
        for a, s1n in a1.out_edges(s1):
            if all(
                not any(alpha and (s1n, t) in relation for alpha, t in table.candidates(a, s2))
                for s2 in mine
            ):
                out.append(StutterEdge(s1, a, s1n, tuple(sorted(mine))))
    return out


def _backtrack(
    a1: Lts,
    a2: Lts,
    relation: set[tuple[int, int]],
    table: MatchTable,
    budget: int,
) -> dict[tuple[int, Action, int], ChoiceEntry] | None:
    """Complete search for a choice assignment with an acyclic stutter graph.

    Explores only pairs reached from the initial pair through the chosen
    landings, so the certificate relation is the reached set.  Raises
    BudgetExceeded when the tried-assignment count passes the budget.
    """
    init = (a1.initial, a2.initial)
    spent = 0

    def stutter_reaches(src: int, dst: int, edges: set[tuple[int, Action, int]]) -> bool:
        seen = {src}
        stack = [src]
        while stack:
            s = stack.pop()
            if s == dst:
                return True
            for (x, _a, y) in edges:
                if x == s and y not in seen:
                    seen.add(y)
                    stack.append(y)
        return False

    obligations: list[tuple[int, int]] = [init]
    supported: set[tuple[int, int]] = {init}
    choice: dict[tuple[int, Action, int], ChoiceEntry] = {}
    stutter: set[tuple[int, Action, int]] = set()

    def solve(i: int) -> bool:
        nonlocal spent
        if i == len(obligations):
            return True
        s1, s2 = obligations[i]
        steps = list(a1.out_edges(s1))

        def assign(j: int) -> bool:
            nonlocal spent
            if j == len(steps):
                return solve(i + 1)
            a, s1n = steps[j]
            for alpha, t in table.candidates(a, s2):
                if (s1n, t) not in relation:
                    continue
                spent += 1
                if spent > budget:
                    raise BudgetExceeded(budget)
                is_stutter = not alpha
                edge = (s1, a, s1n)
                if is_stutter and (s1 == s1n or stutter_reaches(s1n, s1, stutter)):
                    continue  # would close a stutter cycle
                added_pair = (s1n, t) not in supported
                if added_pair:
                    supported.add((s1n, t))
                    obligations.append((s1n, t))
                # another obligation may already force this edge to stutter;
                # only the frame that inserted it may remove it on unwind
                added_edge = is_stutter and edge not in stutter
                if added_edge:
                    stutter.add(edge)
                choice[(s1, a, s2)] = ChoiceEntry(alpha, t)
                if assign(j + 1):
                    return True
                del choice[(s1, a, s2)]
                if added_edge:
                    stutter.discard(edge)
                if added_pair:
                    supported.discard((s1n, t))
                    obligations.pop()
            return False

        return assign(0)

    return choice if solve(0) else None


def check_progressive(
    a1: Lts,
    a2: Lts,
    gamma: Iterable[Action],
    alpha_bound: int = 4,
    backtrack_budget: int = 1_000_000,
) -> ProgressiveResult:
    """Forward simulation with a rank decreasing on every stuttering step.

    The greedy assignment stutters only where forced, so its stutter
    graph acyclic settles yes immediately.  A cycle of steps forced for
    every partner settles no.  Between the two, a budgeted complete
    backtracking over landings decides; running out of budget is an
    unknown carrying the best cycle found.
    """
    gamma = frozenset(gamma)
    table = MatchTable(a2, gamma, alpha_bound)
    relation, _deletions = _greatest_relation(a1, a2, table)
    complete = not table.truncated
    frozen = frozenset(relation)
    if (a1.initial, a2.initial) not in relation:
        return ProgressiveResult(verdict="no-forward", complete=complete, relation=frozen)

    choice = _greedy_choice(a1, relation, table)
    greedy_edges = [
        StutterEdge(s1, a, a1.step(s1, a), (s2,))
        for (s1, a, s2), entry in sorted(
            choice.items(), key=lambda kv: (kv[0][0], kv[0][1].key(), kv[0][2])
        )
        if not entry.alpha
    ]
    cycle = _find_cycle(_stutter_succ(greedy_edges))
    if cycle is None:
        cert = SimulationCertificate(frozenset(relation), choice, gamma, alpha_bound)
        witness = _ranks_from_edges(greedy_edges, a1.num_states)
        return ProgressiveResult(
            verdict="yes", certificate=cert, witness=witness, complete=complete,
            relation=frozen,
        )

    forced = _forced_everywhere_edges(a1, relation, table)
    forced_cycle = _find_cycle(_stutter_succ(forced))
    if forced_cycle is not None:
        return ProgressiveResult(
            verdict="no",
            cycle=StutterCycle(forced_cycle),
            complete=complete,
            note="every abstract partner stutters on each cycle step",
            relation=frozen,
        )

    try:
        solved = _backtrack(a1, a2, relation, table, backtrack_budget)
    except BudgetExceeded:
        return ProgressiveResult(
            verdict="unknown",
            cycle=StutterCycle(cycle),
            complete=complete,
            note=f"backtracking budget {backtrack_budget} exceeded",
            relation=frozen,
        )
    if solved is None:
        return ProgressiveResult(
            verdict="no",
            cycle=StutterCycle(cycle),
            complete=complete,
            note="no landing assignment admits a rank (complete search)",
            relation=frozen,
        )
    used = {(s1, s2) for (s1, _a, s2) in solved} | {(a1.initial, a2.initial)}
    landing_pairs = {(a1.step(s1, a), e.target) for (s1, a, _s2), e in solved.items()}
    cert_relation = frozenset(used | landing_pairs)
    edges = [
        StutterEdge(s1, a, a1.step(s1, a), (s2,))
        for (s1, a, s2), e in solved.items()
        if not e.alpha
    ]
    cert = SimulationCertificate(cert_relation, solved, gamma, alpha_bound)
    witness = _ranks_from_edges(edges, a1.num_states)
    return ProgressiveResult(
        verdict="yes", certificate=cert, witness=witness, complete=complete,
        relation=frozen,
    )


# --- validation ---------------------------------------------------------


def validate_certificate(
    cert: SimulationCertificate,
    witness: ProgressWitness | None,
    a1: Lts,
    a2: Lts,
    max_diagnostics: int = 20,
) -> tuple[bool, list[str]]:
    """Replay every certificate clause; the trusted core of the package.

    Checks the initial pair, and for each related pair and concrete step:
    a recorded choice, equal gamma projections, abstract replay to the
    recorded landing, landing membership, and rank descent on stutters.
    """
    problems: list[str] = []

    def report(msg: str) -> None:
        if len(problems) < max_diagnostics:
            problems.append(msg)

    if (a1.initial, a2.initial) not in cert.relation:
        report("initial pair not in relation")
    for s1, s2 in sorted(cert.relation):
        for a, s1n in a1.out_edges(s1):
            entry = cert.choice.get((s1, a, s2))
            if entry is None:
                report(f"no choice for ({s1}, {a.label()}, {s2})")
                continue
            if project((a,), cert.gamma) != project(entry.alpha, cert.gamma):
                report(f"projection mismatch at ({s1}, {a.label()}, {s2})")
            landed = _run_from(a2, s2, entry.alpha)
            if landed is None:
                report(f"alpha does not replay at ({s1}, {a.label()}, {s2})")
                continue
            if landed != entry.target:
                report(
                    f"alpha lands in {landed}, recorded target {entry.target} "
                    f"at ({s1}, {a.label()}, {s2})"
                )
            if (s1n, entry.target) not in cert.relation:
                report(f"landing ({s1n}, {entry.target}) not in relation")
            if witness is not None and not entry.alpha:
                if witness.of(s1n) >= witness.of(s1):
                    report(
                        f"rank does not descend on stutter ({s1}, {a.label()}, {s1n}): "
                        f"{witness.of(s1)} -> {witness.of(s1n)}"
                    )
    return (not problems, problems)


def validate_stutter_cycle(
    cycle: StutterCycle,
    a1: Lts,
    a2: Lts,
    gamma: Iterable[Action],
    alpha_bound: int,
    relation: frozenset[tuple[int, int]],
) -> tuple[bool, list[str]]:
    """Replay a stutter cycle: real steps, closed, and stuttering is forced.

    Forced means: for each recorded partner, no non-empty alpha within
    the bound lands the step back in the relation.
    """
    problems: list[str] = []
    table = MatchTable(a2, frozenset(gamma), alpha_bound)
    edges = cycle.edges
    if not edges:
        return False, ["empty cycle"]
    for i, e in enumerate(edges):
        if a1.step(e.source, e.action) != e.target:
            problems.append(f"edge {i} is not a transition of the concrete LTS")
        nxt = edges[(i + 1) % len(edges)]
        if e.target != nxt.source:
            problems.append(f"edge {i} does not chain into edge {(i + 1) % len(edges)}")
        if not e.partners:
            problems.append(f"edge {i} records no abstract partner")
        for s2 in e.partners:
            if (e.source, s2) not in relation:
                problems.append(f"edge {i}: partner {s2} not related to {e.source}")
            if any(
                alpha and (e.target, t) in relation
                for alpha, t in table.candidates(e.action, s2)
            ):
                problems.append(
                    f"edge {i}: partner {s2} has a non-stuttering match"
                )
    return (not problems, problems)


# --- serialization ------------------------------------------------------


def certificate_to_dict(
    cert: SimulationCertificate, witness: ProgressWitness | None = None
) -> dict:
    data: dict = {
        "schema_version": SCHEMA_VERSION,
        "gamma": sorted(a.label() for a in cert.gamma),
        "alpha_bound": cert.alpha_bound,
        "relation": sorted([s1, s2] for s1, s2 in cert.relation),
        "choices": [
            {
                "s1": s1,
                "action": a.label(),
                "s2": s2,
                "alpha": [b.label() for b in entry.alpha],
                "target": entry.target,
            }
            for (s1, a, s2), entry in sorted(
                cert.choice.items(), key=lambda kv: (kv[0][0], kv[0][1].key(), kv[0][2])
            )
        ],
    }
    if witness is not None:
        data["ranks"] = {str(s): r for s, r in sorted(witness.rank.items())}
    return data


def certificate_from_dict(
    data: dict, a1: Lts, a2: Lts
) -> tuple[SimulationCertificate, ProgressWitness | None]:
    by_label: dict[str, Action] = {}
    for action in sorted(a1.alphabet.all_actions | a2.alphabet.all_actions, key=Action.key):
        by_label.setdefault(action.label(), action)

    def resolve(label: str) -> Action:
        action = by_label.get(label)
        if action is None:
            raise ParseError(f"unknown action {label!r} in certificate")
        return action

    try:
        gamma = frozenset(resolve(x) for x in data["gamma"])
        relation = frozenset((int(p[0]), int(p[1])) for p in data["relation"])
        choice = {
            (int(c["s1"]), resolve(c["action"]), int(c["s2"])): ChoiceEntry(
                tuple(resolve(x) for x in c["alpha"]), int(c["target"])
            )
            for c in data["choices"]
        }
        cert = SimulationCertificate(
            relation=relation,
            choice=choice,
            gamma=gamma,
            alpha_bound=int(data["alpha_bound"]),
        )
    except (KeyError, TypeError, IndexError, ValueError) as e:
        raise ParseError(f"malformed certificate: {e}") from None
    witness = None
    if "ranks" in data:
        witness = ProgressWitness({int(k): int(v) for k, v in data["ranks"].items()})
    return cert, witness


def stutter_cycle_to_dict(cycle: StutterCycle) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "edges": [
            {
                "source": e.source,
                "action": e.action.label(),
                "target": e.target,
                "partners": list(e.partners),
            }
            for e in cycle.edges
        ],
    }


def dumps_certificate(
    cert: SimulationCertificate, witness: ProgressWitness | None = None
) -> str:
    return json.dumps(certificate_to_dict(cert, witness), indent=2, sort_keys=True) + "\n"
