"""Finite deterministic labelled transition systems.

States are dense integer indices with an optional side table of
human-readable labels.  Actions carry their classification (program,
call, return, internal, idle) so alphabet membership is a field lookup,
and argument/return values are part of action identity, which keeps the
transition function single-valued.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Iterator, Mapping, Sequence

from .errors import ModelError, ParseError, StepNotEnabled


class ActionKind(str, Enum):
    PROGRAM = "program"
    CALL = "call"
    RETURN = "return"
    INTERNAL = "internal"
    IDLE = "idle"


@dataclass(frozen=True)
class Action:
    """A named event; equality is (name, kind, thread, payload)."""

    name: str
    kind: ActionKind
    thread: int | None = None
    payload: int | None = None

    def label(self) -> str:
        """Canonical string form: name[@thread][#payload]."""
        s = self.name
        if self.thread is not None:
            s += f"@{self.thread}"
        if self.payload is not None:
            s += f"#{self.payload}"
        return s

    def key(self) -> tuple:
        """Total order used wherever canonical action order matters."""
        return (
            self.name,
            self.kind.value,
            -1 if self.thread is None else self.thread,
            float("-inf") if self.payload is None else self.payload,
        )

    def __repr__(self) -> str:
        return f"Action({self.label()}:{self.kind.value})"


_ACTION_RE = re.compile(r"^(?P<name>[^@#\s,]+)(@(?P<thread>\d+))?(#(?P<payload>-?\d+))?$")


def parse_action(text: str, kind: ActionKind) -> Action:
    """Parse the canonical label form back into an Action of a given kind."""
    m = _ACTION_RE.match(text.strip())
    if m is None:
        raise ParseError(f"malformed action {text!r}")
    thread = m.group("thread")
    payload = m.group("payload")
    return Action(
        name=m.group("name"),
        kind=kind,
        thread=None if thread is None else int(thread),
        payload=None if payload is None else int(payload),
    )


def sort_actions(actions: Iterable[Action]) -> list[Action]:
    return sorted(actions, key=Action.key)


IDLE = Action("idle", ActionKind.IDLE)

Trace = tuple[Action, ...]


@dataclass(frozen=True)
class Alphabet:
    """Partition of an LTS alphabet into program, call, return, internal, idle."""

    program: frozenset[Action]
    calls: frozenset[Action]
    returns: frozenset[Action]
    internal: frozenset[Action]
    idle: Action = IDLE

    def __post_init__(self) -> None:
        parts = {
            ActionKind.PROGRAM: self.program,
            ActionKind.CALL: self.calls,
            ActionKind.RETURN: self.returns,
            ActionKind.INTERNAL: self.internal,
        }
        seen: dict[str, ActionKind] = {}
        for kind, group in parts.items():
            for a in group:
                if a.kind is not kind:
                    raise ModelError(f"{a} listed under {kind.value} but has kind {a.kind.value}")
                if a.label() in seen:
                    raise ModelError(
                        f"action {a.label()} appears in both {seen[a.label()].value} and {kind.value}"
                    )
                seen[a.label()] = kind
        if self.idle.kind is not ActionKind.IDLE:
            raise ModelError(f"idle action {self.idle} must have idle kind")
        if self.idle.label() in seen:
            raise ModelError(
                f"action {self.idle.label()} appears in both {seen[self.idle.label()].value} and idle"
            )

    @property
    def gamma_p(self) -> frozenset[Action]:
        """Externally visible actions: program plus calls plus returns."""
        return self.program | self.calls | self.returns

    @property
    def cr(self) -> frozenset[Action]:
        return self.calls | self.returns

    @property
    def all_actions(self) -> frozenset[Action]:
        return self.program | self.calls | self.returns | self.internal | {self.idle}

    def non_idle(self) -> frozenset[Action]:
        return self.program | self.calls | self.returns | self.internal


@dataclass(frozen=True)
class Lasso:
    """Finite representation of an infinite trace: stem then repeated cycle."""

    stem: Trace
    cycle: Trace

    def __post_init__(self) -> None:
        if not self.cycle:
            raise ModelError("lasso cycle must be non-empty")

    def unroll(self, repeats: int) -> Trace:
        return self.stem + self.cycle * repeats


class Lts:
    """Deterministic LTS over dense integer states.

    The transition function is a partial map (state, action) -> state,
    which makes per-edge determinism structural.  Instances are
    immutable after construction and safe to share.
    """

    def __init__(
        self,
        alphabet: Alphabet,
        num_states: int,
        initial: int,
        transitions: Mapping[tuple[int, Action], int],
        labels: Sequence[Any] | None = None,
    ):
        if not (0 <= initial < num_states):
            raise ModelError(f"initial state {initial} out of range 0..{num_states - 1}")
        if labels is not None and len(labels) != num_states:
            raise ModelError(f"{len(labels)} labels for {num_states} states")
        known = alphabet.all_actions
        out: list[dict[Action, int]] = [dict() for _ in range(num_states)]
        for (s, a), t in transitions.items():
            if not (0 <= s < num_states) or not (0 <= t < num_states):
                raise ModelError(f"transition ({s}, {a.label()}, {t}) has a dangling state index")
            if a not in known:
                raise ModelError(f"transition on {a.label()} not in the declared alphabet")
            if a == alphabet.idle and t != s:
                raise ModelError(f"idle transition {s} -> {t} must be a self-loop")
            out[s][a] = t
        self.alphabet = alphabet
        self.num_states = num_states
        self.initial = initial
        self.labels = tuple(labels) if labels is not None else None
        # canonical per-state order, used for reproducible iteration
        self._out: tuple[dict[Action, int], ...] = tuple(
            {a: row[a] for a in sort_actions(row)} for row in out
        )

    def label_of(self, s: int) -> str:
        if self.labels is not None:
            return str(self.labels[s])
        return f"s{s}"

    def out_edges(self, s: int) -> Iterator[tuple[Action, int]]:
        """Outgoing (action, successor) pairs of s in canonical action order."""
        return iter(self._out[s].items())

    def edges(self) -> Iterator[tuple[int, Action, int]]:
        for s in range(self.num_states):
            for a, t in self._out[s].items():
                yield (s, a, t)

    def enabled(self, s: int) -> frozenset[Action]:
        """Exactly the actions with a transition out of s."""
        if not (0 <= s < self.num_states):
            raise ModelError(f"state index {s} out of range")
        return frozenset(self._out[s])

    def step(self, s: int, a: Action) -> int | None:
        """Successor of s under a, or None when a is not enabled."""
        return self._out[s].get(a)

    def run(self, sigma: Sequence[Action]) -> int:
        """State reached from the initial state after sigma; run(()) is initial."""
        s = self.initial
        for i, a in enumerate(sigma):
            t = self._out[s].get(a)
            if t is None:
                raise StepNotEnabled(i, a, s)
            s = t
        return s

    def accepts(self, sigma: Sequence[Action]) -> bool:
        """True when sigma replays from the initial state."""
        try:
            self.run(sigma)
        except StepNotEnabled:
            return False
        return True

    def reachable(self) -> list[int]:
        """States reachable from the initial state, in BFS order."""
        seen = {self.initial}
        order = [self.initial]
        queue = [self.initial]
        while queue:
            s = queue.pop(0)
            for _, t in self._out[s].items():
                if t not in seen:
                    seen.add(t)
                    order.append(t)
                    queue.append(t)
        return order


def project(tau: Sequence[Action], gamma: Iterable[Action]) -> Trace:
    """Order-preserving restriction of tau to actions in gamma."""
    g = frozenset(gamma)
    return tuple(a for a in tau if a in g)


def project_lasso(lasso: Lasso, gamma: Iterable[Action]) -> Lasso | Trace:
    """Project stem and cycle separately; an all-filtered cycle leaves a finite trace."""
    g = frozenset(gamma)
    stem = project(lasso.stem, g)
    cycle = project(lasso.cycle, g)
    if not cycle:
        return stem
    return Lasso(stem, cycle)


def idle_complete(lts: Lts) -> Lts:
    """Add an idle self-loop to exactly the states with no other enabled action."""
    idle = lts.alphabet.idle
    transitions = {(s, a): t for s, a, t in lts.edges()}
    for s in range(lts.num_states):
        if not any(a != idle for a in lts.enabled(s)):
            transitions[(s, idle)] = s
    return Lts(lts.alphabet, lts.num_states, lts.initial, transitions, lts.labels)


def is_idle_complete(lts: Lts) -> bool:
    return all(lts.enabled(s) for s in range(lts.num_states))


def check_deterministic(
    lts_or_edges: Lts | Iterable[tuple[int, Action, int]],
) -> tuple[bool, tuple[int, Action] | None]:
    """Is the transition relation single-valued per (state, action)?

    Accepts either an Lts (true by construction) or raw edge triples, and
    returns the first offending (state, action) on failure.
    """
    if isinstance(lts_or_edges, Lts):
        rows: Iterable[tuple[int, Action, int]] = lts_or_edges.edges()
    else:
        rows = lts_or_edges
    seen: dict[tuple[int, Action], int] = {}
    for s, a, t in rows:
        prev = seen.get((s, a))
        if prev is not None and prev != t:
            return False, (s, a)
        seen[(s, a)] = t
    return True, None


def validate_lasso(lts: Lts, lasso: Lasso) -> None:
    """Replay the lasso and require the cycle to return to its start state."""
    anchor = lts.run(lasso.stem)
    s = anchor
    for i, a in enumerate(lasso.cycle):
        t = lts.step(s, a)
        if t is None:
            raise StepNotEnabled(len(lasso.stem) + i, a, s)
        s = t
    if s != anchor:
        raise ModelError(
            f"lasso cycle ends in state {s}, expected to return to {anchor}"
        )


class LtsBuilder:
    """Incremental construction with states interned by label."""

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet
        self._index: dict[Any, int] = {}
        self._labels: list[Any] = []
        self._transitions: dict[tuple[int, Action], int] = {}
        self._initial: int | None = None

    def state(self, label: Any) -> int:
        idx = self._index.get(label)
        if idx is None:
            idx = len(self._labels)
            self._index[label] = idx
            self._labels.append(label)
        return idx

    def set_initial(self, label: Any) -> int:
        idx = self.state(label)
        self._initial = idx
        return idx

    def add(self, src: Any, action: Action, dst: Any) -> None:
        s, t = self.state(src), self.state(dst)
        prev = self._transitions.get((s, action))
        if prev is not None and prev != t:
            raise ModelError(
                f"duplicate transition ({src!r}, {action.label()}) with two successors"
            )
        self._transitions[(s, action)] = t

    def build(self, complete: bool = True) -> Lts:
        if self._initial is None:
            raise ModelError("no initial state set")
        lts = Lts(
            self.alphabet,
            len(self._labels),
            self._initial,
            self._transitions,
            labels=self._labels,
        )
        return idle_complete(lts) if complete else lts
