"""Reading and writing LTS models.

Two interchangeable surface syntaxes, a line-oriented text form and a
JSON form, plus a Graphviz export.  Both writers are canonical: the
same model always serializes to the same bytes.
"""

from __future__ import annotations

import json
from typing import Any

from .errors import ModelError, ParseError
from .lts import (
    Action,
    ActionKind,
    Alphabet,
    IDLE,
    Lts,
    parse_action,
    sort_actions,
)

_SECTION_KINDS = {
    "program": ActionKind.PROGRAM,
    "calls": ActionKind.CALL,
    "returns": ActionKind.RETURN,
    "internal": ActionKind.INTERNAL,
}


def _build_alphabet(
    groups: dict[str, list[Action]], where: dict[str, int] | None = None
) -> Alphabet:
    seen: dict[str, str] = {}
    for section, actions in groups.items():
        for a in actions:
            if a.label() == IDLE.label():
                raise ParseError(
                    f"action {a.label()!r} is reserved",
                    line=None if where is None else where.get(section),
                )
            if a.label() in seen:
                raise ParseError(
                    f"action {a.label()!r} declared in both "
                    f"{seen[a.label()]!r} and {section!r}",
                    line=None if where is None else where.get(section),
                )
            seen[a.label()] = section
    return Alphabet(
        program=frozenset(groups["program"]),
        calls=frozenset(groups["calls"]),
        returns=frozenset(groups["returns"]),
        internal=frozenset(groups["internal"]),
    )


# --- text format -------------------------------------------------------


def parse_lts_text(text: str) -> Lts:
    """Parse the line-oriented model format.

    Sections `program:`, `calls:`, `returns:`, `internal:` list actions
    (comma separated, `name[@thread][#payload]`), `initial:` names the
    start state, and each remaining line is `SRC -- action -> DST`.
    """
    groups: dict[str, list[Action]] = {k: [] for k in _SECTION_KINDS}
    where: dict[str, int] = {}
    initial: str | None = None
    edges: list[tuple[str, str, str, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        # `#` marks payloads, so comments use `//` (inline or whole-line)
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        key = head.strip().lower()
        if sep and key in _SECTION_KINDS:
            if key in where:
                raise ParseError(f"section {key!r} declared twice", line=lineno)
            where[key] = lineno
            kind = _SECTION_KINDS[key]
            for part in rest.split(","):
                part = part.strip()
                if part:
                    try:
                        groups[key].append(parse_action(part, kind))
                    except ParseError as e:
                        raise ParseError(str(e), line=lineno) from None
            continue
        if sep and key == "initial":
            if initial is not None:
                raise ParseError("initial state declared twice", line=lineno)
            initial = rest.strip()
            if not initial:
                raise ParseError("initial state name is empty", line=lineno)
            continue
        if "--" in line and "->" in line:
            src, _, tail = line.partition("--")
            act, _, dst = tail.partition("->")
            src, act, dst = src.strip(), act.strip(), dst.strip()
            if not src or not act or not dst:
                raise ParseError(f"malformed transition {line!r}", line=lineno)
            edges.append((src, act, dst, lineno))
            continue
        raise ParseError(f"unrecognized line {line!r}", line=lineno)

    alphabet = _build_alphabet(groups, where)
    if initial is None:
        raise ParseError("no initial state declared")

    by_label = {a.label(): a for a in alphabet.non_idle()}
    by_label[IDLE.label()] = IDLE

    states: dict[str, int] = {}
    labels: list[str] = []

    def intern(name: str) -> int:
        if name not in states:
            states[name] = len(labels)
            labels.append(name)
        return states[name]

    intern(initial)
    transitions: dict[tuple[int, Action], int] = {}
    for src, act, dst, lineno in edges:
        action = by_label.get(act)
        if action is None:
            raise ParseError(f"undeclared action {act!r}", line=lineno)
        s, t = intern(src), intern(dst)
        prev = transitions.get((s, action))
        if prev is not None and prev != t:
            raise ParseError(
                f"nondeterministic: ({src!r}, {act!r}) already maps to {labels[prev]!r}",
                line=lineno,
            )
        transitions[(s, action)] = t

    try:
        return Lts(alphabet, len(labels), states[initial], transitions, labels)
    except ModelError as e:
        raise ParseError(str(e)) from None


def format_lts_text(lts: Lts) -> str:
    """Canonical text form; parse(format(m)) reproduces m up to state order."""
    a = lts.alphabet
    lines = []
    for section, group in (
        ("program", a.program),
        ("calls", a.calls),
        ("returns", a.returns),
        ("internal", a.internal),
    ):
        lines.append(f"{section}: " + ", ".join(x.label() for x in sort_actions(group)))
    lines.append(f"initial: {lts.label_of(lts.initial)}")
    rows = sorted(
        (lts.label_of(s), act, lts.label_of(t))
        for s, action, t in lts.edges()
        for act in [action.label()]
    )
    for src, act, dst in rows:
        lines.append(f"{src} -- {act} -> {dst}")
    return "\n".join(lines) + "\n"


# --- JSON format -------------------------------------------------------


def lts_to_dict(lts: Lts) -> dict[str, Any]:
    a = lts.alphabet
    return {
        "alphabet": {
            "program": [x.label() for x in sort_actions(a.program)],
            "calls": [x.label() for x in sort_actions(a.calls)],
            "returns": [x.label() for x in sort_actions(a.returns)],
            "internal": [x.label() for x in sort_actions(a.internal)],
        },
        "initial": lts.label_of(lts.initial),
        "transitions": sorted(
            [lts.label_of(s), action.label(), lts.label_of(t)]
            for s, action, t in lts.edges()
        ),
    }


def lts_from_dict(data: dict[str, Any]) -> Lts:
    try:
        raw_alpha = data["alphabet"]
        raw_initial = data["initial"]
        raw_edges = data["transitions"]
    except (KeyError, TypeError) as e:
        raise ParseError(f"missing model field: {e}") from None

    groups: dict[str, list[Action]] = {}
    for section, kind in _SECTION_KINDS.items():
        groups[section] = [parse_action(x, kind) for x in raw_alpha.get(section, [])]
    alphabet = _build_alphabet(groups)

    by_label = {a.label(): a for a in alphabet.non_idle()}
    by_label[IDLE.label()] = IDLE

    states: dict[str, int] = {}
    labels: list[str] = []

    def intern(name: str) -> int:
        if name not in states:
            states[name] = len(labels)
            labels.append(name)
        return states[name]

    intern(str(raw_initial))
    transitions: dict[tuple[int, Action], int] = {}
    for row in raw_edges:
        if len(row) != 3:
            raise ParseError(f"transition row {row!r} is not [src, action, dst]")
        src, act, dst = (str(x) for x in row)
        action = by_label.get(act)
        if action is None:
            raise ParseError(f"undeclared action {act!r}")
        s, t = intern(src), intern(dst)
        prev = transitions.get((s, action))
        if prev is not None and prev != t:
            raise ParseError(f"nondeterministic: ({src!r}, {act!r}) has two successors")
        transitions[(s, action)] = t

    try:
        return Lts(alphabet, len(labels), states[str(raw_initial)], transitions, labels)
    except ModelError as e:
        raise ParseError(str(e)) from None


def dumps(lts: Lts) -> str:
    return json.dumps(lts_to_dict(lts), indent=2, sort_keys=True) + "\n"


def loads(text: str) -> Lts:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno) from None
    return lts_from_dict(data)


def load_model(text: str) -> Lts:
    """Accept either surface syntax; JSON when the payload looks like JSON."""
    if text.lstrip().startswith("{"):
        return loads(text)
    return parse_lts_text(text)


# --- Graphviz ----------------------------------------------------------

_KIND_STYLE = {
    ActionKind.PROGRAM: "color=black",
    ActionKind.CALL: "color=blue",
    ActionKind.RETURN: "color=blue,style=dashed",
    ActionKind.INTERNAL: "color=gray40",
    ActionKind.IDLE: "color=gray70,style=dotted",
}


def to_dot(lts: Lts, name: str = "lts") -> str:
    """Graphviz digraph; the initial state is marked with an incoming arrow."""

    def q(s: str) -> str:
        return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'

    lines = [f"digraph {q(name)} {{", "  rankdir=LR;", "  node [shape=ellipse];"]
    lines.append('  __start [shape=point,label=""];')
    lines.append(f"  __start -> {q(lts.label_of(lts.initial))};")
    for s in range(lts.num_states):
        lines.append(f"  {q(lts.label_of(s))};")
    rows = sorted(
        ((lts.label_of(s), action, lts.label_of(t)) for s, action, t in lts.edges()),
        key=lambda r: (r[0], r[1].key(), r[2]),
    )
    for src, action, dst in rows:
        style = _KIND_STYLE[action.kind]
        lines.append(f"  {q(src)} -> {q(dst)} [label={q(action.label())},{style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
