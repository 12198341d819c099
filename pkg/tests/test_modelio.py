import json

import pytest
from hypothesis import given, strategies as st

from ltsim import (
    Action,
    ActionKind,
    Alphabet,
    Lts,
    ParseError,
    dumps,
    format_lts_text,
    load_model,
    loads,
    lts_from_dict,
    lts_to_dict,
    parse_lts_text,
    to_dot,
)

SAMPLE = """
// a one-cell register
calls: rd@1, wr@1#5
returns: ret@1#0, ret@1#5
internal: commit
initial: empty

empty -- wr@1#5 -> pending
pending -- commit -> full   // takes effect here
full -- ret@1#5 -> full
empty -- rd@1 -> reading
reading -- ret@1#0 -> empty
"""


def edge_labels(m: Lts) -> set[tuple[str, str, str]]:
    return {(m.label_of(s), a.label(), m.label_of(t)) for s, a, t in m.edges()}


def test_parse_text_basics():
    m = parse_lts_text(SAMPLE)
    assert m.label_of(m.initial) == "empty"
    assert m.num_states == 4
    assert ("pending", "commit", "full") in edge_labels(m)
    labels = {a.label() for a in m.alphabet.calls}
    assert labels == {"rd@1", "wr@1#5"}


@pytest.mark.parametrize(
    "text, fragment, line",
    [
        ("calls: a\ncalls: b\ninitial: s\n", "declared twice", 2),
        ("initial: s\ns -- zap -> s\n", "undeclared action", 2),
        ("calls: c\ninitial: s\ns -- c -> a\ns -- c -> b\n", "nondeterministic", 4),
        ("initial: s\ns --  -> t\n", "malformed transition", 2),
        ("initial: s\nwhat is this\n", "unrecognized line", 2),
        ("internal: idle\ninitial: s\n", "reserved", 1),
        ("calls: x\nreturns: x\ninitial: s\n", "declared in both", 2),
        ("calls: a\n", "no initial state", None),
        ("initial:\n", "empty", 1),
    ],
)
def test_parse_text_errors_carry_positions(text, fragment, line):
    with pytest.raises(ParseError) as e:
        parse_lts_text(text)
    assert fragment in str(e.value)
    assert e.value.line == line


def test_text_round_trip_is_canonical():
    m = parse_lts_text(SAMPLE)
    text = format_lts_text(m)
    again = parse_lts_text(text)
    assert edge_labels(again) == edge_labels(m)
    assert again.label_of(again.initial) == "empty"
    # the writer is a fixpoint
    assert format_lts_text(again) == text


def test_json_round_trip_and_stability():
    m = parse_lts_text(SAMPLE)
    payload = dumps(m)
    again = loads(payload)
    assert edge_labels(again) == edge_labels(m)
    assert dumps(again) == payload
    assert json.loads(payload)["initial"] == "empty"


def test_lts_from_dict_rejects_garbage():
    with pytest.raises(ParseError, match="missing model field"):
        lts_from_dict({"alphabet": {}})
    base = lts_to_dict(parse_lts_text(SAMPLE))
    bad = dict(base, transitions=[["a", "b"]])
    with pytest.raises(ParseError, match="not \\[src, action, dst\\]"):
        lts_from_dict(bad)


def test_loads_reports_json_position():
    with pytest.raises(ParseError) as e:
        loads("{\n  broken\n}")
    assert e.value.line == 2


def test_load_model_sniffs_format():
    m = parse_lts_text(SAMPLE)
    assert edge_labels(load_model(dumps(m))) == edge_labels(m)
    assert edge_labels(load_model(format_lts_text(m))) == edge_labels(m)


def test_to_dot_marks_initial_and_quotes():
    m = parse_lts_text(SAMPLE)
    dot = to_dot(m, name='x"y')
    assert '__start -> "empty";' in dot
    assert 'digraph "x\\"y"' in dot
    assert '"pending" -> "full" [label="commit",color=gray40];' in dot


# --- property: parse inverts format for arbitrary small models ---------------


@st.composite
def small_lts(draw):
    n = draw(st.integers(1, 4))
    c = Action("c", ActionKind.CALL)
    r = Action("r", ActionKind.RETURN, payload=0)
    i = Action("i", ActionKind.INTERNAL)
    alpha = Alphabet(frozenset(), frozenset({c}), frozenset({r}), frozenset({i}))
    transitions = {}
    for s in range(n):
        for a in (c, r, i):
            if draw(st.booleans()):
                transitions[(s, a)] = draw(st.integers(0, n - 1))
    return Lts(alpha, n, draw(st.integers(0, n - 1)), transitions)


@given(small_lts())
def test_text_and_json_round_trips(m):
    for reread in (parse_lts_text(format_lts_text(m)), loads(dumps(m))):
        assert edge_labels(reread) == edge_labels(m)
        assert reread.label_of(reread.initial) == m.label_of(m.initial)
        assert {a.label() for a in reread.alphabet.non_idle()} == {
            a.label() for a in m.alphabet.non_idle()
        }
