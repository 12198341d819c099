"""Synchronized product of a client program with a shared object.

The program side owns the program actions, the object side owns the
internal actions, and calls and returns synchronize both.  Component
idle loops are dropped; the product gets its own idle loop exactly at
states where nothing else is enabled.
"""

from __future__ import annotations

from collections import deque
from typing import NamedTuple

from .errors import AlphabetMismatch
from .lts import Action, ActionKind, Alphabet, Lts


class ProductState(NamedTuple):
    """Component state indices of one product state."""

    prog: int
    obj: int


class ProductLts(Lts):
    """Product LTS remembering which component pair each state is."""

    def __init__(self, *args, parts: list[ProductState], **kwargs):
        super().__init__(*args, **kwargs)
        self.parts: tuple[ProductState, ...] = tuple(parts)

    def part(self, s: int) -> ProductState:
        return self.parts[s]


def _check_interfaces(prog: Lts, obj: Lts) -> None:
    pa, oa = prog.alphabet, obj.alphabet
    if pa.internal:
        a = min(pa.internal, key=Action.key)
        raise AlphabetMismatch(a, "program side declares internal actions")
    if oa.program:
        a = min(oa.program, key=Action.key)
        raise AlphabetMismatch(a, "object side declares program actions")
    for label, mine, theirs in (("calls", pa.calls, oa.calls), ("returns", pa.returns, oa.returns)):
        diff = mine ^ theirs
        if diff:
            a = min(diff, key=Action.key)
            side = "program" if a in mine else "object"
            raise AlphabetMismatch(a, f"{label} declared only on the {side} side")
    clash = {a.label() for a in pa.program} & {a.label() for a in oa.internal}
    if clash:
        name = sorted(clash)[0]
        a = next(x for x in pa.program if x.label() == name)
        raise AlphabetMismatch(a, "label used as both a program and an internal action")


def product(prog: Lts, obj: Lts) -> ProductLts:
    """Reachable synchronized product, idle-completed.

    Program actions move the program component alone, internal actions
    move the object alone, and calls and returns require both to move.
    """
    _check_interfaces(prog, obj)
    pa, oa = prog.alphabet, obj.alphabet
    alphabet = Alphabet(
        program=pa.program,
        calls=pa.calls,
        returns=pa.returns,
        internal=oa.internal,
    )

    start = ProductState(prog.initial, obj.initial)
    index: dict[ProductState, int] = {start: 0}
    parts: list[ProductState] = [start]
    transitions: dict[tuple[int, Action], int] = {}
    queue: deque[ProductState] = deque([start])

    def intern(ps: ProductState) -> int:
        i = index.get(ps)
        if i is None:
            i = len(parts)
            index[ps] = i
            parts.append(ps)
            queue.append(ps)
        return i

    while queue:
        ps = queue.popleft()
        s = index[ps]
        for a, pt in prog.out_edges(ps.prog):
            if a.kind is ActionKind.IDLE:
                continue
            if a in pa.program:
                transitions[(s, a)] = intern(ProductState(pt, ps.obj))
            else:  # call or return: the object must also enable it
                ot = obj.step(ps.obj, a)
                if ot is not None:
                    transitions[(s, a)] = intern(ProductState(pt, ot))
        for a, ot in obj.out_edges(ps.obj):
            if a in oa.internal:
                transitions[(s, a)] = intern(ProductState(ps.prog, ot))

    sources = {s for (s, _a) in transitions}
    for s in range(len(parts)):
        if s not in sources:
            transitions[(s, alphabet.idle)] = s

    labels = [f"{prog.label_of(ps.prog)}|{obj.label_of(ps.obj)}" for ps in parts]
    return ProductLts(alphabet, len(parts), 0, transitions, labels, parts=parts)
