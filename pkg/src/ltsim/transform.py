"""Turning a concrete scheduler into an abstract one along a simulation.

Given products P x O1 and P x O2, a simulation certificate between the
objects, and a scheduler S1 for the concrete product, this module maps
every bounded concrete trace to an abstract one (program actions map to
themselves, object actions to the certificate's chosen alpha), then
derives the abstract scheduler S2 that schedules exactly the mapped
traces.  The structural facts that make S2 well defined are exposed as
five executable checks over the bounded trees, plus a bounded
comparison of the two projected trace sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .composition import ProductLts
from .errors import ContractViolation, DepthExhausted
from .lts import Action, ActionKind, Lts, Trace, project, sort_actions
from .scheduler import (
    Scheduler,
    TraceNode,
    TracePrefixTree,
    enumerate_traces,
    node_budget,
)
from .simulation import SimulationCertificate


def _fmt(trace: Trace) -> str:
    return "·".join(a.label() for a in trace) if trace else "ε"


# --- the mapping m ------------------------------------------------------


def mapping_m(
    cs: int, a: Action, as_: int, cert: SimulationCertificate
) -> Trace:
    """Abstract action sequence matching one concrete action.

    Program actions map to themselves.  Object actions (calls, returns,
    internal) use the certificate's fixed choice for the object-state
    pair, so the same inputs always give the same sequence.
    """
    if a.kind is ActionKind.PROGRAM:
        return (a,)
    if a.kind is ActionKind.IDLE:
        raise ContractViolation("the idle action has no object-level mapping")
    if (cs, as_) not in cert.relation:
        raise ContractViolation(f"object states ({cs}, {as_}) are not related")
    entry = cert.choice.get((cs, a, as_))
    if entry is None:
        raise ContractViolation(
            f"certificate has no choice for ({cs}, {a.label()}, {as_})"
        )
    return entry.alpha


# --- mapped trace trees -------------------------------------------------


@dataclass
class MappedTraces:
    """Bounded concrete trace tree with its abstract image tree.

    Every concrete node u carries meta["image"], the image-tree node of
    its mapped trace; image nodes carry meta["s2"], the scheduled set
    derived from the governing diagram (None while the bounded tree
    cannot determine it), and meta["preimages"].  conflicts records
    image nodes that two diagrams tried to annotate differently, which
    a deterministic concrete scheduler never produces.
    """

    concrete: TracePrefixTree
    image: TracePrefixTree
    prod1: ProductLts
    prod2: ProductLts
    cert: SimulationCertificate
    s1: Scheduler
    depth: int
    conflicts: list[str] = field(default_factory=list)

    @property
    def gamma_p(self) -> frozenset[Action]:
        return self.prod1.alphabet.gamma_p

    def link(self, node: TraceNode) -> TraceNode:
        return node.meta["image"]

    def linked(self) -> Iterator[tuple[TraceNode, TraceNode]]:
        for node in self.concrete.nodes():
            yield node, node.meta["image"]

    def frontier(self) -> list[TraceNode]:
        """Concrete leaves sitting at the depth bound (truncated futures)."""
        return [u for u in self.concrete.leaves() if u.depth >= self.depth]

    def settled_image_length(self) -> int | None:
        """Image length below which the image tree is complete.

        Anything shorter than every frontier leaf's image is fully
        determined; None means no frontier (the tree closed early).
        """
        frontier = self.frontier()
        if not frontier:
            return None
        return min(self.link(u).depth for u in frontier)


def build_f(
    prod1: ProductLts,
    s1: Scheduler,
    prod2: ProductLts,
    cert: SimulationCertificate,
    depth: int,
    budget: int | None = None,
) -> MappedTraces:
    """Map every bounded concrete trace to its abstract image.

    Walks the consistent traces of prod1 under s1 to the given depth;
    each step extends the image by the mapped sequence, replayed on
    prod2.  The empty trace maps to the empty trace.  The concrete idle
    action maps to the abstract idle when enabled at the image state
    and to the empty sequence otherwise.
    """
    for prod, name in ((prod1, "concrete"), (prod2, "abstract")):
        if not isinstance(prod, ProductLts):
            raise ContractViolation(f"{name} system is not a product")
    if prod1.alphabet.gamma_p != prod2.alphabet.gamma_p:
        raise ContractViolation("products disagree on program, call or return actions")

    limit = node_budget(budget)
    gamma_p = prod1.alphabet.gamma_p
    idle1 = prod1.alphabet.idle
    idle2 = prod2.alphabet.idle

    concrete = enumerate_traces(prod1, s1, depth, budget=limit)
    image = TracePrefixTree(prod2.initial, depth * max(cert.alpha_bound, 1) + 1)
    mt = MappedTraces(concrete, image, prod1, prod2, cert, s1, depth)

    image.root.meta["preimages"] = [concrete.root]
    concrete.root.meta["image"] = image.root

    def annotate(w: TraceNode, value: frozenset[Action], source: TraceNode) -> None:
        prev = w.meta.get("s2")
        if prev is None:
            w.meta["s2"] = value
            w.meta["s2_src"] = source
        elif prev != value:
            mt.conflicts.append(
                f"image node {_fmt(w.trace())} scheduled as "
                f"{{{', '.join(a.label() for a in sort_actions(prev))}}} and "
                f"{{{', '.join(a.label() for a in sort_actions(value))}}}"
            )

    for u in concrete.nodes():
        if not u.children:
            continue
        v = u.meta["image"]
        scheduled = frozenset(u.children)  # = s1 choices that are enabled
        for a, u2 in u.children.items():
            if a == idle1:
                alpha: Trace = (idle2,) if prod2.step(v.state, idle2) is not None else ()
            else:
                cs = prod1.part(u.state).obj
                as_ = prod2.part(v.state).obj
                alpha = mapping_m(cs, a, as_, cert)
            w = v
            for i, b in enumerate(alpha):
                annotate(w, scheduled if b in gamma_p else frozenset({b}), u)
                nxt_state = prod2.step(w.state, b)
                if nxt_state is None:
                    raise ContractViolation(
                        f"image of {_fmt(u2.trace())} does not replay: "
                        f"{b.label()} not enabled after {_fmt(w.trace())}"
                    )
                child = w.children.get(b)
                if child is None:
                    child = image.extend(w, b, nxt_state)
                    if image.size > limit:
                        raise ContractViolation(
                            f"image tree exceeded the node budget {limit}"
                        )
                w = child
            u2.meta["image"] = w
            w.meta.setdefault("preimages", []).append(u2)
    return mt


# --- the abstract scheduler ---------------------------------------------


class S2Scheduler(Scheduler):
    """Scheduler of exactly the image traces.

    Inside the image tree it returns the annotated set: the concrete
    scheduler's set when the next image action is a program, call or
    return action, and the singleton next action otherwise.  Traces
    outside the image get the idle singleton, which no consistent trace
    ever reaches.  Queries past the bounded tree trigger a deeper
    rebuild up to a cap, then raise DepthExhausted.
    """

    def __init__(
        self,
        mt: MappedTraces,
        auto_deepen: bool = True,
        max_depth: int | None = None,
        budget: int | None = None,
    ):
        self.mt = mt
        self.auto_deepen = auto_deepen
        self.max_depth = (
            max_depth
            if max_depth is not None
            else mt.depth + 2 * mt.prod1.num_states + 8
        )
        self.budget = budget

    def _resolve(self, trace: Trace) -> frozenset[Action] | None:
        """Scheduled set, the idle singleton off-image, None when unbuilt."""
        node = self.mt.image.root
        for a in trace:
            child = node.children.get(a)
            if child is None:
                value = node.meta.get("s2")
                if value is None or (a in value and self.mt.prod2.step(node.state, a) is not None):
                    return None  # inside the unbuilt fringe
                return frozenset({self.mt.prod2.alphabet.idle})
            node = child
        return node.meta.get("s2")

    def schedule(self, trace: Trace) -> frozenset[Action]:
        trace = tuple(trace)
        value = self._resolve(trace)
        while value is None:
            if not self.auto_deepen or self.mt.depth >= self.max_depth:
                raise DepthExhausted(len(trace) + 1, self.mt.depth)
            self.mt = build_f(
                self.mt.prod1,
                self.mt.s1,
                self.mt.prod2,
                self.mt.cert,
                min(self.mt.depth + 4, self.max_depth),
                budget=self.budget,
            )
            value = self._resolve(trace)
        return value


def construct_s2(
    mt: MappedTraces,
    s1: Scheduler | None = None,
    auto_deepen: bool = True,
    budget: int | None = None,
) -> S2Scheduler:
    """The abstract scheduler derived from a mapped trace tree.

    s1 is accepted for signature symmetry; the tree already carries it.
    """
    if s1 is not None and s1 is not mt.s1:
        raise ContractViolation("scheduler does not match the one the tree was built with")
    return S2Scheduler(mt, auto_deepen=auto_deepen, budget=budget)


# --- lemma checks -------------------------------------------------------


@dataclass(frozen=True)
class LemmaResult:
    """Verdict of one bounded structural check, with a counterexample on failure."""

    lemma: int
    ok: bool
    counterexample: str | None = None
    checked: int = 0


def _check_projection(mt: MappedTraces) -> LemmaResult:
    """Image traces project onto program, call and return actions unchanged.

    Also confirms the linked end states agree on the program component
    and are certificate-related on the object component.
    """
    gamma_p = mt.gamma_p
    checked = 0
    for u, v in mt.linked():
        checked += 1
        if project(u.trace(), gamma_p) != project(v.trace(), gamma_p):
            return LemmaResult(1, False, f"projections differ at {_fmt(u.trace())}", checked)
        p1 = mt.prod1.part(u.state)
        p2 = mt.prod2.part(v.state)
        if p1.prog != p2.prog:
            return LemmaResult(
                1, False, f"program components differ at {_fmt(u.trace())}", checked
            )
        if (p1.obj, p2.obj) not in mt.cert.relation:
            return LemmaResult(
                1, False, f"object states unrelated at {_fmt(u.trace())}", checked
            )
    return LemmaResult(1, True, None, checked)


def _check_common_prefix(mt: MappedTraces) -> LemmaResult:
    """Equal image projections force a prefix chain with silent surplus.

    Concrete traces whose images share the same program-action content
    must be prefixes of one another, the longer adding only actions
    outside the program, call and return alphabet (internal or idle).
    """
    gamma_p = mt.gamma_p
    groups: dict[Trace, list[TraceNode]] = {}
    for u, v in mt.linked():
        groups.setdefault(project(v.trace(), gamma_p), []).append(u)
    checked = 0
    for nodes in groups.values():
        nodes.sort(key=lambda n: n.depth)
        for prev, cur in zip(nodes, nodes[1:]):
            checked += 1
            a, b = prev.trace(), cur.trace()
            if b[: len(a)] != a:
                return LemmaResult(
                    2,
                    False,
                    f"{_fmt(a)} and {_fmt(b)} share image projections but neither extends the other",
                    checked,
                )
            if any(x in gamma_p for x in b[len(a):]):
                return LemmaResult(
                    2,
                    False,
                    f"surplus of {_fmt(b)} over {_fmt(a)} contains an observable action",
                    checked,
                )
    return LemmaResult(2, True, None, checked)


def _check_unique_diagram(mt: MappedTraces) -> LemmaResult:
    """Each image prefix is governed by exactly one expansion step.

    Equivalent bounded form: the empty trace maps to the empty trace,
    images are prefix-monotone along every concrete step, and no two
    diagrams annotated one image node differently.
    """
    if mt.link(mt.concrete.root) is not mt.image.root:
        return LemmaResult(3, False, "the empty trace does not map to the empty trace", 1)
    checked = 1
    for u, v in mt.linked():
        for a, u2 in u.children.items():
            checked += 1
            v2 = mt.link(u2)
            node, hops = v2, v2.depth - v.depth
            if hops < 0:
                return LemmaResult(
                    3, False, f"image shrinks on step {a.label()} after {_fmt(u.trace())}", checked
                )
            for _ in range(hops):
                node = node.parent
            if node is not v:
                return LemmaResult(
                    3,
                    False,
                    f"image of {_fmt(u2.trace())} does not extend the image of its prefix",
                    checked,
                )
    if mt.conflicts:
        return LemmaResult(3, False, mt.conflicts[0], checked)
    return LemmaResult(3, True, None, checked)


def _check_common_origin(mt: MappedTraces) -> LemmaResult:
    """A shared image prefix always comes from a shared concrete prefix.

    For each image node, the concrete nodes whose image passes through
    it must contain a unique shallowest member that is an ancestor of
    all of them; that ancestor is the common concrete prefix.
    """
    order: dict[TraceNode, tuple[int, int]] = {}
    counter = 0

    def index(node: TraceNode) -> int:
        nonlocal counter
        counter += 1
        start = counter
        for child in node.children.values():
            index(child)
        order[node] = (start, counter)
        return start

    index(mt.concrete.root)

    def is_ancestor(a: TraceNode, b: TraceNode) -> bool:
        sa, ea = order[a]
        sb, eb = order[b]
        return sa <= sb and eb <= ea

    through: dict[TraceNode, list[TraceNode]] = {}
    for u, v in mt.linked():
        node: TraceNode | None = v
        while node is not None:
            through.setdefault(node, []).append(u)
            node = node.parent

    checked = 0
    for v, users in through.items():
        checked += 1
        shallowest = min(users, key=lambda n: n.depth)
        for u in users:
            if not is_ancestor(shallowest, u):
                return LemmaResult(
                    4,
                    False,
                    f"image prefix {_fmt(v.trace())} is shared by {_fmt(shallowest.trace())} "
                    f"and {_fmt(u.trace())}, which share no governing concrete prefix",
                    checked,
                )
    return LemmaResult(4, True, None, checked)


def _check_step_equivalence(mt: MappedTraces, s2: Scheduler) -> LemmaResult:
    """Scheduled-and-enabled extensions coincide with image membership.

    At every determined image node, the actions the abstract scheduler
    may take (scheduled and enabled) are exactly the node's children in
    the image tree.
    """
    checked = 0
    for v in mt.image.nodes():
        value = v.meta.get("s2")
        if value is None:
            continue  # beyond what the bounded tree determines
        scheduled = s2.schedule(v.trace())
        if scheduled != value:
            return LemmaResult(
                5,
                False,
                f"scheduler disagrees with the annotation at {_fmt(v.trace())}",
                checked,
            )
        checked += 1
        feasible = frozenset(
            a for a in scheduled if mt.prod2.step(v.state, a) is not None
        )
        children = frozenset(v.children)
        if feasible != children:
            missing = sort_actions(feasible ^ children)
            return LemmaResult(
                5,
                False,
                f"after {_fmt(v.trace())}: scheduled extensions and image children "
                f"differ on {missing[0].label()}",
                checked,
            )
    return LemmaResult(5, True, None, checked)


def check_lemma(lemma_id: int, mt: MappedTraces, s2: Scheduler | None = None) -> LemmaResult:
    """Run one of the five bounded structural checks (see each checker)."""
    if lemma_id == 1:
        return _check_projection(mt)
    if lemma_id == 2:
        return _check_common_prefix(mt)
    if lemma_id == 3:
        return _check_unique_diagram(mt)
    if lemma_id == 4:
        return _check_common_origin(mt)
    if lemma_id == 5:
        if s2 is None:
            raise ContractViolation("the step equivalence check needs the abstract scheduler")
        return _check_step_equivalence(mt, s2)
    raise ContractViolation(f"no such check: {lemma_id}")


def check_all_lemmas(mt: MappedTraces, s2: Scheduler) -> list[LemmaResult]:
    return [check_lemma(i, mt, s2) for i in (1, 2, 3, 4)] + [check_lemma(5, mt, s2)]


# --- trace set comparison -----------------------------------------------


@dataclass(frozen=True)
class EqualityResult:
    """Outcome of a bounded trace-set comparison."""

    ok: bool
    compare_length: int | None  # None means unbounded (both sides saturated)
    counterexample: str | None = None
    lhs_size: int = 0
    rhs_size: int = 0


def check_image_equality(
    mt: MappedTraces, s2: Scheduler, budget: int | None = None
) -> EqualityResult:
    """The abstract scheduler admits exactly the image prefixes, bounded.

    Compares consistent traces of prod2 under s2 against image-tree
    traces, both restricted to the settled image length.
    """
    settled = mt.settled_image_length()
    depth2 = settled if settled is not None else max(v.depth for v in mt.image.nodes())
    rhs_tree = enumerate_traces(mt.prod2, s2, depth2, budget=budget)
    lhs = {v.trace() for v in mt.image.nodes() if v.depth <= depth2}
    rhs = set(rhs_tree.traces())
    if lhs == rhs:
        return EqualityResult(True, depth2, None, len(lhs), len(rhs))
    diff = min(lhs ^ rhs, key=lambda t: (len(t), tuple(a.key() for a in t)))
    side = "only scheduled" if diff in rhs else "only an image prefix"
    return EqualityResult(False, depth2, f"{_fmt(diff)} is {side}", len(lhs), len(rhs))


def _saturated_states(prod: Lts, sigma_p: frozenset[Action]) -> set[int]:
    """States from which no program action is reachable any more."""
    can: set[int] = set()
    pred: dict[int, list[int]] = {}
    for s, a, t in prod.edges():
        pred.setdefault(t, []).append(s)
        if a in sigma_p:
            can.add(s)
    queue = list(can)
    while queue:
        t = queue.pop()
        for s in pred.get(t, ()):
            if s not in can:
                can.add(s)
                queue.append(s)
    return {s for s in range(prod.num_states) if s not in can}


def _complete_projection_length(
    tree: TracePrefixTree, depth: int, prod: Lts, sigma_p: frozenset[Action]
) -> int | None:
    """Largest projection length the bounded tree is guaranteed to cover.

    A frontier leaf that can still reach a program action caps the
    guarantee at the program actions already on its path; None means no
    cap (every frontier leaf is saturated).
    """
    saturated = _saturated_states(prod, sigma_p)
    caps = [
        sum(1 for a in leaf.trace() if a in sigma_p)
        for leaf in tree.leaves()
        if leaf.depth >= depth and leaf.state not in saturated
    ]
    return min(caps) if caps else None


def check_projection_equality(
    mt: MappedTraces,
    s2: Scheduler,
    sigma_p: frozenset[Action],
    depth: int,
    budget: int | None = None,
) -> EqualityResult:
    """Projected trace sets of both scheduled systems coincide, bounded.

    Projections are compared up to the largest length both bounded
    trees are guaranteed to cover completely, additionally capped by
    the requested depth.
    """
    settled = mt.settled_image_length()
    depth2 = settled if settled is not None else max(v.depth for v in mt.image.nodes())
    rhs_tree = enumerate_traces(mt.prod2, s2, depth2, budget=budget)

    lhs_cap = _complete_projection_length(mt.concrete, mt.depth, mt.prod1, sigma_p)
    rhs_cap = _complete_projection_length(rhs_tree, depth2, mt.prod2, sigma_p)
    caps = [c for c in (lhs_cap, rhs_cap, depth) if c is not None]
    bound = min(caps) if caps else None

    def gather(nodes: Iterator[TraceNode]) -> set[Trace]:
        out = set()
        for node in nodes:
            p = project(node.trace(), sigma_p)
            if bound is None or len(p) <= bound:
                out.add(p)
        return out

    lhs = gather(mt.concrete.nodes())
    rhs = gather(rhs_tree.nodes())
    if lhs == rhs:
        return EqualityResult(True, bound, None, len(lhs), len(rhs))
    diff = min(lhs ^ rhs, key=lambda t: (len(t), tuple(a.key() for a in t)))
    side = "abstract-only" if diff in rhs else "concrete-only"
    return EqualityResult(False, bound, f"{side} projection {_fmt(diff)}", len(lhs), len(rhs))
