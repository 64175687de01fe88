"""The simplicial action of an injective endomorphism on the rank 2 spine.

A vertex of the spine is a marked graph with no bivalent vertices: a rose,
a theta or a barbell.  An endomorphism acts by folding the marking loops
composed with the endomorphism and reading off the folded core.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .errors import CapExceededError, PreconditionError
from .graphs import (
    Graph,
    GraphMap,
    compose,
    core_inclusion,
    is_immersion,
    pull_tight,
    rose,
    rose_map,
    smooth,
    tighten,
)
from .markings import (
    MarkedGraph,
    core_marked,
    maps_homotopic,
    marked_isomorphism,
    rose_marking,
    smoothed,
    standard_rose,
)
from .stallings import fold_to_immersion, invert_automorphism
from .words import Basis, Endomorphism, Word


class Shape(enum.Enum):
    ROSE = "Rose"
    THETA = "Theta"
    BARBELL = "Barbell"


def classify(g: Graph) -> Shape:
    if g.euler_rank() != 2:
        raise PreconditionError(f"spine graphs have rank 2, got {g.euler_rank()}")
    if g.num_vertices == 1 and g.num_edges == 2:
        return Shape.ROSE
    if g.num_vertices != 2 or g.num_edges != 3 or any(g.valence(v) != 3 for v in (0, 1)):
        raise PreconditionError("graph is not a rose, theta or barbell")
    loops = sum(1 for k in range(3) if len(set(g.endpoints(k))) == 1)
    return Shape.BARBELL if loops == 2 else Shape.THETA


@dataclass(frozen=True)
class SpineSimplex:
    marked: MarkedGraph

    def __post_init__(self):
        m = smoothed(self.marked) if any(
            self.marked.graph.valence(v) == 2 for v in range(self.marked.graph.num_vertices)
        ) else self.marked
        object.__setattr__(self, "marked", m)
        classify(m.graph)

    @property
    def shape(self) -> Shape:
        return classify(self.marked.graph)

    @property
    def graph(self) -> Graph:
        return self.marked.graph

    def words(self):
        return self.marked.words()

    def describe(self, basis: Basis | None = None) -> str:
        basis = basis or Basis.standard(2)
        return f"{self.shape.value}[{', '.join(basis.format(w) for w in self.words())}]"

    def faces(self) -> list["SpineSimplex"]:
        """Roses obtained by collapsing one non-loop edge."""
        from .markings import collapse_marked

        g = self.graph
        out = []
        for k in range(g.num_edges):
            u, w = g.endpoints(k)
            if u != w:
                out.append(SpineSimplex(collapse_marked(self.marked, [k])))
        return out


def simplex_equal(s1: SpineSimplex, s2: SpineSimplex) -> bool:
    if s1.shape != s2.shape:
        return False
    return marked_isomorphism(s1.marked, s2.marked, smooth_first=False) is not None


def rose_simplex(e: Endomorphism | None = None) -> SpineSimplex:
    """``(R_2, e)``; the standard rose when ``e`` is None."""
    if e is None:
        return SpineSimplex(standard_rose(2))
    if e.rank != 2:
        raise PreconditionError("spine simplices have rank 2")
    return SpineSimplex(rose_marking(e))


def theta_simplex() -> SpineSimplex:
    """The theta whose edge collapses give the standard rose and the two elementary twists.

    Edges x, y, z run from vertex 0 to vertex 1; a reads x y^-1, b reads x z^-1.
    """
    g = Graph.from_edges(2, [(0, 1), (0, 1), (0, 1)], names=["x", "y", "z"])
    return SpineSimplex(MarkedGraph(g, 0, ((0, 3), (0, 5))))


def barbell_simplex() -> SpineSimplex:
    """Loop a at 0, bar from 0 to 1, loop b at 1; the bar collapses to the standard rose."""
    g = Graph.from_edges(2, [(0, 0), (0, 1), (1, 1)], names=["a", "t", "b"])
    return SpineSimplex(MarkedGraph(g, 0, ((0,), (2, 4, 3))))


def twisted(s: SpineSimplex, e: Endomorphism) -> SpineSimplex:
    """The same graph with marking ``x -> alpha(e(x))``."""
    return SpineSimplex(s.marked.precompose(e))


def elementary_twists(basis: Basis | None = None) -> dict[str, Endomorphism]:
    """The generators ``(a, ab)``, ``(ba, b)`` and their inverses, keyed a, A, b, B."""
    basis = basis or Basis.standard(2)
    imgs = {
        "a": ((1,), (1, 2)),
        "A": ((1,), (-1, 2)),
        "b": ((2, 1), (2,)),
        "B": ((-2, 1), (2,)),
    }
    return {k: Endomorphism(basis, tuple(Word(w) for w in v)) for k, v in imgs.items()}


@dataclass(frozen=True)
class ActionStep:
    """One application of the action, with the fixed-point evidence."""

    source: SpineSimplex
    target: SpineSimplex
    folds: int
    fixed: bool
    immersion_rep: GraphMap | None  # on the source graph, present when fixed


def _check_rep(s: SpineSimplex, e: Endomorphism, g: GraphMap) -> bool:
    """``g`` composed with the marking is homotopic to the marking composed with ``e``."""
    m = s.marked
    mark = GraphMap(rose(2), m.graph, (m.base,), m.loops)
    lhs = tighten(compose(mark, g), allow_degenerate=True)
    rhs = GraphMap(rose(2), m.graph, (m.base,), m.precompose(e).loops)
    return maps_homotopic(lhs, rhs, [(0,), (2,)])


def _rose_rep(s: SpineSimplex, e: Endomorphism) -> GraphMap:
    """The pulled-tight representative of ``e`` on a rose simplex."""
    alpha = Endomorphism(e.basis, tuple(s.marked.words()))
    conj = alpha.compose(e).compose(invert_automorphism(alpha))
    return pull_tight(tighten(rose_map(conj)))


def spine_act_step(s: SpineSimplex, e: Endomorphism) -> ActionStep:
    """Act by ``e`` and check that fixed points are exactly the immersion cases.

    Raises ``NonInjective`` when a fold kills a loop.
    """
    if e.rank != 2:
        raise PreconditionError("the spine action is implemented in rank 2")
    m = s.marked
    loops = m.precompose(e).loops
    res = fold_to_immersion(GraphMap(rose(2), m.graph, (m.base,), loops), base=0)
    folded = core_marked(res.graph, res.base, res.fold_map.edge_images)
    target = SpineSimplex(folded)
    fixed = simplex_equal(target, s)

    rep = None
    if fixed:
        rep = _forward_rep(res, folded, s)
        if rep is None or not is_immersion(rep)[0] or not _check_rep(s, e, rep):
            raise AssertionError("fixed simplex without an immersion representative")
    if s.shape is Shape.ROSE:
        cand = _rose_rep(s, e)
        if not _check_rep(s, e, cand):
            raise AssertionError("rose representative does not represent the endomorphism")
        if is_immersion(cand)[0] and not fixed:
            raise AssertionError("immersion representative on a simplex that moved")
    return ActionStep(s, target, len(res.folds), fixed, rep)


def _forward_rep(res, folded: MarkedGraph, s: SpineSimplex) -> GraphMap | None:
    """Transport the immersion from the folded graph back onto the source graph."""
    inc = core_inclusion(res.graph, keep=())
    sm = smooth(folded.graph)
    small = smoothed(folded)
    iso = marked_isomorphism(small, s.marked, smooth_first=False)
    if iso is None:
        return None
    vmap, emap, _ = iso
    g = s.graph
    vinv = {w: v for v, w in enumerate(vmap)}
    einv = {w: e for e, w in enumerate(emap)}
    v_map = res.immersion

    def down(e: int):
        # edge of the source graph -> path in the folded graph -> path in the source graph
        p = sm.expand((einv[e],))
        return v_map.path_image(tuple(inc.push_edge(x) for x in p))

    verts = tuple(
        v_map.vertex_images[inc.vertices[sm.vertices[vinv[v]]]] for v in range(g.num_vertices)
    )
    return GraphMap(g, g, verts, tuple(down(2 * k) for k in range(g.num_edges)))


def spine_act(s: SpineSimplex, e: Endomorphism) -> SpineSimplex:
    return spine_act_step(s, e).target


@dataclass(frozen=True)
class OrbitRecord:
    sequence: tuple[SpineSimplex, ...]
    preperiod: int
    period: int

    @property
    def cycle(self) -> tuple[SpineSimplex, ...]:
        return self.sequence[self.preperiod : self.preperiod + self.period]


def orbit(s: SpineSimplex, e: Endomorphism, max_steps: int = 32) -> OrbitRecord:
    """Iterate the action until a simplex repeats.

    ``sequence`` ends with the first repeat, so ``sequence[preperiod + period]``
    is equivalent to ``sequence[preperiod]``.
    """
    seq = [s]
    for _ in range(max_steps):
        nxt = spine_act(seq[-1], e)
        for i, t in enumerate(seq):
            if simplex_equal(nxt, t):
                seq.append(nxt)
                return OrbitRecord(tuple(seq), i, len(seq) - 1 - i)
        seq.append(nxt)
    raise CapExceededError(f"no repeat within {max_steps} steps")


def rose_ball(radius: int, basis: Basis | None = None) -> list[SpineSimplex]:
    """Distinct roses whose marking is a product of at most ``radius`` elementary twists."""
    gens = elementary_twists(basis)
    found: list[SpineSimplex] = []
    frontier = [Endomorphism.identity(gens["a"].basis)]
    for step in range(radius + 1):
        new = []
        for a in frontier:
            s = rose_simplex(a)
            if not any(simplex_equal(s, t) for t in found):
                found.append(s)
                new.append(a)
        if step == radius:
            break
        frontier = [a.compose(g) for a in new for g in gens.values()]
    return found


def neighbours(roses: Iterable[SpineSimplex]) -> list[SpineSimplex]:
    """Theta and barbell simplices with one of the given roses as a face."""
    th, bb = theta_simplex(), barbell_simplex()
    out: list[SpineSimplex] = []
    for r in roses:
        alpha = Endomorphism(Basis.standard(2), tuple(r.words()))
        for base in (th, bb):
            t = twisted(base, alpha)
            if not any(simplex_equal(t, u) for u in out):
                out.append(t)
    return out


def periodic_set(e: Endomorphism, radius: int = 3, max_steps: int = 32) -> list[SpineSimplex]:
    """Periodic simplices reached from roses within ``radius`` twists and their neighbours."""
    roses = rose_ball(radius)
    starts = roses + neighbours(roses)
    found: list[SpineSimplex] = []
    for s in starts:
        rec = orbit(s, e, max_steps)
        for t in rec.cycle:
            if not any(simplex_equal(t, u) for u in found):
                found.append(t)
    return found


__all__ = [
    "Shape",
    "classify",
    "SpineSimplex",
    "simplex_equal",
    "rose_simplex",
    "theta_simplex",
    "barbell_simplex",
    "twisted",
    "elementary_twists",
    "ActionStep",
    "spine_act_step",
    "spine_act",
    "OrbitRecord",
    "orbit",
    "rose_ball",
    "neighbours",
    "periodic_set",
]
