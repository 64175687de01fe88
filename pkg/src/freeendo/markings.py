"""Marked graphs: a graph together with a basis of its fundamental group.

A marking is stored as one closed edge path per generator, all based at a
common vertex.  Two marked graphs are equivalent when a graph isomorphism
carries one marking to the other up to a single inner automorphism.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import PreconditionError
from .graphs import (
    Graph,
    GraphMap,
    Path,
    TreeBasis,
    collapse,
    core_inclusion,
    reduce_path,
    reverse_path,
    rose,
    smooth,
    spanning_tree,
    tree_path,
    word_to_path,
)
from .words import Endomorphism, Word, apply_endo, common_conjugator


@dataclass(frozen=True)
class MarkedGraph:
    graph: Graph
    base: int
    loops: tuple[Path, ...]

    def __post_init__(self):
        object.__setattr__(self, "loops", tuple(tuple(p) for p in self.loops))
        g = self.graph
        for p in self.loops:
            if p and (g.origin(p[0]) != self.base or g.terminus(p[-1]) != self.base):
                raise ValueError("marking loops must start and end at the base vertex")
            if not g.is_path(p):
                raise ValueError("marking loop is not an edge path")
        if len(self.loops) != g.euler_rank():
            raise PreconditionError(
                f"marking has {len(self.loops)} loops but the graph has rank {g.euler_rank()}"
            )

    @property
    def rank(self) -> int:
        return len(self.loops)

    def words(self, tb: TreeBasis | None = None) -> list[Word]:
        """The marking loops read in the tree basis of ``tb`` (default: BFS tree at the base)."""
        tb = tb or TreeBasis.of(self.graph, self.base)
        return [tb.word(tb.transport(p)) for p in self.loops]

    def precompose(self, e: Endomorphism) -> "MarkedGraph":
        """The marking ``x -> alpha(e(x))``."""
        loops = []
        for w in e.images:
            out: list[int] = []
            for x in w:
                p = self.loops[abs(x) - 1]
                out.extend(p if x > 0 else reverse_path(p))
            loops.append(reduce_path(out))
        return MarkedGraph(self.graph, self.base, tuple(loops))


def rose_marking(e: Endomorphism) -> MarkedGraph:
    """The rose with marking given by an automorphism (generator ``x`` goes to ``e(x)``)."""
    return MarkedGraph(rose(e.rank, e.basis.names), 0, tuple(word_to_path(w) for w in e.images))


def standard_rose(rank: int) -> MarkedGraph:
    return MarkedGraph(rose(rank), 0, tuple((2 * i,) for i in range(rank)))


def _path_from_kept(g: Graph, kept: set[int], v: int) -> Path:
    """A path from some kept vertex to ``v`` running back along a natural edge."""
    out: list[int] = []
    prev = None
    while v not in kept:
        e = next(d for d in g.directions(v) if prev is None or d != prev)
        # walk outward along e, recording the reverse
        out.append(e ^ 1)
        prev = e ^ 1
        v = g.terminus(e)
    return tuple(reversed(out))


def smoothed(m: MarkedGraph) -> MarkedGraph:
    """Erase bivalent vertices, moving the base if needed."""
    sm = smooth(m.graph)
    kept = set(sm.vertices)
    q = _path_from_kept(m.graph, kept, m.base)
    start = m.graph.origin(q[0]) if q else m.base
    base = sm.vertices.index(start)
    loops = tuple(sm.translate(reduce_path(q + p + reverse_path(q))) for p in m.loops)
    return MarkedGraph(sm.graph, base, loops)


def core_marked(graph: Graph, base: int, loops: Sequence[Path]) -> MarkedGraph:
    """Prune hanging trees, sliding the base point into the core along a shortest path."""
    inc = core_inclusion(graph)
    q: Path = ()
    if base not in inc.vertex_index:
        tree = spanning_tree(graph, base)
        target = min(inc.vertices, key=lambda v: (len(tree_path(graph, tree, v)), v))
        q = tree_path(graph, tree, target)
        base = target
    moved = [reduce_path(reverse_path(q) + tuple(p) + q) for p in loops]
    return MarkedGraph(
        inc.sub, inc.vertex_index[base], tuple(tuple(inc.lift_edge(e) for e in p) for p in moved)
    )


def collapse_marked(m: MarkedGraph, edges: Sequence[int]) -> MarkedGraph:
    """Collapse a forest, carrying the marking along."""
    g, vmap, emap = collapse(m.graph, edges)
    loops = tuple(reduce_path(tuple(emap[e] for e in p if e in emap)) for p in m.loops)
    return MarkedGraph(g, vmap[m.base], loops)


def marked_isomorphism(m1: MarkedGraph, m2: MarkedGraph, smooth_first: bool = True):
    """A graph isomorphism realising the equivalence, with its conjugator, or None."""
    from .graphs import isomorphisms

    if m1.rank != m2.rank:
        return None
    if smooth_first:
        m1, m2 = smoothed(m1), smoothed(m2)
    tb = TreeBasis.of(m2.graph, m2.base)
    target = m2.words(tb)
    for vmap, emap in isomorphisms(m1.graph, m2.graph):
        moved = [tb.word(tb.transport(tuple(emap[e] for e in p))) for p in m1.loops]
        c = common_conjugator(moved, target)
        if c is not None:
            return vmap, emap, c
    return None


def marked_equal(m1: MarkedGraph, m2: MarkedGraph) -> bool:
    """Equality of marked graphs up to isomorphism and inner automorphism (metric ignored)."""
    return marked_isomorphism(m1, m2) is not None


def image_marked_graph(e: Endomorphism, power: int = 1) -> MarkedGraph:
    """The image graph of ``e^power`` marked by the lifts of the generator images."""
    from .stallings import image_subgroup

    sg = image_subgroup(e, power)
    ep = e.power(power)
    return MarkedGraph(sg.graph, sg.base, tuple(sg.lift(word_to_path(w)) for w in ep.images))


def loop_words(m: GraphMap, loops: Sequence[Path]) -> list[Word]:
    """Images of closed paths under ``m``, read in the codomain's BFS tree basis."""
    tb = TreeBasis.of(m.codomain, 0)
    return [tb.word(tb.transport(m.path_image(p))) for p in loops]


def maps_homotopic(m1: GraphMap, m2: GraphMap, loops: Sequence[Path]) -> bool:
    """Whether two maps agree on ``pi_1`` up to one conjugation, tested on ``loops``.

    ``loops`` should be a generating set of closed paths at one vertex of the
    common domain (free homotopy of maps from a connected graph).
    """
    if m1.domain != m2.domain or m1.codomain != m2.codomain:
        raise PreconditionError("maps must share domain and codomain")
    return common_conjugator(loop_words(m1, loops), loop_words(m2, loops)) is not None


def endo_on_marking(m: MarkedGraph, e: Endomorphism) -> list[Word]:
    """``alpha(e(x))`` for each generator ``x``, as words in the tree basis."""
    tb = TreeBasis.of(m.graph, m.base)
    basis_words = m.words(tb)
    return [apply_endo(Endomorphism(e.basis, tuple(basis_words)), w) for w in e.images]


__all__ = [
    "MarkedGraph",
    "rose_marking",
    "standard_rose",
    "smoothed",
    "core_marked",
    "collapse_marked",
    "marked_isomorphism",
    "marked_equal",
    "image_marked_graph",
    "loop_words",
    "maps_homotopic",
    "endo_on_marking",
]
