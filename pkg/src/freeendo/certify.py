"""Decision procedures built on folding and train track data.

The main loop replaces a representative ``g`` by ``h ∘ v`` whenever
``g = v ∘ h`` is a nontrivial fold factorization, until an immersion
appears.  Certificates record enough data to be re-checked.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import NonInjective, PreconditionError, TrivialCore
from .graphs import (
    Graph,
    GraphMap,
    collapse,
    compose,
    core_inclusion,
    identity_map,
    is_immersion,
    pull_tight,
    rose,
    rose_map,
    tighten,
)
from .markings import maps_homotopic
from .stallings import (
    SubgroupGraph,
    covering_index,
    fold_to_immersion,
    iterate_image,
    membership,
    pullback,
    subgroup_graph,
)
from .traintrack import (
    CleanReport,
    WhiteheadGraph,
    is_clean,
    legality,
    whitehead_graphs,
)
from .words import (
    Endomorphism,
    Word,
    conjugate_test,
    cyclic_reduce,
    cyclically_reduced_words,
    reduced_words,
)

DEFAULT_CAP = 64
DEFAULT_MAX_EDGES = 1024


@dataclass(frozen=True)
class CleanImmersionRep:
    map: GraphMap
    marking: GraphMap  # rose -> graph
    iterations: int
    clean: CleanReport
    whitehead: tuple[WhiteheadGraph, ...]

    @property
    def graph(self) -> Graph:
        return self.map.domain

    @property
    def cut_vertex_free(self) -> bool:
        return all(not w.cut_vertices() for w in self.whitehead)


@dataclass(frozen=True)
class UncleanImmersion:
    """An immersion was reached but it is not clean."""

    map: GraphMap
    marking: GraphMap
    iterations: int
    clean: CleanReport | None
    train_track: bool = True


@dataclass(frozen=True)
class Surjective:
    map: GraphMap
    iterations: int


@dataclass(frozen=True)
class CapExceeded:
    map: GraphMap
    marking: GraphMap
    iterations: int


def _retraction(s: Graph) -> tuple[GraphMap, "object"]:
    """Retraction of ``s`` onto its core, as a map into the core graph."""
    inc = core_inclusion(s)
    vimg: dict[int, int] = {old: new for new, old in enumerate(inc.vertices)}
    todo = list(inc.vertices)
    while todo:
        v = todo.pop()
        for e in s.directions(v):
            w = s.terminus(e)
            if w not in vimg:
                vimg[w] = vimg[v]
                todo.append(w)
    eimg = tuple(
        (inc.lift_edge(2 * k),) if k in inc.edge_index else () for k in range(s.num_edges)
    )
    r = GraphMap(s, inc.sub, tuple(vimg[v] for v in range(s.num_vertices)), eimg)
    return r, inc


def _is_forest(g: Graph, edges) -> bool:
    parent = list(range(g.num_vertices))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for k in edges:
        u, w = (find(x) for x in g.endpoints(k))
        if u == w:
            return False
        parent[u] = w
    return True


def invariant_forest(g: GraphMap) -> list[int]:
    """Edge pairs of a maximal ``g``-invariant subgraph all of whose components are trees.

    Built from the forward closures of single edges, adding each closure that
    keeps the union a forest.
    """
    n = g.domain.num_edges
    closures = []
    for k in range(n):
        seen = {k}
        todo = [k]
        while todo:
            for e in g.edge_images[todo.pop()]:
                if e // 2 not in seen:
                    seen.add(e // 2)
                    todo.append(e // 2)
        closures.append(seen)
    forest: set[int] = set()
    for k in range(n):
        if k in forest:
            continue
        cand = forest | closures[k]
        if _is_forest(g.domain, sorted(cand)):
            forest = cand
    return sorted(forest)


def _collapse_map(g: GraphMap, marking: GraphMap, edges: Sequence[int]) -> tuple[GraphMap, GraphMap]:
    q, vmap, emap = collapse(g.domain, edges)
    new_images = []
    for k in range(g.domain.num_edges):
        if k in edges:
            continue
        new_images.append(tuple(emap[e] for e in g.edge_images[k] if e in emap))
    new_verts = [0] * q.num_vertices
    for v in range(g.domain.num_vertices):
        new_verts[vmap[v]] = vmap[g.vertex_images[v]]
    ng = GraphMap(q, q, tuple(new_verts), tuple(new_images))
    nm = GraphMap(
        marking.domain,
        q,
        tuple(vmap[v] for v in marking.vertex_images),
        tuple(tuple(emap[e] for e in p if e in emap) for p in marking.edge_images),
    )
    return ng, nm


def _degenerate_forest(g: GraphMap) -> list[int]:
    """A spanning forest of the edges mapped to a point.

    ``g`` is constant on it, so collapsing it leaves a conjugate representative.
    """
    parent = list(range(g.domain.num_vertices))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    out = []
    for k, p in enumerate(g.edge_images):
        if p:
            continue
        u, w = (find(x) for x in g.domain.endpoints(k))
        if u == w:
            raise NonInjective(
                None, g.domain.origin(2 * k), (2 * k,), f"a loop through edge {k} maps to a point"
            )
        parent[u] = w
        out.append(k)
    return out


def _is_graph_automorphism(g: GraphMap) -> bool:
    if any(len(p) != 1 for p in g.edge_images):
        return False
    return len({p[0] // 2 for p in g.edge_images}) == g.domain.num_edges and len(
        set(g.vertex_images)
    ) == g.domain.num_vertices


def _petals(n: int) -> list[tuple[int, ...]]:
    return [(2 * i,) for i in range(n)]


def check_marking(e: Endomorphism, g: GraphMap, marking: GraphMap) -> bool:
    """``g ∘ M`` agrees with ``M ∘ e`` on the fundamental group up to conjugation."""
    lhs = tighten(compose(marking, g), allow_degenerate=True)
    rhs = tighten(compose(rose_map(e), marking), allow_degenerate=True)
    return maps_homotopic(lhs, rhs, _petals(e.rank))


def find_immersion_rep(
    e: Endomorphism,
    cap: int = DEFAULT_CAP,
    start: GraphMap | None = None,
    marking: GraphMap | None = None,
    check: bool = True,
    max_edges: int = DEFAULT_MAX_EDGES,
):
    """Fold and collapse until the representative is an immersion.

    Returns :class:`CleanImmersionRep`, :class:`UncleanImmersion`,
    :class:`Surjective` or :class:`CapExceeded`.  Raises ``NonInjective``
    when a fold kills a loop.  Growth past ``max_edges`` edge pairs also
    ends the search with :class:`CapExceeded`.
    """
    g = start if start is not None else rose_map(e)
    m = marking if marking is not None else identity_map(rose(e.rank, e.basis.names))
    fold_to_immersion(rose_map(e))  # injectivity gate
    for it in range(cap + 1):
        g = pull_tight(tighten(g, allow_degenerate=True))
        forest = invariant_forest(g)
        if forest:
            g, m = _collapse_map(g, m, forest)
            g = pull_tight(tighten(g, allow_degenerate=True))
        while flat := _degenerate_forest(g):
            g, m = _collapse_map(g, m, flat)
            g = pull_tight(tighten(g, allow_degenerate=True))
        if check and not check_marking(e, g, m):
            raise AssertionError("marking trail lost track of the endomorphism")
        ok, _ = is_immersion(g)
        if ok:
            if _is_graph_automorphism(g):
                return Surjective(g, it)
            tt = legality(g)
            report = is_clean(g) if tt.train_track else None
            if report is not None and report.clean:
                return CleanImmersionRep(g, m, it, report, tuple(whitehead_graphs(g)))
            return UncleanImmersion(g, m, it, report, tt.train_track)
        if it == cap or g.domain.num_edges > max_edges:
            return CapExceeded(g, m, it)
        res = fold_to_immersion(g)
        if covering_index(SubgroupGraph(res.graph, res.immersion)) == 1:
            return Surjective(g, it + 1)
        r, _ = _retraction(res.graph)
        hv = compose(res.immersion, res.fold_map)
        g = tighten(
            GraphMap(
                r.codomain,
                r.codomain,
                tuple(r.vertex_images[hv.vertex_images[v]] for v in _core_vertices(res.graph)),
                tuple(r.path_image(hv.edge_images[k]) for k in _core_edges(res.graph)),
            ),
            allow_degenerate=True,
        )
        m = tighten(compose(m, compose(res.fold_map, r)), allow_degenerate=True)
    return CapExceeded(g, m, cap)


def _core_vertices(s: Graph) -> tuple[int, ...]:
    return core_inclusion(s).vertices


def _core_edges(s: Graph) -> tuple[int, ...]:
    return core_inclusion(s).edges


# ---------------------------------------------------------------- periodic classes


@dataclass(frozen=True)
class PeriodicWitness:
    word: Word
    d: int
    n: int


def periodic_class_search(e: Endomorphism, max_n: int, max_len: int) -> PeriodicWitness | None:
    """First ``(a, d, n)`` with ``e^n(a)`` conjugate to ``a^d``, by (|a|, n, a)."""
    if max_n < 1 or max_len < 1:
        raise ValueError("search bounds must be positive")
    powers = [e.power(n) for n in range(1, max_n + 1)]
    for length in range(1, max_len + 1):
        words = list(cyclically_reduced_words(e.rank, length))
        for n, en in enumerate(powers, start=1):
            for a in words:
                core, _ = cyclic_reduce(en(a))
                d, rem = divmod(len(core), length)
                if rem or d < 1:
                    continue
                if conjugate_test(core, a**d):
                    return PeriodicWitness(a, d, n)
    return None


# ---------------------------------------------------------------- certificates


@dataclass(frozen=True)
class ReductionEvidence:
    generators: tuple[Word, ...]
    twist: Word
    images_in_A: tuple[bool, ...]  # twisted image of each A-generator lies in A
    complement: tuple[Word, ...]  # extends the A-generators to a basis of F
    image_contained: bool  # every generator image of F lies in A


@dataclass(frozen=True)
class IrreducibilityCertificate:
    verdict: str  # Certified | Inconclusive | Reducible
    rep: object = None
    evidence: ReductionEvidence | None = None
    notes: tuple[str, ...] = ()


def _generates_free_group(words: Sequence[Word], rank: int) -> bool:
    try:
        sg = subgroup_graph(rose(rank), list(words))
    except TrivialCore:
        return False
    return covering_index(sg) == 1


def find_complement(gens: Sequence[Word], rank: int, max_len: int = 3) -> tuple[Word, ...] | None:
    """Words completing ``gens`` to a generating set of size ``rank`` (hence a basis)."""
    need = rank - len(gens)
    if need < 0:
        return None
    pool = [w for n in range(1, max_len + 1) for w in reduced_words(rank, n)]
    for combo in itertools.combinations(pool, need):
        if _generates_free_group(list(gens) + list(combo), rank):
            return tuple(combo)
    return None


def check_reduction(
    e: Endomorphism,
    gens: Sequence[Word],
    twist: Word = Word(),
    complement: Sequence[Word] | None = None,
) -> tuple[ReductionEvidence | None, str]:
    """Verify that ``gens`` span a proper free factor ``A`` with ``g e(A) g^-1 <= A``."""
    gens = tuple(w for w in gens if w)
    if not gens:
        return None, "witness subgroup is trivial"
    if len(gens) >= e.rank:
        return None, "witness has too many generators to span a proper free factor"
    sa = subgroup_graph(rose(e.rank), list(gens))
    if sa.rank != len(gens):
        return None, "witness generators are not a free basis of the subgroup they span"
    inside = tuple(membership(sa, twist * e(w) * ~twist) for w in gens)
    if not all(inside):
        return None, "witness subgroup is not invariant"
    if complement is None:
        complement = find_complement(gens, e.rank)
        if complement is None:
            return None, "no complement found; free factor status unverified"
    else:
        complement = tuple(complement)
        if len(gens) + len(complement) != e.rank or not _generates_free_group(
            list(gens) + list(complement), e.rank
        ):
            return None, "supplied complement does not extend the witness to a basis"
    contained = all(membership(sa, twist * w * ~twist) for w in e.images)
    return ReductionEvidence(gens, twist, inside, tuple(complement), contained), ""


def certify_fully_irreducible(
    e: Endomorphism,
    reduction_witness: Sequence[Word] | None = None,
    twist: Word = Word(),
    complement: Sequence[Word] | None = None,
    cap: int = DEFAULT_CAP,
) -> IrreducibilityCertificate:
    notes: list[str] = []
    if reduction_witness:
        ev, why = check_reduction(e, reduction_witness, twist, complement)
        if ev is not None:
            return IrreducibilityCertificate("Reducible", None, ev, ())
        notes.append("reduction witness rejected: " + why)
    rep = find_immersion_rep(e, cap)
    if isinstance(rep, CleanImmersionRep):
        if rep.cut_vertex_free:
            notes.append("nonsurjective; clean immersion with cut-vertex-free Whitehead graphs")
            return IrreducibilityCertificate("Certified", rep, None, tuple(notes))
        notes.append("clean immersion but some Whitehead graph has a cut vertex")
    elif isinstance(rep, Surjective):
        notes.append("automorphism: outside the scope of the immersion criterion")
    elif isinstance(rep, UncleanImmersion):
        notes.append("immersion representative is not clean")
    else:
        notes.append(f"no immersion within {rep.iterations} rounds")
    return IrreducibilityCertificate("Inconclusive", rep, None, tuple(notes))


@dataclass(frozen=True)
class HyperbolicityCertificate:
    verdict: str  # Hyperbolic | NotHyperbolic | Unknown
    rep: object = None
    witness: PeriodicWitness | None = None


@dataclass(frozen=True)
class SearchBounds:
    max_n: int = 3
    max_len: int = 6
    cap: int = DEFAULT_CAP


def certify_hyperbolic(e: Endomorphism, bounds: SearchBounds = SearchBounds()) -> HyperbolicityCertificate:
    rep = find_immersion_rep(e, bounds.cap)
    witness = periodic_class_search(e, bounds.max_n, bounds.max_len)
    clean = isinstance(rep, CleanImmersionRep)
    if clean and witness is not None:
        raise AssertionError(
            "a clean immersion and a periodic conjugacy class cannot coexist"
        )
    if clean:
        return HyperbolicityCertificate("Hyperbolic", rep, None)
    if witness is not None:
        return HyperbolicityCertificate("NotHyperbolic", rep, witness)
    return HyperbolicityCertificate("Unknown", rep, None)


# ---------------------------------------------------------------- invariant subgroups


def invariant_subgroup_index(
    e: Endomorphism,
    gens: Sequence[Word],
    twist: Word = Word(),
    cap: int = 8,
) -> int | None:
    """Least ``k <= cap`` with some fiber product component finitely covering ``S_k``."""
    r = rose(e.rank)
    sh = subgroup_graph(r, list(gens))
    for w in gens:
        img = twist * e(w) * ~twist
        if not membership(sh, img):
            raise PreconditionError(f"subgroup is not invariant: image {img} of {w} is outside")
    seq = iterate_image(rose_map(e), cap)
    layers = [SubgroupGraph(r, identity_map(r))] + list(seq.graphs)
    for k, sk in enumerate(layers):
        pb = pullback(sk, sh)
        for comp in pb.components:
            over = comp.projection(0, sk)
            if covering_index(over) < math.inf:
                return k
    return None


__all__ = [
    "DEFAULT_CAP",
    "DEFAULT_MAX_EDGES",
    "CleanImmersionRep",
    "UncleanImmersion",
    "Surjective",
    "CapExceeded",
    "find_immersion_rep",
    "check_marking",
    "invariant_forest",
    "PeriodicWitness",
    "periodic_class_search",
    "ReductionEvidence",
    "IrreducibilityCertificate",
    "check_reduction",
    "find_complement",
    "certify_fully_irreducible",
    "HyperbolicityCertificate",
    "SearchBounds",
    "certify_hyperbolic",
    "invariant_subgroup_index",
]
