"""Stallings folding: subgroup graphs, fold factorizations, fiber products, covers.

A map ``m: G -> X`` is subdivided so that every edge maps to a single edge,
then folded until the labelling is an immersion.  The result factors ``m``
as ``v ∘ h`` with ``v`` an immersion.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateEdgeImage, NonInjective, PreconditionError, TrivialCore
from .graphs import (
    Graph,
    GraphMap,
    Path,
    compose,
    core_inclusion,
    rose,
    tighten,
    word_to_path,
)
from .words import Endomorphism, Word


@dataclass(frozen=True)
class FoldRecord:
    index: int
    vertex: int
    edges: tuple[int, int]
    label: int
    kind: str  # "I" merges two vertices, "II" identifies parallel edges


@dataclass(frozen=True)
class FoldResult:
    """``source = immersion ∘ fold_map`` with ``immersion`` locally injective."""

    source: GraphMap
    folds: tuple[FoldRecord, ...]
    fold_map: GraphMap
    immersion: GraphMap
    base: int | None = None
    coefficients: tuple[Word, ...] | None = None  # per folded edge pair, when tracked
    twist: Word = Word()  # reading at the base equals twist * value * twist**-1

    @property
    def graph(self) -> Graph:
        return self.fold_map.codomain

    def verify(self) -> bool:
        return compose(self.fold_map, self.immersion).edge_images == tighten(
            self.source, allow_degenerate=True
        ).edge_images


class _Folder:
    """Mutable scratch state of one folding run."""

    def __init__(self, m: GraphMap, strict: bool, order: str, coefficients=None, base=None):
        self.strict = strict
        self.order = order
        self.base = base
        # optional group element carried by each working edge; see _gauge
        self.coef: list[Word] | None = [] if coefficients is not None else None
        self.twist = Word()
        g = m.domain
        self.vlabel: list[int] = list(m.vertex_images)
        self.parent: list[int] = list(range(g.num_vertices))
        self.origin: list[int] = []
        self.label: list[int] = []
        self.alias: dict[int, int] = {}
        self.chains: list[list[int]] = []
        for k, p in enumerate(m.edge_images):
            if not p:
                raise DegenerateEdgeImage(k)
            u, w = g.endpoints(k)
            chain = []
            cur = u
            for i, lab in enumerate(p):
                nxt = w if i == len(p) - 1 else self._new_vertex(m.codomain.terminus(lab))
                chain.append(self._new_edge(cur, nxt, lab))
                if self.coef is not None:
                    c = coefficients[k] if i == 0 else Word()
                    self.coef += [c, ~c]
                cur = nxt
            self.chains.append(chain)
        self.dirs: list[set[int]] = [set() for _ in self.parent]
        for e, v in enumerate(self.origin):
            self.dirs[v].add(e)
        self.folds: list[FoldRecord] = []

    def _new_vertex(self, lab: int) -> int:
        self.vlabel.append(lab)
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def _new_edge(self, u: int, w: int, lab: int) -> int:
        e = len(self.origin)
        self.origin += [u, w]
        self.label += [lab, lab ^ 1]
        return e

    def find(self, v: int) -> int:
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def resolve(self, e: int) -> int:
        while e in self.alias:
            e = self.alias[e]
        return e

    def _gauge(self, w: int, s: Word) -> None:
        """Change coefficients at vertex ``w``; closed paths through ``w`` keep their value."""
        for e in self.dirs[w]:
            self.coef[e] = s * self.coef[e]
            self.coef[e ^ 1] = ~self.coef[e]
        if self.base is not None and self.find(self.base) == w:
            self.twist = s * self.twist

    def _foldable(self, v: int):
        by_label: dict[int, int] = {}
        best = None
        for d in sorted(self.dirs[v]):
            lab = self.label[d]
            if lab in by_label:
                pair = (by_label[lab], d)
                if best is None or pair < best:
                    best = pair
            else:
                by_label[lab] = d
        return best

    def run(self):
        n = len(self.parent)
        sign = 1 if self.order == "lowest" else -1
        heap = [sign * v for v in range(n)]
        heapq.heapify(heap)
        queued = set(range(n))
        while heap:
            u = sign * heapq.heappop(heap)
            queued.discard(u)
            if self.find(u) != u:
                continue
            pair = self._foldable(u)
            if pair is None:
                continue
            d1, d2 = pair
            t1, t2 = self.find(self.origin[d1 ^ 1]), self.find(self.origin[d2 ^ 1])
            kind = "I" if t1 != t2 else "II"
            rec = FoldRecord(len(self.folds), u, (d1, d2), self.label[d1], kind)
            if kind == "II" and self.strict:
                raise NonInjective(rec.index, u, (d1, d2))
            self.folds.append(rec)
            if self.coef is not None and kind == "I":
                # make d1 and d2 carry the same coefficient, never gauging u itself
                if t2 != u:
                    self._gauge(t2, ~self.coef[d1] * self.coef[d2])
                else:
                    self._gauge(t1, ~self.coef[d2] * self.coef[d1])
            self.dirs[u].discard(d2)
            self.dirs[t2].discard(d2 ^ 1)
            self.alias[d2] = d1
            self.alias[d2 ^ 1] = d1 ^ 1
            touched = {u}
            if kind == "I":
                keep, gone = min(t1, t2), max(t1, t2)
                self.parent[gone] = keep
                for e in self.dirs[gone]:
                    self.origin[e] = keep
                self.dirs[keep] |= self.dirs[gone]
                self.dirs[gone] = set()
                touched.add(keep)
            for v in touched:
                v = self.find(v)
                if v not in queued:
                    queued.add(v)
                    heapq.heappush(heap, sign * v)

    def result(self, m: GraphMap, base: int | None) -> FoldResult:
        verts = sorted({self.find(v) for v in range(len(self.parent))})
        vidx = {v: i for i, v in enumerate(verts)}
        alive = sorted(e for e in range(0, len(self.origin), 2) if e not in self.alias)
        eidx = {e: i for i, e in enumerate(alive)}
        origins: list[int] = []
        for e in alive:
            origins += [vidx[self.find(self.origin[e])], vidx[self.find(self.origin[e ^ 1])]]
        s = Graph(len(verts), tuple(origins))

        def new_edge(e: int) -> int:
            r = self.resolve(e)
            return 2 * eidx[r & ~1] + (r & 1)

        h = GraphMap(
            m.domain,
            s,
            tuple(vidx[self.find(v)] for v in range(m.domain.num_vertices)),
            tuple(tuple(new_edge(e) for e in chain) for chain in self.chains),
        )
        v = GraphMap(
            s,
            m.codomain,
            tuple(self.vlabel[x] for x in verts),
            tuple((self.label[e],) for e in alive),
        )
        return FoldResult(
            m,
            tuple(self.folds),
            h,
            v,
            None if base is None else vidx[self.find(base)],
            None if self.coef is None else tuple(self.coef[e] for e in alive),
            self.twist,
        )


def fold_to_immersion(
    m: GraphMap,
    strict: bool = True,
    order: str = "lowest",
    base: int | None = None,
    coefficients: Sequence[Word] | None = None,
) -> FoldResult:
    """Factor ``m`` through folds into an immersion.

    With ``strict`` a fold of two edges sharing both endpoints raises
    :class:`NonInjective`; otherwise such edges are identified.  ``order``
    picks the lowest (default) or highest dirty vertex first.

    ``coefficients`` (one group element per domain edge pair) are carried
    through the folds so that closed paths in the result can be read back
    as elements of the domain's fundamental group.
    """
    if order not in ("lowest", "highest"):
        raise ValueError("order must be 'lowest' or 'highest'")
    m = tighten(m)
    f = _Folder(m, strict, order, coefficients, base)
    f.run()
    return f.result(m, base)


def invert_automorphism(e: Endomorphism) -> Endomorphism:
    """Inverse of an automorphism, read off a coefficient-tracking fold."""
    from .graphs import rose_map

    res = fold_to_immersion(rose_map(e), base=0, coefficients=e.basis.generators())
    s = res.graph
    if s.num_vertices != 1 or s.num_edges != e.rank:
        raise PreconditionError("not an automorphism: the folded graph is not a rose")
    images: list[Word | None] = [None] * e.rank
    for k in range(s.num_edges):
        lab = res.immersion.edge_images[k][0]
        c = res.coefficients[k] if lab % 2 == 0 else ~res.coefficients[k]
        images[lab // 2] = ~res.twist * c * res.twist
    inv = Endomorphism(e.basis, tuple(images))
    if e.compose(inv) != Endomorphism.identity(e.basis):
        raise AssertionError("coefficient tracking produced a wrong inverse")
    return inv


def is_injective(e: Endomorphism) -> bool:
    from .graphs import rose_map

    try:
        fold_to_immersion(rose_map(e))
    except NonInjective:
        return False
    return True


@dataclass(frozen=True)
class SubgroupGraph:
    """A folded graph with an immersion ``label`` into a base graph."""

    graph: Graph
    label: GraphMap
    base: int | None = None

    def __post_init__(self):
        if self.label.domain != self.graph:
            raise ValueError("label must be defined on the graph")
        if any(len(p) != 1 for p in self.label.edge_images):
            raise ValueError("label must send edges to edges")

    @property
    def target(self) -> Graph:
        return self.label.codomain

    @property
    def num_vertices(self) -> int:
        return self.graph.num_vertices

    @property
    def num_edges(self) -> int:
        return self.graph.num_edges

    @property
    def rank(self) -> int:
        return self.graph.euler_rank()

    def edge_label(self, e: int) -> int:
        p = self.label.edge_images[e // 2][0]
        return p if e % 2 == 0 else p ^ 1

    def transitions(self) -> list[dict[int, int]]:
        """Per vertex: label -> outgoing oriented edge."""
        out: list[dict[int, int]] = [{} for _ in range(self.num_vertices)]
        for e in self.graph.oriented_edges:
            out[self.graph.origin(e)][self.edge_label(e)] = e
        return out

    def is_folded(self) -> bool:
        counts = [0] * self.num_vertices
        for e in self.graph.oriented_edges:
            counts[self.graph.origin(e)] += 1
        return all(len(t) == c for t, c in zip(self.transitions(), counts))

    def read(self, path: Sequence[int], start: int | None = None) -> int | None:
        """Vertex reached by reading a label path, or None if the reading dies."""
        v = self.base if start is None else start
        if v is None:
            raise PreconditionError("subgroup graph has no base vertex")
        trans = self._trans
        for lab in path:
            e = trans[v].get(lab)
            if e is None:
                return None
            v = self.graph.terminus(e)
        return v

    def lift(self, path: Sequence[int], start: int | None = None) -> Path | None:
        """The path in the graph spelling ``path`` from ``start``, or None."""
        v = self.base if start is None else start
        trans = self._trans
        out = []
        for lab in path:
            e = trans[v].get(lab)
            if e is None:
                return None
            out.append(e)
            v = self.graph.terminus(e)
        return tuple(out)

    @property
    def _trans(self) -> list[dict[int, int]]:
        t = self.__dict__.get("_trans_cache")
        if t is None:
            t = self.transitions()
            object.__setattr__(self, "_trans_cache", t)
        return t

    def contains(self, w: Word) -> bool:
        return membership(self, w)

    def unpointed(self) -> "SubgroupGraph":
        inc = core_inclusion(self.graph)
        return _restrict(self, inc, None)


def _restrict(sg: SubgroupGraph, inc, base: int | None) -> SubgroupGraph:
    lab = GraphMap(
        inc.sub,
        sg.target,
        tuple(sg.label.vertex_images[v] for v in inc.vertices),
        tuple(sg.label.edge_images[k] for k in inc.edges),
    )
    return SubgroupGraph(inc.sub, lab, base)


def _pointed_core(graph: Graph, label: GraphMap, base: int | None) -> SubgroupGraph:
    sg = SubgroupGraph(graph, label, base)
    if base is None:
        return _restrict(sg, core_inclusion(graph), None)
    if graph.num_edges == 0:
        raise TrivialCore("the subgroup is trivial")
    inc = core_inclusion(graph, keep=(base,))
    if inc.sub.num_edges == 0:
        raise TrivialCore("the subgroup is trivial")
    return _restrict(sg, inc, inc.vertex_index[base])


def subgroup_graph(target: Graph, generators: Sequence[Word | Path], base: int = 0) -> SubgroupGraph:
    """The folded pointed core graph of the subgroup generated by closed paths at ``base``.

    Words are read as paths in a rose target.
    """
    loops = []
    for g in generators:
        p = word_to_path(g) if isinstance(g, Word) else tuple(g)
        if p:
            loops.append(p)
    if not loops:
        raise TrivialCore("no nontrivial generators")
    r = rose(len(loops))
    m = GraphMap(r, target, (base,), tuple(loops))
    res = fold_to_immersion(m, strict=False, base=0)
    return _pointed_core(res.graph, res.immersion, res.base)


def membership(sg: SubgroupGraph, w: Word | Path) -> bool:
    p = word_to_path(w) if isinstance(w, Word) else tuple(w)
    return sg.read(p) == sg.base


def labeled_isomorphism(a: SubgroupGraph, b: SubgroupGraph, pointed: bool = True) -> tuple[int, ...] | None:
    """A label-preserving isomorphism ``a -> b`` as a vertex map, or None.

    Folded graphs are deterministic automata, so an isomorphism is fixed by
    where it sends one vertex.
    """
    if a.target != b.target:
        return None
    if (a.num_vertices, a.num_edges) != (b.num_vertices, b.num_edges):
        return None
    if a.num_vertices == 0:
        return ()
    ta, tb = a._trans, b._trans
    if pointed and a.base is not None and b.base is not None:
        starts = [(a.base, b.base)]
    else:
        starts = [(0, y) for y in range(b.num_vertices)]
    for x0, y0 in starts:
        vmap = {x0: y0}
        queue = deque([x0])
        ok = a.label.vertex_images[x0] == b.label.vertex_images[y0]
        while ok and queue:
            x = queue.popleft()
            y = vmap[x]
            if ta[x].keys() != tb[y].keys():
                ok = False
                break
            for lab, e in ta[x].items():
                x2 = a.graph.terminus(e)
                y2 = b.graph.terminus(tb[y][lab])
                if x2 in vmap:
                    if vmap[x2] != y2:
                        ok = False
                        break
                else:
                    vmap[x2] = y2
                    queue.append(x2)
        if ok and len(set(vmap.values())) == len(vmap) == a.num_vertices:
            return tuple(vmap[x] for x in range(a.num_vertices))
    return None


def same_subgroup(a: SubgroupGraph, b: SubgroupGraph, pointed: bool = True) -> bool:
    """Equal subgroups, or conjugate ones when ``pointed`` is False."""
    if not pointed:
        a, b = a.unpointed(), b.unpointed()
    return labeled_isomorphism(a, b, pointed) is not None


@dataclass(frozen=True)
class PullbackComponent:
    graph: SubgroupGraph  # labelled over the common target
    pairs: tuple[tuple[int, int], ...]  # vertex -> (vertex of first, vertex of second)
    edge_pairs: tuple[tuple[int, int], ...]  # edge pair -> (oriented edge of first, of second)

    def projection(self, which: int, onto: SubgroupGraph) -> SubgroupGraph:
        """The component as a graph immersed in factor ``which`` (0 or 1)."""
        lab = GraphMap(
            self.graph.graph,
            onto.graph,
            tuple(p[which] for p in self.pairs),
            tuple((ep[which],) for ep in self.edge_pairs),
        )
        base = self.graph.base
        return SubgroupGraph(self.graph.graph, lab, base)


@dataclass(frozen=True)
class Pullback:
    components: tuple[PullbackComponent, ...]
    pointed: int | None  # index of the component at the base pair, if its core is nontrivial


def pullback(a: SubgroupGraph, b: SubgroupGraph) -> Pullback:
    """Fiber product of two immersions over the same target, cut down to cores."""
    if a.target != b.target:
        raise PreconditionError("subgroup graphs live over different targets")
    la, lb = a.label.vertex_images, b.label.vertex_images
    verts = [(x, y) for x in range(a.num_vertices) for y in range(b.num_vertices) if la[x] == lb[y]]
    vidx = {p: i for i, p in enumerate(verts)}
    tb = b._trans
    origins: list[int] = []
    epairs: list[tuple[int, int]] = []
    for e in range(0, len(a.graph.origins), 2):
        lab = a.edge_label(e)
        for y in range(b.num_vertices):
            f = tb[y].get(lab)
            if f is None:
                continue
            x = a.graph.origin(e)
            if la[x] != lb[y]:
                continue
            src = vidx[(x, y)]
            dst = vidx[(a.graph.terminus(e), b.graph.terminus(f))]
            origins += [src, dst]
            epairs.append((e, f))
    full = Graph(len(verts), tuple(origins))
    label = GraphMap(
        full,
        a.target,
        tuple(la[x] for x, _ in verts),
        tuple((a.edge_label(e),) for e, _ in epairs),
    )
    base_pair = None
    if a.base is not None and b.base is not None:
        base_pair = vidx.get((a.base, b.base))

    # connected components
    comp = [-1] * full.num_vertices
    ncomp = 0
    for s in range(full.num_vertices):
        if comp[s] != -1:
            continue
        comp[s] = ncomp
        stack = [s]
        while stack:
            v = stack.pop()
            for e in full.directions(v):
                w = full.terminus(e)
                if comp[w] == -1:
                    comp[w] = ncomp
                    stack.append(w)
        ncomp += 1

    from .graphs import induced_subgraph

    components = []
    pointed = None
    for c in range(ncomp):
        vs = [v for v in range(full.num_vertices) if comp[v] == c]
        es = [k for k in range(full.num_edges) if comp[full.origin(2 * k)] == c]
        if not es:
            continue
        inc = induced_subgraph(full, vs, es)
        keep = ()
        if base_pair is not None and comp[base_pair] == c:
            keep = (inc.vertex_index[base_pair],)
        try:
            cinc = core_inclusion(inc.sub, keep=keep)
        except TrivialCore:
            continue
        if cinc.sub.num_edges == 0:
            continue
        old_vs = [inc.vertices[v] for v in cinc.vertices]
        old_es = [inc.edges[k] for k in cinc.edges]
        sub_lab = GraphMap(
            cinc.sub,
            a.target,
            tuple(label.vertex_images[v] for v in old_vs),
            tuple(label.edge_images[k] for k in old_es),
        )
        base = cinc.vertex_index[keep[0]] if keep else None
        if keep:
            pointed = len(components)
        components.append(
            PullbackComponent(
                SubgroupGraph(cinc.sub, sub_lab, base),
                tuple(verts[v] for v in old_vs),
                tuple(epairs[k] for k in old_es),
            )
        )
    return Pullback(tuple(components), pointed)


def intersection(a: SubgroupGraph, b: SubgroupGraph) -> SubgroupGraph | None:
    """Pointed intersection, or None when it is trivial."""
    pb = pullback(a, b)
    return None if pb.pointed is None else pb.components[pb.pointed].graph


def is_covering(sg: SubgroupGraph) -> bool:
    t = sg.target
    for v in range(sg.num_vertices):
        labels = sorted(sg.edge_label(e) for e in sg.graph.directions(v))
        if labels != sorted(t.directions(sg.label.vertex_images[v])):
            return False
    return True


def covering_index(sg: SubgroupGraph) -> float:
    """Degree of the cover when ``sg`` is a finite cover of its target, else ``inf``."""
    if not is_covering(sg):
        return math.inf
    n, d = divmod(sg.num_vertices, sg.target.num_vertices)
    if d:
        raise AssertionError("a covering must have a whole number of sheets")
    return n


def covering_subgroup(sheets: Sequence[Sequence[int]], base: int = 0) -> SubgroupGraph:
    """Subgroup graph of a finite cover of the rose from generator permutations."""
    n = len(sheets[0])
    origins: list[int] = []
    images = []
    for i, perm in enumerate(sheets):
        if sorted(perm) != list(range(n)):
            raise ValueError(f"generator {i} does not act by a permutation")
        for v in range(n):
            origins += [v, perm[v]]
            images.append((2 * i,))
    g = Graph(n, tuple(origins))
    r = rose(len(sheets))
    return _orbit_component(SubgroupGraph(g, GraphMap(g, r, (0,) * n, tuple(images)), base))


def _orbit_component(sg: SubgroupGraph) -> SubgroupGraph:
    """Restrict a cover to the component of its base vertex, renumbered in BFS order."""
    order = [sg.base]
    seen = {sg.base}
    queue = deque([sg.base])
    while queue:
        v = queue.popleft()
        for e in sorted(sg.graph.directions(v)):
            w = sg.graph.terminus(e)
            if w not in seen:
                seen.add(w)
                order.append(w)
                queue.append(w)
    if len(order) == sg.num_vertices and sg.base == 0:
        return sg
    from .graphs import induced_subgraph

    es = [k for k in range(sg.num_edges) if sg.graph.origin(2 * k) in seen]
    inc = induced_subgraph(sg.graph, order, es)
    # induced_subgraph sorts vertices; map old base to its new index
    return _restrict(sg, inc, inc.vertex_index[sg.base])


def action_permutations(sg: SubgroupGraph) -> list[tuple[int, ...]]:
    """For a cover of a rose, the permutation of vertices induced by each generator."""
    if not is_covering(sg):
        raise PreconditionError("not a finite cover")
    rank = sg.target.num_edges
    t = sg._trans
    return [tuple(sg.graph.terminus(t[v][2 * i]) for v in range(sg.num_vertices)) for i in range(rank)]


def preimage_subgroup(e: Endomorphism, h: SubgroupGraph) -> SubgroupGraph:
    """The finite-index subgroup ``e^{-1}(H)`` from the coset action of ``H``."""
    if h.base is None or not is_covering(h) or h.target.num_vertices != 1:
        raise PreconditionError("preimage needs a pointed finite cover of the rose")
    if h.target.num_edges != e.rank:
        raise PreconditionError("rank mismatch between subgroup and endomorphism")
    paths = [word_to_path(w) for w in e.images]
    order = [h.base]
    index = {h.base: 0}
    perms: list[dict[int, int]] = [{} for _ in paths]
    queue = deque([h.base])
    while queue:
        v = queue.popleft()
        for i, p in enumerate(paths):
            w = h.read(p, start=v)
            perms[i][v] = w
            if w not in index:
                index[w] = len(order)
                order.append(w)
                queue.append(w)
    sheets = [[index[perms[i][v]] for v in order] for i in range(len(paths))]
    return covering_subgroup(sheets, 0)


def tree_words(sg: SubgroupGraph) -> list[Path]:
    """For each vertex, the label path of the BFS-tree path from the base."""
    out: list[Path | None] = [None] * sg.num_vertices
    out[sg.base] = ()
    queue = deque([sg.base])
    while queue:
        v = queue.popleft()
        for e in sorted(sg.graph.directions(v)):
            w = sg.graph.terminus(e)
            if out[w] is None:
                out[w] = out[v] + (sg.edge_label(e),)
                queue.append(w)
    return out  # type: ignore[return-value]


@dataclass(frozen=True)
class Stabilization:
    k: int
    j: int
    subgroup: SubgroupGraph
    permutation: tuple[int, ...]  # vertex (coset) -> image coset under e^(j-k)
    indices: tuple[int, ...]  # indices of the preimage chain H_0 .. H_j


def stabilized_preimage(e: Endomorphism, h: SubgroupGraph, max_steps: int = 10_000) -> Stabilization:
    """Iterate preimages until a subgroup repeats and check the induced coset bijection."""
    chain = [h]
    for j in range(1, max_steps + 1):
        nxt = preimage_subgroup(e, chain[-1])
        for k, prev in enumerate(chain):
            if same_subgroup(prev, nxt):
                chain.append(nxt)
                return _stab(e, chain, k, j)
        chain.append(nxt)
    raise AssertionError("preimage chain did not stabilize")


def _coset_step(e: Endomorphism, upper: SubgroupGraph, lower: SubgroupGraph) -> tuple[int, ...]:
    """The map ``upper·w -> lower·e(w)`` on cosets, checked to commute with every generator.

    Well defined because ``upper`` is the preimage of ``lower``.
    """
    step = tuple(lower.read(word_to_path(e(_path_word(p)))) for p in tree_words(upper))
    acts = action_permutations(upper)
    for v in range(upper.num_vertices):
        for i, act in enumerate(acts):
            if step[act[v]] != lower.read(word_to_path(e.images[i]), start=step[v]):
                raise AssertionError("coset square does not commute")
    return step


def _stab(e: Endomorphism, chain: list[SubgroupGraph], k: int, j: int) -> Stabilization:
    K = chain[k]
    iso = labeled_isomorphism(K, chain[j])
    # compose the one-step coset maps H_j -> H_(j-1) -> ... -> H_k, one power of e at a time
    perm = tuple(iso)
    for i in range(j - 1, k - 1, -1):
        step = _coset_step(e, chain[i + 1], chain[i])
        perm = tuple(step[v] for v in perm)
    if sorted(perm) != list(range(K.num_vertices)):
        raise AssertionError("induced map on cosets is not a bijection")
    return Stabilization(k, j, K, perm, tuple(int(covering_index(c)) for c in chain))


def _path_word(p: Path) -> Word:
    from .graphs import path_to_word

    return path_to_word(p)


@dataclass(frozen=True)
class ImageSequence:
    """The image graphs ``S_1 .. S_k`` with their fold data."""

    graphs: tuple[SubgroupGraph, ...]
    folds: tuple[FoldResult, ...]
    surjective: bool

    @property
    def edge_counts(self) -> tuple[int, ...]:
        return tuple(s.num_edges for s in self.graphs)


def iterate_image(f: GraphMap, k: int) -> ImageSequence:
    """``S_{i+1}`` from folding ``f ∘ v_i``; ``S_0`` is the domain of ``f``."""
    if not f.is_endomap():
        raise PreconditionError("iterate_image needs a self-map")
    from .graphs import identity_map

    cur = identity_map(f.domain)
    graphs = []
    folds = []
    for _ in range(k):
        m = compose(cur, f)
        res = fold_to_immersion(m)
        sg = SubgroupGraph(res.graph, res.immersion).unpointed()
        graphs.append(sg)
        folds.append(res)
        cur = sg.label
    surjective = bool(graphs) and covering_index(graphs[0]) == 1
    return ImageSequence(tuple(graphs), tuple(folds), surjective)


def image_subgroup(e: Endomorphism, power: int = 1) -> SubgroupGraph:
    """Pointed subgroup graph of ``e^power(F)`` over the standard rose."""
    ep = e.power(power)
    r = rose(e.rank)
    return subgroup_graph(r, list(ep.images))


__all__ = [
    "FoldRecord",
    "FoldResult",
    "fold_to_immersion",
    "is_injective",
    "invert_automorphism",
    "SubgroupGraph",
    "subgroup_graph",
    "membership",
    "labeled_isomorphism",
    "same_subgroup",
    "Pullback",
    "PullbackComponent",
    "pullback",
    "intersection",
    "is_covering",
    "covering_index",
    "covering_subgroup",
    "action_permutations",
    "preimage_subgroup",
    "stabilized_preimage",
    "Stabilization",
    "tree_words",
    "ImageSequence",
    "iterate_image",
    "image_subgroup",
]
