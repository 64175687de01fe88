"""Finite graphs in the half-edge model, and maps between them.

Edge pair ``k`` has oriented edges ``2k`` (positive) and ``2k + 1``; reversal
is ``e ^ 1``.  A path is a tuple of oriented edges.  A map sends vertices to
vertices and each positive oriented edge to a path; reversed edges go to the
reversed path.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

from .errors import DegenerateEdgeImage, PreconditionError, TrivialCore
from .words import Endomorphism, Word

Path = tuple[int, ...]
Turn = tuple[int, int]


def rev(e: int) -> int:
    return e ^ 1


def reverse_path(p: Sequence[int]) -> Path:
    return tuple(e ^ 1 for e in reversed(p))


def reduce_path(p: Sequence[int]) -> Path:
    stack: list[int] = []
    for e in p:
        if stack and stack[-1] == e ^ 1:
            stack.pop()
        else:
            stack.append(e)
    return tuple(stack)


def make_turn(d1: int, d2: int) -> Turn:
    return (d1, d2) if d1 <= d2 else (d2, d1)


def path_turns(p: Sequence[int]) -> list[Turn]:
    """Turns crossed by a path: ``{reverse(e_k), e_{k+1}}`` at each interior vertex."""
    return [make_turn(p[k] ^ 1, p[k + 1]) for k in range(len(p) - 1)]


def word_to_path(w: Word) -> Path:
    """Read a word as a path in the standard rose (generator i is edge pair i)."""
    return tuple(2 * (x - 1) if x > 0 else 2 * (-x - 1) + 1 for x in w)


def path_to_word(p: Sequence[int]) -> Word:
    return Word(tuple((e // 2 + 1) if e % 2 == 0 else -(e // 2 + 1) for e in p))


@dataclass(frozen=True)
class Graph:
    """A finite graph.  ``origins[e]`` is the origin vertex of oriented edge ``e``."""

    num_vertices: int
    origins: tuple[int, ...]
    edge_names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "origins", tuple(self.origins))
        if len(self.origins) % 2:
            raise ValueError("oriented edges come in pairs")
        if any(not 0 <= v < self.num_vertices for v in self.origins):
            raise ValueError("edge origin out of range")

    @classmethod
    def from_edges(cls, num_vertices: int, edges: Sequence[tuple[int, int]], names=None):
        origins: list[int] = []
        for u, w in edges:
            origins += [u, w]
        return cls(num_vertices, tuple(origins), tuple(names) if names else None)

    @property
    def num_edges(self) -> int:
        """Number of edge pairs."""
        return len(self.origins) // 2

    @property
    def oriented_edges(self) -> range:
        return range(len(self.origins))

    def origin(self, e: int) -> int:
        return self.origins[e]

    def terminus(self, e: int) -> int:
        return self.origins[e ^ 1]

    def endpoints(self, k: int) -> tuple[int, int]:
        return self.origins[2 * k], self.origins[2 * k + 1]

    @cached_property
    def _directions(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.num_vertices)]
        for e, v in enumerate(self.origins):
            out[v].append(e)
        return tuple(tuple(x) for x in out)

    def directions(self, v: int) -> tuple[int, ...]:
        return self._directions[v]

    def valence(self, v: int) -> int:
        return len(self._directions[v])

    def euler_rank(self) -> int:
        """``|E| - |V| + 1``, the rank of the fundamental group when connected."""
        return self.num_edges - self.num_vertices + 1

    def is_connected(self) -> bool:
        if self.num_vertices == 0:
            return True
        seen = {0}
        todo = [0]
        while todo:
            v = todo.pop()
            for e in self.directions(v):
                w = self.terminus(e)
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        return len(seen) == self.num_vertices

    def is_path(self, p: Sequence[int]) -> bool:
        return all(self.terminus(p[i]) == self.origin(p[i + 1]) for i in range(len(p) - 1))

    def edge_label(self, e: int) -> str:
        k = e // 2
        name = self.edge_names[k] if self.edge_names else f"e{k}"
        if e % 2 == 0:
            return name
        return name.upper() if name.islower() else name + "~"

    def format_path(self, p: Sequence[int]) -> str:
        if not p:
            return "1"
        sep = "" if self.edge_names and all(len(n) == 1 for n in self.edge_names) else " "
        return sep.join(self.edge_label(e) for e in p)


def rose(rank: int, names: Sequence[str] | None = None) -> Graph:
    names = tuple(names) if names else tuple("abcdefghijklmnopqrstuvwxyz"[:rank])
    return Graph(1, (0,) * (2 * rank), names)


@dataclass(frozen=True)
class GraphMap:
    """A map of graphs sending vertices to vertices and edges to edge paths."""

    domain: Graph
    codomain: Graph
    vertex_images: tuple[int, ...]
    edge_images: tuple[Path, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertex_images", tuple(self.vertex_images))
        object.__setattr__(self, "edge_images", tuple(tuple(p) for p in self.edge_images))
        if len(self.vertex_images) != self.domain.num_vertices:
            raise ValueError("one vertex image per domain vertex required")
        if len(self.edge_images) != self.domain.num_edges:
            raise ValueError("one edge image per domain edge pair required")
        cod = self.codomain
        for k, p in enumerate(self.edge_images):
            u, w = self.domain.endpoints(k)
            fu, fw = self.vertex_images[u], self.vertex_images[w]
            if p:
                if cod.origin(p[0]) != fu or cod.terminus(p[-1]) != fw or not cod.is_path(p):
                    raise ValueError(f"image of edge {k} is not a path from f({u}) to f({w})")
            elif fu != fw:
                raise ValueError(f"edge {k} collapses but its endpoints have distinct images")

    def image(self, e: int) -> Path:
        p = self.edge_images[e // 2]
        return p if e % 2 == 0 else reverse_path(p)

    def path_image(self, p: Sequence[int]) -> Path:
        out: list[int] = []
        for e in p:
            for x in self.image(e):
                if out and out[-1] == x ^ 1:
                    out.pop()
                else:
                    out.append(x)
        return tuple(out)

    def is_endomap(self) -> bool:
        return self.domain == self.codomain

    def format(self) -> str:
        d = self.domain
        return ", ".join(
            f"{d.edge_label(2 * k)} -> {self.codomain.format_path(p)}"
            for k, p in enumerate(self.edge_images)
        )


def rose_map(e: Endomorphism) -> GraphMap:
    """The obvious representative of ``e`` on the standard rose."""
    r = rose(e.rank, e.basis.names)
    return GraphMap(r, r, (0,), tuple(word_to_path(w) for w in e.images))


def identity_map(g: Graph) -> GraphMap:
    return GraphMap(g, g, tuple(range(g.num_vertices)), tuple((2 * k,) for k in range(g.num_edges)))


def tighten(m: GraphMap, allow_degenerate: bool = False) -> GraphMap:
    """Freely reduce every edge image (a homotopy rel vertices)."""
    images = []
    for k, p in enumerate(m.edge_images):
        q = reduce_path(p)
        if not q and not allow_degenerate:
            raise DegenerateEdgeImage(k)
        images.append(q)
    return GraphMap(m.domain, m.codomain, m.vertex_images, tuple(images))


def pull_tight(g: GraphMap) -> GraphMap:
    """Shorten ``g`` by moving vertex images, keeping the homotopy class.

    A vertex moves across edge ``x`` when more than half of its directions
    have images starting with ``x``; each move strictly reduces total length.
    """
    d = g.domain
    verts = list(g.vertex_images)
    images = [tuple(p) for p in g.edge_images]
    changed = True
    while changed:
        changed = False
        for u in range(d.num_vertices):
            counts: dict[int, int] = {}
            for e in d.directions(u):
                p = images[e // 2] if e % 2 == 0 else reverse_path(images[e // 2])
                if p:
                    counts[p[0]] = counts.get(p[0], 0) + 1
            best = max(sorted(counts), key=lambda x: counts[x], default=None)
            if best is None or 2 * counts[best] <= d.valence(u):
                continue
            x = best
            verts[u] = g.codomain.terminus(x)
            for k in range(d.num_edges):
                a, b = d.endpoints(k)
                if a == u:
                    images[k] = reduce_path((x ^ 1,) + images[k])
                if b == u:
                    images[k] = reduce_path(images[k] + (x,))
            changed = True
    return GraphMap(d, g.codomain, tuple(verts), tuple(images))


def direction_map(m: GraphMap) -> dict[int, int | None]:
    """``Df(d)``: the first oriented edge of the image of direction ``d``."""
    out: dict[int, int | None] = {}
    for e in m.domain.oriented_edges:
        p = m.image(e)
        out[e] = p[0] if p else None
    return out


def is_immersion(m: GraphMap) -> tuple[bool, Turn | None]:
    """Locally injective check.  On failure returns a turn with degenerate image.

    An edge image that is not reduced is reported by the turn inside the
    image path that backtracks, expressed as a pair of equal directions.
    """
    for k, p in enumerate(m.edge_images):
        if not p:
            return False, None
        for i in range(len(p) - 1):
            if p[i + 1] == p[i] ^ 1:
                return False, (p[i] ^ 1, p[i + 1])
    df = direction_map(m)
    g = m.domain
    for v in range(g.num_vertices):
        seen: dict[int, int] = {}
        for d in g.directions(v):
            img = df[d]
            if img in seen:
                return False, make_turn(seen[img], d)
            seen[img] = d
    return True, None


def compose(m1: GraphMap, m2: GraphMap) -> GraphMap:
    """``m2 ∘ m1``, tightened.  Edges may collapse (kept as empty paths)."""
    if m1.codomain != m2.domain:
        raise PreconditionError("codomain of the first map differs from domain of the second")
    return GraphMap(
        m1.domain,
        m2.codomain,
        tuple(m2.vertex_images[v] for v in m1.vertex_images),
        tuple(m2.path_image(p) for p in m1.edge_images),
    )


def iterate(m: GraphMap, k: int) -> GraphMap:
    if not m.is_endomap():
        raise PreconditionError("only self-maps can be iterated")
    result = identity_map(m.domain)
    for _ in range(k):
        result = compose(result, m)
    return result


@dataclass(frozen=True)
class Inclusion:
    """Records how the vertices and edge pairs of a subgraph sit in a parent graph."""

    sub: Graph
    vertices: tuple[int, ...]  # new vertex -> old vertex
    edges: tuple[int, ...]  # new edge pair -> old edge pair

    @cached_property
    def vertex_index(self) -> dict[int, int]:
        return {old: new for new, old in enumerate(self.vertices)}

    @cached_property
    def edge_index(self) -> dict[int, int]:
        return {old: new for new, old in enumerate(self.edges)}

    def lift_edge(self, e: int) -> int:
        """Old oriented edge -> new oriented edge."""
        return 2 * self.edge_index[e // 2] + (e & 1)

    def push_edge(self, e: int) -> int:
        return 2 * self.edges[e // 2] + (e & 1)


def induced_subgraph(g: Graph, vertices: Sequence[int], edges: Sequence[int]) -> Inclusion:
    vertices = tuple(sorted(vertices))
    edges = tuple(sorted(edges))
    vidx = {v: i for i, v in enumerate(vertices)}
    origins: list[int] = []
    for k in edges:
        u, w = g.endpoints(k)
        origins += [vidx[u], vidx[w]]
    names = tuple(g.edge_names[k] for k in edges) if g.edge_names else None
    return Inclusion(Graph(len(vertices), tuple(origins), names), vertices, edges)


def core_inclusion(g: Graph, keep: Sequence[int] = ()) -> Inclusion:
    """Iteratively prune valence-one vertices (other than ``keep``)."""
    alive_v = set(range(g.num_vertices))
    alive_e = set(range(g.num_edges))
    valence = [g.valence(v) for v in range(g.num_vertices)]
    todo = [v for v in alive_v if valence[v] <= 1 and v not in keep]
    while todo:
        v = todo.pop()
        if v not in alive_v or valence[v] > 1 or v in keep:
            continue
        alive_v.discard(v)
        for e in g.directions(v):
            if e // 2 in alive_e:
                alive_e.discard(e // 2)
                w = g.terminus(e)
                valence[w] -= 1
                if w in alive_v and valence[w] <= 1 and w not in keep:
                    todo.append(w)
    if not alive_e and not keep:
        raise TrivialCore("the graph is a forest; its core is empty")
    return induced_subgraph(g, sorted(alive_v), sorted(alive_e))


def core(g: Graph) -> Graph:
    return core_inclusion(g).sub


def spanning_tree(g: Graph, root: int = 0) -> dict[int, int]:
    """BFS tree: maps each non-root vertex to the oriented edge arriving at it."""
    parent: dict[int, int] = {}
    seen = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for e in g.directions(v):
            w = g.terminus(e)
            if w not in seen:
                seen.add(w)
                parent[w] = e
                queue.append(w)
    return parent


def tree_path(g: Graph, tree: dict[int, int], v: int) -> Path:
    """Path in the tree from the root to ``v``."""
    out = []
    while v in tree:
        e = tree[v]
        out.append(e)
        v = g.origin(e)
    return tuple(reversed(out))


@dataclass(frozen=True)
class TreeBasis:
    """Free basis of ``pi_1(g, root)`` given by the edges outside a spanning tree."""

    graph: Graph
    root: int
    tree: dict[int, int]
    generators: tuple[int, ...]  # non-tree edge pairs, generator i+1 is edge pair generators[i]

    @classmethod
    def of(cls, g: Graph, root: int = 0) -> "TreeBasis":
        tree = spanning_tree(g, root)
        in_tree = {e // 2 for e in tree.values()}
        return cls(g, root, tree, tuple(k for k in range(g.num_edges) if k not in in_tree))

    @cached_property
    def _letter(self) -> dict[int, int]:
        return {k: i + 1 for i, k in enumerate(self.generators)}

    def word(self, p: Sequence[int]) -> Word:
        """Element of ``pi_1`` represented by a path, closed up along tree paths."""
        letters = []
        for e in p:
            i = self._letter.get(e // 2)
            if i is not None:
                letters.append(i if e % 2 == 0 else -i)
        return Word(tuple(letters))

    def loop(self, w: Word) -> Path:
        """A closed path at the root representing ``w``."""
        out: list[int] = []
        for x in w:
            k = self.generators[abs(x) - 1]
            e = 2 * k if x > 0 else 2 * k + 1
            piece = (
                tree_path(self.graph, self.tree, self.graph.origin(e))
                + (e,)
                + reverse_path(tree_path(self.graph, self.tree, self.graph.terminus(e)))
            )
            out.extend(piece)
        return reduce_path(out)

    def transport(self, p: Sequence[int]) -> Path:
        """Conjugate a closed path at any vertex to a closed path at the root."""
        if not p:
            return ()
        to = tree_path(self.graph, self.tree, self.graph.origin(p[0]))
        return reduce_path(to + tuple(p) + reverse_path(to))


def collapse(g: Graph, edges: Sequence[int]) -> tuple[Graph, tuple[int, ...], dict[int, int]]:
    """Collapse a forest of edge pairs.

    Returns the quotient graph, the vertex map, and a map from surviving old
    oriented edges to new oriented edges.
    """
    parent = list(range(g.num_vertices))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    dead = set(edges)
    for k in sorted(dead):
        u, w = (find(x) for x in g.endpoints(k))
        if u == w:
            raise PreconditionError(f"edge {k} closes a loop; only forests can be collapsed")
        parent[max(u, w)] = min(u, w)
    reps = sorted({find(v) for v in range(g.num_vertices)})
    ridx = {r: i for i, r in enumerate(reps)}
    vmap = tuple(ridx[find(v)] for v in range(g.num_vertices))
    origins: list[int] = []
    emap: dict[int, int] = {}
    names = []
    for k in range(g.num_edges):
        if k in dead:
            continue
        new = len(origins) // 2
        emap[2 * k] = 2 * new
        emap[2 * k + 1] = 2 * new + 1
        origins += [vmap[g.origin(2 * k)], vmap[g.origin(2 * k + 1)]]
        if g.edge_names:
            names.append(g.edge_names[k])
    return Graph(len(reps), tuple(origins), tuple(names) if names else None), vmap, emap


@dataclass(frozen=True)
class Smoothing:
    """A graph with bivalent vertices erased, remembering the natural edges."""

    graph: Graph
    vertices: tuple[int, ...]  # new vertex -> old vertex
    natural_edges: tuple[Path, ...]  # new edge pair -> old path

    @cached_property
    def _position(self) -> dict[int, tuple[int, int]]:
        # old oriented edge -> (new oriented edge, offset) when it starts that natural edge
        pos: dict[int, tuple[int, int]] = {}
        for k, p in enumerate(self.natural_edges):
            pos[p[0]] = (2 * k, len(p))
            pos[reverse_path(p)[0]] = (2 * k + 1, len(p))
        return pos

    def translate(self, p: Sequence[int]) -> Path:
        """Rewrite a path between kept vertices in terms of natural edges."""
        out = []
        i = 0
        while i < len(p):
            e, n = self._position[p[i]]
            out.append(e)
            i += n
        return tuple(out)

    def expand(self, p: Sequence[int]) -> Path:
        out: list[int] = []
        for e in p:
            q = self.natural_edges[e // 2]
            out.extend(q if e % 2 == 0 else reverse_path(q))
        return tuple(out)


def smooth(g: Graph, keep: Sequence[int] = ()) -> Smoothing:
    """Erase bivalent vertices not in ``keep``."""
    kept = [v for v in range(g.num_vertices) if g.valence(v) != 2 or v in keep]
    if not kept:
        kept = [0]
    kept_set = set(kept)
    vidx = {v: i for i, v in enumerate(kept)}
    used: set[int] = set()
    origins: list[int] = []
    naturals: list[Path] = []
    for v in kept:
        for e in g.directions(v):
            if e in used:
                continue
            path = [e]
            w = g.terminus(e)
            while w not in kept_set:
                nxt = next(d for d in g.directions(w) if d != path[-1] ^ 1)
                path.append(nxt)
                w = g.terminus(nxt)
            used.add(path[0])
            used.add(path[-1] ^ 1)
            naturals.append(tuple(path))
            origins += [vidx[v], vidx[w]]
    return Smoothing(Graph(len(kept), tuple(origins)), tuple(kept), tuple(naturals))


def isomorphisms(g1: Graph, g2: Graph) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All graph isomorphisms, as (vertex map, oriented-edge map) pairs."""
    if (g1.num_vertices, g1.num_edges) != (g2.num_vertices, g2.num_edges):
        return
    if sorted(map(g1.valence, range(g1.num_vertices))) != sorted(
        map(g2.valence, range(g2.num_vertices))
    ):
        return
    if g1.num_vertices == 0:
        yield (), ()
        return
    # order oriented edges so each one's origin is already placed
    order: list[int] = []
    seen_v = {0}
    seen_e: set[int] = set()
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for e in g1.directions(v):
            if e // 2 in seen_e:
                continue
            seen_e.add(e // 2)
            order.append(e)
            w = g1.terminus(e)
            if w not in seen_v:
                seen_v.add(w)
                queue.append(w)
    if len(seen_v) != g1.num_vertices:
        raise PreconditionError("isomorphism search needs a connected graph")

    vmap = [-1] * g1.num_vertices
    vused = [False] * g2.num_vertices
    emap = [-1] * len(g1.origins)
    eused = [False] * len(g2.origins)

    def place(i):
        if i == len(order):
            yield tuple(vmap), tuple(emap)
            return
        e = order[i]
        u, w = g1.origin(e), g1.terminus(e)
        for f in g2.directions(vmap[u]):
            if eused[f]:
                continue
            tw = g2.terminus(f)
            fresh = vmap[w] == -1
            if fresh:
                if vused[tw] or g1.valence(w) != g2.valence(tw):
                    continue
            elif vmap[w] != tw:
                continue
            if u == w and (f ^ 1) == f:
                continue
            emap[e], emap[e ^ 1] = f, f ^ 1
            eused[f] = eused[f ^ 1] = True
            if fresh:
                vmap[w] = tw
                vused[tw] = True
            yield from place(i + 1)
            if fresh:
                vmap[w] = -1
                vused[tw] = False
            eused[f] = eused[f ^ 1] = False
            emap[e] = emap[e ^ 1] = -1

    for start in range(g2.num_vertices):
        if g2.valence(start) != g1.valence(0):
            continue
        vmap[0] = start
        vused[start] = True
        yield from place(0)
        vused[start] = False
        vmap[0] = -1


__all__ = [
    "Graph",
    "GraphMap",
    "Path",
    "Turn",
    "rev",
    "reverse_path",
    "reduce_path",
    "make_turn",
    "path_turns",
    "word_to_path",
    "path_to_word",
    "rose",
    "rose_map",
    "identity_map",
    "tighten",
    "pull_tight",
    "direction_map",
    "is_immersion",
    "compose",
    "iterate",
    "core",
    "core_inclusion",
    "induced_subgraph",
    "Inclusion",
    "spanning_tree",
    "tree_path",
    "TreeBasis",
    "collapse",
    "smooth",
    "Smoothing",
    "isomorphisms",
]
