"""Train track analysis of graph self-maps.

Transition matrices and their Perron-Frobenius data, legality of turns,
Whitehead graphs, clean maps, bounded cancellation and leaf segments.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import networkx as nx
import numpy as np

from .errors import PreconditionError
from .graphs import (
    Graph,
    GraphMap,
    Path,
    Turn,
    compose,
    direction_map,
    iterate,
    make_turn,
    path_turns,
    tighten,
)
from .stallings import FoldResult, fold_to_immersion


@dataclass(frozen=True)
class TransitionMatrix:
    """Entry ``(i, j)`` counts occurrences of edge ``i`` (either orientation) in the image of edge ``j``."""

    entries: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.entries)

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(self.size, self.size)

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.entries]

    @classmethod
    def of(cls, rows: Sequence[Sequence[int]]) -> "TransitionMatrix":
        rows = tuple(tuple(int(x) for x in r) for r in rows)
        if any(len(r) != len(rows) for r in rows):
            raise ValueError("transition matrix must be square")
        if any(x < 0 for r in rows for x in r):
            raise ValueError("transition matrix must be nonnegative")
        return cls(rows)


def transition_matrix(m: GraphMap) -> TransitionMatrix:
    if not m.is_endomap():
        raise PreconditionError("transition matrix needs a self-map")
    n = m.domain.num_edges
    a = [[0] * n for _ in range(n)]
    for j, p in enumerate(m.edge_images):
        for e in p:
            a[e // 2][j] += 1
    return TransitionMatrix.of(a)


def _as_rows(a) -> list[list[int]]:
    if isinstance(a, TransitionMatrix):
        return a.tolist()
    return [list(map(int, r)) for r in a]


def _reach(rows: list[list[int]], transpose: bool) -> set[int]:
    n = len(rows)
    seen = {0}
    todo = [0]
    while todo:
        i = todo.pop()
        for j in range(n):
            x = rows[j][i] if transpose else rows[i][j]
            if x and j not in seen:
                seen.add(j)
                todo.append(j)
    return seen


def is_irreducible(a) -> bool:
    """Strong connectivity of the digraph with an arc ``i -> j`` when ``a[i][j] > 0``."""
    rows = _as_rows(a)
    n = len(rows)
    if n == 0:
        return False
    if n == 1:
        return rows[0][0] > 0
    return len(_reach(rows, False)) == n and len(_reach(rows, True)) == n


def period(a) -> int:
    """Gcd of cycle lengths of an irreducible matrix."""
    rows = _as_rows(a)
    if not is_irreducible(rows):
        raise PreconditionError("period is only defined for irreducible matrices")
    n = len(rows)
    level = [-1] * n
    level[0] = 0
    queue = [0]
    g = 0
    for i in queue:
        for j in range(n):
            if rows[i][j]:
                if level[j] == -1:
                    level[j] = level[i] + 1
                    queue.append(j)
                else:
                    g = math.gcd(g, level[i] + 1 - level[j])
    return g


def is_primitive(a) -> bool:
    rows = _as_rows(a)
    return is_irreducible(rows) and period(rows) == 1


def wielandt_primitive(a) -> bool:
    """Primitivity by testing the power ``(n-1)^2 + 1`` for positivity."""
    m = np.array(_as_rows(a), dtype=object)
    n = m.shape[0]
    b = (m > 0).astype(object)
    p = np.identity(n, dtype=object)
    for _ in range((n - 1) ** 2 + 1):
        p = ((p.dot(b)) > 0).astype(object)
    return bool(np.all(p > 0))


@dataclass(frozen=True)
class PFData:
    lam: float
    lower: Fraction
    upper: Fraction
    right: tuple[float, ...]
    left_eigenvector: tuple[float, ...]  # PF metric, normalised so the shortest edge has length 1
    history: tuple[tuple[Fraction, Fraction], ...] = ()

    @property
    def expanding(self) -> bool:
        return self.lower > 1


def _cw_bounds(rows: list[list[int]], v: np.ndarray) -> tuple[Fraction, Fraction]:
    fv = [Fraction(float(x)) for x in v]
    ratios = [sum(r[j] * fv[j] for j in range(len(fv))) / fv[i] for i, r in enumerate(rows)]
    return min(ratios), max(ratios)


def _power(mat: np.ndarray, tol: float, max_iter: int):
    n = mat.shape[0]
    v = np.ones(n)
    for _ in range(max_iter):
        w = mat.dot(v)
        w = w / w.sum()
        if np.max(np.abs(w - v)) < tol * 1e-3:
            v = w
            break
        v = w
    return v


def pf_eigenvalue(a, tol: float = 1e-12, max_iter: int = 100_000) -> PFData:
    """Perron-Frobenius data with certified Collatz-Wielandt bounds.

    Iterates ``A + I`` (same eigenvectors, aperiodic) and keeps the best
    lower and upper bounds seen, so both are monotone.
    """
    rows = _as_rows(a)
    if not is_irreducible(rows):
        raise PreconditionError("Perron-Frobenius data needs an irreducible matrix")
    n = len(rows)
    mat = np.array(rows, dtype=float) + np.identity(n)
    v = np.ones(n) / n
    lower, upper = _cw_bounds(rows, v)
    history = [(lower, upper)]
    for _ in range(max_iter):
        if upper - lower <= tol:
            break
        w = mat.dot(v)
        w = w / w.sum()
        lo, hi = _cw_bounds(rows, w)
        lower, upper = max(lower, lo), min(upper, hi)
        history.append((lower, upper))
        if np.array_equal(w, v):
            break
        v = w
    if upper - lower > tol:
        raise ArithmeticError(f"power iteration stalled with bracket width {float(upper - lower):.3g}")
    left = _power(mat.T, tol, max_iter)
    left = left / left.min()
    return PFData(
        float((lower + upper) / 2),
        lower,
        upper,
        tuple(float(x) for x in v / v.sum()),
        tuple(float(x) for x in left),
        tuple(history),
    )


def pf_lengths(m: GraphMap, pf: PFData | None = None) -> tuple[float, ...]:
    pf = pf or pf_eigenvalue(transition_matrix(m))
    return pf.left_eigenvector


def path_length(p: Sequence[int], lengths: Sequence[float]) -> float:
    return float(sum(lengths[e // 2] for e in p))


@dataclass(frozen=True)
class Legality:
    train_track: bool
    taken: frozenset[Turn]  # closure of turns crossed by edge images
    witness: tuple[Turn, ...] | None = None  # orbit of a taken turn ending degenerate


def _turn_closure(m: GraphMap, seeds: set[Turn], df: dict) -> tuple[set[Turn], tuple[Turn, ...] | None]:
    seen: dict[Turn, Turn | None] = {t: None for t in seeds}
    todo = sorted(seeds)
    while todo:
        t = todo.pop()
        if t[0] == t[1]:
            chain = [t]
            while seen[chain[-1]] is not None:
                chain.append(seen[chain[-1]])
            return set(seen), tuple(reversed(chain))
        a, b = df[t[0]], df[t[1]]
        if a is None or b is None:
            continue
        u = make_turn(a, b)
        if u not in seen:
            seen[u] = t
            todo.append(u)
    return set(seen), None


def legality(m: GraphMap) -> Legality:
    """Train track test: close the taken turns under the direction map."""
    m = tighten(m)
    seeds = {t for p in m.edge_images for t in path_turns(p)}
    closed, witness = _turn_closure(m, seeds, direction_map(m))
    return Legality(witness is None, frozenset(closed), witness)


def is_train_track(m: GraphMap) -> tuple[bool, tuple[Turn, ...] | None]:
    res = legality(m)
    return res.train_track, res.witness


def is_legal_turn(m: GraphMap, t: Turn) -> bool:
    if t[0] == t[1]:
        return False
    _, w = _turn_closure(m, {t}, direction_map(m))
    return w is None


def is_legal_path(m: GraphMap, p: Sequence[int]) -> bool:
    return all(is_legal_turn(m, t) for t in path_turns(p))


@dataclass(frozen=True)
class WhiteheadGraph:
    vertex: int
    nodes: tuple[int, ...]
    edges: frozenset[Turn]

    def nx_graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from(self.edges)
        return g

    def is_connected(self) -> bool:
        return len(self.nodes) <= 1 or nx.is_connected(self.nx_graph())

    def cut_vertices(self) -> tuple[int, ...]:
        return tuple(sorted(nx.articulation_points(self.nx_graph())))


def has_cut_vertex(w: WhiteheadGraph) -> bool:
    return bool(w.cut_vertices())


def _bucket(g: Graph, turns) -> list[WhiteheadGraph]:
    out = []
    for v in range(g.num_vertices):
        es = frozenset(t for t in turns if g.origin(t[0]) == v and t[0] != t[1])
        out.append(WhiteheadGraph(v, g.directions(v), es))
    return out


def whitehead_graphs(m: GraphMap) -> list[WhiteheadGraph]:
    leg = legality(m)
    if not leg.train_track:
        raise PreconditionError("Whitehead graphs are defined for train track maps")
    return _bucket(m.domain, leg.taken)


class CleanStatus(enum.Enum):
    CLEAN = "Clean"
    WEAKLY_CLEAN_ONLY = "WeaklyCleanOnly"
    NOT_WEAKLY_CLEAN = "NotWeaklyClean"
    NOT_IRREDUCIBLE = "NotIrreducible"


@dataclass(frozen=True)
class CleanReport:
    status: CleanStatus
    disconnected: tuple[int, ...] = ()  # vertices whose Whitehead graph is disconnected

    @property
    def clean(self) -> bool:
        return self.status is CleanStatus.CLEAN


def is_clean(m: GraphMap) -> CleanReport:
    leg = legality(m)
    if not leg.train_track:
        raise PreconditionError("cleanliness is defined for train track maps")
    a = transition_matrix(m)
    if not is_irreducible(a):
        return CleanReport(CleanStatus.NOT_IRREDUCIBLE)
    bad = tuple(w.vertex for w in _bucket(m.domain, leg.taken) if not w.is_connected())
    if bad:
        return CleanReport(CleanStatus.NOT_WEAKLY_CLEAN, bad)
    if not is_primitive(a):
        # irreducible, weakly clean and imprimitive cannot happen for a train track
        return CleanReport(CleanStatus.WEAKLY_CLEAN_ONLY)
    return CleanReport(CleanStatus.CLEAN)


@dataclass(frozen=True)
class RelativeWhiteheadGraph:
    graph: WhiteheadGraph
    legal: bool  # every edge maps under h to an f-legal turn


def relative_whitehead_graphs(g: GraphMap, h: GraphMap, f: GraphMap) -> list[RelativeWhiteheadGraph]:
    """Relative Whitehead graphs of a factorization ``f^i = h ∘ g`` through ``X``.

    Edges are the turns inside ``g(e)`` plus the ``g``-images of the turns
    taken by iterates of ``f``.
    """
    leg = legality(f)
    if not leg.train_track:
        raise PreconditionError("f must be a train track")
    turns: set[Turn] = {t for p in g.edge_images for t in path_turns(p)}
    dg = direction_map(g)
    for t in leg.taken:
        a, b = dg[t[0]], dg[t[1]]
        if a is not None and b is not None and a != b:
            turns.add(make_turn(a, b))
    dh = direction_map(h)
    out = []
    for wg in _bucket(g.codomain, turns):
        legal = all(
            dh[t[0]] is not None
            and dh[t[1]] is not None
            and is_legal_turn(f, make_turn(dh[t[0]], dh[t[1]]))
            for t in wg.edges
        )
        out.append(RelativeWhiteheadGraph(wg, legal))
    return out


@dataclass(frozen=True)
class InducedMap:
    fold: FoldResult
    map: GraphMap  # h ∘ v on the folded graph

    @property
    def graph(self) -> Graph:
        return self.map.domain


def induced_map_on_image(f: GraphMap, i: int = 1) -> InducedMap:
    """The map ``h_i ∘ v_i`` on the image graph of ``f^i = v_i ∘ h_i``."""
    fi = iterate(f, i)
    res = fold_to_immersion(fi)
    return InducedMap(res, tighten(compose(res.immersion, res.fold_map)))


@dataclass(frozen=True)
class CancellationBounds:
    C: float
    lam: float | None
    critical: float | None
    fold_labels: tuple[int, ...]

    def persistent_subpath(self, b: Sequence[int], lengths: Sequence[float]) -> Path:
        """Trim whole edges of length at least ``C / (lam - 1)`` from each end of ``b``."""
        if self.critical is None:
            raise PreconditionError("critical constant undefined")
        trim = self.critical / 2
        lo, hi = 0, len(b)
        acc = 0.0
        while lo < hi and acc < trim:
            acc += lengths[b[lo] // 2]
            lo += 1
        acc = 0.0
        while hi > lo and acc < trim:
            hi -= 1
            acc += lengths[b[hi] // 2]
        return tuple(b[lo:hi])


def cancellation_bounds(m: GraphMap, lam: float | None = None, lengths: Sequence[float] | None = None) -> CancellationBounds:
    """Upper bound on cancellation from the fold factorization of ``m``.

    Each fold identifies one edge of the codomain's subdivision; summing the
    PF lengths of the folded labels bounds the cancellation at any junction.
    """
    res = fold_to_immersion(m)
    if lengths is None:
        a = transition_matrix(m)
        lengths = pf_eigenvalue(a).left_eigenvector if is_irreducible(a) else (1.0,) * m.codomain.num_edges
    labels = tuple(r.label for r in res.folds)
    c = float(sum(lengths[x // 2] for x in labels))
    critical = None
    if lam is not None:
        if lam <= 1:
            raise PreconditionError("critical constant needs stretch factor above 1")
        critical = 2 * c / (lam - 1)
    return CancellationBounds(c, lam, critical, labels)


def observed_cancellation(m: GraphMap, a: Sequence[int], b: Sequence[int]) -> int:
    """Number of edges cancelled from each side when tightening ``f(a) f(b)``."""
    fa, fb = m.path_image(a), m.path_image(b)
    k = 0
    while k < min(len(fa), len(fb)) and fa[-1 - k] == fb[k] ^ 1:
        k += 1
    return k


@dataclass(frozen=True)
class LeafSegment:
    path: Path
    seed: int
    period: int
    depth: int


def leaf_seed(m: GraphMap) -> tuple[int, int]:
    """Smallest ``p``, then smallest edge ``e``, with ``e`` in ``f^p(e)`` in either orientation.

    A reversed occurrence gives an orientation-reversing fixed point, so the
    returned period is doubled to keep the segments nested.
    """
    a = transition_matrix(m)
    if not is_irreducible(a) or all(sum(col) == 1 for col in zip(*a.entries)):
        raise PreconditionError("leaf segments need an expanding irreducible map")
    for p in range(1, a.size + 1):
        fp = iterate(m, p)
        for k in range(a.size):
            if 2 * k in fp.edge_images[k]:
                return 2 * k, p
            if 2 * k + 1 in fp.edge_images[k]:
                return 2 * k, 2 * p
    raise PreconditionError("no edge is periodic; the map is not expanding irreducible")


def _period_for(m: GraphMap, e: int) -> int:
    for p in range(1, m.domain.num_edges + 1):
        img = iterate(m, p).image(e)
        if e in img:
            return p
        if e ^ 1 in img:
            return 2 * p
    raise PreconditionError(f"edge {e} does not contain a periodic point")


def leaf_segment(m: GraphMap, k: int, seed: int | None = None) -> LeafSegment:
    """``f^{kp}(e)`` for a seed edge ``e`` contained in its own ``f^p`` image."""
    if seed is None:
        seed, p = leaf_seed(m)
    else:
        p = _period_for(m, seed)
    path: Path = (seed,)
    step = iterate(m, p)
    for _ in range(k):
        path = step.path_image(path)
    return LeafSegment(path, seed, p, k)


def is_subpath(small: Sequence[int], big: Sequence[int]) -> bool:
    n = len(small)
    return any(tuple(big[i : i + n]) == tuple(small) for i in range(len(big) - n + 1))


def matrix_power(a, k: int) -> list[list[int]]:
    rows = np.array(_as_rows(a), dtype=object)
    out = np.identity(rows.shape[0], dtype=object)
    for _ in range(k):
        out = out.dot(rows)
    return [[int(x) for x in r] for r in out]


__all__ = [
    "TransitionMatrix",
    "transition_matrix",
    "is_irreducible",
    "is_primitive",
    "period",
    "wielandt_primitive",
    "PFData",
    "pf_eigenvalue",
    "pf_lengths",
    "path_length",
    "Legality",
    "legality",
    "is_train_track",
    "is_legal_turn",
    "is_legal_path",
    "WhiteheadGraph",
    "whitehead_graphs",
    "has_cut_vertex",
    "CleanStatus",
    "CleanReport",
    "is_clean",
    "RelativeWhiteheadGraph",
    "relative_whitehead_graphs",
    "InducedMap",
    "induced_map_on_image",
    "CancellationBounds",
    "cancellation_bounds",
    "observed_cancellation",
    "LeafSegment",
    "leaf_seed",
    "leaf_segment",
    "is_subpath",
    "matrix_power",
]
