import random
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from conftest import REDUCIBLE, BS13, RESTRICTED, THUE_MORSE, corpus, random_endomorphism
from hypothesis import given
from hypothesis import strategies as st
from oracles import (
    cancellation_sample,
    persistence_trial,
    random_path,
)

from freeendo.errors import NonInjective, PreconditionError
from freeendo.graphs import (
    compose,
    identity_map,
    is_immersion,
    iterate,
    path_to_word,
    path_turns,
    reduce_path,
    rose,
    rose_map,
    tighten,
)
from freeendo.stallings import fold_to_immersion, is_injective
from freeendo.traintrack import (
    CleanStatus,
    WhiteheadGraph,
    cancellation_bounds,
    has_cut_vertex,
    induced_map_on_image,
    is_clean,
    is_irreducible,
    is_legal_path,
    is_legal_turn,
    is_primitive,
    is_subpath,
    is_train_track,
    leaf_segment,
    matrix_power,
    period,
    pf_eigenvalue,
    relative_whitehead_graphs,
    transition_matrix,
    whitehead_graphs,
    wielandt_primitive,
)
from freeendo.words import Endomorphism

A, AB, B, BB = 0, 1, 2, 3  # directions a, a-bar, b, b-bar on the rose


def train_tracks():
    for name, e in corpus():
        m = tighten(rose_map(e), allow_degenerate=True)
        if is_train_track(m)[0]:
            yield name, m


# ------------------------------------------------------------------ matrices


def test_transition_matrix_examples():
    assert transition_matrix(rose_map(THUE_MORSE)).tolist() == [[1, 1], [1, 1]]
    assert transition_matrix(identity_map(rose(3))).tolist() == np.identity(3, dtype=int).tolist()
    assert transition_matrix(rose_map(REDUCIBLE)).tolist() == [[2, 0, 2], [1, 0, 1], [0, 2, 2]]


def test_transition_matrix_column_sums():
    for _, e in corpus():
        m = rose_map(e)
        a = transition_matrix(m).array()
        assert list(a.sum(axis=0)) == [len(p) for p in m.edge_images]


def test_irreducible_and_primitive_examples():
    assert is_irreducible([[1, 1], [1, 1]])
    assert not is_irreducible([[1, 0], [0, 1]])
    assert is_irreducible([[0, 1], [1, 0]])
    assert not is_primitive([[0, 1], [1, 0]]) and period([[0, 1], [1, 0]]) == 2
    assert is_primitive([[1, 1], [1, 1]])
    c = transition_matrix(rose_map(REDUCIBLE))
    assert is_primitive(c)
    assert all(x > 0 for r in matrix_power(c, 3) for x in r)


def _digraph(rows):
    g = nx.DiGraph()
    g.add_nodes_from(range(len(rows)))
    g.add_edges_from((i, j) for i, r in enumerate(rows) for j, x in enumerate(r) if x)
    return g


@given(st.lists(st.lists(st.integers(0, 2), min_size=4, max_size=4), min_size=4, max_size=4), st.integers(1, 4))
def test_matrix_predicates_against_networkx(rows, n):
    rows = [r[:n] for r in rows[:n]]
    g = _digraph(rows)
    irr = nx.is_strongly_connected(g) and (n > 1 or rows[0][0] > 0)
    assert is_irreducible(rows) == irr
    if irr:
        assert is_primitive(rows) == nx.is_aperiodic(g) == wielandt_primitive(rows)


# ------------------------------------------------------------------ Perron-Frobenius


def test_pf_examples():
    pf = pf_eigenvalue([[1, 1], [1, 1]])
    assert pf.lower == pf.upper == 2
    assert pf_eigenvalue([[0, 1], [1, 0]]).lam == pytest.approx(1)
    c = pf_eigenvalue(transition_matrix(rose_map(REDUCIBLE)), tol=1e-6)
    assert abs(c.lam - (2 + 2**0.5)) < 1e-6
    assert c.lower <= Fraction(2 + 2**0.5) + Fraction(1, 10**9) and c.upper >= Fraction(2 + 2**0.5) - Fraction(1, 10**9)
    with pytest.raises(PreconditionError):
        pf_eigenvalue([[1, 0], [0, 1]])


def test_pf_sandwich_and_eigenvector():
    for _, e in corpus():
        a = transition_matrix(rose_map(e))
        if not is_irreducible(a):
            continue
        pf = pf_eigenvalue(a)
        ref = max(abs(np.linalg.eigvals(a.array().astype(float))))
        assert float(pf.lower) - 1e-9 <= ref <= float(pf.upper) + 1e-9
        lows = [h[0] for h in pf.history]
        highs = [h[1] for h in pf.history]
        assert lows == sorted(lows) and highs == sorted(highs, reverse=True)
        left = np.array(pf.left_eigenvector)
        assert min(left) == pytest.approx(1) and np.all(left > 0)
        assert np.allclose(left @ a.array(), pf.lam * left, rtol=1e-6)


# ------------------------------------------------------------------ legality and Whitehead graphs


def test_train_track_examples():
    assert is_train_track(rose_map(THUE_MORSE)) == (True, None)
    ok, witness = is_train_track(rose_map(Endomorphism.from_strings(["ab", "A"])))
    assert not ok
    assert witness[0] == (AB, B) and witness[-1][0] == witness[-1][1]
    assert is_train_track(identity_map(rose(2)))[0]


def test_illegal_witness_oracle():
    # the degenerate turn shows up as cancellation in an iterate
    m = rose_map(Endomorphism.from_strings(["ab", "A"]))
    naive = m
    cancelled = False
    for _ in range(3):
        naive = compose(naive, m)
        lit = [sum(len(m.edge_images[x // 2]) for x in p) for p in naive.edge_images]
        if any(len(reduce_path(p)) < len(p) for p in naive.edge_images) or lit != [len(p) for p in naive.edge_images]:
            cancelled = True
    assert cancelled


def test_whitehead_examples():
    (w,) = whitehead_graphs(rose_map(THUE_MORSE))
    assert w.nodes == (A, AB, B, BB)
    assert w.edges == {(AB, B), (A, BB), (B, BB), (A, AB)}
    assert w.is_connected() and not has_cut_vertex(w)
    (idw,) = whitehead_graphs(identity_map(rose(2)))
    assert idw.edges == frozenset()
    (r,) = whitehead_graphs(rose_map(RESTRICTED))
    # path x-bar, c, c-bar, x
    assert r.edges == {(1, 2), (2, 3), (0, 3)}
    assert r.is_connected() and r.cut_vertices() == (2, 3)


def test_has_cut_vertex_examples():
    cycle = WhiteheadGraph(0, (0, 1, 2, 3), frozenset({(0, 1), (1, 2), (2, 3), (0, 3)}))
    path = WhiteheadGraph(0, (0, 1, 2, 3), frozenset({(0, 1), (1, 2), (2, 3)}))
    single = WhiteheadGraph(0, (0,), frozenset())
    assert not has_cut_vertex(cycle)
    assert has_cut_vertex(path) and path.cut_vertices() == (1, 2)
    assert not has_cut_vertex(single)


def test_whitehead_edges_are_legal():
    for _, m in train_tracks():
        for w in whitehead_graphs(m):
            assert all(is_legal_turn(m, t) for t in w.edges)


def test_clean_examples():
    assert is_clean(rose_map(THUE_MORSE)).status is CleanStatus.CLEAN
    assert is_clean(rose_map(REDUCIBLE)).status is CleanStatus.CLEAN
    assert is_clean(rose_map(Endomorphism.from_strings(["a", "ba"]))).status is CleanStatus.NOT_IRREDUCIBLE
    bs13 = is_clean(rose_map(BS13))
    assert bs13.status is CleanStatus.NOT_WEAKLY_CLEAN and bs13.disconnected == (0,)


def test_weakly_clean_is_clean_over_corpus():
    seen = 0
    for _, m in train_tracks():
        a = transition_matrix(m)
        if is_irreducible(a) and all(w.is_connected() for w in whitehead_graphs(m)):
            seen += 1
            assert is_primitive(a)
            assert is_clean(m).status is CleanStatus.CLEAN
    assert seen >= 10


# ------------------------------------------------------------------ relative Whitehead graphs


def test_relative_whitehead_identity():
    # the two constructions agree once the transition matrix is primitive
    for _, m in train_tracks():
        if not is_primitive(transition_matrix(m)):
            continue
        for i in (1, 2):
            fi = tighten(iterate(m, i))
            rel = relative_whitehead_graphs(identity_map(m.domain), fi, m)
            plain = whitehead_graphs(fi)
            assert [r.graph.edges for r in rel] == [w.edges for w in plain]
            assert all(r.legal for r in rel)


def test_relative_whitehead_reducible_fold():
    f = rose_map(REDUCIBLE)
    res = fold_to_immersion(f)
    rel = relative_whitehead_graphs(res.fold_map, res.immersion, f)
    assert all(r.graph.is_connected() and r.legal for r in rel)
    x = res.graph
    for r in rel:
        if x.valence(r.graph.vertex) == 2:
            assert len(r.graph.nodes) == 2 and len(r.graph.edges) == 1


# ------------------------------------------------------------------ induced maps


def test_induced_map_examples():
    s = induced_map_on_image(rose_map(THUE_MORSE), 1)
    assert s.graph.num_vertices == 3
    assert is_clean(s.map).clean
    c = induced_map_on_image(rose_map(REDUCIBLE), 1)
    assert is_immersion(c.map)[0] and is_clean(c.map).clean
    aut = induced_map_on_image(rose_map(Endomorphism.from_strings(["ab", "b"])), 1)
    assert aut.graph.num_vertices == 1 and aut.graph.num_edges == 2


# ------------------------------------------------------------------ matrix of a square


def test_square_matrix_bound():
    for _, e in corpus():
        m = rose_map(e)
        a = transition_matrix(m).array()
        sq = transition_matrix(tighten(compose(m, m), allow_degenerate=True)).array()
        assert np.all(sq <= a @ a)
        if is_immersion(m)[0]:
            assert np.array_equal(sq, a @ a)


# ------------------------------------------------------------------ cancellation


def test_cancellation_examples():
    assert cancellation_bounds(rose_map(THUE_MORSE), 2.0).C == 0
    assert cancellation_bounds(rose_map(THUE_MORSE), 2.0).critical == 0
    f = rose_map(REDUCIBLE)
    pf = pf_eigenvalue(transition_matrix(f))
    cb = cancellation_bounds(f, pf.lam)
    res = fold_to_immersion(f)
    assert cb.C > 0 and cb.C == pytest.approx(sum(pf.left_eigenvector[r.label // 2] for r in res.folds))
    assert cb.critical == pytest.approx(2 * cb.C / (pf.lam - 1))
    with pytest.raises(PreconditionError):
        cancellation_bounds(f, 1.0)


def test_cancellation_bound_holds_on_samples():
    rng = random.Random(7)
    # cancellation is unbounded for non-injective maps, which fold with a type II fold
    for _, e in corpus():
        if not is_injective(e):
            with pytest.raises(NonInjective):
                cancellation_bounds(rose_map(e))
            continue
        worst, c = cancellation_sample(e, 100, rng)
        assert worst <= c + 1e-9


def test_legality_persistence_thue_morse():
    m = rose_map(THUE_MORSE)
    pf = pf_eigenvalue(transition_matrix(m))
    cb = cancellation_bounds(m, pf.lam)
    rng = random.Random(3)
    assert sum(persistence_trial(m, pf.lam, pf.left_eigenvector, cb.critical, rng) for _ in range(30)) >= 25


# ------------------------------------------------------------------ leaves


def test_leaf_examples():
    m = rose_map(THUE_MORSE)
    words = [path_to_word(leaf_segment(m, k).path) for k in (1, 2, 3)]
    assert [THUE_MORSE.basis.format(w).replace(" ", "") for w in words] == ["ab", "abba", "abbabaab"]
    assert leaf_segment(m, 0).path == (0,)
    c = leaf_segment(rose_map(REDUCIBLE), 1, seed=4)
    assert REDUCIBLE.basis.format(path_to_word(c.path)).replace(" ", "") == "cabac"
    assert is_subpath((4,), c.path)
    with pytest.raises(PreconditionError):
        leaf_segment(rose_map(Endomorphism.from_strings(["b", "A"])), 1)
    with pytest.raises(PreconditionError):
        leaf_segment(identity_map(rose(2)), 1)


def test_leaf_nesting():
    for _, m in train_tracks():
        a = transition_matrix(m)
        if not is_irreducible(a) or pf_eigenvalue(a).lam <= 1 + 1e-9:
            continue
        segs = [leaf_segment(m, k).path for k in range(4)]
        for s, t in zip(segs, segs[1:]):
            assert is_subpath(s, t)
            assert is_immersion_path(t)


def is_immersion_path(p):
    return reduce_path(p) == tuple(p)


@given(st.integers(0, 2**32 - 1))
def test_legal_paths_stay_tight(seed):
    rng = random.Random(seed)
    e = random_endomorphism(2, rng, positive=True)
    m = rose_map(e)
    p = random_path(rng, 2, rng.randint(1, 6))
    if is_legal_path(m, p):
        img = m.path_image(p)
        assert reduce_path(img) == img
        assert all(t[0] != t[1] for t in path_turns(img))
