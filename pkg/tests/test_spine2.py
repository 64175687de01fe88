import functools
import itertools
import random

import pytest
from conftest import REDUCIBLE, BS13, THUE_MORSE, automorphisms
from hypothesis import example, given, settings
from hypothesis import strategies as st

from freeendo.errors import CapExceededError, NonInjective, PreconditionError
from freeendo.graphs import Graph, is_immersion
from freeendo.markings import MarkedGraph
from freeendo.spine2 import (
    Shape,
    SpineSimplex,
    barbell_simplex,
    classify,
    elementary_twists,
    neighbours,
    orbit,
    periodic_set,
    rose_ball,
    rose_simplex,
    simplex_equal,
    spine_act,
    spine_act_step,
    theta_simplex,
    twisted,
)
from freeendo.stallings import invert_automorphism
from freeendo.words import Endomorphism

TW = elementary_twists()
R, TH, BB = rose_simplex(), theta_simplex(), barbell_simplex()


@functools.cache
def thue_morse_periodic():
    return tuple(periodic_set(THUE_MORSE, radius=3))


def contains(simplices, s):
    return any(simplex_equal(s, t) for t in simplices)


def test_classify():
    assert classify(R.graph) is Shape.ROSE
    assert classify(TH.graph) is Shape.THETA
    assert classify(BB.graph) is Shape.BARBELL
    with pytest.raises(PreconditionError):
        classify(Graph.from_edges(1, [(0, 0)]))


def test_subdivided_markings_are_smoothed():
    g = Graph.from_edges(2, [(0, 1), (1, 0), (0, 0)])
    s = SpineSimplex(MarkedGraph(g, 0, ((0, 2), (4,))))
    assert s.shape is Shape.ROSE and simplex_equal(s, R)


def test_describe():
    assert TH.describe() == "Theta[A, B]"
    assert R.describe() == "Rose[a, b]"


def test_theta_faces():
    faces = TH.faces()
    assert len(faces) == 3
    for expected in (R, rose_simplex(TW["a"]), rose_simplex(TW["b"])):
        assert contains(faces, expected)
    (bar,) = BB.faces()
    assert simplex_equal(bar, R)


def test_action_examples():
    assert simplex_equal(spine_act(rose_simplex(TW["a"]), THUE_MORSE), TH)
    assert simplex_equal(spine_act(rose_simplex(TW["b"]), THUE_MORSE), TH)
    assert simplex_equal(spine_act(rose_simplex(TW["A"]), THUE_MORSE), BB)
    assert simplex_equal(spine_act(rose_simplex(TW["B"]), THUE_MORSE), BB)


def test_fixed_simplices_carry_immersions():
    r = spine_act_step(R, THUE_MORSE)
    assert r.fixed and r.folds == 0 and is_immersion(r.immersion_rep)[0]
    t = spine_act_step(TH, THUE_MORSE)
    assert t.fixed and t.folds == 1 and is_immersion(t.immersion_rep)[0]
    b = spine_act_step(BB, THUE_MORSE)
    assert not b.fixed and b.immersion_rep is None


def test_barbell_orbit():
    rec = orbit(BB, THUE_MORSE)
    assert (rec.preperiod, rec.period) == (0, 2)
    assert [s.shape for s in rec.sequence] == [Shape.BARBELL, Shape.THETA, Shape.BARBELL]
    assert simplex_equal(rec.sequence[1], twisted(TH, TW["A"]))


def test_periodic_set_thue_morse():
    ps = periodic_set(THUE_MORSE, radius=3)
    assert len(ps) == 4
    for s in (R, TH, BB, twisted(TH, TW["A"])):
        assert contains(ps, s)


def test_periodic_set_bs13():
    ps = periodic_set(BS13, radius=2)
    assert len(ps) == 4
    assert all(spine_act_step(s, BS13).fixed for s in ps)


def test_rose_ball_sizes():
    assert len(rose_ball(0)) == 1
    assert len(rose_ball(2)) == 13
    assert len(rose_ball(3)) == 29
    ball = rose_ball(2)
    assert all(not simplex_equal(s, t) for s, t in itertools.combinations(ball, 2))


def test_orbits_land_in_periodic_set():
    ps = thue_morse_periodic()
    roses = rose_ball(2)
    for s in roses + neighbours(roses):
        rec = orbit(s, THUE_MORSE)
        assert rec.preperiod <= 1
        assert all(contains(ps, t) for t in rec.cycle)


def test_automorphisms_have_infinite_orbits():
    with pytest.raises(CapExceededError):
        periodic_set(TW["a"], radius=1)


def test_automorphism_action_is_bijective():
    inv = invert_automorphism(TW["a"])
    for s in rose_ball(2) + [TH, BB]:
        assert simplex_equal(spine_act(spine_act(s, TW["a"]), inv), s)


def test_finite_order_automorphism_is_periodic():
    swap = Endomorphism.from_strings(["b", "a"])
    for s in rose_ball(2):
        rec = orbit(s, swap)
        assert rec.preperiod == 0 and rec.period in (1, 2)


def test_rank_and_injectivity_gates():
    with pytest.raises(PreconditionError):
        spine_act(R, REDUCIBLE)
    with pytest.raises(NonInjective):
        spine_act(R, Endomorphism.from_strings(["ab", "ab"]))


@settings(max_examples=30)
@given(automorphisms(rank=2, max_moves=4))
def test_action_by_automorphism_is_twisting(alpha):
    # for an automorphism the action is a pure change of marking
    for s in (R, TH, BB):
        assert simplex_equal(spine_act(s, alpha), twisted(s, alpha))


@settings(max_examples=30)
@given(automorphisms(rank=2, max_moves=4), automorphisms(rank=2, max_moves=4))
def test_simplex_equal_is_an_equivalence(a, b):
    s, t = rose_simplex(a), rose_simplex(b)
    assert simplex_equal(s, s)
    assert simplex_equal(s, t) == simplex_equal(t, s)
    u = rose_simplex(a.compose(Endomorphism.from_strings(["B", "A"])))
    if simplex_equal(s, t) and simplex_equal(t, u):
        assert simplex_equal(s, u)
    # inner automorphisms give the same simplex
    conj = Endomorphism(a.basis, tuple(THUE_MORSE.basis.parse("ab") * w * THUE_MORSE.basis.parse("BA") for w in a.images))
    assert simplex_equal(rose_simplex(conj), s)


@settings(max_examples=30)
@given(automorphisms(rank=2, max_moves=5))
# the fold leaves a hanging tree, so the core sits inside a larger graph
@example(Endomorphism.from_strings(["bbaBB", "B"]))
def test_orbits_of_twisted_roses_converge(alpha):
    ps = thue_morse_periodic()
    rec = orbit(rose_simplex(alpha), THUE_MORSE, max_steps=16)
    assert all(contains(ps, t) for t in rec.cycle)


@given(st.integers(0, 2**32 - 1))
def test_conjugate_action_commutes_with_twisting(seed):
    # twisting by alpha intertwines the actions of e and its conjugate
    rng = random.Random(seed)
    alpha = TW[rng.choice("aAbB")].compose(TW[rng.choice("aAbB")])
    inv = invert_automorphism(alpha)
    conj = inv.compose(THUE_MORSE).compose(alpha)
    for s in (R, TH, BB):
        lhs = spine_act(twisted(s, alpha), conj)
        rhs = twisted(spine_act(s, THUE_MORSE), alpha)
        assert simplex_equal(lhs, rhs)
