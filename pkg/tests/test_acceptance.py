"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""

import json
import random
from pathlib import Path

import pytest
from conftest import (
    REDUCIBLE,
    BS13,
    RESTRICTED,
    THUE_MORSE,
    corpus,
    nielsen_automorphism,
    random_endomorphism,
    record,
)
from oracles import (
    cancellation_sample,
    express,
    persistence_trial,
    random_cover,
    substitute,
)

from freeendo.certify import (
    CleanImmersionRep,
    SearchBounds,
    certify_fully_irreducible,
    certify_hyperbolic,
    find_immersion_rep,
    periodic_class_search,
)
from freeendo.graphs import (
    is_immersion,
    path_to_word,
    rose,
    rose_map,
    tighten,
    word_to_path,
)
from freeendo.markings import image_marked_graph, marked_equal
from freeendo.report import parse_endo, run
from freeendo.spine2 import (
    Shape,
    barbell_simplex,
    elementary_twists,
    orbit,
    periodic_set,
    rose_simplex,
    simplex_equal,
    spine_act,
    theta_simplex,
    twisted,
)
from freeendo.stallings import (
    action_permutations,
    covering_index,
    covering_subgroup,
    is_injective,
    iterate_image,
    labeled_isomorphism,
    membership,
    preimage_subgroup,
    pullback,
    stabilized_preimage,
    subgroup_graph,
    tree_words,
)
from freeendo.traintrack import (
    cancellation_bounds,
    is_irreducible,
    is_primitive,
    is_train_track,
    pf_eigenvalue,
    transition_matrix,
    whitehead_graphs,
)
from freeendo.words import Word

DATA = Path(__file__).parent / "data"


def spec(name):
    return parse_endo((DATA / f"{name}.endo").read_text())


# ------------------------------------------------------------------ 1


def test_criterion_1_thue_morse_pipeline():
    r = json.loads(run("certify", spec("thue_morse")).to_json())
    ev, verdicts = r["evidence"], r["verdicts"]
    lam = ev["lambda"]
    (wh,) = ev["whitehead"]
    checks = {
        "is_immersion": ev["is_immersion"] is True,
        "matrix": ev["matrix"] == [[1, 1], [1, 1]],
        "lambda": abs(lam["value"] - 2) <= 1e-9 and lam["lower"] <= 2 <= lam["upper"],
        "whitehead": wh["connected"] and wh["cut_vertices"] == [],
        "verdicts": verdicts == {"fully_irreducible": "Certified", "hyperbolic": "Hyperbolic"},
    }
    # the certified bracket comes from the library, not the report
    pf = pf_eigenvalue(transition_matrix(rose_map(THUE_MORSE)))
    checks["bracket"] = pf.lower <= 2 <= pf.upper and pf.upper - pf.lower <= 1e-9
    ok = all(checks.values())
    record(1, ok, "λ=%.12g, failed: %s" % (lam["value"], [k for k, v in checks.items() if not v]))
    assert ok


# ------------------------------------------------------------------ 2


def test_criterion_2_periodic_witness():
    w = periodic_class_search(BS13, max_n=2, max_len=4)
    cert = certify_hyperbolic(BS13, SearchBounds(max_n=2, max_len=4))
    ab = BS13.basis.parse("ab")
    ok = w is not None and (w.word, w.d, w.n) == (ab, 3, 1) and cert.verdict == "NotHyperbolic"
    ok = ok and BS13(ab) == ab**3
    record(2, ok, f"witness={(BS13.basis.format(w.word), w.d, w.n) if w else None}, verdict={cert.verdict}")
    assert ok


# ------------------------------------------------------------------ 3


def test_criterion_3_reducible():
    b = REDUCIBLE.basis
    r = run("images", spec("reducible"), k=3)
    marked = [image_marked_graph(REDUCIBLE, i) for i in (1, 2, 3)]
    same_marked = all(marked_equal(marked[0], m) for m in marked[1:])
    rep = find_immersion_rep(REDUCIBLE)
    rep_ok = (
        isinstance(rep, CleanImmersionRep)
        and (rep.map.domain.num_vertices, rep.map.domain.num_edges) == (6, 8)
        and is_immersion(rep.map)[0]
    )
    a = subgroup_graph(rose(3), [b.parse("aba"), b.parse("c")])
    members = all(membership(a, w) for w in REDUCIBLE.images)
    red = certify_fully_irreducible(REDUCIBLE, [b.parse("aba"), b.parse("c")])
    red_ok = red.verdict == "Reducible" and red.evidence.image_contained and members
    restricted = certify_fully_irreducible(RESTRICTED)
    (wh,) = whitehead_graphs(rose_map(RESTRICTED))
    path_graph = sorted(wh.edges) == [(0, 3), (1, 2), (2, 3)] and wh.is_connected() and wh.cut_vertices() == (2, 3)
    res_ok = restricted.verdict == "Inconclusive" and path_graph
    attainable = r.verdicts["same_marked_graph"] and same_marked and rep_ok and red_ok and res_ok
    record(
        3,
        attainable,
        "marked graphs S1=S2=S3: %s; clean immersion 6/8: %s; Reducible with membership: %s; "
        "restricted Inconclusive with cut vertices: %s" % (same_marked, rep_ok, red_ok, res_ok),
    )
    assert attainable


@pytest.mark.xfail(strict=True, reason="S1, S2, S3 have 8, 26 and 88 edge pairs, so no labeled isomorphism exists")
def test_criterion_3_literal_labeled_isomorphism():
    seq = iterate_image(rose_map(REDUCIBLE), 3)
    sizes = [(g.num_vertices, g.num_edges) for g in seq.graphs]
    iso = all(labeled_isomorphism(seq.graphs[0], g, pointed=False) is not None for g in seq.graphs[1:])
    record(3, iso, f"literal unpointed labeled isomorphism of S1, S2, S3 does not hold: sizes {sizes}")
    assert iso


# ------------------------------------------------------------------ 4


def test_criterion_4_spine_orbit():
    tw = elementary_twists()
    th, bb = theta_simplex(), barbell_simplex()
    to_theta = simplex_equal(spine_act(rose_simplex(tw["a"]), THUE_MORSE), th)
    to_barbell = simplex_equal(spine_act(rose_simplex(tw["A"]), THUE_MORSE), bb)
    rec = orbit(bb, THUE_MORSE)
    period2 = rec.period == 2 and rec.preperiod == 0
    ps = periodic_set(THUE_MORSE, radius=3)
    expected = [rose_simplex(), th, bb, twisted(th, tw["A"])]
    exact = len(ps) == 4 and all(any(simplex_equal(s, t) for t in ps) for s in expected)
    ok = to_theta and to_barbell and period2 and exact
    record(
        4,
        ok,
        f"rose·(a, ab)→theta {to_theta}, rose·(a, Ab)→barbell {to_barbell}, barbell period {rec.period}, "
        f"periodic set {sorted(s.shape.value for s in ps)}",
    )
    assert ok
    assert sum(s.shape is Shape.THETA for s in ps) == 2


# ------------------------------------------------------------------ 5


def _square_by_membership(e, chain, k, j, st):
    """Recheck the coset bijection with explicit words and membership queries."""
    for i in range(k, j):
        upper, lower = chain[i + 1], chain[i]
        reps_u = [_word(p) for p in tree_words(upper)]
        reps_l = [_word(p) for p in tree_words(lower)]
        for v, t in enumerate(reps_u):
            img = e(t)
            target = lower.read(word_to_path(img))
            if not membership(lower, img * ~reps_l[target]):
                return False
            for x in range(e.rank):
                g = Word((x + 1,))
                w = upper.read(word_to_path(t * g))
                # H_(i+1) t g = H_(i+1) t_w, so e(t g) and e(t_w) agree modulo H_i
                if not membership(lower, e(t * g) * ~e(reps_u[w])):
                    return False
    return sorted(st.permutation) == list(range(st.subgroup.num_vertices))


def _word(p):
    return path_to_word(p)


def test_criterion_5_stabilized_preimage():
    kernel = covering_subgroup([[0, 1], [1, 0]])
    st = stabilized_preimage(THUE_MORSE, kernel)
    thue_morse_ok = (st.k, st.j) == (2, 3) and covering_index(st.subgroup) == 1
    rng = random.Random(5)
    good = 0
    for trial in range(50):
        rank = 2
        e = (
            nielsen_automorphism(rank, rng.randint(0, 5), rng)
            if trial % 2
            else random_endomorphism(rank, rng, max_len=3)
        )
        h = random_cover(rng, rng.randint(1, 4), rank)
        chain = [h]
        st = stabilized_preimage(e, h)
        for _ in range(st.j):
            chain.append(preimage_subgroup(e, chain[-1]))
        acts_ok = len(action_permutations(st.subgroup)) == rank
        if acts_ok and _square_by_membership(e, chain, st.k, st.j, st):
            good += 1
    ok = thue_morse_ok and good == 50
    record(5, ok, f"Thue-Morse (k, j)=(2, 3), K=F: {thue_morse_ok}; random pairs verified {good}/50")
    assert ok


# ------------------------------------------------------------------ 6


def _brute_force_agrees(h1, h2, comp, rank, depth):
    """Walk every reduced word to ``depth`` and compare pullback membership with both factors."""
    base = (h1.base, h2.base, comp.base if comp is not None else None)
    stack = [(base, None, 0)]
    while stack:
        (u, v, w), last, n = stack.pop()
        in1 = u == h1.base
        in2 = v == h2.base
        in3 = w is not None and w == comp.base
        if (in1 and in2) != in3 and n > 0:
            return False
        if n == depth:
            continue
        for x in list(range(1, rank + 1)) + [-i for i in range(1, rank + 1)]:
            if last is not None and x == -last:
                continue
            step = word_to_path(Word((x,)))
            u2 = h1.read(step, start=u)
            v2 = h2.read(step, start=v)
            w2 = comp.read(step, start=w) if w is not None else None
            if u2 is None or v2 is None:
                # a prefix leaving either factor leaves the intersection for good
                if w2 is not None:
                    return False
                continue
            stack.append(((u2, v2, w2), x, n + 1))
    return True


def test_criterion_6_pullback_oracle():
    rng = random.Random(6)
    agree = 0
    certified = 0
    for _ in range(100):
        rank = rng.choice([2, 3])
        gens = []
        for _ in range(2):
            gs = []
            while not gs:
                gs = [
                    Word(tuple(rng.choice([1, -1]) * rng.randint(1, rank) for _ in range(rng.randint(1, 4))))
                    for _ in range(rng.randint(1, 3))
                ]
                gs = [g for g in gs if g]
            gens.append(gs)
        h1, h2 = subgroup_graph(rose(rank), gens[0]), subgroup_graph(rose(rank), gens[1])
        pb = pullback(h1, h2)
        comp = pb.components[pb.pointed].graph if pb.pointed is not None else None
        if _brute_force_agrees(h1, h2, comp, rank, 6):
            agree += 1
        # members of the intersection are certified by explicit products in both generating sets
        if comp is not None:
            ok_cert = True
            for w in _some_members(comp, rank, rng):
                e1, e2 = express(gens[0], w, rank), express(gens[1], w, rank)
                ok_cert &= e1 is not None and e2 is not None
                ok_cert &= substitute(e1, gens[0]) == w and substitute(e2, gens[1]) == w
            certified += ok_cert
        else:
            certified += 1
    ok = agree == 100 and certified == 100
    record(6, ok, f"pullback membership agrees with brute force on {agree}/100 pairs to length 6")
    assert ok


def _some_members(sg, rank, rng, count=3):
    """Closed walks at the base point, read as words."""
    out = []
    for _ in range(count):
        v, p = sg.base, []
        for _ in range(rng.randint(1, 8)):
            dirs = sorted(sg.graph.directions(v))
            if p:
                dirs = [d for d in dirs if d != p[-1] ^ 1] or dirs
            d = rng.choice(dirs)
            p.append(d)
            v = sg.graph.terminus(d)
        # close up along the spanning tree
        back = tree_words(sg)[v]
        w = _word(tuple(sg.edge_label(d) for d in p)) * ~_word(back)
        out.append(w)
    return out


# ------------------------------------------------------------------ 7


def _train_track_corpus():
    maps = []
    for _, e in corpus():
        m = tighten(rose_map(e), allow_degenerate=True)
        if is_train_track(m)[0]:
            maps.append(m)
        if is_injective(e):
            rep = find_immersion_rep(e)
            if isinstance(rep, CleanImmersionRep) or getattr(rep, "train_track", False):
                maps.append(rep.map)
    return maps


def test_criterion_7_weakly_clean_is_clean():
    maps = _train_track_corpus()
    weakly = counter = 0
    for m in maps:
        a = transition_matrix(m)
        if is_irreducible(a) and all(w.is_connected() for w in whitehead_graphs(m)):
            weakly += 1
            counter += not is_primitive(a)
    ok = counter == 0 and weakly > 0
    record(7, ok, f"{len(maps)} train track maps, {weakly} weakly clean, {counter} imprimitive")
    assert ok


# ------------------------------------------------------------------ 8


def test_criterion_8_bounded_cancellation():
    rng = random.Random(8)
    maps = [e for _, e in corpus() if is_injective(e)]
    violations = []
    for e in maps:
        worst, c = cancellation_sample(e, 1000, rng)
        if worst > c + 1e-9:
            violations.append((e, worst, c))
    trials = 0
    for e in (THUE_MORSE, REDUCIBLE):
        m = rose_map(e)
        pf = pf_eigenvalue(transition_matrix(m))
        crit = cancellation_bounds(m, pf.lam).critical
        done = 0
        while done < 100:
            if persistence_trial(m, pf.lam, pf.left_eigenvector, crit, rng, depth=5):
                done += 1
        trials += done
    ok = not violations and trials == 200
    record(
        8,
        ok,
        f"{len(maps)} maps x 1000 path pairs, {len(violations)} violations; "
        f"{trials} persistence decompositions to k=5",
    )
    assert ok


# ------------------------------------------------------------------ 9


def test_criterion_9_growth():
    seq = iterate_image(rose_map(THUE_MORSE), 5)
    counts = seq.edge_counts
    # by hand: S1 is the graph of <ab, ba> with 3 vertices and 4 edges, S2 two 4-cycles at the base
    hand = counts[:2] == (4, 8) and seq.graphs[0].num_vertices == 3 and seq.graphs[1].num_vertices == 7
    ranks = all(g.num_edges - g.num_vertices + 1 == 2 for g in seq.graphs)
    increasing = all(x < y for x, y in zip(counts, counts[1:]))
    ok = hand and ranks and increasing and counts == (4, 8, 16, 32, 64)
    record(9, ok, f"edge pairs {counts}, rank 2 at every step: {ranks}")
    assert ok


# ------------------------------------------------------------------ 10


def test_criterion_10_mutual_exclusion():
    both = 0
    hyperbolic = not_hyperbolic = 0
    for _, e in corpus():
        if not is_injective(e):
            continue
        cert = certify_hyperbolic(e, SearchBounds(max_n=2, max_len=4))
        clean = isinstance(find_immersion_rep(e), CleanImmersionRep)
        witness = periodic_class_search(e, 2, 4)
        both += clean and witness is not None
        hyperbolic += cert.verdict == "Hyperbolic"
        not_hyperbolic += cert.verdict == "NotHyperbolic"
    ok = both == 0
    record(10, ok, f"{hyperbolic} Hyperbolic, {not_hyperbolic} NotHyperbolic, {both} with both kinds of evidence")
    assert ok

