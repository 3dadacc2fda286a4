import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

import oracles
from hypertest.errors import GuardError, InputError, PreconditionError
from hypertest.harness import PlantedFixtureSpec, plant_fixture
from hypertest.hypergraph import (VertexPartition, all_isotypes, cliques, complete_hypergraph,
                                  complete_partite, empty_hypergraph, make_hypergraph, pr_density,
                                  random_kgraph, sym_diff_size, t_inj)
from hypertest.regularity import DensityFunction, RegularityInstance
from hypertest.testers import (DecisionSet, PropertySpec, TesterConfig, amplification_error_bound,
                               amplify, bernoulli_base, c_lk, canonical_tester, cut_size, cut_value,
                               distance_to_property_exact, estimate_distance, has_edges_property,
                               hom_density_property, instance_distance_exact,
                               maxcut_exact, maxcut_of_density, maxcut_property, maxcut_reaches,
                               repair_hom_density, repair_maxcut, test_hom_density, test_maxcut,
                               test_regularity_instance)

K3 = complete_hypergraph(3, 2)


def cycle(n):
    return make_hypergraph(n, 2, [(i, (i + 1) % n) for i in range(n)])


def bipartite(n):
    half = n // 2
    return complete_partite(VertexPartition(n, (tuple(range(half)), tuple(range(half, n)))), 2)


@st.composite
def small_graphs(draw, ks=(2, 3), min_n=2, max_n=7):
    k = draw(st.sampled_from(ks))
    n = draw(st.integers(max(k, min_n), max_n))
    sets = list(itertools.combinations(range(n), k))
    return make_hypergraph(n, k, draw(st.lists(st.sampled_from(sets), unique=True)))


# ---------------------------------------------------------------- canonical tester

def test_canonical_tester_examples():
    H = random_kgraph(9, 2, Fraction(1, 2), 0)
    everything, nothing = DecisionSet.everything(4, 2), DecisionSet(4, 2, frozenset())
    for seed in range(20):
        assert canonical_tester(H, 4, everything, seed).accept
        assert not canonical_tester(H, 4, nothing, seed).accept
    triangle_free = DecisionSet.from_predicate(3, 2, lambda F: not cliques(F, 3))
    assert not any(canonical_tester(complete_hypergraph(8, 2), 3, triangle_free, s).accept
                   for s in range(20))
    with pytest.raises(InputError):
        canonical_tester(H, 3, everything, 0)


def test_canonical_tester_frequency_matches_exact_density():
    H = random_kgraph(11, 2, Fraction(1, 2), 3)
    q, trials = 4, 4000
    types = all_isotypes(q, 2)
    chosen = [F for F in types if len(F) % 2 == 0]
    D = DecisionSet.from_predicate(q, 2, lambda F: len(F) % 2 == 0)
    p = float(pr_density(chosen, H))
    freq = sum(canonical_tester(H, q, D, s).accept for s in range(trials)) / trials
    assert abs(freq - p) <= 4 * math.sqrt(p * (1 - p) / trials)


# ---------------------------------------------------------------- amplification

def test_amplify_examples():
    amp = amplify(lambda seed: True, 1)
    assert (amp.runs, amp.threshold) == (7, 4)
    assert all(amp(s).accept for s in range(50))
    assert not any(amplify(lambda seed: False, 3)(s).accept for s in range(50))
    with pytest.raises(InputError):
        amplify(lambda seed: True, 0)


@pytest.mark.parametrize("r", [2, 5, 10])
def test_amplify_matches_error_curve(r):
    amp = amplify(bernoulli_base(Fraction(2, 3)), r)
    trials = 3000
    correct = sum(amp(s).accept for s in range(trials))
    target = 1 - amplification_error_bound(r)
    assert correct / trials >= target - 3 * math.sqrt(max(target * (1 - target), 1e-4) / trials)


def test_bernoulli_base_frequency():
    base = bernoulli_base(Fraction(2, 3))
    freq = sum(base(s) for s in range(20000)) / 20000
    assert abs(freq - 2 / 3) < 0.015


# ---------------------------------------------------------------- max cut

def test_maxcut_exact_examples():
    assert maxcut_exact(empty_hypergraph(5, 2), 2)[0] == 0
    value, witness = maxcut_exact(bipartite(4), 2)
    assert value == Fraction(4, 6)
    assert sorted(map(sorted, witness.parts)) == [[0, 1], [2, 3]]
    assert maxcut_exact(cycle(5), 2)[0] == Fraction(4, 10)
    with pytest.raises(GuardError):
        maxcut_exact(empty_hypergraph(30, 2), 2)


@given(small_graphs(max_n=7), st.sampled_from([2, 3]))
def test_maxcut_matches_labelling_oracle(H, ell):
    value, witness = maxcut_exact(H, ell)
    want, labels = oracles.maxcut(H, ell)
    assert value == want
    assert tuple(witness.part_of) == labels
    assert value <= c_lk(H.n, ell, H.k)


def test_c_lk_examples():
    assert c_lk(5, 2, 3) == 0
    assert c_lk(4, 2, 2) == Fraction(4, 6)
    assert c_lk(6, 3, 2) == Fraction(4, 5)
    assert maxcut_exact(complete_hypergraph(4, 2), 2)[0] == c_lk(4, 2, 2)


@pytest.mark.parametrize("k", [2, 3])
def test_c_lk_matches_partite_oracle(k):
    for n in range(1, 11):
        for ell in range(1, 5):
            assert c_lk(n, ell, k) == oracles.best_complete_partite(n, ell, k)


@given(st.integers(6, 16), st.integers(0, 2**32), st.fractions(1, 9, max_denominator=10))
def test_maxcut_decision_agrees_with_exact_value(n, seed, p):
    H = random_kgraph(n, 2, p / 10, seed)
    best = int(maxcut_exact(H, 2, limit=1 << 17)[0] * math.comb(n, 2))
    for need in (best - 1, best, best + 1):
        # a tiny enumeration limit forces the bound and branch and bound paths
        verdict, flags = maxcut_reaches(H, 2, need, limit=4)
        assert not flags and verdict == (need <= best)


def test_maxcut_decision_settles_planted_graphs():
    gamma, settled = Fraction(1, 20), 0
    for seed in range(4):
        H, _, d = plant_fixture(PlantedFixtureSpec(300, 2, (4,), grid=8, check=False), seed)
        m, N = maxcut_of_density(d, 2), math.comb(300, 2)
        low, f1 = maxcut_reaches(H, 2, math.floor((m - gamma) * N))
        high, f2 = maxcut_reaches(H, 2, math.ceil((m + gamma) * N) + 1)
        settled += low and not high and not f1 and not f2
    assert settled >= 4


def test_cut_value_examples():
    p = Fraction(2, 5)
    d = DensityFunction.constant(2, (2,), p)
    assert cut_value(d, (1, 2)) == p / 2
    assert cut_value(d, (1, 1)) == 0
    for ell in (2, 3, 5):
        assert cut_value(DensityFunction.constant(2, (ell,), 1), range(1, ell + 1)) == Fraction(ell - 1, ell)
    with pytest.raises(InputError):
        cut_value(d, (1,))
    assert maxcut_of_density(DensityFunction.constant(2, (4,), 1), 2) == Fraction(1, 2)


def test_cut_size_counts_crossing_edges():
    assert cut_size(cycle(6), [0, 1, 0, 1, 0, 1]) == 6
    assert cut_size(cycle(6), [0] * 6) == 0


# ---------------------------------------------------------------- testers

def test_maxcut_tester_with_full_sample_is_the_exact_predicate():
    for seed in range(12):
        H = random_kgraph(9, 2, Fraction(1, 2), seed)
        c, alpha = Fraction(1, 2), Fraction(1, 5)
        exact = maxcut_exact(H, 2)[0] >= c - alpha / 2
        assert test_maxcut(H, 2, c, alpha, TesterConfig(q=9), seed).accept == exact


def test_maxcut_tester_accepts_bipartite_and_rejects_random():
    n = 120
    c = c_lk(n, 2, 2)
    cfg = TesterConfig(q=30)
    acc = sum(test_maxcut(bipartite(n), 2, c, Fraction(1, 5), cfg, s).accept for s in range(40))
    G = random_kgraph(n, 2, Fraction(1, 2), 5)
    rej = sum(not test_maxcut(G, 2, c, Fraction(1, 5), cfg, s).accept for s in range(40))
    assert acc >= 27 and rej >= 27


def test_hom_tester_examples():
    cfg = TesterConfig(q=12)
    H = random_kgraph(30, 2, Fraction(1, 2), 0)
    assert all(test_hom_density(H, K3, Fraction(1, 8), 1, Fraction(3, 10), cfg, s).accept
               for s in range(10))
    full = complete_hypergraph(30, 2)
    assert not any(test_hom_density(full, K3, Fraction(1, 8), Fraction(1, 20), Fraction(3, 10), cfg, s).accept
                   for s in range(10))
    dec = test_hom_density(H, K3, Fraction(1, 8), Fraction(1, 20), Fraction(3, 10), cfg, 1)
    assert dec.statistic == t_inj(K3, make_hypergraph(12, 2, [
        (dec.sample.index(u), dec.sample.index(v)) for u, v in H.edges
        if u in dec.sample and v in dec.sample]))


def two_part_instance(value, eps=Fraction(1, 5)):
    return RegularityInstance(eps, (2,), DensityFunction.constant(2, (2,), value))


def test_instance_tester_full_sample_is_exact():
    R = two_part_instance(Fraction(1, 2), Fraction(1, 2))
    nu = Fraction(1, 10)
    for seed in range(6):
        H = random_kgraph(6, 2, Fraction(2, 5), seed)
        dec = test_regularity_instance(H, R, Fraction(3, 10), TesterConfig(q=6, nu=nu), seed)
        assert dec.accept == (instance_distance_exact(H, R) <= nu)
        assert dec.statistic == instance_distance_exact(H, R)


def test_instance_tester_monte_carlo():
    d = DensityFunction.constant(2, (2,), Fraction(4, 5))
    H, _, _ = plant_fixture(PlantedFixtureSpec(60, 2, (2,), density=d), 1)
    R = RegularityInstance(Fraction(3, 10), (2,), d)
    # a 10-sample splits 5/5 across the planted parts only about a quarter of the time,
    # so nu must absorb 6/4 and 7/3 splits
    cfg = TesterConfig(q=10, nu=Fraction(1, 5))
    acc = [test_regularity_instance(H, R, Fraction(3, 10), cfg, s) for s in range(30)]
    assert sum(a.accept for a in acc) >= 20
    assert all("heuristic" in a.flags[0] for a in acc)
    ones = two_part_instance(1)
    rej = sum(not test_regularity_instance(empty_hypergraph(60, 2), ones, Fraction(3, 10), cfg, s).accept
              for s in range(30))
    assert rej >= 20


# ---------------------------------------------------------------- repairs

def test_repair_maxcut_near_bipartite():
    n = 14
    base = bipartite(n)
    edges = [e for e in base.edges if e not in {(0, 7), (1, 8), (2, 9)}] + [(0, 1), (7, 8)]
    H = make_hypergraph(n, 2, edges)
    c = c_lk(n, 2, 2)
    value, _ = maxcut_exact(H, 2)
    assert value < c
    G = repair_maxcut(H, 2, c, c - value, Fraction(1, 10))
    assert maxcut_exact(G, 2)[0] >= c
    assert sym_diff_size(G, H) <= Fraction(1, 10) * math.comb(n, 2)


def test_repair_maxcut_trivial_cases():
    H = bipartite(10)
    c = c_lk(10, 2, 2)
    assert repair_maxcut(H, 2, c, 0, Fraction(1, 100)) == H
    with pytest.raises(PreconditionError):
        repair_maxcut(H, 2, c + Fraction(1, 45), 1, 1)
    with pytest.raises(PreconditionError):
        repair_maxcut(empty_hypergraph(10, 2), 2, c, Fraction(1, 10), 1)


def test_repair_hom_density():
    n, alpha = 40, Fraction(1, 8)
    H = random_kgraph(n, 2, Fraction(13, 25), 2)
    t = t_inj(K3, H, None)
    nu = abs(t - alpha) + Fraction(1, 100)
    G = repair_hom_density(H, K3, alpha, nu)
    assert abs(t_inj(K3, G, None) - alpha) <= Fraction(1, n)
    bound = (2 * float(nu) / float(alpha)) ** (1 / 3) * math.comb(n, 2)
    assert sym_diff_size(G, H) <= bound
    assert repair_hom_density(G, K3, alpha, Fraction(1, n)) == G
    with pytest.raises(PreconditionError):
        repair_hom_density(H, K3, alpha, 0)


# ---------------------------------------------------------------- distances

def test_distance_examples():
    assert distance_to_property_exact(empty_hypergraph(4, 2), has_edges_property()) == Fraction(1, 6)
    assert distance_to_property_exact(cycle(4), has_edges_property()) == 0
    # K4 already contains K_{2,2}, so it meets the bipartite threshold with no edits
    P = maxcut_property(2, c_lk(4, 2, 2))
    assert distance_to_property_exact(complete_hypergraph(4, 2), P) == 0
    P6 = maxcut_property(2, c_lk(6, 2, 2))
    assert distance_to_property_exact(empty_hypergraph(6, 2), P6) == Fraction(9, 15)
    with pytest.raises(GuardError):
        distance_to_property_exact(empty_hypergraph(8, 2), has_edges_property())


def generic(P):
    return PropertySpec(P.name, P.member, None, P.params)


@given(small_graphs(ks=(2,), min_n=3, max_n=5), st.fractions(1, 2, max_denominator=5),
       st.fractions(0, Fraction(1, 2), max_denominator=8))
def test_membership_iff_distance_zero(H, c, p):
    props = [has_edges_property(2), maxcut_property(2, min(c / 2, c_lk(H.n, 2, 2))),
             hom_density_property(K3, p, Fraction(1, 10))]
    for P in props:
        try:
            dist = distance_to_property_exact(H, P)
        except InputError:
            # no k-graph on this vertex set has the property
            assert not P.member(H)
            continue
        assert (dist == 0) == P.member(H)
        assert dist == distance_to_property_exact(H, generic(P))


def test_instance_distance_examples():
    R = two_part_instance(1)
    full = bipartite(4)
    assert instance_distance_exact(full, R) == 0
    assert instance_distance_exact(empty_hypergraph(4, 2), R) == Fraction(4, 6)


def test_estimate_distance_examples():
    cfg = TesterConfig(q=4)
    inside = bipartite(12)
    half = maxcut_property(2, Fraction(1, 2))
    acc = sum(estimate_distance(inside, half, Fraction(1, 5), Fraction(1, 10), cfg, s).accept
              for s in range(30))
    assert acc >= 20
    # every sample of a triangle-free graph is triangle-free, so beta = alpha still accepts
    triangle_free = PropertySpec("triangle-free", lambda G: not cliques(G, 3))
    assert all(estimate_distance(inside, triangle_free, Fraction(1, 10), Fraction(1, 5), cfg, s).accept
               for s in range(10))
    P = maxcut_property(2, c_lk(6, 2, 2))
    far = empty_hypergraph(6, 2)
    assert distance_to_property_exact(far, P) >= Fraction(1, 2)
    assert not any(estimate_distance(far, P, Fraction(1, 2), Fraction(1, 10), cfg, s).accept
                   for s in range(10))


def test_instance_tester_heuristic_rejects_far_input():
    vals = {(1, 2): Fraction(1), (1, 3): Fraction(0), (2, 3): Fraction(1, 2)}
    d = DensityFunction.from_callable(2, (3,), lambda x: vals[x.x1])
    R = RegularityInstance(Fraction(1, 5), (3,), d)
    H = random_kgraph(200, 2, Fraction(1, 2), 4)
    # the best partition of a 60-sample reaches block densities near 2/3 and 1/3,
    # leaving roughly a tenth of all pairs to edit
    cfg = TesterConfig(q=60, nu=Fraction(1, 20))
    decisions = [test_regularity_instance(H, R, Fraction(3, 10), cfg, s) for s in range(10)]
    assert not any(dec.accept for dec in decisions)
    assert all(dec.statistic > cfg.nu for dec in decisions)
