import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from hypertest.counting import (all_types, automorphism_count, ic, ic_family, ic_sigma,
                                ic_sigma_count, ic_x, pr_vs_ic_check, transversal_clique_count)
from hypertest.errors import GuardError, InputError
from hypertest.harness import PlantedFixtureSpec, equipartition, plant_fixture, random_complex_blocks
from hypertest.hypergraph import (complete_hypergraph, empty_hypergraph,
                                  make_hypergraph, pr_density)
from hypertest.partitions import AddressVector, address_space, build_family
from hypertest.regularity import DensityFunction

EDGE = complete_hypergraph(2, 2)
NO_EDGE = empty_hypergraph(2, 2)


def path3():
    return make_hypergraph(3, 2, [(0, 1), (1, 2)])


@st.composite
def small_graphs(draw, ks=(2, 3), max_n=5):
    k = draw(st.sampled_from(ks))
    n = draw(st.integers(k, max_n))
    sets = list(itertools.combinations(range(n), k))
    return make_hypergraph(n, k, draw(st.lists(st.sampled_from(sets), unique=True)))


def random_d(k, a, seed, grid=12):
    rng = np.random.default_rng(seed)
    return DensityFunction(k, a, {x: Fraction(int(rng.integers(0, grid + 1)), grid)
                                  for x in address_space(k, k - 1, a)})


# ---------------------------------------------------------------- automorphisms

def test_automorphism_examples():
    assert automorphism_count(complete_hypergraph(3, 2)) == 6
    assert automorphism_count(path3()) == 2
    for k in (2, 3, 4):
        assert automorphism_count(complete_hypergraph(k, k)) == math.factorial(k)
    with pytest.raises(GuardError):
        automorphism_count(empty_hypergraph(11, 2))


@given(small_graphs(max_n=6))
def test_automorphisms_match_permutation_oracle(F):
    assert automorphism_count(F) == oracles.automorphisms(F)


# ---------------------------------------------------------------- closed-form densities

def test_ic_sigma_examples():
    p = Fraction(2, 7)
    d = DensityFunction.constant(2, (2,), p)
    x = AddressVector((1, 2), (), 1)
    assert ic_sigma(EDGE, d, x, (1, 2)) == p
    assert ic_sigma(NO_EDGE, d, x, (2, 1)) == 1 - p
    zero = DensityFunction.constant(2, (2,), 0)
    assert ic_sigma(EDGE, zero, x, (1, 2)) == 0
    with pytest.raises(InputError):
        ic_sigma(EDGE, d, x, (1, 1))
    with pytest.raises(InputError):
        ic_sigma(path3(), d, x, (1, 2))


def test_ic_examples():
    p = Fraction(3, 5)
    d = DensityFunction.constant(2, (2,), p)
    assert ic_x(EDGE, d, AddressVector((1, 2), (), 1)) == p
    assert ic(EDGE, d) == p
    for ell in (2, 3, 4):
        assert ic(complete_hypergraph(ell, 2), DensityFunction.constant(2, (ell,), 1)) == 1
    with pytest.raises(InputError):
        ic(path3(), d)


def test_ic_k3_trailing_factor():
    # one triple, two pair classes per pair of parts: 1/2^3 per address, 8 addresses
    d = DensityFunction.constant(3, (3, 2), Fraction(1, 3))
    assert ic(complete_hypergraph(3, 3), d) == Fraction(1, 3)
    assert ic_sigma(complete_hypergraph(3, 3), d, next(iter(address_space(3, 2, (3, 2)))),
                    (1, 2, 3)) == Fraction(1, 3) / 8


@pytest.mark.parametrize("ell,k,a", [(2, 2, (3,)), (3, 2, (3,)), (3, 2, (5,)), (4, 2, (4,)),
                                     (3, 3, (3, 2)), (4, 3, (4, 1)), (4, 3, (4, 2))])
def test_ic_over_all_types_is_one(ell, k, a):
    for seed in range(4):
        assert ic_family(all_types(ell, k), random_d(k, a, seed)) == 1


def test_ic_three_vertex_graphs_expand_symbolically():
    # with a single class triple every copy lives on one address: the binomial expansion
    p = Fraction(3, 8)
    d = DensityFunction.constant(2, (3,), p)
    by_edges = {}
    for F in all_types(3, 2):
        by_edges[len(F)] = ic(F, d)
    assert by_edges == {e: math.comb(3, e) * p ** e * (1 - p) ** (3 - e) for e in range(4)}


@given(small_graphs(max_n=4), st.permutations(range(4)), st.integers(0, 2**32))
def test_ic_invariant_under_relabelling(F, perm, seed):
    a = (4,) if F.k == 2 else (4, 2)
    d = random_d(F.k, a, seed)
    perm = [p for p in perm if p < F.n]
    moved = make_hypergraph(F.n, F.k, [tuple(perm[v] for v in e) for e in F.edges])
    assert ic(moved, d) == ic(F, d)


@given(st.sampled_from([(3, 2, (4,)), (4, 2, (4,)), (3, 3, (3, 2))]), st.integers(0, 2**32))
def test_ic_monotone_in_density(shape, seed):
    ell, k, a = shape
    lo = random_d(k, a, seed)
    rng = np.random.default_rng(seed + 1)
    hi = DensityFunction(k, a, {x: v + (1 - v) * Fraction(int(rng.integers(0, 5)), 4)
                                for x, v in lo.items()})
    full, empty = complete_hypergraph(ell, k), empty_hypergraph(ell, k)
    assert ic(full, hi) >= ic(full, lo)
    assert ic(empty, hi) <= ic(empty, lo)


# ---------------------------------------------------------------- counts on complexes

def tiny_complex(sizes, k, seed, p=0.5):
    rng = np.random.default_rng(seed)
    parts, start = [], 0
    for s in sizes:
        parts.append(tuple(range(start, start + s)))
        start += s
    layers = []
    for j in range(2, k + 1):
        sets = [c for blocks in itertools.combinations(parts, j) for c in itertools.product(*blocks)]
        layers.append(make_hypergraph(start, j, [c for c in sets if rng.random() < p]))
    return parts, layers


def test_ic_sigma_count_examples():
    parts, layers = tiny_complex((2, 2, 2), 3, 0)
    empty_lower = [empty_hypergraph(6, 2), layers[1]]
    assert ic_sigma_count(complete_hypergraph(3, 3), parts, empty_lower, (1, 2, 3)) == 0
    full = [complete_hypergraph(6, 2), complete_hypergraph(6, 3)]
    assert ic_sigma_count(complete_hypergraph(3, 3), parts, full, (1, 2, 3)) == 8
    assert ic_sigma_count(complete_hypergraph(3, 2), parts[:3], [complete_hypergraph(6, 2)],
                          (3, 1, 2)) == 8
    with pytest.raises(InputError):
        ic_sigma_count(complete_hypergraph(3, 3), parts, full[:1], (1, 2, 3))
    with pytest.raises(GuardError):
        ic_sigma_count(complete_hypergraph(3, 2), parts, full[:1], (1, 2, 3), limit=4)


@pytest.mark.parametrize("sizes,k", [((2, 2, 2), 2), ((2, 3, 1), 2), ((2, 2, 2), 3),
                                     ((2, 1, 2, 2), 3), ((1, 2, 2, 1), 2)])
def test_ic_sigma_count_matches_transversal_loops(sizes, k):
    ell = len(sizes)
    for seed in range(6):
        parts, layers = tiny_complex(sizes, k, seed)
        for F in all_types(ell, k):
            for sigma in itertools.permutations(range(1, ell + 1)):
                assert (ic_sigma_count(F, parts, layers, sigma)
                        == oracles.sigma_count(F, parts, layers, sigma))


def brute_cliques(blocks, sizes):
    count = 0
    for combo in itertools.product(*[range(s) for s in sizes]):
        count += all(blocks[(s, t)][combo[s], combo[t]]
                     for s, t in itertools.combinations(range(len(sizes)), 2))
    return count


@pytest.mark.parametrize("ell", [2, 3, 4, 5])
def test_transversal_clique_count_matches_loops(ell):
    for seed in range(5):
        sizes = [3 + (seed + s) % 3 for s in range(ell)]
        rng = np.random.default_rng(seed)
        blocks = {(s, t): rng.random((sizes[s], sizes[t])) < 0.6
                  for s in range(ell) for t in range(s + 1, ell)}
        assert transversal_clique_count(blocks, sizes) == brute_cliques(blocks, sizes)


def test_clique_count_near_prediction_three_classes():
    m, ell, gamma = 200, 3, 0.1
    hits = 0
    for seed in range(20):
        d = (0.3, 0.5, 0.8)[seed % 3]
        blocks = random_complex_blocks(m, ell, d, seed)
        count = transversal_clique_count(blocks, [m] * ell)
        hits += abs(count - d ** 3 * m ** 3) <= gamma * d ** 3 * m ** 3
    assert hits >= 18


# ---------------------------------------------------------------- Pr against IC

def test_pr_vs_ic_complete_and_empty():
    partition = equipartition(12, 3)
    fam = build_family(partition, {}, 2, (3,))
    ones = DensityFunction.constant(2, (3,), 1)
    rep = pr_vs_ic_check(complete_hypergraph(12, 2), fam, ones, [complete_hypergraph(3, 2)],
                         Fraction(1, 20))
    assert rep.pr[0] == 1 and rep.ic[0] >= 1 - rep.gamma and rep.ok
    zeros = DensityFunction.constant(2, (3,), 0)
    rep = pr_vs_ic_check(empty_hypergraph(12, 2), fam, zeros, [empty_hypergraph(3, 2)],
                         Fraction(1, 20))
    assert rep.pr[0] == 1 and rep.ic[0] == 1 and rep.ok


def test_pr_vs_ic_report_is_exact():
    H, fam, d = plant_fixture(PlantedFixtureSpec(30, 2, (4,), grid=4, check=False), 5)
    types = all_types(3, 2)
    rep = pr_vs_ic_check(H, fam, d, types, Fraction(1, 20))
    for i, F in enumerate(types):
        assert rep.pr[i] == pr_density([F], H)
        assert rep.ic[i] == ic(F, d)
    assert sum(rep.pr.values()) == 1 and sum(rep.ic.values()) == 1
    assert sum(rep.crossing_pr.values()) == 1
    sizes = [len(p) for p in fam.parts]
    crossing = sum(math.prod(c) for c in itertools.combinations(sizes, 3))
    assert rep.crossing_fraction == Fraction(crossing, math.comb(30, 3))
    gaps = [rep.pr[i] - rep.ic[i] for i in rep.pr]
    worst = max(abs(sum(sub)) for r in range(1, len(gaps) + 1)
                for sub in itertools.combinations(gaps, r))
    assert rep.max_subfamily_deviation == worst


def test_pr_vs_ic_runs_the_supplied_check():
    H, fam, d = plant_fixture(PlantedFixtureSpec(30, 2, (3,), grid=4, check=False), 1)
    calls = []
    pr_vs_ic_check(H, fam, d, all_types(3, 2), Fraction(1, 20),
                   check=lambda *args: calls.append(args))
    assert len(calls) == 1
    with pytest.raises(InputError):
        pr_vs_ic_check(H, fam, d, all_types(4, 2), Fraction(1, 20))
