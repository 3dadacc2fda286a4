from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

import address_checks
from hypertest.errors import FamilyError, InputError
from hypertest.hypergraph import VertexPartition, crossing_sets
from hypertest.partitions import (AddressVector, address_space, address_space_size, build_family,
                                  family_classes, family_refines, is_restriction, nu_refines,
                                  refine_family, refines, restrictions, trivial_family)

PARTS6 = ((0, 1), (2, 3), (4, 5))


def parity_family():
    """k = 3, a = (3, 2) on six vertices: a crossing pair gets class 1 iff u + v is even."""
    partition = VertexPartition(6, PARTS6)
    classes = {}
    for x in address_space(2, 1, (3, 2)):
        for e in crossing_sets([PARTS6[s - 1] for s in x.x1], 2):
            b = 1 if sum(e) % 2 == 0 else 2
            classes.setdefault((x, b), set()).add(e)
    return partition, classes


# ---------------------------------------------------------------- address space

def test_address_space_examples():
    assert list(address_space(2, 1, (2,))) == [AddressVector((1, 2), (), 1)]
    singles = list(address_space(1, 0, (5,)))
    assert [x.x1 for x in singles] == [(1,), (2,), (3,), (4,), (5,)]
    assert len(list(address_space(3, 2, (3, 2)))) == 8


@given(st.integers(1, 5), st.integers(0, 3), st.lists(st.integers(1, 3), min_size=3, max_size=3))
def test_address_space_size_formula(ell, j, tail):
    a = (max(ell, 2) + 1,) + tuple(tail)
    if ell < j + 1:
        with pytest.raises(InputError):
            list(address_space(ell, j, a))
        return
    space = list(address_space(ell, j, a))
    assert len(space) == address_space_size(ell, j, a) == len(set(space))
    assert all(x.fits(a) for x in space)


def test_address_serialisation_round_trip():
    for x in address_space(3, 2, (4, 3)):
        assert AddressVector.from_dict(x.to_dict()) == x


def test_address_of_examples():
    fam2 = build_family(VertexPartition(6, PARTS6), {}, 2, (3,))
    assert fam2.address_of((0, 5)).x1 == (1, 3)
    assert fam2.address_of((2,)).x1 == (2,)
    with pytest.raises(InputError):
        fam2.address_of((0, 1))
    partition, classes = parity_family()
    fam3 = build_family(partition, classes, 3, (3, 2))
    for (x, b), cell in classes.items():
        for e in cell:
            assert fam3.address_of(e) == x
            assert fam3.address_of(e + (next(v for v in range(6) if fam3.part_of[v] not in
                                             {fam3.part_of[u] for u in e}),)).entry(2, x.x1) == b


def test_restriction_examples():
    x = AddressVector((1, 2, 4), ((2, 1, 1),), 2)
    assert is_restriction(x, x)
    assert len(restrictions(x, 2, 1)) == 3
    assert all(is_restriction(y, x) for y in restrictions(x, 2, 1))
    other = AddressVector((1, 2, 4), ((1, 1, 1),), 2)
    assert not is_restriction(AddressVector((1, 2), ((2,),), 2), other)


# ---------------------------------------------------------------- polyads

def test_polyad_examples_k2():
    fam = build_family(VertexPartition(6, PARTS6), {}, 2, (3,))
    poly = fam.polyad(AddressVector((1, 3), (), 1))
    assert set(poly.edges) == {(0,), (1,), (4,), (5,)}
    complex_ = fam.polyad_complex(AddressVector((1, 3), (), 1))
    assert len(complex_) == 1 and complex_[0].edges == poly.edges


def test_polyad_of_triple_is_union_of_pair_classes():
    partition, classes = parity_family()
    fam = build_family(partition, classes, 3, (3, 2))
    x = AddressVector((1, 2, 3), ((1, 1, 1),), 2)
    poly = fam.polyad(x)
    assert set(poly.edges) == {(0, 2), (1, 3), (0, 4), (1, 5), (2, 4), (3, 5)}
    assert sorted(poly.cliques(3)) == [(0, 2, 4), (1, 3, 5)]
    lower, upper = fam.polyad_complex(x)
    assert set(lower.edges) == {(v,) for v in range(6)}
    assert upper.edges == poly.edges
    # the 8 crossing triples are split among the level-2 polyads
    sizes = sorted(len(fam.polyad(x).cliques(3)) for x in address_space(3, 2, (3, 2)))
    assert sum(sizes) == 8


def test_equitable_fixture_has_no_empty_polyads():
    fam = trivial_family(VertexPartition(9, ((0, 1, 2), (3, 4, 5), (6, 7, 8))), 3)
    for x in address_space(3, 2, fam.a):
        assert not fam.is_empty_address(x)


# ---------------------------------------------------------------- build_family

def test_build_family_k2_equipartition():
    fam = build_family(VertexPartition(7, ((0, 1, 2), (3, 4), (5, 6))), {}, 2, (3,))
    assert fam.a == (3,) and fam.k == 2


def test_build_family_fp1_on_empty_class():
    partition, classes = parity_family()
    key = next(k for k in classes if k[1] == 2)
    broken = dict(classes)
    moved = broken.pop(key)
    broken[(key[0], 1)] = broken[(key[0], 1)] | moved
    with pytest.raises(FamilyError) as err:
        build_family(partition, broken, 3, (3, 2))
    assert err.value.code == "FP1" and err.value.level == 2


def test_build_family_fp2_on_overlap():
    partition, classes = parity_family()
    key = next(k for k in classes if k[1] == 1)
    broken = dict(classes)
    broken[(key[0], 2)] = set(broken[(key[0], 2)]) | {next(iter(classes[key]))}
    with pytest.raises(FamilyError) as err:
        build_family(partition, broken, 3, (3, 2))
    assert err.value.code == "FP2"


def test_build_family_fp3_on_wrong_polyad():
    partition, classes = parity_family()
    x = AddressVector((1, 2, 3), ((1, 1, 1),), 2)
    with pytest.raises(FamilyError) as err:
        build_family(partition, classes, 3, (3, 2), polyads={x: [(0, 2)]})
    assert err.value.code == "FP3"
    fam = build_family(partition, classes, 3, (3, 2),
                       polyads={x: [(0, 2), (1, 3), (0, 4), (1, 5), (2, 4), (3, 5)]})
    assert build_family(partition, family_classes(fam), 3, (3, 2)) == fam


def test_build_family_fp1_on_empty_vertex_class():
    with pytest.raises(FamilyError) as err:
        build_family(VertexPartition(4, ((0, 1), (), (2, 3))), {}, 2, (3,))
    assert err.value.code == "FP1"


def test_invariant_suite_on_small_families():
    checked = 0
    for _k, fam in address_checks.all_small_families(max_n=5):
        assert address_checks.hat_relation_violations(fam) == []
        checked += 1
    assert checked > 50


def test_partition_refinement_carries_to_polyad_cliques():
    partition, classes = parity_family()
    fine = build_family(partition, classes, 3, (3, 2))
    coarse = trivial_family(partition, 3)
    assert family_refines(fine, coarse)
    for j in (1, 2):
        fine_sets = [set(fine.polyad(x).cliques(j + 1)) for x in address_space(j + 1, j, fine.a)]
        coarse_sets = [set(coarse.polyad(x).cliques(j + 1)) for x in address_space(j + 1, j, coarse.a)]
        assert refines([s for s in fine_sets if s], [s for s in coarse_sets if s])


# ---------------------------------------------------------------- refinement of set partitions

def test_refines_examples():
    A = [{1, 2}, {3, 4}]
    assert refines(A, A) and nu_refines(A, A) == 0
    assert refines([{1}, {2}, {3}, {4}], [{1, 2, 3, 4}])
    assert nu_refines([{1}, {2}, {3}, {4}], [{1, 2, 3, 4}]) == 0
    assert nu_refines(A, [{1, 3}, {2, 4}]) == Fraction(1, 2)
    assert not refines(A, [{1, 3}, {2, 4}])


set_partitions = st.lists(st.integers(0, 3), min_size=8, max_size=8).map(
    lambda labels: [{v for v, lab in enumerate(labels) if lab == c} for c in range(4)])


@given(set_partitions, set_partitions, set_partitions)
def test_nu_refines_triangle_inequality(A, B, C):
    assert nu_refines(A, C) <= nu_refines(A, B) + nu_refines(B, C)
    assert (nu_refines(A, B) == 0) == refines(A, B)


# ---------------------------------------------------------------- refine_family

def test_refine_family_identity_and_halving():
    fam = build_family(VertexPartition(8, ((0, 1, 2, 3), (4, 5, 6, 7))), {}, 2, (2,))
    assert refine_family(fam, (2,), 0) is fam
    finer = refine_family(fam, (4,), 3)
    assert sorted(len(p) for p in finer.parts) == [2, 2, 2, 2]
    assert nu_refines(finer.parts, fam.parts) == 0
    with pytest.raises(InputError):
        refine_family(fam, (3,), 0)


def test_refine_family_k3_slices_pass_sampled_check():
    n = 150
    partition = VertexPartition(n, tuple(tuple(range(s, n, 3)) for s in range(3)))
    fam = trivial_family(partition, 3)
    passed = 0
    for seed in range(50):
        try:
            out = refine_family(fam, (3, 2), seed, epsilon=Fraction(1, 20), budget=1)
        except Exception:
            continue
        assert out.a == (3, 2) and family_refines(out, fam)
        passed += 1
    assert passed >= 45
