"""Model-predicted induced-copy densities and their exact counterparts."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import GuardError, InputError
from .hypergraph import (ENUM_LIMIT, all_isotypes, canonical_signature, induced_census, inj_count,
                         signature_of_mask)
from .partitions import address_space
from .rng import as_fraction

AUT_MAX_N = 10


def automorphism_count(F):
    """|Aut(F)|, counted as edge-preserving bijections of V(F) onto itself."""
    if F.n > AUT_MAX_N:
        raise GuardError("automorphism count (vertices)", F.n, AUT_MAX_N)
    return inj_count(F, F)


def _edge_labels(F, sigma):
    """Images of the edges of F under sigma, as sorted label tuples."""
    return {tuple(sorted(sigma[v] for v in e)) for e in F.edges}


def _check_shape(F, d, x):
    if F.k != d.k:
        raise InputError("F and the density function differ in uniformity")
    if x.ell != F.n or x.j != d.k - 1:
        raise InputError(f"address {x} does not fit an {F.n}-vertex F at level {d.k - 1}")


def _trailing(d, ell):
    out = Fraction(1)
    for j in range(2, d.k):
        out /= Fraction(d.a[j - 1]) ** math.comb(ell, j)
    return out


def _restricted_densities(d, x):
    return {lab: d[x.restrict(lab, d.k - 1)] for lab in itertools.combinations(x.x1, d.k)}


def ic_sigma(F, d, x, sigma, _dens=None):
    """Product of d over restrictions that are edges of sigma(F) and of 1 - d elsewhere."""
    _check_shape(F, d, x)
    sigma = tuple(sigma)
    if sorted(sigma) != list(x.x1):
        raise InputError("sigma must be a bijection onto the labels of x")
    dens = _dens or _restricted_densities(d, x)
    image = _edge_labels(F, sigma)
    out = Fraction(1)
    for lab, value in dens.items():
        out *= value if lab in image else 1 - value
    return out * _trailing(d, F.n)


def ic_x(F, d, x, aut=None):
    _check_shape(F, d, x)
    aut = aut or automorphism_count(F)
    dens = _restricted_densities(d, x)
    total = sum(ic_sigma(F, d, x, sigma, dens) for sigma in itertools.permutations(x.x1))
    return total / aut


def ic(F, d):
    """Average of ic_x over the address space A(ell, k-1, a)."""
    ell = F.n
    if ell > d.a[0]:
        raise InputError(f"F has {ell} vertices but there are only {d.a[0]} vertex classes")
    if ell < d.k:
        raise InputError("F needs at least k vertices")
    aut = automorphism_count(F)
    total = sum(ic_x(F, d, x, aut) for x in address_space(ell, d.k - 1, d.a))
    return total / math.comb(d.a[0], ell)


def ic_family(family, d):
    return sum((ic(F, d) for F in family), Fraction(0))


def all_types(q, k):
    """One representative hypergraph per isomorphism class on q vertices."""
    return all_isotypes(q, k)


# ---------------------------------------------------------------------------
# counts on complexes

def _transversals(parts, limit):
    size = math.prod(len(p) for p in parts)
    if size > limit:
        raise GuardError("transversal enumeration", size, limit)
    if size == 0:
        return np.zeros((0, len(parts)), dtype=np.int64)
    groups = [np.asarray(p, dtype=np.int64) for p in parts]
    return np.stack(np.meshgrid(*groups, indexing="ij"), axis=-1).reshape(-1, len(parts))


def ic_sigma_count(F, parts, layers, sigma, limit=ENUM_LIMIT):
    """Transversal sigma-induced copies of F inside K_ell of the (k-1)-level.

    ``parts`` are the ell vertex classes (labels 1..ell), ``layers`` the list
    [H^(2), ..., H^(k)] of the complex, and ``sigma`` maps vertex i of F to
    the label sigma[i]. A transversal with vertex v_s in class s counts when
    every (k-1)-subset lies in H^(k-1) and, for each k-subset of labels, its
    membership in H^(k) matches membership of the preimage in F.
    """
    ell = len(parts)
    k = F.k
    if len(layers) != k - 1:
        raise InputError(f"a complex for k={k} needs layers 2..{k}")
    if sorted(sigma) != list(range(1, ell + 1)) or F.n != ell:
        raise InputError("sigma must biject V(F) onto 1..ell")
    rows = _transversals(parts, limit)
    if rows.shape[0] == 0:
        return 0
    ok = np.ones(rows.shape[0], dtype=bool)
    if k >= 3:
        lower = layers[-2]
        for sub in itertools.combinations(range(ell), k - 1):
            ok &= lower.has_sets(np.sort(rows[:, list(sub)], axis=1))
    top = layers[-1]
    image = _edge_labels(F, tuple(sigma))
    for sub in itertools.combinations(range(ell), k):
        inside = top.has_sets(np.sort(rows[:, list(sub)], axis=1))
        want = tuple(s + 1 for s in sub) in image
        ok &= inside if want else ~inside
    return int(ok.sum())


def transversal_clique_count(blocks, sizes):
    """Number of transversal ell-cliques in an ell-partite graph.

    ``blocks[(s, t)]`` for s < t is the boolean biadjacency matrix between
    classes s and t (0-based); ``sizes`` lists the class sizes. The first
    class is fixed vertex by vertex until three classes remain, which are
    counted with one matrix product.
    """
    ell = len(sizes)
    mats = {key: np.asarray(m, dtype=np.float64) for key, m in blocks.items()}
    return int(round(_clique_rec(mats, ell)))


def _clique_rec(mats, ell):
    if ell == 1:
        return 0.0
    if ell == 2:
        return float(mats[(0, 1)].sum())
    if ell == 3:
        return float(((mats[(0, 1)] @ mats[(1, 2)]) * mats[(0, 2)]).sum())
    total = 0.0
    first = mats[(0, 1)].shape[0]
    for v in range(first):
        keep = [np.flatnonzero(mats[(0, t)][v]) for t in range(1, ell)]
        if any(idx.size == 0 for idx in keep):
            continue
        sub = {(s - 1, t - 1): mats[(s, t)][np.ix_(keep[s - 1], keep[t - 1])]
               for s in range(1, ell) for t in range(s + 1, ell)}
        total += _clique_rec(sub, ell - 1)
    return total


# ---------------------------------------------------------------------------

@dataclass
class PrIcReport:
    pr: dict
    ic: dict
    deviation: Fraction           # |Pr(F) - IC(F)| summed over the whole family
    max_subfamily_deviation: Fraction
    gamma: Fraction
    ok: bool
    crossing_fraction: Fraction
    crossing_pr: dict = field(default_factory=dict)        # Pr among crossing ell-sets only
    crossing_max_deviation: Fraction = Fraction(0)
    flags: list = field(default_factory=list)


def pr_vs_ic_check(H, fam, d, family, gamma, limit=ENUM_LIMIT, check=None):
    """Compare Pr(F, H) with IC(F, d) exactly for every F in ``family``.

    The worst sub-family deviation is max(sum of positive gaps, -sum of
    negative gaps), i.e. the largest |Pr(F') - IC(F')| over all F' subsets.
    Pr is taken over all ell-sets; the same comparison restricted to
    crossing ell-sets is reported alongside.
    ``check`` is an optional callable validating (fam, H, d) first.
    """
    gamma = as_fraction(gamma)
    if check is not None:
        check(fam, H, d)
    family = list(family)
    ell = family[0].n
    sizes = [len(p) for p in fam.parts]
    crossing_total = _elementary(sizes, ell)
    total = math.comb(H.n, ell)
    full = _by_signature(induced_census(H, ell, limit), ell, H.k)
    crossing = _by_signature(induced_census(H, ell, limit, labels=fam.part_of), ell, H.k)
    pr, icv, cross = {}, {}, {}
    for idx, F in enumerate(family):
        sig = canonical_signature(F)
        pr[idx] = Fraction(full.get(sig, 0), total)
        cross[idx] = Fraction(crossing.get(sig, 0), crossing_total) if crossing_total else Fraction(0)
        icv[idx] = ic(F, d)
    worst = _worst_subfamily([pr[i] - icv[i] for i in pr])
    worst_cross = _worst_subfamily([cross[i] - icv[i] for i in pr])
    return PrIcReport(pr, icv, abs(sum(pr.values()) - sum(icv.values())), worst, gamma,
                      worst <= gamma, Fraction(crossing_total, total), cross, worst_cross)


def _by_signature(census, q, k):
    out = Counter()
    for mask, count in census.items():
        out[signature_of_mask(q, k, mask)] += count
    return out


def _worst_subfamily(gaps):
    pos = sum((g for g in gaps if g > 0), Fraction(0))
    neg = -sum((g for g in gaps if g < 0), Fraction(0))
    return max(pos, neg)


def _elementary(sizes, r):
    """r-th elementary symmetric polynomial of the class sizes (crossing r-sets)."""
    poly = [1] + [0] * r
    for s in sizes:
        for i in range(r, 0, -1):
            poly[i] += poly[i - 1] * s
    return poly[r]
