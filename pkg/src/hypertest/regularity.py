"""Relative densities, (eps, d)-regularity checks and the randomized repair procedures.

A k-graph "on a polyad" is passed either as a Hypergraph or as any iterable
of sorted k-tuples. The polyad is a :class:`~hypertest.partitions.Polyad`
spanning exactly k vertex classes; use :func:`pair_polyad` for the k = 2
case where the polyad is just two vertex sets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import GuardError, InputError, PostconditionError, PreconditionError
from .hypergraph import Hypergraph, VertexPartition, ranks_of, unrank_many
from .partitions import AddressVector, FamilyOfPartitions, Polyad, address_space, build_family
from .rng import as_fraction, derive_seed, make_rng

EXACT_EDGE_LIMIT = 22
RETRY_BUDGET = 20
SAMPLED_TRIALS = 100


# ---------------------------------------------------------------------------
# plumbing

def pair_polyad(part_a, part_b):
    """The level-1 polyad V_s u V_t used for graphs."""
    parts = (tuple(sorted(part_a)), tuple(sorted(part_b)))
    return Polyad(1, AddressVector((1, 2), (), 1), parts,
                  frozenset((v,) for p in parts for v in p))


def polyad_from_parts(parts, edges=None, level=None):
    """Polyad over the given vertex classes; ``edges`` of size ``level`` (default: level 1)."""
    parts = tuple(tuple(sorted(p)) for p in parts)
    if edges is None:
        return Polyad(1, AddressVector(tuple(range(1, len(parts) + 1)), (), 1), parts,
                      frozenset((v,) for p in parts for v in p))
    edges = frozenset(tuple(sorted(e)) for e in edges)
    level = level or len(next(iter(edges)))
    ell = len(parts)
    x = AddressVector(tuple(range(1, ell + 1)),
                      tuple((1,) * math.comb(ell, i) for i in range(2, level + 1)), level)
    return Polyad(level, x, parts, edges)


def _ranks(Hk, k):
    if isinstance(Hk, Hypergraph):
        return Hk.ranks
    rows = [tuple(sorted(e)) for e in Hk]
    if not rows:
        return np.zeros(0, dtype=np.int64)
    arr = np.array(rows, dtype=np.int64)
    return np.unique(ranks_of(arr, int(arr.max()) + 1, k))


def _rebuild(like, ranks, k):
    ranks = np.sort(np.asarray(ranks, dtype=np.int64))
    if isinstance(like, Hypergraph):
        return Hypergraph(like.n, like.k, ranks)
    if ranks.size == 0:
        return frozenset()
    arr = unrank_many(ranks, int(ranks.max()) + k, k)
    return frozenset(tuple(int(v) for v in row) for row in arr)


class CliqueTable:
    """K_k of a polyad over k classes, with face indices into the polyad edge list."""

    def __init__(self, polyad, k=None):
        k = k or polyad.level + 1
        if len(polyad.parts) != k or polyad.level != k - 1:
            raise InputError(f"regularity checks need a level-{k - 1} polyad over {k} classes")
        self.k = k
        self.polyad = polyad
        groups = [np.asarray(p, dtype=np.int64) for p in polyad.parts]
        if any(g.size == 0 for g in groups):
            grid = np.zeros((0, k), dtype=np.int64)
        else:
            grid = np.stack(np.meshgrid(*groups, indexing="ij"), axis=-1).reshape(-1, k)
        self.edge_ranks = polyad.edge_ranks
        faces = np.zeros((grid.shape[0], k), dtype=np.int64)
        keep = np.ones(grid.shape[0], dtype=bool)
        nmax = int(grid.max()) + 1 if grid.size else 1
        for s in range(k):
            face = np.sort(np.delete(grid, s, axis=1), axis=1)
            r = ranks_of(face, nmax, k - 1)
            idx = np.searchsorted(self.edge_ranks, r)
            idx = np.minimum(idx, max(self.edge_ranks.size - 1, 0))
            found = self.edge_ranks.size > 0
            ok = (self.edge_ranks[idx] == r) if found else np.zeros(r.shape, dtype=bool)
            keep &= ok
            faces[:, s] = idx
        self.cliques = grid[keep]              # columns follow the class order of the polyad
        self.faces = faces[keep]
        self.sorted_ranks = ranks_of(np.sort(self.cliques, axis=1), nmax, k)
        self.nmax = nmax

    @property
    def size(self):
        return int(self.cliques.shape[0])

    def membership(self, Hk):
        """Boolean per clique: is it an edge of Hk."""
        r = _ranks(Hk, self.k)
        return np.isin(self.sorted_ranks, r)

    def edges_of(self, mask):
        """Polyad (k-1)-edges selected by a boolean mask over the edge list."""
        r = self.edge_ranks[mask]
        return _rebuild(None, r, self.k - 1) if r.size else frozenset()


@dataclass
class RegularityReport:
    verdict: str                 # "regular" or "refuted"
    exact: bool
    witness: frozenset | None = None
    witness_density: Fraction | None = None
    density_range: tuple = (None, None)
    checked: int = 0
    flags: list = field(default_factory=list)

    @property
    def refuted(self):
        return self.verdict == "refuted"

    @property
    def regular(self):
        return self.verdict == "regular"


def rel_density(Hk, polyad):
    """|Hk n K_k(polyad)| / |K_k(polyad)|, or 0 on an empty clique set."""
    table = CliqueTable(polyad)
    if table.size == 0:
        return Fraction(0)
    return Fraction(int(table.membership(Hk).sum()), table.size)


def _window_violation(hits, vol, d, eps):
    """Exact test of |hits - d vol| > eps vol."""
    return abs(Fraction(hits) - d * vol) > eps * vol


def check_regular_exact(Hk, polyad, epsilon, d, limit=EXACT_EDGE_LIMIT):
    """Enumerate every sub-(k-1)-graph Q of the polyad with |K_k(Q)| >= eps |K_k(polyad)|."""
    eps, d = as_fraction(epsilon), as_fraction(d)
    table = CliqueTable(polyad)
    E = int(table.edge_ranks.size)
    if E > limit:
        raise GuardError("exact regularity check (polyad edges); use check_regular_sampled", E, limit)
    total = table.size
    if total == 0:
        return RegularityReport("regular", True, flags=["empty clique set"])
    inh = table.membership(Hk)
    cm = (np.int64(1) << table.faces).sum(axis=1) if E else np.zeros(total, dtype=np.int64)
    # integer forms: eligible iff vol*eps_den >= eps_num*total; violation iff
    # |hits*d_den - d_num*vol| * eps_den > eps_num * d_den * vol
    en, ed, dn, dd = eps.numerator, eps.denominator, d.numerator, d.denominator
    best, worst_gap, lo, hi, checked = None, -1.0, None, None, 0
    step = 1 << 14
    for start in range(0, 1 << E, step):
        Q = np.arange(start, min(1 << E, start + step), dtype=np.int64)
        inside = (Q[:, None] & cm[None, :]) == cm[None, :]
        vol = inside.sum(axis=1).astype(object)
        hits = (inside & inh[None, :]).sum(axis=1).astype(object)
        for qi in range(Q.size):
            v = vol[qi]
            if v == 0 or v * ed < en * total:
                continue
            checked += 1
            h = hits[qi]
            dens = Fraction(h, v)
            lo = dens if lo is None or dens < lo else lo
            hi = dens if hi is None or dens > hi else hi
            if abs(h * dd - dn * v) * ed > en * dd * v:
                gap = abs(float(dens - d))
                if gap > worst_gap:
                    worst_gap, best = gap, (int(Q[qi]), dens)
    if best is None:
        return RegularityReport("regular", True, density_range=(lo, hi), checked=checked)
    mask = np.array([(best[0] >> i) & 1 for i in range(E)], dtype=bool)
    return RegularityReport("refuted", True, witness=table.edges_of(mask), witness_density=best[1],
                            density_range=(lo, hi), checked=checked)


def _candidate(table, inh, kind, rng):
    """A random sub-(k-1)-graph of the polyad as a boolean mask over its edges."""
    E = table.edge_ranks.size
    k = table.k
    if kind == 0:
        return rng.random(E) < 0.5
    if kind == 1:
        # vertex subsets, each class keeping at least half its vertices
        keep_vertices = []
        for p in table.polyad.parts:
            p = np.asarray(p)
            size = int(rng.integers((p.size + 1) // 2, p.size + 1)) if p.size else 0
            keep_vertices.append(rng.choice(p, size=size, replace=False) if size else p[:0])
        keep = np.concatenate(keep_vertices)
        inside = np.isin(table.cliques, keep).all(axis=1)
        mask = np.zeros(E, dtype=bool)
        mask[table.faces[inside].ravel()] = True
        return mask
    hit = np.flatnonzero(inh)
    if hit.size == 0:
        return rng.random(E) < 0.5
    e = table.cliques[hit[rng.integers(hit.size)]]
    mask = np.zeros(E, dtype=bool)
    sides = range(k) if kind == 2 else [int(rng.integers(k))]
    for s in sides:
        link = (table.cliques[:, s] == e[s]) & inh
        mask[table.faces[link, s]] = True
    if kind == 3:
        s = sides[0]
        for t in range(k):
            if t != s:
                mask[table.faces[:, t]] = True
    return mask


def check_regular_sampled(Hk, polyad, epsilon, d, trials=SAMPLED_TRIALS, seed=0):
    """One-sided randomized refuter.

    Candidates cycle through uniform edge subsets, large vertex subsets,
    joint links of the vertices of a random edge, and a one-sided link. A
    "refuted" verdict carries a witness verified exactly; "regular" only
    means no witness was found.
    """
    eps, d = as_fraction(epsilon), as_fraction(d)
    table = CliqueTable(polyad)
    total = table.size
    if total == 0:
        return RegularityReport("regular", True, flags=["empty clique set"])
    rng = make_rng(seed)
    inh = table.membership(Hk)
    fe, fd = float(eps), float(d)
    lo = hi = None
    checked = 0
    for t in range(trials):
        mask = _candidate(table, inh, t % 4, rng)
        inside = mask[table.faces].all(axis=1)
        vol = int(inside.sum())
        if vol == 0 or vol < fe * total - 1e-9:
            continue
        if Fraction(vol) < eps * total:
            continue
        checked += 1
        hits = int((inside & inh).sum())
        dens = hits / vol
        lo = dens if lo is None else min(lo, dens)
        hi = dens if hi is None else max(hi, dens)
        if abs(dens - fd) > fe - 1e-12 and _window_violation(hits, vol, d, eps):
            return RegularityReport("refuted", False, witness=table.edges_of(mask),
                                    witness_density=Fraction(hits, vol),
                                    density_range=(lo, hi), checked=checked)
    return RegularityReport("regular", False, density_range=(lo, hi), checked=checked,
                            flags=["no witness found (not a proof of regularity)"])


def check_regular(Hk, polyad, epsilon, d, method="auto", trials=SAMPLED_TRIALS, seed=0):
    if method == "exact" or (method == "auto" and polyad.edge_ranks.size <= EXACT_EDGE_LIMIT):
        return check_regular_exact(Hk, polyad, epsilon, d)
    return check_regular_sampled(Hk, polyad, epsilon, d, trials, seed)


def regularity_epsilon(Hk, polyad, d):
    """Smallest eps (over the finitely many critical values) making Hk (eps, d)-regular; exact."""
    d = as_fraction(d)
    table = CliqueTable(polyad)
    total = table.size
    if total == 0:
        return Fraction(0)
    E = int(table.edge_ranks.size)
    if E > EXACT_EDGE_LIMIT:
        raise GuardError("exact regularity epsilon", E, EXACT_EDGE_LIMIT)
    inh = table.membership(Hk)
    cm = (np.int64(1) << table.faces).sum(axis=1)
    pts = []
    Q = np.arange(1 << E, dtype=np.int64)
    inside = (Q[:, None] & cm[None, :]) == cm[None, :]
    vols = inside.sum(axis=1)
    hits = (inside & inh[None, :]).sum(axis=1)
    for v, h in set(zip(vols.tolist(), hits.tolist())):
        if v:
            pts.append((Fraction(v, total), abs(Fraction(h, v) - d)))
    # Q is eligible at eps iff vol/total >= eps; it violates iff gap > eps
    best = Fraction(1)
    for cand in sorted({g for _, g in pts} | {f for f, _ in pts} | {Fraction(0)}):
        if all(not (f >= cand and g > cand) for f, g in pts):
            best = cand
            break
    return best


# ---------------------------------------------------------------------------
# density functions and regularity instances

@dataclass(frozen=True, eq=False)
class DensityFunction:
    k: int
    a: tuple
    values: dict

    def __post_init__(self):
        a = tuple(int(v) for v in self.a)
        object.__setattr__(self, "a", a)
        if len(a) != self.k - 1:
            raise InputError(f"density function for k={self.k} needs {self.k - 1} part counts")
        vals = {x: as_fraction(v) for x, v in self.values.items()}
        expected = set(address_space(self.k, self.k - 1, a))
        if set(vals) != expected:
            raise InputError("density function must be defined on every address of A(k, k-1, a)")
        if any(v < 0 or v > 1 for v in vals.values()):
            raise InputError("densities must lie in [0, 1]")
        object.__setattr__(self, "values", vals)

    def __getitem__(self, x):
        return self.values[x]

    def __eq__(self, other):
        return (isinstance(other, DensityFunction) and self.k == other.k and self.a == other.a
                and self.values == other.values)

    def items(self):
        return [(x, self.values[x]) for x in address_space(self.k, self.k - 1, self.a)]

    @classmethod
    def constant(cls, k, a, value):
        return cls(k, tuple(a), {x: as_fraction(value) for x in address_space(k, k - 1, tuple(a))})

    @classmethod
    def from_callable(cls, k, a, fn):
        return cls(k, tuple(a), {x: as_fraction(fn(x)) for x in address_space(k, k - 1, tuple(a))})

    def map(self, fn):
        return DensityFunction(self.k, self.a, {x: as_fraction(fn(v)) for x, v in self.values.items()})


def dist(d1, d2):
    """k! prod_i a_i^(-C(k,i)) sum_x |d1(x) - d2(x)|."""
    if d1.k != d2.k or d1.a != d2.a:
        raise InputError("density functions must share k and a")
    k = d1.k
    weight = Fraction(math.factorial(k))
    for i, ai in enumerate(d1.a, start=1):
        weight /= Fraction(ai) ** math.comb(k, i)
    return weight * sum(abs(d1[x] - d2[x]) for x in d1.values)


def eps_counting(gamma, d0, k, ell):
    """Regularity threshold used for clique counting: (gamma d0)^(2^ell)."""
    return (as_fraction(gamma) * as_fraction(d0)) ** (2 ** ell)


def eps_default(t, k):
    """t^(-4^k) eps_counting(1/t, 1/t, k-1, k) / 8."""
    return Fraction(1, t ** (4 ** k)) * eps_counting(Fraction(1, t), Fraction(1, t), k - 1, k) / 8


@dataclass(frozen=True)
class RegularityInstance:
    epsilon: Fraction
    a: tuple
    d: DensityFunction
    eps_def: object = eps_default

    def __post_init__(self):
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon))
        object.__setattr__(self, "a", tuple(self.a))
        if not 0 < self.epsilon <= 1:
            raise InputError("epsilon must lie in (0, 1]")
        if self.d.a != self.a:
            raise InputError("density function shape differs from a")

    @property
    def k(self):
        return self.d.k

    @property
    def admissible(self):
        """Whether epsilon meets the configured threshold eps_def(max a, k)."""
        return self.epsilon <= self.eps_def(max(self.a), self.k)


# ---------------------------------------------------------------------------
# equitable families

@dataclass
class EquitableReport:
    ok: bool
    eta: Fraction
    violations: list
    exact: bool
    flags: list = field(default_factory=list)


def _size_violations(fam, lam):
    n, a1 = fam.n, fam.a[0]
    out = []
    sizes = [len(p) for p in fam.parts]
    if lam is None:
        lo = n // a1
        for s, size in enumerate(sizes, start=1):
            if size not in (lo, lo + 1):
                out.append(f"size: class {s} has size {size}, not in {{{lo}, {lo + 1}}}")
    else:
        lam = as_fraction(lam)
        for s, size in enumerate(sizes, start=1):
            if abs(Fraction(size) - Fraction(n, a1)) > lam * Fraction(n, a1):
                out.append(f"size: class {s} has size {size}, outside (1 +- {lam}) n/a1")
    return out


def check_equitable(fam, epsilon, lam=None, method="auto", trials=SAMPLED_TRIALS, seed=0):
    """Size balance and class regularity of a family; lam=None demands an equipartition."""
    eps = as_fraction(epsilon)
    violations = _size_violations(fam, lam)
    exact = True
    for j in range(2, fam.k):
        target = Fraction(1, fam.a[j - 1])
        for i, x in enumerate(address_space(j, j - 1, fam.a)):
            poly = fam.polyad(x)
            for b in range(1, fam.a[j - 1] + 1):
                rep = check_regular(fam.cell(x, b), poly, eps, target, method, trials,
                                    derive_seed(seed, (j << 40) + (i << 8) + b))
                exact &= rep.exact
                if rep.refuted:
                    violations.append(f"regularity: class ({x}, {b}) is not ({eps}, 1/{fam.a[j - 1]})-regular")
    return EquitableReport(not violations, Fraction(1, fam.a[0]), violations, exact)


def check_equitable_partition_of(fam, H, epsilon, d, lam=None, method="auto",
                                 trials=SAMPLED_TRIALS, seed=0):
    """Equitability plus (eps, d(x))-regularity of H on every top-level polyad."""
    rep = check_equitable(fam, epsilon, lam, method, trials, seed)
    eps = as_fraction(epsilon)
    for i, x in enumerate(address_space(fam.k, fam.k - 1, fam.a)):
        poly = fam.polyad(x)
        r = check_regular(H, poly, eps, d[x], method, trials, derive_seed(seed, 7919 + i))
        rep.exact &= r.exact
        if r.refuted:
            rep.violations.append(f"H is not ({eps}, {d[x]})-regular on polyad {x}")
    rep.ok = not rep.violations
    return rep


def density_function_of(H, fam):
    """Exact relative densities of H on every top-level polyad of the family."""
    return DensityFunction(fam.k, fam.a, {x: rel_density(H, fam.polyad(x))
                                          for x in address_space(fam.k, fam.k - 1, fam.a)})


def _equipartitions(n, a1):
    """All labelled partitions of range(n) into a1 classes of sizes floor/ceil(n/a1)."""
    base, extra = divmod(n, a1)
    sizes_options = set(itertools.permutations([base + 1] * extra + [base] * (a1 - extra)))
    for sizes in sorted(sizes_options):
        def rec(remaining, idx):
            if idx == a1:
                yield []
                return
            for chosen in itertools.combinations(remaining, sizes[idx]):
                rest = [v for v in remaining if v not in chosen]
                for tail in rec(rest, idx + 1):
                    yield [chosen] + tail
        yield from rec(list(range(n)), 0)


def _class_assignments(partition, k, a, limit):
    """Every family over a fixed vertex partition (k >= 3), via labelled class choices."""
    if k == 2:
        yield build_family(partition, {}, 2, a)
        return
    # only k = 3 is supported for class search: label every crossing pair
    if k != 3:
        raise GuardError("class-assignment search beyond k = 3", k, 3)
    probe = FamilyOfPartitions(k, a, partition, {})
    keys = []
    for x in address_space(2, 1, a):
        keys.append((x, probe.polyad(x).cliques(2)))
    total = a[1] ** sum(len(c) for _, c in keys)
    if total > limit:
        raise GuardError("class-assignment search", total, limit)
    flat = [(x, e) for x, cl in keys for e in cl]
    for labels in itertools.product(range(1, a[1] + 1), repeat=len(flat)):
        classes = {}
        for (x, e), b in zip(flat, labels):
            classes.setdefault((x, b), set()).add(e)
        try:
            yield build_family(partition, classes, k, a)
        except Exception:
            continue


def satisfies_instance(H, R, mode="search", witness=None, lam=None, limit=10**6):
    """Whether some (eps, a, d)-equitable partition of H exists (search) or ``witness`` is one.

    Returns (verdict, family or None). Search is exhaustive and exact; it is
    guarded to n <= 12 and max(a) <= 3.
    """
    if mode == "witness":
        if witness is None:
            raise InputError("witness mode needs a family")
        rep = check_equitable_partition_of(witness, H, R.epsilon, R.d, lam)
        return rep.ok, (witness if rep.ok else None)
    if H.n > 12 or max(R.a) > 3:
        raise GuardError("instance search (n <= 12, max a <= 3)", max(H.n, max(R.a)), 12)
    if H.k != R.k:
        raise InputError("instance and hypergraph differ in uniformity")
    for parts in _equipartitions(H.n, R.a[0]):
        partition = VertexPartition(H.n, tuple(parts))
        for fam in _class_assignments(partition, H.k, R.a, limit):
            rep = check_equitable_partition_of(fam, H, R.epsilon, R.d, lam, method="exact")
            if rep.ok:
                return True, fam
    return False, None


# ---------------------------------------------------------------------------
# randomized procedures

def slice_sets(members, probs, rng):
    """Assign each member independently: class i with probability probs[i-1], else class 0."""
    members = list(members)
    cum = np.cumsum([float(p) for p in probs]) if probs else np.zeros(0)
    u = rng.random(len(members))
    cls = np.searchsorted(cum, u, side="right") + 1
    cls[cls > len(probs)] = 0
    out = [[] for _ in range(len(probs) + 1)]
    for m, c in zip(members, cls.tolist()):
        out[c].append(m)
    return out


def slicing(Hk, polyad, d, probs, epsilon, seed, trials=SAMPLED_TRIALS, budget=RETRY_BUDGET,
            check_pre=False):
    """Split Hk into H_0, ..., H_s at random; H_i should be (3 eps, p_i d)-regular.

    Returns [H_0, H_1, ..., H_s] of the same kind as ``Hk``.
    """
    k = polyad.level + 1
    d, eps = as_fraction(d), as_fraction(epsilon)
    probs = [as_fraction(p) for p in probs]
    if any(p < 0 for p in probs) or sum(probs) > 1:
        raise PreconditionError("slice probabilities must be non-negative with sum <= 1")
    if d < 2 * eps:
        raise PreconditionError("slicing needs d >= 2 eps")
    if check_pre:
        pre = check_regular(Hk, polyad, eps, d, seed=derive_seed(seed, 99))
        if pre.refuted:
            raise PreconditionError("input is not (eps, d)-regular", )
    ranks = _ranks(Hk, k)
    targets = [(1 - sum(probs)) * d] + [p * d for p in probs]
    last = None
    for attempt in range(budget):
        rng = make_rng(derive_seed(seed, attempt))
        pieces = slice_sets(ranks.tolist(), probs, rng)
        out = [_rebuild(Hk, np.array(p, dtype=np.int64), k) for p in pieces]
        bad = []
        for i, (piece, target) in enumerate(zip(out, targets)):
            if i == 0 and sum(probs) == 1:
                continue
            rep = check_regular_sampled(piece, polyad, 3 * eps, target, trials,
                                        derive_seed(seed, 500 + 31 * attempt + i))
            if rep.refuted:
                bad.append(i)
        if not bad:
            return out
        last = bad
    raise PostconditionError("slicing: retry budget exhausted", {"refuted_slices": last})


def improve_regularity(classes, polyad, d, epsilon, delta, nu, seed, trials=SAMPLED_TRIALS,
                       budget=RETRY_BUDGET, check_pre=True):
    """Redistribute a random delta^(1/3) fraction of the clique set among the classes.

    Returns [G_1, ..., G_s] partitioning K_k(polyad) with |G_i ^ H_i| <= nu m^k
    (checked exactly, m the smallest class size) and G_i not refuted as
    (eps, d_i)-regular by the sampled check.
    """
    k = polyad.level + 1
    d = [as_fraction(x) for x in d]
    eps, delta, nu = as_fraction(epsilon), as_fraction(delta), as_fraction(nu)
    if len(d) != len(classes):
        raise PreconditionError("need one target density per class")
    if sum(d) != 1:
        raise PreconditionError("target densities must sum to 1")
    table = CliqueTable(polyad, k)
    m = min(len(p) for p in polyad.parts)
    if table.size < eps * m ** k:
        raise PreconditionError("clique set smaller than eps m^k")
    ranks = [_ranks(c, k) for c in classes]
    allr = np.sort(np.concatenate(ranks)) if ranks else np.zeros(0, dtype=np.int64)
    if allr.size != table.size or not np.array_equal(allr, np.sort(table.sorted_ranks)):
        raise PreconditionError("classes must partition the clique set of the polyad")
    if check_pre:
        for i, (c, di) in enumerate(zip(classes, d)):
            rep = check_regular_sampled(c, polyad, eps + delta, di, trials, derive_seed(seed, 77 + i))
            if rep.refuted:
                raise PreconditionError(f"class {i + 1} is not ({eps + delta}, {di})-regular")
    if delta == 0:
        return list(classes)
    pool_p = float(delta) ** (1.0 / 3.0)
    cum = np.cumsum([float(x) for x in d])
    owner = np.zeros(table.size, dtype=np.int64)
    pos = {r: i for i, r in enumerate(table.sorted_ranks.tolist())}
    order = np.array([pos[r] for r in np.concatenate(ranks).tolist()], dtype=np.int64)
    lab = np.concatenate([np.full(r.size, i) for i, r in enumerate(ranks)])
    owner[order] = lab
    bound = nu * m ** k
    last = None
    for attempt in range(budget):
        rng = make_rng(derive_seed(seed, attempt))
        pool = rng.random(table.size) < pool_p
        new_owner = np.minimum(np.searchsorted(cum, rng.random(table.size), side="right"), len(d) - 1)
        g_owner = np.where(pool, new_owner, owner)
        out, edits = [], []
        for i in range(len(d)):
            gi = table.sorted_ranks[g_owner == i]
            out.append(_rebuild(classes[i], gi, k))
            edits.append(int(np.setxor1d(gi, ranks[i]).size))
        if any(e > bound for e in edits):
            last = {"edits": edits, "bound": str(bound)}
            continue
        refuted = [i for i in range(len(d))
                   if check_regular_sampled(out[i], polyad, eps, d[i], trials,
                                            derive_seed(seed, 300 + 17 * attempt + i)).refuted]
        if refuted:
            last = {"refuted": refuted}
            continue
        return out
    raise PostconditionError("improve_regularity: retry budget exhausted", last)


def adjust_to_density(H, fam, dH, dG, epsilon, nu, seed, budget=RETRY_BUDGET, trials=SAMPLED_TRIALS,
                      check=True):
    """Move H towards density function dG polyad by polyad.

    Per address: keep when |dH - dG| <= 2 eps; otherwise slice H (shrink) or
    the complement of H (grow) inside the polyad's clique set. Edges outside
    the crossing k-sets are kept. The result satisfies
    |H ^ G| <= (dist(dH, dG) + nu) C(n, k) exactly, and the family is not
    refuted as a (3 eps, a, dG)-equitable partition of G by the sampled check.
    """
    eps, nu = as_fraction(epsilon), as_fraction(nu)
    if check:
        rep = check_equitable_partition_of(fam, H, eps, dH, trials=trials, seed=derive_seed(seed, 5))
        if not rep.ok:
            raise PreconditionError("family is not an (eps, a, dH)-equitable partition of H: "
                                    + "; ".join(rep.violations[:3]))
    k = H.k
    bound = (dist(dH, dG) + nu) * H.total
    addresses = list(address_space(k, k - 1, fam.a))
    tables = {x: CliqueTable(fam.polyad(x), k) for x in addresses}
    last = None
    for attempt in range(budget):
        rng = make_rng(derive_seed(seed, attempt))
        keep = np.ones(H.ranks.size, dtype=bool)
        added = []
        for x in addresses:
            table = tables[x]
            h, g = dH[x], dG[x]
            if abs(h - g) <= 2 * eps or table.size == 0:
                continue
            inh = table.membership(H)
            if h > g + 2 * eps:
                ratio = g / h
                p1 = max(ratio, 1 - ratio)
                pieces = slice_sets(np.flatnonzero(inh).tolist(), [p1, 1 - p1], rng)
                kept = pieces[1] if ratio >= Fraction(1, 2) else pieces[2]
                drop = np.setdiff1d(np.flatnonzero(inh), np.array(kept, dtype=np.int64))
                keep &= ~np.isin(H.ranks, table.sorted_ranks[drop])
            else:
                ratio = (1 - g) / (1 - h)
                p1 = max(ratio, 1 - ratio)
                pieces = slice_sets(np.flatnonzero(~inh).tolist(), [p1, 1 - p1], rng)
                stay_out = pieces[1] if ratio >= Fraction(1, 2) else pieces[2]
                grow = np.setdiff1d(np.flatnonzero(~inh), np.array(stay_out, dtype=np.int64))
                added.append(table.sorted_ranks[grow])
        ranks = H.ranks[keep]
        if added:
            ranks = np.union1d(ranks, np.concatenate(added))
        G = Hypergraph(H.n, k, np.sort(ranks))
        edit = int(np.setxor1d(G.ranks, H.ranks).size)
        if edit > bound:
            last = {"edit": edit, "bound": str(bound)}
            continue
        if check:
            rep = check_equitable_partition_of(fam, G, 3 * eps, dG, trials=trials,
                                               seed=derive_seed(seed, 900 + attempt))
            if not rep.ok:
                last = {"violations": rep.violations[:3]}
                continue
        return G
    raise PostconditionError("adjust_to_density: retry budget exhausted", last)
