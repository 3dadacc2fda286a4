"""Families of partitions, the address space and polyads.

Labels of vertex classes and of j-graph classes are 1-based; vertices are
0-based. An address at level j over ell labels is stored as the sorted label
tuple ``x1`` plus, for each i in 2..j, the vector of class labels of the
i-subsets of ``x1`` in lexicographic order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .errors import FamilyError, InputError, PostconditionError
from .hypergraph import VertexPartition, crossing_sets, ranks_of
from .rng import derive_seed, make_rng


@lru_cache(maxsize=None)
def subset_index(ell, i):
    """Position tuple -> index among the i-subsets of range(ell) in lexicographic order."""
    return {c: idx for idx, c in enumerate(itertools.combinations(range(ell), i))}


@dataclass(frozen=True, order=True)
class AddressVector:
    x1: tuple
    levels: tuple = ()
    j: int = 1

    def __post_init__(self):
        x1 = tuple(int(v) for v in self.x1)
        levels = tuple(tuple(int(v) for v in lv) for lv in self.levels)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "levels", levels)
        if any(b <= a for a, b in zip(x1, x1[1:])):
            raise InputError(f"x1 must be strictly increasing: {x1}")
        if len(levels) != max(self.j - 1, 0):
            raise InputError(f"level-{self.j} address needs {max(self.j - 1, 0)} label vectors")
        for i, lv in enumerate(levels, start=2):
            if len(lv) != math.comb(len(x1), i):
                raise InputError(f"x^({i}) must have C({len(x1)},{i}) entries")

    @property
    def ell(self):
        return len(self.x1)

    def entry(self, i, labels):
        """x^(i) at the i-subset ``labels`` of x1 (for i = 1 the label itself)."""
        labels = tuple(sorted(labels))
        if i == 1:
            return labels[0]
        pos = tuple(self.x1.index(v) for v in labels)
        return self.levels[i - 2][subset_index(self.ell, i)[pos]]

    def restrict(self, labels, j):
        """The unique y <= self with y1* = labels at level j."""
        labels = tuple(sorted(labels))
        levels = tuple(tuple(self.entry(i, c) for c in itertools.combinations(labels, i))
                       for i in range(2, j + 1))
        return AddressVector(labels, levels, j)

    def truncate(self, j):
        return AddressVector(self.x1, self.levels[: max(j - 1, 0)], j)

    def fits(self, a):
        if self.j > 0 and len(a) < self.j:
            return False
        if not all(1 <= v <= a[0] for v in self.x1):
            return False
        return all(1 <= v <= a[i - 1] for i, lv in enumerate(self.levels, start=2) for v in lv)

    def to_dict(self):
        return {"x1": list(self.x1), "j": self.j,
                "levels": {str(i): list(lv) for i, lv in enumerate(self.levels, start=2)}}

    @classmethod
    def from_dict(cls, obj):
        j = int(obj["j"])
        lv = obj.get("levels", {})
        return cls(tuple(obj["x1"]), tuple(tuple(lv[str(i)]) for i in range(2, j + 1)), j)

    def __str__(self):
        parts = [",".join(map(str, self.x1))]
        parts += ["".join(map(str, lv)) for lv in self.levels]
        return "(" + "|".join(parts) + ")"


def address_space_size(ell, j, a):
    return math.comb(a[0], ell) * math.prod(a[i - 1] ** math.comb(ell, i) for i in range(2, j + 1))


def address_space(ell, j, a):
    """Enumerate A(ell, j, a) in canonical order."""
    a = tuple(a)
    if ell < j + 1 or j < 0:
        raise InputError(f"address space needs ell >= j + 1 (got ell={ell}, j={j})")
    if len(a) < max(j, 1):
        raise InputError(f"part vector {a} too short for level {j}")
    ranges = [list(itertools.product(range(1, a[i - 1] + 1), repeat=math.comb(ell, i)))
              for i in range(2, j + 1)]
    for x1 in itertools.combinations(range(1, a[0] + 1), ell):
        for levels in itertools.product(*ranges):
            yield AddressVector(x1, levels, j)


def restrictions(x, ell, j):
    """All y <= x with ell labels at level j (exactly C(x.ell, ell) of them)."""
    return [x.restrict(c, j) for c in itertools.combinations(x.x1, ell)]


def is_restriction(y, x):
    if y.ell > x.ell or y.j > x.j:
        return False
    if not set(y.x1) <= set(x.x1):
        return False
    for i in range(2, y.j + 1):
        for c in itertools.combinations(y.x1, i):
            if y.entry(i, c) != x.entry(i, c):
                return False
    return True


# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Polyad:
    """The j-graph attached to an address, together with the vertex classes it spans."""

    level: int
    address: AddressVector
    parts: tuple          # sorted vertex tuples, one per label of address.x1
    edges: frozenset      # sorted j-tuples

    @cached_property
    def edge_ranks(self):
        if not self.edges:
            return np.zeros(0, dtype=np.int64)
        arr = np.array(sorted(self.edges), dtype=np.int64)
        return np.unique(ranks_of(arr, int(arr.max()) + 1, self.level))

    @property
    def vertices(self):
        return sorted(v for p in self.parts for v in p)

    def clique_array(self, size=None):
        """K_size of the polyad (default level + 1) as a row-sorted int array."""
        size = size or self.level + 1
        out = []
        for chosen in itertools.combinations(range(len(self.parts)), size):
            groups = [np.asarray(self.parts[c], dtype=np.int64) for c in chosen]
            if any(g.size == 0 for g in groups):
                continue
            grid = np.stack(np.meshgrid(*groups, indexing="ij"), axis=-1).reshape(-1, size)
            grid = np.sort(grid, axis=1)
            if self.level >= 2:
                n = int(grid.max()) + 1
                ok = np.ones(grid.shape[0], dtype=bool)
                for sub in itertools.combinations(range(size), self.level):
                    ok &= np.isin(ranks_of(grid[:, list(sub)], n, self.level), self.edge_ranks)
                grid = grid[ok]
            out.append(grid)
        if not out:
            return np.zeros((0, size), dtype=np.int64)
        return np.concatenate(out)

    def cliques(self, size=None):
        return [tuple(int(v) for v in row) for row in self.clique_array(size)]


@dataclass(frozen=True, eq=False)
class FamilyOfPartitions:
    k: int
    a: tuple
    partition: VertexPartition
    classes: dict = field(repr=False)   # (address at level j-1, b) -> frozenset of j-sets

    def __eq__(self, other):
        return (isinstance(other, FamilyOfPartitions) and self.k == other.k and self.a == other.a
                and self.partition == other.partition and self.classes == other.classes)

    @property
    def n(self):
        return self.partition.n

    @property
    def parts(self):
        return self.partition.parts

    @cached_property
    def part_of(self):
        return self.partition.part_of

    @cached_property
    def label_of(self):
        """j -> {crossing j-set: class label} for j in 2..k-1."""
        out = {}
        for (x, b), edges in self.classes.items():
            lab = out.setdefault(x.ell, {})
            for e in edges:
                lab[e] = b
        return out

    def cell(self, x, b):
        """P^(j)(x, b); the empty set for trivial addresses."""
        if x.ell == 1:
            return frozenset((v,) for v in self.parts[x.x1[0] - 1]) if b == x.x1[0] else frozenset()
        return self.classes.get((x, b), frozenset())

    def address_of(self, L):
        L = tuple(sorted(int(v) for v in L))
        labs = [int(self.part_of[v]) for v in L]
        if len(set(labs)) != len(L):
            raise InputError(f"{L} is not a crossing set")
        by_label = dict(zip(labs, L))
        x1 = tuple(sorted(labs))
        j = min(self.k - 1, len(L) - 1)
        levels = []
        for i in range(2, j + 1):
            vec = []
            for c in itertools.combinations(x1, i):
                I = tuple(sorted(by_label[s] for s in c))
                vec.append(self.label_of[i][I])
            levels.append(tuple(vec))
        return AddressVector(x1, tuple(levels), j)

    def polyad(self, x):
        """P^(j)(x) for an address at level j >= 1 over ell >= j + 1 labels."""
        j = x.j
        if j < 1 or x.ell < j + 1:
            raise InputError(f"polyad needs an address at level >= 1 with ell >= j + 1, got {x}")
        parts = tuple(tuple(sorted(self.parts[s - 1])) for s in x.x1)
        if j == 1:
            edges = frozenset((v,) for p in parts for v in p)
        else:
            edges = set()
            for z in restrictions(x, j, j - 1):
                edges |= self.cell(z, x.entry(j, z.x1))
            edges = frozenset(edges)
        return Polyad(j, x, parts, edges)

    def polyad_complex(self, x):
        """[P^(1), ..., P^(j)] of x; each level underlies the next."""
        out = [self.polyad(x.truncate(i)) for i in range(1, x.j + 1)]
        for lower, upper in zip(out, out[1:]):
            assert set(upper.edges) <= set(lower.cliques(upper.level)), "complex levels do not nest"
        return out

    def is_empty_address(self, x):
        return self.polyad(x).clique_array(x.j + 1).shape[0] == 0

    def crossing(self, j):
        return crossing_sets(self.partition, j)


def build_family(partition, classes, k, a=None, polyads=None):
    """Assemble and validate a family of partitions.

    ``classes`` maps (x at level j - 1 over j labels, b) to an iterable of
    j-sets for every j in 2..k-1. ``polyads`` optionally maps level-j
    addresses over j + 1 labels to claimed polyad edge sets, which are then
    checked against the union of classes (FP3).
    """
    if not isinstance(partition, VertexPartition):
        partition = VertexPartition(sum(len(p) for p in partition), tuple(partition))
    a = tuple(a) if a is not None else (partition.size,)
    if len(a) != max(k - 1, 1) or a[0] != partition.size:
        raise InputError(f"part vector {a} does not match k={k} and {partition.size} vertex classes")
    if a[0] < k:
        raise InputError(f"a family for k={k} needs at least {k} vertex classes")
    for s, p in enumerate(partition.parts, start=1):
        if not p:
            raise FamilyError("FP1", 1, AddressVector((s,), (), 0), s, "empty vertex class")
    norm = {}
    for (x, b), edges in classes.items():
        if not isinstance(x, AddressVector):
            raise InputError(f"class key {x!r} is not an address")
        j = x.ell
        if not (2 <= j <= k - 1) or x.j != j - 1 or not x.fits(a) or not 1 <= b <= a[j - 1]:
            raise InputError(f"class key ({x}, {b}) outside the address space")
        norm[(x, int(b))] = frozenset(tuple(sorted(int(v) for v in e)) for e in edges)

    fam = FamilyOfPartitions(k, a, partition, norm)
    for j in range(2, k):
        for x in address_space(j, j - 1, a):
            container = set(fam.polyad(x).cliques(j))
            seen = set()
            for b in range(1, a[j - 1] + 1):
                cell = norm.get((x, b), frozenset())
                if not cell:
                    raise FamilyError("FP1", j, x, b, "empty class")
                if seen & cell:
                    raise FamilyError("FP2", j, x, b, "class overlaps another class of the same polyad")
                if not cell <= container:
                    raise FamilyError("FP2", j, x, b, "class leaves the clique set of its polyad")
                seen |= cell
            if seen != container:
                raise FamilyError("FP2", j, x, None, "classes do not cover the clique set of the polyad")
    for x, claimed in (polyads or {}).items():
        actual = fam.polyad(x).edges
        if frozenset(tuple(sorted(e)) for e in claimed) != actual:
            raise FamilyError("FP3", x.j, x, None, "polyad differs from the union of its classes")
    return fam


def trivial_family(partition, k):
    """Family with a_j = 1 for j >= 2: every intermediate class is a full polyad clique set."""
    if not isinstance(partition, VertexPartition):
        partition = VertexPartition(sum(len(p) for p in partition), tuple(partition))
    a = (partition.size,) + (1,) * (k - 2)
    classes = {}
    for j in range(2, k):
        fam = FamilyOfPartitions(k, a, partition, dict(classes))
        for x in address_space(j, j - 1, a):
            classes[(x, 1)] = frozenset(fam.polyad(x).cliques(j))
    return build_family(partition, classes, k, a)


def family_classes(fam):
    """The class map of a family (inverse of build_family)."""
    return dict(fam.classes)


# ---------------------------------------------------------------------------
# refinement of set partitions

def _as_blocks(P):
    return [frozenset(c) for c in P if c]


def refines(A, B):
    """A refines B: each class of A sits in a class of B or outside the ground set of B."""
    A, B = _as_blocks(A), _as_blocks(B)
    ground_b = frozenset().union(*B) if B else frozenset()
    ground_a = frozenset().union(*A) if A else frozenset()
    if not ground_b <= ground_a:
        raise InputError("ground set of B must be contained in that of A")
    outside = ground_a - ground_b
    return all(c <= outside or any(c <= d for d in B) for c in A)


def nu_refines(A, B):
    """Least nu with A nu-refining B (best target per class, including the outside set)."""
    A, B = _as_blocks(A), _as_blocks(B)
    ground_a = frozenset().union(*A) if A else frozenset()
    ground_b = frozenset().union(*B) if B else frozenset()
    if not ground_b <= ground_a:
        raise InputError("ground set of B must be contained in that of A")
    if not ground_a:
        return Fraction(0)
    targets = B + [ground_a - ground_b]
    miss = sum(len(c) - max(len(c & t) for t in targets) for c in A)
    return Fraction(miss, len(ground_a))


def family_refines(Q, P):
    """Level-wise refinement of two families (vertex classes, then each j-level)."""
    if not refines(Q.parts, P.parts):
        return False
    for j in range(2, min(Q.k, P.k)):
        qa = [c for (x, _), c in Q.classes.items() if x.ell == j]
        pa = [c for (x, _), c in P.classes.items() if x.ell == j]
        if not refines(qa, pa):
            return False
    return True


def refine_family(fam, b, seed, epsilon=0.05, trials=60, budget=20, check=True):
    """A family refining ``fam`` with part vector ``b`` (a_i divides b_i).

    Vertex classes are split evenly at random; each higher level is cut by
    slicing the clique set of every new polyad with equal probabilities
    inside each old class. Sliced classes are checked for
    (3 epsilon, 1/b_j)-regularity with the sampled refuter.
    """
    from .regularity import check_regular_sampled, slice_sets

    b = tuple(int(v) for v in b)
    if len(b) != len(fam.a) or any(v % u for u, v in zip(fam.a, b)):
        raise InputError(f"each a_i must divide b_i (a={fam.a}, b={b})")
    if b == fam.a:
        return fam
    k = fam.k
    last = None
    for attempt in range(budget):
        rng = make_rng(derive_seed(seed, attempt))
        split = b[0] // fam.a[0]
        parts = []
        for p in fam.parts:
            verts = np.array(sorted(p))
            rng.shuffle(verts)
            parts.extend(sorted(int(v) for v in chunk) for chunk in np.array_split(verts, split))
        if any(len(p) == 0 for p in parts):
            raise InputError("vertex classes too small to split")
        partition = VertexPartition(fam.n, tuple(parts))
        classes = {}
        current = FamilyOfPartitions(k, b, partition, {})
        failures = []
        for j in range(2, k):
            ratio = b[j - 1] // fam.a[j - 1]
            probs = [Fraction(1, ratio)] * ratio
            for x in address_space(j, j - 1, b):
                poly = current.polyad(x)
                groups = {}
                for e in poly.cliques(j):
                    groups.setdefault(fam.label_of.get(j, {}).get(e), []).append(e)
                for old, members in groups.items():
                    base = 0 if old is None else (old - 1) * ratio
                    count = ratio if old is not None else b[j - 1]
                    pr = probs if old is not None else [Fraction(1, count)] * count
                    sliced = slice_sets(members, pr, rng)
                    for i, chunk in enumerate(sliced[1:], start=1):
                        key = (x, base + i)
                        classes[key] = classes.get(key, frozenset()) | frozenset(chunk)
            current = FamilyOfPartitions(k, b, partition, dict(classes))
        try:
            out = build_family(partition, classes, k, b)
        except FamilyError as err:
            last = str(err)
            continue
        if check:
            for (x, lab), cell in out.classes.items():
                poly = out.polyad(x)
                rep = check_regular_sampled(cell, poly, 3 * epsilon, Fraction(1, b[x.ell - 1]),
                                            trials, derive_seed(seed, 1000 + attempt))
                if rep.refuted:
                    failures.append((str(x), lab))
            if failures:
                last = f"classes refuted: {failures[:5]}"
                continue
        return out
    raise PostconditionError("refine_family: retry budget exhausted", {"last": last})
