"""k-uniform hypergraphs at desk scale.

Edges are stored as a sorted array of colexicographic ranks; a dense boolean
view over all C(n, k) ranks is materialised on demand when it fits in 2**24
entries. Everything exact in here is brute force with explicit guards.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .errors import GuardError, InputError
from .rng import as_fraction, make_rng

ENUM_LIMIT = 10**7
DENSE_LIMIT = 1 << 24
SIGNATURE_MAX_N = 10


# ---------------------------------------------------------------------------
# colex ranking

def colex_rank(kset):
    """Rank of a strictly increasing tuple: sum_i C(c_i, i+1)."""
    return sum(math.comb(c, i + 1) for i, c in enumerate(kset))


def colex_unrank(r, k):
    out = []
    for i in range(k, 0, -1):
        c = i - 1
        while math.comb(c + 1, i) <= r:
            c += 1
        out.append(c)
        r -= math.comb(c, i)
    return tuple(reversed(out))


@lru_cache(maxsize=64)
def binom_table(n, k):
    """table[v, i] = C(v, i) for v <= n, i <= k (int64)."""
    t = np.zeros((n + 1, k + 1), dtype=np.int64)
    for v in range(n + 1):
        for i in range(min(v, k) + 1):
            t[v, i] = math.comb(v, i)
    t.setflags(write=False)
    return t


def ranks_of(sets, n, k):
    """Vectorised colex ranks of an (m, k) array of row-sorted k-sets."""
    sets = np.asarray(sets, dtype=np.int64).reshape(-1, k)
    table = binom_table(max(n, k), k)
    r = np.zeros(sets.shape[0], dtype=np.int64)
    for i in range(k):
        r += table[sets[:, i], i + 1]
    return r


def unrank_many(ranks, n, k):
    ranks = np.asarray(ranks, dtype=np.int64).copy()
    table = binom_table(max(n, k), k)
    out = np.zeros((ranks.size, k), dtype=np.int64)
    for i in range(k, 0, -1):
        v = np.searchsorted(table[:, i], ranks, side="right") - 1
        out[:, i - 1] = v
        ranks -= table[v, i]
    return out


# ---------------------------------------------------------------------------
# types

@dataclass(frozen=True, eq=False)
class Hypergraph:
    n: int
    k: int
    ranks: np.ndarray

    def __post_init__(self):
        self.ranks.setflags(write=False)

    def __eq__(self, other):
        return (isinstance(other, Hypergraph) and self.n == other.n and self.k == other.k
                and np.array_equal(self.ranks, other.ranks))

    def __hash__(self):
        return hash((self.n, self.k, self.ranks.tobytes()))

    def __len__(self):
        return int(self.ranks.size)

    def __repr__(self):
        return f"Hypergraph(n={self.n}, k={self.k}, edges={len(self)})"

    def __contains__(self, edge):
        e = tuple(sorted(edge))
        if len(e) != self.k:
            return False
        r = colex_rank(e)
        i = np.searchsorted(self.ranks, r)
        return bool(i < self.ranks.size and self.ranks[i] == r)

    @property
    def total(self):
        return math.comb(self.n, self.k)

    @cached_property
    def edge_array(self):
        return unrank_many(self.ranks, self.n, self.k)

    @property
    def edges(self):
        return [tuple(int(v) for v in row) for row in self.edge_array]

    @cached_property
    def edge_set(self):
        return frozenset(self.edges)

    @cached_property
    def mask(self):
        if self.total > DENSE_LIMIT:
            raise GuardError("dense edge mask", self.total, DENSE_LIMIT)
        m = np.zeros(self.total, dtype=bool)
        m[self.ranks] = True
        m.setflags(write=False)
        return m

    @cached_property
    def adjacency(self):
        if self.k != 2:
            raise InputError("adjacency matrix is only defined for graphs (k = 2)")
        a = np.zeros((self.n, self.n), dtype=bool)
        e = self.edge_array
        a[e[:, 0], e[:, 1]] = True
        a[e[:, 1], e[:, 0]] = True
        a.setflags(write=False)
        return a

    def has_ranks(self, r):
        """Membership of an array of ranks."""
        r = np.asarray(r, dtype=np.int64)
        if self.total <= DENSE_LIMIT:
            return self.mask[r]
        if self.ranks.size == 0:
            return np.zeros(r.shape, dtype=bool)
        i = np.minimum(np.searchsorted(self.ranks, r), self.ranks.size - 1)
        return self.ranks[i] == r

    def has_sets(self, sets):
        """Membership of an (m, k) array of row-sorted k-sets."""
        return self.has_ranks(ranks_of(sets, self.n, self.k))

    def degrees(self):
        return np.bincount(self.edge_array.ravel(), minlength=self.n)


def from_ranks(n, k, ranks):
    r = np.unique(np.asarray(ranks, dtype=np.int64))
    return Hypergraph(n, k, r)


def make_hypergraph(n, k, edges):
    """Canonical sorted, deduplicated k-graph on [0, n)."""
    if k < 2:
        raise InputError(f"uniformity must be at least 2, got {k}")
    if n < 0:
        raise InputError("vertex count must be non-negative")
    rows = []
    for e in edges:
        t = tuple(int(v) for v in e)
        if len(t) != k:
            raise InputError(f"edge {t} does not have {k} vertices")
        if len(set(t)) != k:
            raise InputError(f"edge {t} repeats a vertex")
        if min(t) < 0 or max(t) >= n:
            raise InputError(f"edge {t} has a vertex outside [0, {n})")
        rows.append(sorted(t))
    if not rows:
        return Hypergraph(n, k, np.zeros(0, dtype=np.int64))
    return from_ranks(n, k, ranks_of(np.array(rows), n, k))


def empty_hypergraph(n, k):
    return make_hypergraph(n, k, [])


def complete_hypergraph(n, k):
    return Hypergraph(n, k, np.arange(math.comb(n, k), dtype=np.int64))


@dataclass(frozen=True)
class VertexPartition:
    """Ordered vertex classes; class i carries label i + 1. Empty classes are allowed."""

    n: int
    parts: tuple

    def __post_init__(self):
        parts = tuple(frozenset(int(v) for v in p) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        seen = set()
        for p in parts:
            if seen & p:
                raise InputError("vertex classes overlap")
            seen |= p
        if seen != set(range(self.n)):
            raise InputError("vertex classes must cover [0, n)")

    @property
    def size(self):
        return len(self.parts)

    @property
    def is_equipartition(self):
        sizes = [len(p) for p in self.parts]
        return max(sizes) - min(sizes) <= 1

    @cached_property
    def part_of(self):
        """Array mapping vertex -> 1-based class label."""
        lab = np.zeros(self.n, dtype=np.int64)
        for i, p in enumerate(self.parts):
            lab[list(p)] = i + 1
        lab.setflags(write=False)
        return lab

    def sorted_parts(self):
        return [sorted(p) for p in self.parts]


def partition_from_labels(labels, size=None):
    labels = [int(x) for x in labels]
    size = size or (max(labels) if labels else 0)
    parts = [[] for _ in range(size)]
    for v, lab in enumerate(labels):
        parts[lab - 1].append(v)
    return VertexPartition(len(labels), tuple(parts))


# ---------------------------------------------------------------------------
# basic operations

def sym_diff_size(G, H):
    if G.n != H.n or G.k != H.k:
        raise InputError("hypergraphs must share n and k")
    return int(np.setxor1d(G.ranks, H.ranks, assume_unique=True).size)


def sym_diff(G, H):
    if G.n != H.n or G.k != H.k:
        raise InputError("hypergraphs must share n and k")
    return Hypergraph(G.n, G.k, np.setxor1d(G.ranks, H.ranks, assume_unique=True))


def union(G, H):
    return Hypergraph(G.n, G.k, np.union1d(G.ranks, H.ranks))


def difference(G, H):
    return Hypergraph(G.n, G.k, np.setdiff1d(G.ranks, H.ranks, assume_unique=True))


def intersection(G, H):
    return Hypergraph(G.n, G.k, np.intersect1d(G.ranks, H.ranks, assume_unique=True))


def induced(H, Q):
    """H[Q] on vertices relabelled 0..|Q|-1 in increasing order; also returns the old labels."""
    Q = sorted({int(v) for v in Q})
    if Q and (Q[0] < 0 or Q[-1] >= H.n):
        raise InputError("vertex set has vertices outside [0, n)")
    q = len(Q)
    newid = np.full(H.n, -1, dtype=np.int64)
    newid[Q] = np.arange(q)
    e = newid[H.edge_array]
    keep = (e >= 0).all(axis=1)
    sub = from_ranks(q, H.k, ranks_of(e[keep], q, H.k)) if keep.any() else empty_hypergraph(q, H.k)
    return sub, tuple(Q)


def crossing_sets(parts, j):
    """All j-sets meeting every class at most once, as sorted tuples."""
    if isinstance(parts, VertexPartition):
        parts = parts.parts
    groups = [sorted(p) for p in parts if p]
    out = []
    for chosen in itertools.combinations(range(len(groups)), j):
        for combo in itertools.product(*(groups[c] for c in chosen)):
            out.append(tuple(sorted(combo)))
    out.sort(key=colex_rank)
    return out


def complete_partite(parts, k):
    n = parts.n if isinstance(parts, VertexPartition) else sum(len(p) for p in parts)
    return make_hypergraph(n, k, crossing_sets(parts, k))


def cliques(H, i):
    """All i-sets whose k-subsets are all edges of H (i >= k)."""
    k = H.k
    if i < k:
        raise InputError("clique order must be at least k; use crossing_sets for smaller sets")
    edges = H.edge_set
    out = []

    def extend(current):
        if len(current) == i:
            out.append(tuple(current))
            return
        start = current[-1] + 1 if current else 0
        for w in range(start, H.n - (i - len(current) - 1)):
            if len(current) >= k - 1:
                if not all(tuple(sorted(c + (w,))) in edges
                           for c in itertools.combinations(current, k - 1)):
                    continue
            extend(current + (w,))

    extend(())
    return out


# ---------------------------------------------------------------------------
# enumeration of q-subsets in vectorised blocks

def combination_blocks(n, q, block=1 << 16):
    """Yield arrays of row-sorted q-subsets of [0, n) covering every subset once."""
    if q == 0:
        yield np.zeros((1, 0), dtype=np.int64)
        return
    if q > n:
        return
    if q == 1:
        yield np.arange(n, dtype=np.int64)[:, None]
        return
    for prefix in itertools.combinations(range(n), q - 2):
        lo = prefix[-1] + 1 if prefix else 0
        m = n - lo
        if m < 2:
            continue
        a, b = np.triu_indices(m, 1)
        rows = np.empty((a.size, q), dtype=np.int64)
        if prefix:
            rows[:, : q - 2] = prefix
        rows[:, q - 2] = a + lo
        rows[:, q - 1] = b + lo
        yield rows


@lru_cache(maxsize=None)
def local_ksets(q, k):
    """The k-subsets of range(q) in colex order, as an array."""
    return np.array(sorted(itertools.combinations(range(q), k), key=colex_rank),
                    dtype=np.int64).reshape(-1, k)


def induced_census(H, q, limit=ENUM_LIMIT, labels=None):
    """Counter mapping the local edge mask of H[Q] to the number of q-subsets Q producing it.

    Bit r of a mask is set iff the r-th local k-subset (colex order) is an edge.
    With ``labels`` (one class label per vertex) only subsets meeting every
    class at most once are counted.
    """
    total = math.comb(H.n, q)
    if limit is not None and total > limit:
        raise GuardError("q-subset enumeration", total, limit)
    k = H.k
    loc = local_ksets(q, k)
    if loc.shape[0] > 62:
        raise GuardError("local edge mask width", loc.shape[0], 62)
    counts = Counter()
    labels = None if labels is None else np.asarray(labels)
    for rows in combination_blocks(H.n, q):
        if labels is not None:
            lab = np.sort(labels[rows], axis=1)
            rows = rows[(lab[:, 1:] != lab[:, :-1]).all(axis=1)]
            if rows.shape[0] == 0:
                continue
        masks = np.zeros(rows.shape[0], dtype=np.int64)
        for r, pos in enumerate(loc):
            hit = H.has_sets(rows[:, pos])
            masks |= hit.astype(np.int64) << r
        vals, cnt = np.unique(masks, return_counts=True)
        for v, c in zip(vals.tolist(), cnt.tolist()):
            counts[v] += c
    return counts


def hypergraph_from_mask(q, k, mask):
    loc = local_ksets(q, k)
    rows = [tuple(loc[r]) for r in range(loc.shape[0]) if mask >> r & 1]
    return make_hypergraph(q, k, rows)


def mask_of(H):
    loc = local_ksets(H.n, H.k)
    r = ranks_of(loc, H.n, H.k)
    hits = H.has_ranks(r)
    return sum(1 << i for i in np.flatnonzero(hits).tolist())


# ---------------------------------------------------------------------------
# isomorphism

def _refine(n, edges, incident, colour):
    """Iterated colour refinement; the result depends only on the isomorphism type."""
    classes = len(set(colour))
    while True:
        sig = []
        for v in range(n):
            nb = sorted(tuple(sorted(colour[u] for u in edges[e] if u != v)) for e in incident[v])
            sig.append((colour[v], tuple(nb)))
        order = {s: i for i, s in enumerate(sorted(set(sig)))}
        colour = [order[s] for s in sig]
        if len(order) == classes:
            return colour
        classes = len(order)


def _certificate(edges, colour, k, table):
    """Edge ranks under the relabelling given by a discrete colouring, largest first."""
    r = [sum(int(table[c, i + 1]) for i, c in enumerate(sorted(colour[v] for v in e)))
         for e in edges]
    return tuple(sorted(r, reverse=True))


def canonical_signature(H):
    """Byte string equal for two hypergraphs iff they are isomorphic (n <= 10).

    The canonical form is the smallest edge-rank bitstring among the
    relabellings reached by individualisation-refinement: vertices are
    coloured by iterated degree refinement, and ties are broken by trying
    every vertex of the first smallest non-singleton colour class in turn.
    """
    n, k = H.n, H.k
    if n > SIGNATURE_MAX_N:
        raise GuardError("canonical signature vertex count", n, SIGNATURE_MAX_N)
    width = math.comb(n, k)
    head = bytes([n, k])
    nbytes = (width + 7) // 8
    m = len(H)
    if m == 0 or m == width:
        best = 0 if m == 0 else (1 << width) - 1
        return head + best.to_bytes(nbytes, "big")
    edges = H.edges
    incident = [[i for i, e in enumerate(edges) if v in e] for v in range(n)]
    table = binom_table(n, k)
    best = None

    def search(colour):
        nonlocal best
        colour = _refine(n, edges, incident, colour)
        sizes = Counter(colour)
        if len(sizes) == n:
            cert = _certificate(edges, colour, k, table)
            if best is None or cert < best:
                best = cert
            return
        target = min((s, c) for c, s in sizes.items() if s > 1)[1]
        for v in range(n):
            if colour[v] == target:
                search([2 * c + (0 if u == v else 1) for u, c in enumerate(colour)])

    search([0] * n)
    value = sum(1 << x for x in best)
    return head + value.to_bytes(nbytes, "big")


@lru_cache(maxsize=200000)
def signature_of_mask(q, k, mask):
    return canonical_signature(hypergraph_from_mask(q, k, mask))


def is_isomorphic(G, H):
    return G.n == H.n and G.k == H.k and len(G) == len(H) and canonical_signature(G) == canonical_signature(H)


def all_isotypes(q, k):
    """One representative per isomorphism class of k-graphs on q vertices."""
    width = math.comb(q, k)
    if width > 16:
        raise GuardError("isotype enumeration (2^C(q,k))", 1 << width, 1 << 16)
    seen = {}
    for mask in range(1 << width):
        sig = signature_of_mask(q, k, mask)
        if sig not in seen:
            seen[sig] = hypergraph_from_mask(q, k, mask)
    return list(seen.values())


# ---------------------------------------------------------------------------
# densities

def _check_family(family):
    family = list(family)
    if not family:
        raise InputError("empty family")
    q, k = family[0].n, family[0].k
    for F in family:
        if F.n != q or F.k != k:
            raise InputError("family members must share vertex count and uniformity")
    return family, q, k


def pr_density(family, H, limit=ENUM_LIMIT):
    """Fraction of q-subsets Q with H[Q] isomorphic to a member of the family."""
    family, q, k = _check_family(family)
    if k != H.k:
        raise InputError("family uniformity differs from H")
    if q > H.n:
        raise InputError("family members have more vertices than H")
    wanted = {canonical_signature(F) for F in family}
    census = induced_census(H, q, limit)
    hits = sum(c for mask, c in census.items() if signature_of_mask(q, k, mask) in wanted)
    return Fraction(hits, math.comb(H.n, q))


def falling_factorial(n, r):
    return math.perm(n, r) if r <= n else 0


def _vertex_order(F):
    """Order F's vertices so that each one touches as many earlier edges as possible."""
    order, rest = [], set(range(F.n))
    edges = F.edges
    while rest:
        v = max(sorted(rest), key=lambda u: sum(1 for e in edges if u in e and
                                                   all(w in order or w == u for w in e)))
        order.append(v)
        rest.remove(v)
    return order


def inj_count(F, H, limit=ENUM_LIMIT, fixed=None):
    """Number of injective maps V(F) -> V(H) sending every edge of F to an edge of H.

    ``fixed`` optionally pins some F-vertices to H-vertices.
    """
    if F.k != H.k:
        raise InputError("F and H must share uniformity")
    ell, n, k = F.n, H.n, H.k
    if ell > n:
        return 0
    if limit is not None and falling_factorial(n, ell) > limit:
        raise GuardError("injective map enumeration", falling_factorial(n, ell), limit)
    fixed = dict(fixed or {})
    order = [v for v in _vertex_order(F) if v not in fixed]
    placed = list(fixed)
    # constraints checked when the last vertex of an F-edge is placed
    pending = {}
    done = set(fixed)
    for e in F.edges:
        if all(v in done for v in e):
            if tuple(sorted(fixed[v] for v in e)) not in H:
                return 0
    for v in order:
        done.add(v)
        pending[v] = [tuple(u for u in e if u != v) for e in F.edges
                      if v in e and all(u in done for u in e)]
    if len(set(fixed.values())) != len(fixed):
        return 0
    table = binom_table(n, k)
    allv = np.arange(n, dtype=np.int64)

    def candidates(assign, v, used):
        ok = np.ones(n, dtype=bool)
        ok[list(used)] = False
        for others in pending[v]:
            if k == 2:
                ok &= H.adjacency[assign[others[0]]]
                continue
            base = np.array([assign[u] for u in others], dtype=np.int64)
            rows = np.empty((n, k), dtype=np.int64)
            rows[:, : k - 1] = base
            rows[:, k - 1] = allv
            rows.sort(axis=1)
            r = np.zeros(n, dtype=np.int64)
            for i in range(k):
                r += table[rows[:, i], i + 1]
            okv = ok.copy()
            okv[base] = False
            ok = okv & H.has_ranks(np.where(okv, r, 0))
        return ok

    def rec(depth, assign, used):
        v = order[depth]
        ok = candidates(assign, v, used)
        if depth == len(order) - 1:
            return int(ok.sum())
        total = 0
        for w in np.flatnonzero(ok).tolist():
            assign[v] = w
            used.add(w)
            total += rec(depth + 1, assign, used)
            used.discard(w)
        assign.pop(v, None)
        return total

    if not order:
        return 1
    return rec(0, dict(fixed), set(fixed.values()))


def t_inj(F, H, limit=ENUM_LIMIT):
    return Fraction(inj_count(F, H, limit), falling_factorial(H.n, F.n))


# ---------------------------------------------------------------------------
# random fixtures

def random_kgraph(n, k, p, seed):
    p = float(as_fraction(p))
    rng = make_rng(seed)
    total = math.comb(n, k)
    if p <= 0:
        return empty_hypergraph(n, k)
    if p >= 1:
        return complete_hypergraph(n, k)
    chunks, start, step = [], 0, 1 << 22
    while start < total:
        size = min(step, total - start)
        chunks.append(np.flatnonzero(rng.random(size) < p) + start)
        start += size
    ranks = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
    return Hypergraph(n, k, ranks.astype(np.int64))


def random_edit(H, nu, seed):
    """Flip exactly floor(nu * C(n, k)) uniformly chosen k-set memberships."""
    flips = math.floor(as_fraction(nu) * H.total)
    if flips == 0:
        return H
    rng = make_rng(seed)
    chosen = rng.choice(H.total, size=flips, replace=False).astype(np.int64)
    return Hypergraph(H.n, H.k, np.setxor1d(H.ranks, np.sort(chosen)))


def random_subset(n, q, seed):
    rng = make_rng(seed)
    return np.sort(rng.choice(n, size=q, replace=False)).tolist()
