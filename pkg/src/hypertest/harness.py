"""Planted fixtures, serialisation, the trial runner and calibration sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InputError, PostconditionError
from .hypergraph import Hypergraph, VertexPartition, make_hypergraph, unrank_many
from .partitions import AddressVector, address_space, build_family, trivial_family
from .regularity import DensityFunction, check_equitable_partition_of
from .rng import as_fraction, derive_seed, make_rng
from .testers import TesterReport

SCHEMA = 1


def frac_str(x):
    x = as_fraction(x)
    return f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# planted fixtures

@dataclass
class PlantedFixtureSpec:
    n: int
    k: int
    a: tuple
    density: DensityFunction | None = None
    grid: int | None = None          # random densities j / grid when no density is given
    lam: Fraction | None = None      # None: exact equipartition
    epsilon: Fraction = Fraction(1, 5)
    check: bool = True

    def __post_init__(self):
        self.a = tuple(int(v) for v in self.a)
        if self.a[0] > self.n:
            raise InputError("more vertex classes than vertices")
        if self.density is None and not self.grid:
            raise InputError("give a density function or a grid")
        if self.k >= 3 and any(v != 1 for v in self.a[1:]):
            raise InputError("planted fixtures for k >= 3 need a_i = 1 for i >= 2")


def equipartition(n, a1):
    return VertexPartition(n, tuple(tuple(int(v) for v in block)
                                    for block in np.array_split(np.arange(n), a1)))


def random_density(k, a, grid, rng):
    return DensityFunction(k, a, {x: Fraction(int(rng.integers(0, grid + 1)), grid)
                                  for x in address_space(k, k - 1, a)})


def plant_fixture(spec, seed, retries=20):
    """(H, family, d): each crossing k-set joins H with the density of its address."""
    rng = make_rng(seed)
    n, k, a = spec.n, spec.k, spec.a
    d = spec.density or random_density(k, a, spec.grid, rng)
    if d.k != k or d.a != a:
        raise InputError("density function shape differs from the fixture")
    partition = equipartition(n, a[0])
    fam = trivial_family(partition, k) if k >= 3 else build_family(partition, {}, 2, a)
    lookup = np.zeros((a[0] + 1,) * k)
    for x, v in d.items():
        lookup[x.x1] = float(v)
    labels = np.asarray(partition.part_of)
    total = math.comb(n, k)
    for attempt in range(retries):
        draw = make_rng(derive_seed(seed, attempt))
        chunks = []
        for start in range(0, total, 1 << 20):
            r = np.arange(start, min(total, start + (1 << 20)), dtype=np.int64)
            sets = unrank_many(r, n, k)
            lab = np.sort(labels[sets], axis=1)
            crossing = (lab[:, 1:] != lab[:, :-1]).all(axis=1)
            p = np.where(crossing, lookup[tuple(lab.T)], 0.0)
            chunks.append(r[draw.random(r.size) < p])
        H = Hypergraph(n, k, np.concatenate(chunks))
        if not spec.check:
            return H, fam, d
        rep = check_equitable_partition_of(fam, H, spec.epsilon, d, spec.lam,
                                           seed=derive_seed(seed, 1000 + attempt))
        if rep.ok:
            return H, fam, d
    raise PostconditionError("planted fixture failed validation", {"violations": rep.violations[:3]})


def random_complex_blocks(m, ell, density, seed):
    """Biadjacency blocks of a random ell-partite graph with m vertices per class.

    ``density`` is one value for every pair of classes or a mapping from
    0-based pairs (s, t), s < t, to values. Each pair is joined independently.
    """
    rng = make_rng(seed)
    blocks = {}
    for s in range(ell):
        for t in range(s + 1, ell):
            p = density[(s, t)] if isinstance(density, dict) else density
            blocks[(s, t)] = rng.random((m, m)) < float(p)
    return blocks


# ---------------------------------------------------------------------------
# serialisation

def hypergraph_to_dict(H):
    return {"n": H.n, "k": H.k, "edges": [list(e) for e in H.edges], "schema": SCHEMA}


def hypergraph_from_dict(obj):
    try:
        return make_hypergraph(int(obj["n"]), int(obj["k"]), [tuple(e) for e in obj["edges"]])
    except (KeyError, TypeError) as err:
        raise InputError(f"malformed hypergraph document: {err}") from err


def family_to_dict(fam):
    classes = []
    for (x, b) in sorted(fam.classes, key=lambda kb: (kb[0].ell, kb[0], kb[1])):
        classes.append({"level": x.ell, "address": x.to_dict(), "b": b,
                        "edges": [list(e) for e in sorted(fam.classes[(x, b)])]})
    return {"k": fam.k, "a": list(fam.a), "vertex_parts": fam.partition.sorted_parts(),
            "classes": classes, "schema": SCHEMA}


def family_from_dict(obj):
    try:
        parts = [tuple(p) for p in obj["vertex_parts"]]
        partition = VertexPartition(sum(len(p) for p in parts), tuple(parts))
        classes = {(AddressVector.from_dict(c["address"]), int(c["b"])): [tuple(e) for e in c["edges"]]
                   for c in obj["classes"]}
        return build_family(partition, classes, int(obj["k"]), tuple(obj["a"]))
    except (KeyError, TypeError) as err:
        raise InputError(f"malformed family document: {err}") from err


def density_to_dict(d):
    return {"k": d.k, "a": list(d.a), "schema": SCHEMA,
            "values": [{"address": x.to_dict(), "d": frac_str(v)} for x, v in d.items()]}


def density_from_dict(obj):
    try:
        values = {AddressVector.from_dict(v["address"]): Fraction(v["d"]) for v in obj["values"]}
        return DensityFunction(int(obj["k"]), tuple(obj["a"]), values)
    except (KeyError, TypeError, ValueError) as err:
        raise InputError(f"malformed density document: {err}") from err


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise InputError(f"cannot read {path}: {err.strerror}") from err
    except json.JSONDecodeError as err:
        raise InputError(f"{path} is not valid JSON: {err}") from err


def write_text(path, text):
    if path in (None, "-"):
        print(text, end="")
        return
    with open(path, "w") as fh:
        fh.write(text)


def report_from_dict(obj):
    return TesterReport(obj["property"], obj["n"], obj["q"], obj["trials"], obj["accepts"],
                        obj["seed"], list(obj.get("flags", [])))


REPORT_COLUMNS = ["property", "n", "q", "trials", "accepts", "freq", "wilson_lo", "wilson_hi",
                  "seed", "flags", "schema"]


def reports_to_csv(rows, extra=()):
    """CSV with one line per report dict; ``extra`` names leading parameter columns."""
    buf = io.StringIO()
    cols = list(extra) + REPORT_COLUMNS
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        flat = dict(row)
        flat["wilson_lo"], flat["wilson_hi"] = row["wilson95"]
        flat["flags"] = ";".join(row["flags"])
        writer.writerow([_csv_value(flat.get(c, "")) for c in cols])
    return buf.getvalue()


def _csv_value(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Fraction):
        return frac_str(v)
    return v


# ---------------------------------------------------------------------------
# trials

def thread_count():
    raw = os.environ.get("HYPERTEST_THREADS")
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError as err:
            raise InputError("HYPERTEST_THREADS must be a positive integer") from err
    return cap


def run_trials(tester, trials, seed, threads=None):
    """Decisions of ``tester(derive_seed(seed, i))`` for i < trials, in index order."""
    if trials < 1:
        raise InputError("trials must be at least 1")
    threads = min(threads or thread_count(), trials)
    seeds = [derive_seed(seed, i) for i in range(trials)]
    if threads <= 1:
        return [tester(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(tester, seeds))


def summarise(name, n, q, decisions, seed, flags=()):
    accepts = sum(1 for dcs in decisions if bool(dcs))
    all_flags = list(flags)
    for dcs in decisions:
        all_flags.extend(getattr(dcs, "flags", []) or [])
    return TesterReport(name, n, q, len(decisions), accepts, seed, sorted(set(all_flags)),
                        [len(getattr(dcs, "sample", ()) or ()) for dcs in decisions])


@dataclass
class CalibrationRow:
    value: object
    report: TesterReport


@dataclass
class Calibration:
    parameter: str
    rows: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def to_csv(self):
        dicts = []
        for row in self.rows:
            dct = row.report.to_dict()
            dct[self.parameter] = frac_str(row.value) if isinstance(row.value, Fraction) else row.value
            dicts.append(dct)
        text = reports_to_csv(dicts, extra=[self.parameter])
        for flag in self.flags:
            text += f"# {flag}\n"
        return text


def calibrate(name, parameter, grid, make_tester, n, q, trials, seed, expect=None):
    """Acceptance frequency per grid value.

    ``make_tester(value)`` returns a seed -> Decision callable. ``expect`` is
    "increasing" or "decreasing"; a flag is recorded whenever a step moves
    against it by more than the two Wilson half-widths combined.
    """
    grid = list(grid)
    if not grid:
        raise InputError("calibration grid is empty")
    out = Calibration(parameter)
    for i, value in enumerate(grid):
        decisions = run_trials(make_tester(value), trials, derive_seed(seed, i))
        out.rows.append(CalibrationRow(value, summarise(name, n, q, decisions, seed)))
    if expect:
        sign = 1 if expect == "increasing" else -1
        for prev, cur in zip(out.rows, out.rows[1:]):
            lo_p, hi_p = prev.report.wilson95
            lo_c, hi_c = cur.report.wilson95
            drop = sign * (prev.report.freq - cur.report.freq)
            slack = (hi_p - lo_p) / 2 + (hi_c - lo_c) / 2
            if drop > slack:
                out.flags.append(f"non-monotone step at {parameter}={cur.value}")
    return out
