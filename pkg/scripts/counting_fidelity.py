"""Induced 3-vertex type densities of planted fixtures against the closed form.

For each seed this prints the worst sub-family gap |Pr - IC| over all
triples and over crossing triples only (one vertex per part), together with
the fraction of triples that are crossing. The closed form only describes
crossing triples, so the all-triples gap stays near the non-crossing share
times the type mismatch on those triples, whatever n is.

Usage: python3 scripts/counting_fidelity.py [--n 400] [--a1 8] [--seeds 5]
"""
import argparse
import time
from fractions import Fraction

from hypertest.counting import all_types, pr_vs_ic_check
from hypertest.harness import PlantedFixtureSpec, plant_fixture


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--a1", type=int, default=8)
    ap.add_argument("--grid", type=int, default=8)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()
    types = all_types(3, 2)
    print("seed,all_triples_gap,crossing_gap,crossing_fraction,seconds")
    for seed in range(args.seeds):
        start = time.perf_counter()
        H, fam, d = plant_fixture(PlantedFixtureSpec(args.n, 2, (args.a1,), grid=args.grid), seed)
        rep = pr_vs_ic_check(H, fam, d, types, Fraction(1, 20), limit=2 * 10 ** 7)
        print(f"{seed},{float(rep.max_subfamily_deviation):.4f},{float(rep.crossing_max_deviation):.4f},"
              f"{float(rep.crossing_fraction):.4f},{time.perf_counter() - start:.1f}")


if __name__ == "__main__":
    main()
