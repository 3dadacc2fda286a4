"""Acceptance curves of the max-cut and hom-density testers.

Max-cut: G(n, 1/2) and the balanced complete bipartite graph against a grid
of thresholds c. Hom-density: G(n, p) for a grid of p with F = K3 and target density 1/8;
the property is a window around the target, so acceptance peaks near p = 1/2.
Writes one CSV block per curve to stdout.

Usage: python3 scripts/calibration_sweeps.py [--n 300] [--trials 100]
"""
import argparse
from fractions import Fraction

from hypertest.harness import calibrate, equipartition
from hypertest.hypergraph import complete_hypergraph, complete_partite, random_kgraph
from hypertest.testers import TesterConfig, test_hom_density, test_maxcut


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    n, trials = args.n, args.trials
    alpha = Fraction(1, 5)

    cfg = TesterConfig(q=40)
    c_grid = [Fraction(i, 20) for i in range(6, 12)]
    for label, H in (("random", random_kgraph(n, 2, Fraction(1, 2), args.seed)),
                     ("bipartite", complete_partite(equipartition(n, 2), 2))):
        make = lambda c, H=H: (lambda s: test_maxcut(H, 2, c, alpha, cfg, s))
        cal = calibrate(f"maxcut-{label}", "c", c_grid, make, n, cfg.q, trials, args.seed, "decreasing")
        print(f"# max-cut tester on {label} graph")
        print(cal.to_csv())

    cfg = TesterConfig(q=60)
    K3 = complete_hypergraph(3, 2)
    target, delta = Fraction(1, 8), Fraction(1, 20)
    p_grid = [Fraction(i, 10) for i in range(2, 10)]
    lookup = {p: random_kgraph(n, 2, p, args.seed) for p in p_grid}
    make = lambda p: (lambda s: test_hom_density(lookup[p], K3, target, delta, Fraction(3, 10), cfg, s))
    cal = calibrate("hom-K3", "p", p_grid, make, n, cfg.q, trials, args.seed)
    print("# hom-density tester (K3, target 1/8) on G(n, p)")
    print(cal.to_csv())


if __name__ == "__main__":
    main()
