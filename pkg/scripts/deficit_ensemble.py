"""Deficit-to-squared-distance ratios over the seeded perturbation ensemble.

Prints per-direction ratios at eps = 1e-3 next to the second-variation prediction.
Usage: python3 scripts/deficit_ensemble.py [N a b [seed]]
"""

import sys

import numpy as np

from cknstab.params import make_params
from cknstab.stability import deficit_vs_distance


def main(argv):
    N, a, b = (int(argv[0]), float(argv[1]), float(argv[2])) if len(argv) >= 3 else (3, 0.0, 0.0)
    seed = int(argv[3]) if len(argv) >= 4 else 0
    P = make_params(N, a, b)
    rep = deficit_vs_distance(P, seed=seed)
    k = int(np.argmin(np.abs(rep.eps - 1e-3)))
    print(f"{P.describe()} seed={seed}: min ratio {rep.min_ratio:.4f} (doubled {rep.min_ratio_doubled:.4f})")
    for i, (got, want) in enumerate(zip(rep.ratios[:, k], rep.predicted)):
        print(f"  direction {i:2d}: e/d^2 = {got:.6f}  second variation {want:.6f}")
    print(f"max relative deviation {rep.oracle_rel_err:.2e}, pass={rep.passed}")


if __name__ == "__main__":
    main(sys.argv[1:])
