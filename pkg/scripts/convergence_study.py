"""Grid convergence of the bound-state eigenvalues and of ||Psi||^2_{H^1}.

Prints errors at h, h/2, h/4, the observed orders and the Richardson values.
Usage: python3 scripts/convergence_study.py [N a b]
"""

import sys

import numpy as np

from cknstab.functionals import bubble_energy
from cknstab.grid import ModeFunction, experiment_grid, h1_norm, observed_order, richardson
from cknstab.params import make_params
from cknstab.profiles import eval_psi
from cknstab.spectral import assemble, eigen_lowest, oracle_spectrum


def main(argv):
    N, a, b = (int(argv[0]), float(argv[1]), float(argv[2])) if len(argv) == 3 else (3, 0.0, 0.0)
    P = make_params(N, a, b)
    grids = [experiment_grid(P, h=h) for h in (0.04, 0.02, 0.01)]
    print(f"{P.describe()}  p={P.p:.6g}  c={P.c:.6g}")
    for mode in (0, 1):
        oracle = np.array(oracle_spectrum(P, mode))
        vals = [eigen_lowest(assemble(P, g, mode), len(oracle), vectors=False).eigenvalues for g in grids]
        for n, exact in enumerate(oracle):
            errs = [abs(v[n] - exact) for v in vals]
            order = observed_order(vals[0][n], vals[1][n], vals[2][n])
            extrap = abs(richardson(vals[2][n], vals[1][n]) - exact)
            print(f"mode {mode} n={n}: errors {errs[0]:.2e} {errs[1]:.2e} {errs[2]:.2e}  "
                  f"order {order:.3f}  richardson error {extrap:.2e}")
    exact = bubble_energy(P)
    norms = [h1_norm(ModeFunction(g, 0, eval_psi(P, 0.0, g.t))) ** 2 for g in grids]
    print("||Psi||^2 relative errors:", " ".join(f"{abs(x - exact) / exact:.2e}" for x in norms),
          f" order {observed_order(*norms):.3f}",
          f" richardson {abs(richardson(norms[2], norms[1]) - exact) / exact:.2e}")


if __name__ == "__main__":
    main(sys.argv[1:])
