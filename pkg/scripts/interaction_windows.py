"""Fitted decay rate of <Psi_0, Psi_s> on successive windows [k1/c, k2/c].

For p close to 1 the correction to the leading exp(-c s) law decays only like
exp(-(p - 1) c s), so the window [10/c, 20/c] is still pre-asymptotic. An
adaptive quadrature of omega int Psi_0^p Psi_s is printed as an independent check.
Usage: python3 scripts/interaction_windows.py [N a b]
"""

import math
import sys

import numpy as np
from scipy import integrate

from cknstab.bubbles import interaction
from cknstab.grid import experiment_grid, sphere_area
from cknstab.params import make_params
from cknstab.profiles import eval_psi

WINDOWS = [(10, 20), (20, 30), (30, 40), (40, 60)]


def main(argv):
    N, a, b = (int(argv[0]), float(argv[1]), float(argv[2])) if len(argv) == 3 else (3, -1.0, -0.2)
    P = make_params(N, a, b)
    c, p = P.c, P.p
    grid = experiment_grid(P, (0.0, WINDOWS[-1][1] / c), h=0.01)
    print(f"{P.describe()}  p={p:.6g}  c={c:.6g}")
    for lo, hi in WINDOWS:
        s = np.linspace(lo / c, hi / c, 11)
        vals = np.array([interaction(P, grid, 0.0, x) for x in s])
        slope = np.polyfit(s, np.log(vals), 1)[0]
        pref = vals * np.exp(c * s)
        print(f"window [{lo},{hi}]/c: slope/(-c) = {slope / -c:.6f}  "
              f"prefactor drift = {abs(pref[5] - pref[-1]) / pref[-1]:.3%}")
    s = 15.0 / c
    f = lambda t: float(eval_psi(P, 0.0, t)) ** p * float(eval_psi(P, s, t))
    quad = sphere_area(N) * integrate.quad(f, -60 / c, s + 60 / c, points=[0.0, s], limit=400)[0]
    grid_val = interaction(P, grid, 0.0, s)
    print(f"s = 15/c: grid {grid_val:.10e}  quadrature {quad:.10e}  rel diff {abs(grid_val - quad) / quad:.1e}")
    print(f"correction scale (p-1) c s at s = 20/c: {(p - 1) * 20:.2f}  -> exp = {math.exp(-(p - 1) * 20):.2e}")


if __name__ == "__main__":
    main(sys.argv[1:])
