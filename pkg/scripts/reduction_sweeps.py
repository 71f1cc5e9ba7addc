"""Corrector and multiplier scaling over separation sweeps for p = 5, 5/3 and 2.

Writes one CSV per exponent to the output directory (default ./ckn_output).
Usage: python3 scripts/reduction_sweeps.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from cknstab.acceptance import R_LISTS
from cknstab.cli import write_rows
from cknstab.reduction import phi_scaling_experiment


def main(argv):
    out = Path(argv[0] if argv else "ckn_output")
    for tag, (params, R_list) in R_LISTS.items():
        rep = phi_scaling_experiment(params, R_list, with_margin=True)
        local = np.diff(np.log(rep.phi_norm)) / np.diff(np.log(rep.Q))
        print(f"{tag} {params.describe()}: exponent {rep.exponent:.4f} +- {rep.stderr:.1e} ({rep.branch})")
        print("  local slopes", np.array2string(local, precision=4))
        print(f"  sum|c_j|/Q max/min {rep.ratio(rep.multiplier_sum / rep.Q):.4f}  "
              f"log statistic max/min {rep.ratio(rep.log_statistic):.4f}  "
              f"smallest bordered margin {np.min(rep.margins):.3f}")
        rows = zip(rep.R, rep.Q, rep.phi_norm, rep.multiplier_sum, rep.log_statistic, rep.margins)
        write_rows(out / f"reduction_{tag.replace('/', '_').replace('=', '')}.csv",
                   ["R", "Q", "phi_norm", "multiplier_sum", "log_statistic", "bordered_margin"], rows)


if __name__ == "__main__":
    main(sys.argv[1:])
