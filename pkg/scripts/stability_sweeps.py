"""One-bubble and multi-bubble stability laws; writes the JSON reports.

Usage: python3 scripts/stability_sweeps.py [out_dir]
"""

import sys
from pathlib import Path

from cknstab.acceptance import NEGATIVE_A, R_LISTS, SOBOLEV
from cknstab.cli import write_json
from cknstab.stability import multi_bubble_stability, one_bubble_stability


def main(argv):
    out = Path(argv[0] if argv else "ckn_output")
    for params in (SOBOLEV, NEGATIVE_A):
        rep = one_bubble_stability(params)
        print(f"one bubble {params.describe()}: exponent {rep.exponent:.5f}  d/Gamma max/min {rep.extras['ratio']:.4f}")
        write_json(out / f"stability_one_N{params.N}_a{params.a:g}_b{params.b:g}.json", rep.as_dict())
    for tag, (params, R_list) in R_LISTS.items():
        rep = multi_bubble_stability(params, R_list)
        print(f"two bubbles {tag}: exponent {rep.exponent:.4f} (expected {rep.expected:.4f})  "
              f"log statistic max/min {rep.extras['log_statistic_ratio']:.4f}  pass={rep.passed}")
        write_json(out / f"stability_multi_{tag.replace('/', '_').replace('=', '')}.json", rep.as_dict())


if __name__ == "__main__":
    main(sys.argv[1:])
