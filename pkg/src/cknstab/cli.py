"""Command-line front end: one subcommand per experiment, CSV/JSON output.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .bubbles import BubbleConfig, interaction, symmetric_pair, sum_bubbles, weighted_norms
from .errors import CknError, NumericalFailure
from .functionals import deficit, residual_load
from .grid import CylinderGrid, ModeFunction, experiment_grid, h_minus1_norm
from .params import felli_schneider, make_params
from .profiles import eval_psi, eval_psi_prime, eval_V, eval_W, profile_mode
from .reduction import phi_scaling_experiment, solve_projected
from .spectral import find_symmetry_breaking_b, oracle_spectrum, spectrum
from .stability import (deficit_vs_distance, default_direction, multi_bubble_stability,
                        one_bubble_stability)

OUTPUT_ENV = "CKN_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "ckn_output"

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting on bad input."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def float_list(text: str) -> list:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def int_list(text: str) -> list:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


# ---------------------------------------------------------------- output


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def output_path(args, default_format: str) -> Path:
    fmt = args.format or default_format
    if args.out:
        return Path(args.out)
    base = Path(os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT_DIR)
    return base / f"{args.command}.{fmt}"


def write_rows(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=False)
        fh.write("\n")


def emit_table(args, header, rows, extra=None) -> Path:
    """Write a table as CSV (default) or as JSON records."""
    path = output_path(args, "csv")
    if (args.format or "csv") == "csv":
        write_rows(path, header, rows)
    else:
        payload = {"experiment": args.command, "rows": [dict(zip(header, r)) for r in rows]}
        if extra:
            payload.update(extra)
        write_json(path, payload)
    return path


def emit_report(args, report: dict) -> Path:
    """Write a stability report as JSON (default) or flatten its sweep to CSV."""
    path = output_path(args, "json")
    if (args.format or "json") == "json":
        write_json(path, report)
    else:
        header = ["x", "gamma", "distance", "deficit"]
        write_rows(path, header, [[r[k] for k in header] for r in report["sweep"]])
    return path


# ---------------------------------------------------------------- helpers


def _params(args):
    return make_params(args.N, args.a, args.b)


def _grid(args, params, centers=(0.0,)) -> CylinderGrid:
    """Explicit --grid-T/--grid-n win; otherwise size the grid from the bubble tails."""
    if args.grid_T is None and args.grid_n is None:
        return experiment_grid(params, centers, h=args.grid_h)
    if args.grid_T is None or args.grid_n is None:
        raise UsageError("--grid-T and --grid-n must be given together")
    grid = CylinderGrid(params, args.grid_T, args.grid_n)
    grid.check_tail(centers)
    return grid


def _summary(text: str) -> None:
    print(text)


# ---------------------------------------------------------------- commands


def cmd_region(args) -> int:
    P = _params(args)
    b_fs = P.b_fs
    row = [P.N, P.a, P.b, P.a_c, P.c, P.p, P.alpha if P.p > 1 else float("nan"),
           b_fs if b_fs is not None else float("nan"), P.region.value]
    header = ["N", "a", "b", "a_c", "c", "p", "alpha", "b_FS", "region"]
    emit_table(args, header, [row])
    fs = "n/a" if b_fs is None else _fmt(b_fs)
    _summary(f"p={_fmt(P.p)} c={_fmt(P.c)} b_FS={fs} region={P.region.value}")
    return EXIT_OK


def cmd_profile(args) -> int:
    P = _params(args)
    P.require_superlinear()
    grid = _grid(args, P, (args.s,))
    t = grid.t[::args.stride]
    r = np.exp(-t)
    rows = zip(t, eval_psi(P, args.s, t), eval_psi_prime(P, args.s, t), eval_W(P, r), eval_V(P, r))
    path = emit_table(args, ["t", "psi", "psi_prime", "W", "V"], list(rows))
    _summary(f"profile {P.describe()}: {len(t)} samples -> {path}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    P = _params(args)
    P.require_superlinear()
    grid = _grid(args, P)
    rows = []
    for mode in args.modes:
        oracle = oracle_spectrum(P, mode)
        k = max(args.k, len(oracle))
        rep = spectrum(P, grid, mode, k=k)
        for n, mu in enumerate(rep.eigenvalues):
            o = oracle[n] if n < len(oracle) else float("nan")
            rows.append([mode, n, mu, o, abs(mu - o) if n < len(oracle) else float("nan")])
    path = emit_table(args, ["mode", "n", "eigenvalue_numeric", "eigenvalue_oracle", "abs_err"], rows)
    errs = [r[4] for r in rows if not math.isnan(r[4])]
    worst = _fmt(max(errs)) if errs else "n/a"
    _summary(f"spectrum {P.describe()}: modes {args.modes}, max oracle error {worst} -> {path}")
    return EXIT_OK


def cmd_fs_curve(args) -> int:
    T = args.grid_T if args.grid_T is not None else 60.0
    n = args.grid_n if args.grid_n is not None else int(round(2 * T / args.grid_h)) + 1
    rows = []
    for a in args.a_list:
        closed = felli_schneider(args.N, a)
        b_star = find_symmetry_breaking_b(args.N, a, tol=args.tol, T=T, n=n)
        rows.append([a, closed, b_star, abs(b_star - closed)])
    path = emit_table(args, ["a", "b_FS_closed_form", "b_star_numeric", "diff"], rows)
    _summary(f"fs-curve N={args.N}: max |b*-b_FS| = {_fmt(max(r[3] for r in rows))} -> {path}")
    return EXIT_OK


_FAMILY_HEADER = ["tag", "h1_sq", "lp", "deficit", "residual_dual"]


def _family_row(tag, v: ModeFunction):
    rec = deficit(v)
    return [tag, rec.h1_norm_sq, rec.lp_norm, rec.deficit, h_minus1_norm(residual_load(v))]


def cmd_deficit(args) -> int:
    P = _params(args)
    P.require_superlinear()
    grid = _grid(args, P)
    psi = profile_mode(grid)
    bump = default_direction(grid)
    rows = [_family_row("psi", psi), _family_row("2*psi", psi.scaled(2.0))]
    for eps in args.eps_list:
        rows.append(_family_row(f"psi+{_fmt(eps)}*bump", psi.plus_samples(eps * bump)))
    path = emit_table(args, _FAMILY_HEADER, rows)
    _summary(f"deficit {P.describe()}: deficit(psi) = {_fmt(rows[0][3])} -> {path}")
    return EXIT_OK


def cmd_residual(args) -> int:
    P = _params(args)
    P.require_superlinear()
    rows = []
    for R in args.R_list:
        config = symmetric_pair(P, R)
        grid = _grid(args, P, config.centers)
        rows.append(_family_row(f"pair_R={_fmt(R)}", sum_bubbles(config, grid)))
    path = emit_table(args, _FAMILY_HEADER, rows)
    _summary(f"residual {P.describe()}: {len(rows)} separations -> {path}")
    return EXIT_OK


def cmd_interaction(args) -> int:
    P = _params(args)
    P.require_superlinear()
    c = P.c
    s_min = args.s_min if args.s_min is not None else 10.0 / c
    s_max = args.s_max if args.s_max is not None else 20.0 / c
    s_vals = np.linspace(s_min, s_max, args.s_count)
    grid = _grid(args, P, (0.0, s_max))
    rows = []
    for s in s_vals:
        val = interaction(P, grid, 0.0, s)
        rows.append([s, val, val * math.exp(c * s)])
    slope = float(np.polyfit(s_vals, np.log([r[1] for r in rows]), 1)[0])
    path = emit_table(args, ["s", "inner", "inner_times_exp_cs"], rows)
    _summary(f"interaction {P.describe()}: fitted slope {_fmt(slope)} vs -c = {_fmt(-c)} -> {path}")
    return EXIT_OK


def cmd_error_norms(args) -> int:
    P = _params(args)
    P.require_superlinear()
    rows = []
    for R in args.R_list:
        config = symmetric_pair(P, R)
        grid = _grid(args, P, config.centers)
        rep = weighted_norms(config, grid, varsigma=args.varsigma)
        rows.append([R, config.Q, rep.natural_norm, rep.sharp_norm])
    path = emit_table(args, ["R", "Q", "nat", "sharp"], rows)
    _summary(f"error-norms {P.describe()}: {len(rows)} separations, varsigma={_fmt(args.varsigma)} -> {path}")
    return EXIT_OK


def _centers(nu: int, R: float):
    return tuple(R * (j - (nu - 1) / 2.0) for j in range(nu))


def cmd_reduce(args) -> int:
    P = _params(args)
    P.require_superlinear()
    config = BubbleConfig(P, _centers(args.nu, args.R))
    grid = _grid(args, P, config.centers)
    sol = solve_projected(config, grid=grid, tol=args.tol)
    summary = {"R": args.R, "nu": args.nu, "Q": config.Q, "phi_norm": sol.phi_norm,
               "multipliers": sol.multipliers.tolist(), "multiplier_sum": sol.multiplier_sum,
               "newton_residual": sol.newton_residual, "orthogonality_defect": sol.orthogonality_defect,
               "iterations": sol.iterations, "damped": sol.damped}
    t = grid.t[::args.stride]
    rows = list(zip(t, sol.phi.samples[::args.stride]))
    path = output_path(args, "csv")
    if (args.format or "csv") == "csv":
        write_rows(path, ["t", "phi"], rows)
        side = path.with_name(path.stem + "_summary.csv")
        flat = [[k, v] for k, v in summary.items() if k != "multipliers"]
        flat += [[f"c_{j + 1}", c_j] for j, c_j in enumerate(sol.multipliers)]
        write_rows(side, ["key", "value"], flat)
    else:
        write_json(path, {"experiment": "reduce", "params": {"N": P.N, "a": P.a, "b": P.b, "p": P.p},
                          **summary, "profile": {"t": t.tolist(), "phi": sol.phi.samples[::args.stride].tolist()}})
    _summary(f"reduce {P.describe()} R={_fmt(args.R)}: ||phi||={_fmt(sol.phi_norm)} "
             f"sum|c_j|={_fmt(sol.multiplier_sum)} Q={_fmt(config.Q)} -> {path}")
    return EXIT_OK


def cmd_reduce_sweep(args) -> int:
    P = _params(args)
    P.require_superlinear()
    rep = phi_scaling_experiment(P, args.R_list, nu=args.nu, h=args.grid_h)
    rows = [[R, Q, f, m, rep.exponent] for R, Q, f, m in zip(rep.R, rep.Q, rep.phi_norm, rep.multiplier_sum)]
    path = emit_table(args, ["R", "Q", "phi_norm", "multiplier_sum", "fitted_exponent"], rows,
                      extra={"branch": rep.branch, "stderr": rep.stderr, "window": list(rep.window)})
    _summary(f"reduce-sweep {P.describe()}: exponent {_fmt(rep.exponent)} ({rep.branch} branch) -> {path}")
    return EXIT_OK


def cmd_stability_one(args) -> int:
    P = _params(args)
    grid = _grid(args, P)
    rep = one_bubble_stability(P, args.eps_list, grid=grid)
    path = emit_report(args, rep.as_dict())
    _summary(f"stability-one {P.describe()}: exponent {_fmt(rep.exponent)} pass={rep.passed} -> {path}")
    return EXIT_OK


def cmd_stability_multi(args) -> int:
    P = _params(args)
    rep = multi_bubble_stability(P, args.R_list, h=args.grid_h)
    path = emit_report(args, rep.as_dict())
    _summary(f"stability-multi {P.describe()}: exponent {_fmt(rep.exponent)} "
             f"(expected {_fmt(rep.expected)}) pass={rep.passed} -> {path}")
    return EXIT_OK


def cmd_deficit_law(args) -> int:
    P = _params(args)
    grid = _grid(args, P)
    rep = deficit_vs_distance(P, count=args.count, eps_list=args.eps_list, seed=args.seed, grid=grid)
    path = emit_report(args, rep.as_dict())
    _summary(f"deficit-law {P.describe()}: min e/d^2 = {_fmt(rep.min_ratio)} pass={rep.passed} -> {path}")
    return EXIT_OK


def cmd_verify_all(args) -> int:
    results = acceptance.run_all(quick=args.quick)
    width = max(len(r.name) for r in results)
    print(f"{'#':>3}  {'criterion':<{width}}  result")
    for r in results:
        print(f"{r.number:>3}  {r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}")
    passed = all(r.passed for r in results)
    payload = {"experiment": "verify-all", "quick": bool(args.quick), "pass": passed,
               "criteria": [{"number": r.number, "name": r.name, "pass": r.passed, "measured": r.measured}
                            for r in results]}
    path = output_path(args, "json")
    write_json(path, payload)
    _summary(f"verify-all: {sum(r.passed for r in results)}/{len(results)} criteria passed -> {path}")
    return EXIT_OK if passed else EXIT_ACCEPTANCE


# ---------------------------------------------------------------- parser


def _add_common(p, params=True, grid=True):
    p.add_argument("--config", help="flat 'key = value' file; keys are the long option names")
    p.add_argument("--out", help=f"output file (default: ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT_DIR}, named after the command)")
    p.add_argument("--format", choices=["csv", "json"], help="output format")
    if params:
        p.add_argument("--N", type=int, default=3, help="dimension N >= 2 (default 3)")
        p.add_argument("--a", type=float, default=0.0, help="weight exponent a (default 0)")
        p.add_argument("--b", type=float, default=0.0, help="weight exponent b (default 0)")
    if grid:
        p.add_argument("--grid-T", dest="grid_T", type=float, help="half-length T of the cylinder grid")
        p.add_argument("--grid-n", dest="grid_n", type=int, help="number of grid nodes")
        p.add_argument("--grid-h", dest="grid_h", type=float, default=0.01,
                       help="spacing used when the grid is sized automatically (default 0.01)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ckn", description="Numerical stability experiments for CKN extremals on the cylinder.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="command")

    p = sub.add_parser("region", help="parameter region, p, c and the symmetry-breaking threshold")
    _add_common(p, grid=False)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("profile", help="tabulate Psi, Psi', W and V")
    _add_common(p)
    p.add_argument("--s", type=float, default=0.0, help="bubble center")
    p.add_argument("--stride", type=int, default=1, help="emit every stride-th node")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("spectrum", help="linearized eigenvalues against the exact bound states")
    _add_common(p)
    p.add_argument("--modes", type=int_list, default=[0, 1, 2], help="comma-separated angular modes")
    p.add_argument("--k", type=int, default=3, help="minimum number of eigenvalues per mode")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("fs-curve", help="bisected mode-1 crossing against the closed-form threshold")
    _add_common(p, params=False)
    p.add_argument("--N", type=int, default=3, help="dimension")
    p.add_argument("--a-list", dest="a_list", type=float_list, default=[-1.0, -0.5], help="values of a < 0")
    p.add_argument("--tol", type=float, default=1e-7, help="bisection tolerance in b")
    p.set_defaults(func=cmd_fs_curve)

    p = sub.add_parser("deficit", help="deficit and residual of Psi and perturbations of it")
    _add_common(p)
    p.add_argument("--eps-list", dest="eps_list", type=float_list, default=[1e-3, 1e-2, 1e-1])
    p.set_defaults(func=cmd_deficit)

    p = sub.add_parser("residual", help="deficit and residual of symmetric two-bubble sums")
    _add_common(p)
    p.add_argument("--R-list", dest="R_list", type=float_list, default=[10.0, 20.0, 30.0])
    p.set_defaults(func=cmd_residual)

    p = sub.add_parser("interaction", help="<Psi_0, Psi_s> over a range of separations")
    _add_common(p)
    p.add_argument("--s-min", dest="s_min", type=float, help="smallest separation (default 10/c)")
    p.add_argument("--s-max", dest="s_max", type=float, help="largest separation (default 20/c)")
    p.add_argument("--s-count", dest="s_count", type=int, default=11)
    p.set_defaults(func=cmd_interaction)

    p = sub.add_parser("error-norms", help="natural and sharp weighted norms of the bubble-sum error")
    _add_common(p)
    p.add_argument("--R-list", dest="R_list", type=float_list, default=[10.0, 20.0, 30.0])
    p.add_argument("--varsigma", type=float, default=0.1)
    p.set_defaults(func=cmd_error_norms)

    p = sub.add_parser("reduce", help="solve the projected equation for one configuration")
    _add_common(p)
    p.add_argument("--R", type=float, default=20.0, help="spacing between consecutive centers")
    p.add_argument("--nu", type=int, default=2, help="number of bubbles")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--stride", type=int, default=1)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("reduce-sweep", help="corrector norm over a sweep of separations")
    _add_common(p)
    p.add_argument("--R-list", dest="R_list", type=float_list, default=[16, 20, 24, 28, 32, 36, 40])
    p.add_argument("--nu", type=int, default=2)
    p.set_defaults(func=cmd_reduce_sweep)

    p = sub.add_parser("stability-one", help="one-bubble residual-to-distance law")
    _add_common(p)
    p.add_argument("--eps-list", dest="eps_list", type=float_list,
                   default=np.logspace(-4, -2, 9).tolist())
    p.set_defaults(func=cmd_stability_one)

    p = sub.add_parser("stability-multi", help="two-bubble counterexample sweep")
    _add_common(p)
    p.add_argument("--R-list", dest="R_list", type=float_list, default=[16, 20, 24, 28, 32, 36, 40])
    p.set_defaults(func=cmd_stability_multi)

    p = sub.add_parser("deficit-law", help="deficit against squared distance over a seeded ensemble")
    _add_common(p)
    p.add_argument("--count", type=int, default=10, help="ensemble size (doubled internally)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps-list", dest="eps_list", type=float_list,
                   default=np.logspace(-4, -1, 7).tolist())
    p.set_defaults(func=cmd_deficit_law)

    p = sub.add_parser("verify-all", help="run every acceptance criterion and print a pass/fail table")
    _add_common(p, params=False, grid=False)
    p.add_argument("--quick", action="store_true", help="coarser grid, shorter sweeps, tolerances x4")
    p.set_defaults(func=cmd_verify_all)
    return parser


def _option_map(subparser) -> dict:
    """dest -> (option string, takes a value) for every long option."""
    out = {}
    for action in subparser._actions:
        longs = [s for s in action.option_strings if s.startswith("--")]
        if not longs or action.dest in ("help", "config"):
            continue
        out[action.dest] = (longs[0], action.nargs != 0)
    return out


def read_config(path: str) -> dict:
    entries = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected 'key = value'")
        key, value = (x.strip() for x in line.split("=", 1))
        entries[key.replace("-", "_")] = value
    return entries


def config_tokens(subparser, entries: dict) -> list:
    options = _option_map(subparser)
    tokens = []
    for key, value in entries.items():
        if key not in options:
            raise UsageError(f"unknown config key {key!r}; allowed: {', '.join(sorted(options))}")
        flag, takes_value = options[key]
        if takes_value:
            tokens += [flag, value]
        elif value.lower() in ("1", "true", "yes", "on"):
            tokens.append(flag)
        elif value.lower() not in ("0", "false", "no", "off"):
            raise UsageError(f"config key {key!r} expects true or false, got {value!r}")
    return tokens


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError(parser.format_usage().strip())
    if args.config:
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        tokens = config_tokens(subparser, read_config(args.config))
        # Config values come first so that explicit flags override them.
        args = parser.parse_args([args.command] + tokens + list(argv[1:]))
    return args


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (CknError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
