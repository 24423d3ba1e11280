"""Command-line interface: ``aclab <command> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .ac_solver import write_snapshot
from .corrector import constant_g, corrector_U1, solvability_residual, zero_g
from .harness import (SCENARIOS, SweepConfig, compare_run, default_config, export, kbar, kbar_erf,
                      kbar_residual, run_scenario, run_sweep, write_manifest)
from .nonlinearity import nonlinearity_from_config
from .profile import compute_profile


def _nl_arg(text):
    if text in ("cubic",):
        return nonlinearity_from_config(text)
    if text in ("pp", "prey-predator"):
        return nonlinearity_from_config([0.0, -0.5, 1.5, -1.0])
    return nonlinearity_from_config([float(c) for c in text.split(",")])


def _config(args, eps_list):
    if getattr(args, "config", None):
        with open(args.config) as fh:
            d = json.load(fh)
        d.setdefault("scenario", args.scenario)
        d["eps_list"] = eps_list or d.get("eps_list")
        return SweepConfig.from_dict(d)
    return default_config(args.scenario, eps_list)


def _ensure_dir(path):
    if path:
        os.makedirs(path, exist_ok=True)
    return path or "."


def cmd_profile(args):
    nl = _nl_arg(args.nonlinearity)
    prof = compute_profile(nl, n_points=args.points)
    print(f"c0 = {prof.c0:.17g}")
    print(f"int U0'^2 = {prof.norm_sq:.17g}")
    print(f"c0 * int U0'^2 = {prof.c0 * prof.norm_sq:.17g}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["z", "U0", "dU0", "d2U0"])
            for row in zip(prof.z_grid, prof.U0, prof.dU0, prof.d2U0):
                w.writerow(["%.17g" % v for v in row])
    return 0


def cmd_corrector(args):
    nl = _nl_arg(args.nonlinearity)
    prof = compute_profile(nl)
    pg = constant_g(args.g0) if args.g0 else zero_g()
    cd = corrector_U1(pg, prof)
    A = lambda z: np.full_like(z, args.g0) - cd.gamma_value * prof.dU(z)  # noqa: E731
    print(f"gamma = {cd.gamma_value:.17g}")
    print(f"solvability residual = {solvability_residual(A, prof):.3e}")
    print(f"U1(-inf) = {cd.limit_minus:.17g}, U1(+inf) = {cd.limit_plus:.17g}")
    print(f"sup |U1| = {cd.bound_M:.17g}, relative residual = {cd.residual:.3e}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["z", "U1", "dU1"])
            for row in zip(cd.z_grid, cd.U1, cd.dU1):
                w.writerow(["%.17g" % v for v in row])
    return 0


def cmd_simulate(args):
    cfg = _config(args, [args.eps])
    art = run_scenario(cfg, args.eps)
    out = _ensure_dir(args.out)
    stem = os.path.join(out, f"{cfg.scenario}_eps{args.eps:g}")
    export([art.record], stem + ".csv", cfg)
    with open(stem + "_series.csv", "w", newline="") as fh:
        keys = list(art.series)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for row in zip(*(art.series[k] for k in keys)):
            w.writerow(["%.17g" % v for v in row])
    if art.final is not None:
        write_snapshot(art.final, stem + "_final.csv", art.final_v)
    r = art.record
    print(f"{cfg.scenario} eps={r.eps:g} h={r.h:g} thickness={r.thickness:.6g} "
          f"hausdorff_max={r.hausdorff_max:.6g} t_gen={r.t_gen:.6g} v_err={r.v_err:.6g}")
    return 0


def cmd_sweep(args):
    cfg = _config(args, args.eps_list)
    records, fits = run_sweep(cfg)
    out = _ensure_dir(args.out)
    path = os.path.join(out, f"{cfg.scenario}_sweep.csv")
    export(records, path, cfg, {"fits": fits})
    for r in records:
        print(f"eps={r.eps:g} thickness={r.thickness:.6g} hausdorff_max={r.hausdorff_max:.6g} "
              f"radius_err_max={r.radius_err_max:.6g} t_gen={r.t_gen:.6g} v_err={r.v_err:.6g}")
    for k, v in fits.items():
        print(k, v)
    return 0


def cmd_compare(args):
    cfg = _config(args, [args.eps])
    rows, summary = compare_run(cfg, args.eps, every=args.every)
    out = _ensure_dir(args.out)
    stem = os.path.join(out, f"{cfg.scenario}_compare_eps{args.eps:g}")
    with open(stem + ".csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["phase", "t", "min_residual", "ordering_ok"])
        for ph, t, res, ok in rows:
            w.writerow([ph, "%.17g" % t, "%.17g" % res, int(ok)])
    write_manifest(cfg, stem + ".json", summary)
    print(f"ordering_ok={summary['ordering_ok']} tol_res={summary['tol_res']:.6g} "
          f"min_residual_generation={summary['min_residual_generation']:.6g} "
          f"min_residual_motion={summary['min_residual_motion']:.6g}")
    return 0


def cmd_kbar(args):
    v = kbar(args.t, args.c)
    print(f"kbar = {v:.17g}")
    print(f"erf form = {kbar_erf(args.t, args.c):.17g}")
    if args.t > 0:
        print(f"residual = {kbar_residual(args.t, args.c):.3e}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="aclab", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("profile", help="standing wave and surface-tension constant")
    sp.add_argument("--nonlinearity", default="cubic", help="'cubic', 'pp' or ascending coefficients c0,c1,...")
    sp.add_argument("--points", type=int, default=4097)
    sp.add_argument("--out", help="CSV file for the tabulated profile")
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("corrector", help="first-order corrector for a constant perturbation g0")
    sp.add_argument("--nonlinearity", default="cubic")
    sp.add_argument("--g0", type=float, default=1.0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_corrector)

    for name, fn, help_ in (("simulate", cmd_simulate, "run one scenario at one eps"),
                            ("compare", cmd_compare, "sandwich and residual checks (1D scenarios)")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--scenario", required=True, choices=SCENARIOS)
        sp.add_argument("--eps", type=float, required=True)
        sp.add_argument("--config", help="JSON file with SweepConfig fields")
        sp.add_argument("--out", default=".")
        if name == "compare":
            sp.add_argument("--every", type=int, default=20, help="check every n-th time step")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("sweep", help="eps sweep with power-law fits")
    sp.add_argument("--scenario", required=True, choices=SCENARIOS)
    sp.add_argument("--eps-list", type=float, nargs="+", default=None)
    sp.add_argument("--config")
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("kbar", help="Volterra function k-bar")
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.set_defaults(func=cmd_kbar)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
