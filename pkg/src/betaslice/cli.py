"""Batch front end.

Subcommands: density, enumerate, fiber, equidist, dynsys, slice, convolve,
presets.  Every run writes its outputs plus a manifest JSON echoing the
fully resolved configuration; identical config and seed give byte-identical
outputs.  Config precedence: command-line flags > config file > defaults.
The config file is flat ``key = value`` text, one pair per line.

Exit codes: 0 success, 2 configuration error, 3 numeric failure
(undefined fibre, or non-convergence under --strict).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import density as dens
from . import dynamics as dyn
from . import equidistribution as eq
from . import fibers as fib
from . import ifs as ifsmod
from .expansions import enumerate_orbit, level_counts
from .numerics import BetaParam, DomainError

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


class NumericFailure(RuntimeError):
    pass


def _parse_config_file(path: str) -> dict:
    out = {}
    try:
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"bad config line: {line!r}")
                key, val = line.split("=", 1)
                out[key.strip().replace("-", "_")] = val.strip()
        return out
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc


def _resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    """flags > config file > parser defaults"""
    cfg = vars(args).copy()
    fname = cfg.pop("config", None)
    if fname:
        file_vals = _parse_config_file(fname)
        for key, raw in file_vals.items():
            if key not in cfg:
                raise ConfigError(f"unknown config key {key!r}")
            if cfg[key] == parser.get_default(key):
                default = parser.get_default(key)
                if isinstance(default, bool):
                    cfg[key] = raw.lower() in ("1", "true", "yes")
                elif isinstance(default, int):
                    cfg[key] = int(raw)
                elif isinstance(default, float):
                    cfg[key] = float(raw)
                else:
                    cfg[key] = raw
    return cfg


def _beta_param(cfg: dict) -> BetaParam:
    if cfg.get("exact"):
        p, q = (int(v) for v in cfg["exact"].split(","))
        return BetaParam.from_minpoly(p, q)
    return BetaParam(cfg["beta"])


def _lift_x(cfg: dict, bp: BetaParam):
    return Fraction(cfg["x"]) if bp.exact else float(cfg["x"])


def _write_manifest(out_path: str, cfg: dict) -> None:
    clean = {k: v for k, v in sorted(cfg.items()) if k != "func"}
    clean["schema_version"] = SCHEMA_VERSION
    with open(out_path + ".manifest.json", "w") as fh:
        json.dump(clean, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _fig_path(out: str) -> str:
    stem, _ = os.path.splitext(out)
    return stem + ".png"


def cmd_density(cfg: dict) -> None:
    bp = _beta_param(cfg)
    out = cfg["out"]
    g, diag = dens.solve_density(bp, cells=cfg["cells"], tol=cfg["tol"],
                                 max_iter=cfg["max_iter"],
                                 stability=cfg["stability"])
    if cfg["strict"] and not diag.converged:
        raise NumericFailure("density iteration did not converge")
    dens.export_csv(g, out)
    report = {
        "schema_version": SCHEMA_VERSION,
        "beta": bp.beta,
        "cells": g.cell_count,
        "l1_residual": diag.l1_residual,
        "sup_estimate": diag.sup_estimate,
        "iterations": diag.iterations,
        "refinement_stability": diag.refinement_stability,
        "converged": diag.converged,
    }
    sampled = None
    if cfg["method"] in ("sample", "both"):
        sampled = dens.sample_density(bp, cfg["samples"],
                                      truncation=cfg["truncation"] or None,
                                      cells=min(cfg["cells"], 2 ** 10),
                                      seed=cfg["seed"])
        spath = os.path.splitext(out)[0] + ".sampled.csv"
        dens.export_csv(sampled, spath)
        report["sample_l1_agreement"] = dens.l1_distance(
            sampled, g if g.cell_count == sampled.cell_count else
            dens.DensityGrid(g.lo, g.hi, g.values))
    with open(os.path.splitext(out)[0] + ".diagnostics.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if cfg["plot"]:
        from .plotting import plot_density
        plot_density(g, _fig_path(out), title=f"invariant density, beta={bp.beta:.6g}",
                     overlay=sampled)
    _write_manifest(out, cfg)


def cmd_enumerate(cfg: dict) -> None:
    bp = _beta_param(cfg)
    x = _lift_x(cfg, bp)
    counts, switch = level_counts(x, bp, cfg["n"])
    half = bp.beta / 2.0
    rows = [(k, counts[k], half ** k * counts[k]) for k in range(1, cfg["n"] + 1)]
    _write_csv(cfg["out"], ["n", "N_n", "scaled"], rows)
    if cfg["plot"]:
        from .plotting import plot_series
        ns = [r[0] for r in rows]
        plot_series(ns, {"(beta/2)^n N_n": [r[2] for r in rows]},
                    _fig_path(cfg["out"]), ylabel="scaled count",
                    title=f"branching growth, beta={bp.beta:.6g}, x={cfg['x']}")
    _write_manifest(cfg["out"], cfg)


def cmd_fiber(cfg: dict) -> None:
    bp = _beta_param(cfg)
    g, diag = dens.solve_density(bp, cells=cfg["cells"], tol=cfg["tol"],
                                 stability=False)
    if cfg["strict"] and not diag.converged:
        raise NumericFailure("density iteration did not converge")
    report = fib.bounds_report(float(cfg["x"]), bp, cfg["n"], g)
    with open(cfg["out"], "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if cfg["plot"]:
        from .plotting import plot_series
        hb = fib.hausdorff_bounds(float(cfg["x"]), bp, cfg["n"], g)
        plot_series(hb.depths, {"cover sum": hb.cover_sums,
                                "upper cap": np.full_like(hb.cover_sums, hb.upper_cap),
                                "lower floor": np.full_like(hb.cover_sums, hb.lower_floor)},
                    _fig_path(cfg["out"]), ylabel="(beta/2)^n N_n",
                    title=f"cover sums, beta={bp.beta:.6g}, x={cfg['x']}")
    _write_manifest(cfg["out"], cfg)


def cmd_equidist(cfg: dict) -> None:
    bp = _beta_param(cfg)
    x = _lift_x(cfg, bp)
    depths = sorted(int(v) for v in str(cfg["n"]).split(","))
    g, _ = dens.solve_density(bp, cells=cfg["cells"], tol=cfg["tol"],
                              stability=False)
    from .numerics import Interval
    uniform = Interval(0.0, bp.right_endpoint)
    gd = eq.growth_series(x, bp, depths[-1], g)
    rows = []
    for n in depths:
        mu = eq.orbit_measure_uniform(x, bp, n)
        try:
            nu = eq.orbit_measure_conditional(x, bp, n, g)
            ks_nu = eq.ks_distance(nu, g)
        except fib.UndefinedFiberError:
            ks_nu = float("nan")
        lo_m, hi_m = eq.edge_masses(mu, bp, delta=cfg["delta"])
        rows.append((n, int(gd.counts[n]), float(gd.scaled[n]),
                     eq.ks_distance(mu, uniform), ks_nu,
                     eq.wasserstein1(mu, uniform),
                     float(gd.k_series[n - 1]), lo_m, hi_m))
    header = ["n", "N_n", "scaled_count", "ks_uniform", "ks_nu",
              "w1_uniform", "k_n", "edge_mass_lo", "edge_mass_hi"]
    _write_csv(cfg["out"], header, rows)
    if cfg["plot"]:
        from .plotting import plot_series
        plot_series([r[0] for r in rows],
                    {"KS to uniform": [r[3] for r in rows],
                     "KS to density": [r[4] for r in rows]},
                    _fig_path(cfg["out"]), ylabel="distance",
                    title=f"equidistribution, beta={bp.beta:.6g}, x={cfg['x']}")
    _write_manifest(cfg["out"], cfg)


def cmd_dynsys(cfg: dict) -> None:
    bp = _beta_param(cfg)
    g, diag = dens.solve_density(bp, cells=cfg["cells"], tol=cfg["tol"],
                                 stability=False)
    if cfg["strict"] and not diag.converged:
        raise NumericFailure("density iteration did not converge")
    H = dyn.pushforward_histogram(g, bp, cfg["samples"], cfg["steps"],
                                  cfg["seed"], bins=cfg["bins"])
    ref = dyn.region_reference_histogram(g, cfg["bins"])
    tv = 0.5 * float(np.sum(np.abs(H - ref)))
    rows = [(i, j, H[i, j]) for i in range(cfg["bins"]) for j in range(cfg["bins"])]
    _write_csv(cfg["out"], ["bin_x", "bin_y", "count"], rows)
    with open(os.path.splitext(cfg["out"])[0] + ".diagnostics.json", "w") as fh:
        json.dump({"schema_version": SCHEMA_VERSION, "tv_distance": tv,
                   "steps": cfg["steps"], "samples": cfg["samples"]},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    if cfg["plot"]:
        from .plotting import plot_histogram2d
        plot_histogram2d(H, (g.lo, g.hi, 0.0, g.sup_estimate),
                         _fig_path(cfg["out"]),
                         title=f"pushforward after {cfg['steps']} steps, TV={tv:.4f}")
    _write_manifest(cfg["out"], cfg)


def _parse_ifs(cfg: dict) -> ifsmod.IfsSpec:
    name = cfg["ifs"]
    aliases = {"carpet": "sierpinski_carpet", "sponge": "menger_sponge"}
    name = aliases.get(name, name)
    try:
        return ifsmod.preset(name)
    except ValueError:
        if os.path.exists(name):
            return ifsmod.parse_ifs_file(name)
        raise ConfigError(f"unknown ifs {cfg['ifs']!r} (not a preset or file)")


def _parse_theta(raw) -> tuple[float, ...]:
    return tuple(float(v) for v in str(raw).split(","))


def cmd_slice(cfg: dict) -> None:
    ifs = _parse_ifs(cfg)
    theta = _parse_theta(cfg["theta"])
    proj = ifsmod.project_ifs(ifs, theta)
    h, diag = ifsmod.solve_projected_density(proj, cells=cfg["cells"],
                                             tol=cfg["tol"])
    if cfg["strict"] and not diag.converged:
        raise NumericFailure("projected density did not converge")
    lo, hi = proj.hull
    xs = np.linspace(lo, hi, cfg["x_grid"], endpoint=False) + \
        (hi - lo) / (2 * cfg["x_grid"])
    coding = ifsmod.check_slice_coding(ifs, theta, xs[:: max(1, cfg["x_grid"] // 64)],
                                       cfg["depth"])
    C = ifsmod.estimate_ratio_constant(ifs, theta, h, coding.delta,
                                       xs[:: max(1, cfg["x_grid"] // 64)],
                                       depth=cfg["depth"])
    reports = []
    for x in xs[:: max(1, cfg["x_grid"] // cfg["report_count"])]:
        rep = ifsmod.build_slice_report(ifs, theta, float(x), cfg["depth"],
                                        h=h, C=C, proj=proj)
        reports.append({
            "x": float(x),
            "mass_sum": rep.mass_sum,
            "diameter_estimate": rep.diameter_estimate,
            "contained_in_first_level": rep.contained_in_first_level,
            "lower_bound": rep.lower_bound,
            "cylinders": [
                {"word": list(c.word), "mass": c.mass,
                 "hull": list(c.hull), "diameter_bound": c.diameter_bound}
                for c in rep.cylinders[:cfg["max_cylinders"]]],
        })
    payload = {
        "schema_version": SCHEMA_VERSION,
        "theta": list(theta),
        "s": proj.s,
        "depth": cfg["depth"],
        "delta_empirical": coding.delta,
        "coding_violations": coding.violations,
        "ratio_constant": C,
        "density_residual": diag.l1_residual,
        "slices": reports,
    }
    with open(cfg["out"], "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    stem = os.path.splitext(cfg["out"])[0]
    dens.export_csv(h, stem + ".density.csv")
    lower = ifsmod.slice_lower_bound(xs, h, C)
    _write_csv(stem + ".lower_bounds.csv", ["x", "lower_bound"],
               list(zip(xs, lower)))
    if cfg["plot"]:
        from .plotting import plot_slice_profile
        plot_slice_profile(h, xs, lower, _fig_path(cfg["out"]),
                           title=f"slices at theta={theta}")
    _write_manifest(cfg["out"], cfg)


def cmd_convolve(cfg: dict) -> None:
    ifs = _parse_ifs(cfg)
    theta = _parse_theta(cfg["theta"])
    proj = ifsmod.project_ifs(ifs, theta)
    direct, diag = ifsmod.solve_projected_density(proj, cells=cfg["cells"],
                                                  tol=cfg["tol"])
    conv = ifsmod.odd_even_convolution(ifs, theta, cells=cfg["cells"],
                                       tol=cfg["tol"])
    dist = dens.l1_distance(direct, conv)
    stem = os.path.splitext(cfg["out"])[0]
    dens.export_csv(direct, cfg["out"])
    dens.export_csv(conv, stem + ".convolved.csv")
    with open(stem + ".diagnostics.json", "w") as fh:
        json.dump({"schema_version": SCHEMA_VERSION, "l1_distance": dist,
                   "s": proj.s, "theta": list(theta)},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    if cfg["plot"]:
        from .plotting import plot_density
        plot_density(direct, _fig_path(cfg["out"]),
                     title=f"projected density, L1 split-vs-direct {dist:.4f}",
                     overlay=conv, labels=("direct", "odd*even"))
    _write_manifest(cfg["out"], cfg)


def cmd_presets(cfg: dict) -> None:
    names = ["sierpinski_carpet", "menger_sponge"]
    if cfg["name"]:
        ifs = ifsmod.preset(cfg["name"])
        if cfg["out"]:
            ifsmod.write_ifs_file(ifs, cfg["out"])
            _write_manifest(cfg["out"], cfg)
        else:
            print(f"{cfg['name']}: {ifs.map_count} maps, dimension {ifs.dimension}, "
                  f"s={ifsmod.moran_dimension(ifs):.12g}")
    else:
        for name in names:
            ifs = ifsmod.preset(name)
            print(f"{name}: {ifs.map_count} maps, dimension {ifs.dimension}, "
                  f"s={ifsmod.moran_dimension(ifs):.12g}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="betaslice",
        description="numerical laboratory for beta-expansions and fractal slices")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker budget (vectorised kernels may ignore it)")
        p.add_argument("--strict", action="store_true",
                       help="treat non-convergence as a failure (exit 3)")
        p.add_argument("--plot", dest="plot", action="store_true", default=True)
        p.add_argument("--no-plot", dest="plot", action="store_false")
        if needs_out:
            p.add_argument("--out", required=True)

    def add_beta(p):
        p.add_argument("--beta", type=float, default=1.4)
        p.add_argument("--exact", default="",
                       help="p,q for exact mode with beta^2 = p*beta + q")

    p = sub.add_parser("density", help="solve/sample the invariant density")
    add_beta(p)
    p.add_argument("--cells", type=int, default=2 ** 14)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=5000)
    p.add_argument("--method", choices=["solve", "sample", "both"], default="solve")
    p.add_argument("--samples", type=int, default=10 ** 6)
    p.add_argument("--truncation", type=int, default=0, help="0 = auto")
    p.add_argument("--stability", action="store_true", default=False,
                   help="also solve a doubled grid for the sup-stability flag")
    common(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("enumerate", help="orbit counts N_n and scaled series")
    add_beta(p)
    p.add_argument("--x", default="1.0")
    p.add_argument("--n", type=int, default=20)
    common(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("fiber", help="fibre masses and Hausdorff bound data")
    add_beta(p)
    p.add_argument("--x", default="1.0")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--cells", type=int, default=2 ** 14)
    p.add_argument("--tol", type=float, default=1e-10)
    common(p)
    p.set_defaults(func=cmd_fiber)

    p = sub.add_parser("equidist", help="empirical-measure distances by depth")
    add_beta(p)
    p.add_argument("--x", default="0.9")
    p.add_argument("--n", default="8,12,16,20", help="comma-separated depths")
    p.add_argument("--cells", type=int, default=2 ** 12)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--delta", type=float, default=0.05,
                   help="edge-mass monitor width")
    common(p)
    p.set_defaults(func=cmd_equidist)

    p = sub.add_parser("dynsys", help="measure-preservation check of the area map")
    add_beta(p)
    p.add_argument("--cells", type=int, default=2 ** 14)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--samples", type=int, default=10 ** 6)
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--bins", type=int, default=64)
    common(p)
    p.set_defaults(func=cmd_dynsys)

    p = sub.add_parser("slice", help="slice cylinder reports for an IFS")
    p.add_argument("--ifs", default="carpet",
                   help="preset name (carpet/sponge) or an IFS file path")
    p.add_argument("--theta", default="0.61", help="angle(s), comma-separated")
    p.add_argument("--x-grid", dest="x_grid", type=int, default=256)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--cells", type=int, default=2 ** 14)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--report-count", dest="report_count", type=int, default=16)
    p.add_argument("--max-cylinders", dest="max_cylinders", type=int, default=64)
    common(p)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("convolve", help="odd/even convolution vs direct density")
    p.add_argument("--ifs", default="sponge")
    p.add_argument("--theta", default="0.61,0.4")
    p.add_argument("--cells", type=int, default=2 ** 12)
    p.add_argument("--tol", type=float, default=1e-10)
    common(p)
    p.set_defaults(func=cmd_convolve)

    p = sub.add_parser("presets", help="list or export the built-in IFS presets")
    p.add_argument("--name", default="")
    p.add_argument("--out", default="")
    common(p, needs_out=False)
    p.set_defaults(func=cmd_presets)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args, parser)
        cfg["func"](cfg)
        return 0
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, (fib.UndefinedFiberError, DomainError)):
            print(f"numeric failure: {exc}", file=sys.stderr)
            return 3
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
