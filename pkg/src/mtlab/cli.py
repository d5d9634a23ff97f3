"""Command line front end.

Every subcommand prints exactly one JSON run report on stdout and a short
human log on stderr.  Reports are deterministic given the flags and seed;
wall-clock timings only ever appear on stderr so repeated runs stay
byte-identical.  Exit codes: 0 clean, 1 a check failed, 2 malformed input,
3 a precondition failed.
"""

import argparse
import csv
import json
import math
import sys
import time
from fractions import Fraction

import numpy as np

from . import (acceptance, bs_limits, chabauty_metric, flows_unimodularity,
               model_geometry, poisson_rooting, sasaki_metric, schreier_irs)
from .exprgrammar import ExpressionError, parse_expression
from .graphs_core import GraphGenerator, RootedGraph
from .mass_transport import RootedDistribution, is_unimodular


class InputError(Exception):
    """Unreadable or malformed input description."""


class PreconditionError(Exception):
    """Well-formed input that the requested computation cannot accept."""


def _log(msg):
    print("[mtlab] " + msg, file=sys.stderr)


def _load_json_file(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError("cannot read %s: %s" % (path, exc))
    except json.JSONDecodeError as exc:
        raise InputError("malformed JSON in %s: %s" % (path, exc))


def _fraction_flag(text, flag):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise PreconditionError("%s wants a rational number, got %r"
                                % (flag, text))


def _float_list(text, flag):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise PreconditionError("%s wants comma-separated numbers, got %r"
                                % (flag, text))
    if not vals:
        raise PreconditionError("%s is empty" % flag)
    return vals


def _clean(obj):
    # JSON-safe copy: exact rationals as strings, numpy scalars unboxed
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, bytes):
        return obj.decode("ascii", "replace")
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_clean(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(x) for x in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _assemble(command, config, seed, checks):
    verdict = "PASS"
    if any(c["verdict"] == "HYPOTHESIS-VIOLATED" for c in checks):
        verdict = "HYPOTHESIS-VIOLATED"
    if any(c["verdict"] == "FAIL" for c in checks):
        verdict = "FAIL"
    return {"command": command, "config": _clean(config), "seed": seed,
            "checks": _clean(checks), "verdict": verdict}


def _emit(report, indent):
    print(json.dumps(report, sort_keys=True,
                     indent=indent if indent > 0 else None))


def _write_csv(path, fieldnames, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames)
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k) for k in fieldnames})
    _log("wrote %s" % path)


def _require_seed(args, why):
    if args.seed is None:
        raise PreconditionError("--seed is required: %s" % why)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_mtp_check(args):
    data = _load_json_file(args.measure)
    try:
        mu = RootedDistribution.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError("bad measure description in %s: %s"
                         % (args.measure, exc))
    tol = _fraction_flag(args.tol, "--tol")
    v = is_unimodular(mu, args.radius, tol=tol)
    check = {"name": "transport-identity",
             "verdict": "PASS" if v.passed else "FAIL",
             "radius": v.radius, "tolerance": tol,
             "kernels_checked": v.kernels_checked}
    if not v.passed:
        check["certificate"] = {
            "witness_ball_code": v.witness_code,
            "witness_gap": v.witness_gap,
            "replay": "indicator kernel of the coded doubly rooted "
                      "%d-ball against %s" % (args.radius, args.measure)}
    return _assemble("mtp-check",
                     {"measure": args.measure, "radius": args.radius,
                      "tol": tol}, None, [check])


def _graph_source(desc):
    if desc in GraphGenerator.RULES:
        return GraphGenerator(desc)
    data = _load_json_file(desc)
    try:
        if isinstance(data, dict) and "name" in data:
            return GraphGenerator.from_json(data)
        if isinstance(data, dict) and "atoms" in data:
            return RootedDistribution.from_json(data)
        return RootedGraph.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError("bad graph description in %s: %s" % (desc, exc))


def _cmd_bs_distance(args):
    if args.samples is not None:
        _require_seed(args, "--samples engages Monte Carlo estimation")
    if args.rmax < 1:
        raise PreconditionError("--rmax must be at least 1")
    a = _graph_source(args.a)
    b = _graph_source(args.b)
    rows = bs_limits.bs_distance_rows(a, b, args.rmax,
                                      mc_samples=args.samples,
                                      seed=args.seed)
    contribs = [r["contribution"] for r in rows]
    if all(isinstance(c, Fraction) for c in contribs):
        total = sum(contribs, Fraction(0))
    else:
        total = float(sum(float(c) for c in contribs))
    check = {"name": "local-statistics-distance", "verdict": "PASS",
             "distance": total, "exact": isinstance(total, Fraction),
             "rows": rows}
    if args.csv:
        _write_csv(args.csv, ["R", "tv", "weight", "contribution"],
                   [_clean(r) for r in rows])
    return _assemble("bs-distance",
                     {"a": args.a, "b": args.b, "rmax": args.rmax,
                      "samples": args.samples, "csv": args.csv},
                     args.seed, [check])


_GROUPS = {"s3": schreier_irs.s3_with_mixed_symbols,
           "d4": schreier_irs.dihedral_ambient,
           "s4": lambda: schreier_irs.symmetric_group_ambient(4)}


def _cmd_schreier(args):
    ambient, S = _GROUPS[args.group]()
    checks = []
    for i, cls in enumerate(sorted(ambient.subgroup_classes(),
                                   key=lambda c: (len(c[0]), len(c)))):
        w = Fraction(1, len(cls))
        irs = schreier_irs.IRSSpec(ambient,
                                   [(sorted(H), w) for H in cls])
        name = "class-%02d-order-%d-size-%d" % (i, len(cls[0]), len(cls))
        if not irs.invariant:
            checks.append({"name": name, "verdict": "FAIL",
                           "certificate": {"reason": "not conjugation "
                                           "invariant"}})
            continue
        mu = schreier_irs.irs_to_ursg(irs, S)
        v = is_unimodular(mu, args.radius)
        check = {"name": name, "verdict": "PASS" if v.passed else "FAIL",
                 "radius": args.radius,
                 "kernels_checked": v.kernels_checked}
        if not v.passed:
            check["certificate"] = {"witness_ball_code": v.witness_code,
                                    "witness_gap": v.witness_gap}
        checks.append(check)
    return _assemble("schreier",
                     {"group": args.group, "radius": args.radius},
                     None, checks)


def _cmd_poisson_audit(args):
    _require_seed(args, "sampling the point process is stochastic")
    data = _load_json_file(args.space)
    try:
        X = poisson_rooting.WeightedSpace.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError("bad space description in %s: %s"
                         % (args.space, exc))
    if args.region is None:
        region = list(range(len(X)))
    else:
        try:
            region = [int(x) for x in args.region.split(",") if x.strip()]
        except ValueError:
            raise PreconditionError("--region wants comma-separated indices")
    rep = poisson_rooting.poisson_audit(X, region, args.samples, args.seed)
    vol = rep["volume"]
    p0 = rep["count_hist"].get(0, 0.0)
    target = math.exp(-vol)
    sigma = math.sqrt(max(target * (1.0 - target), 1e-300) / args.samples)
    pmin = 1e-3
    checks = [
        {"name": "count-law", "verdict":
         "PASS" if rep["count_pvalue"] > pmin else "FAIL",
         "p_value": rep["count_pvalue"], "threshold": pmin},
        {"name": "placement-law", "verdict":
         "PASS" if rep["ks_pvalue"] > pmin else "FAIL",
         "p_value": rep["ks_pvalue"], "threshold": pmin},
        {"name": "janossy-uniformity", "verdict":
         "PASS" if rep["janossy_uniformity"] > pmin else "FAIL",
         "p_value": rep["janossy_uniformity"], "threshold": pmin},
        {"name": "empty-frequency", "verdict":
         "PASS" if abs(p0 - target) <= 4.0 * sigma else "FAIL",
         "observed": p0, "expected": target, "four_sigma": 4.0 * sigma},
    ]
    w = poisson_rooting.desingularization_weight(vol)
    exact = poisson_rooting.desingularization_identity(vol) == Fraction(1)
    checks.append({"name": "desingularization-identity",
                   "verdict": "PASS" if exact else "FAIL",
                   "weight": w, "volume": vol})
    for c in checks:
        if c["verdict"] == "FAIL":
            c["certificate"] = {"count_hist": rep["count_hist"],
                               "replay": "rerun with the echoed seed"}
    return _assemble("poisson-audit",
                     {"space": args.space, "region": args.region,
                      "samples": args.samples}, args.seed, checks)


def _cmd_chabauty_audit(args):
    _require_seed(args, "the audits draw random spaces and functions")
    rng = np.random.default_rng(args.seed)
    n = args.n
    ident_bad = 0
    ident_cert = None
    ident_trials = max(50, args.trials // 5)
    for _ in range(ident_trials):
        K = chabauty_metric.random_metric_space(rng, n)
        A = [i for i in range(n) if rng.random() < 0.5] or [0]
        B = [i for i in range(n) if rng.random() < 0.5] or [1]
        lhs = chabauty_metric.usc_distance(
            K, chabauty_metric.indicator(K, A),
            chabauty_metric.indicator(K, B))
        rhs = min(1.0, chabauty_metric.hausdorff(K, A, B))
        if lhs != rhs:
            ident_bad += 1
            if ident_cert is None:
                ident_cert = {"A": A, "B": B, "lhs": lhs, "rhs": rhs,
                              "dist": K.to_json()}
    lem = chabauty_metric.lemchab_audit(trials=args.trials, seed=args.seed,
                                        n=n)
    grid_worst = 0.0
    for _ in range(30):
        K = chabauty_metric.random_metric_space(rng, 6)
        phi = chabauty_metric.UscFunction(
            rng.uniform(0, 1, 6) * (rng.random(6) < 0.7))
        psi = chabauty_metric.UscFunction(
            rng.uniform(0, 1, 6) * (rng.random(6) < 0.7))
        gap = abs(chabauty_metric.usc_distance(K, phi, psi)
                  - chabauty_metric.usc_distance_grid(K, phi, psi,
                                                      resolution=1e-4))
        grid_worst = max(grid_worst, gap)
    checks = [
        {"name": "indicator-embeds-hausdorff",
         "verdict": "PASS" if ident_bad == 0 else "FAIL",
         "instances": ident_trials, "mismatches": ident_bad},
        {"name": "smoothing-comparison",
         "verdict": "PASS" if lem["violations"] == 0 else "FAIL",
         "trials": lem["trials"], "violations": lem["violations"]},
        {"name": "closed-form-vs-grid",
         "verdict": "PASS" if grid_worst <= 1e-4 else "FAIL",
         "worst_gap": grid_worst, "tolerance": 1e-4},
    ]
    if ident_cert is not None:
        checks[0]["certificate"] = ident_cert
    if lem["certificate"] is not None:
        checks[1]["certificate"] = lem["certificate"]
    return _assemble("chabauty-audit",
                     {"trials": args.trials, "n": n}, args.seed, checks)


def _cmd_thinthick(args):
    lengths = _float_list(args.geodesics, "--geodesics") \
        if args.geodesics else []
    eps_list = _float_list(args.eps, "--eps")
    try:
        S = model_geometry.SurfaceSpec(args.genus, args.cusps, lengths,
                                       epsilon0=args.epsilon0)
    except ValueError as exc:
        raise PreconditionError(str(exc))
    audit = model_geometry.thickbase_audit(S, eps_list=tuple(eps_list))
    rows = []
    for r in audit["rows"]:
        eps = r["eps"]
        area = sum(p.area for p in model_geometry.thin_decomposition(S, eps))
        rows.append({"eps": eps, "thin_area": area,
                     "fraction": r["fraction"], "bound": r["bound"]})
    checks = [{"name": "thin-fraction-bound",
               "verdict": "PASS" if audit["verdict"] == "PASS" else "FAIL",
               "violations": audit["violations"],
               "bound_decreasing": audit["bound_decreasing"],
               "rows": rows}]
    if audit["violations"]:
        bad = [r for r in audit["rows"] if not r["ok"]]
        checks[0]["certificate"] = {"violating_rows": bad}
    if args.csv:
        _write_csv(args.csv, ["eps", "thin_area", "fraction", "bound"], rows)
    if args.plot:
        _render_thinthick_plot(args.plot, rows)
    return _assemble("thinthick",
                     {"genus": args.genus, "cusps": args.cusps,
                      "geodesics": lengths, "epsilon0": args.epsilon0,
                      "eps": eps_list, "csv": args.csv, "plot": args.plot},
                     None, checks)


def _render_thinthick_plot(path, rows):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    eps = [r["eps"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(eps, [max(r["fraction"], 1e-300) for r in rows], "o-",
              label="thin fraction")
    ax.loglog(eps, [r["bound"] for r in rows], "s--",
              label="volume bound")
    ax.set_xlabel("thin threshold")
    ax.set_ylabel("proportion")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    _log("wrote %s" % path)


def _cmd_comparisons(args):
    modes = model_geometry.COMPARISON_MODES if args.mode == "all" \
        else (args.mode,)
    checks = []
    for mode in modes:
        rep = model_geometry.comparison_audit(mode)
        check = {"name": "divergence-bound-" + mode,
                 "verdict": rep["verdict"], "cells": rep["cells"],
                 "violations": rep["violations"],
                 "oracle_max_error": rep["oracle_max_error"]}
        if rep["worst"] is not None:
            check["certificate"] = rep["worst"]
        checks.append(check)
    if args.fellow_travel:
        _require_seed(args, "fellow-travel trials are randomized")
        ft = model_geometry.fellow_travel_audit(args.eps, args.time,
                                                args.curvature,
                                                trials=args.trials,
                                                seed=args.seed)
        checks.append({"name": "fellow-travel", "verdict": ft["verdict"],
                       "delta": ft["delta"], "engaged": ft["engaged"],
                       "violations": ft["violations"],
                       "trials": ft["trials"]})
    return _assemble("comparisons",
                     {"mode": args.mode, "fellow_travel": args.fellow_travel,
                      "eps": args.eps, "time": args.time,
                      "curvature": args.curvature, "trials": args.trials},
                     args.seed, checks)


def _cmd_flow_invariance(args):
    _require_seed(args, "the flowed cloud is sampled")
    try:
        expr = parse_expression(args.density)
    except ExpressionError as exc:
        raise InputError("bad --density expression: %s" % exc)
    bins = tuple(int(b) for b in _float_list(args.bins, "--bins"))
    if len(bins) != 3:
        raise PreconditionError("--bins wants three counts, got %r"
                                % (args.bins,))
    # the 0*x term forces scalar-valued expressions to broadcast
    mu = flows_unimodularity.TorusDensity(
        lambda x, y: (np.asarray(expr(x=x, y=y), dtype=float)
                      + 0.0 * np.asarray(x, dtype=float)))
    defect = flows_unimodularity.invariance_defect(
        mu, args.t, bins=bins, n=args.samples, seed=args.seed)
    noise = flows_unimodularity.defect_noise_scale(mu, bins=bins,
                                                   n=args.samples)
    threshold = 4.0 * noise
    invariant = defect <= threshold
    check = {"name": "lift-flow-invariance",
             "verdict": "PASS" if invariant else "HYPOTHESIS-VIOLATED",
             "defect": defect, "noise_scale": noise,
             "threshold": threshold, "time": args.t,
             "samples": args.samples, "bins": list(bins)}
    if not invariant:
        lb = flows_unimodularity.binned_pushforward_gap(mu, args.t)
        check["certificate"] = {
            "quadrature_lower_bound": lb,
            "note": "deterministic coarse-bin transport gap of the exact "
                    "lift law; a positive value needs no sampling"}
    return _assemble("flow-invariance",
                     {"density": args.density, "t": args.t,
                      "samples": args.samples, "bins": list(bins)},
                     args.seed, [check])


def _cmd_sasaki_check(args):
    _require_seed(args, "audit directions are sampled")
    checks = []
    if args.metric:
        try:
            g = sasaki_metric.metric_from_json(_load_json_file(args.metric))
        except (ExpressionError, KeyError, TypeError, ValueError) as exc:
            raise InputError("bad metric description in %s: %s"
                             % (args.metric, exc))
        battery = [("input-metric", g)]
    else:
        battery = [("flat-plane", sasaki_metric.flat_metric()),
                   ("hyperbolic-plane",
                    sasaki_metric.hyperbolic_plane_metric())]
        lift = sasaki_metric.sasaki_lift(sasaki_metric.flat_metric())
        worst = float(np.abs(
            lift.matrix([0.3, -0.7], [1.2, 0.4]) - np.eye(4)).max())
        checks.append({"name": "flat-lift-identity",
                       "verdict": "PASS" if worst == 0.0 else "FAIL",
                       "max_abs_error": worst})
    for name, g in battery:
        rep = sasaki_metric.relationship_audit(g, samples=args.samples,
                                               seed=args.seed)
        check = {"name": "vertical-derivative-" + name,
                 "verdict": rep["verdict"],
                 "block_error": rep["block_error"],
                 "derivative_error": rep["derivative_error"],
                 "samples": rep["samples"], "tolerance": 1e-6}
        if rep["verdict"] != "PASS":
            check["certificate"] = {"base_point": rep["base_point"]}
        checks.append(check)
    return _assemble("sasaki-check",
                     {"metric": args.metric, "samples": args.samples},
                     args.seed, checks)


def _cmd_suite(args):
    _require_seed(args, "the battery has Monte Carlo stages")
    checks = []
    for rep in acceptance.run_battery(args.seed):
        check = dict(rep)
        check["name"] = "criterion-%02d-%s" % (rep["criterion"], rep["name"])
        checks.append(check)
    if args.csv:
        _write_csv(args.csv, ["criterion", "name", "verdict"],
                   [_clean(c) for c in checks])
    return _assemble("suite", {"csv": args.csv}, args.seed, checks)


# ---------------------------------------------------------------------------
# parser


def _build_parser():
    p = argparse.ArgumentParser(
        prog="mtlab",
        description="verification toolkit for transport identities on "
                    "rooted spaces")
    p.add_argument("--json-indent", type=int, default=2,
                   help="stdout JSON indentation; 0 means compact")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        if seed:
            sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("mtp-check",
                        help="certify a rooted measure by indicator kernels")
    sp.add_argument("--measure", required=True)
    sp.add_argument("--radius", type=int, default=2)
    sp.add_argument("--tol", default="0")
    sp.set_defaults(handler=_cmd_mtp_check, seed=None)

    sp = sub.add_parser("bs-distance",
                        help="local-statistics distance between two sources")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--rmax", type=int, default=3)
    sp.add_argument("--samples", type=int, default=None)
    sp.add_argument("--csv", default=None)
    common(sp)
    sp.set_defaults(handler=_cmd_bs_distance)

    sp = sub.add_parser("schreier",
                        help="certify subgroup-class measures of a small "
                             "group")
    sp.add_argument("--group", choices=sorted(_GROUPS), default="s3")
    sp.add_argument("--radius", type=int, default=3)
    sp.set_defaults(handler=_cmd_schreier, seed=None)

    sp = sub.add_parser("poisson-audit",
                        help="test sampled point clouds against the "
                             "product law")
    sp.add_argument("--space", required=True)
    sp.add_argument("--region", default=None)
    sp.add_argument("--samples", type=int, default=100_000)
    common(sp)
    sp.set_defaults(handler=_cmd_poisson_audit)

    sp = sub.add_parser("chabauty-audit",
                        help="function-metric identities and smoothing "
                             "comparison")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--n", type=int, default=8)
    common(sp)
    sp.set_defaults(handler=_cmd_chabauty_audit)

    sp = sub.add_parser("thinthick",
                        help="thin-part areas and the thick-base bound "
                             "for a surface")
    sp.add_argument("--genus", type=int, required=True)
    sp.add_argument("--cusps", type=int, required=True)
    sp.add_argument("--geodesics", default="")
    sp.add_argument("--epsilon0", type=float, default=0.2)
    sp.add_argument("--eps", default="0.2,0.1,0.05,0.01")
    sp.add_argument("--csv", default=None)
    sp.add_argument("--plot", default=None)
    sp.set_defaults(handler=_cmd_thinthick, seed=None)

    sp = sub.add_parser("comparisons",
                        help="distance comparison bounds against the "
                             "integrator")
    sp.add_argument("--mode",
                    choices=("all",) + model_geometry.COMPARISON_MODES,
                    default="all")
    sp.add_argument("--fellow-travel", action="store_true")
    sp.add_argument("--eps", type=float, default=0.5)
    sp.add_argument("--time", type=float, default=3.0)
    sp.add_argument("--curvature", type=float, default=1.0)
    sp.add_argument("--trials", type=int, default=10_000)
    common(sp)
    sp.set_defaults(handler=_cmd_comparisons)

    sp = sub.add_parser("flow-invariance",
                        help="does the uniform lift of a torus density "
                             "survive the flow")
    sp.add_argument("--density", required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--samples", type=int, default=1_000_000)
    sp.add_argument("--bins", default="8,8,6")
    common(sp)
    sp.set_defaults(handler=_cmd_flow_invariance)

    sp = sub.add_parser("sasaki-check",
                        help="tangent-lift block and derivative identities")
    sp.add_argument("--metric", default=None)
    sp.add_argument("--samples", type=int, default=128)
    common(sp)
    sp.set_defaults(handler=_cmd_sasaki_check)

    sp = sub.add_parser("suite", help="run the full acceptance battery")
    sp.add_argument("--csv", default=None)
    common(sp)
    sp.set_defaults(handler=_cmd_suite)

    return p


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.time()
    try:
        report = args.handler(args)
    except InputError as exc:
        _log("input error: %s" % exc)
        return 2
    except PreconditionError as exc:
        _log("precondition failed: %s" % exc)
        return 3
    except ValueError as exc:
        _log("precondition failed: %s" % exc)
        return 3
    _emit(report, args.json_indent)
    _log("%s finished in %.2fs with verdict %s"
         % (args.command, time.time() - t0, report["verdict"]))
    return 0 if report["verdict"] != "FAIL" else 1


if __name__ == "__main__":
    sys.exit(main())
