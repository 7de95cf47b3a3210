"""Configuration-driven experiment runner.

Usage::

    setsum <experiment> [--config FILE] [--out DIR] [--threads K] [--dry-run] [flags]

``experiment`` is one of fclt, selfnorm, counterexample, entropy, orlicz,
lemma2, lemma1 (or ``version``).  A YAML config supplies any subset of the
experiment's keys; flags override it.  Each run writes ``summary.json``
(resolved plan and verdicts), one CSV per statistic, ``manifest.txt`` (SHA-256
of every deterministic artifact) and ``runtime.json`` (wall-clock times, the
only file that differs between identical runs).

Exit status: 0 all verdicts pass, 2 some fail, 3 some inconclusive (and none
fail), 1 usage or configuration error.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
from pathlib import Path
import sys
import time

import numpy as np
import yaml

from . import __version__
from . import diagnostics as dg
from . import entropy as en
from .laws import format_law, parse_law, second_moment
from .process import t_statistics
from .fields import sample_field
from .regions import (class_enumerate, counterexample_params, format_region, intersection_measure,
                      lebesgue, parse_region)
from .rng import replication_seed

OUTPUT_ENV = "SETSUM_OUTPUT"

COMMON = {"seed": 0, "threads": None, "output": None, "cap": dg.DEFAULT_CAP}

DEFAULTS = {
    "fclt": {
        "law": "gaussian:1", "d": 2, "n": 32, "reps": 2000,
        "regions": ["quadrant:0.5,0.5"],
        "pairs": [["quadrant:0.5,1", "quadrant:1,0.5"],
                  ["cells:m=2:[(1,1)]", "cells:m=2:[(2,2)]"]],
        "variance": "law", "ks_tol": None, "cov_slack": 1e-12,
    },
    "selfnorm": {
        "law": "pareto:2", "d": 1, "n": 4096, "reps": 2000,
        "regions": ["quadrant:0.5"], "ks_tol": 0.08, "t2_tol": 0.05,
        "scale": 1000.0, "scale_tol": 1e-12,
        "raikov_n": 100000, "raikov_reps": 500, "raikov_band": 0.25,
    },
    "counterexample": {"p": 1, "d": 1, "r": "2..5", "reps": 4000, "min_freq": 0.2, "n_se": 4.0},
    "entropy": {
        "p": 1, "d": 1, "R": 30, "grid_m": 64, "eps": [0.5, 0.25, 0.125],
        "tail_from": 20, "tail_tol": 1e-3, "cover_slack": 1,
    },
    "orlicz": {"constants": [0.5, 1.0, 3.0], "rtol": 1e-3},
    "lemma2": {
        "law": "gaussian:1", "region": "quadrant:0.7,0.7", "ladder": [8, 16, 32, 64],
        "reps": 2000, "lattice": "full", "final_tol": 0.35,
    },
    "lemma1": {"ns": [16, 32, 64], "reps": 400, "k_bound": 50.0, "stability_bound": 3.0},
}

EXPERIMENTS = tuple(DEFAULTS)


class ConfigError(ValueError):
    pass


def parse_r_range(value):
    """``"2..5"`` or a list of ints."""
    if isinstance(value, str):
        lo, sep, hi = value.partition("..")
        if not sep:
            return [int(v) for v in value.split(",")]
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in value]


def resolve(experiment, document=None, overrides=None):
    """Merge defaults, a config document and flag overrides; unknown keys raise ``ConfigError``."""
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    plan = {"experiment": experiment, **COMMON, **DEFAULTS[experiment]}
    for source in (document or {}, overrides or {}):
        for key, value in source.items():
            if key == "experiment":
                if value != experiment:
                    raise ConfigError(f"config is for experiment {value!r}, not {experiment!r}")
                continue
            if key not in plan:
                raise ConfigError(f"unknown key {key!r} for experiment {experiment!r}")
            plan[key] = value
    if plan["threads"] is None:
        plan["threads"] = os.cpu_count() or 1
    if plan["output"] is None:
        plan["output"] = str(Path(os.environ.get(OUTPUT_ENV, "results")) / experiment)
    _validate(plan)
    return plan


def _validate(plan):
    def need(key, ok, what):
        if not ok:
            raise ConfigError(f"key {key!r}: {what} (got {plan[key]!r})")

    need("seed", isinstance(plan["seed"], int) and plan["seed"] >= 0, "non-negative integer")
    need("threads", isinstance(plan["threads"], int) and plan["threads"] >= 1, "integer >= 1")
    for key in ("reps", "d", "n", "p", "R", "grid_m", "raikov_n", "raikov_reps"):
        if key in plan:
            need(key, isinstance(plan[key], int) and plan[key] >= 1, "integer >= 1")
    for key in ("law",):
        if key in plan:
            try:
                parse_law(plan[key])
            except ValueError as exc:
                raise ConfigError(f"key {key!r}: {exc}") from None
    try:
        if "regions" in plan:
            [parse_region(r) for r in plan["regions"]]
        if "region" in plan:
            parse_region(plan["region"])
        if "pairs" in plan:
            for pair in plan["pairs"]:
                if len(pair) != 2:
                    raise ValueError("each pair needs two regions")
                [parse_region(r) for r in pair]
        if "r" in plan:
            parse_r_range(plan["r"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"geometry: {exc}") from None
    if "variance" in plan:
        need("variance", plan["variance"] in ("law", "empirical"), "'law' or 'empirical'")
    if "lattice" in plan:
        need("lattice", plan["lattice"] in ("full", "positive"), "'full' or 'positive'")


# ---------------------------------------------------------------- output

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row[h]) for h in header])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    return obj


REPORT_HEADER = ["name", "observed", "target", "tolerance", "se", "sided", "verdict", "seed"]


class Artifacts:
    def __init__(self, out):
        self.out = Path(out)
        self.files = {}

    def add(self, name, text):
        self.files[name] = text

    def write(self, summary, runtimes):
        self.out.mkdir(parents=True, exist_ok=True)
        self.files["summary.json"] = json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n"
        for name, text in self.files.items():
            (self.out / name).write_text(text)
        lines = [f"{hashlib.sha256(self.files[k].encode()).hexdigest()}  {k}"
                 for k in sorted(self.files)]
        (self.out / "manifest.txt").write_text("\n".join(lines) + "\n")
        (self.out / "runtime.json").write_text(json.dumps(_jsonable(runtimes), indent=2) + "\n")


def _report_rows(reports):
    rows = []
    for r in reports:
        s = r.summary()
        s["se"] = "" if s["se"] is None else s["se"]
        s["seed"] = "" if s["seed"] is None else s["seed"]
        rows.append(s)
    return rows


# ------------------------------------------------------------ experiments

def run_fclt(plan, art):
    law = parse_law(plan["law"])
    regions = [parse_region(r) for r in plan["regions"]]
    pairs = [tuple(parse_region(r) for r in pair) for pair in plan["pairs"]]
    every = list(dict.fromkeys(regions + [r for pair in pairs for r in pair]))
    ep = dg.ExperimentPlan(law, plan["d"], plan["n"], tuple(every), "standard", plan["reps"],
                           plan["seed"], plan["threads"], plan["cap"])
    evs = dg.run_replications(ep)
    vals = np.array([e.normalized for e in evs])
    if plan["variance"] == "empirical" or not law.is_iid:
        var = float(np.mean([e.extra["mean_sq"] for e in evs]))
    else:
        var = second_moment(law)
    reports = []
    pos = {r: i for i, r in enumerate(every)}
    for reg in regions:
        rep = dg.fidi_gaussian_test(vals[:, pos[reg]], var * lebesgue(reg), plan["ks_tol"],
                                    name=f"fidi_ks[{format_region(reg)}]", seed=plan["seed"])
        reports.append(rep)
    for a, b in pairs:
        reports.append(dg.covariance_check(vals[:, pos[a]], vals[:, pos[b]],
                                           var * intersection_measure(a, b), plan["cov_slack"],
                                           name=f"cov[{format_region(a)}|{format_region(b)}]",
                                           seed=plan["seed"]))
    ev_rows = [dict(row, rep=j) for j, e in enumerate(evs) for row in e.rows()]
    art.add("evaluations.csv", csv_text(["rep", "region", "raw", "normalized", "normalization",
                                         "n", "d", "seed"], ev_rows))
    return reports, {"variance_scale": var}


def run_selfnorm(plan, art):
    law = parse_law(plan["law"])
    regions = [parse_region(r) for r in plan["regions"]]
    d, n, seed = plan["d"], plan["n"], plan["seed"]
    dg._check_cap(n ** d, plan["reps"], plan["cap"])
    scale = plan["scale"]

    def one(j):
        fld = sample_field(law, d, n, replication_seed(seed, j))
        big = fld.scaled(scale)
        out = []
        for reg in regions:
            ev = dg.evaluate(fld, [reg], "self")
            ev_big = dg.evaluate(big, [reg], "self")
            t1, t2 = t_statistics(fld, reg)
            b1, b2 = t_statistics(big, reg)
            drift = max(_rel(ev.normalized[0], ev_big.normalized[0]), _rel(t1, b1), _rel(t2, b2))
            out.append((ev.normalized[0], t1, t2, drift))
        return out

    res = np.array(dg.pmap(one, range(plan["reps"]), plan["threads"]))
    reports, rows = [], []
    for k, reg in enumerate(regions):
        lam = lebesgue(reg)
        tag = format_region(reg)
        reports.append(dg.fidi_gaussian_test(res[:, k, 0], lam, plan["ks_tol"],
                                             name=f"selfnorm_ks[{tag}]", seed=seed))
        reports.append(dg.TestReport(f"t2_median[{tag}]", float(np.nanmedian(res[:, k, 2])), lam,
                                     plan["t2_tol"], seed=seed))
        reports.append(dg.TestReport(f"scale_invariance[{tag}]", float(np.nanmax(res[:, k, 3])), 0.0,
                                     plan["scale_tol"], sided="upper", seed=seed,
                                     details={"scale": scale}))
        for j in range(plan["reps"]):
            rows.append({"rep": j, "region": tag, "self_normalized": res[j, k, 0],
                         "t1": res[j, k, 1], "t2_sq": res[j, k, 2]})
    art.add("selfnorm.csv", csv_text(["rep", "region", "self_normalized", "t1", "t2_sq"], rows))
    if plan["raikov_n"] and plan["raikov_reps"]:
        reports.append(dg.raikov_check(law, d, plan["raikov_n"], plan["raikov_reps"], seed,
                                       plan["threads"], plan["raikov_band"], plan["cap"]))
    return reports, {}


def _rel(a, b):
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def run_counterexample(plan, art):
    rep = dg.counterexample_experiment(plan["p"], plan["d"], parse_r_range(plan["r"]), plan["reps"],
                                       plan["seed"], plan["threads"], plan["min_freq"],
                                       plan["n_se"], plan["cap"])
    art.add("counterexample.csv", csv_text(
        ["r", "n_r", "beta_r", "k_r", "eps_r", "f_r", "oracle", "se", "verdict",
         "lambda_A", "min_stat_on_Wr"], rep.rows))
    return [rep], {}


def run_entropy(plan, art):
    p, d, R = plan["p"], plan["d"], plan["R"]
    series = en.counterexample_series(p, d, R)
    rows = [{"r": int(r), "term": t, "partial_sum": s, "majorant": m}
            for r, t, s, m in zip(series.r, series.terms, series.partial_sums, series.majorant)]
    art.add("series.csv", csv_text(["r", "term", "partial_sum", "majorant"], rows))
    tail = [row["term"] for row in rows if row["r"] >= plan["tail_from"]]
    reports = [dg.TestReport("series_tail_increment", max(tail) if tail else 0.0, 0.0,
                             plan["tail_tol"], sided="upper")]
    brows = []
    for r in range(1, R + 1):
        try:
            params = counterexample_params(p, d, r)
        except ValueError:
            break
        exact, simple = en.counterexample_entropy_bound(params)
        brows.append({"r": r, "k_r": params.k, "log_count_bound": exact,
                      "simplified": simple, "dominates": simple >= exact})
    art.add("bounds.csv", csv_text(["r", "k_r", "log_count_bound", "simplified", "dominates"], brows))
    worst = min(b["simplified"] - b["log_count_bound"] for b in brows)
    reports.append(dg.TestReport("bound_domination_margin", worst, 0.0, 1e-12, sided="lower",
                                 details={"r_max": brows[-1]["r"]}))
    grid = class_enumerate("quadrant_grid", plan["grid_m"], d=1)
    crows = []
    for eps in plan["eps"]:
        g, x = en.greedy_cover(grid, eps), en.exact_cover(grid, eps)
        crows.append({"eps": float(eps), "greedy": g, "exact": x, "excess": g - x})
        reports.append(dg.TestReport(f"greedy_excess[eps={eps!r}]", float(g - x), 0.0,
                                     plan["cover_slack"], sided="upper"))
    art.add("cover.csv", csv_text(["eps", "greedy", "exact", "excess"], crows))
    eps_grid = np.array(sorted(plan["eps"], reverse=True), dtype=float)
    prof = en.empirical_profile(grid, eps_grid)
    art.add("profile.csv", prof.to_csv())
    integral = en.entropy_integral(prof)
    return reports, {"entropy_integral": integral.value, "integral_lower_limit": integral.lower,
                     "series_limit_estimate": float(series.partial_sums[-1])}


def run_orlicz(plan, art):
    reports, rows = [], []
    for a in plan["constants"]:
        z = np.full(16, float(a))
        for psi, target in (("psi1", a / math.log(2.0)), ("psi2", a / math.sqrt(math.log(2.0)))):
            got = dg.orlicz_norm(z, psi)
            rel = abs(got - target) / target
            rows.append({"a": float(a), "psi": psi, "norm": got, "target": target, "rel_err": rel})
            reports.append(dg.TestReport(f"orlicz_{psi}[a={a!r}]", rel, 0.0, plan["rtol"],
                                         sided="upper"))
    art.add("orlicz.csv", csv_text(["a", "psi", "norm", "target", "rel_err"], rows))
    return reports, {}


def run_lemma2(plan, art):
    law = parse_law(plan["law"])
    rep = dg.lemma2_check(law, parse_region(plan["region"]), plan["ladder"], plan["reps"],
                          plan["seed"], plan["lattice"], plan["final_tol"], plan["threads"],
                          plan["cap"])
    art.add("lemma2.csv", csv_text(["n", "estimate", "se", "oracle", "verdict"], rep.rows))
    return [rep], {}


def run_lemma1(plan, art):
    rep = dg.lemma1_sweep(dg.default_lemma1_configs(), plan["ns"], plan["reps"], plan["seed"],
                          plan["threads"], plan["k_bound"], plan["stability_bound"])
    art.add("lemma1.csv", csv_text(["config", "n", "pairs", "max_rho", "bracket", "psi1_norm",
                                    "ratio"], rep.rows))
    return [rep], {}


RUNNERS = {
    "fclt": run_fclt, "selfnorm": run_selfnorm, "counterexample": run_counterexample,
    "entropy": run_entropy, "orlicz": run_orlicz, "lemma2": run_lemma2, "lemma1": run_lemma1,
}


def execute(plan):
    """Run a resolved plan, write artifacts, return the exit status."""
    t0 = time.perf_counter()
    art = Artifacts(plan["output"])
    reports, extra = RUNNERS[plan["experiment"]](plan, art)
    art.add("reports.csv", csv_text(REPORT_HEADER, _report_rows(reports)))
    verdicts = [r.verdict for r in reports]
    status = 0
    if "fail" in verdicts:
        status = 2
    elif "inconclusive" in verdicts:
        status = 3
    echo = {k: v for k, v in plan.items() if k not in ("threads", "output")}
    summary = {
        "experiment": plan["experiment"],
        "plan": echo,
        "seed": plan["seed"],
        "reports": [r.summary() for r in reports],
        "extra": extra,
        "status": status,
        "version": __version__,
    }
    runtimes = {"total": time.perf_counter() - t0, "threads": plan["threads"],
                "reports": {r.name: r.runtime for r in reports}}
    art.write(summary, runtimes)
    return status, reports


# ------------------------------------------------------------ argument parsing

def _listof(conv):
    return lambda text: [conv(v) for v in text.split(",")]


FLAG_TYPES = {
    "law": str, "d": int, "n": int, "reps": int, "seed": int, "p": int, "R": int, "r": str,
    "regions": str, "region": str, "variance": str, "ks_tol": float, "cov_slack": float,
    "t2_tol": float, "scale": float, "scale_tol": float, "raikov_n": int, "raikov_reps": int,
    "raikov_band": float, "min_freq": float, "n_se": float, "grid_m": int,
    "eps": _listof(float), "tail_from": int, "tail_tol": float, "cover_slack": int,
    "constants": _listof(float), "rtol": float, "ladder": _listof(int), "lattice": str,
    "final_tol": float, "ns": _listof(int), "k_bound": float, "stability_bound": float,
    "cap": int, "pairs": str,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="setsum", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    sub.add_parser("version", help="print the package version")
    for exp in EXPERIMENTS:
        sp = sub.add_parser(exp)
        sp.add_argument("--config", help="YAML config document")
        sp.add_argument("--out", dest="output", help=f"output directory (default ${OUTPUT_ENV}/<experiment>)")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--dry-run", action="store_true", help="print the resolved plan and exit")
        for key in ["seed", "cap", *DEFAULTS[exp]]:
            if key == "regions":
                sp.add_argument("--regions", nargs="+")
            elif key == "pairs":
                sp.add_argument("--pairs", nargs="+", metavar="A|B")
            else:
                sp.add_argument(f"--{key.replace('_', '-')}", dest=key, type=FLAG_TYPES[key])
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    if args.experiment == "version":
        print(__version__)
        return 0
    flags = {k: v for k, v in vars(args).items()
             if v is not None and k not in ("experiment", "config", "dry_run")}
    if "pairs" in flags:
        flags["pairs"] = [p.split("|") for p in flags["pairs"]]
    try:
        document = {}
        if args.config:
            document = yaml.safe_load(Path(args.config).read_text()) or {}
            if not isinstance(document, dict):
                raise ConfigError("config document must be a mapping")
        plan = resolve(args.experiment, document, flags)
    except (ConfigError, OSError, yaml.YAMLError) as exc:
        print(f"setsum: configuration error: {exc}", file=sys.stderr)
        return 1
    if args.dry_run:
        print(json.dumps(_jsonable(plan), indent=2, sort_keys=True))
        return 0
    try:
        status, reports = execute(plan)
    except ValueError as exc:
        print(f"setsum: {exc}", file=sys.stderr)
        return 1
    for r in reports:
        print(f"{r.verdict.upper():12s} {r.name}: observed={r.observed:.6g} "
              f"target={r.target:.6g} tol={r.tolerance:.3g}")
    print(f"artifacts: {plan['output']}")
    return status


if __name__ == "__main__":
    sys.exit(main())
