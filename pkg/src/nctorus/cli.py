"""Command-line experiment runner.

    nctorus run   --config exp.json [--out report.json]
    nctorus sweep --config exp.json --param N|theta|tol [--out table.csv]

Exit codes: 0 all asserted tolerances met, 1 tolerance or numerical
failure, 2 configuration error.  ``NCT_THREADS`` caps the number of worker
processes (default 1).
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import ConfigError, load_config
from .experiments import gauss_bonnet_once, run_experiment

REPORT_VERSION = 1
SWEEP_COLUMNS = ("param", "gb_value_re", "gb_value_im", "tail_mass", "max_residual", "seconds")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _threads():
    raw = os.environ.get("NCT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError("NCT_THREADS", f"expected a positive integer, got {raw!r}") from None


def _options(cfg, args):
    opts = {"seed": args.seed, "q": args.oracle_q, "max_n": args.max_n}
    for key in ("theta", "tol"):
        if key in cfg:
            opts[key] = cfg[key]
    return opts


def run_config(cfg, opts, fail_fast=False, threads=1):
    """Run every experiment; results keep config order whatever the pool does."""
    exps = cfg["experiments"]
    if threads > 1 and len(exps) > 1 and not fail_fast:
        with ProcessPoolExecutor(max_workers=min(threads, len(exps))) as pool:
            return list(pool.map(run_experiment, exps, [opts] * len(exps)))
    results = []
    for exp in exps:
        if fail_fast and results and results[-1]["status"] != "pass":
            results.append({"name": exp["name"], "type": exp["type"], "inputs": exp,
                            "status": "skipped", "runs": [], "checks": [], "notes": ["--fail-fast"]})
            continue
        results.append(run_experiment(exp, opts))
    return results


def build_report(cfg, opts, results):
    statuses = [r["status"] for r in results]
    return {
        "schema": "nctorus.report",
        "version": REPORT_VERSION,
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "options": {"seed": opts["seed"], "oracle_q": opts["q"], "max_n": opts["max_n"]},
        "config_version": cfg["version"],
        "experiments": results,
        "summary": {s: statuses.count(s) for s in ("pass", "tolerance_failure", "failed", "skipped")},
        "status": "pass" if all(s == "pass" for s in statuses) else "fail",
    }


def dump_report(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _write(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def cmd_run(args):
    cfg = load_config(args.config)
    opts = _options(cfg, args)
    results = run_config(cfg, opts, args.fail_fast, _threads())
    report = build_report(cfg, opts, results)
    _write(dump_report(report), args.out)
    for r in results:
        print(f"{r['status']:>17}  {r['name']}", file=sys.stderr)
    return EXIT_OK if report["status"] == "pass" else EXIT_FAIL


def _sweep_target(cfg, name):
    gb = [e for e in cfg["experiments"] if e["type"] == "gauss_bonnet"]
    name = name or cfg.get("sweep", {}).get("experiment")
    if name is not None:
        gb = [e for e in gb if e["name"] == name]
        if not gb:
            raise ConfigError("sweep.experiment", f"no gauss_bonnet experiment named {name!r}")
    if not gb:
        raise ConfigError("experiments", "sweep needs a gauss_bonnet experiment")
    return gb[0]


def sweep_rows(cfg, param, opts, experiment=None):
    """One row per parameter value: ``(param, re, im, tail, max_residual, seconds, ok)``."""
    exp = _sweep_target(cfg, experiment)
    values = cfg.get("sweep", {}).get(param)
    radius = max(exp.get("radii", [40]))
    if opts.get("max_n") is not None:
        radius = min(radius, opts["max_n"])
    if values is None:
        if param != "N":
            raise ConfigError(f"sweep.{param}", f"no values given for a {param} sweep")
        values = exp.get("radii", [40])
    limit = exp.get("assert", {}).get("abs_max")
    rows = []
    for v in values:
        e = copy.deepcopy(exp)
        n = radius
        if param == "N":
            if opts.get("max_n") is not None and v > opts["max_n"]:
                continue
            n = int(v)
        else:
            e[param] = v
        try:
            run = gauss_bonnet_once(e, opts, n)
        except Exception as exc:  # numerical failure: row of NaNs, sweep continues
            print(f"sweep {param}={v}: {type(exc).__name__}: {exc}", file=sys.stderr)
            rows.append((v, float("nan"), float("nan"), float("nan"), float("nan"), 0.0, False))
            continue
        re, im = run["value"]
        # a tol sweep loosens the target: the value only has to sit below the row's tol
        bound = limit if param != "tol" or limit is None else max(limit, v)
        ok = bound is None or run["abs_value"] <= bound
        rows.append((v, re, im, run["tail_mass"], run["max_residual"], run["seconds"], ok))
    return rows


def format_sweep(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row[:6]])
    return buf.getvalue()


def cmd_sweep(args):
    cfg = load_config(args.config)
    opts = _options(cfg, args)
    rows = sweep_rows(cfg, args.param, opts, args.experiment)
    _write(format_sweep(rows), args.out)
    return EXIT_OK if all(r[6] for r in rows) else EXIT_FAIL


def build_parser():
    parser = argparse.ArgumentParser(prog="nctorus", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--seed", type=int, default=0, help="seed for random probes and elements")
        p.add_argument("--oracle-q", type=int, default=101, help="matrix oracle size")
        p.add_argument("--max-n", type=int, default=None, help="cap on truncation radius")
        p.add_argument("--fail-fast", action="store_true", help="skip experiments after a failure")

    p_run = sub.add_parser("run", help="run all experiments and write a JSON report")
    common(p_run)
    p_run.set_defaults(func=cmd_run)
    p_sweep = sub.add_parser("sweep", help="sweep one parameter of a Gauss-Bonnet experiment")
    common(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=("N", "theta", "tol"))
    p_sweep.add_argument("--experiment", default=None, help="experiment name (default: first)")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.oracle_q < 3:
        print("error: --oracle-q must be at least 3", file=sys.stderr)
        return EXIT_CONFIG
    if args.max_n is not None and args.max_n < 1:
        print("error: --max-n must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
