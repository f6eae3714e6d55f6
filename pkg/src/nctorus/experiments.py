"""Experiment runners behind the CLI.

Each runner takes one validated experiment dict plus run options and returns
a JSON-ready result with per-check pass/fail entries.  Runners are pure
functions of their inputs and the seed, so they can run in separate worker
processes.
"""

from __future__ import annotations

import math
import time

from .algebra import commutator, one
from .config import DEFAULT_THETA, Context, build_element, parse_coeff, random_self_adjoint
from .funccalc import DEFAULT_TOL
from .geometry import (
    certificate_dict,
    compatibility_suite,
    conformal_metric,
    connection_coeffs,
    curvature_1212,
    diagonal_metric,
    flat_metric,
    gauss_bonnet_conformal,
    gauss_bonnet_diagonal,
    general_metric,
    metric_inverse,
    realness_defect,
    torsion_defect,
)
from .inner_derivations import (
    InnerDerivation,
    MuMap,
    SpanError,
    bracket_identity_residual,
    default_probes,
    general_inner_curvature,
    inner_curvature,
    kernel_residual,
    normalize_inner,
    perturbed_compatibility_check,
)
from .module import AlgebraMatrix, ModuleVector, basis_vector

DEFAULT_AXIOM_RADIUS = 20


def num(x):
    """JSON-safe number: complex as ``[re, im]``, non-finite floats as strings."""
    if x is None:
        return None
    if isinstance(x, complex):
        return [num(x.real), num(x.imag)]
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _check(name, value, limit, mode="max"):
    """``value <= limit`` (``mode='max'``) or ``value >= limit`` (``mode='min'``)."""
    ok = value <= limit if mode == "max" else value >= limit
    return {"name": name, "value": num(value), "limit": num(limit), "mode": mode, "pass": bool(ok)}


def _context(exp, opts, radius):
    return Context(exp.get("theta", opts.get("theta", DEFAULT_THETA)),
                   exp.get("tol", opts.get("tol", DEFAULT_TOL)),
                   radius, opts.get("seed", 0), opts.get("q", 101))


def _build_metric(spec, ctx, label):
    kind = spec["kind"]
    el = {k: build_element(v, ctx, f"{label}.{k}") for k, v in spec.items() if k != "kind"}
    if kind == "flat":
        return flat_metric(ctx.theta)
    if kind == "diagonal":
        return diagonal_metric(el["a1"], el["a2"], ctx.q)
    if kind == "conformal":
        return conformal_metric(el["h"], ctx.tol, ctx.policy)
    return general_metric(el["g11"], el["g12"], el["g22"], ctx.q)


# -- Gauss-Bonnet -------------------------------------------------------------------------


def gauss_bonnet_once(exp, opts, radius):
    """One Gauss-Bonnet evaluation at truncation radius ``radius``."""
    ctx = _context(exp, opts, radius)
    spec = exp["metric"]
    label = exp["name"] + ".metric"
    t0 = time.perf_counter()
    # the path distance is reported, and asserted only on request
    kw = dict(tol=ctx.tol, policy=ctx.policy, q=ctx.q, full_output=True, strict=False,
              check_paths=False)
    if spec["kind"] == "conformal":
        h = build_element(spec["h"], ctx, label + ".h")
        value, rep = gauss_bonnet_conformal(h, **kw)
    else:
        if spec["kind"] == "flat":
            a1 = a2 = one(ctx.theta)
        else:
            a1 = build_element(spec["a1"], ctx, label + ".a1")
            a2 = build_element(spec["a2"], ctx, label + ".a2")
        value, rep = gauss_bonnet_diagonal(a1, a2, **kw)
    residuals = {k: rep[k] for k in ("inverse_residual", "inv_sqrt_residual", "exp_residual",
                                     "path_distance") if k in rep}
    return {
        "N": radius,
        "theta": ctx.theta,
        "tol": ctx.tol,
        "value": num(complex(value)),
        "abs_value": num(abs(value)),
        "curvature_l1": num(rep["curvature_l1"]),
        "tail_mass": num(rep["tail_mass"]),
        "residuals": {k: num(v) for k, v in residuals.items()},
        "max_residual": num(max((v for k, v in residuals.items()
                                 if v is not None and k != "path_distance"), default=0.0)),
        "converged": bool(rep["converged"]),
        "certificates": rep["certificates"],
        "seconds": time.perf_counter() - t0,
    }


def run_gauss_bonnet(exp, opts):
    radii = list(exp.get("radii", [40]))
    max_n = opts.get("max_n")
    notes = []
    if max_n is not None:
        kept = [n for n in radii if n <= max_n]
        if len(kept) < len(radii):
            notes.append(f"radii above --max-n {max_n} dropped: {[n for n in radii if n > max_n]}")
        radii = kept or [max_n]
    runs = [gauss_bonnet_once(exp, opts, n) for n in radii]
    checks = []
    rules = exp.get("assert", {})
    if "abs_max" in rules:
        checks.append(_check("final |value|", runs[-1]["abs_value"], rules["abs_max"]))
    if "monotone_factor" in rules:
        factor = rules["monotone_factor"]
        # values under the functional-calculus tolerance are treated as noise
        floor = runs[-1]["tol"]
        worst = 0.0
        for prev, cur in zip(runs, runs[1:]):
            worst = max(worst, cur["abs_value"] / max(prev["abs_value"], floor))
        checks.append(_check("max |value| growth ratio across N", worst, factor))
    if "path_max" in rules:
        dist = max((r["residuals"].get("path_distance") or 0.0) for r in runs)
        checks.append(_check("dual-path curvature distance", dist, rules["path_max"]))
    return {"runs": runs, "checks": checks, "notes": notes}


# -- connection axioms --------------------------------------------------------------------


def _random_vectors(ctx, label, count):
    rng = ctx.rng(label)
    out = []
    for _ in range(count):
        x1 = random_self_adjoint(rng, ctx.theta, 1, 0.5, 0.0)
        x2 = random_self_adjoint(rng, ctx.theta, 1, 0.5, 0.0)
        out.append(ModuleVector(x1, x2))
    return out


def run_axioms(exp, opts):
    ctx = _context(exp, opts, exp.get("radius", DEFAULT_AXIOM_RADIUS))
    t0 = time.perf_counter()
    g = _build_metric(exp["metric"], ctx, exp["name"] + ".metric")
    conn = connection_coeffs(g, ctx.tol, ctx.policy, q=ctx.q, strict=False)
    probes = _random_vectors(ctx, exp["name"] + ".probes", exp.get("random_probes", 2))
    rules = exp.get("assert", {})
    _, path = curvature_1212(conn, ctx.tol, check=False, full_output=True)
    checks = [
        _check("metric compatibility", compatibility_suite(conn, probes),
               rules.get("compatibility_max", 1e-9)),
        _check("realness defect", realness_defect(conn), rules.get("realness_max", 1e-12)),
        _check("torsion defect", torsion_defect(conn), 0.0),
    ]
    if path is not None:
        checks.append(_check("dual-path curvature distance", path, rules.get("path_max", 1e-9)))
    run = {
        "N": ctx.radius,
        "theta": ctx.theta,
        "inverse_residual": num(conn.residual),
        "tail_mass": num(ctx.policy.tail_report),
        "certificates": [certificate_dict(c) for c in g.certificates],
        "seconds": time.perf_counter() - t0,
    }
    return {"runs": [run], "checks": checks, "notes": []}


# -- inner-derivation probe suites -------------------------------------------------------


def _mu_value(spec, g, ctx, label):
    if "gamma_poly" in spec:
        return g.entries.polyval([parse_coeff(c) for c in spec["gamma_poly"]])
    if "identity_times" in spec:
        e = build_element(spec["identity_times"], ctx, label)
        return AlgebraMatrix.diag(e, e)
    rows = spec["matrix"]
    return AlgebraMatrix([[build_element(e, ctx, f"{label}[{i}][{j}]") for j, e in enumerate(r)]
                          for i, r in enumerate(rows)])


def _rule(name, theta):
    if name == "zero":
        return lambda d: AlgebraMatrix.zeros(theta)
    # mu(a) = -a I2 respects brackets
    return lambda d: AlgebraMatrix.diag(d.a_tilde, d.a_tilde).scale(-1)


def run_probe_suite(exp, opts):
    ctx = _context(exp, opts, exp.get("radius", DEFAULT_AXIOM_RADIUS))
    theta = ctx.theta
    name = exp["name"]
    t0 = time.perf_counter()
    g = _build_metric(exp["metric"], ctx, name + ".metric")
    inverse, _ = metric_inverse(g, ctx.tol, ctx.policy, ctx.q, strict=False)
    derivs_spec = exp.get("derivations", "default")
    if derivs_spec == "default":
        derivs = default_probes(theta)
    else:
        derivs = [normalize_inner(build_element(e, ctx, f"{name}.derivations[{i}]"))
                  for i, e in enumerate(derivs_spec)]
    mu_spec = exp["mu"]
    rule = None
    if isinstance(mu_spec, str):
        rule = _rule(mu_spec, theta)
        mu = MuMap([(d, rule(d)) for d in derivs], theta)
    else:
        if len(mu_spec) != len(derivs):
            raise ValueError(f"{len(mu_spec)} mu values for {len(derivs)} derivations")
        mu = MuMap([(d, _mu_value(v, g, ctx, f"{name}.mu[{i}]"))
                    for i, (d, v) in enumerate(zip(derivs, mu_spec))], theta)
    for i, ext in enumerate(exp.get("extensions", [])):
        d = normalize_inner(build_element(ext["derivation"], ctx, f"{name}.extensions[{i}]"))
        mu = mu.extend(d, _mu_value(ext["value"], g, ctx, f"{name}.extensions[{i}].value"))

    kernel = max(kernel_residual(v, g, ctx.tol, ctx.policy, inverse) for _, v in mu.pairs)
    vectors = [basis_vector(theta, 1), basis_vector(theta, 2),
               *_random_vectors(ctx, name + ".probes", 1)]
    compat = max(perturbed_compatibility_check(g, mu, d, X, Y)
                 for d in derivs for X in vectors for Y in vectors)

    pairs, skipped = [], []
    curv, cross = 0.0, 0.0
    probe_elems = [basis_vector(theta, 1)[0], vectors[2][0], vectors[2][1]]
    bracket_id = 0.0
    for i, a in enumerate(derivs):
        for j, b in enumerate(derivs):
            if i == j:
                continue
            entry = {"pair": [i, j]}
            try:
                r = inner_curvature(g, mu, a, b)
            except SpanError as exc:
                if rule is not None and exp.get("extend_brackets", False):
                    br = InnerDerivation(commutator(b.a_tilde, a.a_tilde))
                    mu = mu.extend(br, rule(br))
                    r = inner_curvature(g, mu, a, b)
                    entry["extended"] = True
                else:
                    entry["skipped"] = str(exc)
                    skipped.append([i, j])
                    pairs.append(entry)
                    continue
            r2 = general_inner_curvature(g, mu, a, b)
            entry["curvature_norm"] = num(r.norm())
            entry["cross_path"] = num((r - r2).norm())
            curv = max(curv, r.norm())
            cross = max(cross, (r - r2).norm())
            bracket_id = max(bracket_id, bracket_identity_residual(a, b, probe_elems))
            pairs.append(entry)

    rules = exp.get("assert", {})
    measured = {
        "kernel_residual": kernel,
        "compatibility_residual": compat,
        "max_curvature_norm": curv,
        "max_cross_path": cross,
        "bracket_identity_residual": bracket_id,
    }
    checks = []
    for key, label, mode, field in (
        ("kernel_max", "kernel residual", "max", "kernel_residual"),
        ("compatibility_max", "perturbed compatibility residual", "max", "compatibility_residual"),
        ("curvature_max", "max inner curvature norm", "max", "max_curvature_norm"),
        ("curvature_min", "max inner curvature norm", "min", "max_curvature_norm"),
        ("cross_path_max", "inner/general curvature agreement", "max", "max_cross_path"),
    ):
        if key in rules:
            checks.append(_check(label, measured[field], rules[key], mode))
    run = {
        "N": ctx.radius,
        "theta": theta,
        **{k: num(v) for k, v in measured.items()},
        "pairs": pairs,
        "skipped_pairs": skipped,
        "tail_mass": num(ctx.policy.tail_report),
        "seconds": time.perf_counter() - t0,
    }
    notes = [f"{len(skipped)} pair(s) skipped: bracket outside the span of mu"] if skipped else []
    return {"runs": [run], "checks": checks, "notes": notes}


RUNNERS = {"gauss_bonnet": run_gauss_bonnet, "axioms": run_axioms, "probe_suite": run_probe_suite}


def run_experiment(exp, opts):
    """Run one experiment; numerical failures become status ``failed``."""
    t0 = time.perf_counter()
    out = {"name": exp["name"], "type": exp["type"], "inputs": exp}
    try:
        res = RUNNERS[exp["type"]](exp, opts)
    except Exception as exc:  # numerical failure: record and keep going
        out.update(status="failed", error=f"{type(exc).__name__}: {exc}", runs=[], checks=[],
                   notes=[])
    else:
        ok = all(c["pass"] for c in res["checks"])
        out.update(status="pass" if ok else "tolerance_failure", **res)
    out["seconds"] = time.perf_counter() - t0
    return out
