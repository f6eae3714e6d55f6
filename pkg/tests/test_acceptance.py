"""Acceptance suite: one test per criterion, each records a pass/fail line.

Run with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""

import functools
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from conftest import ACCEPTANCE, random_element
from nctorus.algebra import (
    TruncationPolicy,
    add,
    commutator,
    derive,
    generator,
    mul,
    norm_l1,
    one,
    scale,
    star,
    trace,
)
from nctorus.config import random_self_adjoint
from nctorus.funccalc import inv_sqrt, invert
from nctorus.geometry import (
    compatibility_suite,
    conformal_metric,
    connection_coeffs,
    curvature_1212,
    diagonal_metric,
    flat_metric,
    gauss_bonnet_conformal,
    gauss_bonnet_diagonal,
    realness_defect,
    torsion_defect,
)
from nctorus.inner_derivations import (
    InnerDerivation,
    MuMap,
    basis_compatibility_residual,
    default_probes,
    general_inner_curvature,
    inner_curvature,
    make_commutant_mu,
    mu_kernel_check,
    perturbed_compatibility_check,
)
from nctorus.module import AlgebraMatrix, ModuleVector, basis_vector
from nctorus.oracle import represent

THETA = 1 / math.pi
TOL = 1e-12
RADII = (20, 30, 40)
SEED = 20240611


def record(key, ok, detail):
    ACCEPTANCE[key] = (bool(ok), detail)
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
    assert ok, detail


def circ(j, theta=THETA):
    u = generator(theta, j)
    return add(add(u, one(theta, 3.0)), star(u))


def class_ii_a1(theta=THETA):
    u1, u2 = generator(theta, 1), generator(theta, 2)
    return add(one(theta, 3.0), add(add(u1, star(u1)), scale(0.5, add(u2, star(u2)))))


def conformal_h(theta=THETA):
    u1, u2 = generator(theta, 1), generator(theta, 2)
    return add(scale(0.4, add(u1, star(u1))), scale(0.3, add(u2, star(u2))))


@functools.lru_cache(maxsize=None)
def class_i_run(radius):
    t0 = time.perf_counter()
    value, rep = gauss_bonnet_diagonal(circ(1), circ(2), TOL, TruncationPolicy(radius),
                                       full_output=True, strict=False)
    return value, rep, time.perf_counter() - t0


@functools.lru_cache(maxsize=None)
def class_ii_run(radius=40):
    a1 = class_ii_a1()
    a2 = invert(a1, TOL, TruncationPolicy(radius))
    return gauss_bonnet_diagonal(a1, a2, TOL, TruncationPolicy(radius), full_output=True, strict=False)


@functools.lru_cache(maxsize=None)
def conformal_run(radius=40):
    return gauss_bonnet_conformal(conformal_h(), TOL, TruncationPolicy(radius), full_output=True,
                                  strict=False)


def below_within(values, factor=2.0, floor=TOL):
    """Each value at most ``factor`` times the previous one, rounding below ``floor`` ignored."""
    return all(abs(b) <= factor * max(abs(a), floor) for a, b in zip(values, values[1:]))


# -- 1: class (i) ------------------------------------------------------------------------------


def test_criterion_1_class_i_gauss_bonnet():
    runs = [class_i_run(n) for n in RADII]
    values = [abs(v) for v, _, _ in runs]
    tails = [rep["tail_mass"] for _, rep, _ in runs]
    seconds = runs[-1][2]
    ok = values[-1] <= 1e-8 and below_within(values) and seconds <= 120
    record(1, ok, f"|GB| at N={RADII}: {', '.join(f'{v:.2e}' for v in values)} (<= 1e-8, "
                  f"monotone within 2x), tail mass {', '.join(f'{t:.1e}' for t in tails)}, "
                  f"N=40 in {seconds:.1f}s (<= 120s)")


# -- 2: class (ii) -----------------------------------------------------------------------------


def test_criterion_2_class_ii_gauss_bonnet():
    value, rep = class_ii_run()
    lam = rep["certificates"][0]["lambda_min"]
    ok = lam >= 0.4 and abs(value) <= 1e-7
    record(2, ok, f"lambda_min(a1)={lam:.4f} (>= 0.4), |GB|={abs(value):.2e} at N=40 (<= 1e-7)")


# -- 3: conformal ------------------------------------------------------------------------------


def test_criterion_3_conformal_gauss_bonnet():
    value, rep = conformal_run()
    record(3, abs(value) <= 1e-7, f"|tau(R e^-h)|={abs(value):.2e} at N=40 (<= 1e-7)")


# -- 4: connection axioms ----------------------------------------------------------------------


def random_metric(rng, k):
    if k % 2 == 0:
        return diagonal_metric(random_self_adjoint(rng, THETA, 1, 0.3, 3.0),
                               random_self_adjoint(rng, THETA, 1, 0.3, 3.0))
    return conformal_metric(random_self_adjoint(rng, THETA, 1, 0.15, 0.0), TOL, TruncationPolicy(20))


def test_criterion_4_connection_axioms():
    rng = np.random.default_rng(SEED)
    policy = TruncationPolicy(20)
    worst = dict(compat=0.0, real=0.0, torsion=0.0, path=0.0)
    t0 = time.perf_counter()
    for k in range(50):
        g = random_metric(rng, k)
        conn = connection_coeffs(g, TOL, policy, strict=False)
        probes = [ModuleVector(random_self_adjoint(rng, THETA, 1, 0.5, 0.0),
                               random_self_adjoint(rng, THETA, 1, 0.5, 0.0))]
        _, path = curvature_1212(conn, TOL, check=False, full_output=True)
        worst["compat"] = max(worst["compat"], compatibility_suite(conn, probes))
        worst["real"] = max(worst["real"], realness_defect(conn))
        worst["torsion"] = max(worst["torsion"], torsion_defect(conn))
        worst["path"] = max(worst["path"], path)
    ok = (worst["compat"] <= 1e-9 and worst["real"] <= 1e-12 and worst["torsion"] == 0.0
          and worst["path"] <= 1e-9)
    record(4, ok, f"50 metrics in {time.perf_counter() - t0:.1f}s: compatibility {worst['compat']:.1e} "
                  f"(<= 1e-9), realness {worst['real']:.1e} (<= 1e-12), torsion {worst['torsion']} "
                  f"(== 0), dual path {worst['path']:.1e} (<= 1e-9)")


# -- 5: kernel condition and compatibility -----------------------------------------------------


def test_criterion_5_kernel_and_compatibility():
    rng = np.random.default_rng(SEED + 5)
    policy = TruncationPolicy(40)
    d = default_probes(THETA)[0]
    basis = [basis_vector(THETA, 1), basis_vector(THETA, 2)]
    kernel_worst = compat_worst = 0.0
    for _ in range(20):
        g = diagonal_metric(random_self_adjoint(rng, THETA, 1, 0.3, 3.0),
                            random_self_adjoint(rng, THETA, 1, 0.3, 3.0))
        nu = make_commutant_mu(rng.uniform(-1, 1, rng.integers(1, 4)), g)
        _, res = mu_kernel_check(nu, g, policy=policy)
        kernel_worst = max(kernel_worst, res)
        mu = MuMap([(d, nu)])
        vectors = basis + [ModuleVector(random_element(rng, THETA, 1), random_element(rng, THETA, 1))]
        for X in vectors:
            for Y in vectors:
                compat_worst = max(compat_worst, perturbed_compatibility_check(g, mu, d, X, Y))
    # kernel violators: a self-adjoint part, from barely to strongly violating, added to a
    # commutant element
    violations = []
    for size in np.geomspace(3e-3, 1.0, 10):
        g = diagonal_metric(random_self_adjoint(rng, THETA, 1, 0.3, 3.0),
                            random_self_adjoint(rng, THETA, 1, 0.3, 3.0))
        bad = AlgebraMatrix([[random_self_adjoint(rng, THETA, 1, 0.3, 1.0) for _ in range(2)]
                             for _ in range(2)]).scale(size)
        nu = make_commutant_mu(rng.uniform(-1, 1, 2), g) + bad
        _, res = mu_kernel_check(nu, g, policy=policy)
        mu = MuMap([(d, nu)])
        compat = max(perturbed_compatibility_check(g, mu, d, X, Y) for X in basis for Y in basis)
        assert compat == pytest.approx(basis_compatibility_residual(nu, g), rel=1e-12, abs=1e-14)
        violations.append((res, compat))
    viol_ok = all(r >= 1e-2 and c >= 1e-3 for r, c in violations)
    ok = kernel_worst <= 1e-10 and compat_worst <= 1e-9 and viol_ok
    record(5, ok, f"20 commutant pairs: kernel {kernel_worst:.1e} (<= 1e-10), compatibility "
                  f"{compat_worst:.1e} (<= 1e-9); 10 violators: min kernel residual "
                  f"{min(r for r, _ in violations):.2e} (>= 1e-2), min basis compatibility "
                  f"{min(c for _, c in violations):.2e} (>= 1e-3)")


# -- 6: inner curvature ------------------------------------------------------------------------


def bracket_preserving_mu(probes):
    def rule(d):
        return AlgebraMatrix.diag(d.a_tilde, d.a_tilde).scale(-1)
    mu = MuMap([(d, rule(d)) for d in probes])
    for a in probes:
        for b in probes:
            br = InnerDerivation(commutator(b.a_tilde, a.a_tilde))
            mu = mu.extend(br, rule(br))
    return mu


def test_criterion_6_inner_curvature():
    flat = flat_metric(THETA)
    probes = default_probes(THETA)
    mu = bracket_preserving_mu(probes)
    preserving = cross = 0.0
    for a in probes:
        for b in probes:
            r = inner_curvature(flat, mu, a, b)
            preserving = max(preserving, r.norm())
            cross = max(cross, (r - general_inner_curvature(flat, mu, a, b)).norm())
    # the designated violating pair on diag(3 + u1 + u1*, 3 + u2 + u2*)
    g = diagonal_metric(circ(1), circ(2))
    a, b = probes[:2]
    br = InnerDerivation(commutator(b.a_tilde, a.a_tilde))
    gamma = g.entries
    bad = MuMap([(a, AlgebraMatrix.identity(THETA, c=1j)), (b, gamma.scale(1j)),
                 (br, (gamma @ gamma).scale(1j))])
    r = inner_curvature(g, bad, a, b)
    with open(Path(__file__).parent / "golden" / "bracket_violating.json") as fh:
        golden = AlgebraMatrix.from_dict(json.load(fh)["matrix"])
    cross = max(cross, (r - general_inner_curvature(g, bad, a, b)).norm())
    ok = preserving <= 1e-10 and r.norm() >= 0.1 and r.allclose(golden, 1e-12) and cross <= 1e-10
    record(6, ok, f"bracket-preserving max norm {preserving:.1e} (<= 1e-10), golden violating "
                  f"norm {r.norm():.3g} (>= 0.1), cross path {cross:.1e} (<= 1e-10)")


# -- 7: algebra against the matrix oracle ------------------------------------------------------


def test_criterion_7_algebra_oracle():
    theta = 32 / 101
    rng = np.random.default_rng(SEED + 7)
    oracle = identities = 0.0

    def gap(x, y):
        return norm_l1(add(x, scale(-1, y)))

    for _ in range(200):
        ra, rb = rng.integers(0, 21, 2)
        a = random_element(rng, theta, int(ra), normalize=True)
        b = random_element(rng, theta, int(rb), normalize=True)
        c = random_element(rng, theta, 2, normalize=True)
        A, B = represent(a), represent(b)
        ab = mul(a, b)
        oracle = max(oracle,
                     np.abs(represent(ab).data - (A @ B).data).max(),
                     np.abs(represent(star(a)).data - A.adjoint().data).max(),
                     abs(A.normalized_trace() - trace(a)))
        identities = max(
            identities,
            gap(mul(ab, c), mul(a, mul(b, c))),
            gap(mul(a, add(b, c)), add(ab, mul(a, c))),
            gap(star(ab), mul(star(b), star(a))),
            gap(star(star(a)), a),
            abs(trace(ab) - trace(mul(b, a))),
            *(gap(derive(j, ab), add(mul(derive(j, a), b), mul(a, derive(j, b)))) for j in (1, 2)),
        )
    ok = oracle <= 1e-12 and identities <= 1e-13
    record(7, ok, f"200 pairs at theta=32/101: oracle max entry gap {oracle:.1e} (<= 1e-12), "
                  f"identity residual {identities:.1e} (<= 1e-13)")


# -- 8: functional calculus --------------------------------------------------------------------


def test_criterion_8_functional_calculus():
    residuals = []
    for _, rep, _ in [class_i_run(40)]:
        residuals += [rep["inverse_residual"], rep["inv_sqrt_residual"]]
    _, rep2 = class_ii_run()
    residuals += [rep2["inverse_residual"], rep2["inv_sqrt_residual"]]
    _, rep3 = conformal_run()
    residuals += [rep3["inverse_residual"]]
    policy = TruncationPolicy(40)
    for a in (circ(1), circ(2), class_ii_a1()):
        _, info = invert(a, TOL, policy, full_output=True)
        _, sinfo = inv_sqrt(a, TOL, policy, full_output=True)
        residuals += [info.residual, sinfo.residual]
    quad, _ = integrate.quad(lambda t: 1 / (3 + 2 * math.cos(t)), 0, 2 * math.pi,
                             epsabs=1e-13, epsrel=1e-13)
    quad /= 2 * math.pi
    trace_gap = abs(trace(invert(circ(1))) - quad)
    a = class_ii_a1()
    x = invert(a, TOL, policy)
    star_star = max(norm_l1(add(derive(j, x), mul(mul(x, derive(j, a)), x))) for j in (1, 2))
    worst = max(residuals)
    ok = worst <= 1e-12 and trace_gap <= 1e-10 and star_star <= 1e-10
    record(8, ok, f"max invert/inv_sqrt residual {worst:.1e} (<= 1e-12), |tau(a^-1) - quadrature| "
                  f"{trace_gap:.1e} (<= 1e-10), derivative-of-inverse identity {star_star:.1e} "
                  f"(<= 1e-10)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
