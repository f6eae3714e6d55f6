import dataclasses
import math

import numpy as np
import pytest

from nctorus.algebra import (
    TruncationPolicy,
    add,
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
from nctorus.funccalc import PositivityError
from nctorus.geometry import (
    CurvatureMismatchError,
    christoffel_inner,
    closed_form_1212,
    compatibility_residual,
    compatibility_suite,
    conformal_metric,
    connection_coeffs,
    curvature_1212,
    diagonal_metric,
    flat_metric,
    gauss_bonnet_conformal,
    gauss_bonnet_diagonal,
    general_metric,
    inner_product,
    nabla_apply,
    realness_defect,
    torsion_defect,
)
from nctorus.module import ModuleVector, basis_vector

THETA = 1 / math.pi


def circ(j, c=3.0, w=1.0, theta=THETA):
    u = generator(theta, j)
    return add(one(theta, c), scale(w, add(u, star(u))))


def mixed(theta=THETA):
    u1, u2 = generator(theta, 1), generator(theta, 2)
    return add(one(theta, 3.0), add(add(u1, star(u1)), scale(0.5, add(u2, star(u2)))))


def diff(a, b):
    return norm_l1(add(a, scale(-1, b)))


def test_inner_product_on_basis_recovers_metric():
    g = diagonal_metric(circ(1), circ(2))
    for j in (1, 2):
        for k in (1, 2):
            val = inner_product(basis_vector(THETA, j), basis_vector(THETA, k), g)
            assert diff(val, g.g(j, k)) == 0


def test_inner_product_sesquilinear(rng):
    g = diagonal_metric(circ(1), circ(2))
    X = ModuleVector(random_self_adjoint(rng, THETA, 1, 0.5, 0.0), generator(THETA, 2))
    Y = ModuleVector(generator(THETA, 1), random_self_adjoint(rng, THETA, 1, 0.5, 0.0))
    a = add(generator(THETA, 1), one(THETA, 2j))
    assert diff(inner_product(X.left_mul(a), Y, g), mul(a, inner_product(X, Y, g))) < 1e-12
    assert diff(inner_product(X, Y.left_mul(a), g), mul(inner_product(X, Y, g), star(a))) < 1e-12
    assert diff(star(inner_product(X, Y, g)), inner_product(Y, X, g)) < 1e-12


def test_flat_metric_has_zero_connection():
    c = connection_coeffs(flat_metric(THETA))
    assert all(v.is_zero() for v in c.gamma.values())
    assert curvature_1212(c).is_zero()
    assert gauss_bonnet_diagonal(one(THETA), one(THETA)) == 0


def test_christoffel_symmetry_is_exact():
    g = diagonal_metric(mixed(), circ(2))
    table = christoffel_inner(g)
    for l in (1, 2):
        assert table[1, 2, l] is table[2, 1, l]
    c = connection_coeffs(g)
    assert torsion_defect(c) == 0.0


def test_christoffel_formula_diagonal():
    a1, a2 = circ(1), circ(2)
    table = christoffel_inner(diagonal_metric(a1, a2))
    # <nabla_1 d1, d1> = 1/2 d1 a1, <nabla_1 d1, d2> = -1/2 d2 a1, <nabla_1 d2, d1> = 1/2 d2 a1
    assert diff(table[1, 1, 1], scale(0.5, derive(1, a1))) == 0
    assert diff(table[1, 1, 2], scale(-0.5, derive(2, a1))) == 0
    assert diff(table[1, 2, 1], scale(0.5, derive(2, a1))) == 0
    assert diff(table[2, 2, 2], scale(0.5, derive(2, a2))) == 0


@pytest.mark.parametrize("which", ["diagonal", "conformal", "general"])
def test_connection_axioms(which, rng):
    u1, u2 = generator(THETA, 1), generator(THETA, 2)
    if which == "diagonal":
        g = diagonal_metric(mixed(), circ(2))
    elif which == "conformal":
        g = conformal_metric(add(scale(0.4, add(u1, star(u1))), scale(0.3, add(u2, star(u2)))))
    else:
        v = mul(u1, u2)
        g = general_metric(circ(1, 4.0), scale(0.5, add(v, star(v))), circ(2, 4.0))
    c = connection_coeffs(g)
    probes = [ModuleVector(random_self_adjoint(rng, THETA, 1, 0.5, 0.0),
                           random_self_adjoint(rng, THETA, 1, 0.5, 0.0))]
    assert compatibility_suite(c, probes) <= 1e-9
    assert realness_defect(c) <= 1e-12
    assert torsion_defect(c) == 0.0


def test_compatibility_fails_for_wrong_connection():
    g = diagonal_metric(circ(1), circ(2))
    c = connection_coeffs(g)
    broken = dataclasses.replace(c, gamma={**c.gamma, (1, 1, 1): add(c.gamma[1, 1, 1], one(THETA, 0.1))})
    d1 = basis_vector(THETA, 1)
    assert compatibility_residual(broken, 1, d1, d1) > 0.1


def test_general_and_diagonal_routes_agree():
    g = diagonal_metric(mixed(), circ(2))
    c_diag = connection_coeffs(g, method="diagonal")
    c_gen = connection_coeffs(g, method="general")
    for key in c_diag.gamma:
        assert diff(c_diag.gamma[key], c_gen.gamma[key]) <= 1e-10


def test_nabla_leibniz(rng):
    g = diagonal_metric(circ(1), circ(2))
    c = connection_coeffs(g)
    Y = ModuleVector(generator(THETA, 2), one(THETA, 2.0))
    a = random_self_adjoint(rng, THETA, 1, 0.5, 1.0)
    for j in (1, 2):
        lhs = nabla_apply(c, j, Y.left_mul(a))
        rhs = Y.left_mul(derive(j, a)) + nabla_apply(c, j, Y).left_mul(a)
        assert lhs.allclose(rhs, 1e-12)


def test_class_i_curvature_vanishes_identically():
    # each a_j depends only on u_j: every term of R1212 cancels
    g = diagonal_metric(circ(1), circ(2))
    r, dist = curvature_1212(connection_coeffs(g), full_output=True)
    assert r.is_zero()
    assert dist == 0


def test_dual_path_on_noncommuting_metric():
    g = diagonal_metric(mixed(), circ(2, 3.0, 0.5))
    r, dist = curvature_1212(connection_coeffs(g), full_output=True)
    assert norm_l1(r) > 1.0
    assert dist <= 1e-11


def test_curvature_path_mismatch_detected():
    g = diagonal_metric(mixed(), circ(2))
    c = connection_coeffs(g)
    inv = c.inverse
    # perturb the inverse used by the closed form only
    bad = dataclasses.replace(c, inverse=inv.map(lambda e: add(e, one(THETA, 1e-6))))
    with pytest.raises(CurvatureMismatchError):
        curvature_1212(bad)


def test_closed_form_flat_rescaling_is_zero():
    a = one(THETA, 2.0)
    assert closed_form_1212(a, a, one(THETA, 0.5), one(THETA, 0.5)).is_zero()


def test_degenerate_metric_rejected():
    with pytest.raises(PositivityError):
        diagonal_metric(circ(1, 1.9), circ(2))  # 1.9 + 2cos dips below 0
    u1 = generator(THETA, 1)
    with pytest.raises(PositivityError):
        general_metric(circ(1), scale(3.0, add(u1, star(u1))), circ(2))


def test_gauss_bonnet_conformal_trivial_cases():
    assert gauss_bonnet_conformal(one(THETA, 0.0)) == 0
    assert gauss_bonnet_conformal(one(THETA, 0.7)) == 0


def test_gauss_bonnet_class_i_mixed_generator():
    # a1 lives in C*(u1 u2): commutes with its derivatives, curvature is nonzero
    v = mul(generator(THETA, 1), generator(THETA, 2))
    a1 = add(one(THETA, 3.0), add(v, star(v)))
    value, rep = gauss_bonnet_diagonal(a1, circ(2), full_output=True)
    assert rep["curvature_l1"] > 10
    assert abs(value) <= 1e-12
    assert rep["converged"]


def test_gauss_bonnet_generic_metric_is_reported_not_zero():
    # neither class: nothing forces vanishing, and it does not vanish
    a1, a2 = mixed(), add(one(THETA, 3.0), add(scale(0.5, add(generator(THETA, 1), star(generator(THETA, 1)))),
                                               add(generator(THETA, 2), star(generator(THETA, 2)))))
    value, rep = gauss_bonnet_diagonal(a1, a2, policy=TruncationPolicy(30), strict=False,
                                       check_paths=False, full_output=True)
    assert abs(value) > 1e-4
    assert np.isfinite(rep["curvature_l1"])


def test_gauss_bonnet_report_fields():
    value, rep = gauss_bonnet_diagonal(mixed(), circ(2), full_output=True)
    for key in ("value", "curvature_l1", "path_distance", "inverse_residual", "inv_sqrt_residual",
                "converged", "tail_mass", "certificates"):
        assert key in rep
    first, second = rep["certificates"]
    assert first["method"] == "oracle" and first["heuristic"] is True
    assert second["method"] == "l1"


def test_trace_of_curvature_derivative_free_part():
    # tau kills total derivatives: tau(d1 d1 a2 + d2 d2 a1) = 0
    a1, a2 = mixed(), circ(2)
    assert trace(add(derive(1, derive(1, a2)), derive(2, derive(2, a1)))) == 0
