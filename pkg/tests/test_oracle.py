import numpy as np
import pytest

from conftest import random_element
from nctorus.algebra import add, generator, mul, one, scale, star, trace
from nctorus.oracle import (
    MatrixRep,
    OracleError,
    certify_block,
    certify_spectrum,
    clock_shift,
    nearest_fraction,
    rational_theta,
    represent,
    retag_theta,
)

THETA_R = 32 / 101


def test_clock_shift_relation():
    U1, U2 = clock_shift(32, 101)
    w = np.exp(2j * np.pi * 32 / 101)
    assert np.abs(U1 @ U2 - w * U2 @ U1).max() < 1e-13


def test_represent_generators():
    U1, U2 = clock_shift(32, 101)
    assert np.abs(represent(generator(THETA_R, 1)).data - U1).max() < 1e-15
    assert np.abs(represent(generator(THETA_R, 2)).data - U2).max() < 1e-15


def test_homomorphism_star_trace(rng):
    a = random_element(rng, THETA_R, 5, normalize=True)
    b = random_element(rng, THETA_R, 5, normalize=True)
    A, B = represent(a), represent(b)
    assert np.abs(represent(mul(a, b)).data - (A @ B).data).max() < 1e-14
    assert np.abs(represent(star(a)).data - A.adjoint().data).max() < 1e-14
    assert abs(A.normalized_trace() - trace(a)) < 1e-14


def test_support_must_fit():
    with pytest.raises(OracleError):
        represent(generator(THETA_R, 1, 60))
    # wrap-around is allowed when explicitly requested
    represent(generator(THETA_R, 1, 60), check_support=False)


def test_rational_theta_detection():
    assert rational_theta(THETA_R, 101) == 32
    with pytest.raises(OracleError):
        rational_theta(1 / np.pi, 101)
    assert nearest_fraction(1 / np.pi, 101) == (32, 101)


def test_spectrum_of_circle_element():
    # 3 + u1 + u1* has spectrum 3 + 2cos on the q-th roots of unity
    a = add(add(generator(THETA_R, 1), star(generator(THETA_R, 1))), one(THETA_R, 3.0))
    cert = certify_spectrum(a)
    k = np.arange(101)
    expected = 3 + 2 * np.cos(2 * np.pi * 32 * k / 101)
    assert cert.exact
    assert cert.lambda_min == pytest.approx(expected.min(), abs=1e-12)
    assert cert.lambda_max == pytest.approx(expected.max(), abs=1e-12)


def test_irrational_theta_is_heuristic():
    theta = 1 / np.pi
    u1, u2 = generator(theta, 1), generator(theta, 2)
    a = add(one(theta, 3.0), add(add(u1, star(u1)), scale(0.5, add(u2, star(u2)))))
    cert = certify_spectrum(a)
    assert not cert.exact
    assert cert.to_dict()["heuristic"] is True
    assert (cert.p, cert.q) == (32, 101)
    assert 0.4 <= cert.lambda_min < 1.0


def test_retag_keeps_self_adjointness():
    theta = 1 / np.pi
    u1, u2 = generator(theta, 1), generator(theta, 2)
    v = mul(u1, u2)
    a = add(one(theta, 3.0), add(v, star(v)))
    moved = retag_theta(a, THETA_R)
    assert moved.theta == THETA_R
    assert moved.is_self_adjoint(1e-14)


def test_block_certificate_diagonal_matches_entries():
    a1 = add(add(generator(THETA_R, 1), star(generator(THETA_R, 1))), one(THETA_R, 3.0))
    a2 = one(THETA_R, 10.0)
    zero = scale(0.0, a1)
    cert = certify_block([[a1, zero], [zero, a2]])
    single = certify_spectrum(a1)
    assert cert.lambda_min == pytest.approx(single.lambda_min, abs=1e-12)
    assert cert.lambda_max == pytest.approx(10.0, abs=1e-12)


def test_matrix_rep_guards():
    with pytest.raises(ValueError):
        MatrixRep(1, 5, np.eye(4))
