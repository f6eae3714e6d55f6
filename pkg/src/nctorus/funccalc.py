"""Functional calculus for positive elements: inverse, inverse square root, exp.

All iterations run on truncated Fourier series.  Every iterate is (up to
truncation) a polynomial in the input, so it commutes with it and stays
self-adjoint; iterates are re-symmetrized after each truncation to keep
rounding from breaking that.

Pass ``full_output=True`` to get ``(value, info)`` where ``info`` records the
achieved residual, iteration count and the tail mass charged to the policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    TorusElement,
    TruncationPolicy,
    add,
    mul,
    norm_l1,
    one,
    scale,
    star,
    truncate,
)
from .oracle import DEFAULT_Q, Certificate, certify_spectrum

DEFAULT_TOL = 1e-12
DEFAULT_RADIUS = 40
MAX_ITER = 200


class PositivityError(ValueError):
    """The input could not be certified positive invertible."""


class ConvergenceError(RuntimeError):
    """An iteration stopped without reaching its residual target."""

    def __init__(self, msg, residual, iterations, value=None):
        super().__init__(f"{msg} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations
        self.value = value


@dataclass
class CalcInfo:
    residual: float
    iterations: int
    tail_mass: float
    certificate: Certificate | None = None
    notes: list = field(default_factory=list)
    converged: bool = True


class _Monitor:
    """Tracks the best iterate and flags stagnation (no halving in ``patience`` steps)."""

    def __init__(self, patience=4):
        self.best = math.inf
        self.best_value = None
        self.stale = 0
        self.patience = patience

    def update(self, residual, value):
        if residual < 0.5 * self.best:
            self.stale = 0
        else:
            self.stale += 1
        if residual < self.best:
            self.best, self.best_value = residual, value
        return self.best < 1 and self.stale >= self.patience


def _give_up(name, monitor, it, strict, build_info):
    if strict:
        raise ConvergenceError(f"{name} stagnated above tolerance (truncation-limited?)",
                               monitor.best, it, monitor.best_value)
    info = build_info(monitor.best, it)
    info.converged = False
    info.notes.append("stagnated above tolerance; residual is truncation-limited")
    return monitor.best_value, info


def _hermitian_part(x):
    return scale(0.5, add(x, star(x)))


def _policy(policy):
    return TruncationPolicy(DEFAULT_RADIUS) if policy is None else policy


def _residual_to_one(x):
    return norm_l1(add(x, one(x.theta, -1.0)))


def certify_positive(a, q=DEFAULT_Q, floor=0.0, sa_tol=1e-10):
    """Check that ``a`` is self-adjoint with oracle lower spectral bound above ``floor``.

    Elements whose scalar part dominates the rest in l1 are certified
    without the oracle.
    """
    if not a.is_self_adjoint(sa_tol):
        raise PositivityError("element is not self-adjoint")
    c0 = a[0, 0].real
    rest = norm_l1(add(a, one(a.theta, -c0)))
    if c0 - rest > floor:
        return Certificate(c0 - rest, c0 + rest, 0, 1, True)
    cert = certify_spectrum(a, q)
    if cert.lambda_min <= floor:
        raise PositivityError(f"oracle lambda_min = {cert.lambda_min:.3e} <= {floor:g}")
    return cert


def invert(a, tol=DEFAULT_TOL, policy=None, *, max_iter=MAX_ITER, q=DEFAULT_Q,
           certificate=None, full_output=False, strict=True, polish=True):
    """Inverse of a positive invertible element by Newton-Hotelling iteration.

    ``X <- X (2 - a X)`` from ``X = 1/rho``, ``rho = norm_l1(a)``, truncating
    once per step.  Stops when ``norm_l1(a X - 1) <= tol``, then (with
    ``polish``) takes one further step if it lowers the residual.

    If the residual stalls above ``tol`` (the truncation radius is too small
    for the requested accuracy) a :class:`ConvergenceError` carrying the best
    iterate is raised, or with ``strict=False`` that iterate is returned and
    ``info.converged`` is False.
    """
    policy = _policy(policy)
    cert = certificate or certify_positive(a, q)
    theta = a.theta
    start_tail = policy.tail_report
    x = one(theta, 1.0 / norm_l1(a))
    residual = math.inf
    monitor = _Monitor()
    for it in range(1, max_iter + 1):
        ax = mul(a, x)
        x = add(scale(2, x), scale(-1, mul(x, ax)))
        x = _hermitian_part(truncate(x, policy))
        residual = _residual_to_one(mul(a, x))
        if residual <= tol:
            break
        if not math.isfinite(residual):
            raise ConvergenceError("invert diverged", residual, it)
        if monitor.update(residual, x):
            out = _give_up("invert", monitor, it, strict, lambda r, i: CalcInfo(
                r, i, policy.tail_report - start_tail, cert))
            return out if full_output else out[0]
    else:
        raise ConvergenceError("invert did not converge", residual, max_iter)
    if polish:
        # one more quadratic step takes the residual to the rounding floor;
        # derivatives of the inverse amplify whatever is left
        y = _hermitian_part(truncate(add(scale(2, x), scale(-1, mul(x, mul(a, x)))), policy))
        r = _residual_to_one(mul(a, y))
        if r < residual:
            x, residual, it = y, r, it + 1
    if full_output:
        return x, CalcInfo(residual, it, policy.tail_report - start_tail, cert)
    return x


def _sqrt_scaling(a, cert):
    """``s**2`` for the Newton-Schulz start ``Y = s``, with how contraction was certified."""
    rho = norm_l1(a)
    s2 = 1.0 / rho
    contraction = norm_l1(add(one(a.theta), scale(-s2, a)))
    if contraction < 1:
        return s2, f"l1 contraction {contraction:.6g}"
    # l1 cannot see the gap; fall back to the oracle spectrum of 1 - s^2 a
    lo, hi = cert.lambda_min, max(cert.lambda_max, 1e-300)
    if hi > rho:
        s2 = 1.0 / hi
    radius = max(abs(1 - s2 * lo), abs(1 - s2 * hi))
    if not radius < 1:
        raise PositivityError(f"no contracting Newton-Schulz scale (spectral radius {radius:.3g})")
    label = "oracle" if cert.exact else "oracle (heuristic, nearest p/q)"
    return s2, f"{label} contraction {radius:.6g}"


def inv_sqrt(a, tol=DEFAULT_TOL, policy=None, *, max_iter=MAX_ITER, q=DEFAULT_Q,
             certificate=None, full_output=False, strict=True):
    """``a^(-1/2)`` by Newton-Schulz: ``Y <- Y (3 - a Y^2) / 2``.

    Stops when ``norm_l1(Y^2 a - 1) <= tol``; stagnation is handled as in
    :func:`invert`.
    """
    policy = _policy(policy)
    cert = certificate or certify_positive(a, q)
    theta = a.theta
    start_tail = policy.tail_report
    s2, note = _sqrt_scaling(a, cert)
    y = one(theta, math.sqrt(s2))
    residual = math.inf
    monitor = _Monitor()
    for it in range(1, max_iter + 1):
        ay2 = mul(a, mul(y, y))
        y = scale(0.5, add(scale(3, y), scale(-1, mul(y, ay2))))
        y = _hermitian_part(truncate(y, policy))
        residual = _residual_to_one(mul(mul(y, y), a))
        if residual <= tol:
            break
        if not math.isfinite(residual):
            raise ConvergenceError("inv_sqrt diverged", residual, it)
        if monitor.update(residual, y):
            out = _give_up("inv_sqrt", monitor, it, strict, lambda r, i: CalcInfo(
                r, i, policy.tail_report - start_tail, cert, [note]))
            return out if full_output else out[0]
    else:
        raise ConvergenceError("inv_sqrt did not converge", residual, max_iter)
    if full_output:
        return y, CalcInfo(residual, it, policy.tail_report - start_tail, cert, [note])
    return y


def exp_series(h, tol=DEFAULT_TOL, policy=None, *, full_output=False):
    """``e^h`` by scaling and squaring of the Taylor series.

    ``h`` is scaled by ``2^-s`` until its l1 norm is at most 1/2, the series
    is summed until the next term is below ``tol * 2^-s`` in l1, then squared
    ``s`` times.  ``info.residual`` is the a-priori bound on the series
    remainder propagated through the squarings.
    """
    policy = _policy(policy)
    if not h.is_self_adjoint(1e-10):
        raise ValueError("exp_series expects a self-adjoint element")
    theta = h.theta
    start_tail = policy.tail_report
    norm = norm_l1(h)
    s = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0 else 0
    hs = scale(2.0 ** -s, h)
    hs_norm = norm * 2.0 ** -s
    target = tol * 2.0 ** -s
    total = one(theta)
    term = one(theta)
    k = 0
    remainder = math.inf
    while True:
        k += 1
        term = truncate(scale(1.0 / k, mul(term, hs)), policy)
        total = add(total, term)
        # remaining terms bounded by a geometric series in hs_norm / (k + 1)
        remainder = norm_l1(term) * hs_norm / (k + 1) / (1 - hs_norm / (k + 1))
        if remainder <= target or term.is_zero():
            break
        if k > MAX_ITER:
            raise ConvergenceError("exp series stalled", remainder, k)
    total = _hermitian_part(total)
    bound = remainder
    for _ in range(s):
        bound = bound * (2 * math.exp(hs_norm) + bound)
        total = _hermitian_part(truncate(mul(total, total), policy))
        hs_norm *= 2
    if full_output:
        return total, CalcInfo(bound, k, policy.tail_report - start_tail, None, [f"squarings={s}"])
    return total


def circle_function(samples, j, K, theta):
    """``sum_{|k| <= K} fhat(k) u_j^k`` from samples of ``f`` on a uniform circle grid.

    ``samples[l] = f(2 pi l / L)``.  Real positive samples give a positive
    self-adjoint element in the commutative subalgebra generated by ``u_j``.
    """
    f = np.asarray(samples, dtype=float)
    if f.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if not np.all(f > 0):
        raise ValueError("circle function samples must be strictly positive")
    if j not in (1, 2):
        raise ValueError(f"generator index must be 1 or 2, got {j}")
    L = f.size
    if L < 2 * K + 1:
        raise ValueError(f"need at least {2 * K + 1} samples for bandwidth {K}, got {L}")
    fhat = np.fft.rfft(f) / L
    data = np.zeros(2 * K + 1, dtype=complex)
    data[K] = fhat[0].real
    for k in range(1, K + 1):
        c = fhat[k] if k < fhat.size else 0
        if 2 * k == L:
            # Nyquist bin is shared between +k and -k
            c = c / 2
        data[K + k] = c
        data[K - k] = np.conj(c)
    box = data[:, None] if j == 1 else data[None, :]
    return TorusElement.from_array(theta, box, -K if j == 1 else 0, 0 if j == 1 else -K)


def sample_circle(func, L):
    """Evaluate ``func`` on the grid ``2 pi l / L``, ``l = 0..L-1``."""
    t = 2 * np.pi * np.arange(L) / L
    return np.asarray(func(t), dtype=float)
