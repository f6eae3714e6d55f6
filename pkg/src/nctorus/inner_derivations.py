"""Inner *-derivations and connections perturbed along them.

An inner *-derivation is ``ad_a: b -> ab - ba`` with ``a + a*`` scalar; its
canonical representative ``a - tau(a)`` is skew-adjoint and trace-free.
A perturbed connection acts on inner derivations by

    nabla_{ad_a} Y = a Y + Y mu(a)

where ``mu(a)`` is a 2x2 matrix over the algebra acting on the right.  It
stays compatible with the metric ``gamma`` iff every value satisfies
``mu(a)* = -gamma^-1 mu(a) gamma``.  Its curvature on an inner derivation is

    R(ad_a, X) = [nabla_X, mu(a)] - mu(X . a).

``mu`` is only ever known on a finite span of probe derivations (the Lie
algebra is infinite-dimensional); values outside that span are never
invented.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    TorusElement,
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
from .geometry import Connection, Metric, inner_product, metric_inverse, nabla_apply
from .module import AlgebraMatrix, ModuleVector, basis_vector

__all__ = [
    "InnerDerivation",
    "MuMap",
    "NotInnerError",
    "SpanError",
    "ad_apply",
    "basis_compatibility_residual",
    "bracket_identity_residual",
    "default_probes",
    "general_inner_curvature",
    "inner_curvature",
    "kernel_residual",
    "lie_homomorphism_defect",
    "make_commutant_mu",
    "mu_kernel_check",
    "nabla_inner",
    "normalize_inner",
    "perturbed_compatibility_check",
]


class NotInnerError(ValueError):
    """Element is not skew-adjoint modulo scalars."""


class SpanError(ValueError):
    """A derivation outside the span on which ``mu`` is defined."""


@dataclass(frozen=True)
class InnerDerivation:
    """Skew-adjoint, trace-free generator ``a_tilde`` of ``ad_a``."""

    a_tilde: TorusElement

    def __post_init__(self):
        a = self.a_tilde
        if not add(star(a), a).allclose(0, 1e-12):
            raise NotInnerError("inner derivation generator must be skew-adjoint")
        if abs(trace(a)) > 1e-14:
            raise NotInnerError(f"inner derivation generator must be trace-free, tau = {trace(a)}")

    @property
    def theta(self):
        return self.a_tilde.theta

    def __call__(self, b):
        return ad_apply(self, b)


def normalize_inner(a: TorusElement, tol=1e-12, probe=None) -> InnerDerivation:
    """Canonical representative ``a - tau(a)`` of ``ad_a``.

    Rejects ``a`` unless ``a + a*`` is scalar to ``tol``.  The equality
    ``ad_a = ad_(a - tau(a))`` is confirmed on ``probe`` (default ``u1``).
    """
    s = add(a, star(a))
    if not s.is_scalar(tol):
        raise NotInnerError("a + a* is not a scalar; ad_a is not a *-derivation")
    a_tilde = add(a, one(a.theta, -trace(a)))
    # tau(a_tilde) is exactly zero now; clean rounding in the skew part
    a_tilde = scale(0.5, add(a_tilde, scale(-1, star(a_tilde))))
    d = InnerDerivation(a_tilde)
    b = generator(a.theta, 1) if probe is None else probe
    if not commutator(a, b).allclose(ad_apply(d, b), 1e-10):
        raise NotInnerError("ad_a and its normalized representative disagree on the probe")
    return d


def ad_apply(d: InnerDerivation, b: TorusElement) -> TorusElement:
    return commutator(d.a_tilde, b)


def default_probes(theta):
    """``u1 - u1*``, ``u2 - u2*``, ``u1u2 - (u1u2)*``, ``i(u1 + u1*)``."""
    u1, u2 = generator(theta, 1), generator(theta, 2)
    v = mul(u1, u2)
    raw = [
        add(u1, scale(-1, star(u1))),
        add(u2, scale(-1, star(u2))),
        add(v, scale(-1, star(v))),
        scale(1j, add(u1, star(u1))),
    ]
    return [normalize_inner(a) for a in raw]


# -- mu maps ------------------------------------------------------------------------


def _real_vectors(elements):
    """Stack elements as real coefficient vectors on a common box."""
    nonzero = [e for e in elements if not e.is_zero()]
    if not nonzero:
        return np.zeros((0, len(elements)))
    r = max(e.radius for e in nonzero)
    cols = []
    for e in elements:
        flat = e.dense(r).ravel()
        cols.append(np.concatenate([flat.real, flat.imag]))
    return np.array(cols).T


class MuMap:
    """R-linear map from a finite span of inner derivations to 2x2 matrices.

    Built from ``(InnerDerivation, AlgebraMatrix)`` pairs.  Evaluating at a
    derivation solves for real coordinates in the span; anything outside it
    raises :class:`SpanError`.  Use :meth:`extend` to adjoin explicit values.
    """

    def __init__(self, pairs, theta=None, size=2):
        self.pairs = list(pairs)
        if theta is None:
            if not self.pairs:
                raise ValueError("theta is required for an empty MuMap")
            theta = self.pairs[0][0].theta
        self.theta = theta
        self.size = size

    @classmethod
    def zero(cls, theta, size=2):
        return cls([], theta, size)

    @classmethod
    def from_function(cls, fn, derivations):
        """Tabulate ``fn`` on ``derivations``; linearity of ``fn`` is the caller's claim."""
        return cls([(d, fn(d)) for d in derivations])

    def extend(self, d, value):
        return MuMap(self.pairs + [(d, value)], self.theta, self.size)

    @property
    def basis(self):
        return [d for d, _ in self.pairs]

    def coordinates(self, d: InnerDerivation, tol=1e-10):
        """Real coefficients ``r`` with ``d = sum r_i basis_i``."""
        if not self.pairs:
            if d.a_tilde.is_zero():
                return np.zeros(0)
            raise SpanError("mu is defined on the zero span only")
        elems = [b.a_tilde for b in self.basis] + [d.a_tilde]
        mat = _real_vectors(elems)
        A, y = mat[:, :-1], mat[:, -1]
        coords, *_ = np.linalg.lstsq(A, y, rcond=None)
        miss = float(np.abs(A @ coords - y).sum()) if y.size else 0.0
        if miss > tol * (1 + float(np.abs(y).sum())):
            raise SpanError(f"derivation lies outside the span of mu (l1 miss {miss:.3e})")
        return coords

    def __call__(self, d: InnerDerivation) -> AlgebraMatrix:
        acc = AlgebraMatrix.zeros(self.theta, self.size)
        if d.a_tilde.is_zero():
            return acc
        for r, (_, value) in zip(self.coordinates(d), self.pairs):
            if r != 0:
                acc = acc + value.scale(float(r))
        return acc


# -- compatibility -------------------------------------------------------------------


def _gamma_inverse(g, tol, policy):
    inv, _ = metric_inverse(g, tol, policy)
    return inv


def kernel_residual(nu: AlgebraMatrix, g: Metric, tol=1e-12, policy=None, inverse=None):
    """Norm of ``nu* + gamma^-1 nu gamma``."""
    inv = _gamma_inverse(g, tol, policy) if inverse is None else inverse
    return (nu.adjoint() + (inv @ nu @ g.entries)).norm()


def mu_kernel_check(nu: AlgebraMatrix, g: Metric, tol=1e-10, policy=None, inverse=None):
    """``(passes, residual)`` for ``nu`` in ``ker(* + Ad_gamma^-1)``."""
    residual = kernel_residual(nu, g, min(tol, 1e-12), policy, inverse)
    return residual <= tol, residual


def make_commutant_mu(coeffs, g: Metric) -> AlgebraMatrix:
    """``i f(gamma)`` for the real polynomial ``f`` (constant term first)."""
    coeffs = [float(c) for c in coeffs]
    return g.entries.polyval(coeffs).scale(1j)


def nabla_inner(d: InnerDerivation, Y: ModuleVector, mu: MuMap | None = None) -> ModuleVector:
    """``nabla_{ad_a} Y = a Y + Y mu(a)``."""
    out = Y.left_mul(d.a_tilde)
    if mu is not None:
        out = out + Y.apply(mu(d))
    return out


def perturbed_compatibility_check(g: Metric, mu: MuMap, d: InnerDerivation,
                                  X: ModuleVector, Y: ModuleVector):
    """l1 norm of ``ad_a <X, Y> - <nabla_{ad_a} X, Y> - <X, nabla_{ad_a} Y>``."""
    lhs = ad_apply(d, inner_product(X, Y, g))
    rhs = add(inner_product(nabla_inner(d, X, mu), Y, g), inner_product(X, nabla_inner(d, Y, mu), g))
    return norm_l1(add(lhs, scale(-1, rhs)))


def basis_compatibility_residual(nu: AlgebraMatrix, g: Metric):
    """Max over basis pairs of ``<d_j nu, d_k> + <d_j, d_k nu>``, i.e. ``(nu gamma + gamma nu*)_jk``."""
    theta = g.theta
    basis = [basis_vector(theta, k) for k in (1, 2)]
    worst = 0.0
    for X in basis:
        for Y in basis:
            val = add(inner_product(X.apply(nu), Y, g), inner_product(X, Y.apply(nu), g))
            worst = max(worst, norm_l1(val))
    return worst


# -- curvature on inner derivations -------------------------------------------------------


def _endomorphism_matrix(fn, theta, size=2):
    """Matrix of an A-linear endomorphism: row ``k`` is ``fn(d_k)``."""
    return AlgebraMatrix([list(fn(basis_vector(theta, k, size))) for k in range(1, size + 1)])


def inner_curvature(g: Metric, mu: MuMap, a_t: InnerDerivation, b_t: InnerDerivation):
    """``R(ad_a, ad_b)`` as a matrix: ``[mu(a), mu(b)] - mu([b, a])``.

    Endomorphisms act on the right, so the operator commutator
    ``[mu(b), mu(a)]`` has matrix ``mu(a) mu(b) - mu(b) mu(a)``.
    """
    bracket = InnerDerivation(commutator(b_t.a_tilde, a_t.a_tilde))
    nu_a, nu_b = mu(a_t), mu(b_t)
    return nu_a.commutator(nu_b) - mu(bracket)


def general_inner_curvature(g: Metric, mu: MuMap, a_t: InnerDerivation, X,
                            connection: Connection | None = None):
    """``R(ad_a, X) = [nabla_X, mu(a)] - mu(X . a)`` evaluated on the module basis.

    ``X`` is a direction ``j`` in ``{1, 2}`` (needs ``connection``) or an
    :class:`InnerDerivation` (uses ``nabla_{ad_b} = b . + mu(b)``).
    """
    theta = g.theta
    if isinstance(X, InnerDerivation):
        def nabla_x(Y):
            return nabla_inner(X, Y, mu)
        x_dot_a = commutator(X.a_tilde, a_t.a_tilde)
    elif X in (1, 2):
        if connection is None:
            raise ValueError("a Connection is required for coordinate directions")
        def nabla_x(Y):
            return nabla_apply(connection, X, Y)
        x_dot_a = derive(X, a_t.a_tilde)
    else:
        raise ValueError(f"X must be 1, 2 or an InnerDerivation, got {X!r}")
    nu_a = mu(a_t)
    nu_xa = mu(InnerDerivation(x_dot_a))

    def curvature(Y):
        first = nabla_x(Y.apply(nu_a))
        second = nabla_x(Y).apply(nu_a)
        return first - second - Y.apply(nu_xa)

    return _endomorphism_matrix(curvature, theta)


def bracket_identity_residual(a_t: InnerDerivation, X, probes):
    """Max l1 of ``[ad_a, X](b) - ad_(-X.a)(b)`` over probe elements ``b``.

    ``X`` is a direction ``j`` or an :class:`InnerDerivation`.
    """
    if isinstance(X, InnerDerivation):
        act = X.__call__
    else:
        def act(b):
            return derive(X, b)
    x_dot_a = act(a_t.a_tilde)
    worst = 0.0
    for b in probes:
        lhs = add(ad_apply(a_t, act(b)), scale(-1, act(ad_apply(a_t, b))))
        rhs = commutator(scale(-1, x_dot_a), b)
        worst = max(worst, norm_l1(add(lhs, scale(-1, rhs))))
    return worst


def lie_homomorphism_defect(mu: MuMap, derivations, g: Metric):
    """Largest ``inner_curvature`` norm over ordered pairs; skips pairs whose bracket leaves the span.

    Returns ``(defect, skipped_pairs)``.
    """
    worst, skipped = 0.0, []
    for i, a in enumerate(derivations):
        for j, b in enumerate(derivations):
            if i == j:
                continue
            try:
                worst = max(worst, inner_curvature(g, mu, a, b).norm())
            except SpanError:
                skipped.append((i, j))
    return worst, skipped
