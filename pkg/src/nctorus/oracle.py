"""Clock-and-shift representation of the rational torus, used as an oracle.

For ``theta = p/q`` the matrices

    U1 = diag(w^0, ..., w^(q-1)),   U2 e_k = e_(k+1 mod q),   w = exp(2 pi i p/q)

satisfy ``U1 U2 = w U2 U1``, so ``u1^m u2^n -> U1^m U2^n`` is a *-homomorphism.
Normalized matrix trace agrees with the torus trace on elements supported in
``max(|m|, |n|) < q/2``.  Derivations have no finite-dimensional image; the
oracle never checks derivative identities.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from .algebra import TorusElement

DEFAULT_Q = 101


class OracleError(ValueError):
    """Input outside what the finite model can represent faithfully."""


@dataclass(frozen=True)
class MatrixRep:
    p: int
    q: int
    data: np.ndarray

    def __post_init__(self):
        if self.q < 1 or gcd(self.p, self.q) != 1:
            raise OracleError(f"need gcd(p, q) = 1, got p={self.p}, q={self.q}")
        rows, cols = self.data.shape
        # block matrices over the model are allowed: square, side a multiple of q
        if rows != cols or rows % self.q:
            raise OracleError(f"expected a square matrix with side a multiple of {self.q}, "
                              f"got shape {self.data.shape}")

    @property
    def omega(self):
        return np.exp(2j * np.pi * self.p / self.q)

    def __matmul__(self, other):
        if (self.p, self.q) != (other.p, other.q):
            raise OracleError("representations of different algebras")
        return MatrixRep(self.p, self.q, self.data @ other.data)

    def adjoint(self):
        return MatrixRep(self.p, self.q, self.data.conj().T)

    def normalized_trace(self):
        return complex(np.trace(self.data)) / self.q


def nearest_fraction(theta, q=DEFAULT_Q):
    """``(p, q)`` with ``p/q`` nearest to ``theta`` at fixed denominator, reduced."""
    p = int(round(theta * q))
    g = gcd(p, q) or 1
    return p // g, q // g


def rational_theta(theta, q):
    """Return ``p`` if ``theta == p/q`` as a double, else raise."""
    p = int(round(theta * q))
    if p / q != theta:
        raise OracleError(f"theta={theta!r} is not p/{q} for any integer p")
    if gcd(p, q) != 1:
        raise OracleError(f"p/q = {Fraction(p, q)} is not in lowest terms with q={q}")
    return p


def clock_shift(p, q):
    """The pair ``(U1, U2)`` of ``q x q`` generator matrices."""
    # exact reduction of the exponent keeps every phase at full precision
    clock = np.diag(np.exp(2j * np.pi * ((p * np.arange(q)) % q) / q))
    shift = np.roll(np.eye(q, dtype=complex), 1, axis=0)
    return clock, shift


def represent(a: TorusElement, q=DEFAULT_Q, check_support=True) -> MatrixRep:
    """Image of ``a`` under the clock-and-shift representation.

    ``a.theta`` must equal ``p/q`` exactly.  With ``check_support`` the
    support must sit strictly inside ``max(|m|, |n|) < q/2``, otherwise the
    normalized trace would alias.
    """
    p = rational_theta(a.theta, q)
    if check_support and 2 * a.radius >= q:
        raise OracleError(f"support radius {a.radius} aliases at q={q}")
    out = np.zeros((q, q), dtype=complex)
    if a.is_zero():
        return MatrixRep(p, q, out)
    data, m0, n0 = a.box
    ms = m0 + np.arange(data.shape[0])
    ks = np.arange(q)
    # diag_n[k] = sum_m c[m, n] w^(m k), exponent reduced mod q
    powers = np.exp(2j * np.pi * ((p * np.outer(ms, ks)) % q) / q)
    diags = data.T @ powers
    for j, d in enumerate(diags):
        if not d.any():
            continue
        n = n0 + j
        # (diag(d) U2^n) e_k = d[k + n] e_(k + n)
        rows = (ks + n) % q
        out[rows, ks] += d[rows]
    return MatrixRep(p, q, out)


def spectral_bounds(M: MatrixRep, herm_tol=1e-10):
    """``(lambda_min, lambda_max)`` of a Hermitian representation matrix."""
    defect = np.abs(M.data - M.data.conj().T).max() if M.data.size else 0.0
    if defect > herm_tol:
        raise OracleError(f"matrix is not Hermitian (defect {defect:.3e})")
    herm = 0.5 * (M.data + M.data.conj().T)
    ev = np.linalg.eigvalsh(herm)
    return float(ev[0]), float(ev[-1])


@dataclass(frozen=True)
class Certificate:
    """Outcome of a positivity check through the finite model."""

    lambda_min: float
    lambda_max: float
    p: int
    q: int
    exact: bool  # False when theta was replaced by its nearest p/q

    def to_dict(self):
        return {
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "p": self.p,
            "q": self.q,
            "heuristic": not self.exact,
        }


def retag_theta(a: TorusElement, theta):
    """Move ``a`` to another theta keeping its Weyl-ordered coefficients.

    In the symmetric basis ``exp(-pi i theta m n) u1^m u2^n`` the adjoint is
    ``w[m, n] -> conj(w[-m, -n])`` for every theta, so self-adjoint input
    stays self-adjoint.
    """
    if a.is_zero():
        return TorusElement(theta)
    data, m0, n0 = a.box
    mn = np.outer(m0 + np.arange(data.shape[0]), n0 + np.arange(data.shape[1]))
    # normal -> Weyl multiplies by exp(+pi i theta mn); Weyl -> normal at the new theta divides
    shift = np.exp(1j * np.pi * (a.theta - theta) * mn)
    return TorusElement.from_array(theta, data * shift, m0, n0)


def certify_spectrum(a: TorusElement, q=DEFAULT_Q) -> Certificate:
    """Spectral range of self-adjoint ``a`` via the oracle.

    If ``a.theta`` is not ``p/q`` the coefficients are re-tagged with the
    nearest ``p/q``; the certificate is then heuristic and says so.
    """
    try:
        p = rational_theta(a.theta, q)
        exact = True
        rep_elem = a
    except OracleError:
        p, q_red = nearest_fraction(a.theta, q)
        if q_red != q:
            raise OracleError(f"nearest fraction to {a.theta!r} reduces below q={q}")
        exact = False
        rep_elem = retag_theta(a, p / q)
    lo, hi = spectral_bounds(represent(rep_elem, q))
    return Certificate(lo, hi, p, q, exact)


def _oracle_theta(theta, q):
    try:
        return rational_theta(theta, q), True
    except OracleError:
        p, q_red = nearest_fraction(theta, q)
        if q_red != q:
            raise OracleError(f"nearest fraction to {theta!r} reduces below q={q}")
        return p, False


def certify_block(entries, q=DEFAULT_Q) -> Certificate:
    """Spectral range of a Hermitian matrix over the algebra (list of rows).

    Each entry is represented at ``q``; the block matrix is diagonalized.
    """
    theta = entries[0][0].theta
    p, exact = _oracle_theta(theta, q)
    blocks = [
        [represent(e if exact else retag_theta(e, p / q), q).data for e in row]
        for row in entries
    ]
    lo, hi = spectral_bounds(MatrixRep(p, q, np.block(blocks)))
    return Certificate(lo, hi, p, q, exact)
