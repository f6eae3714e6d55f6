"""Twisted Fourier series on the smooth noncommutative 2-torus.

An element is a finite sum ``sum c[m, n] u1^m u2^n`` in normal order (all
``u1`` powers to the left).  The generators satisfy

    u1 u2 = exp(2 pi i theta) u2 u1

which gives the product rule on normal-ordered monomials

    (u1^m u2^n)(u1^m' u2^n') = exp(-2 pi i theta n m') u1^(m+m') u2^(n+n').

Coefficients are stored densely on the bounding box of the support, which
keeps twisted convolution on BLAS.  The box is trimmed so that every edge row
and column holds a nonzero entry; the ``coeffs`` view drops exact zeros.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ThetaMismatchError",
    "TorusElement",
    "TruncationPolicy",
    "add",
    "scale",
    "mul",
    "star",
    "derive",
    "trace",
    "trace_product",
    "norm_l1",
    "truncate",
    "commutator",
    "one",
    "zero",
    "monomial",
    "generator",
    "phase",
]

TWO_PI_I = 2j * np.pi
# entries below this are flushed to exact zero to keep denormals out of the box
DENORMAL_FLOOR = 1e-300


class ThetaMismatchError(ValueError):
    """Raised when a binary operation mixes elements of different algebras."""


def phase(theta, k):
    """Return ``exp(-2 pi i theta k)`` for integer ``k`` (scalar or array).

    ``theta * k`` is formed in extended precision and reduced mod 1 before
    exponentiating, so large ``k`` do not lose the phase.
    """
    k = np.asarray(k, dtype=np.int64)
    x = np.longdouble(theta) * k.astype(np.longdouble)
    frac = (x - np.floor(x)).astype(np.float64)
    return np.exp(-TWO_PI_I * frac)


def _trim(data, m0, n0):
    data = np.where(np.abs(data) < DENORMAL_FLOOR, 0, data) if data.size else data
    nz = data != 0
    if not nz.any():
        return np.zeros((0, 0), dtype=complex), 0, 0
    rows = np.flatnonzero(nz.any(axis=1))
    cols = np.flatnonzero(nz.any(axis=0))
    r0, r1, c0, c1 = rows[0], rows[-1] + 1, cols[0], cols[-1] + 1
    return np.ascontiguousarray(data[r0:r1, c0:c1]), m0 + int(r0), n0 + int(c0)


class TorusElement:
    """Finitely supported element of the smooth noncommutative 2-torus.

    Parameters
    ----------
    theta : float
        Deformation parameter.
    coeffs : mapping, optional
        ``{(m, n): c}``; zero entries are discarded.

    Elements are immutable.  Arithmetic operators are provided (``+``, ``-``,
    ``*`` with elements or scalars, ``@`` is not used).  Binary operations
    require identical ``theta``.
    """

    __slots__ = ("theta", "_data", "_m0", "_n0")
    __hash__ = None

    def __init__(self, theta, coeffs=None):
        theta = float(theta)
        if not coeffs:
            data, m0, n0 = np.zeros((0, 0), dtype=complex), 0, 0
        else:
            keys = np.array([(int(m), int(n)) for m, n in coeffs], dtype=np.int64)
            vals = np.array(list(coeffs.values()), dtype=complex)
            m0, n0 = keys.min(axis=0)
            shape = keys.max(axis=0) - (m0, n0) + 1
            data = np.zeros(tuple(shape), dtype=complex)
            np.add.at(data, (keys[:, 0] - m0, keys[:, 1] - n0), vals)
            data, m0, n0 = _trim(data, int(m0), int(n0))
        self._set(theta, data, m0, n0)

    def _set(self, theta, data, m0, n0):
        data.flags.writeable = False
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "_data", data)
        object.__setattr__(self, "_m0", m0)
        object.__setattr__(self, "_n0", n0)

    def __setattr__(self, name, value):
        raise AttributeError("TorusElement is immutable")

    @classmethod
    def from_array(cls, theta, data, m0, n0):
        """Build from a dense coefficient box whose ``[0, 0]`` entry is ``(m0, n0)``."""
        obj = cls.__new__(cls)
        data, m0, n0 = _trim(np.array(data, dtype=complex), int(m0), int(n0))
        obj._set(float(theta), data, m0, n0)
        return obj

    # -- views ---------------------------------------------------------------

    @property
    def box(self):
        """``(data, m0, n0)``: read-only dense coefficients and index offsets."""
        return self._data, self._m0, self._n0

    @property
    def coeffs(self):
        data = self._data
        rows, cols = np.nonzero(data)
        return {
            (self._m0 + int(i), self._n0 + int(j)): complex(data[i, j])
            for i, j in zip(rows, cols)
        }

    def __getitem__(self, mn):
        m, n = mn
        i, j = m - self._m0, n - self._n0
        if 0 <= i < self._data.shape[0] and 0 <= j < self._data.shape[1]:
            return complex(self._data[i, j])
        return 0j

    @property
    def nnz(self):
        return int(np.count_nonzero(self._data))

    def is_zero(self):
        return self._data.size == 0

    @property
    def radius(self):
        """Smallest ``N`` with the support inside ``max(|m|, |n|) <= N``."""
        if self.is_zero():
            return 0
        h, w = self._data.shape
        return max(abs(self._m0), abs(self._m0 + h - 1), abs(self._n0), abs(self._n0 + w - 1))

    def dense(self, radius):
        """Coefficients on the square ``[-radius, radius]^2`` (index ``[m + r, n + r]``)."""
        out = np.zeros((2 * radius + 1, 2 * radius + 1), dtype=complex)
        if self.is_zero():
            return out
        h, w = self._data.shape
        r0, c0 = self._m0 + radius, self._n0 + radius
        if r0 < 0 or c0 < 0 or r0 + h > out.shape[0] or c0 + w > out.shape[1]:
            raise ValueError(f"support radius {self.radius} exceeds {radius}")
        out[r0:r0 + h, c0:c0 + w] = self._data
        return out

    # -- predicates ------------------------------------------------------------

    def allclose(self, other, tol=1e-12):
        """Coefficientwise comparison with absolute tolerance ``tol``."""
        if isinstance(other, TorusElement):
            _check_theta(self, other)
            diff = add(self, -other)
        else:
            diff = add(self, one(self.theta, -complex(other)))
        return diff.is_zero() or float(np.abs(diff._data).max()) <= tol

    def is_self_adjoint(self, tol=1e-12):
        return self.allclose(star(self), tol)

    def is_scalar(self, tol=0.0):
        rest = add(self, one(self.theta, -trace(self)))
        return rest.is_zero() or float(np.abs(rest._data).max()) <= tol

    # -- operators ---------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, TorusElement):
            if np.isscalar(other):
                other = one(self.theta, other)
            else:
                return NotImplemented
        return (
            self.theta == other.theta
            and self._m0 == other._m0
            and self._n0 == other._n0
            and np.array_equal(self._data, other._data)
        )

    def __add__(self, other):
        if isinstance(other, TorusElement):
            return add(self, other)
        if np.isscalar(other):
            return add(self, one(self.theta, other))
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return scale(-1, self)

    def __sub__(self, other):
        if isinstance(other, TorusElement):
            return add(self, -other)
        if np.isscalar(other):
            return add(self, one(self.theta, -other))
        return NotImplemented

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, TorusElement):
            return mul(self, other)
        if np.isscalar(other):
            return scale(other, self)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return scale(other, self)
        return NotImplemented

    def __truediv__(self, other):
        if np.isscalar(other):
            return scale(1 / other, self)
        return NotImplemented

    def __repr__(self):
        if self.is_zero():
            return f"TorusElement(theta={self.theta!r}, 0)"
        terms = sorted(self.coeffs.items())
        shown = " + ".join(f"({c:.6g})u1^{m}u2^{n}" for (m, n), c in terms[:6])
        more = f" + ... [{len(terms)} terms]" if len(terms) > 6 else ""
        return f"TorusElement(theta={self.theta!r}, {shown}{more})"

    # -- serialization ---------------------------------------------------------------

    def to_dict(self):
        items = sorted(self.coeffs.items())
        return {
            "theta": self.theta,
            "coeffs": [[m, n, c.real, c.imag] for (m, n), c in items],
        }

    @classmethod
    def from_dict(cls, obj):
        coeffs = {}
        for m, n, re, im in obj["coeffs"]:
            key = (int(m), int(n))
            coeffs[key] = coeffs.get(key, 0) + complex(re, im)
        return cls(obj["theta"], coeffs)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass
class TruncationPolicy:
    """Keep coefficients with ``max(|m|, |n|) <= radius``.

    ``tail_report`` accumulates the l1 mass of everything discarded through
    this policy; it only ever grows.
    """

    radius: int
    tail_report: float = 0.0

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("truncation radius must be nonnegative")


# -- constructors -------------------------------------------------------------------


def zero(theta):
    return TorusElement(theta)


def one(theta, c=1.0):
    return TorusElement(theta, {(0, 0): c})


def monomial(theta, m, n, c=1.0):
    """``c * u1^m u2^n``."""
    return TorusElement(theta, {(m, n): c})


def generator(theta, j, power=1):
    """``u_j^power`` for ``j`` in ``{1, 2}``."""
    if j == 1:
        return monomial(theta, power, 0)
    if j == 2:
        return monomial(theta, 0, power)
    raise ValueError(f"generator index must be 1 or 2, got {j}")


# -- operations -----------------------------------------------------------------------


def _check_theta(a, b):
    if a.theta != b.theta:
        raise ThetaMismatchError(f"theta mismatch: {a.theta!r} vs {b.theta!r}")


def add(a, b):
    _check_theta(a, b)
    if a.is_zero():
        return b
    if b.is_zero():
        return a
    (da, am, an), (db, bm, bn) = a.box, b.box
    m0, n0 = min(am, bm), min(an, bn)
    m1 = max(am + da.shape[0], bm + db.shape[0])
    n1 = max(an + da.shape[1], bn + db.shape[1])
    out = np.zeros((m1 - m0, n1 - n0), dtype=complex)
    out[am - m0:am - m0 + da.shape[0], an - n0:an - n0 + da.shape[1]] += da
    out[bm - m0:bm - m0 + db.shape[0], bn - n0:bn - n0 + db.shape[1]] += db
    return TorusElement.from_array(a.theta, out, m0, n0)


def scale(z, a):
    z = complex(z)
    if z == 0 or a.is_zero():
        return zero(a.theta)
    data, m0, n0 = a.box
    return TorusElement.from_array(a.theta, z * data, m0, n0)


def mul(a, b):
    """Twisted convolution; exact up to floating rounding, no truncation.

    For each row ``m2`` of ``b`` the contribution is a dense matrix product of
    the phase-twisted box of ``a`` with a Toeplitz matrix built from that row.
    """
    _check_theta(a, b)
    if a.is_zero() or b.is_zero():
        return zero(a.theta)
    (A, am, an), (B, bm, bn) = a.box, b.box
    ha, wa = A.shape
    hb, wb = B.shape
    out = np.zeros((ha + hb - 1, wa + wb - 1), dtype=complex)
    n_of_a = an + np.arange(wa)
    # toeplitz[k, n_out] = row[n_out - k]
    idx = np.arange(wa + wb - 1)[None, :] - np.arange(wa)[:, None]
    valid = (idx >= 0) & (idx < wb)
    idx = np.clip(idx, 0, wb - 1)
    for i in range(hb):
        row = B[i]
        if not row.any():
            continue
        twisted = A * phase(a.theta, n_of_a * (bm + i))[None, :]
        toep = np.where(valid, row[idx], 0)
        out[i:i + ha, :] += twisted @ toep
    return TorusElement.from_array(a.theta, out, am + bm, an + bn)


def star(a):
    """Adjoint: ``c[m, n]`` moves to ``(-m, -n)`` as ``conj(c) exp(-2 pi i theta m n)``."""
    if a.is_zero():
        return a
    data, m0, n0 = a.box
    h, w = data.shape
    ms = m0 + np.arange(h)
    ns = n0 + np.arange(w)
    twisted = np.conj(data) * phase(a.theta, np.outer(ms, ns))
    flipped = twisted[::-1, ::-1]
    return TorusElement.from_array(a.theta, flipped, -(m0 + h - 1), -(n0 + w - 1))


def derive(j, a):
    """Canonical derivation: ``u1^m u2^n`` scales by ``2 pi i m`` (j=1) or ``2 pi i n`` (j=2)."""
    if j not in (1, 2):
        raise ValueError(f"direction must be 1 or 2, got {j}")
    if a.is_zero():
        return a
    data, m0, n0 = a.box
    if j == 1:
        factor = (m0 + np.arange(data.shape[0]))[:, None]
    else:
        factor = (n0 + np.arange(data.shape[1]))[None, :]
    return TorusElement.from_array(a.theta, TWO_PI_I * factor * data, m0, n0)


def trace(a):
    """The invariant tracial state: the ``(0, 0)`` coefficient."""
    return a[0, 0]


def trace_product(a, b):
    """``trace(mul(a, b))`` without forming the product.

    ``tau(u1^m u2^n u1^-m u2^-n) = exp(2 pi i theta m n)``.
    """
    _check_theta(a, b)
    if a.is_zero() or b.is_zero():
        return 0j
    (A, am, an), (B, bm, bn) = a.box, b.box
    # overlap of a's box with the reflection of b's box
    m_lo = max(am, -(bm + B.shape[0] - 1))
    m_hi = min(am + A.shape[0] - 1, -bm)
    n_lo = max(an, -(bn + B.shape[1] - 1))
    n_hi = min(an + A.shape[1] - 1, -bn)
    if m_lo > m_hi or n_lo > n_hi:
        return 0j
    ms = np.arange(m_lo, m_hi + 1)
    ns = np.arange(n_lo, n_hi + 1)
    a_part = A[ms[:, None] - am, ns[None, :] - an]
    b_part = B[-ms[:, None] - bm, -ns[None, :] - bn]
    return complex(np.sum(a_part * b_part * phase(a.theta, -np.outer(ms, ns))))


def norm_l1(a):
    """Sum of coefficient moduli; an upper bound for the C*-norm."""
    return float(np.abs(a.box[0]).sum())


def truncate(a, policy):
    """Drop coefficients outside the radius box, charging their l1 mass to ``policy``."""
    r = policy.radius
    if a.is_zero() or a.radius <= r:
        return a
    data, m0, n0 = a.box
    h, w = data.shape
    i0, i1 = max(0, -r - m0), min(h, r - m0 + 1)
    j0, j1 = max(0, -r - n0), min(w, r - n0 + 1)
    if i0 >= i1 or j0 >= j1:
        policy.tail_report += float(np.abs(data).sum())
        return zero(a.theta)
    dropped = np.abs(data)
    dropped[i0:i1, j0:j1] = 0
    policy.tail_report += float(dropped.sum())
    return TorusElement.from_array(a.theta, data[i0:i1, j0:j1], m0 + i0, n0 + j0)


def commutator(a, b):
    """``ab - ba``."""
    return add(mul(a, b), scale(-1, mul(b, a)))
