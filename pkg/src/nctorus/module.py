"""Matrices over the torus algebra and vectors in the free module ``A^2``.

Module vectors are row vectors ``X = (x1, x2)`` standing for
``x1 d1 + x2 d2``.  The algebra acts on the left; module endomorphisms act
on the right, ``X -> X nu`` for a matrix ``nu``, which is what makes them
commute with left multiplication.
"""

from __future__ import annotations

import numpy as np

from .algebra import (
    TorusElement,
    TruncationPolicy,
    add,
    derive,
    mul,
    norm_l1,
    one,
    scale,
    star,
    truncate,
    zero,
)

__all__ = ["AlgebraMatrix", "ModuleVector", "basis_vector", "matrix_inverse"]


class AlgebraMatrix:
    """Square matrix with ``TorusElement`` entries (``rows[i][j]``)."""

    __slots__ = ("rows",)

    def __init__(self, rows):
        rows = tuple(tuple(r) for r in rows)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("AlgebraMatrix must be square and nonempty")
        theta = rows[0][0].theta
        if any(e.theta != theta for r in rows for e in r):
            raise ValueError("entries must share theta")
        self.rows = rows

    @property
    def size(self):
        return len(self.rows)

    @property
    def theta(self):
        return self.rows[0][0].theta

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    @classmethod
    def identity(cls, theta, n=2, c=1.0):
        return cls([[one(theta, c) if i == j else zero(theta) for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, theta, n=2):
        return cls([[zero(theta)] * n for _ in range(n)])

    @classmethod
    def diag(cls, *entries):
        theta = entries[0].theta
        n = len(entries)
        return cls([[entries[i] if i == j else zero(theta) for j in range(n)] for i in range(n)])

    def map(self, fn):
        return AlgebraMatrix([[fn(e) for e in r] for r in self.rows])

    def __add__(self, other):
        return AlgebraMatrix(
            [[add(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)]
        )

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, z):
        return self.map(lambda e: scale(z, e))

    def __matmul__(self, other):
        n = self.size
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = zero(self.theta)
                for k in range(n):
                    a, b = self.rows[i][k], other.rows[k][j]
                    if not (a.is_zero() or b.is_zero()):
                        acc = add(acc, mul(a, b))
                row.append(acc)
            out.append(row)
        return AlgebraMatrix(out)

    def left_mul(self, a):
        """Entrywise ``a * m_ij``."""
        return self.map(lambda e: mul(a, e))

    def right_mul(self, a):
        return self.map(lambda e: mul(e, a))

    def adjoint(self):
        """Conjugate transpose: ``(m*)_ij = star(m_ji)``."""
        n = self.size
        return AlgebraMatrix([[star(self.rows[j][i]) for j in range(n)] for i in range(n)])

    def commutator(self, other):
        return (self @ other) - (other @ self)

    def truncate(self, policy):
        return self.map(lambda e: truncate(e, policy))

    def norm(self):
        """Max row sum of entry l1 norms; submultiplicative, bounds the C*-norm."""
        sums = [sum(norm_l1(e) for e in r) for r in self.rows]
        # builtin max would silently skip a NaN row
        return float(np.max(sums))

    def is_zero(self):
        return all(e.is_zero() for r in self.rows for e in r)

    def allclose(self, other, tol=1e-12):
        return all(a.allclose(b, tol) for ra, rb in zip(self.rows, other.rows) for a, b in zip(ra, rb))

    def polyval(self, coeffs):
        """``sum_k coeffs[k] * M^k`` (constant term first), by Horner's rule."""
        n = self.size
        acc = AlgebraMatrix.zeros(self.theta, n)
        for c in reversed(list(coeffs)):
            acc = (acc @ self) + AlgebraMatrix.identity(self.theta, n, c)
        return acc

    def to_dict(self):
        return [[e.to_dict() for e in r] for r in self.rows]

    @classmethod
    def from_dict(cls, rows):
        return cls([[TorusElement.from_dict(e) for e in r] for r in rows])

    def __repr__(self):
        return f"AlgebraMatrix({[list(r) for r in self.rows]!r})"


class ModuleVector:
    """``x1 d1 + x2 d2`` as the row ``(x1, x2)``."""

    __slots__ = ("components",)

    def __init__(self, *components):
        if len(components) == 1 and not isinstance(components[0], TorusElement):
            components = tuple(components[0])
        if any(c.theta != components[0].theta for c in components):
            raise ValueError("components must share theta")
        self.components = tuple(components)

    @property
    def theta(self):
        return self.components[0].theta

    def __getitem__(self, k):
        return self.components[k]

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __add__(self, other):
        return ModuleVector(*(add(a, b) for a, b in zip(self, other)))

    def __sub__(self, other):
        return ModuleVector(*(add(a, scale(-1, b)) for a, b in zip(self, other)))

    def scale(self, z):
        return ModuleVector(*(scale(z, c) for c in self))

    def left_mul(self, a):
        """``a X``: the module action."""
        return ModuleVector(*(mul(a, c) for c in self))

    def apply(self, nu):
        """``X nu``: apply the endomorphism with matrix ``nu``."""
        n = len(self)
        out = []
        for j in range(n):
            acc = zero(self.theta)
            for k in range(n):
                if not (self[k].is_zero() or nu[k, j].is_zero()):
                    acc = add(acc, mul(self[k], nu[k, j]))
            out.append(acc)
        return ModuleVector(*out)

    def derive(self, j):
        return ModuleVector(*(derive(j, c) for c in self))

    def norm(self):
        return sum(norm_l1(c) for c in self)

    def allclose(self, other, tol=1e-12):
        return all(a.allclose(b, tol) for a, b in zip(self, other))

    def __repr__(self):
        return f"ModuleVector{self.components!r}"


def basis_vector(theta, k, n=2):
    """``d_k`` for ``k`` in ``1..n``."""
    return ModuleVector(*(one(theta) if i == k - 1 else zero(theta) for i in range(n)))


def matrix_inverse(gamma: AlgebraMatrix, tol=1e-12, policy=None, max_iter=200, full_output=False):
    """Inverse of a positive matrix over the algebra by block Newton iteration.

    ``X <- X (2 - gamma X)`` from ``X = I / rho``, ``rho = gamma.norm()``;
    entries are truncated once per step and the iterate re-symmetrized.
    Stops when ``(gamma X - I).norm() <= tol``.
    """
    from .funccalc import CalcInfo, ConvergenceError, DEFAULT_RADIUS

    policy = TruncationPolicy(DEFAULT_RADIUS) if policy is None else policy
    theta, n = gamma.theta, gamma.size
    eye = AlgebraMatrix.identity(theta, n)
    start_tail = policy.tail_report
    x = AlgebraMatrix.identity(theta, n, 1.0 / gamma.norm())
    residual = float("inf")
    for it in range(1, max_iter + 1):
        x = x.scale(2) - (x @ (gamma @ x))
        x = x.truncate(policy)
        x = (x + x.adjoint()).scale(0.5)
        residual = ((gamma @ x) - eye).norm()
        if residual <= tol:
            break
        if not np.isfinite(residual):
            raise ConvergenceError("block Newton inverse diverged; is the metric positive?",
                                   residual, it)
    else:
        raise ConvergenceError("block Newton inverse did not converge", residual, max_iter)
    # one polishing step, kept only if it helps
    y = (x.scale(2) - (x @ (gamma @ x))).truncate(policy)
    y = (y + y.adjoint()).scale(0.5)
    r = ((gamma @ y) - eye).norm()
    if r < residual:
        x, residual, it = y, r, it + 1
    if full_output:
        return x, CalcInfo(residual, it, policy.tail_report - start_tail)
    return x
