"""Metrics on the free module, Levi-Civita connections, curvature, Gauss-Bonnet.

Conventions
-----------
* Inner product: ``<X, Y> = sum_jk x_j g_jk star(y_k)``; left-linear,
  conjugate-linear on the right, ``<d_j, d_k> = g_jk``.
* Christoffel data: ``nabla_j d_k = sum_l Gamma[j, k, l] d_l``, so that
  ``sum_m Gamma[j, k, m] g_ml = <nabla_j d_k, d_l>``.
* Curvature: ``R(X, Y) = nabla_Y nabla_X - nabla_X nabla_Y + nabla_[X,Y]``.
  This is the opposite sign to the usual differential-geometry convention.
  ``R1212 = <R(d1, d2) d1, d2>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

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
    trace_product,
    zero,
)
from .funccalc import (
    DEFAULT_RADIUS,
    DEFAULT_TOL,
    PositivityError,
    certify_positive,
    exp_series,
    inv_sqrt,
    invert,
)
from .module import AlgebraMatrix, ModuleVector, basis_vector, matrix_inverse
from .oracle import DEFAULT_Q, Certificate, certify_block

# metrics whose certified lower spectral bound is at or below this are rejected
DEGENERACY_FLOOR = 1e-6

INDICES = (1, 2)
KINDS = ("flat", "conformal", "diagonal", "general")


class CurvatureMismatchError(RuntimeError):
    """Operational and closed-form curvature disagree beyond tolerance."""

    def __init__(self, distance, tol):
        super().__init__(f"curvature paths differ by {distance:.3e} > {tol:.3e}")
        self.distance = distance


@dataclass
class Metric:
    """Riemannian metric ``(g_jk)`` on ``A^2`` with its positivity certificate.

    ``params`` holds the defining elements: ``a1, a2`` (diagonal), ``h`` and
    ``exp_h`` (conformal).
    """

    entries: AlgebraMatrix
    kind: str
    params: dict = field(default_factory=dict)
    certificates: list = field(default_factory=list)

    @property
    def theta(self):
        return self.entries.theta

    def g(self, j, k):
        return self.entries[j - 1, k - 1]

    @property
    def is_diagonal(self):
        return self.kind in ("flat", "conformal", "diagonal")

    def diagonal_entries(self):
        return self.g(1, 1), self.g(2, 2)


def flat_metric(theta):
    return Metric(AlgebraMatrix.identity(theta), "flat")


def diagonal_metric(a1, a2, q=DEFAULT_Q, floor=DEGENERACY_FLOOR):
    """``g_jk = delta_jk a_k`` for positive invertible ``a1``, ``a2``."""
    certs = []
    for a in (a1, a2):
        try:
            certs.append(certify_positive(a, q, floor=floor))
        except PositivityError as exc:
            raise PositivityError(f"diagonal metric entry not certified: {exc}") from None
    return Metric(AlgebraMatrix.diag(a1, a2), "diagonal", {"a1": a1, "a2": a2}, certs)


def conformal_metric(h, tol=DEFAULT_TOL, policy=None):
    """``e^h I_2`` for self-adjoint ``h``; positivity is automatic."""
    policy = TruncationPolicy(DEFAULT_RADIUS) if policy is None else policy
    eh = exp_series(h, tol, policy)
    return Metric(AlgebraMatrix.diag(eh, eh), "conformal", {"h": h, "exp_h": eh})


def general_metric(g11, g12, g22, q=DEFAULT_Q, floor=DEGENERACY_FLOOR):
    """Symmetric metric with self-adjoint entries, certified through the block oracle."""
    for name, e in (("g11", g11), ("g12", g12), ("g22", g22)):
        if not e.is_self_adjoint(1e-10):
            raise ValueError(f"metric entry {name} is not self-adjoint")
    entries = [[g11, g12], [g12, g22]]
    cert = certify_block(entries, q)
    if cert.lambda_min <= floor:
        raise PositivityError(f"metric lambda_min = {cert.lambda_min:.3e} <= {floor:g}")
    return Metric(AlgebraMatrix(entries), "general", {}, [cert])


# -- inner product and Christoffel data ------------------------------------------------


def inner_product(X: ModuleVector, Y: ModuleVector, g: Metric) -> TorusElement:
    """``sum_jk x_j g_jk star(y_k)``."""
    acc = zero(g.theta)
    ystar = [star(y) for y in Y]
    for j, x in enumerate(X):
        if x.is_zero():
            continue
        for k, y in enumerate(ystar):
            gjk = g.entries[j, k]
            if y.is_zero() or gjk.is_zero():
                continue
            acc = add(acc, mul(mul(x, gjk), y))
    return acc


def christoffel_inner(g: Metric):
    """``<nabla_j d_k, d_l>`` for all ``j, k, l``, keyed ``(j, k, l)``.

    ``1/2 (d_j g_kl + d_k g_jl - d_l g_jk)``.  Entries with ``j > k`` are the
    same objects as their ``(k, j, l)`` partners.
    """
    dg = {(i, k, l): derive(i, g.g(k, l)) for i in INDICES for k in INDICES for l in INDICES}
    table = {}
    for j in INDICES:
        for k in INDICES:
            if j > k:
                continue
            for l in INDICES:
                val = add(add(dg[j, k, l], dg[k, j, l]), scale(-1, dg[l, j, k]))
                table[j, k, l] = scale(0.5, val)
                table[k, j, l] = table[j, k, l]
    return table


@dataclass
class Connection:
    """Levi-Civita connection: ``gamma[(j, k, l)]`` is the ``d_l`` coefficient of ``nabla_j d_k``."""

    metric: Metric
    christoffel: dict
    gamma: dict
    inverse: AlgebraMatrix
    method: str
    residual: float = 0.0
    tail_mass: float = 0.0

    @property
    def theta(self):
        return self.metric.theta


def _diagonal_inverse(g, tol, policy, q, strict):
    a1, a2 = g.diagonal_entries()
    if g.kind == "flat":
        return AlgebraMatrix.identity(g.theta), 0.0
    certs = g.certificates or [None, None]
    kw = dict(q=q, full_output=True, strict=strict)
    inv1, info1 = invert(a1, tol, policy, certificate=certs[0], **kw)
    if g.kind == "conformal":
        inv2, info2 = inv1, info1
    else:
        inv2, info2 = invert(a2, tol, policy, certificate=certs[1], **kw)
    return AlgebraMatrix.diag(inv1, inv2), max(info1.residual, info2.residual)


def metric_inverse(g: Metric, tol=DEFAULT_TOL, policy=None, q=DEFAULT_Q, strict=True):
    """``gamma^-1`` as an :class:`AlgebraMatrix`, with the achieved residual."""
    policy = TruncationPolicy(DEFAULT_RADIUS) if policy is None else policy
    if g.is_diagonal:
        return _diagonal_inverse(g, tol, policy, q, strict)
    inv, info = matrix_inverse(g.entries, tol, policy, full_output=True)
    return inv, info.residual


def connection_coeffs(g: Metric, tol=DEFAULT_TOL, policy=None, method="auto", q=DEFAULT_Q,
                      strict=True):
    """Solve ``sum_m Gamma[j, k, m] g_ml = <nabla_j d_k, d_l>``.

    ``method="diagonal"`` uses ``Gamma[j, k, l] = <nabla_j d_k, d_l> a_l^-1``;
    ``method="general"`` multiplies by ``gamma^-1`` from block Newton
    iteration.  ``"auto"`` picks the diagonal route when the metric allows.
    """
    policy = TruncationPolicy(DEFAULT_RADIUS) if policy is None else policy
    if method == "auto":
        method = "diagonal" if g.is_diagonal else "general"
    if method == "diagonal" and not g.is_diagonal:
        raise ValueError("diagonal route needs a diagonal metric")
    start_tail = policy.tail_report
    table = christoffel_inner(g)
    if method == "diagonal":
        inv, residual = _diagonal_inverse(g, tol, policy, q, strict)
    elif method == "general":
        inv, info = matrix_inverse(g.entries, tol, policy, full_output=True)
        residual = info.residual
    else:
        raise ValueError(f"unknown method {method!r}")

    gamma = {}
    for j in INDICES:
        for k in INDICES:
            if j > k:
                continue
            for l in INDICES:
                acc = zero(g.theta)
                for m in INDICES:
                    c, w = table[j, k, m], inv[m - 1, l - 1]
                    if not (c.is_zero() or w.is_zero()):
                        acc = add(acc, mul(c, w))
                gamma[j, k, l] = acc
                gamma[k, j, l] = acc
    return Connection(g, table, gamma, inv, method, residual, policy.tail_report - start_tail)


def nabla_apply(c: Connection, j, Y: ModuleVector) -> ModuleVector:
    """``nabla_j (sum_k y_k d_k) = sum_k (d_j y_k) d_k + sum_kl y_k Gamma[j, k, l] d_l``."""
    out = [derive(j, y) for y in Y]
    for k, y in enumerate(Y, start=1):
        if y.is_zero():
            continue
        for l in INDICES:
            gam = c.gamma[j, k, l]
            if not gam.is_zero():
                out[l - 1] = add(out[l - 1], mul(y, gam))
    return ModuleVector(*out)


# -- curvature ---------------------------------------------------------------------------


def curvature_operator(c: Connection, Y: ModuleVector) -> ModuleVector:
    """``R(d1, d2) Y = (nabla_2 nabla_1 - nabla_1 nabla_2) Y``."""
    return nabla_apply(c, 2, nabla_apply(c, 1, Y)) - nabla_apply(c, 1, nabla_apply(c, 2, Y))


def closed_form_1212(a1, a2, inv1, inv2):
    """Diagonal-metric ``R1212`` assembled term by term.

    ``4 R1212 = (d1 a1) a1^-1 (d1 a2) + (d2 a1) a2^-1 (d2 a2)
              + (d2 a1) a1^-1 (d2 a1) + (d1 a2) a2^-1 (d1 a2)
              - 2 (d1 d1 a2 + d2 d2 a1)``
    """
    d1a1, d2a1 = derive(1, a1), derive(2, a1)
    d1a2, d2a2 = derive(1, a2), derive(2, a2)
    terms = [
        mul(mul(d1a1, inv1), d1a2),
        mul(mul(d2a1, inv2), d2a2),
        mul(mul(d2a1, inv1), d2a1),
        mul(mul(d1a2, inv2), d1a2),
        scale(-2, add(derive(1, d1a2), derive(2, d2a1))),
    ]
    acc = zero(a1.theta)
    for t in terms:
        acc = add(acc, t)
    return scale(0.25, acc)


def curvature_1212(c: Connection, tol=DEFAULT_TOL, check=True, agreement_tol=None,
                   full_output=False):
    """``R1212 = <(nabla_2 nabla_1 - nabla_1 nabla_2) d1, d2>`` via ``nabla_apply``.

    On diagonal metrics the closed form is evaluated as well; with ``check``
    a disagreement above ``agreement_tol`` (default ``10 * tol``) raises
    :class:`CurvatureMismatchError`.  ``full_output`` adds the l1 distance
    between the two paths (``None`` when only one path applies).
    """
    g = c.metric
    theta = g.theta
    d1, d2 = basis_vector(theta, 1), basis_vector(theta, 2)
    r = inner_product(curvature_operator(c, d1), d2, g)
    distance = None
    if g.is_diagonal:
        a1, a2 = g.diagonal_entries()
        closed = closed_form_1212(a1, a2, c.inverse[0, 0], c.inverse[1, 1])
        distance = norm_l1(add(r, scale(-1, closed)))
        limit = 10 * tol if agreement_tol is None else agreement_tol
        if check and distance > limit:
            raise CurvatureMismatchError(distance, limit)
    if full_output:
        return r, distance
    return r


# -- axiom residuals ----------------------------------------------------------------------


def compatibility_residual(c: Connection, j, Y: ModuleVector, Z: ModuleVector):
    """l1 norm of ``d_j <Y, Z> - <nabla_j Y, Z> - <Y, nabla_j Z>``."""
    g = c.metric
    lhs = derive(j, inner_product(Y, Z, g))
    rhs = add(inner_product(nabla_apply(c, j, Y), Z, g), inner_product(Y, nabla_apply(c, j, Z), g))
    return norm_l1(add(lhs, scale(-1, rhs)))


def realness_defect(c: Connection):
    """Largest coefficient of ``C - star(C)`` over the Christoffel inner products."""
    worst = 0.0
    for val in c.christoffel.values():
        diff = add(val, scale(-1, star(val)))
        if not diff.is_zero():
            worst = max(worst, float(abs(diff.box[0]).max()))
    return worst


def torsion_defect(c: Connection):
    """Exact check ``Gamma[1, 2, l] == Gamma[2, 1, l]``; returns 0.0 or inf."""
    ok = all(c.gamma[1, 2, l] == c.gamma[2, 1, l] for l in INDICES)
    return 0.0 if ok else float("inf")


def compatibility_suite(c: Connection, probes=()):
    """Max compatibility residual over basis vectors plus extra probe vectors."""
    theta = c.theta
    vectors = [basis_vector(theta, 1), basis_vector(theta, 2), *probes]
    worst = 0.0
    for j in INDICES:
        for Y in vectors:
            for Z in vectors:
                worst = max(worst, compatibility_residual(c, j, Y, Z))
    return worst


# -- Gauss-Bonnet integrals -----------------------------------------------------------------


def gauss_bonnet_diagonal(a1, a2, tol=DEFAULT_TOL, policy=None, q=DEFAULT_Q,
                          full_output=False, check_paths=True, strict=True, agreement_tol=None):
    """``tau(a1^-1/2 R1212 a2^-1/2)`` for the metric ``diag(a1, a2)``.

    With ``strict=False`` functional-calculus steps that stall above ``tol``
    because of truncation are accepted; the report then has
    ``converged=False``.
    """
    policy = TruncationPolicy(DEFAULT_RADIUS) if policy is None else policy
    g = diagonal_metric(a1, a2, q)
    conn = connection_coeffs(g, tol, policy, q=q, strict=strict)
    r, distance = curvature_1212(conn, tol, check_paths, agreement_tol, full_output=True)
    kw = dict(q=q, full_output=True, strict=strict)
    s1, info1 = inv_sqrt(a1, tol, policy, certificate=g.certificates[0], **kw)
    s2, info2 = inv_sqrt(a2, tol, policy, certificate=g.certificates[1], **kw)
    # tau(s1 R s2) = tau(R s2 s1)
    value = trace_product(r, mul(s2, s1))
    report = {
        "value": value,
        "curvature_l1": norm_l1(r),
        "path_distance": distance,
        "inverse_residual": conn.residual,
        "inv_sqrt_residual": max(info1.residual, info2.residual),
        "converged": conn.residual <= tol and info1.converged and info2.converged,
        "tail_mass": policy.tail_report,
        "certificates": [certificate_dict(cert) for cert in g.certificates],
    }
    return (value, report) if full_output else value


def gauss_bonnet_conformal(h, tol=DEFAULT_TOL, policy=None, q=DEFAULT_Q,
                           full_output=False, check_paths=True, strict=True, agreement_tol=None):
    """``tau(R1212 e^-h)`` for the conformal metric ``e^h I_2``."""
    policy = TruncationPolicy(DEFAULT_RADIUS) if policy is None else policy
    g = conformal_metric(h, tol, policy)
    conn = connection_coeffs(g, tol, policy, q=q, strict=strict)
    r, distance = curvature_1212(conn, tol, check_paths, agreement_tol, full_output=True)
    e_minus_h = exp_series(scale(-1, h), tol, policy)
    value = trace_product(r, e_minus_h)
    report = {
        "value": value,
        "curvature_l1": norm_l1(r),
        "path_distance": distance,
        "inverse_residual": conn.residual,
        "exp_residual": norm_l1(add(mul(g.params["exp_h"], e_minus_h), one(h.theta, -1.0))),
        "converged": conn.residual <= tol,
        "tail_mass": policy.tail_report,
        "certificates": [],
    }
    return (value, report) if full_output else value


def certificate_dict(cert):
    """JSON form of a positivity certificate, tagged with how it was obtained."""
    if isinstance(cert, Certificate):
        if cert.q == 1:
            return {"lambda_min": cert.lambda_min, "lambda_max": cert.lambda_max, "method": "l1"}
        return {**cert.to_dict(), "method": "oracle"}
    return None
