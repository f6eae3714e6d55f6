"""Smooth noncommutative 2-torus: Fourier-series algebra, functional calculus,
Levi-Civita connections, curvature and Gauss-Bonnet integrals, checked
against a finite clock-and-shift matrix model."""

from .algebra import (
    TorusElement,
    TruncationPolicy,
    add,
    commutator,
    derive,
    generator,
    monomial,
    mul,
    norm_l1,
    one,
    scale,
    star,
    trace,
    trace_product,
    truncate,
    zero,
)
from .funccalc import circle_function, exp_series, inv_sqrt, invert
from .geometry import (
    Metric,
    conformal_metric,
    connection_coeffs,
    curvature_1212,
    diagonal_metric,
    flat_metric,
    gauss_bonnet_conformal,
    gauss_bonnet_diagonal,
    general_metric,
)
from .inner_derivations import (
    InnerDerivation,
    MuMap,
    inner_curvature,
    make_commutant_mu,
    mu_kernel_check,
    normalize_inner,
)
from .module import AlgebraMatrix, ModuleVector
from .oracle import certify_spectrum, represent

__version__ = "0.1.0"

__all__ = [
    "AlgebraMatrix",
    "InnerDerivation",
    "Metric",
    "ModuleVector",
    "MuMap",
    "TorusElement",
    "TruncationPolicy",
    "add",
    "certify_spectrum",
    "circle_function",
    "commutator",
    "conformal_metric",
    "connection_coeffs",
    "curvature_1212",
    "derive",
    "diagonal_metric",
    "exp_series",
    "flat_metric",
    "gauss_bonnet_conformal",
    "gauss_bonnet_diagonal",
    "general_metric",
    "generator",
    "inner_curvature",
    "inv_sqrt",
    "invert",
    "make_commutant_mu",
    "monomial",
    "mu_kernel_check",
    "mul",
    "norm_l1",
    "normalize_inner",
    "one",
    "represent",
    "scale",
    "star",
    "trace",
    "trace_product",
    "truncate",
    "zero",
]
