"""Experiment configuration: schema validation and element/metric builders.

Element expressions come in four forms:

* a string such as ``"u1 + 3 + star(u1)"`` (see :func:`parse_expression`),
* ``{"coeffs": [[m, n, re, im], ...]}``,
* ``{"circle": {"j": 1, "cos": [c0, c1, ...], "sin": [s1, ...], "K": 16, "L": 128}}``
  for ``f(t) = c0 + sum c_k cos kt + s_k sin kt`` pushed into ``C*(u_j)``,
* ``{"random": {"radius": 1, "scale": 0.3, "shift": 3.0}}``: seeded random
  self-adjoint element plus ``shift * 1``.
"""

from __future__ import annotations

import ast
import json
import math
import zlib

import jsonschema
import numpy as np

from .algebra import (
    TorusElement,
    TruncationPolicy,
    add,
    generator,
    mul,
    one,
    scale,
    star,
)
from .funccalc import DEFAULT_RADIUS, DEFAULT_TOL, circle_function, exp_series, invert, sample_circle

CONFIG_VERSION = 1
DEFAULT_THETA = 0.3183098861837907


class ConfigError(ValueError):
    """Invalid configuration; ``where`` locates the offending field or line."""

    def __init__(self, where, msg):
        super().__init__(f"{where}: {msg}")
        self.where = where


_element = {
    "oneOf": [
        {"type": "string"},
        {"type": "number"},
        {
            "type": "object",
            "required": ["coeffs"],
            "properties": {
                "coeffs": {
                    "type": "array",
                    "items": {"type": "array", "minItems": 4, "maxItems": 4,
                              "items": {"type": "number"}},
                },
            },
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["circle"],
            "properties": {
                "circle": {
                    "type": "object",
                    "required": ["j", "cos"],
                    "properties": {
                        "j": {"enum": [1, 2]},
                        "cos": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                        "sin": {"type": "array", "items": {"type": "number"}},
                        "K": {"type": "integer", "minimum": 0},
                        "L": {"type": "integer", "minimum": 1},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["random"],
            "properties": {
                "random": {
                    "type": "object",
                    "properties": {
                        "radius": {"type": "integer", "minimum": 0, "maximum": 10},
                        "scale": {"type": "number", "minimum": 0},
                        "shift": {"type": "number"},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
    ]
}

_metric = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["flat", "diagonal", "conformal", "general"]},
        "a1": _element,
        "a2": _element,
        "h": _element,
        "g11": _element,
        "g12": _element,
        "g22": _element,
    },
    "additionalProperties": False,
}

_coeff = {"oneOf": [{"type": "number"},
                    {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}}]}

_mu_value = {
    "oneOf": [
        {"type": "object", "required": ["gamma_poly"], "additionalProperties": False,
         "properties": {"gamma_poly": {"type": "array", "minItems": 1, "items": _coeff}}},
        {"type": "object", "required": ["identity_times"], "additionalProperties": False,
         "properties": {"identity_times": _element}},
        {"type": "object", "required": ["matrix"], "additionalProperties": False,
         "properties": {"matrix": {"type": "array", "minItems": 2, "maxItems": 2,
                                   "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                             "items": _element}}}},
    ]
}

_common = {
    "name": {"type": "string", "minLength": 1},
    "type": {"type": "string"},
    "theta": {"type": "number"},
    "tol": {"type": "number", "exclusiveMinimum": 0},
}

_gauss_bonnet = {
    "type": "object",
    "required": ["name", "type", "metric"],
    "properties": {
        **_common,
        "type": {"const": "gauss_bonnet"},
        "metric": _metric,
        "radii": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        "assert": {
            "type": "object",
            "properties": {
                "abs_max": {"type": "number", "minimum": 0},
                "monotone_factor": {"type": "number", "minimum": 1},
                "path_max": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_axioms = {
    "type": "object",
    "required": ["name", "type", "metric"],
    "properties": {
        **_common,
        "type": {"const": "axioms"},
        "metric": _metric,
        "radius": {"type": "integer", "minimum": 1},
        "random_probes": {"type": "integer", "minimum": 0, "maximum": 10},
        "assert": {
            "type": "object",
            "properties": {k: {"type": "number", "minimum": 0} for k in
                           ("compatibility_max", "realness_max", "path_max")},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_probe_suite = {
    "type": "object",
    "required": ["name", "type", "metric", "mu"],
    "properties": {
        **_common,
        "type": {"const": "probe_suite"},
        "metric": _metric,
        "radius": {"type": "integer", "minimum": 1},
        "derivations": {"oneOf": [{"const": "default"},
                                  {"type": "array", "minItems": 1, "items": _element}]},
        "mu": {"oneOf": [{"enum": ["zero", "negative_generator"]},
                         {"type": "array", "minItems": 1, "items": _mu_value}]},
        "extend_brackets": {"type": "boolean"},
        "extensions": {
            "type": "array",
            "items": {"type": "object", "required": ["derivation", "value"],
                      "additionalProperties": False,
                      "properties": {"derivation": _element, "value": _mu_value}},
        },
        "assert": {
            "type": "object",
            "properties": {k: {"type": "number", "minimum": 0} for k in
                           ("kernel_max", "compatibility_max", "curvature_max",
                            "curvature_min", "cross_path_max")},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "required": ["version", "experiments"],
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "theta": {"type": "number"},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "experiments": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["type"],
                "properties": {"type": {"enum": ["gauss_bonnet", "axioms", "probe_suite"]}},
            },
        },
        "sweep": {
            "type": "object",
            "properties": {
                "experiment": {"type": "string"},
                "N": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
                "theta": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                "tol": {"type": "array", "minItems": 1,
                        "items": {"type": "number", "exclusiveMinimum": 0}},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

EXPERIMENT_SCHEMAS = {"gauss_bonnet": _gauss_bonnet, "axioms": _axioms, "probe_suite": _probe_suite}


def _path(prefix, error):
    parts = [prefix] if prefix else []
    for p in error.absolute_path:
        parts.append(f"[{p}]" if isinstance(p, int) else f".{p}")
    return "".join(parts).lstrip(".") or "<root>"


def _best_error(validator, obj):
    errors = list(validator.iter_errors(obj))
    if not errors:
        return None
    return jsonschema.exceptions.best_match(errors)


def validate(cfg):
    """Raise :class:`ConfigError` naming the first offending field."""
    err = _best_error(jsonschema.Draft202012Validator(SCHEMA), cfg)
    if err is not None:
        raise ConfigError(_path("", err), err.message)
    names = set()
    for i, exp in enumerate(cfg["experiments"]):
        where = f"experiments[{i}]"
        err = _best_error(jsonschema.Draft202012Validator(EXPERIMENT_SCHEMAS[exp["type"]]), exp)
        if err is not None:
            raise ConfigError(_path(where, err), err.message)
        if exp["name"] in names:
            raise ConfigError(f"{where}.name", f"duplicate experiment name {exp['name']!r}")
        names.add(exp["name"])
        _check_metric(exp["metric"], f"{where}.metric", exp["type"])
        for key, spec in _element_fields(exp):
            _check_element(spec, f"{where}.{key}")
        if exp["type"] == "probe_suite" and isinstance(exp["mu"], list):
            n = len(exp["derivations"]) if isinstance(exp.get("derivations"), list) else 4
            if len(exp["mu"]) != n:
                raise ConfigError(f"{where}.mu", f"{len(exp['mu'])} values for {n} derivations")
    sweep = cfg.get("sweep", {})
    if "experiment" in sweep and sweep["experiment"] not in names:
        raise ConfigError("sweep.experiment", f"no experiment named {sweep['experiment']!r}")


def _element_fields(exp):
    for k in ("a1", "a2", "h", "g11", "g12", "g22"):
        if k in exp["metric"]:
            yield f"metric.{k}", exp["metric"][k]
    if exp["type"] == "probe_suite":
        if isinstance(exp.get("derivations"), list):
            for i, e in enumerate(exp["derivations"]):
                yield f"derivations[{i}]", e
        for i, ext in enumerate(exp.get("extensions", [])):
            yield f"extensions[{i}].derivation", ext["derivation"]


_REQUIRED = {"flat": (), "diagonal": ("a1", "a2"), "conformal": ("h",), "general": ("g11", "g12", "g22")}


def _check_metric(spec, where, exp_type):
    kind = spec["kind"]
    need = set(_REQUIRED[kind])
    have = set(spec) - {"kind"}
    if need - have:
        raise ConfigError(where, f"{kind} metric needs fields {sorted(need - have)}")
    if have - need:
        raise ConfigError(where, f"{kind} metric does not take fields {sorted(have - need)}")
    if kind == "general" and exp_type == "gauss_bonnet":
        raise ConfigError(f"{where}.kind", "Gauss-Bonnet integrals are defined for flat, diagonal "
                                           "and conformal metrics only")


def _check_element(spec, where):
    if isinstance(spec, str):
        try:
            parse_expression(spec)
        except ValueError as exc:
            raise ConfigError(where, str(exc)) from None


def load_config(path):
    """Read and validate a JSON config; JSON syntax errors report line and column."""
    with open(path) as fh:
        text = fh.read()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    validate(cfg)
    return cfg


# -- element expressions ------------------------------------------------------------------

_FUNCTIONS = {"star", "inv", "exp"}
_NAMES = {"u1", "u2", "i", "pi"}


def parse_expression(text):
    """Parse and check an element expression, returning its AST.

    Allowed: numbers, ``u1``, ``u2``, ``i``, ``pi``, ``+ - * /``, integer
    powers, and the calls ``star(x)``, ``inv(x)`` and ``exp(x)``.  Division
    is by scalars only.
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {text!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if isinstance(node, (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Load,
                             ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)):
            continue
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) \
                and not isinstance(node.value, bool):
            continue
        if isinstance(node, ast.Name) and (node.id in _NAMES or node.id in _FUNCTIONS):
            continue
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCTIONS and len(node.args) == 1 and not node.keywords:
            continue
        raise ValueError(f"unsupported construct {ast.dump(node)[:40]!r} in {text!r}")
    return tree


class Context:
    """Numerical context for building elements: theta, tolerance, truncation, RNG seed."""

    def __init__(self, theta=DEFAULT_THETA, tol=DEFAULT_TOL, radius=DEFAULT_RADIUS, seed=0,
                 q=101):
        self.theta = float(theta)
        self.tol = float(tol)
        self.radius = int(radius)
        self.seed = int(seed)
        self.q = int(q)
        self.policy = TruncationPolicy(self.radius)

    def rng(self, label):
        """Generator keyed by the run seed and a stable label."""
        return np.random.default_rng([self.seed, zlib.crc32(label.encode())])


def _as_element(x, theta):
    return x if isinstance(x, TorusElement) else one(theta, complex(x))


def _eval(node, ctx):
    theta = ctx.theta
    if isinstance(node, ast.Expression):
        return _eval(node.body, ctx)
    if isinstance(node, ast.Constant):
        return node.value
    if isinstance(node, ast.Name):
        if node.id in ("u1", "u2"):
            return generator(theta, int(node.id[1]))
        if node.id == "i":
            return 1j
        if node.id == "pi":
            return math.pi
        raise ValueError(f"{node.id} must be called")
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, ctx)
        if isinstance(node.op, ast.USub):
            return scale(-1, v) if isinstance(v, TorusElement) else -v
        return v
    if isinstance(node, ast.Call):
        arg = _as_element(_eval(node.args[0], ctx), theta)
        name = node.func.id
        if name == "star":
            return star(arg)
        if name == "inv":
            return invert(arg, ctx.tol, ctx.policy, q=ctx.q, strict=False)
        return exp_series(arg, ctx.tol, ctx.policy)
    left, right = _eval(node.left, ctx), _eval(node.right, ctx)
    lel, rel = isinstance(left, TorusElement), isinstance(right, TorusElement)
    op = node.op
    if isinstance(op, ast.Pow):
        if rel or not float(right).is_integer():
            raise ValueError("exponents must be integers")
        k = int(right)
        if not lel:
            return left ** k
        if left.nnz == 1 and left.coeffs == {next(iter(left.coeffs)): 1}:
            (m, n), = left.coeffs
            if (m, n) in ((1, 0), (0, 1)):
                return generator(theta, 1 if m else 2, k)
        if k < 0:
            raise ValueError("negative powers are only defined for u1 and u2")
        acc = one(theta)
        for _ in range(k):
            acc = mul(acc, left)
        return acc
    if isinstance(op, ast.Div):
        if rel:
            raise ValueError("division by an element is not supported; use inv(x)")
        return scale(1 / right, left) if lel else left / right
    if not (lel or rel):
        return {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
                ast.Mult: lambda a, b: a * b}[type(op)](left, right)
    if isinstance(op, ast.Mult):
        if lel and rel:
            return mul(left, right)
        return scale(right, left) if lel else scale(left, right)
    a, b = _as_element(left, theta), _as_element(right, theta)
    return add(a, b) if isinstance(op, ast.Add) else add(a, scale(-1, b))


def build_element(spec, ctx: Context, label="element") -> TorusElement:
    """Build a :class:`TorusElement` from any of the supported spec forms."""
    theta = ctx.theta
    if isinstance(spec, (int, float)):
        return one(theta, float(spec))
    if isinstance(spec, str):
        return _as_element(_eval(parse_expression(spec), ctx), theta)
    if "coeffs" in spec:
        return TorusElement(theta, {(int(m), int(n)): complex(re, im) for m, n, re, im in spec["coeffs"]})
    if "circle" in spec:
        c = spec["circle"]
        cos, sin = c["cos"], c.get("sin", [])
        K = c.get("K", max(len(cos) - 1, len(sin)))
        L = c.get("L", max(4 * K + 4, 8))

        def f(t):
            out = np.full_like(t, cos[0])
            for k, ck in enumerate(cos[1:], 1):
                out = out + ck * np.cos(k * t)
            for k, sk in enumerate(sin, 1):
                out = out + sk * np.sin(k * t)
            return out

        return circle_function(sample_circle(f, L), c["j"], K, theta)
    if "random" in spec:
        r = spec["random"]
        return random_self_adjoint(ctx.rng(label), theta, r.get("radius", 1),
                                   r.get("scale", 0.3), r.get("shift", 3.0))
    raise ValueError(f"unrecognized element spec {spec!r}")


def random_self_adjoint(rng, theta, radius=1, scale_=0.3, shift=3.0):
    """``(b + b*)/2 + shift`` for ``b`` with uniform complex coefficients in the radius box."""
    size = 2 * radius + 1
    data = rng.uniform(-scale_, scale_, (size, size)) + 1j * rng.uniform(-scale_, scale_, (size, size))
    b = TorusElement.from_array(theta, data, -radius, -radius)
    return add(scale(0.5, add(b, star(b))), one(theta, shift))


def parse_coeff(c):
    return complex(c[0], c[1]) if isinstance(c, list) else complex(c)
