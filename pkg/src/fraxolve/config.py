"""JSON configuration ingestion for the command-line front end.

Unknown keys are rejected with their path; expressions for u0 and
coefficients use the grammar in :mod:`fraxolve.expressions`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .expressions import ExpressionError, parse_expression
from .mesh import TemporalMesh, build_graded
from .nonlinearity import Nonlinearity, builtin
from .pde import Problem, SolverConfig
from .spatial import BoundaryCondition, BoundarySpec, CoefficientField, Grid, _FACE_NAMES

__all__ = ["RunConfig", "ConfigError", "parse_config"]


class ConfigError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


def _require_keys(obj: dict, path: str, required: tuple, optional: tuple = ()):
    if not isinstance(obj, dict):
        raise ConfigError(path, f"expected an object, got {type(obj).__name__}")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(path, f"unknown key(s) {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(path, f"missing key(s) {sorted(missing)}")


def _number(obj, path, *, minimum=None, strict_min=None, integer=False):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigError(path, f"expected a number, got {obj!r}")
    if integer and int(obj) != obj:
        raise ConfigError(path, f"expected an integer, got {obj!r}")
    v = int(obj) if integer else float(obj)
    if minimum is not None and v < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {v}")
    if strict_min is not None and v <= strict_min:
        raise ConfigError(path, f"must be > {strict_min}, got {v}")
    return v


def _expression(text, path):
    if not isinstance(text, str):
        raise ConfigError(path, f"expected an expression string, got {text!r}")
    try:
        return parse_expression(text)
    except ExpressionError as e:
        raise ConfigError(path, str(e)) from None


def _space_fn(expr_fn):
    """Adapt an expression to the (points, t) coefficient signature."""

    def fn(pts, t):
        x = pts[:, 0]
        y = pts[:, 1] if pts.shape[1] > 1 else np.zeros_like(x)
        return np.broadcast_to(np.asarray(expr_fn(x=x, y=y, t=t), dtype=float), x.shape)

    return fn


def _coef_entry(obj, path):
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return float(obj)
    if isinstance(obj, str):
        return _space_fn(_expression(obj, path))
    raise ConfigError(path, "expected a number or expression string")


@dataclass
class RunConfig:
    mesh: TemporalMesh
    grid: Optional[Grid]
    problem: Optional[Problem]
    f: Optional[Nonlinearity]
    u0_scalar: Optional[float]
    alpha: float
    solver: SolverConfig
    output: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _parse_mesh(obj, path):
    if "nodes" in obj:
        _require_keys(obj, path, ("nodes",))
        nodes = obj["nodes"]
        if not isinstance(nodes, list) or len(nodes) < 2:
            raise ConfigError(f"{path}.nodes", "expected a list of at least two numbers")
        return TemporalMesh(np.asarray(nodes, dtype=float))
    _require_keys(obj, path, ("M",), ("T", "r"))
    M = _number(obj["M"], f"{path}.M", minimum=1, integer=True)
    T = _number(obj.get("T", 1.0), f"{path}.T", strict_min=0.0)
    r = _number(obj.get("r", 1.0), f"{path}.r", minimum=1.0)
    return build_graded(M, T, r)


def _parse_grid(obj, path):
    _require_keys(obj, path, ("d", "N"), ("X",))
    d = _number(obj["d"], f"{path}.d", integer=True)
    if d not in (1, 2):
        raise ConfigError(f"{path}.d", "dimension must be 1 or 2")
    N = _number(obj["N"], f"{path}.N", minimum=2, integer=True)
    X = obj.get("X", math.pi)
    if X == "pi":
        X = math.pi
    else:
        X = _number(X, f"{path}.X", strict_min=0.0)
    return Grid(d=d, N=N, X=X)


def _parse_f(obj, path):
    _require_keys(obj, path, ("kind",), ("alpha", "cstar", "F"))
    kind = obj["kind"]
    if kind == "allen_cahn":
        return builtin("allen_cahn", alpha=_number(obj.get("alpha", 0.5), f"{path}.alpha"))
    if kind == "fisher":
        return builtin("fisher")
    if kind == "linear":
        cstar = obj.get("cstar", 0.0)
        F = obj.get("F", 0.0)
        kwargs = {}
        if isinstance(cstar, str):
            raise ConfigError(f"{path}.cstar", "expression coefficients for linear f "
                              "are only available through the library API")
        return builtin("linear", cstar=cstar, F=F, **kwargs)
    if kind == "zero":
        return builtin("linear", cstar=0.0, F=0.0)
    raise ConfigError(f"{path}.kind", f"unknown nonlinearity kind {kind!r}")


def _parse_bc(obj, path, d):
    names = _FACE_NAMES[d]
    if "all" in obj:
        _require_keys(obj, path, ("all",))
        kind = obj["all"]
        if kind == "dirichlet0":
            return BoundarySpec.dirichlet0(d)
        if kind == "periodic":
            return BoundarySpec.all_periodic(d)
        raise ConfigError(f"{path}.all", f"unknown boundary shorthand {kind!r}")
    faces = {}
    _require_keys(obj, path, (), names)
    for name in names:
        if name not in obj:
            raise ConfigError(path, f"missing face {name!r}")
        spec = obj[name]
        _require_keys(spec, f"{path}.{name}", ("kind",), ("value",))
        kind = spec["kind"]
        value = spec.get("value", 0.0)
        if isinstance(value, str):
            value = _space_fn(_expression(value, f"{path}.{name}.value"))
        faces[name] = BoundaryCondition(kind, value)
    return BoundarySpec(faces, d)


def _parse_solver(obj, path):
    fields = ("nonlin_tol", "max_newton", "lin_tol", "lin_max_iters", "damping",
              "strict_restriction")
    _require_keys(obj, path, (), fields)
    kwargs = {}
    for k in fields:
        if k in obj:
            if k in ("max_newton", "lin_max_iters"):
                kwargs[k] = _number(obj[k], f"{path}.{k}", minimum=1, integer=True)
            elif k == "strict_restriction":
                if not isinstance(obj[k], bool):
                    raise ConfigError(f"{path}.{k}", "expected a boolean")
                kwargs[k] = obj[k]
            else:
                kwargs[k] = _number(obj[k], f"{path}.{k}", strict_min=0.0)
    return SolverConfig(**kwargs)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("<document>", f"invalid JSON: {e}") from None
    _require_keys(raw, "<root>", ("mesh",), ("problem", "grid", "solver", "output"))
    mesh = _parse_mesh(raw["mesh"], "mesh")
    grid = _parse_grid(raw["grid"], "grid") if "grid" in raw else None
    solver = _parse_solver(raw.get("solver", {}), "solver")
    output = raw.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("output", "expected an object")

    problem = None
    f = None
    u0_scalar = None
    alpha = 0.5
    if "problem" in raw:
        p = raw["problem"]
        _require_keys(p, "problem", ("f",), ("u0", "alpha", "coefficients", "bc"))
        alpha = _number(p.get("alpha", 0.5), "problem.alpha", strict_min=0.0)
        if not alpha < 1.0:
            raise ConfigError("problem.alpha", "alpha must be in (0, 1)")
        f = _parse_f(p["f"], "problem.f")
        if grid is not None:
            coeffs_obj = p.get("coefficients", {})
            _require_keys(coeffs_obj, "problem.coefficients", (), ("a", "b", "c"))
            a_obj = coeffs_obj.get("a", [1.0] * grid.d)
            if not isinstance(a_obj, list) or len(a_obj) != grid.d:
                raise ConfigError("problem.coefficients.a", f"expected {grid.d} entries")
            a = tuple(_coef_entry(v, f"problem.coefficients.a[{i}]") for i, v in enumerate(a_obj))
            b = None
            if "b" in coeffs_obj:
                b_obj = coeffs_obj["b"]
                if not isinstance(b_obj, list) or len(b_obj) != grid.d:
                    raise ConfigError("problem.coefficients.b", f"expected {grid.d} entries")
                b = tuple(_coef_entry(v, f"problem.coefficients.b[{i}]") for i, v in enumerate(b_obj))
            c = _coef_entry(coeffs_obj["c"], "problem.coefficients.c") if "c" in coeffs_obj else None
            time_dependent = any(callable(v) for v in a + (b or ()) + ((c,) if callable(c) else ()))
            coeffs = CoefficientField(a=a, b=b, c=c, time_dependent=time_dependent)
            bc = _parse_bc(p.get("bc", {"all": "dirichlet0"}), "problem.bc", grid.d)
            u0_expr = _expression(p.get("u0", "0"), "problem.u0")

            def u0(pts, _e=u0_expr):
                x = pts[:, 0]
                y = pts[:, 1] if pts.shape[1] > 1 else np.zeros_like(x)
                return np.broadcast_to(np.asarray(_e(x=x, y=y, t=0.0), dtype=float), x.shape)

            problem = Problem(coeffs=coeffs, bc=bc, f=f, u0=u0, alpha=alpha)
        else:
            u0_val = p.get("u0", 0.0)
            if isinstance(u0_val, str):
                u0_scalar = float(_expression(u0_val, "problem.u0")(t=0.0))
            else:
                u0_scalar = _number(u0_val, "problem.u0")
    return RunConfig(
        mesh=mesh, grid=grid, problem=problem, f=f, u0_scalar=u0_scalar,
        alpha=alpha, solver=solver, output=output, raw=raw,
    )
