"""Reaction terms f(x, t, s) with one-sided Lipschitz and invariant-range metadata.

Assumption tags used throughout:
  A1  one-sided Lipschitz in s: f(x,t,s1) - f(x,t,s2) >= -lam (s1 - s2) for s1 >= s2
  A2  invariant range: constants s1 <= 0 <= s2 with f(.,.,s1) <= 0 <= f(.,.,s2)
  A1* two-sided Lipschitz with constant lam_bar >= lam
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

__all__ = ["Nonlinearity", "builtin", "truncate", "verify_assumptions", "AssumptionReport"]


@dataclass(frozen=True)
class Nonlinearity:
    """f(x, t, s); ``x`` may be None (scalar problems) or an (n, d) node array.

    ``eval`` and ``deriv_s`` must be pure and broadcast over s.
    """

    eval: Callable
    lam: float
    deriv_s: Optional[Callable] = None
    range: Optional[tuple[float, float]] = None
    lam_bar: Optional[float] = None
    name: str = "custom"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.range is not None:
            s1, s2 = self.range
            if not (s1 <= 0.0 <= s2):
                raise ValueError("invariant range must satisfy sigma1 <= 0 <= sigma2")


def builtin(name: str, **params) -> Nonlinearity:
    """Built-in reactions: allen_cahn(alpha), fisher, linear(cstar, F, ...).

    Lipschitz constants of built-ins are the analytically sharp ones.
    """
    if name == "allen_cahn":
        a = float(params.pop("alpha"))
        if params:
            raise ValueError(f"unknown parameters for allen_cahn: {sorted(params)}")
        if not 0.0 < a < 1.0:
            raise ValueError(f"allen_cahn requires alpha in (0, 1), got {a}")
        return Nonlinearity(
            eval=lambda x, t, s: (np.asarray(s) ** 3 - np.asarray(s)) / a,
            deriv_s=lambda x, t, s: (3.0 * np.asarray(s) ** 2 - 1.0) / a,
            lam=1.0 / a,  # min_s (3 s^2 - 1)/a = -1/a
            range=(-1.0, 1.0),
            lam_bar=None,  # the cubic is not globally two-sided Lipschitz
            name=f"allen_cahn({a})",
        )
    if name == "fisher":
        if params:
            raise ValueError(f"unknown parameters for fisher: {sorted(params)}")
        quad = Nonlinearity(
            eval=lambda x, t, s: np.asarray(s) ** 2 - np.asarray(s),
            deriv_s=lambda x, t, s: 2.0 * np.asarray(s) - 1.0,
            lam=1.0,  # min of 2s - 1 on [0, 1]
            name="fisher_raw",
        )
        f = truncate(quad, 0.0, 1.0, lam=1.0)
        return replace(f, lam_bar=1.0, name="fisher")
    if name == "linear":
        cstar = params.pop("cstar")
        F = params.pop("F", None)
        inf_cstar = params.pop("inf_cstar", None)
        sup_abs_cstar = params.pop("sup_abs_cstar", None)
        if params:
            raise ValueError(f"unknown parameters for linear: {sorted(params)}")
        c_fn = cstar if callable(cstar) else (lambda x, t, _c=float(cstar): _c)
        F_fn = F if callable(F) else (lambda x, t, _F=float(F or 0.0): _F)
        if inf_cstar is None and not callable(cstar):
            inf_cstar = float(cstar)
        if sup_abs_cstar is None and not callable(cstar):
            sup_abs_cstar = abs(float(cstar))
        if inf_cstar is None:
            raise ValueError("linear with callable cstar needs inf_cstar")
        return Nonlinearity(
            eval=lambda x, t, s: c_fn(x, t) * np.asarray(s) + F_fn(x, t),
            deriv_s=lambda x, t, s: c_fn(x, t) * np.ones_like(np.asarray(s, dtype=float)),
            lam=max(0.0, -float(inf_cstar)),
            lam_bar=float(sup_abs_cstar) if sup_abs_cstar is not None else None,
            name="linear",
        )
    raise ValueError(f"unknown built-in nonlinearity: {name!r}")


def truncate(f: Nonlinearity, sigma1: float, sigma2: float, lam: float | None = None) -> Nonlinearity:
    """Clamp f in s to [sigma1, sigma2]; derivative is zero outside.

    The clamped reaction satisfies A1 with the one-sided constant of f on the
    range.  If ``lam`` is not given it is taken from the derivative sampled on
    [sigma1, sigma2] (advisory for custom f; exact when deriv_s is exact and
    the minimum is attained on the sample).
    """
    if sigma1 > 0.0 or sigma2 < 0.0:
        raise ValueError("truncation range must satisfy sigma1 <= 0 <= sigma2")

    def f_eval(x, t, s):
        return f.eval(x, t, np.clip(s, sigma1, sigma2))

    def f_deriv(x, t, s):
        s = np.asarray(s, dtype=float)
        inside = (s >= sigma1) & (s <= sigma2)
        d = f.deriv_s(x, t, np.clip(s, sigma1, sigma2))
        return np.where(inside, d, 0.0)

    if lam is None:
        if f.deriv_s is not None:
            ss = np.linspace(sigma1, sigma2, 2001)
            lam = max(0.0, -float(np.min(f.deriv_s(None, 0.0, ss))))
        else:
            lam = f.lam
    lam_bar = None
    if f.deriv_s is not None:
        ss = np.linspace(sigma1, sigma2, 2001)
        lam_bar = float(np.max(np.abs(f.deriv_s(None, 0.0, ss))))
    return Nonlinearity(
        eval=f_eval,
        deriv_s=f_deriv if f.deriv_s is not None else None,
        lam=lam,
        range=(sigma1, sigma2),
        lam_bar=lam_bar,
        name=f"truncate({f.name}, [{sigma1}, {sigma2}])",
    )


@dataclass(frozen=True)
class AssumptionReport:
    a1_margin: float
    a1_pass: bool
    a2_margin: Optional[float]
    a2_pass: Optional[bool]


def verify_assumptions(
    f: Nonlinearity,
    s_range: tuple[float, float] = (-2.0, 2.0),
    n_pairs: int = 1000,
    t_samples=(0.0, 0.5, 1.0),
    seed: int = 0,
    tol: float = 1e-10,
) -> AssumptionReport:
    """Spot-check A1/A2 by sampling; sampling cannot prove A1, so advisory only.

    A1 margin is the worst value of (secant slope + lam) over sampled pairs
    (negative means a violation); A2 margin the worst sign margin at the
    declared range endpoints.
    """
    rng = np.random.default_rng(seed)
    lo, hi = s_range
    s1 = rng.uniform(lo, hi, n_pairs)
    s2 = rng.uniform(lo, hi, n_pairs)
    a, b = np.maximum(s1, s2), np.minimum(s1, s2)
    keep = a - b > 1e-12
    a, b = a[keep], b[keep]
    a1_margin = np.inf
    for t in t_samples:
        slopes = (np.asarray(f.eval(None, t, a)) - np.asarray(f.eval(None, t, b))) / (a - b)
        a1_margin = min(a1_margin, float(np.min(slopes + f.lam)))
    a1_pass = a1_margin >= -tol

    a2_margin = None
    a2_pass = None
    if f.range is not None:
        sig1, sig2 = f.range
        a2_margin = np.inf
        for t in t_samples:
            a2_margin = min(
                a2_margin,
                float(-np.max(np.atleast_1d(f.eval(None, t, sig1)))),
                float(np.min(np.atleast_1d(f.eval(None, t, sig2)))),
            )
        a2_pass = a2_margin >= -tol
    return AssumptionReport(a1_margin, a1_pass, a2_margin, a2_pass)
