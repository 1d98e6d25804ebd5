"""Closed-form evaluators for the surface-area bounds, all with unit constants.

The bounds are order-of-magnitude statements, so nothing here carries a
fitted constant; comparisons against measured areas are ratio windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .measure import MeasureModel
from .numerics import RangeError

BOUNDS_HEADER = ("bound_name", "family", "n", "p", "K", "value", "valid")


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    valid: bool
    inputs: dict = field(default_factory=dict)

    def row(self, family: str = "") -> list:
        i = self.inputs
        return [self.name, family, i.get("n", ""), i.get("p", ""), i.get("K", ""),
                self.value, self.valid]


def _echo(model: MeasureModel, **extra) -> dict:
    p = model.params
    out = dict(n=model.n, t0=p.t0, lambda_=p.lambda_, E=p.E, V=p.V, p=model.potential.p)
    out.update(extra)
    return out


def general_upper(model: MeasureModel) -> BoundReport:
    """``sqrt(n) / (Var|X|^{1/4} sqrt(E|X|))``, the bound for all convex sets."""
    p = model.params
    if p.var_norm <= 0:
        return BoundReport("general_upper", math.inf, False, _echo(model))
    value = math.sqrt(model.n) / (p.var_norm ** 0.25 * math.sqrt(p.E))
    return BoundReport("general_upper", value, True, _echo(model))


def thm_upper(model: MeasureModel, K: int, c_range: float = 1.0) -> BoundReport:
    """``(sqrt(n)/t0) sqrt(log K) log(1/(lambda log K))``.

    Valid when ``lambda log K <= 1/e`` and ``K <= exp(c_range / lambda)``.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    p = model.params
    lk = math.log(K)
    x = p.lambda_ * lk
    valid = x <= math.exp(-1.0) and lk <= c_range / p.lambda_
    value = math.sqrt(model.n) / p.t0 * math.sqrt(lk) * math.log(1.0 / x)
    return BoundReport("thm_upper", value, valid, _echo(model, K=K))


def nazarov_upper(K: int) -> BoundReport:
    """``sqrt(log K)``: Gaussian surface area of polytopes with ``K`` facets."""
    if K < 2:
        raise ValueError("K must be at least 2")
    return BoundReport("nazarov_upper", math.sqrt(math.log(K)), True, dict(K=K, p=2.0))


def gamma_p_upper(n: int, p: float, K: int) -> BoundReport:
    """``n^{1/2 - 1/p} sqrt(log K)`` for densities ``exp(-|y|^p / p)``."""
    if p < 1 or K < 2:
        raise ValueError("need p >= 1 and K >= 2")
    value = n ** (0.5 - 1.0 / p) * math.sqrt(math.log(K))
    return BoundReport("gamma_p_upper", value, True, dict(n=n, p=p, K=K))


def _split_objective(R, lam, K):
    R = np.asarray(R, dtype=float)
    return R * np.log(1.0 / (lam * R * R)) + K * np.exp(-R * R)


def optimize_R(lam: float, K: int):
    """Minimize ``R log(1/(lam R^2)) + K exp(-R^2)`` over ``R in (1, 1/(e sqrt(lam)))``.

    Returns ``(R_star, value)``.
    """
    if not 0.0 < lam < math.exp(-2.0):
        raise RangeError("lambda must lie in (0, e^-2) for a nonempty range of R")
    if K < 2:
        raise ValueError("K must be at least 2")
    lo, hi = 1.0, 1.0 / (math.e * math.sqrt(lam))
    grid = np.linspace(lo, hi, 4097)
    vals = _split_objective(grid, lam, K)
    j = int(np.argmin(vals))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)]
    res = minimize_scalar(lambda r: float(_split_objective(r, lam, K)), bounds=(a, b),
                          method="bounded", options={"xatol": 1e-12})
    if res.fun <= vals[j]:
        return float(res.x), float(res.fun)
    return float(grid[j]), float(vals[j])
