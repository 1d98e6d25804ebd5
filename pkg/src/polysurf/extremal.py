"""Random circumscribed polytopes: the extremal construction for the lower bound.

``K`` halfspaces ``<x, x_i> <= rho`` with i.i.d. uniform normals. Their
expected surface measure reduces, by Fubini and exchangeability of the
normals, to a single radial integral involving the spherical cap
probability.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, gammaln

from .measure import MeasureModel
from .numerics import BracketError, LogIntegrand, RangeError, find_root, integrate_log
from .surface import _facet_log_integrand, _log_hyperplane_prefactor

SWEEP_HEADER = ("family", "n", "K", "rho", "expected_exact", "mc_mean", "mc_stderr",
                "lower_rhs", "in_range")


class TheoremRangeWarning(UserWarning):
    """``K`` exceeds ``exp(c / lambda)``; the construction runs outside its guaranteed range."""


@dataclass(frozen=True)
class ExtremalConfig:
    model: MeasureModel
    K: int
    rho: float
    c_range: float = 1.0

    def __post_init__(self):
        if self.K < 2 or self.rho <= 0:
            raise ValueError("need K >= 2 and rho > 0")
        p = self.model.params
        if not self.rho < p.t0 * (1.0 + p.lambda_):
            raise RangeError("rho must be below t0 (1 + lambda)")
        if not in_theorem_range(self.model, self.K, self.c_range):
            warnings.warn(f"K={self.K} exceeds exp(c/lambda) with c={self.c_range}",
                          TheoremRangeWarning, stacklevel=2)


def in_theorem_range(model: MeasureModel, K: int, c_range: float = 1.0) -> bool:
    return math.log(K) <= c_range / model.params.lambda_


def _log_sphere_sin_integral(n: int) -> float:
    """``log int_0^pi sin^{n-2} theta d theta``."""
    return 0.5 * math.log(math.pi) + float(gammaln(0.5 * (n - 1)) - gammaln(0.5 * n))


def cap_probability(n: int, t: float, rho: float) -> float:
    """Probability that a uniform direction ``x`` has ``<y, x> >= rho`` for ``|y| = t``.

    In angular form the cap is ``int_0^{arccos(rho/t)} sin^{n-2}`` over the
    full ``int_0^pi sin^{n-2}``; the numerator is integrated numerically.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if rho >= t:
        return 0.0
    theta = math.acos(max(-1.0, rho / t))
    if n == 2:
        return theta / math.pi
    def logf(th):
        with np.errstate(divide="ignore"):
            return (n - 2) * np.log(np.sin(th))

    f = LogIntegrand(logf, 0.0, theta)
    return min(1.0, math.exp(integrate_log(f) - _log_sphere_sin_integral(n)))


def cap_probability_beta(n: int, t, rho):
    """Vectorized closed form ``I_{1 - (rho/t)^2}((n-1)/2, 1/2) / 2`` for ``rho >= 0``."""
    t = np.asarray(t, dtype=float)
    ratio = np.clip(rho / t, 0.0, 1.0)
    return 0.5 * betainc(0.5 * (n - 1), 0.5, 1.0 - ratio * ratio)


def _rho_equation(model: MeasureModel, K: int):
    p = model.params
    n, t0 = model.n, p.t0
    top = t0 * (1.0 + p.lambda_)

    def F(rho):
        # log of the right-hand side plus log K; decreasing in rho
        base = 1.0 - (rho / top) ** 2
        if base <= 0.0:
            return -math.inf if n > 3 else math.log(t0 / (math.sqrt(n) * rho)) + math.log(K)
        return (math.log(t0 / (math.sqrt(n) * rho)) + 0.5 * (n - 3) * math.log(base)
                + math.log(K))

    return F, t0 / (K * math.sqrt(n)), top


def solve_rho(model: MeasureModel, K: int) -> float:
    """Offset ``rho`` making the cap-probability estimate equal ``1/K``.

    Solves ``1/K = (t0 / (sqrt(n) rho)) (1 - rho^2 / (t0^2 (1+lambda)^2))^{(n-3)/2}``
    on ``(t0 / (K sqrt(n)), t0 (1 + lambda))``.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    F, lo, hi = _rho_equation(model, K)
    try:
        rho = find_root(F, lo, hi * (1.0 - 1e-15))
    except BracketError as exc:
        raise RangeError(f"no rho solves the selection equation for K={K}") from exc
    scale = model.params.t0 * math.sqrt(math.log(K)) / math.sqrt(model.n)
    ratio = rho / scale
    if not 0.3 <= ratio <= 3.0:
        warnings.warn(f"rho / (t0 sqrt(log K) / sqrt(n)) = {ratio:.3g} outside [0.3, 3]",
                      TheoremRangeWarning, stacklevel=2)
    return rho


def expected_surface_exact(model: MeasureModel, K: int, rho: float, annulus: bool = False) -> float:
    """Expected surface measure of the random circumscribed polytope.

    ``K`` times the measure of one facet's hyperplane weighted by the
    probability ``(1 - p(t))^{K-1}`` that no other halfspace cuts the point
    off. With ``annulus=True`` the radial integral is restricted to
    ``t in [t0 (1 - lambda), t0 (1 + lambda)]``.
    """
    if rho <= 0 or K < 1:
        raise ValueError("need rho > 0 and K >= 1")
    n = model.n
    base = _facet_log_integrand(model, rho)
    rho2 = rho * rho

    def logf(s):
        t = np.sqrt(s * s + rho2)
        cap = cap_probability_beta(n, t, rho)
        return base.logf(s) + (K - 1) * np.log1p(-cap)

    a, b = 0.0, base.b
    if annulus:
        p = model.params
        t_lo, t_hi = p.t0 * (1.0 - p.lambda_), p.t0 * (1.0 + p.lambda_)
        a = math.sqrt(max(t_lo * t_lo - rho2, 0.0))
        b = min(b, math.sqrt(max(t_hi * t_hi - rho2, 0.0)))
    if b <= a:
        return 0.0
    return K * math.exp(_log_hyperplane_prefactor(model) + integrate_log(LogIntegrand(logf, a, b)))


def lower_bound_rhs(model: MeasureModel, K: int) -> float:
    """``(sqrt(n) / t0) sqrt(log K)`` with unit constant."""
    if K < 2:
        raise ValueError("K must be at least 2")
    return math.sqrt(model.n) / model.params.t0 * math.sqrt(math.log(K))


def probability_envelope(model: MeasureModel, rho: float) -> float:
    """``(t0 / (sqrt(n) rho)) (1 - rho^2 / (t0^2 (1+lambda)^2))^{(n-3)/2}``."""
    p = model.params
    base = max(1.0 - (rho / (p.t0 * (1.0 + p.lambda_))) ** 2, 0.0)
    return p.t0 / (math.sqrt(model.n) * rho) * base ** (0.5 * (model.n - 3))
