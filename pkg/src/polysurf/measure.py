"""Rotation-invariant log-concave probability measures on R^n.

A measure is given by its dimension ``n`` and a radial potential ``phi``:
the density is ``C_n exp(-phi(|y|))`` with ``C_n = 1 / (n nu_n J_{n-1})``
and ``J_k`` the radial moments ``int_0^inf t^k exp(-phi(t)) dt``.
"""

from __future__ import annotations

import functools
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from .numerics import (
    DivergenceError,
    LogIntegrand,
    QuantileTable,
    build_quantile_table,
    find_root,
    integrate_log,
)

logger = logging.getLogger(__name__)

FAMILIES = ("gaussian", "power", "ball", "custom")


@dataclass(frozen=True)
class RadialPotential:
    """Convex nondecreasing ``phi`` with ``phi(0) = 0``.

    Use :func:`gaussian`, :func:`power`, :func:`ball` or :func:`custom`
    rather than the constructor. ``phi = t**p / p`` for the power family,
    so ``p = 2`` is the standard Gaussian.
    """

    family: str
    p: Optional[float] = None
    support_bound: Optional[float] = None
    value_fn: Optional[Callable] = field(default=None, compare=True, repr=False)
    derivative_fn: Optional[Callable] = field(default=None, compare=True, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family in ("power", "gaussian"):
            if self.p is None or not self.p >= 1.0:
                raise ValueError("power family requires p >= 1 (log-concavity)")
        if self.family == "custom" and (self.value_fn is None or self.derivative_fn is None):
            raise ValueError("custom potential needs value_fn and derivative_fn")
        if self.support_bound is not None and not self.support_bound > 0:
            raise ValueError("support_bound must be positive")

    @property
    def tag(self) -> str:
        if self.family == "power":
            return f"power:{self.p:g}"
        return self.family

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.family in ("gaussian", "power"):
            p = self.p
            out = t * t / 2.0 if p == 2.0 else np.power(t, p) / p
        elif self.family == "ball":
            out = np.zeros_like(t)
        else:
            out = np.asarray(self.value_fn(t), dtype=float)
        if self.support_bound is not None:
            out = np.where(t <= self.support_bound, out, np.inf)
        return out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.family in ("gaussian", "power"):
            return t if self.p == 2.0 else np.power(t, self.p - 1.0)
        if self.family == "ball":
            return np.zeros_like(t)
        return np.asarray(self.derivative_fn(t), dtype=float)


def gaussian() -> RadialPotential:
    return RadialPotential("gaussian", p=2.0)


def power(p: float) -> RadialPotential:
    p = float(p)
    if p == 2.0:
        return gaussian()
    return RadialPotential("power", p=p)


def ball() -> RadialPotential:
    """Uniform measure on the unit ball."""
    return RadialPotential("ball", support_bound=1.0)


def custom(value_fn, derivative_fn, support_bound=None) -> RadialPotential:
    return RadialPotential("custom", support_bound=support_bound,
                           value_fn=value_fn, derivative_fn=derivative_fn)


def parse_family(spec: str) -> RadialPotential:
    """Parse ``gaussian``, ``ball`` or ``power:<p>``."""
    spec = spec.strip().lower()
    if spec == "gaussian":
        return gaussian()
    if spec == "ball":
        return ball()
    if spec.startswith("power:"):
        try:
            p = float(spec.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad power exponent in {spec!r}") from None
        return power(p)
    raise ValueError(f"unknown family {spec!r}; expected gaussian, ball or power:<p>")


def check_potential(potential: RadialPotential, t_max: float = 10.0, points: int = 201) -> bool:
    """Spot-check ``phi(0) = 0``, monotonicity, convexity and ``phi'`` on a grid."""
    top = t_max if potential.support_bound is None else min(t_max, potential.support_bound)
    t = np.linspace(0.0, top, points)
    v = potential.value(t)
    if v[0] != 0.0 or np.any(np.diff(v) < -1e-12):
        return False
    slopes = np.diff(v) / np.diff(t)
    if np.any(np.diff(slopes) < -1e-9 * np.maximum(1.0, np.abs(slopes[1:]))):
        return False
    inner = t[1:-1]
    h = 1e-6 * np.maximum(1.0, inner)
    cd = (potential.value(inner + h) - potential.value(inner - h)) / (2 * h)
    d = potential.derivative(inner)
    ok = np.isfinite(cd)
    return bool(np.all(np.abs(cd[ok] - d[ok]) <= 1e-6 * np.maximum(1.0, np.abs(d[ok]))))


@dataclass(frozen=True)
class MeasureParams:
    """Scalar parameters of a measure (all derived, never set by hand)."""

    t0: float
    lambda_i: float
    lambda_o: float
    lambda_: float
    E: float
    var_norm: float
    V: float
    log_J: dict
    log_C_n: float


@dataclass(frozen=True)
class MeasureModel:
    """Probability measure with density ``C_n exp(-phi(|y|))`` on R^n."""

    n: int
    potential: RadialPotential

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("dimension n must be an integer >= 2")

    @property
    def family(self) -> str:
        return self.potential.tag

    @functools.cached_property
    def params(self) -> MeasureParams:
        return measure_params(self)


def log_g(model: MeasureModel, k: int, t):
    """``k log t - phi(t)``, the log of ``g_k(t) = t^k exp(-phi(t))``."""
    t = np.asarray(t, dtype=float)
    phi = model.potential.value(t)
    if k == 0:
        return -phi
    with np.errstate(divide="ignore"):
        return k * np.log(t) - phi


def _radial_integrand(model: MeasureModel, k: int, a: float = 0.0, b: float = math.inf) -> LogIntegrand:
    sb = model.potential.support_bound
    if sb is not None:
        b = min(b, sb)
    return LogIntegrand(lambda t: log_g(model, k, t), a, max(a, b))


@functools.lru_cache(maxsize=4096)
def log_moment(model: MeasureModel, k: int) -> float:
    """``log J_k``; raises :class:`DivergenceError` when ``J_k`` is infinite."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return integrate_log(_radial_integrand(model, k))


def log_unit_ball_volume(n: int) -> float:
    return 0.5 * n * math.log(math.pi) - float(gammaln(0.5 * n + 1.0))


def log_norm_const(model: MeasureModel) -> float:
    """``log C_n = -log(n nu_n J_{n-1})``."""
    n = model.n
    return -(math.log(n) + log_unit_ball_volume(n) + log_moment(model, n - 1))


def solve_t0(model: MeasureModel) -> float:
    """Maximizer of ``g_{n-1}``.

    Infinite support: root of ``t phi'(t) = n - 1``. Finite support: the
    argmax over ``[0, support_bound]``, which may sit on the boundary.
    """
    n = model.n
    pot = model.potential
    sb = pot.support_bound
    if sb is None:
        h = lambda t: float(t * pot.derivative(t)) - (n - 1)
        lo, hi = 1.0, 1.0
        doublings = 0
        while h(hi) < 0:
            lo, hi = hi, 2.0 * hi
            doublings += 1
            if doublings > 1000:
                raise DivergenceError("t phi'(t) never reaches n - 1")
        while h(lo) > 0:
            lo *= 0.5
            doublings += 1
            if doublings > 1000 or lo == 0.0:
                raise DivergenceError("no positive root of t phi'(t) = n - 1")
        return find_root(h, lo, hi)
    f = lambda t: float(log_g(model, n - 1, t))
    # g_{n-1} is log-concave on (0, sb]; golden section, then compare to the boundary
    a, b = 0.0, sb
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    for _ in range(200):
        if b - a <= 1e-14 * sb:
            break
        if f(c) >= f(d):
            b, d = d, c
            c = b - invphi * (b - a)
        else:
            a, c = c, d
            d = a + invphi * (b - a)
    x = 0.5 * (a + b)
    return sb if f(sb) >= f(x) else x


def _excess(model: MeasureModel, t0: float, x, sign: int):
    """``phi(t0(1 + sign x)) - phi(t0) - (n - 1) log(1 + sign x)``."""
    pot = model.potential
    n = model.n
    with np.errstate(divide="ignore"):
        return (float(pot.value(t0 * (1.0 + sign * x))) - float(pot.value(t0))
                - (n - 1) * math.log1p(sign * x))


def _outer_root(model: MeasureModel, t0: float, level: float) -> float:
    sb = model.potential.support_bound
    if sb is not None and t0 >= sb:
        return 0.0
    h = lambda x: _excess(model, t0, x, +1) - level
    hi = 1.0
    for _ in range(1000):
        if h(hi) >= 0:
            break
        hi *= 2.0
    else:
        raise DivergenceError("outer lambda not bracketed")
    return find_root(h, 0.0, hi)


def _inner_root(model: MeasureModel, t0: float, level: float) -> float:
    h = lambda x: _excess(model, t0, x, -1) - level
    hi = 0.5
    for _ in range(1000):
        if h(hi) >= 0:
            break
        hi = 0.5 * (1.0 + hi)
        if hi >= 1.0:
            break
    else:
        raise DivergenceError("inner lambda not bracketed")
    if hi >= 1.0 or h(hi) < 0:
        raise DivergenceError("inner lambda not bracketed")
    return find_root(h, 0.0, hi)


def solve_lambda(model: MeasureModel, t0: Optional[float] = None):
    """Return ``(lambda_i, lambda_o, lambda)``.

    ``lambda_o`` solves ``g(t0(1 + x)) = g(t0)/e``, ``lambda_i`` the same
    with ``1 - x``. When ``g`` vanishes just beyond ``t0`` (finite support
    touching ``t0``), ``lambda_o`` is the infimum of the sublevel set, 0.
    """
    if t0 is None:
        t0 = solve_t0(model)
    lam_o = _outer_root(model, t0, 1.0)
    lam_i = _inner_root(model, t0, 1.0)
    return lam_i, lam_o, lam_i + lam_o


def norm_moments(model: MeasureModel):
    """Return ``(E|X|, Var|X|, V)`` from ratios of radial moments."""
    n = model.n
    lj = log_moment(model, n - 1)
    E = math.exp(log_moment(model, n) - lj)
    second = math.exp(log_moment(model, n + 1) - lj)
    var = second - E * E
    if var < 0.0:
        warnings.warn(f"Var|X| = {var!r} < 0 from rounding; clamped to 0", RuntimeWarning)
        var = 0.0
    return E, var, math.sqrt(var) / E


def measure_params(model: MeasureModel) -> MeasureParams:
    n = model.n
    t0 = solve_t0(model)
    lam_i, lam_o, lam = solve_lambda(model, t0)
    E, var, V = norm_moments(model)
    log_J = {k: log_moment(model, k) for k in (n - 2, n - 1, n, n + 1) if k >= 0}
    return MeasureParams(t0=t0, lambda_i=lam_i, lambda_o=lam_o, lambda_=lam, E=E,
                         var_norm=var, V=V, log_J=log_J, log_C_n=log_norm_const(model))


PARAMS_HEADER = ("family", "n", "t0", "lambda_i", "lambda_o", "lambda", "E", "V",
                 "log_J_nm1", "log_C_n")


def params_row(model: MeasureModel) -> list:
    p = model.params
    return [model.family, model.n, p.t0, p.lambda_i, p.lambda_o, p.lambda_, p.E, p.V,
            p.log_J[model.n - 1], p.log_C_n]


def log_density(model: MeasureModel, X):
    """Log density at the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    r = np.linalg.norm(X, axis=1)
    return log_norm_const(model) - model.potential.value(r)


def radial_cdf(model: MeasureModel, r: float) -> float:
    """``P(|X| <= r)``."""
    if r <= 0:
        return 0.0
    if math.isinf(r):
        return 1.0
    n = model.n
    val = math.exp(integrate_log(_radial_integrand(model, n - 1, 0.0, r)) - log_moment(model, n - 1))
    return min(1.0, val)


def radial_interval_mass(model: MeasureModel, a: float, b: float) -> float:
    """``P(a < |X| <= b)``."""
    return max(0.0, radial_cdf(model, b) - radial_cdf(model, a))


@functools.lru_cache(maxsize=256)
def radial_table(model: MeasureModel, node_count: int = 4096) -> QuantileTable:
    """Quantile table of ``|X|``, whose density is ``g_{n-1} / J_{n-1}``."""
    return build_quantile_table(_radial_integrand(model, model.n - 1), node_count)


def sample_points(model: MeasureModel, rng: np.random.Generator, size: int,
                  table: Optional[QuantileTable] = None) -> np.ndarray:
    """Draw ``size`` points from the measure: uniform direction times radial quantile."""
    if table is None:
        table = radial_table(model)
    z = rng.standard_normal((size, model.n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = table.quantile(rng.random(size))
    return z * r[:, None]


def sample_point(model: MeasureModel, table: QuantileTable, rng: np.random.Generator) -> np.ndarray:
    return sample_points(model, rng, 1, table)[0]


def solve_mu(model: MeasureModel, psi: float):
    """Smallest ``mu > 0`` with excess ``phi(t0(1+mu)) - phi(t0) - (n-1)log(1+mu) >= psi``.

    Returns ``(mu, reached)``. On a finite support the excess may jump
    straight to infinity at the boundary; then ``mu`` is the boundary and
    ``reached`` is False.
    """
    if psi < 1:
        raise ValueError("psi must be at least 1")
    t0 = model.params.t0
    mu = _outer_root(model, t0, psi)
    sb = model.potential.support_bound
    if sb is not None:
        edge = sb / t0 - 1.0
        if mu >= edge - 1e-9 * max(1.0, edge) and _excess(model, t0, edge, +1) < psi:
            return max(edge, 0.0), False
    return mu, True
