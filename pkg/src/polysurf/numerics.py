"""Scalar numerical kernels.

Log-domain quadrature, bracketed root finding, tabulated inverse-CDF
sampling and a tail-bound checker for log-concave functions. Every
integrand in this package is one-dimensional once rotation invariance
has been used, so everything here works on callables ``logf(t)`` that
accept and return numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "DomainError",
    "DivergenceError",
    "BracketError",
    "DegenerateDensityError",
    "PreconditionError",
    "RangeError",
    "LogIntegrand",
    "integrate_log",
    "find_root",
    "QuantileTable",
    "build_quantile_table",
    "check_logconcave_tail",
    "TRUNCATION_NATS",
]

TRUNCATION_NATS = 60.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_GL8_NODES, _GL8_WEIGHTS = np.polynomial.legendre.leggauss(8)
_GL16_NODES, _GL16_WEIGHTS = np.polynomial.legendre.leggauss(16)
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class DomainError(ValueError):
    """A log-integrand returned NaN or +inf inside its domain."""


class DivergenceError(ArithmeticError):
    """An integral, bracket search or maximum search did not terminate."""


class BracketError(ValueError):
    """The supplied bracket does not contain a sign change."""


class DegenerateDensityError(ValueError):
    """A density has zero total mass."""


class PreconditionError(ValueError):
    """A documented hypothesis of a check does not hold for the inputs."""


class RangeError(ValueError):
    """A parameter lies outside the range where a construction is defined."""


@dataclass(frozen=True)
class LogIntegrand:
    """Natural log of a nonnegative integrand on ``[a, b]``.

    ``logf`` must be vectorized. ``b`` may be ``inf``; ``a`` must be finite.
    Values of ``-inf`` mean the integrand vanishes there.
    """

    logf: Callable[[np.ndarray], np.ndarray]
    a: float = 0.0
    b: float = math.inf

    def __post_init__(self):
        if not math.isfinite(self.a):
            raise ValueError("lower limit must be finite")
        if not self.b >= self.a:
            raise ValueError(f"empty domain [{self.a}, {self.b}]")

    def __call__(self, t):
        vals = np.asarray(self.logf(np.asarray(t, dtype=float)), dtype=float)
        if np.any(np.isnan(vals)) or np.any(vals == np.inf):
            raise DomainError("log-integrand is NaN or +inf inside its domain")
        return vals


def _evaluate_scalar(f: LogIntegrand, x: float) -> float:
    return float(f(np.array([x]))[0])


def _golden_max(f: LogIntegrand, lo: float, hi: float, iters: int = 80):
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = _evaluate_scalar(f, c), _evaluate_scalar(f, d)
    for _ in range(iters):
        if hi - lo <= 1e-13 * max(1.0, abs(lo), abs(hi)):
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = _evaluate_scalar(f, c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = _evaluate_scalar(f, d)
    return (c, fc) if fc >= fd else (d, fd)


def _pilot_grid(f: LogIntegrand) -> np.ndarray:
    a, b = f.a, f.b
    if math.isfinite(b):
        grid = np.linspace(a, b, 129)
        return grid
    scale = max(1.0, abs(a))
    offsets = scale * np.exp2(np.arange(-52, 64, dtype=float))
    return np.concatenate(([a], a + offsets))


def _locate_max(f: LogIntegrand):
    """Return ``(grid, values, x_max, f_max)`` for a unimodal log-integrand."""
    grid = _pilot_grid(f)
    vals = f(grid)
    if not math.isfinite(f.b):
        # extend geometrically until the integrand is well past its peak
        extra = 0
        while True:
            peak = np.max(vals)
            tail_ok = np.isfinite(peak) and vals[-1] < peak - TRUNCATION_NATS - 5.0
            if tail_ok and np.argmax(vals) < len(vals) - 1:
                break
            extra += 1
            if extra > 30 or not np.isfinite(grid[-1] * 2.0):
                raise DivergenceError("integrand does not decay; no finite maximum found")
            more = grid[-1] + (grid[-1] - f.a) * np.exp2(np.arange(1, 33, dtype=float))
            more = more[np.isfinite(more)]
            if more.size == 0:
                raise DivergenceError("integrand does not decay; no finite maximum found")
            grid = np.concatenate((grid, more))
            vals = np.concatenate((vals, f(more)))
    j = int(np.argmax(vals))
    if not np.isfinite(vals[j]):
        raise DivergenceError("log-integrand is -inf on the whole pilot grid")
    lo = grid[max(j - 1, 0)]
    hi = grid[min(j + 1, len(grid) - 1)]
    x_max, f_max = _golden_max(f, lo, hi)
    if vals[j] > f_max:
        x_max, f_max = float(grid[j]), float(vals[j])
    return grid, vals, float(x_max), float(f_max)


def _crossing(f: LogIntegrand, inside: float, outside: float, level: float) -> float:
    """Bisect between a point above ``level`` and one below; return the outer end."""
    for _ in range(60):
        mid = 0.5 * (inside + outside)
        if mid == inside or mid == outside:
            break
        if _evaluate_scalar(f, mid) >= level:
            inside = mid
        else:
            outside = mid
    return outside


def _window(f: LogIntegrand, grid, vals, x_max, f_max):
    level = f_max - TRUNCATION_NATS
    lo, hi = f.a, f.b
    left = np.nonzero((grid < x_max) & (vals < level))[0]
    if left.size:
        k = left[-1]
        inside = grid[k + 1] if grid[k + 1] < x_max else x_max
        lo = _crossing(f, inside, grid[k], level)
    right = np.nonzero((grid > x_max) & (vals < level))[0]
    if right.size:
        k = right[0]
        inside = grid[k - 1] if grid[k - 1] > x_max else x_max
        hi = _crossing(f, inside, grid[k], level)
    elif not math.isfinite(hi):
        raise DivergenceError("could not truncate infinite upper limit")
    return float(lo), float(hi)


def _gl_panels(f: LogIntegrand, shift: float, lo: np.ndarray, hi: np.ndarray):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = np.exp(f(pts.ravel()).reshape(pts.shape) - shift)
    return half * (vals @ _GL_WEIGHTS)


def integrate_log(f: LogIntegrand, rel_tol: float = 1e-10) -> float:
    """Return ``log(integral of exp(f) over [a, b])``.

    The integrand is shifted by its maximum, located by a pilot grid and
    golden-section refinement, so peaks of size ``exp(1e4)`` are harmless.
    An infinite upper limit is truncated where the log-integrand has
    fallen :data:`TRUNCATION_NATS` below the peak. Panels are refined
    adaptively until 20-point Gauss-Legendre agrees with its two halves.

    Raises
    ------
    DomainError
        The integrand evaluates to NaN or ``+inf``.
    DivergenceError
        No finite maximum could be located.
    """
    if not 0.0 < rel_tol <= 1e-3:
        raise ValueError("rel_tol must lie in (0, 1e-3]")
    if f.b == f.a:
        return -math.inf
    grid, vals, x_max, f_max = _locate_max(f)
    lo, hi = _window(f, grid, vals, x_max, f_max)
    if hi <= lo:
        return -math.inf

    edges = []
    for seg_lo, seg_hi in ((lo, x_max), (x_max, hi)):
        if seg_hi > seg_lo:
            edges.append(np.linspace(seg_lo, seg_hi, 9))
    edges = np.unique(np.concatenate(edges))
    p_lo, p_hi = edges[:-1], edges[1:]
    coarse = _gl_panels(f, f_max, p_lo, p_hi)
    total_est = float(np.sum(coarse))
    if total_est <= 0.0:
        raise DivergenceError("quadrature lost the peak of the integrand")
    span = hi - lo
    tol_abs = 0.25 * rel_tol * total_est

    accepted = 0.0
    for _ in range(64):
        mids = 0.5 * (p_lo + p_hi)
        left = _gl_panels(f, f_max, p_lo, mids)
        right = _gl_panels(f, f_max, mids, p_hi)
        fine = left + right
        width = p_hi - p_lo
        err = np.abs(fine - coarse)
        ok = (err <= tol_abs * np.maximum(width / span, 1e-3)) | (width <= 1e-14 * span)
        accepted += float(np.sum(fine[ok]))
        bad = ~ok
        if not np.any(bad):
            break
        p_lo = np.concatenate((p_lo[bad], mids[bad]))
        p_hi = np.concatenate((mids[bad], p_hi[bad]))
        coarse = np.concatenate((left[bad], right[bad]))
    else:
        raise DivergenceError("adaptive quadrature did not converge")
    if accepted <= 0.0:
        return -math.inf
    return f_max + math.log(accepted)


def find_root(g: Callable[[float], float], a: float, b: float, tol: float = 1e-12) -> float:
    """Root of a monotone ``g`` on ``[a, b]``; the left-most one in flat regions.

    Illinois-modified regula falsi, falling back to bisection whenever the
    bracket fails to halve, so convergence is never worse than bisection.
    Stops when the bracket width is at most ``tol * max(1, |x|)``.
    """
    if not a <= b:
        a, b = b, a
    ga, gb = float(g(a)), float(g(b))
    if math.isnan(ga) or math.isnan(gb):
        raise BracketError("g is NaN at a bracket end")
    if ga == 0.0:
        return a
    if ga * gb > 0.0:
        raise BracketError(f"no sign change on [{a}, {b}]: g(a)={ga}, g(b)={gb}")
    sign_a = math.copysign(1.0, ga)
    fa, fb = ga, gb  # Illinois-weighted copies for the secant step
    last_side = 0
    use_bisect = False
    for _ in range(2000):
        width = b - a
        x_mid = 0.5 * (a + b)
        if width <= tol * max(1.0, abs(x_mid)):
            break
        x = x_mid
        if not use_bisect and math.isfinite(fa) and math.isfinite(fb) and fb != fa:
            cand = b - fb * (b - a) / (fb - fa)
            if a < cand < b:
                x = cand
        gx = float(g(x))
        if math.isnan(gx):
            raise BracketError(f"g is NaN at {x}")
        if gx != 0.0 and math.copysign(1.0, gx) == sign_a:
            a, fa = x, gx
            if last_side == -1:
                fb *= 0.5
            last_side = -1
        else:
            # zeros go right so the bracket closes on the left-most root
            b, fb = x, gx
            if last_side == 1:
                fa *= 0.5
            last_side = 1
        use_bisect = (b - a) > 0.5 * width
    else:
        raise DivergenceError("find_root exceeded its iteration cap")
    return 0.5 * (a + b)


@dataclass(frozen=True, eq=False)
class QuantileTable:
    """Tabulated CDF of a one-dimensional density with exact local refinement.

    ``nodes`` are spaced (approximately) equally in CDF value. Between nodes
    the CDF is completed with a 16-point Gauss-Legendre integral of the true
    density, and quantiles are polished by safeguarded Newton steps, so
    both directions are accurate to roughly ``1e-12``.
    """

    density_log: LogIntegrand
    nodes: np.ndarray
    cdf_values: np.ndarray
    log_total: float

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.cdf_values.setflags(write=False)

    def density(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(self.density_log(t) - self.log_total)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.nodes[0], self.nodes[-1])
        j = np.clip(np.searchsorted(self.nodes, xc, side="right") - 1, 0, len(self.nodes) - 2)
        left = self.nodes[j]
        half = 0.5 * (xc - left)
        pts = left[..., None] + half[..., None] * (_GL16_NODES + 1.0)
        local = half * (self.density(pts) @ _GL16_WEIGHTS)
        out = np.clip(self.cdf_values[j] + local, 0.0, 1.0)
        return out

    def quantile(self, u, newton_steps: int = 1):
        """Inverse CDF: monotone cubic Hermite guess, then Newton polish."""
        u = np.asarray(u, dtype=float)
        if np.any((u < 0.0) | (u > 1.0)):
            raise ValueError("quantile levels must lie in [0, 1]")
        j = np.clip(np.searchsorted(self.cdf_values, u, side="right") - 1, 0, len(self.nodes) - 2)
        x_lo, x_hi = self.nodes[j], self.nodes[j + 1]
        c_lo, c_hi = self.cdf_values[j], self.cdf_values[j + 1]
        dc = c_hi - c_lo
        flat = dc <= 0.0
        dc = np.where(flat, 1.0, dc)
        w = np.clip((u - c_lo) / dc, 0.0, 1.0)
        secant = x_hi - x_lo
        m0, m1 = self._slopes[j] * dc, self._slopes[j + 1] * dc
        # Fritsch-Carlson: end slopes in [0, 3 * secant] keep the cubic monotone
        m0 = np.clip(np.where(np.isfinite(m0), m0, secant), 0.0, 3.0 * secant)
        m1 = np.clip(np.where(np.isfinite(m1), m1, secant), 0.0, 3.0 * secant)
        w2, w3 = w * w, w * w * w
        x = (x_lo * (2 * w3 - 3 * w2 + 1) + m0 * (w3 - 2 * w2 + w)
             + x_hi * (-2 * w3 + 3 * w2) + m1 * (w3 - w2))
        x = np.where(flat, x_lo, np.clip(x, x_lo, x_hi))
        for _ in range(newton_steps):
            resid = self.cdf(x) - u
            dens = self.density(x)
            pos = dens > 0.0
            step = np.where(pos, resid / np.where(pos, dens, 1.0), 0.0)
            x = np.clip(x - step, x_lo, x_hi)
        return x

    @property
    def _slopes(self):
        # dQ/du = 1 / density at the nodes; cached on first use
        try:
            return self.__dict__["_slope_cache"]
        except KeyError:
            dens = self.density(self.nodes)
            with np.errstate(divide="ignore"):
                slopes = np.where(dens > 0.0, 1.0 / dens, np.inf)
            self.__dict__["_slope_cache"] = slopes
            return slopes


def build_quantile_table(density_log: LogIntegrand, node_count: int = 4096) -> QuantileTable:
    """Build a :class:`QuantileTable` for the density ``exp(density_log)``.

    A pilot grid equispaced in ``t`` over the 60-nat window is integrated
    panel by panel; nodes are then placed at equal CDF increments.
    """
    if node_count < 64:
        raise ValueError("node_count must be at least 64")
    try:
        log_total = integrate_log(density_log)
    except DivergenceError as exc:
        if "-inf on the whole" in str(exc):
            raise DegenerateDensityError("density has zero total mass") from exc
        raise
    if not math.isfinite(log_total):
        raise DegenerateDensityError("density has zero total mass")

    grid, vals, x_max, f_max = _locate_max(density_log)
    lo, hi = _window(density_log, grid, vals, x_max, f_max)
    pilot = np.unique(np.concatenate((np.linspace(lo, hi, 8 * node_count + 1), [x_max])))
    half = 0.5 * np.diff(pilot)
    pts = pilot[:-1, None] + half[:, None] * (_GL8_NODES + 1.0)
    mass = half * (np.exp(density_log(pts) - log_total) @ _GL8_WEIGHTS)
    cum = np.concatenate(([0.0], np.cumsum(mass)))
    if abs(cum[-1] - 1.0) > 1e-7:
        raise DivergenceError(f"pilot CDF total {cum[-1]!r} disagrees with quadrature")
    cum /= cum[-1]

    levels = np.linspace(0.0, 1.0, node_count)
    nodes = np.interp(levels, cum, pilot)
    nodes[0], nodes[-1] = lo, hi
    nodes = np.maximum.accumulate(nodes)
    # exact CDF at each node: pilot cumulative + local Gauss-Legendre piece
    k = np.clip(np.searchsorted(pilot, nodes, side="right") - 1, 0, len(pilot) - 2)
    h = 0.5 * (nodes - pilot[k])
    pts = pilot[k][:, None] + h[:, None] * (_GL16_NODES + 1.0)
    local = h * (np.exp(density_log(pts) - log_total) @ _GL16_WEIGHTS)
    cdf_values = np.clip(cum[k] + local, 0.0, 1.0)
    cdf_values[0], cdf_values[-1] = 0.0, 1.0
    cdf_values = np.maximum.accumulate(cdf_values)
    return QuantileTable(density_log, nodes, cdf_values, log_total)


def check_logconcave_tail(g_log: LogIntegrand, t0: float, x: float, psi: float, side: str = "outer"):
    """Check the tail bound for a log-concave ``g = exp(g_log)`` peaked at ``t0``.

    With ``f(t0) - f((1 +/- x) t0) >= psi`` the mass beyond ``(1 + x) t0``
    (or below ``(1 - x) t0``) is at most ``x t0 g(t0) / (psi e^psi)``.

    Returns
    -------
    (holds, lhs, rhs)

    Raises
    ------
    PreconditionError
        If the hypothesis on ``psi`` fails at the given point.
    """
    if t0 <= 0 or x <= 0 or psi <= 0:
        raise PreconditionError("t0, x and psi must be positive")
    if side not in ("outer", "inner"):
        raise ValueError("side must be 'outer' or 'inner'")
    cut = (1.0 + x) * t0 if side == "outer" else (1.0 - x) * t0
    f_t0 = _evaluate_scalar(g_log, t0)
    f_cut = _evaluate_scalar(g_log, cut) if cut >= g_log.a else -math.inf
    if not f_t0 - f_cut >= psi - 1e-12 * max(1.0, abs(psi)):
        raise PreconditionError(
            f"hypothesis f(t0) - f(cut) >= psi fails: {f_t0 - f_cut!r} < {psi!r}"
        )
    if side == "outer":
        if cut >= g_log.b:
            lhs = 0.0
        else:
            lhs = math.exp(integrate_log(LogIntegrand(g_log.logf, cut, g_log.b)))
    else:
        if cut <= g_log.a:
            lhs = 0.0
        else:
            lhs = math.exp(integrate_log(LogIntegrand(g_log.logf, g_log.a, cut)))
    rhs = x * t0 * math.exp(f_t0) / (psi * math.exp(psi))
    return lhs <= rhs * (1.0 + 1e-6), lhs, rhs
