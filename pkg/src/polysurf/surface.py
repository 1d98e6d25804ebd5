"""Surface area of polytopes with respect to a rotation-invariant measure.

Three independent routes are provided and are meant to be checked
against each other:

* ``facet_mc`` / ``surface_mc``: for each facet, the exact measure of its
  hyperplane times a Monte Carlo acceptance probability for the other
  constraints;
* ``shell_oracle_mc``: the Minkowski quotient ``gamma((P + eps B) \\ P) / eps``
  estimated from samples of the measure, Richardson-extrapolated in eps;
* ``polygon_exact_2d``: exact one-dimensional integrals along the edges of
  a planar polygon.

Monte Carlo loops draw from fixed-size chunks whose generators are seeded
from ``(seed, purpose, key..., chunk index)``, so results depend only on
the seed and never on ``n_jobs``.
"""

from __future__ import annotations

import functools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .measure import (
    MeasureModel,
    log_g,
    log_moment,
    log_norm_const,
    log_unit_ball_volume,
    radial_table,
    sample_points,
)
from .numerics import LogIntegrand, QuantileTable, build_quantile_table, integrate_log
from .polytope import Polytope, distance, max_violation

CHUNK_SIZE = 8192
METHODS = ("facet_mc", "shell_mc", "exact_1d", "exact_2d")
SURFACE_HEADER = ("method", "family", "n", "K", "value", "stderr", "samples", "seed")

_TAG_FACET, _TAG_SHELL, _TAG_VOLUME = 1, 2, 3
_BLOCK = 256


class ReliabilityWarning(UserWarning):
    """Too many Dykstra distance computations hit the iteration cap."""


@dataclass(frozen=True)
class SurfaceEstimate:
    """An estimate of a surface area (or, for ``volume_mc``, a volume).

    ``stderr`` is zero for the exact methods. The extrapolated shell
    estimator is unbiased to second order but not sign-constrained, so a
    ``shell_mc`` value can be slightly negative when the true value is ~0.
    """

    value: float
    stderr: float
    samples: int
    method: str

    def __post_init__(self):
        if self.method not in METHODS + ("volume_mc",):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method.startswith("exact") and self.stderr != 0.0:
            raise ValueError("exact estimates carry no standard error")


@dataclass(frozen=True)
class BoundaryDiagnostics:
    alpha: float
    psi: float
    r: float


def _chunks(seed: int, total: int, *key: int):
    """Yield ``(generator, count)`` for the fixed chunking of ``total`` draws."""
    n_chunks = -(-total // CHUNK_SIZE)
    for c in range(n_chunks):
        count = min(CHUNK_SIZE, total - c * CHUNK_SIZE)
        ss = np.random.SeedSequence([int(seed), *(int(k) for k in key), c])
        yield np.random.default_rng(ss), count


def _map_chunks(fn, chunks, n_jobs: int):
    chunks = list(chunks)
    if n_jobs is None or n_jobs <= 1 or len(chunks) <= 1:
        return [fn(*c) for c in chunks]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(lambda c: fn(*c), chunks))


def _facet_log_integrand(model: MeasureModel, rho: float) -> LogIntegrand:
    """``s^{n-2} exp(-phi(sqrt(s^2 + rho^2)))`` on ``s >= 0``."""
    n = model.n
    rho2 = rho * rho
    pot = model.potential
    b = math.inf
    if pot.support_bound is not None:
        b = math.sqrt(max(pot.support_bound ** 2 - rho2, 0.0))

    def logf(s):
        t = np.sqrt(s * s + rho2)
        if n == 2:
            return -pot.value(t)
        with np.errstate(divide="ignore"):
            return (n - 2) * np.log(s) - pot.value(t)

    return LogIntegrand(logf, 0.0, b)


def _log_hyperplane_prefactor(model: MeasureModel) -> float:
    """``log[(n-1) nu_{n-1} / (n nu_n J_{n-1})]``."""
    n = model.n
    return (math.log(n - 1) + log_unit_ball_volume(n - 1)
            - math.log(n) - log_unit_ball_volume(n) - log_moment(model, n - 1))


@functools.lru_cache(maxsize=4096)
def _hyperplane_value(model: MeasureModel, rho: float) -> float:
    f = _facet_log_integrand(model, rho)
    if f.b <= 0.0:
        return 0.0
    return math.exp(_log_hyperplane_prefactor(model) + integrate_log(f))


def hyperplane_measure(model: MeasureModel, rho: float) -> SurfaceEstimate:
    """Exact measure of a hyperplane at distance ``rho`` from the origin.

    Integrated over the hyperplane in polar coordinates about the foot of
    the perpendicular, i.e. as ``int_0^inf s^{n-2} e^{-phi(sqrt(s^2+rho^2))} ds``.
    This form has no endpoint singularity for any ``n >= 2``.
    """
    rho = abs(float(rho))
    return SurfaceEstimate(_hyperplane_value(model, rho), 0.0, 0, "exact_1d")


@functools.lru_cache(maxsize=1024)
def facet_table(model: MeasureModel, rho: float) -> QuantileTable:
    """Radial sampler on a hyperplane at distance ``rho``."""
    return build_quantile_table(_facet_log_integrand(model, abs(rho)), 4096)


def _duplicate_info(P: Polytope, i: int):
    same = np.all(P.normals == P.normals[i], axis=1) & (P.offsets == P.offsets[i])
    same[i] = False
    earlier = bool(np.any(same[:i]))
    return earlier, same


def facet_measure_mc(model: MeasureModel, P: Polytope, i: int, N: int = 100_000,
                     seed: int = 0, n_jobs: int = 1) -> SurfaceEstimate:
    """Measure of facet ``i``: hyperplane measure times acceptance probability.

    Points are drawn from the measure restricted to the facet's hyperplane
    and accepted when they satisfy the other ``K - 1`` constraints.
    """
    if N < 1000:
        raise ValueError("facet_measure_mc needs N >= 1000")
    if P.dim != model.n:
        raise ValueError("polytope and measure dimensions differ")
    u = P.normals[i]
    rho = float(P.offsets[i])
    H = _hyperplane_value(model, abs(rho))
    earlier_dup, same = _duplicate_info(P, i)
    if H == 0.0 or earlier_dup:
        return SurfaceEstimate(0.0, 0.0, N, "facet_mc")
    keep = np.ones(P.K, dtype=bool)
    keep[i] = False
    keep &= ~same
    U, R = P.normals[keep], P.offsets[keep]
    table = facet_table(model, abs(rho))
    n = model.n

    def run(rng, count):
        z = rng.standard_normal((count, n))
        z -= np.outer(z @ u, u)
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        s = table.quantile(rng.random(count))
        y = rho * u + s[:, None] * z
        # constraints in blocks, dropping points as soon as one rejects them
        for j in range(0, U.shape[0], _BLOCK):
            if y.shape[0] == 0:
                break
            y = y[np.all(y @ U[j:j + _BLOCK].T <= R[j:j + _BLOCK], axis=1)]
        return int(y.shape[0])

    accepted = sum(_map_chunks(run, _chunks(seed, N, _TAG_FACET, i), n_jobs))
    p = accepted / N
    return SurfaceEstimate(H * p, H * math.sqrt(p * (1.0 - p) / N), N, "facet_mc")


def surface_mc(model: MeasureModel, P: Polytope, N_per_facet: int = 100_000,
               seed: int = 0, n_jobs: int = 1) -> SurfaceEstimate:
    """Sum of :func:`facet_measure_mc` over all facets, errors in quadrature."""
    ests = [facet_measure_mc(model, P, i, N_per_facet, seed, n_jobs) for i in range(P.K)]
    value = math.fsum(e.value for e in ests)
    stderr = math.sqrt(math.fsum(e.stderr ** 2 for e in ests))
    return SurfaceEstimate(value, stderr, N_per_facet * P.K, "facet_mc")


def default_epsilon(model: MeasureModel) -> float:
    return 0.01 * model.params.t0 / math.sqrt(model.n)


def shell_oracle_mc(model: MeasureModel, P: Polytope, eps: float = None, N: int = 100_000,
                    seed: int = 0, n_jobs: int = 1, tol: float = 1e-10) -> SurfaceEstimate:
    """Minkowski-quotient estimate of the surface area.

    With ``eps2 = eps`` and ``eps1 = 2 eps``, counts sample points at
    distance ``(0, eps_k]`` from ``P`` and returns the extrapolation
    ``2 q(eps2) - q(eps1)`` of the quotients ``q(eps) = mass / eps``.
    Distances are exact (Dykstra); the violation of the worst constraint is
    only used to discard points that cannot lie in the shell.
    """
    if N < 10_000:
        raise ValueError("shell_oracle_mc needs N >= 10_000")
    if P.dim != model.n:
        raise ValueError("polytope and measure dimensions differ")
    eps2 = default_epsilon(model) if eps is None else float(eps)
    eps1 = 2.0 * eps2
    cap = model.params.t0 / (4.0 * math.sqrt(model.n))
    if not 0.0 < eps1 <= cap * (1 + 1e-12):
        raise ValueError(f"eps pair must lie in (0, {cap:.4g}]")
    table = radial_table(model)

    def run(rng, count):
        X = sample_points(model, rng, count, table)
        viol = max_violation(P, X)
        cand = (viol > 0.0) & (viol <= eps1)
        if not np.any(cand):
            return 0, 0, 0, 0
        d, ok = distance(P, X[cand], tol=tol)
        return (int(np.count_nonzero(d <= eps1)), int(np.count_nonzero(d <= eps2)),
                int(np.count_nonzero(~ok)), int(d.size))

    parts = _map_chunks(run, _chunks(seed, N, _TAG_SHELL), n_jobs)
    c1 = sum(p[0] for p in parts)
    c2 = sum(p[1] for p in parts)
    bad = sum(p[2] for p in parts)
    n_cand = sum(p[3] for p in parts)
    if n_cand and bad > 1e-3 * n_cand:
        warnings.warn(f"{bad} of {n_cand} shell distances did not converge", ReliabilityWarning)
    mean = (4.0 * c2 - c1) / (2.0 * eps2 * N)
    second = (9.0 * c2 + (c1 - c2)) / (4.0 * eps2 * eps2 * N)
    var = max(second - mean * mean, 0.0)
    return SurfaceEstimate(mean, math.sqrt(var / N), N, "shell_mc")


def _line_mass(model: MeasureModel, rho: float, a: float, b: float) -> float:
    """``int_a^b exp(-phi(sqrt(s^2 + rho^2))) ds`` for ``a <= b``."""
    if b <= a:
        return 0.0
    if a < 0.0 < b:
        return _line_mass(model, rho, 0.0, -a) + _line_mass(model, rho, 0.0, b)
    if b <= 0.0:
        a, b = -b, -a
    f = _facet_log_integrand(model, rho)
    hi = min(b, f.b)
    if hi <= a:
        return 0.0
    return math.exp(integrate_log(LogIntegrand(f.logf, a, hi)))


def facet_intervals_2d(P: Polytope):
    """Active parameter interval ``[s_min, s_max]`` of each edge of a planar polytope.

    Edge ``i`` is parametrized as ``rho_i u_i + s v_i`` with ``v_i`` the
    normal rotated by +90 degrees. Empty edges get ``s_min > s_max``.
    """
    if P.dim != 2:
        raise ValueError("facet_intervals_2d requires n = 2")
    out = []
    for i in range(P.K):
        u, rho = P.normals[i], P.offsets[i]
        v = np.array([-u[1], u[0]])
        lo, hi = -math.inf, math.inf
        for j in range(P.K):
            if j == i:
                continue
            a = float(v @ P.normals[j])
            c = float(P.offsets[j] - rho * (u @ P.normals[j]))
            if abs(a) <= 1e-14:
                identical = np.array_equal(P.normals[j], u) and P.offsets[j] == rho
                if (identical and j < i) or (not identical and c < 0.0):
                    lo, hi = 1.0, -1.0
                    break
                continue
            if a > 0:
                hi = min(hi, c / a)
            else:
                lo = max(lo, c / a)
        out.append((lo, hi))
    return out


def polygon_exact_2d(model: MeasureModel, P: Polytope) -> SurfaceEstimate:
    """Exact surface measure of a planar polytope (``n = 2``)."""
    if model.n != 2 or P.dim != 2:
        raise ValueError("polygon_exact_2d requires n = 2")
    C2 = math.exp(log_norm_const(model))
    total = math.fsum(_line_mass(model, abs(float(P.offsets[i])), lo, hi)
                      for i, (lo, hi) in enumerate(facet_intervals_2d(P)))
    return SurfaceEstimate(C2 * total, 0.0, 0, "exact_2d")


def volume_mc(model: MeasureModel, P: Polytope, N: int = 100_000, seed: int = 0,
              n_jobs: int = 1) -> SurfaceEstimate:
    """Monte Carlo estimate of the measure of ``P`` itself."""
    table = radial_table(model)

    def run(rng, count):
        X = sample_points(model, rng, count, table)
        return int(np.count_nonzero(max_violation(P, X) <= 0.0))

    inside = sum(_map_chunks(run, _chunks(seed, N, _TAG_VOLUME), n_jobs))
    p = inside / N
    return SurfaceEstimate(p, math.sqrt(p * (1.0 - p) / N), N, "volume_mc")


def pointwise_diagnostics(model: MeasureModel, P: Polytope, y, facet: int) -> BoundaryDiagnostics:
    """``alpha = cos(y, n_y)``, ``psi = log g(t0) - log g(|y|)`` and ``r`` at ``y``."""
    y = np.asarray(y, dtype=float)
    u, rho = P.normals[facet], float(P.offsets[facet])
    if abs(float(y @ u) - rho) > 1e-8:
        raise ValueError(f"point is not on the hyperplane of facet {facet}")
    t0 = model.params.t0
    norm = float(np.linalg.norm(y))
    n = model.n
    psi = float(log_g(model, n - 1, t0) - log_g(model, n - 1, norm))
    alpha = rho / norm if norm > 0 else 1.0
    return BoundaryDiagnostics(alpha=alpha, psi=psi, r=math.sqrt(n) / t0 * rho)


def pointwise_bound(model: MeasureModel, diag: BoundaryDiagnostics) -> float:
    """Minimum of the two per-point surface bounds, with unit constants."""
    p = model.params
    scale = math.sqrt(model.n) / p.t0
    second = diag.r * diag.psi + math.sqrt(max(diag.psi, 0.0))
    if diag.r <= 0.0:
        return scale * second
    first = 1.0 / (p.lambda_ * diag.r * math.exp(diag.psi))
    return scale * min(first, second)


def _pointwise_objective(psi, lam, r):
    psi = np.asarray(psi, dtype=float)
    return np.exp(-psi) / (lam * r) + r * psi + np.sqrt(psi)


def minimize_pointwise(lam: float, r: float):
    """Minimize ``1/(lam r e^psi) + r psi + sqrt(psi)`` over ``psi``.

    Returns ``(psi_star, value)``. A 4097-point grid on
    ``[0, log(1/lam) + 10]`` brackets the minimum and a bounded Brent
    search polishes it.
    """
    if not 0.0 < lam < 1.0 or r <= 0.0:
        raise ValueError("need lam in (0, 1) and r > 0")
    top = math.log(1.0 / lam) + 10.0
    grid = np.linspace(0.0, top, 4097)
    vals = _pointwise_objective(grid, lam, r)
    j = int(np.argmin(vals))
    lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)]
    res = minimize_scalar(lambda x: float(_pointwise_objective(x, lam, r)), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12})
    if res.fun <= vals[j]:
        return float(res.x), float(res.fun)
    return float(grid[j]), float(vals[j])
