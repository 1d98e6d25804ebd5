"""Batch experiments: configuration, CSV output and scaling-law fits."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .extremal import (
    SWEEP_HEADER,
    expected_surface_exact,
    in_theorem_range,
    lower_bound_rhs,
    solve_rho,
)
from .measure import PARAMS_HEADER, MeasureModel, params_row, parse_family
from .polytope import Polytope, circumscribed_random
from .surface import (
    SURFACE_HEADER,
    facet_measure_mc,
    hyperplane_measure,
    polygon_exact_2d,
    shell_oracle_mc,
    surface_mc,
)


@dataclass
class ExperimentConfig:
    family: str = "gaussian"
    n: int = 10
    K_list: tuple = (4, 16, 64, 256, 1024, 4096)
    trials: int = 4
    samples: int = 2000
    seed: int = 0
    epsilon: Optional[float] = None
    c_range: float = 1.0
    out: Optional[str] = None
    jobs: int = 1

    def __post_init__(self):
        self.K_list = tuple(int(k) for k in self.K_list)
        if list(self.K_list) != sorted(self.K_list):
            raise ValueError("K_list must be sorted ascending")
        if self.n < 2 or self.trials < 1 or self.samples < 1 or min(self.K_list, default=1) < 1:
            raise ValueError("n, trials, samples and every K must be positive (n >= 2)")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        parse_family(self.family)

    @property
    def model(self) -> MeasureModel:
        return MeasureModel(self.n, parse_family(self.family))


_CONFIG_KEYS = {
    "family": str, "n": int, "k_list": None, "trials": int, "samples": int, "seed": int,
    "epsilon": float, "c_range": float, "out": str, "jobs": int,
}


def parse_k_list(text: str) -> tuple:
    return tuple(int(float(v)) for v in text.replace(" ", "").split(",") if v)


def parse_config(text: str, base: ExperimentConfig = None) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` comments allowed) over ``base``."""
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        if key == "k_list":
            updates["K_list"] = parse_k_list(value)
        else:
            updates[key] = _CONFIG_KEYS[key](value)
    return replace(base or ExperimentConfig(), **updates)


def derive_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence([int(seed), *map(int, key)]).generate_state(1)[0])


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares line ``log(value) = exponent * log(log K) + intercept``."""

    exponent: float
    intercept: float
    residual: float
    points: int = 0


def fit_scaling(K_values, values) -> ScalingFit:
    x = np.log(np.log(np.asarray(K_values, dtype=float)))
    y = np.log(np.asarray(values, dtype=float))
    if x.size < 2:
        return ScalingFit(math.nan, math.nan, math.nan, int(x.size))
    A = np.column_stack((x, np.ones_like(x)))
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sum((A @ coef - y) ** 2))
    return ScalingFit(float(coef[0]), float(coef[1]), resid, int(x.size))


def params_rows(families, dims):
    return [params_row(MeasureModel(int(n), parse_family(f))) for f in families for n in dims]


def params_csv(families, dims) -> str:
    return write_csv(PARAMS_HEADER, params_rows(families, dims))


def surface_rows(config: ExperimentConfig, P: Polytope):
    """One row per applicable estimator on ``P``."""
    model = MeasureModel(P.dim, parse_family(config.family))
    N = max(config.samples, 1000)
    ests = []
    if P.K == 1:
        ests.append(hyperplane_measure(model, abs(float(P.offsets[0]))))
    ests.append(surface_mc(model, P, N, config.seed, config.jobs))
    ests.append(shell_oracle_mc(model, P, config.epsilon, max(N, 10_000), config.seed, config.jobs))
    if P.dim == 2:
        ests.append(polygon_exact_2d(model, P))
    return [[e.method, model.family, model.n, P.K, e.value, e.stderr, e.samples, config.seed]
            for e in ests]


@dataclass
class SweepResult:
    rows: list
    fit: ScalingFit
    trial_values: dict = field(default_factory=dict)

    def csv(self) -> str:
        return write_csv(SWEEP_HEADER, self.rows)


def extremal_sweep(config: ExperimentConfig) -> SweepResult:
    """Lower-bound construction across ``config.K_list``.

    For each ``K``: the offset from the selection equation, the exact
    expected surface measure, and ``trials`` sampled polytopes measured by
    facet Monte Carlo. The fit uses only rows with ``K <= exp(c/lambda)``.
    """
    model = config.model
    rows, trial_values = [], {}
    fit_K, fit_v = [], []
    for K in config.K_list:
        if K < 2:
            raise ValueError("extremal sweep needs K >= 2")
        rho = solve_rho(model, K)
        exact = expected_surface_exact(model, K, rho)

        def one_trial(t, K=K, rho=rho):
            P = circumscribed_random(model.n, K, rho, derive_seed(config.seed, 11, K, t))
            return surface_mc(model, P, max(config.samples, 1000), derive_seed(config.seed, 13, K, t))

        if config.jobs > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                ests = list(pool.map(one_trial, range(config.trials)))
        else:
            ests = [one_trial(t) for t in range(config.trials)]
        vals = np.array([e.value for e in ests])
        mean = float(np.mean(vals))
        if config.trials > 1:
            se = float(np.std(vals, ddof=1) / math.sqrt(config.trials))
        else:
            se = ests[0].stderr
        ok = in_theorem_range(model, K, config.c_range)
        rows.append([model.family, model.n, K, rho, exact, mean, se,
                     lower_bound_rhs(model, K), ok])
        trial_values[K] = vals
        if ok:
            fit_K.append(K)
            fit_v.append(exact)
    return SweepResult(rows, fit_scaling(fit_K, fit_v), trial_values)


def config_fields():
    return [f.name for f in fields(ExperimentConfig)]
