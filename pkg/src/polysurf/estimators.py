"""scikit-learn style wrappers over the functional core.

Only the parts with a natural fit/transform shape are wrapped: a radial
measure fitted to its dimension, and a surface-area estimator fitted to a
halfspace matrix. Everything else stays a plain function.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .measure import MeasureModel, log_density, parse_family, radial_table, sample_points
from .polytope import Polytope
from .surface import polygon_exact_2d, shell_oracle_mc, surface_mc


class RadialMeasure(BaseEstimator):
    """Rotation-invariant log-concave measure ``C_n exp(-phi(|y|))``.

    Parameters
    ----------
    family : str
        ``"gaussian"``, ``"ball"`` or ``"power:<p>"``.
    n : int, optional
        Dimension. When omitted, ``fit`` takes it from ``X.shape[1]``.

    Attributes
    ----------
    model_ : MeasureModel
    t0_, lambda_i_, lambda_o_, lambda_, E_, V_ : float
    """

    def __init__(self, family: str = "gaussian", n: int = None):
        self.family = family
        self.n = n

    def fit(self, X=None, y=None):
        if self.n is None:
            if X is None:
                raise ValueError("either n or X is required")
            n = check_array(X).shape[1]
        else:
            n = int(self.n)
        self.model_ = MeasureModel(n, parse_family(self.family))
        p = self.model_.params
        self.t0_, self.lambda_i_, self.lambda_o_ = p.t0, p.lambda_i, p.lambda_o
        self.lambda_, self.E_, self.V_ = p.lambda_, p.E, p.V
        self.n_features_in_ = n
        return self

    def score_samples(self, X):
        """Log density at each row of ``X``."""
        check_is_fitted(self, "model_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return np.asarray(log_density(self.model_, X), dtype=float)

    def sample(self, n_samples: int = 1, random_state=None):
        check_is_fitted(self, "model_")
        rng = np.random.default_rng(random_state)
        return sample_points(self.model_, rng, n_samples, radial_table(self.model_))


class SurfaceAreaEstimator(BaseEstimator):
    """Surface measure of a polytope given as a ``(K, n + 1)`` matrix ``[u | r]``.

    Parameters
    ----------
    family : str
    method : {"facet_mc", "shell_mc", "exact_2d"}
    n_samples : int
        Samples per facet (facet_mc) or in total (shell_mc).
    epsilon : float, optional
        Shell width for ``shell_mc``.
    random_state : int
    n_jobs : int

    Attributes
    ----------
    surface_area_, stderr_ : float
    estimate_ : SurfaceEstimate
    """

    def __init__(self, family: str = "gaussian", method: str = "facet_mc",
                 n_samples: int = 100_000, epsilon: float = None, random_state: int = 0,
                 n_jobs: int = 1):
        self.family = family
        self.method = method
        self.n_samples = n_samples
        self.epsilon = epsilon
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        H = check_array(X)
        if H.shape[1] < 3:
            raise ValueError("need at least n = 2 columns of normals plus an offset column")
        P = Polytope(H[:, :-1], H[:, -1])
        model = MeasureModel(P.dim, parse_family(self.family))
        if self.method == "facet_mc":
            est = surface_mc(model, P, self.n_samples, self.random_state, self.n_jobs)
        elif self.method == "shell_mc":
            est = shell_oracle_mc(model, P, self.epsilon, self.n_samples, self.random_state,
                                  self.n_jobs)
        elif self.method == "exact_2d":
            est = polygon_exact_2d(model, P)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.estimate_ = est
        self.surface_area_, self.stderr_ = est.value, est.stderr
        self.n_features_in_ = H.shape[1]
        return self
