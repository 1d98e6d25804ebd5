import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from polysurf.estimators import RadialMeasure, SurfaceAreaEstimator
from polysurf.polytope import as_halfspace_matrix, standard_shape
from polysurf.surface import polygon_exact_2d
from polysurf.measure import MeasureModel, gaussian


def test_radial_measure_params_roundtrip():
    est = RadialMeasure(family="power:3", n=20)
    assert est.get_params() == {"family": "power:3", "n": 20}
    assert clone(est).get_params() == est.get_params()


def test_radial_measure_fit_attributes():
    est = RadialMeasure("gaussian", 101).fit()
    assert est.t0_ == pytest.approx(10.0, rel=1e-12)
    assert est.lambda_ == pytest.approx(est.lambda_i_ + est.lambda_o_)


def test_radial_measure_dimension_from_data():
    est = RadialMeasure().fit(np.zeros((3, 7)))
    assert est.n_features_in_ == 7 and est.model_.n == 7


def test_radial_measure_score_samples():
    est = RadialMeasure("gaussian", 2).fit()
    val = est.score_samples([[0.0, 0.0], [1.0, 1.0]])
    assert np.allclose(val, [-math.log(2 * math.pi), -math.log(2 * math.pi) - 1.0])
    with pytest.raises(ValueError):
        est.score_samples([[0.0, 0.0, 0.0]])


def test_radial_measure_sample_reproducible():
    est = RadialMeasure("ball", 4).fit()
    a, b = est.sample(100, random_state=2), est.sample(100, random_state=2)
    assert np.array_equal(a, b) and a.shape == (100, 4)
    assert np.all(np.linalg.norm(a, axis=1) <= 1.0 + 1e-12)


def test_unfitted():
    with pytest.raises(NotFittedError):
        RadialMeasure().score_samples([[0.0, 0.0]])


def test_surface_estimator_exact_2d():
    H = as_halfspace_matrix(standard_shape("regular_polygon", 2, 1.0, K=6))
    est = SurfaceAreaEstimator(method="exact_2d").fit(H)
    ref = polygon_exact_2d(MeasureModel(2, gaussian()), standard_shape("regular_polygon", 2, 1.0, K=6))
    assert est.surface_area_ == ref.value and est.stderr_ == 0.0


def test_surface_estimator_facet_vs_exact():
    H = as_halfspace_matrix(standard_shape("cube", 2, 0.7))
    mc = SurfaceAreaEstimator(n_samples=20_000, random_state=1).fit(H)
    ex = SurfaceAreaEstimator(method="exact_2d").fit(H)
    assert abs(mc.surface_area_ - ex.surface_area_) <= 4 * mc.stderr_


def test_surface_estimator_clone_and_validation():
    est = SurfaceAreaEstimator(family="power:1", method="shell_mc", n_samples=10_000)
    assert clone(est).get_params()["method"] == "shell_mc"
    with pytest.raises(ValueError):
        SurfaceAreaEstimator().fit(np.ones((3, 2)))
    with pytest.raises(ValueError):
        SurfaceAreaEstimator(method="magic").fit(as_halfspace_matrix(standard_shape("cube", 2)))
    with pytest.raises(ValueError):
        SurfaceAreaEstimator().fit([[1.0, 1.0, 1.0]])
