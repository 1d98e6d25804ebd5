import math

import numpy as np
import pytest
from scipy.stats import norm

from polysurf.measure import MeasureModel, ball, gaussian, parse_family, power
from polysurf.polytope import Polytope, circumscribed_random, standard_shape
from polysurf.surface import (
    SURFACE_HEADER,
    BoundaryDiagnostics,
    SurfaceEstimate,
    default_epsilon,
    facet_intervals_2d,
    facet_measure_mc,
    hyperplane_measure,
    minimize_pointwise,
    pointwise_bound,
    pointwise_diagnostics,
    polygon_exact_2d,
    shell_oracle_mc,
    surface_mc,
    volume_mc,
)

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def z_score(a, b):
    return abs(a.value - b.value) / math.hypot(a.stderr, b.stderr)


def fixtures(model):
    n = model.n
    s = model.params.t0 / math.sqrt(n)
    return {
        "cube": standard_shape("cube", n, s),
        "simplex": standard_shape("simplex", n, s),
        "circ4": circumscribed_random(n, 4, s, 1),
        "circ32": circumscribed_random(n, 32, 1.5 * s, 2),
    }


# estimate type -------------------------------------------------------------

def test_exact_methods_have_no_stderr():
    with pytest.raises(ValueError):
        SurfaceEstimate(1.0, 0.1, 0, "exact_1d")
    with pytest.raises(ValueError):
        SurfaceEstimate(1.0, 0.0, 0, "bogus")


def test_csv_header():
    assert SURFACE_HEADER == ("method", "family", "n", "K", "value", "stderr", "samples", "seed")


# hyperplane ------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 10, 50, 200])
def test_gaussian_hyperplane_through_origin(n):
    h = hyperplane_measure(MeasureModel(n, gaussian()), 0.0)
    assert h.method == "exact_1d" and h.stderr == 0.0
    assert h.value == pytest.approx(INV_SQRT_2PI, abs=1e-8)


@pytest.mark.parametrize("rho", [0.3, 1.0, 2.5])
@pytest.mark.parametrize("n", [2, 7, 40])
def test_gaussian_hyperplane_is_marginal_density(n, rho):
    assert hyperplane_measure(MeasureModel(n, gaussian()), rho).value == pytest.approx(
        norm.pdf(rho), rel=1e-9)


def test_ball_hyperplane_n3():
    assert hyperplane_measure(MeasureModel(3, ball()), 0.0).value == pytest.approx(0.75, abs=1e-8)


def test_ball_hyperplane_n3_off_center():
    # uniform density 3/(4 pi) times disk area pi (1 - rho^2)
    assert hyperplane_measure(MeasureModel(3, ball()), 0.6).value == pytest.approx(
        0.75 * (1 - 0.36), rel=1e-9)


def test_hyperplane_far_away_vanishes():
    m = MeasureModel(10, gaussian())
    assert hyperplane_measure(m, 60.0).value < 1e-300
    assert hyperplane_measure(MeasureModel(5, ball()), 1.5).value == 0.0


# facet Monte Carlo ---------------------------------------------------------

def test_single_halfspace_facet_is_exact():
    m = MeasureModel(6, power(3))
    P = circumscribed_random(6, 1, 0.7, 3)
    est = facet_measure_mc(m, P, 0, 2000, 0)
    assert est.value == hyperplane_measure(m, 0.7).value
    assert est.stderr == 0.0


def test_half_facet_by_symmetry():
    m = MeasureModel(4, gaussian())
    P = Polytope([[1, 0, 0, 0], [0, 1, 0, 0]], [0.8, 0.0])
    est = facet_measure_mc(m, P, 0, 50_000, 1)
    assert abs(est.value - 0.5 * norm.pdf(0.8)) <= 4 * est.stderr


def test_redundant_parallel_facet_is_empty():
    m = MeasureModel(3, gaussian())
    P = Polytope([[1, 0, 0], [1, 0, 0]], [0.5, 5.0])
    assert facet_measure_mc(m, P, 1, 5000, 0).value == 0.0


def test_duplicate_facets_counted_once():
    m = MeasureModel(3, gaussian())
    P = Polytope([[1, 0, 0], [1, 0, 0]], [0.5, 0.5])
    assert surface_mc(m, P, 1000, 0).value == pytest.approx(norm.pdf(0.5), rel=1e-12)


def test_facet_mc_needs_enough_samples():
    with pytest.raises(ValueError):
        facet_measure_mc(MeasureModel(3, gaussian()), standard_shape("cube", 3), 0, 10, 0)


def test_surface_single_halfspace():
    m = MeasureModel(5, gaussian())
    P = Polytope([[0, 0, 1, 0, 0]], [0.0])
    assert surface_mc(m, P, 1000, 0).value == pytest.approx(INV_SQRT_2PI, abs=1e-8)


def test_surface_far_halfspace_vanishes():
    P = Polytope([[1, 0, 0]], [80.0])
    assert surface_mc(MeasureModel(3, gaussian()), P, 1000, 0).value < 1e-300


@pytest.mark.parametrize("K", [3, 5, 8])
def test_regular_polygon_matches_exact(K):
    m = MeasureModel(2, gaussian())
    P = standard_shape("regular_polygon", 2, 0.9, K=K)
    mc = surface_mc(m, P, 20_000, 4)
    assert abs(mc.value - polygon_exact_2d(m, P).value) <= 4 * mc.stderr


def test_square_matches_exact():
    m = MeasureModel(2, gaussian())
    P = standard_shape("cube", 2, 1.0)
    mc = surface_mc(m, P, 20_000, 2)
    # closed form: four edges of mass phi(1) (2 Phi(1) - 1)
    exact = 4 * norm.pdf(1.0) * (2 * norm.cdf(1.0) - 1)
    assert polygon_exact_2d(m, P).value == pytest.approx(exact, rel=1e-10)
    assert abs(mc.value - exact) <= 4 * mc.stderr


def test_results_independent_of_jobs():
    m = MeasureModel(5, gaussian())
    P = circumscribed_random(5, 6, 1.0, 0)
    a = surface_mc(m, P, 20_000, 3, n_jobs=1)
    b = surface_mc(m, P, 20_000, 3, n_jobs=3)
    assert a == b
    assert shell_oracle_mc(m, P, None, 20_000, 3, 1) == shell_oracle_mc(m, P, None, 20_000, 3, 4)


# shell oracle ----------------------------------------------------------------

def test_shell_halfspace_through_origin():
    est = shell_oracle_mc(MeasureModel(3, gaussian()), Polytope([[0, 1, 0]], [0.0]), None, 200_000, 1)
    assert abs(est.value - INV_SQRT_2PI) <= 4 * est.stderr


def test_shell_far_halfspace_vanishes():
    est = shell_oracle_mc(MeasureModel(3, gaussian()), Polytope([[1, 0, 0]], [80.0]), None, 10_000, 0)
    assert est.value == 0.0


def test_shell_epsilon_range_checked():
    m = MeasureModel(3, gaussian())
    with pytest.raises(ValueError):
        shell_oracle_mc(m, standard_shape("cube", 3), 10.0, 10_000, 0)
    assert default_epsilon(m) == pytest.approx(0.01 * math.sqrt(2) / math.sqrt(3))


def test_cube_n3_shell_vs_facet():
    m = MeasureModel(3, gaussian())
    P = standard_shape("cube", 3, 1.0)
    assert z_score(surface_mc(m, P, 10_000, 0), shell_oracle_mc(m, P, None, 100_000, 0)) <= 4


@pytest.mark.parametrize("fam", ["gaussian", "power:1", "power:3"])
@pytest.mark.parametrize("n", [3, 8, 15])
def test_oracle_agreement_grid(fam, n):
    m = MeasureModel(n, parse_family(fam))
    for name, P in fixtures(m).items():
        a = surface_mc(m, P, 4000, 1)
        b = shell_oracle_mc(m, P, None, 100_000, 2)
        assert z_score(a, b) <= 4, name


# exact 2-D -------------------------------------------------------------------

def test_line_through_origin_2d():
    P = Polytope([[0.0, 1.0]], [0.0])
    assert polygon_exact_2d(MeasureModel(2, gaussian()), P).value == pytest.approx(INV_SQRT_2PI, rel=1e-10)


def test_square_edges_equal():
    m = MeasureModel(2, power(3))
    P = standard_shape("cube", 2, 0.7)
    parts = [polygon_exact_2d(m, Polytope(P.normals, np.where(np.arange(4) == i, P.offsets, 50.0))).value
             for i in range(4)]
    assert np.allclose(parts, parts[0], rtol=1e-12)


def test_triangle_clip_points_are_vertices():
    P = standard_shape("simplex", 2, 1.0)
    for i, (lo, hi) in enumerate(facet_intervals_2d(P)):
        u = P.normals[i]
        v = np.array([-u[1], u[0]])
        ends = [P.offsets[i] * u + s * v for s in (lo, hi)]
        for e in ends:
            # each clip point lies on exactly two edge lines
            on = np.isclose(P.normals @ e, P.offsets, atol=1e-12)
            assert on.sum() == 2


def test_exact_2d_requires_planar():
    with pytest.raises(ValueError):
        polygon_exact_2d(MeasureModel(3, gaussian()), standard_shape("cube", 3))


# volume --------------------------------------------------------------------

def test_volume_halfspace_half():
    v = volume_mc(MeasureModel(6, gaussian()), Polytope([[1, 0, 0, 0, 0, 0]], [0.0]), 100_000, 0)
    assert abs(v.value - 0.5) <= 4 * v.stderr


def test_volume_whole_space():
    v = volume_mc(MeasureModel(4, power(1)), standard_shape("cube", 4, 1e6), 10_000, 0)
    assert v.value == 1.0


def test_volume_square_closed_form():
    v = volume_mc(MeasureModel(2, gaussian()), standard_shape("cube", 2, 0.8), 100_000, 1)
    assert abs(v.value - (2 * norm.cdf(0.8) - 1) ** 2) <= 4 * v.stderr


def test_volume_monotone_when_adding_halfspace():
    m = MeasureModel(5, gaussian())
    P = circumscribed_random(5, 6, 1.0, 0)
    Q = Polytope(np.vstack((P.normals, [[1, 0, 0, 0, 0]])), np.append(P.offsets, 0.2))
    a, b = volume_mc(m, P, 50_000, 0), volume_mc(m, Q, 50_000, 0)
    assert b.value <= a.value + a.stderr


# isoperimetry and envelope ---------------------------------------------------

@pytest.mark.parametrize("n", [3, 8, 15])
def test_gaussian_isoperimetric_floor(n):
    m = MeasureModel(n, gaussian())
    for name, P in fixtures(m).items():
        s = surface_mc(m, P, 4000, 3)
        v = volume_mc(m, P, 50_000, 3)
        assert s.value + 4 * s.stderr >= norm.pdf(norm.ppf(v.value)), name


@pytest.mark.parametrize("n", [3, 10, 30, 50])
def test_gaussian_envelope(n):
    m = MeasureModel(n, gaussian())
    for name, P in fixtures(m).items():
        assert surface_mc(m, P, 2000, 5).value <= 0.64 * n ** 0.25 * 1.05, name


# pointwise diagnostics and bounds ------------------------------------------

def test_diagnostics_at_t0_and_shell_edge():
    m = MeasureModel(20, gaussian())
    p = m.params
    u = np.zeros(20)
    u[0] = 1.0
    P = Polytope([u], [p.t0])
    d = pointwise_diagnostics(m, P, p.t0 * u, 0)
    assert d.psi == pytest.approx(0.0, abs=1e-12)
    assert d.alpha == pytest.approx(1.0)
    assert d.r == pytest.approx(math.sqrt(20))
    rho = p.t0 * (1 + p.lambda_o)
    d = pointwise_diagnostics(m, Polytope([u], [rho]), rho * u, 0)
    assert d.psi == pytest.approx(1.0, abs=1e-9)


def test_diagnostics_off_perpendicular():
    m = MeasureModel(3, gaussian())
    P = Polytope([[1, 0, 0]], [1.0])
    y = np.array([1.0, 1.0, 0.0])
    d = pointwise_diagnostics(m, P, y, 0)
    assert d.alpha == pytest.approx(1 / math.sqrt(2))
    assert d.psi >= 0
    assert d.r == pytest.approx(math.sqrt(3) / m.params.t0 * d.alpha * np.linalg.norm(y))


def test_diagnostics_point_off_facet():
    with pytest.raises(ValueError):
        pointwise_diagnostics(MeasureModel(3, gaussian()), Polytope([[1, 0, 0]], [1.0]),
                              np.zeros(3), 0)


def test_pointwise_bound_values():
    m = MeasureModel(50, gaussian())
    p = m.params
    scale = math.sqrt(50) / p.t0
    assert pointwise_bound(m, BoundaryDiagnostics(1.0, 0.0, 0.0)) == 0.0
    val = pointwise_bound(m, BoundaryDiagnostics(1.0, 1.0, 1.0))
    assert val == pytest.approx(scale * min(1 / (p.lambda_ * math.e), 2.0))
    big = [pointwise_bound(m, BoundaryDiagnostics(1.0, psi, 1.0)) for psi in (5, 10, 20)]
    assert big[0] > big[1] > big[2]


def test_minimize_pointwise_balance_point():
    lam = 1e-4
    r = 1 / (math.e * math.sqrt(lam))
    _, val = minimize_pointwise(lam, r)
    ref = r * math.log(1 / (lam * r * r))
    assert ref / 2 <= val <= 2 * ref


def test_minimize_pointwise_psi_star():
    lam = 1e-4
    psi, _ = minimize_pointwise(lam, 1.0)
    grid = np.linspace(0, 30, 300_001)
    obj = np.exp(-grid) / lam + grid + np.sqrt(grid)
    assert psi == pytest.approx(grid[np.argmin(obj)], abs=1e-3)
    assert abs(psi - math.log(1 / lam)) <= math.log(math.log(1 / lam)) + 1


def test_minimize_pointwise_monotone_in_lambda():
    vals = [minimize_pointwise(lam, 2.0)[1] for lam in (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
