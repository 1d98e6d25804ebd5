"""Invariant suite behind ``polysurf verify``.

Each check returns a :class:`Check`; the report is one PASS/FAIL line per
check with the measured quantity, and is byte-identical for a fixed seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import norm

from . import bounds, extremal, measure, numerics, polytope, surface
from .measure import MeasureModel, parse_family

FAMILY_GRID = ("gaussian", "power:1", "power:1.5", "power:3", "power:4", "ball")
N_GRID = (5, 10, 20, 50, 100, 200)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _models(families=FAMILY_GRID, dims=N_GRID):
    for fam in families:
        for n in dims:
            yield MeasureModel(n, parse_family(fam))


def check_quadrature():
    worst = 0.0
    for k in (1, 5, 50, 400):
        exp_m = MeasureModel(2, measure.power(1))
        worst = max(worst, abs(measure.log_moment(exp_m, k) - float(gammaln(k + 1))))
        g = MeasureModel(2, measure.gaussian())
        ref = 0.5 * (k - 1) * math.log(2) + float(gammaln(0.5 * (k + 1)))
        worst = max(worst, abs(measure.log_moment(g, k) - ref))
    return Check("numerics.closed_form_moments", worst <= 1e-9, f"max |log error| = {worst:.2e}")


def check_quantile_roundtrip():
    table = numerics.build_quantile_table(numerics.LogIntegrand(lambda t: -t))
    u = np.linspace(0.0, 1.0, 1001)[:-1]
    err = float(np.max(np.abs(-np.expm1(-table.quantile(u)) - u)))
    return Check("numerics.quantile_roundtrip", err <= 1e-6, f"max |cdf(q(u)) - u| = {err:.2e}")


def check_gaussian_normalization():
    worst = 0.0
    for n in range(2, 201):
        m = MeasureModel(n, measure.gaussian())
        ref = -0.5 * n * math.log(2 * math.pi)
        worst = max(worst, abs(measure.log_norm_const(m) / ref - 1.0))
    return Check("measure.gaussian_normalization", worst <= 1e-10, f"max rel error = {worst:.2e}")


def check_radial_windows():
    out = []
    main_ok = lam_ok = mom_ok = tail_ok = True
    lam_rng, mom_rng = [math.inf, -math.inf], [math.inf, -math.inf]
    for m in _models():
        p = m.params
        n = m.n
        lg0 = float(measure.log_g(m, n - 1, p.t0))
        lj = p.log_J[n - 1]
        lower = lg0 + math.log(p.t0 / n)
        upper = lg0 + math.log(math.sqrt(2 * math.pi) * 1.1 * p.t0 / math.sqrt(n - 1))
        main_ok &= lower <= lj + 1e-9 and lj <= upper
        r = math.exp(lj - math.log(p.lambda_ * p.t0) - lg0)
        lam_rng = [min(lam_rng[0], r), max(lam_rng[1], r)]
        q = math.exp(p.log_J[n] - lj) / p.t0
        mom_rng = [min(mom_rng[0], q), max(mom_rng[1], q)]
        if m.potential.support_bound is None or 5 * p.t0 < m.potential.support_bound:
            f = numerics.LogIntegrand(lambda t, m=m: measure.log_g(m, m.n - 2, t), 5 * p.t0,
                                      m.potential.support_bound or math.inf)
            tail = numerics.integrate_log(f)
            tail_ok &= tail <= -n + p.log_J[n - 2]
    lam_ok = 0.2 <= lam_rng[0] and lam_rng[1] <= 5
    mom_ok = 0.5 <= mom_rng[0] and mom_rng[1] <= 2
    out.append(Check("measure.mainintegral_window", main_ok, "g(t0)t0/n <= J <= 1.1 sqrt(2pi) g(t0)t0/sqrt(n-1)"))
    out.append(Check("measure.int_lam_window", lam_ok,
                     f"J/(lambda t0 g(t0)) in [{lam_rng[0]:.4f}, {lam_rng[1]:.4f}]"))
    out.append(Check("measure.moments_window", mom_ok,
                     f"J_n/(J_(n-1) t0) in [{mom_rng[0]:.4f}, {mom_rng[1]:.4f}]"))
    out.append(Check("measure.tail_beyond_5t0", tail_ok, "int_{5t0} g_(n-2) <= e^-n J_(n-2)"))
    ball = [MeasureModel(n, measure.ball()).params.lambda_ * n for n in N_GRID]
    gauss = [MeasureModel(n, measure.gaussian()).params.lambda_ * math.sqrt(n) for n in N_GRID]
    ok = min(ball) >= 0.5 and max(ball) <= 2 and min(gauss) >= 1 and max(gauss) <= 3
    out.append(Check("measure.lambda_extremes", ok,
                     f"ball lambda*n in [{min(ball):.4f}, {max(ball):.4f}], "
                     f"gaussian lambda*sqrt(n) in [{min(gauss):.4f}, {max(gauss):.4f}]"))
    return out


def check_logconcave_tails(seed):
    rng = np.random.default_rng(seed)
    ok, tried = True, 0
    for fam in ("gaussian", "power:1", "power:3"):
        m = MeasureModel(20, parse_family(fam))
        t0 = m.params.t0
        g = numerics.LogIntegrand(lambda t, m=m: measure.log_g(m, m.n - 1, t))
        f0 = float(measure.log_g(m, m.n - 1, t0))
        while tried < 100 * (1 + ("gaussian", "power:1", "power:3").index(fam)):
            side = "outer" if rng.random() < 0.5 else "inner"
            x = rng.uniform(0.02, 2.0 if side == "outer" else 0.95)
            cut = t0 * (1 + x) if side == "outer" else t0 * (1 - x)
            gap = f0 - float(measure.log_g(m, m.n - 1, cut))
            psi = rng.uniform(0.05, 1.0) * gap
            if psi <= 0:
                continue
            ok &= numerics.check_logconcave_tail(g, t0, x, psi, side)[0]
            tried += 1
    return Check("measure.logconcave_tail", ok, f"{tried} random hypothesis-satisfying triples")


def fixture_polytopes(n, seed, inject_bad_normal=False):
    shapes = [polytope.standard_shape("cube", n, 1.0), polytope.standard_shape("simplex", n, 1.0),
              polytope.circumscribed_random(n, 4, 1.0, seed),
              polytope.circumscribed_random(n, 32, 1.5, seed + 1)]
    if inject_bad_normal:
        P = shapes[0]
        normals = P.normals.copy()
        normals[0] *= 1.0 + 1e-4
        shapes[0] = polytope.Polytope(normals, P.offsets, validate=False)
    return shapes


def check_unit_normals(fixtures):
    dev = max(float(np.max(np.abs(np.linalg.norm(P.normals, axis=1) - 1.0))) for P in fixtures)
    return Check("polytope.unit_normals", dev <= polytope.UNIT_TOL, f"max | |u| - 1 | = {dev:.2e}")


def check_distance(seed):
    rng = np.random.default_rng(seed)
    P = polytope.circumscribed_random(5, 12, 1.0, seed)
    X = rng.normal(scale=2.0, size=(300, 5))
    d, ok = polytope.distance(P, X)
    viol = np.maximum(polytope.max_violation(P, X), 0.0)
    outside = viol > 0
    # distance to the polytope dominates distance to any violated halfspace
    dominates = bool(np.all(d >= viol - 1e-12))
    Y = X + rng.normal(scale=0.1, size=X.shape)
    d2, _ = polytope.distance(P, Y)
    lip = float(np.max(np.abs(d2 - d) - np.linalg.norm(Y - X, axis=1)))
    inside_zero = bool(np.all(d[~outside] == 0.0))
    passed = dominates and lip <= 1e-8 and inside_zero and bool(np.all(ok))
    return Check("polytope.distance_properties", passed, f"max Lipschitz excess = {lip:.2e}")


def check_seed_determinism(seed):
    a = polytope.circumscribed_random(7, 9, 1.0, seed)
    b = polytope.circumscribed_random(7, 9, 1.0, seed)
    return Check("polytope.seed_determinism", a == b, "identical normals for identical seeds")


def check_hyperplane():
    g = surface.hyperplane_measure(MeasureModel(7, measure.gaussian()), 0.0).value
    b = surface.hyperplane_measure(MeasureModel(3, measure.ball()), 0.0).value
    err = max(abs(g - 1 / math.sqrt(2 * math.pi)), abs(b - 0.75))
    return Check("surface.hyperplane_closed_form", err <= 1e-8, f"max abs error = {err:.2e}")


def check_oracles(seed, fixtures_by_n, samples):
    worst = 0.0
    iso_ok, envelope_ok = True, True
    for n, fixtures in fixtures_by_n.items():
        m = MeasureModel(n, measure.gaussian())
        for k, P in enumerate(fixtures):
            if not np.all(np.abs(np.linalg.norm(P.normals, axis=1) - 1.0) <= polytope.UNIT_TOL):
                continue
            a = surface.surface_mc(m, P, samples, seed + k)
            b = surface.shell_oracle_mc(m, P, None, max(samples, 10_000), seed + k)
            z = abs(a.value - b.value) / math.hypot(a.stderr, b.stderr)
            worst = max(worst, z)
            vol = surface.volume_mc(m, P, samples, seed + k)
            floor = float(norm.pdf(norm.ppf(min(max(vol.value, 1e-12), 1 - 1e-12))))
            iso_ok &= a.value + 4 * a.stderr >= floor
            envelope_ok &= a.value <= 0.64 * n ** 0.25 * 1.05
    return [Check("surface.facet_vs_shell", worst <= 4.0, f"max |z| = {worst:.3f}"),
            Check("surface.gaussian_isoperimetry", iso_ok, "area + 4 se >= phi(Phi^-1(volume))"),
            Check("surface.nazarov_envelope", envelope_ok, "area <= 0.64 n^(1/4) * 1.05")]


def check_polygon(seed, samples):
    m = MeasureModel(2, measure.power(3))
    P = polytope.standard_shape("regular_polygon", 2, 0.8, K=5)
    ex = surface.polygon_exact_2d(m, P)
    mc = surface.surface_mc(m, P, samples, seed)
    z = abs(ex.value - mc.value) / mc.stderr
    return Check("surface.polygon_exact_vs_facet", z <= 4.0, f"|z| = {z:.3f}")


def check_caps(seed):
    rng = np.random.default_rng(seed)
    worst_q, worst_mc = 0.0, 0.0
    for _ in range(20):
        n = int(rng.integers(3, 30))
        t = rng.uniform(0.5, 3.0)
        rho = rng.uniform(0.0, t)
        q = extremal.cap_probability(n, t, rho)
        worst_q = max(worst_q, abs(q - float(extremal.cap_probability_beta(n, t, rho))))
        z = rng.standard_normal((100_000, n))
        hit = np.mean(z[:, 0] / np.linalg.norm(z, axis=1) >= rho / t)
        se = max(math.sqrt(q * (1 - q) / 100_000), 1e-12)
        worst_mc = max(worst_mc, abs(hit - q) / se)
    return Check("extremal.cap_probability", worst_q <= 1e-10 and worst_mc <= 4.0,
                 f"quad vs beta {worst_q:.2e}, max MC |z| = {worst_mc:.3f}")


def check_extremal(c_range):
    out = []
    m = MeasureModel(50, measure.gaussian())
    ks = [K for K in (2 ** j for j in range(2, 13, 2)) if extremal.in_theorem_range(m, K, c_range)]
    ratios = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", extremal.TheoremRangeWarning)
        for K in ks:
            rho = extremal.solve_rho(m, K)
            ratios.append(extremal.expected_surface_exact(m, K, rho) / extremal.lower_bound_rhs(m, K))
    spread = max(ratios) / min(ratios) if ratios else math.nan
    out.append(Check("extremal.log_k_scaling", bool(ratios) and spread <= 3.0,
                     f"K in {ks}: ratio spread = {spread:.4f}"))
    hyp = surface.hyperplane_measure(m, 1.3).value
    k1 = extremal.expected_surface_exact(m, 1, 1.3)
    out.append(Check("extremal.K1_is_hyperplane", abs(k1 / hyp - 1) <= 1e-9,
                     f"rel diff = {abs(k1 / hyp - 1):.2e}"))
    p = m.params
    ok = True
    for rho in np.linspace(0.5, 4.0, 8):
        env = extremal.probability_envelope(m, rho)
        for t in np.linspace(p.t0 * (1 - p.lambda_), p.t0 * (1 + p.lambda_), 7):
            ok &= extremal.cap_probability(m.n, t, rho) <= 10 * env
    out.append(Check("extremal.probability_envelope", ok, "cap <= 10 * envelope on annulus"))
    return out


def check_bounds():
    ok = all(bounds.gamma_p_upper(n, 2.0, K).value == bounds.nazarov_upper(K).value
             for n in (3, 50) for K in (2, 16, 4096))
    m = MeasureModel(10_000, measure.gaussian())
    vals = [bounds.thm_upper(m, K).value for K in (2, 4, 8, 16, 32)]
    mono = all(b > a for a, b in zip(vals, vals[1:]))
    win = []
    for lam in (1e-2, 1e-3, 1e-4):
        for j in range(4, 13):
            K = 2 ** j
            _, v = bounds.optimize_R(lam, K)
            win.append(v / (math.sqrt(math.log(K)) * math.log(1 / (lam * math.log(K)))))
    return [Check("bounds.gamma_p_equals_nazarov", ok, "p = 2 coincidence"),
            Check("bounds.thm_upper_monotone", mono, "increasing in K for lambda ~ 1e-2"),
            Check("bounds.optimize_R_window", 0.2 <= min(win) and max(win) <= 5,
                  f"ratio in [{min(win):.4f}, {max(win):.4f}]")]


def run_all(seed: int = 0, samples: int = 20_000, c_range: float = 1.0,
            inject_bad_normal: bool = False):
    checks = [check_quadrature(), check_quantile_roundtrip(), check_gaussian_normalization()]
    checks += check_radial_windows()
    checks.append(check_logconcave_tails(seed))
    fixtures = {n: fixture_polytopes(n, seed, inject_bad_normal and n == 3) for n in (3, 8)}
    checks.append(check_unit_normals([P for fx in fixtures.values() for P in fx]))
    checks.append(check_distance(seed))
    checks.append(check_seed_determinism(seed))
    checks.append(check_hyperplane())
    checks += check_oracles(seed, fixtures, samples)
    checks.append(check_polygon(seed, samples))
    checks.append(check_caps(seed))
    checks += check_extremal(c_range)
    checks += check_bounds()
    return checks


def report(checks) -> str:
    lines = [c.line() for c in checks]
    failed = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - failed}/{len(checks)} invariants passed")
    return "\n".join(lines) + "\n"
