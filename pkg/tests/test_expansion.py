import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gammainc, gammaln

from multistop.expansion import (
    ExpansionFit,
    MomentSet,
    approx_expected_min,
    approx_pdf,
    b_system,
    compound_poisson_loss_moments,
    constrained_refit,
    default_scan_limit,
    expansion_local_gain_model,
    fit_expansion,
    gamma_local_model,
    laguerre,
    lognormal_raw_moments,
    positivity_boundary,
    positivity_check,
)
from multistop.stopping import Horizon, compute_value_table


def gamma_moment_set(shape: float, rate: float) -> MomentSet:
    return MomentSet.from_loss_moments(
        mean=shape / rate,
        variance=shape / rate**2,
        mu3=2.0 * shape / rate**3,
        mu4=(3.0 * shape + 6.0) * shape / rate**4,
    )


def lognormal_poisson_moment_set(rate=2.0, ln_mu=1.0, ln_sigma=math.sqrt(0.8)) -> MomentSet:
    raw = lognormal_raw_moments(ln_mu, ln_sigma)
    return MomentSet.from_loss_moments(*compound_poisson_loss_moments(rate, raw))


# ---------------------------------------------------------------- laguerre


def test_laguerre_low_orders():
    assert laguerre(0, 3.7, 12.3) == 1.0
    assert laguerre(1, 2.0, 5.0) == 3.0
    with pytest.raises(ValueError):
        laguerre(5, 2.0, 1.0)


def test_laguerre_cross_orthogonality():
    a = 2.5
    val, _ = integrate.quad(
        lambda u: math.exp((a - 1) * math.log(u) - u - gammaln(a))
        * laguerre(2, a, u)
        * laguerre(3, a, u),
        0.0,
        120.0,
        epsabs=1e-12,
        limit=400,
    )
    assert abs(val) < 1e-8


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("a", [0.9, 2.5, 6.0])
def test_laguerre_orthonormality(a):
    # a < 1 has an integrable kernel singularity at the origin; QUADPACK
    # grumbles but the accuracy assertions below still hold
    for n in range(5):
        for m in range(n, 5):
            val, _ = integrate.quad(
                lambda u: math.exp((a - 1) * math.log(u) - u - gammaln(a))
                * laguerre(n, a, u)
                * laguerre(m, a, u),
                0.0,
                200.0,
                epsabs=1e-12,
                limit=500,
            )
            if n == m:
                norm = math.factorial(n) * math.exp(gammaln(a + n) - gammaln(a))
                assert val == pytest.approx(norm, rel=1e-8)
            else:
                assert abs(val) < 1e-8


# ---------------------------------------------------------------- fitting


def test_gamma_moments_collapse_to_kernel():
    fit = fit_expansion(gamma_moment_set(2.5, 0.8))
    assert fit.a3 == pytest.approx(0.0, abs=1e-13)
    assert fit.a4 == pytest.approx(0.0, abs=1e-13)
    assert fit.positivity.positive
    zs = np.linspace(0.05, 25.0, 60)
    exact = np.exp(
        fit.a * np.log(fit.b) + (fit.a - 1) * np.log(zs) - fit.b * zs - gammaln(fit.a)
    )
    np.testing.assert_allclose(approx_pdf(fit, zs), exact, atol=1e-12)


def test_pdf_normalizes():
    fit = fit_expansion(lognormal_poisson_moment_set())
    val, _ = integrate.quad(lambda z: approx_pdf(fit, z), 0.0, np.inf, limit=400)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_fit_reproduces_first_four_moments():
    mo = lognormal_poisson_moment_set()
    fit = fit_expansion(mo)

    def u_moment(power):
        val, _ = integrate.quad(
            lambda u: u**power * approx_pdf(fit, u / fit.b) / fit.b,
            0.0,
            max(400.0, 4 * default_scan_limit(fit.a)),
            epsabs=1e-13,
            limit=500,
        )
        return val

    m1 = u_moment(1)
    m2 = u_moment(2)
    m3 = u_moment(3)
    m4 = u_moment(4)
    mu3 = m3 - 3 * m1 * m2 + 2 * m1**3
    mu4 = m4 - 4 * m1 * m3 + 6 * m1**2 * m2 - 3 * m1**4
    assert m1 == pytest.approx(fit.a, rel=1e-6)
    assert m2 - m1**2 == pytest.approx(fit.a, rel=1e-6)
    assert mu3 == pytest.approx(mo.mu3, rel=1e-6)
    assert mu4 == pytest.approx(mo.mu4, rel=1e-6)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_first_two_corrections_vanish():
    # expansion coefficients of orders 1 and 2 are zero because U is scaled to
    # have mean == variance == a; probe via the defining integrals (QUADPACK
    # flags roundoff while chasing the 1e-14 target; the assertions gate it)
    fit = fit_expansion(lognormal_poisson_moment_set())
    for n in (1, 2):
        c = math.exp(gammaln(fit.a) - gammaln(fit.a + n)) / math.factorial(n)
        val, _ = integrate.quad(
            lambda u: approx_pdf(fit, u / fit.b) / fit.b * laguerre(n, fit.a, u),
            0.0,
            max(400.0, 4 * default_scan_limit(fit.a)),
            epsabs=1e-14,
            limit=500,
        )
        assert abs(c * val) < 1e-12


def test_lognormal_poisson_example_is_positive():
    fit = fit_expansion(lognormal_poisson_moment_set())
    assert fit.positivity.positive
    zs = np.linspace(1e-6, 120.0, 4000)
    assert np.min(approx_pdf(fit, zs)) >= -1e-12


def test_sample_based_moments_roundtrip(rng):
    draws = rng.gamma(3.0, 2.0, size=200_000)
    mo = MomentSet.from_sample(draws)
    fit = fit_expansion(mo)
    # a gamma sample should give a near-kernel fit
    assert abs(fit.a3) < 0.01 and abs(fit.a4) < 0.01


# ---------------------------------------------------------------- positivity


def test_positivity_boundary_solves_the_dressed_system():
    a = 1.06
    grid = np.linspace(0.5, 25.0, 80)
    curve = positivity_boundary(a, grid)
    assert curve.u.size > 0
    for u, m3, m4 in zip(curve.u, curve.mu3, curve.mu4):
        b1, b2, b3, b1p, b2p, b3p = b_system(a, float(u))
        assert abs(m3 * b1 + m4 * b2 + b3) < 1e-8
        assert abs(m3 * b1p + m4 * b2p + b3p) < 1e-8


def test_positivity_boundary_points_have_double_roots():
    # restrict to the physical branch (mu4 > 0) so moment sets are valid
    a = 1.06
    curve = positivity_boundary(a, np.linspace(5.5, 10.0, 10))
    assert np.all(curve.mu4 > 0)
    for u, m3, m4 in zip(curve.u, curve.mu3, curve.mu4):
        mo = MomentSet(mean=a, variance=a, mu3=float(m3), mu4=float(m4))
        fit = fit_expansion(mo)
        val = fit.bracket(u)
        h = 1e-6
        slope = (fit.bracket(u + h) - fit.bracket(u - h)) / (2 * h)
        assert abs(val) < 1e-6 and abs(slope) < 1e-6
        dens = approx_pdf(fit, u / fit.b)
        dens_slope = (
            approx_pdf(fit, (u + h) / fit.b) - approx_pdf(fit, (u - h) / fit.b)
        ) / (2 * h)
        assert abs(dens) < 1e-6 and abs(dens_slope) < 1e-6


def test_positivity_rejects_point_far_below_the_curve():
    # a fourth moment far under the boundary is outside the moment cone, so
    # the truncated expansion must dip negative somewhere
    a = 1.06
    curve = positivity_boundary(a, np.array([7.3]))
    bad = MomentSet(mean=a, variance=a, mu3=float(curve.mu3[0]), mu4=0.3 * float(curve.mu4[0]))
    fit = fit_expansion(bad)
    assert not fit.positivity.positive
    assert fit.positivity.u_violation is not None


def test_grid_scan_region_brackets_the_curve():
    # brute-force lattice verdicts flip within one cell around the solved curve
    a = 1.06
    curve = positivity_boundary(a, np.linspace(5.5, 9.1, 7))
    for u, m3, m4 in zip(curve.u, curve.mu3, curve.mu4):
        step = 0.02 * abs(m4) + 1e-6
        lo = MomentSet(mean=a, variance=a, mu3=float(m3), mu4=float(m4) - step)
        hi = MomentSet(mean=a, variance=a, mu3=float(m3), mu4=float(m4) + step)
        ok_lo = fit_expansion(lo).positivity.positive
        ok_hi = fit_expansion(hi).positivity.positive
        assert ok_lo != ok_hi  # the curve separates the lattice cell


def test_positivity_check_is_scan_of_bracket():
    fit = fit_expansion(gamma_moment_set(2.0, 1.0))
    res = positivity_check(fit, default_scan_limit(fit.a))
    assert res.positive and res.min_value >= 0.0


# ---------------------------------------------------------------- E[min]


def test_expected_min_degenerate_cases():
    fit = fit_expansion(lognormal_poisson_moment_set())
    mean = fit.a / fit.b
    assert approx_expected_min(fit, 1.5, math.inf) == pytest.approx(1.5 + mean)
    assert approx_expected_min(fit, 2.0, 2.0) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(ValueError):
        approx_expected_min(fit, 3.0, 1.0)
    with pytest.raises(ValueError):
        approx_expected_min(fit, -1.0, 1.0)


def test_expected_min_gamma_case_matches_partial_expectation():
    shape, rate = 2.5, 0.8
    fit = fit_expansion(gamma_moment_set(shape, rate))
    got = approx_expected_min(fit, 0.0, 1.0)
    # direct partial-moment oracle for the gamma law
    x = rate * 1.0
    direct = (shape / rate) * gammainc(shape + 1.0, x) + 1.0 * (1.0 - gammainc(shape, x))
    assert got == pytest.approx(direct, abs=1e-12)


def test_expected_min_consistent_with_pdf_quadrature():
    fit = fit_expansion(lognormal_poisson_moment_set())
    for c1, c2 in [(0.0, 5.0), (1.0, 9.0), (3.0, 4.0)]:
        direct, _ = integrate.quad(
            lambda z: min(c1 + z, c2) * approx_pdf(fit, z),
            0.0,
            np.inf,
            epsabs=1e-12,
            limit=500,
        )
        assert approx_expected_min(fit, c1, c2) == pytest.approx(direct, abs=1e-8)


def test_expansion_gain_model_matches_exact_gamma_table():
    shape, rate = 2.5, 0.8
    fit = fit_expansion(gamma_moment_set(shape, rate))
    approx_table = compute_value_table(expansion_local_gain_model(fit), Horizon(T=8, k=3))
    exact_table = compute_value_table(gamma_local_model(shape, rate), Horizon(T=8, k=3))
    np.testing.assert_allclose(
        approx_table.values[1:, 1:], exact_table.values[1:, 1:], atol=1e-8, equal_nan=True
    )


# ---------------------------------------------------------------- refit


def test_constrained_refit_projects_to_admissible_curve():
    a = 1.06
    curve = positivity_boundary(a, np.linspace(4.0, 10.0, 7))
    bad = MomentSet(
        mean=a, variance=a, mu3=float(curve.mu3[3]), mu4=0.5 * float(curve.mu4[3])
    )
    assert not fit_expansion(bad).positivity.positive
    refit = constrained_refit(bad)
    assert refit.fit.positivity.positive or refit.fit.positivity.min_value > -1e-8
    assert refit.segment[0] <= refit.u_at_projection <= refit.segment[1]
    # the projected point solves the boundary system
    b1, b2, b3, _, _, _ = b_system(a, refit.u_at_projection)
    resid = refit.moments.mu3 * b1 + refit.moments.mu4 * b2 + b3
    assert abs(resid) < 1e-6


def test_moment_set_validation():
    with pytest.raises(ValueError):
        MomentSet(mean=-1.0, variance=1.0, mu3=0.0, mu4=1.0)
    with pytest.raises(ValueError):
        MomentSet(mean=1.0, variance=0.0, mu3=0.0, mu4=1.0)
    with pytest.raises(ValueError):
        MomentSet(mean=1.0, variance=1.0, mu3=0.0, mu4=-1.0)
