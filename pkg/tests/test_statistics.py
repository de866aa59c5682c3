import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from kappamu_chos.channel import ChannelConfig, Variant, db_to_linear
from kappamu_chos.mc import LimitModel, empirical_chos, limit_model_config, sample_batch
from kappamu_chos.statistics import (
    AccuracyWarning,
    CapacityStats,
    MGFDomainError,
    Method,
    amount_of_dispersion,
    capacity_reliability,
    capacity_stats,
    chos_approx,
    chos_direct,
    chos_exact,
    chos_shortcut,
    context_for_method,
    h_approx,
    h_transform,
    make_context,
    mgf,
    pdf,
    pdf_integrals,
)

from oracles import LN2, gamma_capacity_moment, mgf_product, rayleigh_lambda1

REF = ChannelConfig(n_branches=2, mu=1.0, kappa=1.0, m=2.0, rho=0.3, mean_snr=5.0)
GEN_CFG = ChannelConfig(n_branches=2, mu=2.5, kappa=float(db_to_linear(10.0)), m=2.0, rho=0.5,
                     mean_snr=1.0)

configs = st.builds(
    lambda n, mu, kappa, m, rho, snr: ChannelConfig(n, mu, kappa, m, rho, snr),
    st.integers(1, 3), st.floats(0.5, 3.0), st.floats(0.1, 5.0), st.floats(0.5, 5.0),
    st.floats(0.0, 0.8), st.floats(0.3, 30.0),
)


def rayleigh(snr, n_branches=1):
    return limit_model_config(LimitModel.RAYLEIGH, n_branches=n_branches, mean_snr=snr)


# PDF

def test_pdf_normalization():
    assert pdf_integrals(make_context(REF), (0,))[0] == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=25)
@given(configs)
def test_pdf_normalization_random(c):
    assert pdf_integrals(make_context(c), (0,))[0] == pytest.approx(1.0, abs=1e-8)


def test_pdf_rayleigh_limit():
    ctx = make_context(ChannelConfig(1, 1.0, 1e-6, 200.0, 0.0, 2.0))
    assert pdf(2.0, ctx) == pytest.approx(0.5 * math.exp(-1), abs=1e-3)


def test_pdf_single_term_at_zero_correlation():
    # identical uncorrelated branches: only k = 0 survives, a Gamma-shadowed 1F1 density
    from kappamu_chos.specfun import kummer_1f1
    c = REF.replace(rho=0.0)
    ctx = make_context(c)
    p = ctx.params
    g = np.array([0.05, 0.7, 3.0, 12.0, 40.0])
    k0 = [p.c0 * math.exp(-p.alpha * x) * x ** (p.U - 1)
          * kummer_1f1(p.m_base, p.U, p.alpha * x * p.lambda_frac) for x in g]
    np.testing.assert_allclose(pdf(g, ctx), k0, rtol=1e-12, atol=1e-10)


def test_pdf_non_negative_and_domain():
    ctx = make_context(REF)
    assert np.all(pdf(np.geomspace(1e-6, 300, 200), ctx) >= 0)
    with pytest.raises(ValueError):
        pdf(0.0, ctx)


def test_pdf_needs_tilde_coefficients():
    with pytest.raises(ValueError, match="TILDE"):
        pdf(1.0, make_context(REF, Variant.BAR))


# MGF

@given(configs)
def test_mgf_at_zero(c):
    assert mgf(0.0, make_context(c)) == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=20)
@given(configs)
def test_mgf_mean(c):
    ctx = make_context(c)
    h = 1e-4 * ctx.params.convergence_abscissa
    d = (mgf(h, ctx) - mgf(-h, ctx)) / (2 * h)
    assert d == pytest.approx(c.mean_snr, rel=1e-6)


def test_mgf_laplace_example():
    ctx = make_context(REF)
    ref, _ = integrate.quad(lambda g: math.exp(-g) * pdf(g, ctx), 0, np.inf,
                            epsabs=1e-14, epsrel=1e-12, limit=400)
    assert mgf(-1.0, ctx) == pytest.approx(ref, abs=1e-8)


@given(configs, st.floats(-50.0, 0.99))
def test_mgf_product_form(c, frac):
    ctx = make_context(c)
    p = frac * ctx.params.convergence_abscissa
    ref = mgf_product(p, c.mu, c.kappa, c.m, c.rho, c.mean_snr)
    assert mgf(p, ctx) == pytest.approx(ref, rel=1e-8)


@settings(max_examples=50)
@given(configs, st.floats(-5.0, 0.0))
def test_mgf_pdf_duality(c, p):
    ctx = make_context(c)
    par = ctx.params

    def f(u):
        g = u / par.alpha
        return np.exp(p * g) * pdf(g, ctx) / par.alpha

    from kappamu_chos.numerics import integrate_semiinfinite
    val = integrate_semiinfinite(f, singularity=min(par.U, 1.0))
    assert mgf(p, ctx) == pytest.approx(val, rel=1e-7, abs=1e-12)


def test_mgf_domain_error():
    ctx = make_context(REF)
    s = ctx.params.convergence_abscissa
    with pytest.raises(MGFDomainError, match="abscissa"):
        mgf(s * 1.0001, ctx)


# exact CHOS

def test_h_transform_at_zero():
    assert h_transform(np.array([0.0]), make_context(REF))[0] == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("snr", [0.5, 10.0, 100.0])
def test_rayleigh_closed_form(snr):
    assert chos_exact(1, make_context(rayleigh(snr))) == pytest.approx(rayleigh_lambda1(snr), rel=1e-6)


def test_rayleigh_closed_form_example():
    # e^0.1 E1(0.1) = 2.01 nats, i.e. 2.906 bits
    ctx = make_context(rayleigh(10.0))
    assert chos_exact(1, ctx, units="nats") == pytest.approx(2.01, abs=0.01)
    assert chos_exact(1, ctx) == pytest.approx(2.906, abs=1e-3)


def test_exact_matches_direct_example():
    ctx = make_context(REF)
    assert chos_exact(2, ctx) == pytest.approx(chos_direct(2, ctx), rel=1e-4)


@pytest.mark.parametrize("rho", [0.0, 0.4, 0.8])
@pytest.mark.parametrize("m", [0.7, 2.0, 9.0])
@pytest.mark.parametrize("snr_db", [-5.0, 10.0, 30.0])
def test_exact_direct_grid(rho, m, snr_db):
    c = REF.replace(rho=rho, m=m, mean_snr=float(db_to_linear(snr_db)), mu=1.5, kappa=2.0)
    ctx = make_context(c)
    for n in (1, 2):
        assert chos_exact(n, ctx) == pytest.approx(chos_direct(n, ctx), rel=1e-6)


@pytest.mark.parametrize("c", [REF, GEN_CFG, rayleigh(30.0, 2)])
def test_shortcut_cross_check(c):
    ctx = make_context(c)
    for n in (1, 2):
        assert chos_shortcut(n, ctx) == pytest.approx(chos_exact(n, ctx), rel=1e-7)


def test_golden_fixture():
    ctx = make_context(GEN_CFG)
    assert chos_direct(1, ctx) == pytest.approx(0.944925896498, rel=1e-9)
    assert chos_direct(2, ctx) == pytest.approx(1.04501994280, rel=1e-9)
    assert chos_exact(1, ctx) == pytest.approx(0.944925896498, rel=1e-8)


def test_nakagami_limit_matches_gamma():
    # kappa -> 0: gamma is Gamma(U, mean/U) regardless of m and rho
    c = limit_model_config(LimitModel.NAKAGAMI, n_branches=2, rho=0.6, mean_snr=4.0, nakagami_m=1.7)
    ctx = make_context(c)
    for n in (1, 2):
        assert chos_exact(n, ctx) == pytest.approx(gamma_capacity_moment(n, 3.4, 4.0), rel=1e-6)


@settings(max_examples=20)
@given(configs)
def test_variance_non_negative(c):
    s = capacity_stats(make_context(c))
    assert s.lambda1 > 0 and s.lambda2 >= s.lambda1**2
    assert s.aod >= 0


def test_monotone_in_snr():
    grid = db_to_linear(np.arange(-10.0, 41.0, 5.0))
    vals = [chos_exact(1, make_context(REF.replace(mean_snr=float(s)))) for s in grid]
    assert np.all(np.diff(vals) > 0)


def test_units_discipline():
    ctx = make_context(REF)
    for n in (1, 2):
        assert chos_exact(n, ctx, units="nats") / LN2**n == pytest.approx(chos_exact(n, ctx), rel=1e-14)
        assert chos_direct(n, ctx, units="nats") / LN2**n == pytest.approx(chos_direct(n, ctx), rel=1e-14)
    with pytest.raises(ValueError):
        chos_exact(1, ctx, units="dB")


@pytest.mark.parametrize("n", [0, 3])
def test_order_validation(n):
    with pytest.raises(ValueError):
        chos_exact(n, make_context(REF))


def test_exact_rejects_bar_context():
    with pytest.raises(ValueError):
        chos_exact(1, make_context(REF, Variant.BAR))


def test_accuracy_warning_on_coarse_plan():
    from kappamu_chos.numerics import DifferentiationPlan
    ctx = make_context(REF, differentiation=DifferentiationPlan(order=1, step=0.3, richardson_levels=1))
    with pytest.warns(AccuracyWarning):
        chos_exact(2, ctx)


def test_direct_positive():
    assert chos_direct(1, make_context(REF)) > 0


def test_high_kappa_concentration():
    # m = 200 leaves shadowing power variance 1/m, so the spread is only small at low SNR
    c = ChannelConfig(1, 1.0, 1e3, 200.0, 0.0, 0.1)
    ctx = make_context(c)
    var = chos_direct(2, ctx) - chos_direct(1, ctx) ** 2
    assert var < 1e-3
    x = np.log2(1 + sample_batch(c, 11, 400_000).snr_samples)
    assert var == pytest.approx(x.var(), rel=0.03)
    ray = make_context(rayleigh(0.1))
    assert var < 0.01 * (chos_direct(2, ray) - chos_direct(1, ray) ** 2)


# approximations

SMALL = ChannelConfig(1, 1.0, 0.5, 0.5, 0.1, 5.0)


def _approx_moment(a_variant, c, n):
    return chos_approx(n, a_variant, make_context(c, Variant.BAR))


def test_approx_a_is_exact_without_exponential():
    # A drops e^-p, so its H(a) equals alpha-scaled E[gamma^-a]
    c = REF
    ctx = make_context(c, Variant.BAR)
    tctx = make_context(c)
    par = tctx.params
    for a in (0.2, 0.5, 0.9):
        def f(u):
            g = u / par.alpha
            return g ** (-a) * pdf(g, tctx) / par.alpha
        from kappamu_chos.numerics import integrate_semiinfinite
        ref = integrate_semiinfinite(f, singularity=min(par.U, 1.0) - a)
        assert h_approx(np.array([a]), "a", ctx)[0] == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("variant", ["a", "b", "c"])
def test_approx_h_at_zero(variant):
    assert h_approx(np.array([0.0]), variant, make_context(REF, Variant.BAR))[0] == 1.0


def test_approx_a_converges_at_high_snr():
    errs = []
    for snr_db in (20.0, 40.0, 60.0):
        c = SMALL.replace(mean_snr=float(db_to_linear(snr_db)))
        exact = chos_exact(1, make_context(c))
        errs.append(abs(_approx_moment("a", c, 1) / exact - 1))
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-3


def test_approx_b_accurate_at_low_snr():
    c = SMALL.replace(mean_snr=0.05)
    exact = chos_exact(1, make_context(c))
    assert _approx_moment("b", c, 1) == pytest.approx(exact, rel=1e-2)


def test_approx_c_depends_only_on_u_and_alpha():
    # kappa, m and rho enter only through alpha = eta / mean_snr
    a = REF.replace(kappa=0.5, mean_snr=3.0, m=0.8, rho=0.1)
    b = REF.replace(kappa=5.0, mean_snr=12.0, m=6.0, rho=0.7)
    assert make_context(a).params.alpha == pytest.approx(make_context(b).params.alpha, rel=1e-15)
    assert _approx_moment("c", a, 1) == pytest.approx(_approx_moment("c", b, 1), rel=1e-12)


def test_approx_c_is_gamma_moment_approximation():
    # Psi(U, U+1-a, alpha) alpha^U is the e^-p-weighted transform of a Gamma(U) SNR
    c = REF.replace(kappa=1e-6, rho=0.0, m=200.0)
    exact = chos_exact(1, make_context(c))
    assert _approx_moment("c", c, 1) == pytest.approx(exact, rel=1e-4)


def test_approx_unknown_variant():
    with pytest.raises(ValueError):
        h_approx(np.array([0.1]), "d", make_context(REF, Variant.BAR))


def test_approx_needs_bar():
    with pytest.raises(ValueError, match="BAR"):
        chos_approx(1, "a", make_context(REF))


def test_context_for_method_variants():
    assert context_for_method(REF, Method.EXACT_MGF).coefficients.variant is Variant.TILDE
    assert context_for_method(REF, Method.APPROX_B).coefficients.variant is Variant.BAR


# AoD and reliability

@given(st.floats(0.01, 50), st.floats(0.0, 100))
def test_reliability_identity(l1, extra):
    s = CapacityStats.from_moments(l1, l1 * l1 + extra, Method.EXACT_MGF)
    assert s.reliability + s.aod == 1.0
    assert s.reliability == 1 - (s.lambda2 / s.lambda1 - s.lambda1)


@pytest.mark.parametrize("method", [Method.EXACT_MGF, Method.DIRECT_PDF])
def test_aod_and_reliability_agree(method):
    ctx = make_context(REF)
    assert amount_of_dispersion(ctx, method) + capacity_reliability(ctx, method) == pytest.approx(1.0, abs=1e-15)


def test_aod_decays_past_peak():
    lo = amount_of_dispersion(make_context(rayleigh(10.0)), Method.DIRECT_PDF)
    hi = amount_of_dispersion(make_context(rayleigh(1e4)), Method.DIRECT_PDF)
    assert hi < lo


def _exponential_reliability(snr):
    l1 = gamma_capacity_moment(1, 1.0, snr)
    l2 = gamma_capacity_moment(2, 1.0, snr)
    return 1 - (l2 / l1 - l1)


def test_rayleigh_high_snr_reliability():
    # the log-capacity variance saturates (pi^2/6 / ln^2 2) while the mean grows like log2(snr),
    # so R approaches 1 slowly: about 0.82 at 60 dB
    r = capacity_reliability(make_context(rayleigh(1e6)), Method.DIRECT_PDF)
    assert r == pytest.approx(_exponential_reliability(1e6), abs=1e-6)
    assert 0.8 < r < 0.85
    assert r > capacity_reliability(make_context(rayleigh(1e4)), Method.DIRECT_PDF)


def test_aod_at_minimum_matches_finder():
    from kappamu_chos.sweep import find_min_reliability
    pt = find_min_reliability(GEN_CFG, tol=0.01)
    ctx = make_context(GEN_CFG.replace(mean_snr=float(db_to_linear(pt.snr_db))))
    assert amount_of_dispersion(ctx) == pytest.approx(1 - pt.reliability_min, abs=1e-12)


def test_mc_agreement_integer_config():
    c = REF.replace(rho=0.6, m=1.5)
    b = sample_batch(c, 5, 500_000)
    ctx = make_context(c)
    for n in (1, 2):
        assert abs(empirical_chos(b, n).z_score(chos_exact(n, ctx))) < 4
