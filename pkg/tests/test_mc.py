import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from kappamu_chos.channel import ChannelConfig, KAPPA_EPS, db_to_linear
from kappamu_chos.mc import (
    CHUNK,
    M_LARGE,
    LimitModel,
    SampleBatch,
    SamplerUnsupportedError,
    empirical_chos,
    limit_model_config,
    limit_model_from_db,
    sample_batch,
    sample_shadowing,
    shadowing_power_correlation,
)
from kappamu_chos.numerics import integrate_interval
from kappamu_chos.statistics import chos_direct, chos_exact, make_context, pdf

from oracles import rayleigh_lambda1

PAIR = ChannelConfig(n_branches=2, mu=1.0, kappa=1.0, m=1.0, rho=0.25, mean_snr=4.0)


def rayleigh(snr, n_branches=1):
    return limit_model_config(LimitModel.RAYLEIGH, n_branches=n_branches, mean_snr=snr)


def test_rayleigh_ks():
    x = sample_batch(rayleigh(3.0), 1, 10**6).snr_samples
    assert stats.kstest(x, stats.expon(scale=3.0).cdf).pvalue > 0.01


@settings(max_examples=15)
@given(st.integers(1, 3), st.integers(1, 3), st.floats(0.0, 5.0), st.integers(1, 8),
       st.floats(0.0, 0.9), st.floats(0.1, 100.0), st.integers(0, 2**63))
def test_mean_within_five_standard_errors(n, mu, kappa, two_m, rho, snr, seed):
    c = ChannelConfig(n, float(mu), kappa, two_m / 2, rho, snr)
    x = sample_batch(c, seed, 20_000).snr_samples
    assert np.all(x > 0)
    assert abs(x.mean() - snr) < 5 * x.std(ddof=1) / math.sqrt(x.size)


def test_histogram_matches_pdf():
    x = sample_batch(PAIR, 2024, 10**7).snr_samples
    edges = np.linspace(0.0, 20.0, 51)
    counts, _ = np.histogram(x, edges)
    ctx = make_context(PAIR)
    f = lambda g: pdf(np.maximum(g, 1e-300), ctx)  # noqa: E731
    prob = np.array([integrate_interval(f, a, b, 1e-15, 1e-12, 200) for a, b in zip(edges[:-1], edges[1:])])
    expected = prob * x.size
    assert np.all(np.abs(counts - expected) <= 3 * np.sqrt(expected))


def test_pdf_value_in_histogram_bin():
    x = sample_batch(PAIR, 99, 10**7).snr_samples
    half = 0.05
    p = np.mean(np.abs(x - 1.0) < half)
    est = p / (2 * half)
    sigma = math.sqrt(p * (1 - p) / x.size) / (2 * half)
    assert abs(est - pdf(1.0, make_context(PAIR))) < 3 * sigma + 1e-4


def test_constant_batch():
    b = SampleBatch(0, 5, np.full(5, 3.0), "x")
    for n in (1, 2):
        e = empirical_chos(b, n)
        assert e.estimate == pytest.approx(2.0**n) and e.std_error == 0.0


def test_empty_batch():
    with pytest.raises(ValueError):
        empirical_chos(SampleBatch(0, 0, np.array([]), "x"), 1)


def test_rayleigh_capacity():
    e = empirical_chos(sample_batch(rayleigh(10.0), 3, 10**6), 1)
    assert abs(e.z_score(rayleigh_lambda1(10.0))) < 3


def test_general_second_moment():
    c = ChannelConfig(2, [1.0, 2.0], [2.0, 0.5], 1.5, 0.5, 3.0)
    e = empirical_chos(sample_batch(c, 8, 10**6), 2)
    assert abs(e.z_score(chos_direct(2, make_context(c)))) < 3


def test_agreement_chain():
    c = ChannelConfig(3, 1.0, 2.0, 2.5, 0.4, 10.0)
    ctx = make_context(c)
    b = sample_batch(c, 21, 10**6)
    for n in (1, 2):
        d, x = chos_direct(n, ctx), chos_exact(n, ctx)
        assert x == pytest.approx(d, rel=1e-4)
        assert abs(empirical_chos(b, n).z_score(d)) < 3


def test_standard_error_scaling():
    se = [empirical_chos(sample_batch(PAIR, 4, n), 1).std_error for n in (100_000, 400_000)]
    assert se[0] / se[1] == pytest.approx(2.0, rel=0.05)
    assert se[1] > 0


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 5.0])
def test_shadowing_marginals(m):
    c = ChannelConfig(3, 1.0, 1.0, m, 0.6, 1.0)
    xi2 = sample_shadowing(c, 31, 200_000)
    for i in range(3):
        assert stats.kstest(xi2[:, i], stats.gamma(m, scale=1 / m).cdf).pvalue > 0.01


@pytest.mark.parametrize("rho", [0.3, 0.7])
def test_shadowing_correlation(rho):
    c = ChannelConfig(3, 1.0, 1.0, 2.0, rho, 1.0)
    xi2 = sample_shadowing(c, 5, 10**6)
    r = np.corrcoef(xi2.T)
    for i, j in [(0, 1), (1, 2), (0, 2)]:
        assert abs(r[i, j] - shadowing_power_correlation(rho, i, j)) < 0.02


def test_reproducible():
    a = sample_batch(PAIR, 77, 100_000).snr_samples
    b = sample_batch(PAIR, 77, 100_000).snr_samples
    assert a.tobytes() == b.tobytes()
    assert sample_batch(PAIR, 78, 10).snr_samples.tobytes() != a[:10].tobytes()


def test_parallel_invariance():
    count = 3 * CHUNK + 123
    a = sample_batch(PAIR, 9, count, workers=1).snr_samples
    b = sample_batch(PAIR, 9, count, workers=3).snr_samples
    assert a.tobytes() == b.tobytes()


def test_prefix_stability():
    a = sample_batch(PAIR, 9, CHUNK + 10).snr_samples
    b = sample_batch(PAIR, 9, 2 * CHUNK).snr_samples
    assert a[:CHUNK].tobytes() == b[:CHUNK].tobytes()


@pytest.mark.parametrize("kw", [dict(mu=1.5), dict(m=0.7)])
def test_sampler_unsupported(kw):
    c = PAIR.replace(**kw)
    with pytest.raises(SamplerUnsupportedError, match="quadrature"):
        sample_batch(c, 0, 10)


def test_count_validation():
    with pytest.raises(ValueError):
        sample_batch(PAIR, 0, 0)


def test_fingerprint_recorded():
    assert sample_batch(PAIR, 0, 3).config_fingerprint == PAIR.fingerprint()


def test_csv_export():
    b = sample_batch(PAIR, 0, 7)
    text = b.to_csv()
    lines = text.splitlines()
    assert lines[0] == "snr_linear" and len(lines) == 8
    np.testing.assert_allclose([float(v) for v in lines[1:]], b.snr_samples, rtol=1e-11)
    buf = io.StringIO()
    b.to_csv(buf)
    assert buf.getvalue() == text


# limit models

def test_rayleigh_preset():
    c = rayleigh(1.0)
    assert (c.mu, c.kappa, c.m) == ((1.0,), (KAPPA_EPS,), M_LARGE)


def test_rician_preset():
    c = limit_model_from_db(LimitModel.RICIAN, mean_snr_db=0.0, k_factor_db=5.0)
    assert c.mu == (1.0,) and c.m == 200.0
    assert c.kappa[0] == pytest.approx(3.1623, abs=1e-4)


def test_nakagami_preset():
    c = limit_model_config("nakagami", nakagami_m=2.0)
    assert (c.mu, c.kappa, c.m) == ((2.0,), (1e-6,), 200.0)


def test_nakagami_sampler_is_gamma():
    c = limit_model_config(LimitModel.NAKAGAMI, nakagami_m=2.0, mean_snr=5.0)
    x = sample_batch(c, 12, 500_000).snr_samples
    assert stats.kstest(x, stats.gamma(2.0, scale=2.5).cdf).pvalue > 0.01


def test_general_preset_passthrough():
    c = limit_model_config("GENERAL", n_branches=2, rho=0.3, mu=2.5, kappa=10.0, m=2.0)
    assert (c.mu, c.kappa, c.m, c.rho) == ((2.5, 2.5), (10.0, 10.0), 2.0, 0.3)


@pytest.mark.parametrize("model,kw", [
    ("rician", {}), ("rician", dict(k_factor=-1.0)), ("nakagami", {}), ("general", dict(mu=1.0)),
])
def test_preset_validation(model, kw):
    from kappamu_chos.channel import ConfigError
    with pytest.raises(ConfigError):
        limit_model_config(model, **kw)


def test_unknown_model():
    with pytest.raises(ValueError):
        limit_model_config("lognormal")
