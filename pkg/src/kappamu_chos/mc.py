"""Monte Carlo sampler for the correlated kappa-mu shadowed MRC channel and the
limit-model presets.

Construction per branch i with mu_i clusters (2 sigma^2 = 1/alpha common to all
branches, so the combined mean is gamma_bar):

    gamma_i = sum_l |X_il + xi_i p_i|^2,  X_il ~ CN(0, 2 sigma^2),  p_i^2 = kappa_i 2 sigma^2
    xi_i^2  = (1/2m) sum_{j=1}^{2m} Z_ij^2,  Z_.j ~ N(0, C),  C_ik = rho^(|i-k|/2)

so xi_i^2 is unit-mean Gamma(m) and corr(xi_i^2, xi_k^2) = C_ik^2 = rho^|i-k|.

Random streams: every (stream, chunk) pair gets its own Philox generator keyed
by the seed, so the output does not depend on how chunks are spread over
workers. Stream 0 drives the shadowing, stream 1 + l + i * L drives cluster l of
branch i (L = max mu).
"""

from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import ChannelConfig, ConfigError, KAPPA_EPS, build_correlation_matrix, db_to_linear

CHUNK = 1 << 16
M_LARGE = 200.0


class SamplerUnsupportedError(ConfigError):
    pass


@dataclass(frozen=True)
class SampleBatch:
    seed: int
    count: int
    snr_samples: np.ndarray
    config_fingerprint: str

    def to_csv(self, fh=None):
        """Single-column CSV with header ``snr_linear``; returns the text if ``fh`` is None."""
        own = fh is None
        fh = io.StringIO() if own else fh
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["snr_linear"])
        w.writerows([f"{v:.12g}"] for v in self.snr_samples)
        return fh.getvalue() if own else None


@dataclass(frozen=True)
class EmpiricalMoment:
    order: int
    estimate: float
    std_error: float
    count: int

    def z_score(self, reference):
        return (self.estimate - reference) / self.std_error


def _check_sampler(config):
    mu = np.asarray(config.mu)
    if np.any(mu != np.round(mu)):
        raise SamplerUnsupportedError(
            "sampler needs integer mu_i; validate non-integer configs with the quadrature oracle "
            "(chos_direct)")
    if 2 * config.m != round(2 * config.m):
        raise SamplerUnsupportedError(
            "sampler needs 2m to be an integer; validate with the quadrature oracle (chos_direct)")


def _rng(seed, stream, chunk):
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(stream, chunk))
    return np.random.Generator(np.random.Philox(ss))


def _shadowing(config, seed, chunk, size):
    n = config.n_branches
    two_m = int(round(2 * config.m))
    rng = _rng(seed, 0, chunk)
    if n == 1:
        return rng.standard_gamma(config.m, size=(size, 1)) / config.m
    chol = np.linalg.cholesky(build_correlation_matrix(config.rho, n).entries)
    acc = np.zeros((size, n))
    for _ in range(two_m):
        z = rng.standard_normal((size, n)) @ chol.T
        acc += z * z
    return acc / two_m


def _chunk(config, seed, chunk, size):
    alpha = sum(mu * (1 + k) for mu, k in zip(config.mu, config.kappa)) / config.mean_snr
    s2 = 0.5 / alpha  # per-dimension scatter variance
    xi = np.sqrt(_shadowing(config, seed, chunk, size))
    n_cl = int(max(config.mu))
    total = np.zeros(size)
    for i, (mu, kap) in enumerate(zip(config.mu, config.kappa)):
        p = math.sqrt(kap * 2 * s2)
        for l in range(int(mu)):
            rng = _rng(seed, 1 + l + i * n_cl, chunk)
            g = rng.standard_normal((2, size)) * math.sqrt(s2)
            total += (g[0] + xi[:, i] * p) ** 2 + g[1] ** 2
    return total, xi * xi


def _run(config, seed, count, workers, part):
    n_chunks = -(-count // CHUNK)
    sizes = [min(CHUNK, count - c * CHUNK) for c in range(n_chunks)]
    job = lambda c: _chunk(config, seed, c, sizes[c])[part]  # noqa: E731
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, range(n_chunks)))
    else:
        parts = [job(c) for c in range(n_chunks)]
    return np.concatenate(parts)


def sample_batch(config: ChannelConfig, seed: int, count: int, workers: int = 1) -> SampleBatch:
    """Draw ``count`` post-combining SNR samples; identical for any ``workers``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    _check_sampler(config)
    snr = _run(config, seed, count, workers, 0)
    return SampleBatch(int(seed), int(count), snr, config.fingerprint())


def sample_shadowing(config: ChannelConfig, seed: int, count: int, workers: int = 1):
    """The xi_i^2 draws used by ``sample_batch`` (shape count x n_branches)."""
    _check_sampler(config)
    return _run(config, seed, count, workers, 1)


def shadowing_power_correlation(rho, i, j):
    """Correlation of xi_i^2 and xi_j^2 produced by the sampler: rho^|i-j|."""
    return rho ** abs(i - j)


def empirical_chos(batch: SampleBatch, n: int) -> EmpiricalMoment:
    """Sample mean of log2^n(1 + gamma) with its standard error."""
    x = np.asarray(batch.snr_samples)
    if x.size == 0:
        raise ValueError("empty batch")
    v = np.log2(1.0 + x) ** n
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return EmpiricalMoment(n, float(v.mean()), se, int(v.size))


class LimitModel(str, enum.Enum):
    RAYLEIGH = "rayleigh"
    RICIAN = "rician"
    NAKAGAMI = "nakagami"
    GENERAL = "general"


def limit_model_config(model, *, n_branches=1, rho=0.0, mean_snr=1.0, k_factor=None,
                       nakagami_m=None, mu=None, kappa=None, m=None, **extra) -> ChannelConfig:
    """ChannelConfig for a named limit model.

    RAYLEIGH: mu=1, kappa=KAPPA_EPS, m=M_LARGE. RICIAN: mu=1, kappa=k_factor (linear),
    m=M_LARGE. NAKAGAMI: mu=nakagami_m, kappa=KAPPA_EPS, m=M_LARGE. GENERAL: mu, kappa, m
    as given.
    """
    model = model if isinstance(model, LimitModel) else LimitModel(str(model).lower())
    if model is LimitModel.RAYLEIGH:
        mu, kappa, m = 1.0, KAPPA_EPS, M_LARGE
    elif model is LimitModel.RICIAN:
        if k_factor is None or not k_factor > 0:
            raise ConfigError("RICIAN needs a positive k_factor")
        mu, kappa, m = 1.0, float(k_factor), M_LARGE
    elif model is LimitModel.NAKAGAMI:
        if nakagami_m is None or not nakagami_m > 0:
            raise ConfigError("NAKAGAMI needs a positive nakagami_m")
        mu, kappa, m = float(nakagami_m), KAPPA_EPS, M_LARGE
    elif None in (mu, kappa, m):
        raise ConfigError("GENERAL needs mu, kappa and m")
    return ChannelConfig(n_branches=n_branches, mu=mu, kappa=kappa, m=m, rho=rho,
                         mean_snr=mean_snr, **extra)


def limit_model_from_db(model, *, mean_snr_db, k_factor_db=None, kappa_db=None, **kw):
    """Same as ``limit_model_config`` with dB inputs converted once."""
    if k_factor_db is not None:
        kw["k_factor"] = db_to_linear(k_factor_db)
    if kappa_db is not None:
        kw["kappa"] = db_to_linear(kappa_db)
    return limit_model_config(model, mean_snr=db_to_linear(mean_snr_db), **kw)
