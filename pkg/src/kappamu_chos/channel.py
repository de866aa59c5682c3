"""Channel configuration, shadowing correlation matrix, derived parameters and
the series coefficients of the correlated kappa-mu shadowed MRC output SNR.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

KAPPA_EPS = 1e-6
DEFAULT_SERIES_TOL = 1e-12
DEFAULT_K_MAX = 20000


class ConfigError(ValueError):
    """Invalid channel configuration."""


class DegenerateConfigError(ConfigError):
    """Derived quantities are undefined for this configuration."""


class TruncationWarning(RuntimeWarning):
    """Coefficient series hit k_max before reaching the requested tolerance."""


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class ChannelConfig:
    """Channel and system parameters; all quantities linear (not dB).

    ``mu`` and ``kappa`` may be given as scalars and are broadcast to every branch.
    """

    n_branches: int
    mu: tuple
    kappa: tuple
    m: float
    rho: float
    mean_snr: float
    series_tol: float = DEFAULT_SERIES_TOL
    k_max: int = DEFAULT_K_MAX

    def __post_init__(self):
        n = self.n_branches
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ConfigError(f"n_branches must be an integer >= 1, got {n!r}")
        mu = _broadcast(self.mu, n, "mu")
        kappa = _broadcast(self.kappa, n, "kappa")
        object.__setattr__(self, "n_branches", int(n))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kappa", kappa)
        if any(not (x > 0 and math.isfinite(x)) for x in mu):
            raise ConfigError(f"all mu_i must be positive, got {mu}")
        if any(not (x >= 0 and math.isfinite(x)) for x in kappa):
            raise ConfigError(f"all kappa_i must be >= 0, got {kappa}")
        if not (self.m > 0 and math.isfinite(self.m)):
            raise ConfigError(f"m must be positive, got {self.m!r}")
        if not 0 <= self.rho < 1:
            raise ConfigError(f"rho must lie in [0, 1), got {self.rho!r}")
        if not (self.mean_snr > 0 and math.isfinite(self.mean_snr)):
            raise ConfigError(f"mean_snr must be positive, got {self.mean_snr!r}")
        if not self.series_tol > 0:
            raise ConfigError("series_tol must be positive")
        if int(self.k_max) < 1:
            raise ConfigError("k_max must be >= 1")
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "mean_snr", float(self.mean_snr))
        object.__setattr__(self, "k_max", int(self.k_max))

    def replace(self, **changes):
        d = self.as_dict()
        d.update(changes)
        return ChannelConfig(**d)

    def as_dict(self):
        return {
            "n_branches": self.n_branches,
            "mu": list(self.mu),
            "kappa": list(self.kappa),
            "m": self.m,
            "rho": self.rho,
            "mean_snr": self.mean_snr,
            "series_tol": self.series_tol,
            "k_max": self.k_max,
        }

    def fingerprint(self):
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_document(cls, doc):
        """Build from the JSON-style document used by the CLI.

        Keys: ``nr``, ``mu``, ``kappa_db`` (or linear ``kappa``), ``m``, ``rho``,
        ``mean_snr_db`` (or linear ``mean_snr``), optional ``series_tol``, ``k_max``.
        """
        doc = dict(doc)
        known = {"nr", "mu", "kappa_db", "kappa", "m", "rho", "mean_snr_db", "mean_snr",
                 "series_tol", "k_max"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            nr = doc["nr"]
            if "kappa_db" in doc and "kappa" in doc:
                raise ConfigError("give either kappa_db or kappa, not both")
            if "kappa_db" in doc:
                kappa = db_to_linear(doc["kappa_db"]).tolist()
            else:
                kappa = doc["kappa"]
            if "mean_snr_db" in doc:
                mean_snr = float(db_to_linear(doc["mean_snr_db"]))
            else:
                mean_snr = doc["mean_snr"]
            return cls(
                n_branches=nr,
                mu=doc["mu"],
                kappa=kappa,
                m=doc["m"],
                rho=doc.get("rho", 0.0),
                mean_snr=mean_snr,
                series_tol=doc.get("series_tol", DEFAULT_SERIES_TOL),
                k_max=doc.get("k_max", DEFAULT_K_MAX),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config key {exc.args[0]!r}") from None


CONFIG_SCHEMA_HELP = """\
config document (JSON object):
  nr           integer >= 1            number of receive branches
  mu           number or [numbers]     clusters per branch (> 0)
  kappa_db     number or [numbers]     dominant/scatter power ratio in dB
               (alternatively "kappa": linear, >= 0)
  m            number > 0              shadowing severity
  rho          number in [0, 1)        one-step shadowing correlation
  mean_snr_db  number                  average SNR in dB (or "mean_snr": linear)
  series_tol   number > 0   (optional, default 1e-12)
  k_max        integer >= 1 (optional, default 20000)
"""


def _broadcast(x, n, name):
    if np.ndim(x) == 0:
        return (float(x),) * n
    vals = tuple(float(v) for v in x)
    if len(vals) != n:
        raise ConfigError(f"{name} has {len(vals)} entries but n_branches = {n}")
    return vals


@dataclass(frozen=True)
class CorrelationMatrix:
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def size(self):
        return self.entries.shape[0]


def build_correlation_matrix(rho, n):
    """Exponential profile: entry (i, j) = sqrt(rho**|i-j|) = rho**(|i-j|/2)."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ConfigError(f"n must be an integer >= 1, got {n!r}")
    if not 0 <= rho < 1:
        raise ConfigError(f"rho must lie in [0, 1), got {rho!r}")
    idx = np.arange(n)
    lag = np.abs(idx[:, None] - idx[None, :])
    if rho == 0:
        c = (lag == 0).astype(float)
    else:
        c = rho ** (lag / 2.0)
    return CorrelationMatrix(c)


@dataclass(frozen=True)
class DerivedParams:
    A: float
    eta: float
    U: float
    alpha: float
    alpha_bar: float
    lambda_min: float
    lambda_all: tuple
    m: float
    n_branches: int
    c0: float
    log_A: float
    log_c0: float

    @property
    def m_base(self):
        """m * N_R, the first hypergeometric parameter m_0."""
        return self.m * self.n_branches

    @property
    def lambda_frac(self):
        """lambda / (1 + lambda)."""
        return self.lambda_min / (1.0 + self.lambda_min)

    @property
    def convergence_abscissa(self):
        """Largest p for which E[exp(p * gamma)] is finite: alpha / (1 + max lambda_i)."""
        return self.alpha / (1.0 + max(self.lambda_all))

    def m_k(self, k):
        return self.m_base + np.asarray(k)

    def ratios(self):
        """c_i = 1 - lambda / lambda_i, each in [0, 1)."""
        lam = np.asarray(self.lambda_all)
        return 1.0 - self.lambda_min / lam


def effective_kappa(kappa, eps=KAPPA_EPS):
    return tuple(k if k > 0 else eps for k in kappa)


def derive_params(config: ChannelConfig, kappa_eps=KAPPA_EPS) -> DerivedParams:
    n = config.n_branches
    mu = np.asarray(config.mu)
    kappa = np.asarray(effective_kappa(config.kappa, kappa_eps))
    m = config.m
    corr = build_correlation_matrix(config.rho, n).entries
    d = mu * kappa / m
    # D C is similar to the symmetric D^1/2 C D^1/2
    sq = np.sqrt(d)
    sym = sq[:, None] * corr * sq[None, :]
    try:
        lam = np.linalg.eigvalsh(sym)
    except np.linalg.LinAlgError as exc:
        raise DegenerateConfigError(f"eigen-decomposition of DC failed: {exc}") from None
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        bad = int(np.argmin(lam))
        raise DegenerateConfigError(
            f"eigenvalue {bad} of DC is {lam[bad]!r} (must be > 0); check branch {bad} "
            f"(mu={mu[bad]}, kappa={kappa[bad]}) and rho={config.rho}")
    lam_min = float(lam.min())
    log_A = float(m * np.sum(np.log(lam_min / lam)))
    eta = float(np.sum(mu * (1.0 + kappa)))
    U = float(np.sum(mu))
    alpha = eta / config.mean_snr
    alpha_bar = alpha / (1.0 + lam_min)
    log_c0 = log_A + U * math.log(alpha) - m * n * math.log1p(lam_min) - math.lgamma(U)
    return DerivedParams(
        A=math.exp(log_A),
        eta=eta,
        U=U,
        alpha=alpha,
        alpha_bar=alpha_bar,
        lambda_min=lam_min,
        lambda_all=tuple(float(x) for x in lam),
        m=m,
        n_branches=n,
        c0=math.exp(log_c0),
        log_A=log_A,
        log_c0=log_c0,
    )


class Variant(str, enum.Enum):
    TILDE = "tilde"  # carries (1 + lambda)^-k, used by the PDF and MGF
    BAR = "bar"  # plain recursion, used by the approximations


class MPlacement(str, enum.Enum):
    RECURSION = "recursion"  # m/k per recursion step
    PREFACTOR = "prefactor"  # 1/k per step, single m in the normalizing constant


# Selected by the normalization check (tests/test_channel.py::test_m_placement_selection).
M_PLACEMENT = MPlacement.RECURSION

_RESCALE = 1e250


@dataclass(frozen=True)
class CoefficientSeries:
    variant: Variant
    log_values: np.ndarray
    k_used: int
    tail_estimate: float
    placement: MPlacement = M_PLACEMENT

    def __post_init__(self):
        lv = np.array(self.log_values, dtype=float)
        lv.setflags(write=False)
        object.__setattr__(self, "log_values", lv)

    @property
    def values(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_values)

    def __len__(self):
        return self.log_values.size


def delta_coefficients(params: DerivedParams, variant=Variant.TILDE, tol=DEFAULT_SERIES_TOL,
                       k_max=DEFAULT_K_MAX, placement=None) -> CoefficientSeries:
    """delta_k = (m/k) sum_{q=1..k} g_q delta_{k-q}, delta_0 = 1, g_q = sum_i (1 - lambda/lambda_i)^q.

    TILDE returns delta_k (1 + lambda)^-k. The recursion is run on a rescaled
    copy so very large m (limit models) cannot overflow; the values are
    returned as logarithms. Truncation stops at the first k whose term in the
    p = 0 MGF sum (proportional to delta_k) is below ``tol`` times the partial
    sum, or at ``k_max`` with a TruncationWarning.
    """
    variant = Variant(variant)
    placement = MPlacement(placement or M_PLACEMENT)
    fac = params.m if placement is MPlacement.RECURSION else 1.0
    c = params.ratios()
    c = c[c > 0]
    v = np.zeros(k_max + 1)
    v[0] = 1.0
    logv = np.full(k_max + 1, -np.inf)
    logv[0] = 0.0
    log_scale = 0.0
    partial = 1.0
    k_used = 0
    tail = 0.0
    if c.size:
        q = np.arange(1, k_max + 1)
        with np.errstate(under="ignore"):
            g = np.exp(q[:, None] * np.log(c)[None, :]).sum(axis=1)
        g = np.concatenate([[0.0], g])
        tail = 1.0
        for k in range(1, k_max + 1):
            val = fac / k * np.dot(g[1:k + 1], v[k - 1::-1][:k])
            if not math.isfinite(val):
                raise OverflowError(
                    f"coefficient {k} is non-finite; rescale the configuration (smaller m or rho)")
            v[k] = val
            if val > 0:
                logv[k] = math.log(val) + log_scale
            partial += val
            k_used = k
            tail = val / partial
            if partial > _RESCALE:
                v[:k + 1] /= _RESCALE
                partial /= _RESCALE
                log_scale += math.log(_RESCALE)
            if tail < tol:
                break
        else:
            warnings.warn(
                f"coefficient series reached k_max={k_max} with relative tail {tail:.3e} > tol={tol:g}",
                TruncationWarning, stacklevel=2)
    logv = logv[:k_used + 1]
    if variant is Variant.TILDE:
        logv = logv - np.arange(k_used + 1) * math.log1p(params.lambda_min)
    return CoefficientSeries(variant, logv, k_used, float(tail), placement=placement)
