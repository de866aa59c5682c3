"""SNR sweeps of capacity reliability, the minimum-reliability finder and the
limit-model cross-comparison over the shadowing correlation rho."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelConfig, db_to_linear
from .mc import LimitModel, limit_model_config
from .numerics import minimize_scalar
from .statistics import CapacityStats, Method, capacity_stats, context_for_method

SWEEP_HEADER = ("snr_db", "lambda1", "lambda2", "aod", "reliability")
COMPARE_HEADER = ("rho", "model", "r_min", "snr_at_min_db")
DEFAULT_SNR_RANGE = (-10.0, 40.0)
DEFAULT_POINTS = 101


def fmt(x):
    """12 significant digits; missing values as an empty field."""
    if isinstance(x, str):
        return x
    if x is None or not math.isfinite(x):
        return ""
    return f"{x:.12g}"


def write_csv(header, rows, fh=None):
    own = fh is None
    fh = io.StringIO() if own else fh
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return fh.getvalue() if own else None


def evaluate(config: ChannelConfig, method=Method.EXACT_MGF) -> CapacityStats:
    return capacity_stats(context_for_method(config, method), method)


def reliability_at(config: ChannelConfig, snr_db, method=Method.EXACT_MGF):
    return evaluate(config.replace(mean_snr=float(db_to_linear(snr_db))), method).reliability


@dataclass(frozen=True)
class SweepResult:
    snr_grid_db: list
    reliability: list
    lambda1: list
    lambda2: list
    aod: list
    method: Method
    config_fingerprint: str
    failures: list = field(default_factory=list)

    def __post_init__(self):
        n = len(self.snr_grid_db)
        if any(len(x) != n for x in (self.reliability, self.lambda1, self.lambda2, self.aod)):
            raise ValueError("sweep columns differ in length")
        if np.any(np.diff(self.snr_grid_db) <= 0):
            raise ValueError("sweep grid must be strictly increasing")

    def rows(self):
        return zip(self.snr_grid_db, self.lambda1, self.lambda2, self.aod, self.reliability)

    def to_csv(self, fh=None):
        return write_csv(SWEEP_HEADER, self.rows(), fh)

    def interior_minima(self):
        """Indices of strict local minima of the reliability curve away from the ends."""
        r = np.asarray(self.reliability, dtype=float)
        return [i for i in range(1, r.size - 1) if r[i] < r[i - 1] and r[i] < r[i + 1]]


def _map(fn, items, workers):
    # results come back in input order regardless of completion order
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def reliability_sweep(config: ChannelConfig, snr_lo_db=DEFAULT_SNR_RANGE[0],
                      snr_hi_db=DEFAULT_SNR_RANGE[1], points=DEFAULT_POINTS,
                      method=Method.EXACT_MGF, workers=1) -> SweepResult:
    """Capacity statistics on an evenly spaced dB grid; failed points become NaN."""
    if not snr_lo_db < snr_hi_db:
        raise ValueError("need snr_lo_db < snr_hi_db")
    if points < 2:
        raise ValueError("need at least 2 points")
    method = Method(method)
    grid = np.linspace(snr_lo_db, snr_hi_db, points)

    def one(s):
        try:
            return evaluate(config.replace(mean_snr=float(db_to_linear(s))), method), None
        except (ArithmeticError, ValueError) as exc:
            return None, f"{s:.6g} dB: {type(exc).__name__}: {exc}"

    out = _map(one, grid, workers)
    nan = float("nan")
    stats = [o[0] for o in out]
    col = lambda name: [getattr(s, name) if s else nan for s in stats]  # noqa: E731
    return SweepResult([float(g) for g in grid], col("reliability"), col("lambda1"),
                       col("lambda2"), col("aod"), method, config.fingerprint(),
                       [o[1] for o in out if o[1]])


@dataclass(frozen=True)
class MinReliabilityPoint:
    snr_db: float
    reliability_min: float
    boundary_flag: bool


def find_min_reliability(config: ChannelConfig | None = None, snr_lo_db=DEFAULT_SNR_RANGE[0],
                         snr_hi_db=DEFAULT_SNR_RANGE[1], method=Method.EXACT_MGF,
                         reliability_fn=None, tol=0.01) -> MinReliabilityPoint:
    """16-point scan then golden-section refinement of R(snr_db) to ``tol`` dB.

    ``reliability_fn`` (snr_db -> R) replaces the channel evaluation when given.
    """
    if reliability_fn is None:
        if config is None:
            raise ValueError("need a config or a reliability_fn")
        reliability_fn = lambda s: reliability_at(config, s, method)  # noqa: E731
    res = minimize_scalar(reliability_fn, snr_lo_db, snr_hi_db, tol=tol, prescan=16)
    return MinReliabilityPoint(res.x_star, res.f_star, res.boundary)


@dataclass(frozen=True)
class SharedSettings:
    """Settings shared by the four models in the cross-comparison."""

    n_branches: int = 2
    k_factor_db: float = 5.0
    kappa_db: float = 10.0
    mu: float = 2.5
    m: float = 2.0
    nakagami_m: float = 2.0
    snr_lo_db: float = DEFAULT_SNR_RANGE[0]
    snr_hi_db: float = DEFAULT_SNR_RANGE[1]

    def config(self, model, rho):
        model = LimitModel(model)
        return limit_model_config(
            model, n_branches=self.n_branches, rho=rho, mean_snr=1.0,
            k_factor=float(db_to_linear(self.k_factor_db)), nakagami_m=self.nakagami_m,
            mu=self.mu, kappa=float(db_to_linear(self.kappa_db)), m=self.m)


MODELS = (LimitModel.RAYLEIGH, LimitModel.RICIAN, LimitModel.NAKAGAMI, LimitModel.GENERAL)


@dataclass(frozen=True)
class ModelComparison:
    rho_grid: list
    rows: dict  # LimitModel -> list of MinReliabilityPoint (one per rho)
    failures: list = field(default_factory=list)

    def r_min(self, model):
        return np.array([p.reliability_min for p in self.rows[LimitModel(model)]])

    def snr_at_min(self, model):
        return np.array([p.snr_db for p in self.rows[LimitModel(model)]])

    def table(self):
        for model in self.rows:
            for rho, p in zip(self.rho_grid, self.rows[model]):
                yield rho, model.value, p.reliability_min, p.snr_db

    def to_csv(self, fh=None):
        return write_csv(COMPARE_HEADER, self.table(), fh)


def compare_models(rho_grid, shared: SharedSettings | None = None, models=MODELS,
                   method=Method.EXACT_MGF, workers=1) -> ModelComparison:
    shared = shared or SharedSettings()
    rho_grid = [float(r) for r in rho_grid]
    if any(not 0 <= r < 1 for r in rho_grid):
        raise ValueError("rho_grid must lie in [0, 1)")
    cells = [(LimitModel(m), r) for m in models for r in rho_grid]
    nan = float("nan")

    def one(cell):
        model, rho = cell
        try:
            return find_min_reliability(shared.config(model, rho), shared.snr_lo_db,
                                        shared.snr_hi_db, method), None
        except (ArithmeticError, ValueError) as exc:
            return MinReliabilityPoint(nan, nan, False), f"{model.value} rho={rho}: {exc}"

    out = _map(one, cells, workers)
    rows = {LimitModel(m): [] for m in models}
    for (model, _), (pt, _) in zip(cells, out):
        rows[model].append(pt)
    return ModelComparison(rho_grid, rows, [o[1] for o in out if o[1]])
