"""Quadrature on [0, inf), one-sided derivatives at zero, bracketed 1-D minimization.

All integrands and objectives here are plain callables. The quadrature routine
expects a *vectorized* integrand: it receives a 1-D array of abscissae and must
return an array whose leading axis matches it (extra trailing axes make the
integrand vector-valued; every component shares the same adaptive mesh).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "AccuracyError",
    "QuadratureSpec",
    "DifferentiationPlan",
    "DerivativeEstimate",
    "BracketedMinimum",
    "integrate_interval",
    "integrate_semiinfinite",
    "derivative_at_zero",
    "minimize_scalar",
]


class AccuracyError(ArithmeticError):
    """Requested accuracy could not be reached; carries what was achieved."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


# QUADPACK qk21 abscissae / weights on [-1, 1] (positive half, centre last).
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208745775380,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# full 21-point rule, ordered left to right
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
G_WEIGHTS = np.zeros(21)
_gauss_pos = [1, 3, 5, 7, 9]  # indices into _XGK that are Gauss-10 nodes
for _w, _i in zip(_WG, _gauss_pos):
    G_WEIGHTS[_i] = _w
    G_WEIGHTS[20 - _i] = _w


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-14
    rel_tol: float = 1e-12
    max_subdivisions: int = 4000
    split_point: float = 50.0

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.split_point <= 0:
            raise ValueError("split_point must be positive")
        if self.max_subdivisions < 2:
            raise ValueError("max_subdivisions must be >= 2")


def integrate_interval(f, a, b, abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=4000,
                       initial=1, full_output=False):
    """Globally adaptive Gauss-Kronrod (10/21) quadrature of ``f`` over ``[a, b]``.

    Every refinement pass bisects the set of intervals carrying the largest
    error contributions and evaluates all new nodes in a single call to ``f``.
    The per-interval error is the raw ``|K21 - G10|`` difference, which is
    pessimistic for smooth integrands.
    """
    edges = np.linspace(a, b, initial + 1)
    lo, hi = edges[:-1], edges[1:]
    vals, errs = _gk_eval(f, lo, hi)
    n_eval = 1
    while True:
        total = vals.sum(axis=0)
        tol = np.maximum(abs_tol, rel_tol * np.abs(total))
        err_total = errs.sum(axis=0)
        if np.all(err_total <= tol):
            break
        if lo.size >= max_subdivisions:
            raise AccuracyError(
                f"subdivision limit {max_subdivisions} reached; "
                f"estimate {total!r} with error bound {err_total!r}",
                estimate=total, error=err_total)
        # scaled error per interval: worst component relative to its tolerance
        scaled = errs / tol
        if scaled.ndim > 1:
            scaled = scaled.reshape(scaled.shape[0], -1).max(axis=1)
        order = np.argsort(scaled)[::-1]
        csum = np.cumsum(scaled[order])
        # bisect the largest contributors until the rest fits comfortably
        need = np.searchsorted(csum, scaled.sum() - 0.25) + 1
        need = max(1, min(need, order.size, max_subdivisions - lo.size))
        pick = np.zeros(lo.size, dtype=bool)
        pick[order[:need]] = True
        mid = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        new_vals, new_errs = _gk_eval(f, new_lo, new_hi)
        n_eval += 1
        keep = ~pick
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], new_vals])
        errs = np.concatenate([errs[keep], new_errs])
    total = vals.sum(axis=0)
    if full_output:
        return total, errs.sum(axis=0)
    return total


def _gk_eval(f, lo, hi):
    half = 0.5 * (hi - lo)
    centre = 0.5 * (hi + lo)
    x = (centre[:, None] + half[:, None] * GK_NODES[None, :]).ravel()
    y = np.asarray(f(x), dtype=float)
    y = y.reshape((lo.size, 21) + y.shape[1:])
    if not np.all(np.isfinite(y)):
        bad = x.reshape(lo.size, 21)[~np.isfinite(y).reshape(lo.size, 21, -1).all(axis=2)]
        raise FloatingPointError(f"non-finite integrand value at x={bad[:3]}")
    scale = half.reshape((-1,) + (1,) * (y.ndim - 2))
    k = np.tensordot(y, GK_WEIGHTS, axes=([1], [0])) if y.ndim == 2 else \
        np.einsum("ij...,j->i...", y, GK_WEIGHTS)
    g = np.tensordot(y, G_WEIGHTS, axes=([1], [0])) if y.ndim == 2 else \
        np.einsum("ij...,j->i...", y, G_WEIGHTS)
    return k * scale, np.abs(k - g) * np.abs(scale)


def integrate_semiinfinite(f, spec=None, singularity=1.0, full_output=False):
    """Integrate ``f`` over ``[0, inf)``.

    ``[0, split]`` is mapped by ``p = split * v**(1/singularity)`` so an endpoint
    behaviour ``p**(singularity - 1)`` becomes smooth in ``v``; ``[split, inf)``
    is mapped by ``p = split / u``.
    """
    spec = spec or QuadratureSpec()
    s = float(singularity)
    if s <= 0:
        raise ValueError("singularity exponent must be positive")
    c = spec.split_point
    if s >= 1.0:
        s = 1.0

    def mapped(x):
        x = np.asarray(x, dtype=float)
        head = x < 1.0
        out = None
        if head.any():
            v = x[head]
            p = c * v ** (1.0 / s)
            jac = c / s * v ** (1.0 / s - 1.0)
            yh = np.asarray(f(p), dtype=float)
            yh = yh * jac.reshape((-1,) + (1,) * (yh.ndim - 1))
            out = np.empty((x.size,) + yh.shape[1:])
            out[head] = yh
        if (~head).any():
            u = 2.0 - x[~head]
            p = c / u
            yt = np.asarray(f(p), dtype=float)
            yt = yt * (c / u**2).reshape((-1,) + (1,) * (yt.ndim - 1))
            if out is None:
                out = np.empty((x.size,) + yt.shape[1:])
            out[~head] = yt
        return out

    return integrate_interval(mapped, 0.0, 2.0, abs_tol=spec.abs_tol, rel_tol=spec.rel_tol,
                              max_subdivisions=spec.max_subdivisions, initial=2,
                              full_output=full_output)


@dataclass(frozen=True)
class DifferentiationPlan:
    """One-sided finite-difference plan for an n-th derivative at zero.

    Steps used are ``step * 2**l`` for ``l = 0..richardson_levels``; ``noise`` is
    the relative accuracy of the function values and only enters the error estimate.
    """

    order: int = 1
    step: float = 1e-3
    richardson_levels: int = 3
    noise: float = 1e-15

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError("only first and second derivatives are supported")
        if self.step <= 0 or self.richardson_levels < 1:
            raise ValueError("step must be positive and richardson_levels >= 1")

    @property
    def max_abscissa(self):
        return self.order * self.step * 2**self.richardson_levels

    def abscissae(self):
        """Distinct evaluation points, zero included."""
        pts = {0.0}
        for lvl in range(self.richardson_levels + 1):
            s = self.step * 2**lvl
            pts.update(j * s for j in range(1, self.order + 1))
        return np.array(sorted(pts))

    def weights(self):
        """Linear functional w such that the estimate is ``w @ g(abscissae())``."""
        pts = self.abscissae()
        n = self.order
        L = self.richardson_levels
        # column 0: forward differences at each step size
        table = []
        for lvl in range(L + 1):
            s = self.step * 2**lvl
            w = np.zeros(pts.size)
            for j in range(n + 1):
                idx = np.searchsorted(pts, j * s)
                w[idx] += (-1) ** (n - j) * math.comb(n, j) / s**n
            table.append(w)
        prev_best = table[0]
        for col in range(1, L + 1):
            fac = 2.0**col
            table = [(fac * table[i] - table[i + 1]) / (fac - 1) for i in range(len(table) - 1)]
            if col == L - 1:
                prev_best = table[0]
        return table[0], prev_best


@dataclass(frozen=True)
class DerivativeEstimate:
    value: float
    error: float

    def __float__(self):
        return float(self.value)


def derivative_at_zero(g, plan=None, vectorized=False):
    """n-th derivative of ``g`` at 0 from values at ``a >= 0`` only.

    Forward differences at steps h, 2h, ..., 2**L h are combined in a Richardson
    tableau. The error estimate is the last tableau correction plus the
    propagated function noise ``noise * sum |w_i g(a_i)|``.

    ``g`` may return arrays (vector-valued); with ``vectorized=True`` it is
    called once with the whole abscissa array.
    """
    plan = plan or DifferentiationPlan()
    pts = plan.abscissae()
    if vectorized:
        vals = np.asarray(g(pts), dtype=float)
    else:
        vals = np.array([np.asarray(g(float(a)), dtype=float) for a in pts])
    finite = np.isfinite(vals)
    if not finite.all():
        bad = pts[~finite.reshape(pts.size, -1).all(axis=1)]
        raise FloatingPointError(f"non-finite function value at a={bad[0]!r}")
    w_best, w_prev = plan.weights()
    best = np.tensordot(w_best, vals, axes=(0, 0))
    prev = np.tensordot(w_prev, vals, axes=(0, 0))
    noise = plan.noise * np.tensordot(np.abs(w_best), np.abs(vals), axes=(0, 0))
    err = np.abs(best - prev) + noise + 4 * np.finfo(float).eps * np.abs(best)
    if np.ndim(best) == 0:
        return DerivativeEstimate(float(best), float(err))
    return DerivativeEstimate(best, err)


@dataclass(frozen=True)
class BracketedMinimum:
    x_star: float
    f_star: float
    iterations: int
    bracket: tuple
    boundary: bool = False


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def minimize_scalar(f: Callable[[float], float], lo, hi, tol=1e-2, prescan=16,
                    max_iter=200) -> BracketedMinimum:
    """Coarse scan + golden-section refinement of a unimodal ``f`` on ``[lo, hi]``.

    If the scan minimum sits on an endpoint that endpoint is returned with
    ``boundary=True``. ``f`` is never evaluated outside ``[lo, hi]``.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    xs = np.linspace(lo, hi, prescan)
    fs = np.array([_checked(f, x) for x in xs])
    i = int(np.argmin(fs))
    if i == 0 or i == prescan - 1:
        return BracketedMinimum(float(xs[i]), float(fs[i]), 0, (float(lo), float(hi)), True)
    a, b = float(xs[i - 1]), float(xs[i + 1])
    best_x, best_f = float(xs[i]), float(fs[i])
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = _checked(f, x1), _checked(f, x2)
    it = 0
    while b - a > tol and it < max_iter:
        it += 1
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = _checked(f, x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = _checked(f, x2)
        for x, fx in ((x1, f1), (x2, f2)):
            if fx < best_f:
                best_x, best_f = x, fx
    return BracketedMinimum(best_x, best_f, it, (float(xs[i - 1]), float(xs[i + 1])), False)


def _checked(f, x):
    v = float(f(float(x)))
    if not math.isfinite(v):
        raise FloatingPointError(f"objective is non-finite at x={x!r}")
    return v
