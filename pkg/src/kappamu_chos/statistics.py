"""PDF and MGF of the MRC output SNR, capacity moments (exact, direct and three
asymptotic forms), amount of dispersion and capacity reliability.

Capacity moments are obtained from H(a) = E[(1 + gamma)^-a]: Lambda_n (nats^n)
is (-1)^n times the n-th derivative of H at a = 0. H is evaluated from the MGF as

    H(a) = 1 + (1/Gamma(a)) int_0^inf p^(a-1) e^-p (M(-p) - 1) dp,

which is finite at a = 0, and differentiated one-sidedly (numerics module).
"""

from __future__ import annotations

import dataclasses
import enum
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channel import (
    ChannelConfig,
    CoefficientSeries,
    DerivedParams,
    MPlacement,
    Variant,
    delta_coefficients,
    derive_params,
)
from .numerics import (
    DifferentiationPlan,
    QuadratureSpec,
    derivative_at_zero,
    integrate_semiinfinite,
)
from .specfun import EULER_GAMMA, log_hyp2f1_positive, log_kummer_1f1, tricomi_psi

LN2 = math.log(2.0)
# weights further than this (in log) below the largest one are dropped at evaluation time
_LOG_WEIGHT_FLOOR = 46.0
_CHUNK = 2_000_000


class Method(str, enum.Enum):
    EXACT_MGF = "exact_mgf"
    DIRECT_PDF = "direct_pdf"
    APPROX_A = "approx_a"
    APPROX_B = "approx_b"
    APPROX_C = "approx_c"


class AccuracyWarning(RuntimeWarning):
    pass


class MGFDomainError(ValueError):
    pass


@dataclass(frozen=True)
class CapacityStats:
    lambda1: float
    lambda2: float
    aod: float
    reliability: float
    method: Method

    @classmethod
    def from_moments(cls, lambda1, lambda2, method):
        aod = lambda2 / lambda1 - lambda1
        return cls(float(lambda1), float(lambda2), float(aod), float(1.0 - aod), Method(method))


@dataclass(frozen=True)
class EvaluationContext:
    params: DerivedParams
    coefficients: CoefficientSeries
    quadrature: QuadratureSpec = QuadratureSpec()
    differentiation: DifferentiationPlan = DifferentiationPlan()

    @cached_property
    def _mixture(self):
        """Normalized mixture weights w_k = A delta_k / sum(A delta_j) and their m_k."""
        lv = np.asarray(self.coefficients.log_values)
        if self.coefficients.variant is Variant.TILDE:
            lv = lv + np.arange(lv.size) * math.log1p(self.params.lambda_min)
        keep = np.flatnonzero(lv > lv.max() - _LOG_WEIGHT_FLOOR)
        lw = lv[keep] - np.logaddexp.reduce(lv[keep])
        return lw, self.params.m_base + keep.astype(float)


def make_context(config: ChannelConfig, variant=Variant.TILDE, quadrature=None,
                 differentiation=None, placement=None) -> EvaluationContext:
    params = derive_params(config)
    coeffs = delta_coefficients(params, variant, tol=config.series_tol, k_max=config.k_max,
                                placement=placement)
    return EvaluationContext(params, coeffs, quadrature or QuadratureSpec(),
                             differentiation or DifferentiationPlan())


def _log_c0(ctx):
    lc = ctx.params.log_c0
    if ctx.coefficients.placement is MPlacement.PREFACTOR:
        lc += math.log(ctx.params.m)
    return lc


def _require(ctx, variant):
    if ctx.coefficients.variant is not Variant(variant):
        raise ValueError(
            f"this formula needs {Variant(variant).name} coefficients, context has "
            f"{ctx.coefficients.variant.name}")


# ---------------------------------------------------------------- PDF / MGF


def log_pdf(gamma, ctx: EvaluationContext):
    _require(ctx, Variant.TILDE)
    p = ctx.params
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    if np.any(g <= 0):
        raise ValueError("pdf needs gamma > 0")
    lv = ctx.coefficients.log_values
    x = p.alpha * g * p.lambda_frac
    a0, b = p.m_base, p.U
    log_m = log_kummer_1f1(a0, b, x)
    ratio = np.exp(log_kummer_1f1(a0 + 1, b, x) - log_m)  # 1F1(a+1)/1F1(a)
    base = _log_c0(ctx) - p.alpha * g + (b - 1.0) * np.log(g)
    acc = base + lv[0] + log_m
    for k in range(1, lv.size):
        if k > 1:
            a = a0 + k - 1
            # 1F1 contiguous relation in a, run forward (dominant direction for x > 0)
            ratio = ((2 * a - b + x) + (b - a) / ratio) / a
        log_m = log_m + np.log(ratio)
        acc = np.logaddexp(acc, base + lv[k] + log_m)
    return acc if np.ndim(gamma) else float(acc[0])


def pdf(gamma, ctx: EvaluationContext):
    """f(gamma) = c0 e^(-alpha gamma) gamma^(U-1) sum_k dt_k 1F1(m_k; U; alpha gamma lambda/(1+lambda))."""
    return np.exp(log_pdf(gamma, ctx))


def mgf(p, ctx: EvaluationContext):
    """M(p) = E[exp(p gamma)] = c0 Gamma(U) sum_k dt_k (alpha_bar - p)^-m_k (alpha - p)^(m_k - U).

    Defined for p below the convergence abscissa alpha / (1 + max lambda_i).
    """
    _require(ctx, Variant.TILDE)
    par = ctx.params
    pp = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(pp >= par.convergence_abscissa):
        raise MGFDomainError(
            f"MGF diverges for p >= {par.convergence_abscissa!r} (abscissa of convergence "
            f"alpha/(1+max lambda_i))")
    lv = np.asarray(ctx.coefficients.log_values)
    k = np.arange(lv.size, dtype=float)
    mk = par.m_base + k
    out = np.empty_like(pp)
    la_bar = np.log(par.alpha_bar - pp)
    la = np.log(par.alpha - pp)
    step = max(1, _CHUNK // max(lv.size, 1))
    for s in range(0, pp.size, step):
        sl = slice(s, s + step)
        terms = lv[:, None] - mk[:, None] * la_bar[None, sl] + (mk[:, None] - par.U) * la[None, sl]
        out[sl] = np.logaddexp.reduce(terms, axis=0)
    out = np.exp(out + _log_c0(ctx) + math.lgamma(par.U))
    return out if np.ndim(p) else float(out[0])


def _mgf_minus_one(p, ctx):
    """M(-p)/M(0) - 1 for p >= 0, accurate for small p (expm1 per term)."""
    par = ctx.params
    lw, mk = ctx._mixture
    z = p / par.alpha
    l1 = np.log1p(z)
    l2 = np.log1p((1.0 + par.lambda_min) * z)
    out = np.empty_like(p)
    w = np.exp(lw)
    step = max(1, _CHUNK // max(lw.size, 1))
    for s in range(0, p.size, step):
        sl = slice(s, s + step)
        lt = -par.U * l1[None, sl] + mk[:, None] * (l1[None, sl] - l2[None, sl])
        out[sl] = w @ np.expm1(lt)
    return out


# ---------------------------------------------------------------- H(a) and derivatives


def _plan(ctx, n):
    return dataclasses.replace(ctx.differentiation, order=n, noise=max(ctx.differentiation.noise,
                                                                       ctx.quadrature.rel_tol))


def _h_minus_one(a, ctx):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    out = np.zeros_like(a)
    pos = a > 0
    if pos.any():
        ap = a[pos]

        def f(p):
            base = _mgf_minus_one(p, ctx) * np.exp(-p)
            return base[:, None] * np.exp((ap[None, :] - 1.0) * np.log(p)[:, None])

        integral = integrate_semiinfinite(f, ctx.quadrature, singularity=1.0)
        out[pos] = integral * np.exp(-np.array([math.lgamma(v) for v in ap]))
    return out


def h_transform(a, ctx: EvaluationContext):
    """H(a) = E[(1 + gamma)^-a] from the MGF, for an array of a >= 0."""
    return 1.0 + _h_minus_one(a, ctx)


def _lookup(pts, vals):
    """Callable returning precomputed ``vals`` at stencil points ``pts``."""

    def g(a):
        idx = np.clip(np.searchsorted(pts, a), 1, pts.size - 1)
        idx = np.where(np.abs(pts[idx - 1] - a) < np.abs(pts[idx] - a), idx - 1, idx)
        if not np.allclose(pts[idx], a, rtol=1e-12, atol=0):
            raise KeyError("stencil point was not precomputed")
        return vals[idx]

    return g


def _moments_from_h(h, ctx, orders=(1, 2)):
    res = {}
    for n in orders:
        est = derivative_at_zero(h, _plan(ctx, n), vectorized=True)
        val = (-1) ** n * est.value
        if est.error > 1e-4 * abs(val):
            warnings.warn(f"Lambda_{n} derivative error estimate {est.error:.2e} exceeds "
                          f"1e-4 relative", AccuracyWarning, stacklevel=3)
        res[n] = (val, est.error)
    return res


def _exact_nats(ctx, orders=(1, 2)):
    _require(ctx, Variant.TILDE)
    # one quadrature pass for all orders: evaluate on the union of stencils
    pts = np.unique(np.concatenate([_plan(ctx, n).abscissae() for n in orders]))
    # H - 1 keeps the quadrature noise relative to the varying part
    vals = _h_minus_one(pts, ctx)
    return _moments_from_h(_lookup(pts, vals), ctx, orders)


def chos_exact(n, ctx: EvaluationContext, units="bits"):
    """Lambda_n from the MGF (regularized Schwinger representation)."""
    _check_order(n)
    val, _ = _exact_nats(ctx, (n,))[n]
    return _to_units(val, n, units)


def chos_shortcut(n, ctx: EvaluationContext, units="bits"):
    """Closed derivatives of the regularized H at a = 0 (cross-check route).

    With I(a) = int p^(a-1) e^-p (M(-p) - 1) dp and H = 1 + a I(a) / Gamma(a + 1):
    Lambda_1 = -I(0), Lambda_2 = 2 (I'(0) + gamma_E I(0)) in nats.
    """
    _check_order(n)
    _require(ctx, Variant.TILDE)

    def f(p):
        base = _mgf_minus_one(p, ctx) * np.exp(-p) / p
        return np.stack([base, base * np.log(p)], axis=1)

    i0, i1 = integrate_semiinfinite(f, ctx.quadrature)
    val = -i0 if n == 1 else 2.0 * (i1 + EULER_GAMMA * i0)
    return _to_units(val, n, units)


def _check_order(n):
    if n not in (1, 2):
        raise ValueError("only Lambda_1 and Lambda_2 are supported")


def _to_units(val, n, units):
    if units == "bits":
        return float(val) / LN2**n
    if units == "nats":
        return float(val)
    raise ValueError("units must be 'bits' or 'nats'")


# ---------------------------------------------------------------- direct route


def pdf_integrals(ctx: EvaluationContext, orders=(0, 1, 2)):
    """int_0^inf ln^n(1 + gamma) f(gamma) dgamma for each n in ``orders`` (nats)."""
    par = ctx.params
    orders = np.asarray(orders)

    def f(u):
        g = u / par.alpha
        dens = np.exp(log_pdf(g, ctx)) / par.alpha
        lg = np.log1p(g)
        return dens[:, None] * lg[:, None] ** orders[None, :]

    return integrate_semiinfinite(f, ctx.quadrature, singularity=min(par.U, 1.0))


def chos_direct(n, ctx: EvaluationContext, units="bits"):
    """Lambda_n by quadrature of log^n(1 + gamma) against the PDF."""
    _check_order(n)
    val = pdf_integrals(ctx, (n,))[0]
    return _to_units(val, n, units)


# ---------------------------------------------------------------- approximations


def _bar_weights(ctx):
    _require(ctx, Variant.BAR)
    lw, mk = ctx._mixture
    return np.exp(lw), mk


def h_approx(a, variant, ctx: EvaluationContext):
    """Approximate H(a) for variant 'a', 'b' or 'c' (all normalized to H(0) = 1)."""
    variant = str(variant).lower()
    par = ctx.params
    w, mk = _bar_weights(ctx)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    out = np.ones_like(a)
    pos = np.flatnonzero(a > 0)
    if pos.size == 0:
        return out
    ap = a[pos]
    U, alpha, lam = par.U, par.alpha, par.lambda_min
    if np.any(ap >= U):
        raise ValueError("approximations need a < U")
    if variant == "a":
        # e^-p dropped: each mixture component integrates to E_k[gamma^-a] =
        # alpha^a Gamma(U-a)/Gamma(U) (1+lambda)^-m_k 2F1(m_k, U-a; U; lambda/(1+lambda))
        sig = w > w.max() * 1e-18
        for i, av in zip(pos, ap):
            lf = log_hyp2f1_positive(mk[sig], U - av, U, par.lambda_frac) - mk[sig] * math.log1p(lam)
            pref = math.exp(av * math.log(alpha) + math.lgamma(U - av) - math.lgamma(U))
            out[i] = pref * np.dot(w[sig], np.exp(lf))
        return out
    # Tricomi-function forms, Psi(U, U+1-a-j, alpha) for j = 0, 1, 2
    bs = np.concatenate([U + 1 - ap, U - ap, U - 1 - ap])
    psi = tricomi_psi(U, bs, alpha).reshape(3, ap.size) * alpha**U
    if variant == "c":
        out[pos] = psi[0]
        return out
    if variant == "b":
        s1 = np.dot(w, mk)
        s2 = np.dot(w, mk * (lam * (mk + 1.0) + 2.0))
        out[pos] = (psi[0] - ap * lam / alpha * psi[1] * s1
                    + ap * (ap + 1.0) * lam / (2.0 * alpha**2) * psi[2] * s2)
        return out
    raise ValueError(f"unknown approximation variant {variant!r}")


def chos_approx(n, variant, ctx: EvaluationContext, units="bits"):
    _check_order(n)
    plan = _plan(ctx, n)
    pts = plan.abscissae()
    vals = h_approx(pts, variant, ctx) - 1.0
    est = derivative_at_zero(_lookup(pts, vals), plan, vectorized=True)
    return _to_units((-1) ** n * est.value, n, units)


# ---------------------------------------------------------------- AoD / CR


def capacity_stats(ctx: EvaluationContext, method=Method.EXACT_MGF) -> CapacityStats:
    method = Method(method)
    if method is Method.EXACT_MGF:
        res = _exact_nats(ctx)
        l1, l2 = res[1][0] / LN2, res[2][0] / LN2**2
    elif method is Method.DIRECT_PDF:
        i1, i2 = pdf_integrals(ctx, (1, 2))
        l1, l2 = i1 / LN2, i2 / LN2**2
    else:
        variant = method.value[-1]
        plan2 = _plan(ctx, 2)
        pts = plan2.abscissae()
        vals = h_approx(pts, variant, ctx)
        look = _lookup(pts, vals - 1.0)
        l1 = -derivative_at_zero(look, _plan(ctx, 1), vectorized=True).value / LN2
        l2 = derivative_at_zero(look, plan2, vectorized=True).value / LN2**2
    return CapacityStats.from_moments(l1, l2, method)


def amount_of_dispersion(ctx: EvaluationContext, method=Method.EXACT_MGF):
    """Lambda_2 / Lambda_1 - Lambda_1 (capacity variance over its mean)."""
    return capacity_stats(ctx, method).aod


def capacity_reliability(ctx: EvaluationContext, method=Method.EXACT_MGF):
    return capacity_stats(ctx, method).reliability


def context_for_method(config, method=Method.EXACT_MGF, **kw):
    method = Method(method)
    variant = Variant.TILDE if method in (Method.EXACT_MGF, Method.DIRECT_PDF) else Variant.BAR
    return make_context(config, variant, **kw)
