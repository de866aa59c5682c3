"""Real-argument special functions: log-gamma, 1F1, 2F1, Tricomi U (Psi), E1.

Accuracy targets (relative): log_gamma 1e-12 on (0, 500], kummer_1f1 1e-10 for
z in [0, 700], gauss_2f1 1e-10 on [0, 1), tricomi_psi 1e-9, exp_integral_e1 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import QuadratureSpec, integrate_semiinfinite

EULER_GAMMA = 0.57721566490153286060651209


@dataclass(frozen=True)
class AccuracyContract:
    target_relative_error: float = 1e-12
    domains: dict = field(default_factory=lambda: {
        "log_gamma": "0 < x <= 500",
        "kummer_1f1": "b > 0, 0 <= z <= 700",
        "gauss_2f1": "0 <= z < 1",
        "tricomi_psi": "a > 0, z > 0",
        "exp_integral_e1": "x > 0",
    })

    def __post_init__(self):
        if not self.target_relative_error > 0:
            raise ValueError("target_relative_error must be positive")


CONTRACTS = {
    "log_gamma": AccuracyContract(1e-12),
    "kummer_1f1": AccuracyContract(1e-10),
    "gauss_2f1": AccuracyContract(1e-10),
    "tricomi_psi": AccuracyContract(1e-9),
    "exp_integral_e1": AccuracyContract(1e-12),
}


def log_gamma(x):
    if x <= 0:
        raise ValueError(f"log_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)


def _is_nonpos_int(x):
    return x <= 0 and float(x).is_integer()


# ---------------------------------------------------------------- 1F1


def log_kummer_1f1(a, b, z, chunk=512):
    """log 1F1(a; b; z) for a >= 0, b > 0 and array z >= 0.

    All series terms are non-negative, so the sum is accumulated in log space
    with no cancellation and no overflow.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if a < 0 or b <= 0:
        raise ValueError("log_kummer_1f1 needs a >= 0 and b > 0")
    if np.any(z < 0):
        raise ValueError("log_kummer_1f1 needs z >= 0")
    out = np.zeros_like(z)
    pos = z > 0
    if a == 0 or not pos.any():
        return out
    zp = z[pos]
    logz = np.log(zp)
    acc = np.zeros_like(zp)  # log of partial sum, starts with the j=0 term (=1)
    logt = np.zeros_like(zp)
    j0 = 0
    while True:
        j = np.arange(j0, j0 + chunk, dtype=float)
        step = np.log(a + j) - np.log(b + j) - np.log1p(j)
        lt = logt[:, None] + np.cumsum(step)[None, :] + logz[:, None] * (j - j0 + 1)[None, :]
        hi = np.maximum(acc, lt.max(axis=1))
        acc = hi + np.log(np.exp(acc - hi) + np.exp(lt - hi[:, None]).sum(axis=1))
        logt = lt[:, -1]
        j0 += chunk
        # past the peak and the last term negligible for every z
        ratio_ok = (a + j0) * zp / ((b + j0) * (j0 + 1)) < 0.5
        if np.all(ratio_ok & (logt - acc < -40.0)):
            break
        if j0 > 10_000_000:
            raise ArithmeticError("1F1 series did not converge")
    out[pos] = acc
    return out


def kummer_1f1(a, b, z):
    """Confluent hypergeometric function 1F1(a; b; z) for real a, b > 0, z >= 0."""
    if b <= 0 and _is_nonpos_int(b):
        raise ValueError("1F1 undefined for non-positive integer b")
    if z < 0:
        # Kummer transformation to a non-negative argument
        return math.exp(z) * kummer_1f1(b - a, b, -z)
    if z == 0 or a == 0:
        return 1.0
    if a == b:
        return math.exp(z)
    if a > 0 and b > 0:
        lv = float(log_kummer_1f1(a, b, z)[0])
        if lv > 709.7:
            raise OverflowError(f"1F1({a}, {b}, {z}) overflows; use log_kummer_1f1")
        return math.exp(lv)
    if _is_nonpos_int(a):
        return _terminating_1f1(int(-a), b, z)
    # a < 0 non-integer: only the first ceil(-a) terms alternate; the sum is
    # dominated by the later same-signed terms, so the plain series is safe
    return _signed_1f1_series(a, b, z)


def _signed_1f1_series(a, b, z, chunk=512):
    total = 1.0
    term = 1.0
    j0 = 0
    while True:
        j = np.arange(j0, j0 + chunk, dtype=float)
        ratios = (a + j) / ((b + j) * (j + 1)) * z
        terms = term * np.cumprod(ratios)
        total += math.fsum(terms)
        term = terms[-1]
        j0 += chunk
        if not math.isfinite(total):
            raise OverflowError(f"1F1({a}, {b}, {z}) overflows; use log_kummer_1f1")
        if abs(term) < 1e-17 * abs(total) and abs(ratios[-1]) < 0.5:
            return total
        if j0 > 10_000_000:
            raise ArithmeticError("1F1 series did not converge")


def _terminating_1f1(n, b, z):
    term, total = 1.0, 1.0
    for j in range(n):
        term *= (-n + j) * z / ((b + j) * (j + 1))
        total += term
    return total


# ---------------------------------------------------------------- 2F1


def gauss_2f1(a, b, c, z):
    """Gauss hypergeometric 2F1(a, b; c; z) for 0 <= z < 1."""
    if _is_nonpos_int(c):
        raise ValueError("2F1 undefined for non-positive integer c")
    if not 0 <= z < 1:
        raise ValueError(f"gauss_2f1 needs 0 <= z < 1, got {z!r}")
    if z == 0 or a == 0 or b == 0:
        return 1.0
    if b == c:
        return (1 - z) ** (-a)
    if a == c:
        return (1 - z) ** (-b)
    s = c - a - b
    if z > 0.9 and abs(s - round(s)) > 1e-6 and not (_is_nonpos_int(a) or _is_nonpos_int(b)):
        return _2f1_one_minus_z(a, b, c, z)
    return _2f1_series(a, b, c, z)


def _2f1_series(a, b, c, z, chunk=1024):
    total = 1.0
    term = 1.0
    j0 = 0
    while True:
        j = np.arange(j0, j0 + chunk, dtype=float)
        ratios = (a + j) * (b + j) / ((c + j) * (j + 1)) * z
        terms = term * np.cumprod(ratios)
        total += math.fsum(terms)
        term = terms[-1]
        j0 += chunk
        if term == 0 or (abs(term) < 1e-17 * abs(total) and abs(ratios[-1]) < 1):
            return total
        if j0 > 20_000_000:
            raise ArithmeticError("2F1 series did not converge")


def _rgamma(x):
    if _is_nonpos_int(x):
        return 0.0
    return 1.0 / math.gamma(x)


def _2f1_one_minus_z(a, b, c, z):
    # z -> 1 - z connection formula, valid when c - a - b is not an integer
    w = 1.0 - z
    s = c - a - b
    t1 = math.gamma(c) * math.gamma(s) * _rgamma(c - a) * _rgamma(c - b)
    t2 = math.gamma(c) * math.gamma(-s) * _rgamma(a) * _rgamma(b)
    f1 = _2f1_series(a, b, 1 - s, w) if t1 != 0 else 0.0
    f2 = _2f1_series(c - a, c - b, 1 + s, w) if t2 != 0 else 0.0
    return t1 * f1 + t2 * w**s * f2


def hyp2f1_positive(a, b, c, z):
    """Vectorized 2F1 over an array of first parameters ``a`` (a, b, c > 0, 0 <= z < 1).

    All terms are positive so plain summation is exact to rounding; used for
    the weighted sums where the same (b, c, z) is shared across many ``a``.
    """
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0) or b < 0 or c <= 0 or not 0 <= z < 1:
        raise ValueError("hyp2f1_positive needs a, c > 0, b >= 0 and 0 <= z < 1")
    if b == 0 or z == 0:
        return np.ones_like(a)
    total = np.ones_like(a)
    term = np.ones_like(a)
    j0 = 0
    chunk = 256
    while True:
        j = np.arange(j0, j0 + chunk, dtype=float)
        ratios = (a[:, None] + j) * (b + j) / ((c + j) * (j + 1)) * z
        terms = term[:, None] * np.cumprod(ratios, axis=1)
        total += terms.sum(axis=1)
        term = terms[:, -1]
        j0 += chunk
        if np.all((term < 1e-17 * total) & (ratios[:, -1] < 1)):
            return total
        if j0 > 10_000_000:
            raise ArithmeticError("2F1 series did not converge")


def log_hyp2f1_positive(a, b, c, z, chunk=256):
    """log 2F1(a, b; c; z) over an array ``a`` (a, b, c > 0, 0 <= z < 1), in log space."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if np.any(a <= 0) or b < 0 or c <= 0 or not 0 <= z < 1:
        raise ValueError("log_hyp2f1_positive needs a, c > 0, b >= 0 and 0 <= z < 1")
    out = np.zeros_like(a)
    if b == 0 or z == 0:
        return out
    logz = math.log(z)
    logt = np.zeros_like(a)
    active = np.arange(a.size)
    j0 = 0
    while active.size:
        j = np.arange(j0, j0 + chunk, dtype=float)
        aa = a[active, None]
        step = np.log(aa + j) + np.log(b + j) - np.log(c + j) - np.log1p(j) + logz
        lt = logt[active, None] + np.cumsum(step, axis=1)
        out[active] = np.logaddexp(out[active], np.logaddexp.reduce(lt, axis=1))
        logt[active] = lt[:, -1]
        j0 += chunk
        # geometric bound on the tail once the term ratio r is below 1
        r = np.exp(np.minimum(step[:, -1], 0.0))
        tail = logt[active] + np.log(r) - np.log1p(-np.minimum(r, 1 - 1e-16))
        done = (step[:, -1] < 0) & (tail - out[active] < -40.0)
        active = active[~done]
        if j0 > 50_000_000:
            raise ArithmeticError("2F1 series did not converge")
    return out


# ---------------------------------------------------------------- Tricomi Psi

_PSI_QUAD = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-13, max_subdivisions=4000, split_point=50.0)


def tricomi_psi(a, b, z, spec=None):
    """Tricomi confluent hypergeometric function Psi(a, b; z), a > 0, z > 0.

    Uses Psi = z**-a / Gamma(a) * int_0^inf e^-s s^(a-1) (1 + s/z)^(b-a-1) ds,
    which holds for any real b, so no special handling of integer b is needed.
    ``b`` may be an array; all entries share one adaptive mesh.
    """
    if a <= 0 or z <= 0:
        raise ValueError("tricomi_psi needs a > 0 and z > 0")
    bb = np.atleast_1d(np.asarray(b, dtype=float))
    expo = bb - a - 1.0

    def f(s):
        s = np.asarray(s)
        base = np.log1p(s / z)
        return np.exp(-s[:, None] + (a - 1) * np.log(s)[:, None] + base[:, None] * expo[None, :])

    val = integrate_semiinfinite(f, spec or _PSI_QUAD, singularity=min(a, 1.0))
    out = val * math.exp(-a * math.log(z) - math.lgamma(a))
    return out if np.ndim(b) else float(out[0])


# ---------------------------------------------------------------- E1


def exp_integral_e1(x):
    """Exponential integral E1(x) = int_x^inf e^-t / t dt, x > 0."""
    if x <= 0:
        raise ValueError(f"exp_integral_e1 needs x > 0, got {x!r}")
    if x <= 1.0:
        # -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
        total = 0.0
        term = 1.0
        for k in range(1, 60):
            term *= -x / k
            total += term / k
            if abs(term) < 1e-18:
                break
        return -EULER_GAMMA - math.log(x) - total
    # modified Lentz continued fraction
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x)
