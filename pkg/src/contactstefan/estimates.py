"""A-priori estimates for the kernels and the contraction windows.

All functions take the hypothesis constants (``CoefficientBounds``) and
return closed-form bounds; none of them looks at a profile.  Functions of
``eta`` broadcast over numpy arrays.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import WindowError
from .special import G, erf

_SQRT_PI = math.sqrt(math.pi)


def _source_prefactor(k, a):
    return k * k / (16.0 * a * a * math.pi ** 2)


def _scaled_h(eta, N, L, z, a):
    """``exp(s^2 z^2) * h(eta, N, L, z)`` with ``s = a sqrt(N/L)``, overflow-free."""
    s = a * math.sqrt(N / L)
    x0 = s * z
    first = (1.0 - G(x0)) / x0
    eta = np.asarray(eta, dtype=float)
    x = s * eta
    with np.errstate(over="ignore", invalid="ignore"):
        rest = np.where(np.isinf(x), 0.0,
                        np.exp(x0 * x0 - np.minimum(x * x, 1e300)) * (1.0 - G(np.where(np.isinf(x), 0.0, x)))
                        / np.where(np.isinf(x), 1.0, x))
    out = first - rest
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# pointwise kernel bounds
# ---------------------------------------------------------------------------

def E_sandwich(eta, lo, b, a):
    """Lower and upper bounds of E on ``[lo, eta]``."""
    d = np.asarray(eta, dtype=float) ** 2 - lo * lo
    return np.exp(-a * a * b.N_M / b.L_m * d), np.exp(-a * a * b.N_m / b.L_M * d)


def chi1_upper(eta, alpha0, b, a):
    return (a / b.L_m) * math.sqrt(b.N_m / b.L_M) * _scaled_h(eta, b.N_m, b.L_M, alpha0, a)


def chi2_lower(eta, xi, b, a):
    return (a / b.L_M) * math.sqrt(b.N_M / b.L_m) * _scaled_h(eta, b.N_M, b.L_m, xi, a)


def chi2_upper(eta, xi, b, a):
    return (a / b.L_m) * math.sqrt(b.N_m / b.L_M) * _scaled_h(eta, b.N_m, b.L_M, xi, a)


def chi2_elementary(eta, xi, b):
    return (1.0 / xi - 1.0 / np.asarray(eta, dtype=float)) / b.L_m


def phi2_upper(xi, b, a, k):
    return _source_prefactor(k, a) * b.K_M / (b.L_m * xi * xi)


# ---------------------------------------------------------------------------
# Lipschitz moduli of the kernels with respect to the profile
# ---------------------------------------------------------------------------

def _liquid_ratio_modulus(b):
    return b.Ntilde1 / b.L_m + b.N_M * b.Ltilde1 / b.L_m ** 2


def _solid_ratio_modulus(b):
    return b.L_M * b.Ntilde2 + b.N_M * b.Ltilde2


def E1_lipschitz(eta, alpha0, b, a):
    eta = np.asarray(eta, dtype=float)
    return a * a * _liquid_ratio_modulus(b) * (eta ** 2 - alpha0 ** 2)


def chi1_lipschitz(eta, alpha0, b, a):
    eta = np.asarray(eta, dtype=float)
    return (a * a / b.L_m * _liquid_ratio_modulus(b) * (eta + alpha0 ** 2 / eta - 2.0 * alpha0)
            + b.Ltilde1 / b.L_m ** 2 * (1.0 / alpha0 - 1.0 / eta))


def E2_lipschitz(eta, xi, b, a):
    d = np.asarray(eta, dtype=float) ** 2 - xi * xi
    return np.exp(-a * a * d * b.N_m / b.L_M) * a * a / b.L_m ** 2 * _solid_ratio_modulus(b) * d


def chi2_lipschitz(eta, xi, b, a):
    eta = np.asarray(eta, dtype=float)
    s = a * math.sqrt(b.N_m / b.L_M)
    coef = (a * b.L_M ** 1.5 * _SQRT_PI / (2.0 * b.L_m ** 4 * math.sqrt(b.N_m))
            * _solid_ratio_modulus(b))
    # exp(s^2 xi^2) (erf(s eta) - erf(s xi)) written through erfc to avoid overflow
    x0 = s * xi
    x = s * eta
    diff = np.exp(x0 * x0) * (np.asarray(erf(x)) - erf(x0)) if x0 < 20 else \
        _erfc_gap_scaled(x0, x)
    return coef * diff + b.Ltilde2 / (b.L_m ** 2 * xi)


def _erfc_gap_scaled(x0, x):
    from .special import erfcx
    x = np.asarray(x, dtype=float)
    return erfcx(x0) - np.exp(x0 * x0 - x * x) * erfcx(x)


def phi1_lipschitz(eta, alpha0, b, a, k):
    """Lipschitz modulus of the liquid source kernel.

    The middle coefficient is ``K_M Ltilde1/L_m^2 + Ktilde1/L_m`` (the sum of
    the two contributions that bound it).
    """
    eta = np.asarray(eta, dtype=float)
    c = _source_prefactor(k, a)
    if c == 0.0:
        return np.zeros_like(eta) if eta.ndim else 0.0
    mod = _liquid_ratio_modulus(b)
    d = eta ** 2 - alpha0 ** 2
    r = alpha0 / eta
    grow_m = np.exp(a * a * b.N_m / b.L_M * d)
    grow_M = np.exp(a * a * b.N_M / b.L_m * d)
    first = (c * b.K_M / b.L_m * a * a * mod * grow_m
             * (np.log(r) + eta / alpha0 + r - 0.5 * r * r - 1.5))
    second = (c * (b.K_M * b.Ltilde1 / b.L_m ** 2 + b.Ktilde1 / b.L_m) * grow_M
              * (0.5 / alpha0 ** 2 + 0.5 / eta ** 2 - 1.0 / (alpha0 * eta)))
    third = (c * b.K_M / b.L_m * a * a * mod * grow_M ** 2
             * (np.log(eta / alpha0) - 0.5 * r * r - 1.5 + 2.0 * r))
    return first + second + third


def phi2_lipschitz(xi, b, a, k):
    """Lipschitz modulus of the solid source kernel (uniform in eta)."""
    c = _source_prefactor(k, a)
    if c == 0.0:
        return 0.0
    gap = b.R - a * a * b.N_M / b.L_m
    mod = _solid_ratio_modulus(b)

    def over_root(numer):
        if numer == 0.0:
            return 0.0
        return numer / math.sqrt(gap) if gap > 0 else math.inf

    first = k * k * b.K_M / (16.0 * math.pi ** 1.5 * b.L_m ** 3) * over_root(mod) / xi
    second = k * k / (16.0 * a * a * math.pi ** 1.5 * b.L_m) * over_root(b.Ktilde2) / xi
    third = c * b.K_M * (a * a * b.L_M / (b.L_m ** 4 * xi) * _SQRT_PI * over_root(mod)
                         + b.Ltilde2 / (b.L_m ** 2 * xi * xi))
    return first + second + third


# ---------------------------------------------------------------------------
# contraction windows
# ---------------------------------------------------------------------------

def epsilon1(z, alpha0, P_star, b, a, k):
    """Contraction bound of the liquid operator on ``[alpha0, z]``.

    Uses the factor 2 on both the chi and Phi moduli.
    """
    return (2.0 * alpha0 ** 2 * P_star * chi1_lipschitz(z, alpha0, b, a)
            + 2.0 * phi1_lipschitz(z, alpha0, b, a, k))


def _epsilon1_vanishes(b, k):
    no_ratio = b.Ntilde1 == 0.0 and b.Ltilde1 == 0.0
    return no_ratio and (k == 0.0 or b.Ktilde1 == 0.0)


def _grow_and_bisect(fn, lo, limit, what):
    hi = lo * 2.0
    while fn(hi) <= 1.0:
        hi *= 2.0
        if hi > limit:
            raise WindowError(f"{what}: no bracket for the window edge below {limit}")
    left = lo
    for _ in range(200):
        mid = 0.5 * (left + hi)
        if fn(mid) <= 1.0:
            left = mid
        else:
            hi = mid
        if hi - left <= 1e-14 * hi:
            break
    return 0.5 * (left + hi)


def xi_bar1(alpha0, P_star, b, a, k):
    """Right edge of the liquid contraction window (``inf`` if unbounded)."""
    if _epsilon1_vanishes(b, k):
        return math.inf
    return _grow_and_bisect(lambda z: epsilon1(z, alpha0, P_star, b, a, k), alpha0,
                            1e6 * alpha0, "liquid window")


def epsilon2(z, alpha0, b, a, k):
    """Contraction bound of the solid operator for melt coefficient ``z``."""
    c = _source_prefactor(k, a)
    g_small = G(a * z * math.sqrt(b.N_m / b.L_M))
    g_large = G(a * z * math.sqrt(b.N_M / b.L_m))
    if g_large >= 1.0:
        return math.inf
    ratio = (2.0 * b.L_M * (g_small * b.L_M ** 2 / (2.0 * b.L_m ** 2 * b.N_m) + b.Ltilde2)
             / (b.L_m ** 2 * (1.0 - g_large)))
    return 2.0 * phi2_lipschitz(alpha0, b, a, k) + ratio * (1.0 + c * b.K_M / (b.L_m * alpha0 ** 2))


def check_condepsilon2(alpha0, b, a, k):
    """True when the solid contraction window is nonempty."""
    return epsilon2(alpha0, alpha0, b, a, k) < 1.0


def xi_bar2(alpha0, b, a, k):
    """Right edge of the solid contraction window; ``alpha0`` if the window is empty."""
    if not check_condepsilon2(alpha0, b, a, k):
        return alpha0
    return _grow_and_bisect(lambda z: epsilon2(z, alpha0, b, a, k), alpha0, 1e6 * alpha0,
                            "solid window")


# ---------------------------------------------------------------------------
# bounds on the interface function
# ---------------------------------------------------------------------------

def Z_upper(xi, xi_hat, alpha0, P_star, b, a, k):
    """Upper bound of the interface function on ``(alpha0, xi_hat]``."""
    c = _source_prefactor(k, a)
    if c == 0.0 or b.K_M == 0.0:
        return alpha0 ** 2 * P_star
    g = G(a * xi_hat * math.sqrt(b.N_M / b.L_m)) if math.isfinite(xi_hat) else 1.0
    if g >= 1.0:
        return math.inf
    liquid = max(1.0, 1.0 / b.L_m) / alpha0
    solid = b.L_M / (b.L_m * xi * (1.0 - g))
    return alpha0 ** 2 * P_star + c * b.K_M * (liquid + solid)


def Z_lower(xi, alpha0, P_star, b, a):
    """Lower bound of the interface function."""
    g = G(a * xi * math.sqrt(b.N_M / b.L_m))
    decay = math.exp(-a * a * b.N_M / b.L_m * (xi * xi - alpha0 * alpha0))
    return alpha0 ** 2 * P_star * decay - b.L_M * xi / (1.0 - g)


def Z_bounds(xi, xi_hat, alpha0, P_star, b, a, k):
    return Z_upper(xi, xi_hat, alpha0, P_star, b, a, k), Z_lower(xi, alpha0, P_star, b, a)


def Z_lower_variants(xi, alpha0, P_star, b, a):
    """Alternative printed forms of the lower bound, kept for reporting only."""
    g = G(a * xi * math.sqrt(b.N_M / b.L_m))
    flux = b.L_M * xi / (1.0 - g)
    d = xi * xi - alpha0 * alpha0
    return {
        "growing_exponent": alpha0 * P_star * math.exp(a * a * b.N_M / b.L_m * d) - flux,
        "upper_E_exponent": alpha0 ** 2 * P_star * math.exp(-a * a * b.N_m / b.L_M * d) - flux,
    }
