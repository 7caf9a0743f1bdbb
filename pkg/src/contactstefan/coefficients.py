"""Temperature-dependent material coefficients.

A phase carries four families of theta: specific heat ``c``, density
``gamma``, conductivity ``lambda`` and electrical resistivity ``rho``.  The
solver works with the dimensionless compositions

    N*(u) = c(T) * gamma(T),   L*(u) = lambda(T),   K*(u) = rho(T) / theta_m,

where ``T = theta_m * (u + 1)``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RangeError, StefanError

KINDS = ("constant", "affine", "exponential", "tabulated")


@dataclass(frozen=True)
class CoefficientFamily:
    """One coefficient as a function of absolute temperature.

    ``constant``: ``p0``; ``affine``: ``p0 + p1*theta``;
    ``exponential``: ``p0 * exp(p1*theta)``; ``tabulated``: piecewise-linear
    through ``table`` (strictly increasing theta).  ``theta_range`` bounds
    the valid temperatures; tabulated families default to their node span.
    """

    kind: str
    params: tuple = ()
    table: tuple = ()
    theta_range: tuple = (-math.inf, math.inf)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        needed = {"constant": 1, "affine": 2, "exponential": 2, "tabulated": 0}[self.kind]
        if len(self.params) != needed:
            raise ValueError(f"{self.kind} family needs {needed} parameter(s), got {len(self.params)}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind == "tabulated":
            table = tuple((float(t), float(v)) for t, v in self.table)
            if len(table) < 2:
                raise ValueError("tabulated family needs at least two points")
            thetas = [t for t, _ in table]
            if any(b <= a for a, b in zip(thetas, thetas[1:])):
                raise ValueError("tabulated theta nodes must be strictly increasing")
            object.__setattr__(self, "table", table)
            if self.theta_range == (-math.inf, math.inf):
                object.__setattr__(self, "theta_range", (thetas[0], thetas[-1]))
        lo, hi = self.theta_range
        if not lo < hi:
            raise ValueError("theta_range must be a nondegenerate interval")

    @classmethod
    def constant(cls, value, **kw):
        return cls("constant", (value,), **kw)

    @classmethod
    def affine(cls, intercept, slope, **kw):
        return cls("affine", (intercept, slope), **kw)

    @classmethod
    def exponential(cls, scale, rate, **kw):
        return cls("exponential", (scale, rate), **kw)

    @classmethod
    def tabulated(cls, points, **kw):
        return cls("tabulated", (), tuple(points), **kw)

    @property
    def is_constant(self):
        return self.kind == "constant"

    @property
    def _slack(self):
        # a few ulps of slack: theta is usually produced as theta_m*(u+1)
        lo, hi = self.theta_range
        return 1e-12 * max(1.0, abs(lo) if math.isfinite(lo) else 0.0,
                           abs(hi) if math.isfinite(hi) else 0.0)

    def _range_error(self, tmin, tmax):
        lo, hi = self.theta_range
        return RangeError(
            f"{self.kind} family evaluated at theta in [{tmin}, {tmax}] outside range [{lo}, {hi}]")

    def _check_range(self, theta):
        lo, hi = self.theta_range
        tmin = np.min(theta)
        tmax = np.max(theta)
        slack = self._slack
        if tmin < lo - slack or tmax > hi + slack:
            raise self._range_error(tmin, tmax)

    def __call__(self, theta):
        if np.ndim(theta) == 0:
            theta = float(theta)
            lo, hi = self.theta_range
            if not lo - self._slack <= theta <= hi + self._slack:
                raise self._range_error(theta, theta)
            if self.kind == "constant":
                return self.params[0]
            if self.kind == "affine":
                return self.params[0] + self.params[1] * theta
            if self.kind == "exponential":
                return self.params[0] * math.exp(self.params[1] * theta)
            return float(np.interp(theta, *zip(*self.table)))
        self._check_range(theta)
        theta = np.asarray(theta, dtype=float)
        if self.kind == "constant":
            return np.full(theta.shape, self.params[0])
        if self.kind == "affine":
            return self.params[0] + self.params[1] * theta
        if self.kind == "exponential":
            return self.params[0] * np.exp(self.params[1] * theta)
        xs, ys = zip(*self.table)
        lo, hi = self.theta_range
        return np.interp(np.clip(theta, lo, hi), xs, ys)


def scalar_function(f):
    """Plain-float version of family ``f`` for tight loops (same range check)."""
    lo, hi = f.theta_range
    lo, hi = lo - f._slack, hi + f._slack
    p = f.params
    if f.kind == "constant":
        def value(theta):
            return p[0]
    elif f.kind == "affine":
        def value(theta):
            return p[0] + p[1] * theta
    elif f.kind == "exponential":
        def value(theta):
            return p[0] * math.exp(p[1] * theta)
    else:
        xs, ys = (list(v) for v in zip(*f.table))

        def value(theta):
            i = min(max(bisect.bisect_right(xs, theta) - 1, 0), len(xs) - 2)
            w = (min(max(theta, xs[0]), xs[-1]) - xs[i]) / (xs[i + 1] - xs[i])
            return ys[i] + w * (ys[i + 1] - ys[i])

    def checked(theta):
        if not lo <= theta <= hi:
            raise f._range_error(theta, theta)
        return value(theta)

    return checked


def eval_family(f, theta):
    """Evaluate a coefficient family at ``theta`` (scalar or array)."""
    return f(theta)


def _positive_on_range(f, name, allow_zero):
    lo, hi = f.theta_range
    lo = lo if math.isfinite(lo) else -1e3
    hi = hi if math.isfinite(hi) else 1e6
    grid = np.linspace(lo, hi, 257)
    if f.kind == "tabulated":
        grid = np.concatenate([grid, [t for t, _ in f.table]])
    values = f(grid)
    bad = values < 0 if allow_zero else values <= 0
    if np.any(bad) or not np.all(np.isfinite(values)):
        raise StefanError(f"coefficient {name} is not {'nonnegative' if allow_zero else 'positive'} on its range")


PHASE_FIELDS = ("c", "gamma", "lambda", "rho")


@dataclass(frozen=True)
class CoefficientSet:
    """Material coefficients for the liquid (phase 1) and solid (phase 2)."""

    c1: CoefficientFamily
    gamma1: CoefficientFamily
    lambda1: CoefficientFamily
    rho1: CoefficientFamily
    c2: CoefficientFamily
    gamma2: CoefficientFamily
    lambda2: CoefficientFamily
    rho2: CoefficientFamily
    theta_m: float

    def __post_init__(self):
        if not self.theta_m > 0:
            raise ValueError("theta_m must be positive")
        for name in ("c1", "gamma1", "lambda1", "c2", "gamma2", "lambda2"):
            fam = getattr(self, name)
            if fam.kind == "constant" or fam.kind == "tabulated" or all(map(math.isfinite, fam.theta_range)):
                _positive_on_range(fam, name, allow_zero=False)
        for name in ("rho1", "rho2"):
            fam = getattr(self, name)
            if fam.kind == "constant" or fam.kind == "tabulated" or all(map(math.isfinite, fam.theta_range)):
                _positive_on_range(fam, name, allow_zero=True)

    @classmethod
    def uniform(cls, theta_m=1.0, c=1.0, gamma=1.0, lam=1.0, rho=0.0, rho2=None):
        """Constant coefficients, identical in both phases unless ``rho2`` given."""
        const = CoefficientFamily.constant
        return cls(const(c), const(gamma), const(lam), const(rho),
                   const(c), const(gamma), const(lam), const(rho if rho2 is None else rho2),
                   theta_m)

    def family(self, name, phase):
        return getattr(self, f"{name}{phase}")

    def theta(self, u):
        if np.ndim(u):
            u = np.asarray(u, dtype=float)
        return self.theta_m * (u + 1.0)

    def N(self, phase, u):
        th = self.theta(u)
        return self.family("c", phase)(th) * self.family("gamma", phase)(th)

    def L(self, phase, u):
        return self.family("lambda", phase)(self.theta(u))

    def K(self, phase, u):
        return self.family("rho", phase)(self.theta(u)) / self.theta_m

    def scalar_starred(self, phase):
        """Fast float function ``u -> (N*, L*, K*)`` for one phase."""
        c, g, lam, rho = (scalar_function(self.family(n, phase)) for n in PHASE_FIELDS)
        tm = self.theta_m

        def starred_at(u):
            th = tm * (u + 1.0)
            return c(th) * g(th), lam(th), rho(th) / tm

        return starred_at

    def is_constant(self, phase):
        return all(self.family(n, phase).is_constant for n in PHASE_FIELDS)

    def K_vanishes(self, phase):
        rho = self.family("rho", phase)
        return rho.kind == "constant" and rho.params[0] == 0.0


def starred(coeffs, phase, u):
    """Return ``(N*, L*, K*)`` for ``phase`` in {1, 2} at dimensionless ``u``."""
    if phase not in (1, 2):
        raise ValueError("phase must be 1 or 2")
    return coeffs.N(phase, u), coeffs.L(phase, u), coeffs.K(phase, u)


# ---------------------------------------------------------------------------
# hypothesis constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientBounds:
    L_m: float
    L_M: float
    N_m: float
    N_M: float
    K_m: float
    K_M: float
    R: float
    Ntilde1: float = 0.0
    Ntilde2: float = 0.0
    Ltilde1: float = 0.0
    Ltilde2: float = 0.0
    Ktilde1: float = 0.0
    Ktilde2: float = 0.0

    def __post_init__(self):
        if not (0 < self.L_m <= self.L_M):
            raise ValueError("need 0 < L_m <= L_M")
        if not (0 < self.N_m <= self.N_M):
            raise ValueError("need 0 < N_m <= N_M")
        if not (0 <= self.K_m <= self.K_M):
            raise ValueError("need 0 <= K_m <= K_M")
        if not self.R > 0:
            raise ValueError("R must be positive")
        for name in ("Ntilde1", "Ntilde2", "Ltilde1", "Ltilde2", "Ktilde1", "Ktilde2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def R_floor(self, a):
        return a * a * self.N_M / self.L_m


def _lipschitz(values, u):
    return float(np.max(np.abs(np.diff(values)) / np.diff(u)))


def estimate_bounds(coeffs, u1_range, a, samples=2001, safety=1.1, R=None, u2_range=(-1.0, 0.0)):
    """Empirical hypothesis constants from dense sampling of the starred
    coefficients over the liquid range ``u1_range`` and solid range ``u2_range``.

    Lipschitz constants are the largest sampled difference quotients times
    ``safety``.  ``R`` defaults to its smallest admissible value ``a^2 N_M/L_m``.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    out = {}
    per_phase = {}
    for phase, (lo, hi) in ((1, u1_range), (2, u2_range)):
        if not hi > lo:
            raise ValueError(f"u range for phase {phase} is degenerate")
        u = np.linspace(lo, hi, samples)
        N, L, K = starred(coeffs, phase, u)
        for arr in (N, L, K):
            if not np.all(np.isfinite(arr)):
                raise StefanError(f"non-finite coefficient value in phase {phase}")
        per_phase[phase] = (u, N, L, K)
    u1, N1, L1, K1 = per_phase[1]
    u2, N2, L2, K2 = per_phase[2]
    out["L_m"] = float(min(L1.min(), L2.min()))
    out["L_M"] = float(max(L1.max(), L2.max()))
    out["N_m"] = float(min(N1.min(), N2.min()))
    out["N_M"] = float(max(N1.max(), N2.max()))
    out["K_m"] = float(K1.min())
    out["K_M"] = float(max(K1.max(), K2.max()))
    out["Ntilde1"] = safety * _lipschitz(N1, u1)
    out["Ntilde2"] = safety * _lipschitz(N2, u2)
    out["Ltilde1"] = safety * _lipschitz(L1, u1)
    out["Ltilde2"] = safety * _lipschitz(L2, u2)
    out["Ktilde1"] = safety * _lipschitz(K1, u1)
    out["Ktilde2"] = safety * _lipschitz(K2, u2)
    out["R"] = float(R) if R is not None else a * a * out["N_M"] / out["L_m"]
    return CoefficientBounds(**out)


@dataclass
class HypothesisCheck:
    tag: str
    description: str
    status: str  # "pass", "fail" or "deferred"
    worst_point: float | None = None
    margin: float | None = None

    @property
    def ok(self):
        return self.status != "fail"


@dataclass
class HypothesisReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.ok for c in self.checks)

    def failures(self):
        return [c for c in self.checks if c.status == "fail"]

    def __getitem__(self, tag):
        for c in self.checks:
            if c.tag == tag:
                return c
        raise KeyError(tag)


def _bounds_check(tag, desc, u, values, lo, hi, rtol=1e-12):
    slack = rtol * max(1.0, abs(hi))
    below = lo - values
    above = values - hi
    worst = np.maximum(below, above)
    i = int(np.argmax(worst))
    status = "pass" if worst[i] <= slack else "fail"
    return HypothesisCheck(tag, desc, status, float(u[i]), float(-worst[i]))


def _lipschitz_check(tag, desc, u, values, const, rtol=1e-12):
    q = np.abs(np.diff(values)) / np.diff(u)
    i = int(np.argmax(q))
    status = "pass" if q[i] <= const * (1 + rtol) + 1e-300 else "fail"
    return HypothesisCheck(tag, desc, status, float(u[i]), float(const - q[i]))


def check_decay(bounds, coeffs, profile_nodes, profile_values):
    """Solid-phase source decay ``K2*(u2(s)) <= K_M exp(-R s^2)`` at every node."""
    s = np.asarray(profile_nodes, dtype=float)
    K2 = coeffs.K(2, np.asarray(profile_values, dtype=float))
    # compare in log space to stay meaningful where exp(-R s^2) underflows
    with np.errstate(divide="ignore"):
        excess = np.where(K2 > 0, np.log(np.maximum(K2, 1e-320)) - (np.log(bounds.K_M) if bounds.K_M > 0 else -np.inf) + bounds.R * s * s, -np.inf)
    i = int(np.argmax(excess))
    status = "pass" if excess[i] <= 1e-12 else "fail"
    return HypothesisCheck("solid_K_decay", "K2*(u2(s)) <= K_M exp(-R s^2)", status, float(s[i]),
                           float(-excess[i]) if np.isfinite(excess[i]) else None)


def check_decay_lipschitz(bounds, coeffs, nodes, u, u_star):
    """``|K2*(u) - K2*(u*)| <= Ktilde2 exp(-R s^2) ||u - u*||`` at every node."""
    s = np.asarray(nodes, dtype=float)
    diff = np.abs(coeffs.K(2, np.asarray(u)) - coeffs.K(2, np.asarray(u_star)))
    norm = float(np.max(np.abs(np.asarray(u) - np.asarray(u_star))))
    allowed = bounds.Ktilde2 * np.exp(-bounds.R * s * s) * norm
    excess = diff - allowed
    i = int(np.argmax(excess))
    status = "pass" if excess[i] <= 1e-14 * max(norm, 1e-300) or diff[i] == 0.0 else "fail"
    return HypothesisCheck("solid_K_lipschitz_decay",
                           "|K2*(u)-K2*(u*)| <= Ktilde2 exp(-R s^2) ||u-u*||", status, float(s[i]),
                           float(-excess[i]))


def check_hypotheses(bounds, coeffs, u1_range, a, u2_candidate=None, samples=2001,
                     u2_range=(-1.0, 0.0)):
    """Check every coefficient hypothesis on sampled u.

    The solid decay conditions couple the coefficient to the unknown profile;
    they pass statically only when ``rho2`` vanishes identically, are checked
    pointwise on ``u2_candidate`` (a ``SimilarityProfile``) when given, and
    are otherwise reported as ``deferred`` to the solve.
    """
    rep = HypothesisReport()
    u1 = np.linspace(*u1_range, samples)
    u2 = np.linspace(*u2_range, samples)
    N1, L1, K1 = starred(coeffs, 1, u1)
    N2, L2, K2 = starred(coeffs, 2, u2)
    b = bounds
    rep.checks += [
        _bounds_check("liquid_L_bounds", "L_m <= L1* <= L_M", u1, L1, b.L_m, b.L_M),
        _bounds_check("solid_L_bounds", "L_m <= L2* <= L_M", u2, L2, b.L_m, b.L_M),
        _lipschitz_check("liquid_L_lipschitz", "|L1*(u)-L1*(v)| <= Ltilde1 |u-v|", u1, L1, b.Ltilde1),
        _lipschitz_check("solid_L_lipschitz", "|L2*(u)-L2*(v)| <= Ltilde2 |u-v|", u2, L2, b.Ltilde2),
        _bounds_check("liquid_N_bounds", "N_m <= N1* <= N_M", u1, N1, b.N_m, b.N_M),
        _bounds_check("solid_N_bounds", "N_m <= N2* <= N_M", u2, N2, b.N_m, b.N_M),
        _lipschitz_check("liquid_N_lipschitz", "|N1*(u)-N1*(v)| <= Ntilde1 |u-v|", u1, N1, b.Ntilde1),
        _lipschitz_check("solid_N_lipschitz", "|N2*(u)-N2*(v)| <= Ntilde2 |u-v|", u2, N2, b.Ntilde2),
    ]
    kb = _bounds_check("liquid_K_bounds", "0 < K_m <= K1* <= K_M", u1, K1, b.K_m, b.K_M)
    if not b.K_m > 0:
        kb.status = "fail"
    rep.checks.append(kb)
    rep.checks.append(_lipschitz_check("liquid_K_lipschitz", "|K1*(u)-K1*(v)| <= Ktilde1 |u-v|",
                                       u1, K1, b.Ktilde1))
    floor = b.R_floor(a)
    rep.checks.append(HypothesisCheck("R_lower_bound", "R >= a^2 N_M / L_m",
                                      "pass" if b.R >= floor * (1 - 1e-12) else "fail",
                                      None, b.R - floor))
    if np.all(K2 == 0.0):
        rep.checks.append(HypothesisCheck("solid_K_decay", "K2*(u2(s)) <= K_M exp(-R s^2)", "pass"))
        rep.checks.append(HypothesisCheck("solid_K_lipschitz_decay",
                                          "|K2*(u)-K2*(u*)| <= Ktilde2 exp(-R s^2) ||u-u*||", "pass"))
    else:
        if u2_candidate is not None:
            rep.checks.append(check_decay(b, coeffs, u2_candidate.nodes, u2_candidate.values))
        else:
            rep.checks.append(HypothesisCheck("solid_K_decay", "K2*(u2(s)) <= K_M exp(-R s^2)",
                                              "deferred"))
        lip = _lipschitz_check("solid_K_lipschitz_decay",
                               "|K2*(u)-K2*(u*)| <= Ktilde2 exp(-R s^2) ||u-u*||", u2, K2, b.Ktilde2)
        if lip.status == "pass":
            lip.status = "deferred"
        rep.checks.append(lip)
    return rep
