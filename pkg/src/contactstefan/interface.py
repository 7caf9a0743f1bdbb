"""The Stefan condition at the melt front and its root ``xi*``.

For a trial melt coefficient ``xi`` the two Picard problems are solved and
the flux the liquid delivers to the front is compared with the latent-heat
demand:

    Z(xi) = nu2(xi) + alpha0^2 P* E1(xi) + c J1(xi),   Z(xi*) = M xi*^3,

where ``nu2(xi) = (-1 + Phi2(inf)) / chi2(inf)`` is the solid flux and
``-nu1(xi) = alpha0^2 P* E1(xi) + c J1(xi)`` the liquid one (``J`` as in
:mod:`contactstefan.kernels`).  ``Z_literal`` evaluates the alternative
``nu2 + Q E1(xi)`` with ``Q = alpha0^2 P* + c int K1*/(s^2 L1*)``; the two
agree when ``k = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import estimates
from .errors import NoRootError, StefanError
from .fixed_point import solve_liquid, solve_solid, window_edge
from .vapor import P_star


@dataclass
class ZEvaluation:
    xi: float
    Z: float
    Z_literal: float
    Z1: float
    Z2: float
    liquid: object
    solid: object

    @property
    def within_bounds(self):
        slack = 1e-9 * max(1.0, abs(self.Z))
        return self.Z2 - slack <= self.Z <= self.Z1 + slack


@dataclass
class ExistenceFlags:
    xi_hat: float
    Z1_at_xi_hat: float
    Z2_at_alpha0: float
    M: float
    z1_at_window_edge: bool
    z2_at_vapor_front: bool

    @property
    def both(self):
        return self.z1_at_window_edge and self.z2_at_vapor_front


@dataclass
class XiSolveResult:
    xi_star: float
    Z_residual: float
    bracket: tuple
    iterations: int
    window: tuple
    condition_flags: ExistenceFlags
    brackets: list = field(default_factory=list)
    scan_xi: list = field(default_factory=list)
    scan_F: list = field(default_factory=list)
    bound_violations: list = field(default_factory=list)
    evaluation: ZEvaluation | None = None
    in_window: bool = True


def Z_bounds(xi, bounds, front, p, xi_hat=None):
    """``(Z1, Z2)``: upper and lower bounds of ``Z`` on ``(alpha0, xi_hat]``."""
    if xi_hat is None:
        xi_hat = window_edge(front, bounds, p)
    ps = P_star(front, p)
    return (estimates.Z_upper(xi, xi_hat, front.alpha0, ps, bounds, p.a, p.k),
            estimates.Z_lower(xi, front.alpha0, ps, bounds, p.a))


def _settings(config, tol=None):
    return config.picard if tol is None else replace(config.picard, tol=tol)


def evaluate_Z(xi, config, tol=None, xi_hat=None, enforce_decay=True):
    """Solve both phases at ``xi`` and return ``Z`` with its bounds."""
    p, front, b = config.params, config.front, config.resolved_bounds
    if not xi > front.alpha0:
        raise ValueError(f"xi={xi} must exceed alpha0={front.alpha0}")
    settings = _settings(config, tol)
    try:
        liq = solve_liquid(xi, front, config.coefficients, p, settings, config.quadrature)
        sol = solve_solid(xi, config.coefficients, p, b, settings, config.quadrature,
                          enforce_decay=enforce_decay)
    except StefanError as exc:
        exc.args = (f"at xi={xi!r}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
        exc.xi = xi
        raise
    t1, t2 = liq.kernels, sol.kernels
    nu2 = (-1.0 + t2.phi_inf) / t2.chi_inf
    lead = front.alpha0 ** 2 * P_star(front, p)
    c = p.source_prefactor
    Z = nu2 + lead * t1.E[-1] + c * t1.J[-1]
    Z_lit = nu2 + (lead + c * t1.source_integral) * t1.E[-1]
    Z1, Z2 = Z_bounds(xi, b, front, p, xi_hat)
    return ZEvaluation(xi, float(Z), float(Z_lit), Z1, Z2, liq, sol)


def Z(xi, config):
    """Interface function at ``xi`` (full Picard tolerance)."""
    return evaluate_Z(xi, config).Z


def Z_literal(xi, config):
    return evaluate_Z(xi, config).Z_literal


def check_existence_window(config):
    """Whether ``Z1(xi_hat) <= M xi_hat^3`` and ``Z2(alpha0) >= M alpha0^3``."""
    p, front, b = config.params, config.front, config.resolved_bounds
    xi_hat = window_edge(front, b, p)
    M = p.M
    Z1_hat = Z_bounds(xi_hat, b, front, p, xi_hat)[0] if math.isfinite(xi_hat) else math.nan
    Z2_a = Z_bounds(front.alpha0, b, front, p, xi_hat)[1]
    first = math.isfinite(xi_hat) and xi_hat > front.alpha0 and Z1_hat <= M * xi_hat ** 3
    second = Z2_a >= M * front.alpha0 ** 3
    return ExistenceFlags(xi_hat, Z1_hat, Z2_a, M, bool(first), bool(second))


def scan_range(config, flags=None):
    """Scan interval ``(alpha0, upper]`` and whether it is the proven window."""
    alpha = config.front.alpha0
    if flags is None:
        flags = check_existence_window(config)
    if math.isfinite(flags.xi_hat) and flags.xi_hat > alpha:
        return alpha, flags.xi_hat, True
    upper = config.xi_max if config.xi_max is not None else 10.0 * alpha
    if not upper > alpha:
        raise ValueError("xi_max must exceed alpha0")
    return alpha, upper, False


def solve_xi(config, root_tol=None, enforce_decay=True):
    """Smallest root of ``F(xi) = Z(xi) - M xi^3`` on the existence window.

    The window is scanned at coarse Picard tolerance (``config.coarse_tol``)
    on ``config.scan_points`` points; the first sign change is then refined
    at full tolerance by Illinois regula falsi until
    ``|F| <= root_tol * max(1, M xi^3)``.  Every bracketed sign change is
    listed in the result.
    """
    root_tol = config.root_tol if root_tol is None else root_tol
    M = config.params.M
    flags = check_existence_window(config)
    alpha, upper, in_window = scan_range(config, flags)
    xi_hat = upper if in_window else None
    n = config.scan_points
    xs = [alpha + (upper - alpha) * j / n for j in range(1, n + 1)]

    scan_F, violations = [], []
    for x in xs:
        ev = evaluate_Z(x, config, tol=config.coarse_tol, xi_hat=xi_hat,
                        enforce_decay=enforce_decay)
        scan_F.append(ev.Z - M * x ** 3)
        if in_window and not ev.within_bounds:
            violations.append((x, ev.Z2, ev.Z, ev.Z1))
    brackets = [(xs[i], xs[i + 1]) for i in range(n - 1)
                if np.sign(scan_F[i]) != np.sign(scan_F[i + 1]) or scan_F[i] == 0.0]
    # the open stretch between alpha0 and the first scan point
    lead = []
    if in_window and flags.z2_at_vapor_front and scan_F[0] < 0:
        lead = [(alpha, xs[0])]
    brackets = lead + brackets
    if flags.both and in_window and not brackets:
        raise StefanError("existence conditions hold but no sign change was found")
    if not brackets:
        raise NoRootError("Z(xi) - M xi^3 has no sign change on the scan grid", xs, scan_F)

    def F(x):
        ev = evaluate_Z(x, config, xi_hat=xi_hat, enforce_decay=enforce_decay)
        if in_window and not ev.within_bounds:
            violations.append((x, ev.Z2, ev.Z, ev.Z1))
        return ev.Z - M * x ** 3, ev

    result = None
    for lo, hi in brackets:
        result = _refine(F, lo, hi, alpha, root_tol, M)
        if result is not None:
            break
    if result is None:
        raise NoRootError("sign changes vanished at full Picard tolerance", xs, scan_F)
    xi_star, ev, its, bracket = result
    return XiSolveResult(
        xi_star=xi_star, Z_residual=ev.Z - M * xi_star ** 3, bracket=bracket, iterations=its,
        window=(alpha, upper), condition_flags=flags, brackets=brackets, scan_xi=xs,
        scan_F=scan_F, bound_violations=violations, evaluation=ev, in_window=in_window)


def _refine(F, lo, hi, alpha, root_tol, M, max_iter=200):
    if lo == alpha:
        # F is not evaluated at alpha0 itself; the lower bound Z2(alpha0) >= M alpha0^3
        # guarantees a positive value just to its right
        lo = alpha + 1e-6 * (hi - alpha)
    f_lo, ev_lo = F(lo)
    f_hi, ev_hi = F(hi)
    for x, f, ev in ((lo, f_lo, ev_lo), (hi, f_hi, ev_hi)):
        if abs(f) <= root_tol * max(1.0, M * x ** 3):
            return x, ev, 0, (lo, hi)
    if np.sign(f_lo) == np.sign(f_hi):
        return None
    side = 0
    for it in range(1, max_iter + 1):
        x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
        f, ev = F(x)
        if abs(f) <= root_tol * max(1.0, M * x ** 3) or hi - lo <= 4e-16 * hi:
            return x, ev, it, (lo, hi)
        if np.sign(f) == np.sign(f_lo):
            lo, f_lo = x, f
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            hi, f_hi = x, f
            if side == 1:
                f_lo *= 0.5
            side = 1
    raise StefanError(f"regula falsi did not converge on [{lo}, {hi}]")
