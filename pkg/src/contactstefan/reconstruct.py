"""Physical fields from the similarity profiles, residual checks and an
independent shooting solver for the same boundary-value problem.

In flux form ``nu = L*(u) eta^2 u'`` the similarity equations read

    u'  = nu / (L*(u) eta^2),
    nu' = -2 a^2 eta N*(u)/L*(u) nu - c K*(u)/eta^2,

with ``nu(alpha0) = -alpha0^2 P*``, ``u1(xi) = u2(xi) = 0``,
``nu1(xi) = nu2(xi) - M xi^3`` and ``u2 -> -1`` at infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, OracleError
from .kernels import SimilarityProfile, _frozen_tail, compute_kernels, solid_extent
from .special import G
from .vapor import P_star

RK4_STEPS = 4096


@dataclass(frozen=True, eq=False)
class PhysicalSolution:
    """Converged similarity solution together with what is needed to map it back.

    Beyond ``eta_max`` (end of the solid grid) the solid profile is continued
    with coefficients frozen at the last grid value, which is exact to the
    truncation level of the grid.
    """

    u1: SimilarityProfile
    u2: SimilarityProfile
    xi_star: float
    alpha0: float
    params: object
    coefficients: object

    @property
    def P_star(self):
        return self.params.P * math.exp(-self.alpha0 ** 2) / (math.sqrt(math.pi) * self.params.theta_m)

    @property
    def eta_max(self):
        return float(self.u2.nodes[-1])

    @cached_property
    def _solid_kernels(self):
        return compute_kernels(self.u2, self.coefficients, self.params.a, self.params.k)

    @cached_property
    def _tail(self):
        """``(u_end, nu_end, beta, L_end)`` for the frozen-coefficient continuation."""
        t = self._solid_kernels
        nu0 = (-1.0 + t.phi_inf) / t.chi_inf
        nu_end = nu0 * t.E[-1] - self.params.source_prefactor * t.J[-1]
        u_end = float(self.u2.values[-1])
        N = float(self.coefficients.N(2, u_end))
        L = float(self.coefficients.L(2, u_end))
        return u_end, float(nu_end), self.params.a ** 2 * N / L, L

    def solid_tail(self, eta):
        """Frozen-coefficient continuation ``-1 - nu_end tau(eta)`` for ``eta >= eta_max``."""
        u_end, nu_end, beta, L = self._tail
        eta = np.asarray(eta, dtype=float)
        s = math.sqrt(beta)
        emax = self.eta_max
        with np.errstate(over="ignore", invalid="ignore"):
            tau = np.where(np.isinf(eta), 0.0,
                           np.exp(-beta * (np.minimum(eta, 1e150) ** 2 - emax ** 2))
                           * (1.0 - G(np.where(np.isinf(eta), 0.0, s * eta)))
                           / (np.where(np.isinf(eta), 1.0, eta) * L))
        return -1.0 - nu_end * tau

    def u(self, eta):
        """Dimensionless temperature at similarity coordinate ``eta >= alpha0``."""
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        if np.any(eta < self.alpha0 * (1 - 1e-14)):
            raise DomainError("eta lies in the vapour zone; use vapor.vapor_temperature")
        out = np.empty_like(eta)
        liq = eta <= self.xi_star
        mid = ~liq & (eta <= self.eta_max)
        far = eta > self.eta_max
        if np.any(liq):
            out[liq] = self.u1(np.clip(eta[liq], self.alpha0, self.xi_star))
        if np.any(mid):
            out[mid] = self.u2(eta[mid])
        if np.any(far):
            out[far] = self.solid_tail(eta[far])
        return out

    def alpha(self, t):
        """Boiling-front radius ``2 a alpha0 sqrt(t)``."""
        return 2.0 * self.params.a * self.alpha0 * np.sqrt(t)

    def beta(self, t):
        """Melt-front radius ``2 a xi* sqrt(t)``."""
        return 2.0 * self.params.a * self.xi_star * np.sqrt(t)


def temperature(sol, r, t):
    """Absolute temperature at radius ``r`` and time ``t`` outside the vapour zone."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("t must be positive")
    eta = np.asarray(r, dtype=float) / (2.0 * sol.params.a * np.sqrt(t))
    theta = sol.params.theta_m * sol.u(np.ravel(eta)) + sol.params.theta_m
    return theta.reshape(np.shape(eta)) if np.ndim(eta) else float(theta[0])


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

def _centered_derivative(f, x):
    """Fourth-order five-point derivative on a (possibly nonuniform) grid.

    The two points at each end are dropped.
    """
    n = x.size - 4
    offsets = np.stack([x[j:j + n] - x[2:2 + n] for j in range(5)], axis=1)
    scale = offsets[:, 4:5] - offsets[:, 0:1]
    t = offsets / scale
    vander = np.stack([t ** m for m in range(5)], axis=1)
    rhs = np.zeros((n, 5, 1))
    rhs[:, 1, 0] = 1.0
    w = np.linalg.solve(vander, rhs)[:, :, 0] / scale
    return np.einsum("ij,ij->i", w, np.stack([f[j:j + n] for j in range(5)], axis=1))


def refined_grid(nodes, refine):
    """Every panel of ``nodes`` split into ``refine`` equal pieces."""
    frac = np.arange(refine) / refine
    inner = (nodes[:-1, None] + np.diff(nodes)[:, None] * frac).ravel()
    return np.append(inner, nodes[-1])


def _one_sided_derivative(fn, x0, h):
    """Fourth-order one-sided difference, forward for ``h > 0`` and backward for ``h < 0``."""
    f = fn(x0 + h * np.arange(5))
    return (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)


def ode_residual(sol, phase, grid=None, refine=4):
    """Largest residual of the conservative ODE, relative to its largest term.

    The profile is sampled on ``grid`` (default: every solve panel split
    into ``refine`` pieces) and differentiated by fourth-order five-point
    differences;
    the residual ``[L eta^2 u']' + 2 a^2 eta^3 N u' + c K / eta^2`` is divided
    by the largest magnitude any of its three terms reaches on the grid.
    """
    prof = sol.u1 if phase == 1 else sol.u2
    grid = refined_grid(prof.nodes, refine) if grid is None else np.asarray(grid, dtype=float)
    if grid.size < 9 or np.any(np.diff(grid) <= 0):
        raise ValueError("residual grid must be ascending with at least 9 points")
    u = prof(grid)
    a, c = sol.params.a, sol.params.source_prefactor
    du = _centered_derivative(u, grid)
    eta = grid[2:-2]
    uc = u[2:-2]
    N = sol.coefficients.N(phase, uc)
    L = sol.coefficients.L(phase, uc)
    K = sol.coefficients.K(phase, uc)
    nu = L * eta ** 2 * du
    dnu = _centered_derivative(nu, eta)
    terms = np.stack([dnu, (2.0 * a * a * eta ** 3 * N * du)[2:-2], (c * K / eta ** 2)[2:-2]])
    scale = float(np.max(np.abs(terms)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(terms.sum(axis=0))) / scale)


def _derivative_step(prof, x0):
    width = prof.nodes[1] - prof.nodes[0]
    return min(width / 4.0, 2e-3 * abs(x0))


def bc_residuals(sol):
    """Residuals of the five boundary and interface conditions.

    Flux conditions are scaled by ``max(1, |expected|)``; the value
    conditions are absolute.
    """
    c = sol.coefficients
    a0, xi = sol.alpha0, sol.xi_star
    h1a = _derivative_step(sol.u1, a0)
    h1x = _derivative_step(sol.u1, xi)
    h2x = _derivative_step(sol.u2, xi)
    du1_a = _one_sided_derivative(sol.u1, a0, h1a)
    du1_x = _one_sided_derivative(sol.u1, xi, -h1x)
    du2_x = _one_sided_derivative(sol.u2, xi, h2x)
    ps = sol.P_star
    flux = float(c.L(1, float(sol.u1.values[0])) * du1_a)
    M = sol.params.M
    jump = float(c.L(1, 0.0) * du1_x - c.L(2, 0.0) * du2_x)
    return {
        "vapor_front_flux": abs(flux + ps) / max(1.0, ps),
        "liquid_melt_value": abs(float(sol.u1.values[-1])),
        "solid_melt_value": abs(float(sol.u2.values[0])),
        "stefan_jump": abs(jump + M * xi) / max(1.0, M * xi),
        "far_field": abs(float(sol.u2.values[-1]) + 1.0),
    }


# ---------------------------------------------------------------------------
# shooting
# ---------------------------------------------------------------------------

def _rhs(phase, coeffs, a, c):
    starred_at = coeffs.scalar_starred(phase)
    two_a2 = 2.0 * a * a

    def f(eta, u, nu):
        N, L, K = starred_at(u)
        return nu / (L * eta * eta), -two_a2 * eta * N / L * nu - c * K / (eta * eta)

    return f


def rk4(f, y0, lo, hi, steps=RK4_STEPS):
    """Classical fixed-step Runge-Kutta for the pair ``(u, nu)``.

    Returns the grid and the states on it, shape ``(steps + 1, 2)``.
    """
    x = np.linspace(lo, hi, steps + 1)
    h = (hi - lo) / steps
    y = np.empty((steps + 1, 2))
    u, nu = float(y0[0]), float(y0[1])
    y[0] = u, nu
    for i in range(steps):
        e = float(x[i])
        k1u, k1n = f(e, u, nu)
        k2u, k2n = f(e + 0.5 * h, u + 0.5 * h * k1u, nu + 0.5 * h * k1n)
        k3u, k3n = f(e + 0.5 * h, u + 0.5 * h * k2u, nu + 0.5 * h * k2n)
        k4u, k4n = f(e + h, u + h * k3u, nu + h * k3n)
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        nu += h / 6.0 * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)
        y[i + 1] = u, nu
    return x, y


def _secant(F, s0, s1, tol, max_iter=100):
    f0, f1 = F(s0), F(s1)
    for _ in range(max_iter):
        if abs(f1[0]) < tol:
            return s1, f1
        if f1[0] == f0[0]:
            raise OracleError("secant iteration stalled (flat residual)")
        s0, s1, f0 = s1, s1 - f1[0] * (s1 - s0) / (f1[0] - f0[0]), f1
        f1 = F(s1)
    raise OracleError(f"secant iteration did not converge (residual {f1[0]:.3e})")


@dataclass
class ShootingResult:
    eta: np.ndarray
    u: np.ndarray
    nu: np.ndarray
    phase: str
    parameter: float
    endpoint_error: float

    def derivative(self, coeffs):
        idx = 1 if self.phase == "liquid" else 2
        return self.nu / (coeffs.L(idx, self.u) * self.eta ** 2)

    def on(self, nodes, coeffs):
        """Values at ``nodes``: exact where they coincide with RK4 steps, else Hermite cubic."""
        nodes = np.asarray(nodes, dtype=float)
        step = self.eta[1] - self.eta[0]
        pos = (nodes - self.eta[0]) / step
        idx = np.rint(pos).astype(int)
        if np.all(np.abs(pos - idx) < 1e-9) and idx.min() >= 0 and idx.max() < self.eta.size:
            return self.u[idx]
        spline = CubicHermiteSpline(self.eta, self.u, self.derivative(coeffs))
        return spline(nodes)


def shooting_oracle(config, xi, steps=RK4_STEPS, tol=1e-10):
    """Solve the liquid and solid problems at ``xi`` by shooting.

    Liquid: shoot on ``u(alpha0)`` with ``nu(alpha0) = -alpha0^2 P*`` until
    ``u(xi) = 0``.  Solid: shoot on ``nu(xi)`` with ``u(xi) = 0`` until the
    limit at infinity is -1 (the stretch beyond the solve grid is added with
    frozen coefficients).  Returns ``(liquid, solid)`` ``ShootingResult``s.
    """
    p, coeffs, b = config.params, config.coefficients, config.resolved_bounds
    front = config.front
    a, c = p.a, p.source_prefactor
    a0 = front.alpha0
    if not xi > a0:
        raise ValueError("xi must exceed alpha0")
    ps = P_star(front, p)

    f1 = _rhs(1, coeffs, a, c)
    nu_a = -a0 * a0 * ps

    def liquid(s):
        x, y = rk4(f1, [s, nu_a], a0, xi, steps)
        return y[-1, 0], x, y

    guess = a0 * a0 * ps * (1.0 / a0 - 1.0 / xi) / float(coeffs.L(1, 0.0))
    s, (err, x, y) = _secant(liquid, 0.0, guess, tol)
    liq = ShootingResult(x, y[:, 0], y[:, 1], "liquid", s, abs(err))

    f2 = _rhs(2, coeffs, a, c)
    eta_max = solid_extent(xi, b, a)

    def solid(q):
        x, y = rk4(f2, [0.0, q], xi, eta_max, steps)
        u_end, nu_end = y[-1]
        tau, source = _frozen_tail(u_end, 2, coeffs, a, eta_max, 1.0, 0.0, c, config.quadrature)
        return u_end + nu_end * tau - source + 1.0, x, y

    N0, L0 = float(coeffs.N(2, 0.0)), float(coeffs.L(2, 0.0))
    q0 = -xi * L0 / (1.0 - G(a * xi * math.sqrt(N0 / L0)))
    q, (err, x, y) = _secant(solid, q0, 1.05 * q0, tol)
    sol = ShootingResult(x, y[:, 0], y[:, 1], "solid", q, abs(err))
    return liq, sol


def oracle_discrepancy(config, xi, u1, u2, steps=RK4_STEPS):
    """Sup-norm gaps between Picard profiles and the shooting solution at the Picard nodes."""
    liq, sol = shooting_oracle(config, xi, steps)
    c = config.coefficients
    d1 = float(np.max(np.abs(liq.on(u1.nodes, c) - u1.values)))
    d2 = float(np.max(np.abs(sol.on(u2.nodes, c) - u2.values)))
    return d1, d2, liq, sol
