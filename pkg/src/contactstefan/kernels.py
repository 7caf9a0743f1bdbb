"""Kernel functionals of the similarity integral equations.

For a profile ``u`` on ``[lo, hi]`` (``lo = alpha0`` for the liquid,
``lo = xi`` for the solid) we need

* ``E(eta)   = exp(-2 a^2 int_lo^eta v N*(u)/L*(u) dv)``
* ``chi(eta) = int_lo^eta E(v) / (v^2 L*(u(v))) dv``
* ``Phi(eta) = c int_lo^eta E(v)/(v^2 L*) int_lo^v K*(u(s))/(s^2 E(s)) ds dv``

with ``c = k^2/(16 a^2 pi^2)``.  The inner integral of ``Phi`` is carried as

    J(v) = E(v) int_lo^v K*/(s^2 E(s)) ds = int_lo^v K*(s)/s^2 exp(-(G(v)-G(s))) ds,

``G = -log E``, advanced panel by panel so that ``1/E`` is never formed.
``J`` is also the source part of the flux ``nu = L* eta^2 u'``:
``nu(eta) = nu(lo) E(eta) - c J(eta)``.

All integrals use the fixed Gauss-Legendre panel rule of
``special.PanelRule``; profiles are carried as values at its points
(Nystrom form) so fixed-point iterates never need re-interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator

from .coefficients import starred
from .errors import DomainError
from .vapor import P_star
from .special import DEFAULT_QUADRATURE, INFINITY, PanelRule, integrate

PANEL_ORDER = 8
# E(eta_max) on the truncated solid grid is below this
SOLID_TRUNCATION = 1e-16

_PHASE_INDEX = {"liquid": 1, "solid": 2}


@dataclass(frozen=True, eq=False)
class SimilarityProfile:
    """A dimensionless temperature profile ``u(eta)`` on one phase domain.

    ``nodes`` span the domain (``[alpha0, xi]`` for ``liquid``,
    ``[xi, eta_max]`` for ``solid``).  ``interior`` optionally holds values
    at the panel quadrature points; when absent they come from monotone
    cubic (PCHIP) interpolation of the nodal values.
    """

    nodes: np.ndarray
    values: np.ndarray
    phase: str
    interior: np.ndarray | None = None
    order: int = PANEL_ORDER

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        if self.phase not in _PHASE_INDEX:
            raise ValueError("phase must be 'liquid' or 'solid'")
        if nodes.ndim != 1 or nodes.size < 3 or nodes.shape != values.shape:
            raise ValueError("profile needs matching 1-d nodes/values with at least 3 entries")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("profile nodes must be strictly ascending")
        if not np.all(np.isfinite(values)):
            raise ValueError("profile values must be finite")
        edge = values[-1] if self.phase == "liquid" else values[0]
        if abs(edge) > 1e-12:
            raise ValueError(f"{self.phase} profile must vanish at the melt front (got {edge})")
        if self.interior is not None:
            interior = np.asarray(self.interior, dtype=float)
            if interior.shape != (nodes.size - 1, self.order):
                raise ValueError("interior values do not match the panel rule")
            object.__setattr__(self, "interior", interior)

    @property
    def phase_index(self):
        return _PHASE_INDEX[self.phase]

    @cached_property
    def rule(self):
        return PanelRule(self.nodes, self.order)

    @cached_property
    def _pchip(self):
        return PchipInterpolator(self.nodes, self.values)

    def at_points(self):
        if self.interior is not None:
            return self.interior
        return self._pchip(self.rule.points)

    def __call__(self, eta):
        """Evaluate inside the grid (panel polynomial if Nystrom data, else PCHIP)."""
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        lo, hi = self.nodes[0], self.nodes[-1]
        if np.any(eta < lo - 1e-12 * abs(lo)) or np.any(eta > hi + 1e-12 * abs(hi)):
            raise DomainError(f"eta outside profile domain [{lo}, {hi}]")
        if self.interior is None:
            return self._pchip(eta)
        return self.rule.interpolate(self.interior, eta)

    def all_values(self):
        """Nodal and interior values concatenated (used for sup norms)."""
        return np.concatenate([self.values, self.at_points().ravel()])

    def with_values(self, values, interior):
        return SimilarityProfile(self.nodes, values, self.phase, interior, self.order)


def uniform_nodes(lo, hi, n):
    nodes = np.linspace(lo, hi, n)
    nodes[0], nodes[-1] = lo, hi
    return nodes


def graded_nodes(lo, hi, n, power=2.0):
    """Nodes clustered toward ``lo``: ``lo + (hi - lo) s^power`` for uniform ``s``."""
    s = np.linspace(0.0, 1.0, n)
    nodes = lo + (hi - lo) * s ** power
    nodes[0], nodes[-1] = lo, hi
    return nodes


def solid_extent(xi, bounds, a, threshold=SOLID_TRUNCATION):
    """Truncation point where the slowest admissible E2 decay drops below ``threshold``."""
    return math.sqrt(xi * xi - math.log(threshold) * bounds.L_M / (a * a * bounds.N_m))


@dataclass
class KernelTable:
    nodes: np.ndarray
    E: np.ndarray
    chi: np.ndarray
    phi: np.ndarray
    J: np.ndarray
    G: np.ndarray
    E_pts: np.ndarray
    chi_pts: np.ndarray
    phi_pts: np.ndarray
    J_pts: np.ndarray
    source_integral: float
    chi_inf: float | None = None
    phi_inf: float | None = None


def _frozen_tail(u_end, phase, coeffs, a, eta_max, E_end, J_end, c, spec):
    """Contributions beyond ``eta_max`` with coefficients frozen at ``u_end``."""
    N, L, K = starred(coeffs, phase, u_end)
    beta = a * a * N / L

    def decay(v, s):
        return math.exp(-beta * (v * v - s * s))

    tau = integrate(lambda v: decay(v, eta_max) / (v * v * L), eta_max, INFINITY, spec)
    chi_tail = E_end * tau
    phi_tail = 0.0
    if c > 0.0:
        phi_tail = c * J_end * tau
        if K > 0.0:
            def inner(v):
                return integrate(lambda s: decay(v, s) / (s * s), eta_max, v, spec)
            phi_tail += c * K * integrate(lambda v: inner(v) / (v * v * L), eta_max, INFINITY, spec)
    return chi_tail, phi_tail


def compute_kernels(profile, coeffs, a, k=0.0, spec=DEFAULT_QUADRATURE, tail=None):
    """All kernels for ``profile`` at its nodes and panel points.

    ``tail`` defaults to True for solid profiles and adds ``chi(inf)`` and
    ``Phi(inf)``.
    """
    phase = profile.phase_index
    rule = profile.rule
    X = rule.points
    uX = profile.at_points()
    N, L, K = starred(coeffs, phase, uX)
    c = k * k / (16.0 * a * a * math.pi ** 2)

    G_nodes, G_pts = rule.cumulative(2.0 * a * a * X * N / L)
    E_nodes = np.exp(-G_nodes)
    E_pts = np.exp(-G_pts)
    chi_nodes, chi_pts = rule.cumulative(E_pts / (X * X * L))
    source_integral = float(np.sum(rule.integrate_panels(K / (X * X * L))))

    n = rule.size
    J_nodes = np.zeros(n)
    J_pts = np.zeros_like(X)
    phi_nodes = np.zeros(n)
    phi_pts = np.zeros_like(X)
    if c > 0.0 and np.any(K != 0.0):
        G_left = G_nodes[:-1, None]
        q = K / (X * X) * np.exp(G_pts - G_left)
        q_panel = rule.integrate_panels(q)
        q_part = rule.partial(q)
        decay = np.exp(G_nodes[:-1] - G_nodes[1:])
        for i in range(n - 1):
            J_nodes[i + 1] = decay[i] * (J_nodes[i] + q_panel[i])
        J_pts = np.exp(G_left - G_pts) * (J_nodes[:-1, None] + q_part)
        phi_nodes, phi_pts = rule.cumulative(c * J_pts / (X * X * L))

    table = KernelTable(profile.nodes, E_nodes, chi_nodes, phi_nodes, J_nodes, G_nodes,
                        E_pts, chi_pts, phi_pts, J_pts, source_integral)
    if tail is None:
        tail = profile.phase == "solid"
    if tail:
        chi_tail, phi_tail = _frozen_tail(profile.values[-1], phase, coeffs, a, profile.nodes[-1],
                                          E_nodes[-1], J_nodes[-1], c, spec)
        table.chi_inf = float(chi_nodes[-1] + chi_tail)
        table.phi_inf = float(phi_nodes[-1] + phi_tail)
    return table


def kernel_E(profile, coeffs, a):
    """Integrating factor E at the profile nodes."""
    return compute_kernels(profile, coeffs, a, tail=False).E


def kernel_chi(profile, coeffs, a, spec=DEFAULT_QUADRATURE):
    """``chi`` at the nodes, and ``chi(inf)`` for solid profiles (else None)."""
    t = compute_kernels(profile, coeffs, a, 0.0, spec)
    return t.chi, t.chi_inf


def kernel_phi(profile, coeffs, a, k, spec=DEFAULT_QUADRATURE):
    """``Phi`` at the nodes, and ``Phi(inf)`` for solid profiles (else None)."""
    t = compute_kernels(profile, coeffs, a, k, spec)
    return t.phi, t.phi_inf


def kernel_Q(xi, profile_u1, coeffs, front, params):
    """Liquid-side source constant ``Q = alpha0^2 P* + c I`` and ``I``.

    ``I = int_alpha0^xi K1*/(s^2 L1*) ds`` as printed in the model's interface
    condition.  The solver itself uses the flux-consistent source term; see
    ``interface.Z``.
    """
    if profile_u1.phase != "liquid" or abs(profile_u1.nodes[-1] - xi) > 1e-12 * max(1.0, xi):
        raise ValueError("kernel_Q needs a liquid profile ending at xi")
    t = compute_kernels(profile_u1, coeffs, params.a, 0.0, tail=False)
    Q = front.alpha0 ** 2 * P_star(front, params) + params.source_prefactor * t.source_integral
    return Q, t.source_integral
