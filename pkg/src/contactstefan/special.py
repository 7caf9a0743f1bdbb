"""Special functions and quadrature.

Everything here is written against plain floats; the array-aware entry
points (``erf``, ``erfc``, ``erfcx``, ``h_function``, ``G``) broadcast over
numpy arrays by looping the scalar kernels, which is fast enough for the
grid sizes used by the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, QuadratureError

#: Sentinel for an unbounded upper limit.  Only ``integrate`` and
#: ``h_function`` accept it.
INFINITY = math.inf

_SQRT_PI = math.sqrt(math.pi)
_TWO_OVER_SQRT_PI = 2.0 / _SQRT_PI
_SERIES_LIMIT = 3.0
_MIN_DEPTH = 3


# ---------------------------------------------------------------------------
# error function family
# ---------------------------------------------------------------------------

def _erf_series(x):
    # erf(x) = 2x/sqrt(pi) * exp(-x^2) * sum (2x^2)^n / (2n+1)!!, all terms positive
    x2 = x * x
    term = 1.0
    total = 1.0
    n = 0
    while True:
        n += 1
        term *= 2.0 * x2 / (2 * n + 1)
        total += term
        if term < 1e-17 * total:
            break
    return _TWO_OVER_SQRT_PI * x * math.exp(-x2) * total


def _erfcx_cf(x):
    # sqrt(pi) * erfcx(x) = 1 / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), modified Lentz
    tiny = 1e-300
    f = x
    c = f
    d = 0.0
    for n in range(1, 5000):
        an = 0.5 * n
        d = x + an * d
        if d == 0.0:
            d = tiny
        c = x + an / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return 1.0 / (_SQRT_PI * f)


def _erf_scalar(x):
    x = float(x)
    if x < 0.0:
        return -_erf_scalar(-x)
    if x <= _SERIES_LIMIT:
        return _erf_series(x)
    if x > 27.0:
        return 1.0
    return 1.0 - math.exp(-x * x) * _erfcx_cf(x)


def _erfcx_scalar(x):
    x = float(x)
    if x >= _SERIES_LIMIT:
        return _erfcx_cf(x)
    if x < -26.6:
        return math.inf
    return math.exp(x * x) * (1.0 - _erf_scalar(x))


def _erfc_scalar(x):
    x = float(x)
    if x >= _SERIES_LIMIT:
        if x > 27.3:
            return 0.0
        return math.exp(-x * x) * _erfcx_cf(x)
    return 1.0 - _erf_scalar(x)


def _broadcast(fn, x):
    if np.ndim(x) == 0:
        return fn(x)
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    flat = out.reshape(-1)
    for i, v in enumerate(arr.reshape(-1)):
        flat[i] = fn(v)
    return out


def erf(x):
    """Gauss error function, accurate to about 1e-16 absolute."""
    return _broadcast(_erf_scalar, x)


def erfc(x):
    """Complementary error function ``1 - erf(x)``."""
    return _broadcast(_erfc_scalar, x)


def erfcx(x):
    """Scaled complementary error function ``exp(x**2) * erfc(x)``.

    Never forms ``exp(x**2)`` for large ``x``; uses a continued fraction there.
    """
    return _broadcast(_erfcx_scalar, x)


def _G_scalar(x):
    x = float(x)
    if x < 0.0:
        raise DomainError(f"G requires x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    return _SQRT_PI * x * _erfcx_scalar(x)


def G(x):
    """Mills-ratio factor ``sqrt(pi) * x * exp(x^2) * erfc(x)`` for ``x >= 0``.

    Lies in ``[0, 1)``, increases strictly and tends to 1 as ``x`` grows.
    """
    return _broadcast(_G_scalar, x)


def _tail_term(x):
    # exp(-x^2)/x - sqrt(pi)*erfc(x) == exp(-x^2) * (1 - G(x)) / x
    if math.isinf(x):
        return 0.0
    return math.exp(-x * x) * (1.0 - _G_scalar(x)) / x


def _h_scalar(eta, N, L, z, a):
    if not (N > 0 and L > 0 and a > 0 and z > 0):
        raise DomainError("h requires N, L, a, z > 0")
    if eta < z:
        raise DomainError(f"h requires eta >= z (eta={eta}, z={z})")
    scale = a * math.sqrt(N / L)
    return _tail_term(scale * z) - _tail_term(scale * eta)


def h_function(eta, N, L, z, a):
    """Closed form of ``int_{s z}^{s eta} exp(-t^2)/t^2 dt``, ``s = a sqrt(N/L)``.

    Equals::

        sqrt(pi) erf(s z) - sqrt(pi) erf(s eta)
            + exp(-s^2 z^2)/(s z) - exp(-s^2 eta^2)/(s eta),   s = a sqrt(N/L)

    evaluated in a cancellation-free form.  ``eta`` may be ``INFINITY``.
    """
    if np.ndim(eta) == 0:
        return _h_scalar(float(eta), N, L, z, a)
    return _broadcast(lambda e: _h_scalar(e, N, L, z, a), eta)


# ---------------------------------------------------------------------------
# adaptive quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_depth: int = 50

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be strictly positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


DEFAULT_QUADRATURE = QuadratureSpec()


def _semi_infinite(f, lo):
    def g(s):
        if s >= 1.0:
            return 0.0
        one_minus = 1.0 - s
        v = lo + s / one_minus
        return f(v) / (one_minus * one_minus)
    return g


def integrate(f, lo, hi, spec=DEFAULT_QUADRATURE):
    """Adaptive Simpson quadrature with Richardson correction.

    ``hi`` may be ``INFINITY``; the range is then mapped to ``[0, 1)`` by
    ``v = lo + s/(1-s)``.  Raises ``QuadratureError`` (carrying the partial
    sum) if any subinterval needs more than ``spec.max_depth`` bisections.
    """
    if math.isinf(hi):
        return integrate(_semi_infinite(f, lo), 0.0, 1.0, spec)
    if hi == lo:
        return 0.0
    if hi < lo:
        return -integrate(f, hi, lo, spec)

    # coarse pass over 8 panels sets the scale and guards against
    # missing narrow features in the first Simpson estimate
    n0 = 8
    xs = [lo + (hi - lo) * i / (2 * n0) for i in range(2 * n0 + 1)]
    fs = [f(x) for x in xs]
    panels = []
    coarse = 0.0
    for i in range(n0):
        a, m, b = xs[2 * i], xs[2 * i + 1], xs[2 * i + 2]
        fa, fm, fb = fs[2 * i], fs[2 * i + 1], fs[2 * i + 2]
        whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        coarse += whole
        panels.append((a, b, fa, fm, fb, whole))
    tol = max(spec.rel_tol * abs(coarse), spec.abs_tol)

    total = 0.0
    err = 0.0
    failed = False
    stack = [(a, b, fa, fm, fb, whole, tol / n0, 0) for (a, b, fa, fm, fb, whole) in panels]
    while stack:
        a, b, fa, fm, fb, whole, local_tol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = f(lm)
        frm = f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        # a few forced bisections guard against accidental agreement of
        # the two Simpson estimates on a coarse panel
        converged = abs(delta) <= 15.0 * local_tol and depth >= _MIN_DEPTH
        if converged or depth >= spec.max_depth or lm <= a or rm >= b:
            if abs(delta) > 15.0 * local_tol:
                failed = True
            total += left + right + delta / 15.0
            err += abs(delta) / 15.0
            continue
        stack.append((a, m, fa, flm, fm, left, 0.5 * local_tol, depth + 1))
        stack.append((m, b, fm, frm, fb, right, 0.5 * local_tol, depth + 1))
    if failed:
        raise QuadratureError(
            f"adaptive quadrature exceeded max_depth={spec.max_depth} on [{lo}, {hi}]",
            partial=total, error_estimate=err)
    return total


def cumulative(f, nodes, spec=DEFAULT_QUADRATURE):
    """Running integral of ``f`` from ``nodes[0]`` to each node, panel by panel."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size < 2:
        raise ValueError("cumulative needs at least two nodes")
    if np.any(np.diff(nodes) <= 0):
        raise ValueError("nodes must be strictly ascending")
    pieces = [integrate(f, nodes[i], nodes[i + 1], spec) for i in range(nodes.size - 1)]
    return np.concatenate(([0.0], np.cumsum(pieces)))


# ---------------------------------------------------------------------------
# fixed-order panel rule (Nystrom discretisation used by the kernels)
# ---------------------------------------------------------------------------

def _legendre_basis(t, m):
    """Lagrange basis of the m Gauss points on [0, 1], evaluated at ``t``."""
    x_ref, _ = np.polynomial.legendre.leggauss(m)
    vander = np.polynomial.legendre.legvander(x_ref, m - 1)
    at = np.polynomial.legendre.legvander(2.0 * np.asarray(t, dtype=float) - 1.0, m - 1)
    return np.linalg.solve(vander.T, at.T).T


class PanelRule:
    """Gauss-Legendre points on every panel of a grid, plus the matrices needed
    to integrate from a panel's left edge to any of its points.

    Functions are carried as values at the ``(n-1, m)`` array ``points``.
    Running integrals are exact for polynomials of degree ``m-1`` per panel.
    """

    def __init__(self, nodes, order=8):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or np.any(np.diff(nodes) <= 0):
            raise ValueError("panel nodes must be strictly ascending with at least 2 entries")
        self.nodes = nodes
        self.order = order
        x_ref, w_ref = np.polynomial.legendre.leggauss(order)
        self.t = 0.5 * (x_ref + 1.0)
        self.w = 0.5 * w_ref
        self.widths = np.diff(nodes)
        self.points = nodes[:-1, None] + self.widths[:, None] * self.t[None, :]
        self.weights = self.widths[:, None] * self.w[None, :]
        self._partial = self._partial_matrix(self.t)

    def _partial_matrix(self, targets):
        # row j: weights giving int_0^{targets[j]} p(tau) dtau for the interpolant p
        rows = []
        for tj in targets:
            basis = _legendre_basis(tj * self.t, self.order)
            rows.append(tj * (self.w @ basis))
        return np.array(rows)

    @property
    def size(self):
        return self.nodes.size

    def integrate_panels(self, values):
        return np.sum(self.weights * values, axis=1)

    def cumulative(self, values):
        """Running integral at nodes (n,) and at panel points (n-1, m)."""
        panel = self.integrate_panels(values)
        at_nodes = np.concatenate(([0.0], np.cumsum(panel)))
        at_points = at_nodes[:-1, None] + self.widths[:, None] * (values @ self._partial.T)
        return at_nodes, at_points

    def partial(self, values):
        """Integral from each panel's left node to each of its points."""
        return self.widths[:, None] * (values @ self._partial.T)

    def locate(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.searchsorted(self.nodes, x, side="right") - 1
        idx = np.clip(idx, 0, self.nodes.size - 2)
        local = (x - self.nodes[idx]) / self.widths[idx]
        return idx, local

    def interpolate(self, values, x):
        """Evaluate the per-panel polynomial interpolant of ``values`` at ``x``."""
        idx, local = self.locate(x)
        out = np.empty(local.shape)
        for j, (i, t) in enumerate(zip(idx, local)):
            basis = _legendre_basis([t], self.order)[0]
            out[j] = basis @ values[i]
        return out

    def running_integral_at(self, values, x, at_nodes):
        """Running integral evaluated at arbitrary ``x`` given node values."""
        idx, local = self.locate(x)
        out = np.empty(local.shape)
        for j, (i, t) in enumerate(zip(idx, local)):
            row = self._partial_matrix([t])[0]
            out[j] = at_nodes[i] + self.widths[i] * (row @ values[i])
        return out
