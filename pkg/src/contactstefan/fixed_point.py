"""Picard iteration for the liquid and solid integral operators.

``apply_V`` maps a liquid profile on ``[alpha0, xi]`` to

    alpha0^2 P* (chi1(xi) - chi1(eta)) + Phi1(xi) - Phi1(eta),

and ``apply_W`` maps a solid profile on ``[xi, eta_max]`` to

    (-1 + Phi2(inf)) chi2(eta) / chi2(inf) - Phi2(eta).

Both return values at the grid nodes and at the panel quadrature points, so
iterates never need to be interpolated.  The contraction-window helpers
``epsilon1``/``xi_bar1`` and ``epsilon2``/``xi_bar2`` wrap the closed-form
estimates of :mod:`contactstefan.estimates`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import estimates
from .coefficients import check_decay, check_decay_lipschitz
from .errors import ConvergenceError, HypothesisError, StefanError
from .kernels import (SimilarityProfile, compute_kernels, graded_nodes, solid_extent,
                      uniform_nodes)
from .special import DEFAULT_QUADRATURE
from .vapor import P_star


@dataclass(frozen=True)
class PicardSettings:
    tol: float = 1e-10
    max_iter: int = 200
    grid_size: int = 257

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.grid_size < 3:
            raise ValueError("grid_size must be at least 3")


@dataclass
class PicardResult:
    """Outcome of a converged Picard run.

    ``kernels`` is the kernel table of the last input iterate, i.e. the one
    whose image is ``profile``.  ``update_norms`` lists every sup-norm step.
    """

    profile: SimilarityProfile
    iterations: int
    final_update_norm: float
    contraction_ratios: list = field(default_factory=list)
    update_norms: list = field(default_factory=list)
    kernels: object = None


def _check_domain(profile, phase, lo=None, hi=None):
    if profile.phase != phase:
        raise ValueError(f"expected a {phase} profile, got {profile.phase}")
    tol = 1e-12
    if lo is not None and abs(profile.nodes[0] - lo) > tol * max(1.0, abs(lo)):
        raise ValueError(f"{phase} profile must start at {lo}, starts at {profile.nodes[0]}")
    if hi is not None and abs(profile.nodes[-1] - hi) > tol * max(1.0, abs(hi)):
        raise ValueError(f"{phase} profile must end at {hi}, ends at {profile.nodes[-1]}")


def liquid_step(u1, xi, front, coeffs, p, spec=DEFAULT_QUADRATURE):
    """Image of ``u1`` under the liquid operator, with the kernel table used."""
    _check_domain(u1, "liquid", front.alpha0, xi)
    t = compute_kernels(u1, coeffs, p.a, p.k, spec, tail=False)
    flux0 = front.alpha0 ** 2 * P_star(front, p)
    values = flux0 * (t.chi[-1] - t.chi) + (t.phi[-1] - t.phi)
    values[-1] = 0.0
    interior = flux0 * (t.chi[-1] - t.chi_pts) + (t.phi[-1] - t.phi_pts)
    return u1.with_values(values, interior), t


def apply_V(u1, xi, front, coeffs, p, spec=DEFAULT_QUADRATURE):
    """Liquid Picard operator; the result vanishes at ``xi``."""
    return liquid_step(u1, xi, front, coeffs, p, spec)[0]


def solid_step(u2, xi, coeffs, p, spec=DEFAULT_QUADRATURE):
    """Image of ``u2`` under the solid operator, with the kernel table used."""
    _check_domain(u2, "solid", lo=xi)
    t = compute_kernels(u2, coeffs, p.a, p.k, spec, tail=True)
    if not t.chi_inf > 0:
        raise StefanError(f"chi2(inf) must be positive, got {t.chi_inf}")
    scale = (-1.0 + t.phi_inf) / t.chi_inf
    values = scale * t.chi - t.phi
    values[0] = 0.0
    interior = scale * t.chi_pts - t.phi_pts
    return u2.with_values(values, interior), t


def apply_W(u2, xi, coeffs, p, spec=DEFAULT_QUADRATURE):
    """Solid Picard operator; the result vanishes at ``xi`` and tends to -1."""
    return solid_step(u2, xi, coeffs, p, spec)[0]


def liquid_initial(front, xi, n):
    nodes = uniform_nodes(front.alpha0, xi, n)
    return SimilarityProfile(nodes, np.zeros(n), "liquid",
                             np.zeros((n - 1, SimilarityProfile.order)))


def solid_initial(xi, bounds, a, n):
    """``-(1 - xi/eta)`` on a grid clustered toward the melt front."""
    nodes = graded_nodes(xi, solid_extent(xi, bounds, a), n)
    guess = SimilarityProfile(nodes, np.zeros(n), "solid")
    pts = guess.rule.points
    values = -(1.0 - xi / nodes)
    values[0] = 0.0
    return guess.with_values(values, -(1.0 - xi / pts))


def _roundoff_floor(profile):
    return 100.0 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(profile.all_values()))))


def picard(op, init, settings=PicardSettings()):
    """Iterate ``u <- op(u)`` until the sup-norm update drops below ``settings.tol``.

    ``op`` returns either a profile or a ``(profile, kernels)`` pair.  The sup
    norm runs over grid nodes and panel points.  Contraction ratios are
    recorded only while the previous step is above the roundoff floor.
    """
    u = init
    norms, ratios = [], []
    kernels = None
    for it in range(1, settings.max_iter + 1):
        out = op(u)
        new, kernels = out if isinstance(out, tuple) else (out, None)
        step = float(np.max(np.abs(new.all_values() - u.all_values())))
        if norms and norms[-1] > _roundoff_floor(new):
            ratios.append(step / norms[-1])
        norms.append(step)
        u = new
        if step <= settings.tol:
            return PicardResult(u, it, step, ratios, norms, kernels)
    raise ConvergenceError(
        f"Picard iteration did not converge in {settings.max_iter} steps "
        f"(last update {norms[-1]:.3e})", ratios, norms)


def solve_liquid(xi, front, coeffs, p, settings=PicardSettings(), spec=DEFAULT_QUADRATURE,
                 init=None):
    """Fixed point of the liquid operator on ``[alpha0, xi]``."""
    if init is None:
        init = liquid_initial(front, xi, settings.grid_size)
    return picard(lambda u: liquid_step(u, xi, front, coeffs, p, spec), init, settings)


def solid_operator(xi, coeffs, p, bounds, spec=DEFAULT_QUADRATURE, enforce_decay=True):
    """Solid operator that also checks the source-decay hypotheses on every iterate."""
    check = enforce_decay and not coeffs.K_vanishes(2) and p.k > 0
    previous = {}

    def op(u):
        if check:
            nodes = np.concatenate([u.nodes, u.rule.points.ravel()])
            vals = u.all_values()
            res = check_decay(bounds, coeffs, nodes, vals)
            if not res.ok:
                raise HypothesisError("source decay violated by a solid iterate", res.tag,
                                      res.worst_point)
            if "vals" in previous:
                res = check_decay_lipschitz(bounds, coeffs, nodes, vals, previous["vals"])
                if not res.ok:
                    raise HypothesisError("source Lipschitz decay violated by solid iterates",
                                          res.tag, res.worst_point)
            previous["vals"] = vals
        return solid_step(u, xi, coeffs, p, spec)

    return op


def solve_solid(xi, coeffs, p, bounds, settings=PicardSettings(), spec=DEFAULT_QUADRATURE,
                init=None, enforce_decay=True):
    """Fixed point of the solid operator on ``[xi, eta_max]``."""
    if init is None:
        init = solid_initial(xi, bounds, p.a, settings.grid_size)
    return picard(solid_operator(xi, coeffs, p, bounds, spec, enforce_decay), init, settings)


# ---------------------------------------------------------------------------
# contraction windows
# ---------------------------------------------------------------------------

def epsilon1(z, front, bounds, p):
    """Contraction bound of the liquid operator when the melt front sits at ``z``."""
    if z < front.alpha0:
        raise ValueError("z must not be below alpha0")
    return float(estimates.epsilon1(z, front.alpha0, P_star(front, p), bounds, p.a, p.k))


def xi_bar1(front, bounds, p):
    return estimates.xi_bar1(front.alpha0, P_star(front, p), bounds, p.a, p.k)


def epsilon2(z, bounds, front, p):
    """Contraction bound of the solid operator when the melt front sits at ``z``."""
    if z < front.alpha0:
        raise ValueError("z must not be below alpha0")
    return estimates.epsilon2(z, front.alpha0, bounds, p.a, p.k)


def check_condepsilon2(bounds, front, p):
    return estimates.check_condepsilon2(front.alpha0, bounds, p.a, p.k)


def xi_bar2(bounds, front, p):
    return estimates.xi_bar2(front.alpha0, bounds, p.a, p.k)


def window_edge(front, bounds, p):
    """``xi_hat = min(xi_bar1, xi_bar2)``."""
    return min(xi_bar1(front, bounds, p), xi_bar2(bounds, front, p))


def contraction_bound(phase, xi, front, bounds, p):
    if phase == "liquid":
        return epsilon1(xi, front, bounds, p)
    return epsilon2(xi, bounds, front, p)


def max_ratio(result):
    return max(result.contraction_ratios) if result.contraction_ratios else 0.0


def is_within(ratio, bound):
    return ratio <= bound or math.isinf(bound)
