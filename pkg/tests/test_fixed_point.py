import math

import numpy as np
import pytest

from contactstefan.coefficients import CoefficientFamily, CoefficientSet, estimate_bounds
from contactstefan.errors import ConvergenceError, HypothesisError
from contactstefan.fixed_point import (PicardSettings, apply_V, apply_W, check_condepsilon2,
                                       epsilon1, epsilon2, liquid_initial, liquid_step, picard,
                                       solid_initial, solid_step, solve_liquid, solve_solid,
                                       xi_bar1, xi_bar2)
from contactstefan.kernels import SimilarityProfile, compute_kernels, uniform_nodes
from contactstefan.reconstruct import _one_sided_derivative
from contactstefan.vapor import P_star, alpha0

from conftest import params_with_front, unit_coefficients, unit_params

CHI1_UNIT_2 = 0.239771772910731624
W_UNIT_AT_2 = -0.990269310169336271


@pytest.fixture
def unit_front():
    p = params_with_front(1.0, 1.0, Lg=1.0)
    return p, alpha0(p)


def test_V_unit_example(unit_front):
    p, front = unit_front
    u1 = liquid_initial(front, 2.0, 33)
    out = apply_V(u1, 2.0, front, unit_coefficients(), p)
    assert out.values[-1] == 0.0
    assert out.values[0] == pytest.approx(CHI1_UNIT_2, rel=1e-12)


def test_V_independent_of_profile_for_constant_coefficients(unit_front):
    p, front = unit_front
    p = params_with_front(1.0, 1.0, Lg=1.0, k=3.0)
    cs = unit_coefficients(rho=0.7)
    nodes = uniform_nodes(front.alpha0, 2.0, 33)
    a = SimilarityProfile(nodes, np.zeros(33), "liquid")
    b = SimilarityProfile(nodes, 0.5 * (2.0 - nodes), "liquid")
    va, vb = apply_V(a, 2.0, front, cs, p), apply_V(b, 2.0, front, cs, p)
    assert np.max(np.abs(va.all_values() - vb.all_values())) <= 1e-12


def test_V_output_satisfies_vapor_front_flux():
    p = params_with_front(0.5, 3.0)
    front = alpha0(p)
    cs = CoefficientSet(*(CoefficientFamily.constant(1.0) for _ in range(2)),
                        CoefficientFamily.affine(0.9, 0.1), CoefficientFamily.constant(0.5),
                        *(CoefficientFamily.constant(1.0) for _ in range(3)),
                        CoefficientFamily.constant(0.0), theta_m=1.0)
    res = solve_liquid(1.0, front, cs, p, PicardSettings(grid_size=129))
    u = res.profile
    du = _one_sided_derivative(u, front.alpha0, 1e-3)
    L = float(cs.L(1, float(u.values[0])))
    assert L * du == pytest.approx(-P_star(front, p), rel=1e-8)


def unit_solid(xi=1.0, n=257):
    b = estimate_bounds(unit_coefficients(), (0, 1), 1.0)
    return solid_initial(xi, b, 1.0, n), b


def test_W_unit_example():
    u2, _ = unit_solid()
    out = apply_W(u2, 1.0, unit_coefficients(), unit_params())
    assert out.values[0] == 0.0
    assert out.values[-1] == pytest.approx(-1.0, abs=1e-12)
    assert float(out(2.0)[0]) == pytest.approx(W_UNIT_AT_2, abs=1e-10)


def test_W_matches_closed_form_for_constant_coefficients():
    u2, _ = unit_solid()
    res = solve_solid(1.0, unit_coefficients(), unit_params(), unit_solid()[1])
    t = compute_kernels(res.profile, unit_coefficients(), 1.0)
    assert np.max(np.abs(res.profile.values + t.chi / t.chi_inf)) <= 1e-9
    assert res.iterations <= 2


def test_constant_operators_converge_in_two_steps(unit_front):
    p, front = unit_front
    res = solve_liquid(2.0, front, unit_coefficients(), p)
    assert res.iterations <= 2
    assert res.update_norms[-1] == 0.0


def test_picard_reports_ratios_and_raises():
    p = params_with_front(0.5, 3.0)
    front = alpha0(p)
    cs = CoefficientSet(CoefficientFamily.affine(1.0, 0.2), CoefficientFamily.constant(1.0),
                        CoefficientFamily.affine(1.0, 0.1), CoefficientFamily.constant(0.5),
                        *(CoefficientFamily.constant(1.0) for _ in range(3)),
                        CoefficientFamily.constant(0.0), theta_m=1.0)
    with pytest.raises(ConvergenceError) as info:
        solve_liquid(0.9, front, cs, p, PicardSettings(max_iter=2))
    assert len(info.value.update_norms) == 2
    res = solve_liquid(0.9, front, cs, p)
    assert res.final_update_norm <= 1e-10
    # fixed-point residual at termination
    again, _ = liquid_step(res.profile, 0.9, front, cs, p)
    assert np.max(np.abs(again.all_values() - res.profile.all_values())) <= 2e-10


def test_measured_contraction_below_epsilon1():
    p = params_with_front(0.5, 3.0)
    front = alpha0(p)
    cs = CoefficientSet(*(CoefficientFamily.constant(1.0) for _ in range(2)),
                        CoefficientFamily.affine(0.9, 0.1), CoefficientFamily.constant(0.5),
                        *(CoefficientFamily.constant(1.0) for _ in range(3)),
                        CoefficientFamily.constant(0.0), theta_m=1.0)
    b = estimate_bounds(cs, (0.0, 3.0), p.a)
    edge = xi_bar1(front, b, p)
    assert front.alpha0 < edge < math.inf
    for xi in np.linspace(front.alpha0 * 1.05, min(edge, 4.0) * 0.99, 5):
        res = solve_liquid(xi, front, cs, p, PicardSettings(grid_size=65))
        assert res.profile.all_values().max() <= 3.0
        assert max(res.contraction_ratios, default=0.0) <= epsilon1(xi, front, b, p)


def test_solid_source_decay_enforced_per_iterate():
    cs = CoefficientSet.uniform(rho=1.0, rho2=1.0)
    b = estimate_bounds(cs, (0, 1), 1.0)
    p = unit_params(k=2.0)
    with pytest.raises(HypothesisError) as info:
        solve_solid(1.0, cs, p, b)
    assert info.value.tag == "solid_K_decay"
    # without enforcement the iteration still runs
    assert solve_solid(1.0, cs, p, b, enforce_decay=False).final_update_norm <= 1e-10


def test_window_wrappers(unit_front):
    p, front = unit_front
    b = estimate_bounds(unit_coefficients(), (0, 1), 1.0)
    assert epsilon1(front.alpha0, front, b, p) == 0.0
    assert xi_bar1(front, b, p) == math.inf
    with pytest.raises(ValueError):
        epsilon1(0.5 * front.alpha0, front, b, p)
    with pytest.raises(ValueError):
        epsilon2(0.5 * front.alpha0, b, front, p)
    if check_condepsilon2(b, front, p):
        assert epsilon2(xi_bar2(b, front, p), b, front, p) == pytest.approx(1.0, abs=1e-10)
    else:
        assert xi_bar2(b, front, p) == front.alpha0


@pytest.mark.parametrize("kw", [dict(tol=0.0), dict(max_iter=0), dict(grid_size=2)])
def test_settings_validation(kw):
    with pytest.raises(ValueError):
        PicardSettings(**kw)


def test_operator_domain_checks(unit_front):
    p, front = unit_front
    u1 = liquid_initial(front, 2.0, 9)
    with pytest.raises(ValueError):
        apply_V(u1, 2.5, front, unit_coefficients(), p)
    u2, _ = unit_solid(n=9)
    with pytest.raises(ValueError):
        apply_W(u2, 1.5, unit_coefficients(), p)
    with pytest.raises(ValueError):
        apply_W(u1, 2.0, unit_coefficients(), p)


def test_picard_on_plain_callable():
    u2, _ = unit_solid(n=33)
    op = lambda u: solid_step(u, 1.0, unit_coefficients(), unit_params())[0]
    res = picard(op, u2, PicardSettings(grid_size=33))
    assert res.kernels is None and res.iterations <= 2
