"""End-to-end runs: hypothesis checks, the full solve, the oracle comparison
and parameter sweeps, each summarised in a ``SolveReport``."""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import estimates
from .coefficients import check_hypotheses
from .errors import OracleError, StefanError
from .fixed_point import epsilon1, epsilon2, check_condepsilon2, xi_bar1, xi_bar2
from .interface import check_existence_window, solve_xi
from .reconstruct import (PhysicalSolution, bc_residuals, ode_residual, oracle_discrepancy,
                          temperature)
from .vapor import P_star, alpha0, check_ignition

ORACLE_THRESHOLD = 1e-6
RESIDUAL_THRESHOLD = 1e-6


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return str(value)


@dataclass
class ReportCheck:
    tag: str
    description: str
    status: str
    value: object = None
    stage: str = "check"

    @property
    def ok(self):
        return self.status != "fail"


@dataclass
class SolveReport:
    """Checks, computed values and timings of one run.

    ``text()`` renders a human-readable summary followed by a ``[values]``
    section of ``tag = value`` lines.  Timings are printed last in their own
    section so the rest is byte-identical across runs.
    """

    title: str
    checks: list = field(default_factory=list)
    values: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    error: str | None = None
    error_stage: str | None = None
    stage: str = "check"

    def check(self, tag, description, ok_or_status, value=None):
        status = ok_or_status if isinstance(ok_or_status, str) else ("pass" if ok_or_status else "fail")
        self.checks.append(ReportCheck(tag, description, status, value, self.stage))
        self.values[tag] = status != "fail"
        return status != "fail"

    def set(self, tag, value):
        self.values[tag] = value

    def fail(self, stage, exc):
        self.error_stage = stage
        self.error = f"{type(exc).__name__}: {exc}"

    @property
    def ok(self):
        return self.error is None and all(c.ok for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.ok]

    def solved_ok(self):
        """No error and every check made after the pre-solve stage holds."""
        return self.error is None and all(c.ok for c in self.checks if c.stage != "check")

    def text(self, with_timing=True):
        lines = [self.title, "=" * len(self.title), ""]
        if self.checks:
            lines.append("checks:")
            width = max(len(c.tag) for c in self.checks)
            for c in self.checks:
                extra = "" if c.value is None else f"  ({_fmt(c.value)})"
                lines.append(f"  {c.status.upper():8s} {c.tag:<{width}}  {c.description}{extra}")
            lines.append("")
        if self.error:
            lines += [f"error in stage '{self.error_stage}': {self.error}", ""]
        lines.append(f"overall: {'OK' if self.ok else 'FAILED'}")
        lines += ["", "[values]"]
        lines += [f"{k} = {_fmt(v)}" for k, v in self.values.items()]
        if with_timing and self.timing:
            lines += ["", "[timing]"]
            lines += [f"{k} = {v:.3f} s" for k, v in self.timing.items()]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def _windows(report, config):
    p, front, b = config.params, config.front, config.resolved_bounds
    ps = P_star(front, p)
    report.set("P_star", ps)
    x1 = xi_bar1(front, b, p)
    report.set("xi_bar1", x1 if math.isfinite(x1) else "unbounded")
    nonempty = check_condepsilon2(b, front, p)
    report.check("solid_window_nonempty", "epsilon2(alpha0) < 1", nonempty,
                 epsilon2(front.alpha0, b, front, p))
    x2 = xi_bar2(b, front, p)
    report.set("xi_bar2", x2)
    flags = check_existence_window(config)
    report.set("xi_hat", flags.xi_hat)
    report.set("M", flags.M)
    report.check("z1_at_window_edge", "Z1(xi_hat) <= M xi_hat^3", flags.z1_at_window_edge,
                 flags.Z1_at_xi_hat - flags.M * flags.xi_hat ** 3 if math.isfinite(flags.Z1_at_xi_hat)
                 else None)
    report.check("z2_at_vapor_front", "Z2(alpha0) >= M alpha0^3", flags.z2_at_vapor_front,
                 flags.Z2_at_alpha0 - flags.M * front.alpha0 ** 3)
    variants = estimates.Z_lower_variants(front.alpha0, front.alpha0, ps, b, p.a)
    for name, v in variants.items():
        report.set(f"Z2_at_vapor_front_{name}", v)
    return flags


def run_check(config, title="check"):
    """All static hypotheses and window computations, without solving."""
    report = SolveReport(f"{title}: {config.source or 'config'}")
    t0 = time.perf_counter()
    p = config.params
    report.set("ignition_threshold", p.ignition_threshold())
    if not report.check("ignition", "P >= 2a sqrt(2 pi lambda_b L_b gamma_b (theta_ion - theta_b))",
                        check_ignition(p), p.P - p.ignition_threshold()):
        report.timing["check"] = time.perf_counter() - t0
        return report
    front = alpha0(p)
    report.set("alpha0", front.alpha0)
    report.set("alpha0_other_root", front.other_root)
    report.set("quadratic_A", front.A)
    report.set("quadratic_B", front.B)
    try:
        b = config.resolved_bounds
        for name in ("L_m", "L_M", "N_m", "N_M", "K_m", "K_M", "R", "Ntilde1", "Ntilde2",
                     "Ltilde1", "Ltilde2", "Ktilde1", "Ktilde2"):
            report.set(f"bound_{name}", getattr(b, name))
        hyp = check_hypotheses(b, config.coefficients, config.liquid_range, p.a,
                               samples=config.samples)
        for c in hyp.checks:
            note = c.description + (" [checked on every solid iterate]" if c.status == "deferred" else "")
            report.check(c.tag, note, c.status, c.margin)
        _windows(report, config)
    except StefanError as exc:
        report.fail("check", exc)
    report.timing["check"] = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def kernel_bound_margins(config, xi, liquid_kernels, solid_kernels):
    """Largest relative violation of each pointwise kernel bound (<= 0 means it holds)."""
    p, front, b = config.params, config.front, config.resolved_bounds
    a = p.a

    def worst(lower, value, upper=None):
        scale = np.maximum(np.abs(value), 1e-300)
        gap = (lower - value) / scale
        if upper is not None:
            gap = np.maximum(gap, (value - upper) / scale)
        return float(np.max(gap))

    eta1 = liquid_kernels.nodes
    lo1, hi1 = estimates.E_sandwich(eta1, front.alpha0, b, a)
    eta2 = solid_kernels.nodes
    lo2, hi2 = estimates.E_sandwich(eta2, xi, b, a)
    e2, c2 = eta2[1:], solid_kernels.chi[1:]
    chi2_up = estimates.chi2_upper(e2, xi, b, a)
    chi2_elem = estimates.chi2_elementary(e2, xi, b)
    phi_bound = estimates.phi2_upper(xi, b, a, p.k)
    return {
        "E1_sandwich": worst(lo1, liquid_kernels.E, hi1),
        "E2_sandwich": worst(lo2, solid_kernels.E, hi2),
        "chi1_upper": worst(-np.inf, liquid_kernels.chi[1:],
                            estimates.chi1_upper(eta1[1:], front.alpha0, b, a)),
        "chi2_sandwich": worst(estimates.chi2_lower(e2, xi, b, a), c2, chi2_up),
        "chi2_elementary": float(np.max((chi2_up - chi2_elem) / np.maximum(chi2_elem, 1e-300))),
        "phi2_upper": float(np.max(solid_kernels.phi) - phi_bound) / max(phi_bound, 1e-300)
        if p.k > 0 else 0.0,
    }


BOUND_TOL = 1e-10


def run_solve(config, force=False, out_dir=None, root_tol=None):
    """Full pipeline; returns ``(report, solution or None)``.

    Profiles go to ``out_dir`` (default ``config.out_dir``; ``False`` writes nothing).
    """
    report = run_check(config, title="solve")
    if report.error or not report.values.get("ignition", False):
        return report, None
    if not report.ok and not force:
        report.error_stage = "check"
        report.error = "hypothesis or window checks failed (use --force to attempt the solve)"
        return report, None
    if not report.ok:
        report.set("forced", True)
    report.stage = "solve"
    t0 = time.perf_counter()
    p, front, b = config.params, config.front, config.resolved_bounds
    try:
        res = solve_xi(config, root_tol=root_tol, enforce_decay=not force)
    except StefanError as exc:
        report.fail("solve_xi", exc)
        report.timing["solve"] = time.perf_counter() - t0
        return report, None
    report.timing["solve"] = time.perf_counter() - t0
    ev = res.evaluation
    xi = res.xi_star
    report.set("xi_star", xi)
    report.set("stefan_condition_residual", res.Z_residual)
    report.set("Z_at_xi_star", ev.Z)
    report.set("Z_literal_at_xi_star", ev.Z_literal)
    report.set("xi_star_in_proven_window", res.in_window)
    report.set("root_brackets", [list(bk) for bk in res.brackets])
    report.set("regula_falsi_iterations", res.iterations)
    report.check("stefan_root", "|Z(xi*) - M xi*^3| <= root_tol max(1, M xi*^3)",
                 abs(res.Z_residual) <= (root_tol or config.root_tol) * max(1.0, p.M * xi ** 3),
                 res.Z_residual)
    report.check("Z_bounds_on_scan", "Z2(xi) <= Z(xi) <= Z1(xi) at every evaluated xi",
                 not res.bound_violations if res.in_window else "deferred",
                 len(res.bound_violations))

    sol = PhysicalSolution(ev.liquid.profile, ev.solid.profile, xi, front.alpha0, p,
                           config.coefficients)
    lo, hi = config.liquid_range
    u1 = ev.liquid.profile.all_values()
    report.check("liquid_range_respected", "u1 stays inside the range covered by the bounds",
                 bool(u1.min() >= lo - 1e-12 and u1.max() <= hi + 1e-12),
                 [float(u1.min()), float(u1.max())])
    for phase, r, bound in (("liquid", ev.liquid, epsilon1(xi, front, b, p)),
                            ("solid", ev.solid, epsilon2(xi, b, front, p))):
        worst = max(r.contraction_ratios) if r.contraction_ratios else 0.0
        report.set(f"{phase}_picard_iterations", r.iterations)
        report.set(f"{phase}_contraction_ratios", r.contraction_ratios)
        report.check(f"{phase}_contraction", f"measured {phase} contraction ratio <= epsilon bound",
                     worst <= bound if res.in_window else "deferred", [worst, bound])

    for tag, value in bc_residuals(sol).items():
        report.check(tag, "boundary/interface residual < 1e-6", value < RESIDUAL_THRESHOLD, value)
    for phase, name in ((1, "liquid"), (2, "solid")):
        r = ode_residual(sol, phase)
        report.check(f"ode_residual_{name}", "max normalized ODE residual < 1e-6",
                     r < RESIDUAL_THRESHOLD, r)
    for tag, margin in kernel_bound_margins(config, xi, ev.liquid.kernels, ev.solid.kernels).items():
        report.check(f"kernel_{tag}", "pointwise kernel bound", margin <= BOUND_TOL, margin)

    if out_dir is None:
        out_dir = config.out_dir
    if out_dir:
        write_profiles(Path(out_dir) / "profile.csv", sol, config.snapshot_time)
    report.timing["total"] = report.timing.get("check", 0.0) + report.timing["solve"]
    return report, sol


def write_profiles(path, sol, snapshot_time=1.0):
    """CSV with columns ``eta,u,theta_at_t1,phase`` for both phases."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    t1 = snapshot_time
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eta", "u", "theta_at_t1", "phase"])
        for name, prof in (("liquid", sol.u1), ("solid", sol.u2)):
            r = 2.0 * sol.params.a * prof.nodes * math.sqrt(t1)
            theta = temperature(sol, r, t1)
            for eta, u, th in zip(prof.nodes, prof.values, theta):
                w.writerow([repr(float(eta)), repr(float(u)), repr(float(th)), name])
    return path


def write_report(path, report):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.text())
    return path


# ---------------------------------------------------------------------------
# oracle and sweep
# ---------------------------------------------------------------------------

def run_oracle(config, threshold=ORACLE_THRESHOLD):
    """Solve, then compare both phases with the shooting solution at ``xi*``."""
    report, sol = run_solve(config, force=True)
    report.title = report.title.replace("solve:", "oracle:", 1)
    if sol is None:
        return report
    t0 = time.perf_counter()
    try:
        d1, d2, liq, so = oracle_discrepancy(config, sol.xi_star, sol.u1, sol.u2)
    except OracleError as exc:
        report.fail("oracle", exc)
        return report
    report.timing["oracle"] = time.perf_counter() - t0
    report.set("oracle_liquid_endpoint_error", liq.endpoint_error)
    report.set("oracle_solid_endpoint_error", so.endpoint_error)
    report.check("oracle_liquid", f"sup|u1_picard - u1_shooting| <= {threshold:g}", d1 <= threshold, d1)
    report.check("oracle_solid", f"sup|u2_picard - u2_shooting| <= {threshold:g}", d2 <= threshold, d2)
    return report


SWEEP_COLUMNS = ("value", "alpha0", "xi_star", "stefan_residual", "max_bc_residual", "status")


def _sweep_row(args):
    config, name, value = args
    row = {"value": value, "alpha0": math.nan, "xi_star": math.nan,
           "stefan_residual": math.nan, "max_bc_residual": math.nan}
    try:
        cfg = config.with_params(**{name: value})
        row["alpha0"] = cfg.front.alpha0
        report, sol = run_solve(cfg, out_dir=False)
        if sol is None:
            row["status"] = f"failed ({report.error_stage}: {report.error})"
            return row
        row["xi_star"] = sol.xi_star
        row["stefan_residual"] = report.values["stefan_condition_residual"]
        row["max_bc_residual"] = max(bc_residuals(sol).values())
        row["status"] = "ok" if report.ok else "checks failed: " + ",".join(
            c.tag for c in report.failures())
    except (StefanError, ValueError) as exc:
        row["status"] = f"failed ({type(exc).__name__}: {exc})"
    return row


def run_sweep(config, name, lo, hi, count, jobs=1):
    """One solve per value of physical parameter ``name`` on ``linspace(lo, hi, count)``."""
    if not hasattr(config.params, name):
        raise ValueError(f"unknown physical parameter {name!r}")
    if count < 1:
        raise ValueError("count must be positive")
    values = [float(v) for v in np.linspace(lo, hi, count)]
    tasks = [(config, name, v) for v in values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_row, tasks))
    return [_sweep_row(t) for t in tasks]


def format_sweep(rows, name):
    lines = [",".join((name,) + SWEEP_COLUMNS[1:])]
    for r in rows:
        lines.append(",".join(_fmt(r[c]) if c != "status" else str(r[c]).replace(",", ";")
                              for c in SWEEP_COLUMNS))
    return "\n".join(lines) + "\n"
