"""Run configuration: a small line-oriented ``key = value`` format.

Example::

    [physical]
    P = 27.7
    a = 1.0
    ...

    [coefficients.phase1.lambda]
    kind = affine
    params = 1.0, 0.1

    [coefficients.phase2.rho]
    kind = tabulated
    point = 0.0, 0.0
    point = 2.0, 0.5

    [bounds]
    R = 1.5

    [solver]
    tol = 1e-10
    grid_size = 257

    [output]
    dir = out
    snapshot_time = 1.0

``#`` starts a comment.  Keys may repeat only where noted (``point``).
Unset coefficients default to the constant 1 (``rho`` to 0).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

from .coefficients import (PHASE_FIELDS, CoefficientBounds, CoefficientFamily, CoefficientSet,
                           estimate_bounds)
from .errors import ConfigError
from .fixed_point import PicardSettings
from .special import QuadratureSpec
from .vapor import PhysicalParams, alpha0

PHYSICAL_KEYS = ("P", "a", "lambda_b", "L_b", "gamma_b", "theta_ion", "theta_b", "theta_m",
                 "l_m", "gamma_m", "k", "I0", "omega", "t_a")
BOUND_KEYS = ("L_m", "L_M", "N_m", "N_M", "K_m", "K_M", "R", "Ntilde1", "Ntilde2", "Ltilde1",
              "Ltilde2", "Ktilde1", "Ktilde2")
SOLVER_KEYS = {"tol": float, "max_iter": int, "grid_size": int, "root_tol": float,
               "scan_points": int, "coarse_tol": float, "xi_max": float,
               "quad_rel_tol": float, "quad_abs_tol": float, "quad_max_depth": int}
_SECTION = re.compile(r"^\[([A-Za-z0-9_.]+)\]$")
_COEFF_SECTION = re.compile(r"^coefficients\.phase([12])\.(c|gamma|lambda|rho)$")


@dataclass
class RunConfig:
    """Validated inputs of one solve.

    ``bounds=None`` means the hypothesis constants are estimated from the
    coefficients (``estimate_bounds``) over ``u1_range`` and ``[-1, 0]``.
    """

    params: PhysicalParams
    coefficients: CoefficientSet
    bounds: CoefficientBounds | None = None
    picard: PicardSettings = field(default_factory=PicardSettings)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    root_tol: float = 1e-9
    scan_points: int = 32
    coarse_tol: float = 1e-6
    xi_max: float | None = None
    u1_range: tuple | None = None
    R: float | None = None
    safety: float = 1.1
    samples: int = 2001
    out_dir: str | None = None
    snapshot_time: float = 1.0
    source: str | None = None

    def __post_init__(self):
        lo, hi = self.liquid_range
        if not hi > lo:
            raise ConfigError("liquid range must be nondegenerate", "bounds.u1_max")
        if not self.root_tol > 0 or not self.coarse_tol > 0:
            raise ConfigError("tolerances must be positive", "solver")
        if self.scan_points < 2:
            raise ConfigError("need at least 2 scan points", "solver.scan_points")
        if not self.snapshot_time > 0:
            raise ConfigError("snapshot time must be positive", "output.snapshot_time")

    @property
    def liquid_range(self):
        """Range of the liquid profile covered by the bounds (default ``[0, theta_b/theta_m - 1]``)."""
        if self.u1_range is not None:
            return tuple(self.u1_range)
        return (0.0, self.params.theta_b / self.params.theta_m - 1.0)

    @cached_property
    def resolved_bounds(self):
        if self.bounds is not None:
            return self.bounds
        return estimate_bounds(self.coefficients, self.liquid_range, self.params.a, self.samples,
                               self.safety, self.R)

    @cached_property
    def front(self):
        return alpha0(self.params)

    def with_params(self, **changes):
        """Copy with some physical parameters replaced (bounds re-estimated if automatic)."""
        return replace(self, params=replace(self.params, **changes))

    def with_solver(self, tol=None, grid_size=None):
        picard = self.picard
        if tol is not None:
            picard = replace(picard, tol=tol)
        if grid_size is not None:
            picard = replace(picard, grid_size=grid_size)
        return replace(self, picard=picard)


def _number(text, field_name, line, kind=float):
    try:
        value = kind(text)
    except ValueError:
        raise ConfigError(f"cannot read {text!r} as a number", field_name, line) from None
    if kind is float and not math.isfinite(value):
        raise ConfigError("value must be finite", field_name, line)
    return value


def _numbers(text, field_name, line):
    return tuple(_number(t.strip(), field_name, line) for t in text.split(",") if t.strip())


def parse_sections(text):
    """Split config text into ``{section: [(key, value, line), ...]}``."""
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            current = m.group(1)
            if current in sections:
                raise ConfigError("duplicate section", current, lineno)
            sections[current] = []
            continue
        if current is None:
            raise ConfigError("entry outside any section", None, lineno)
        if "=" not in line:
            raise ConfigError("expected 'key = value'", current, lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError("empty key or value", f"{current}.{key}", lineno)
        sections[current].append((key, value, lineno))
    return sections


def _unique(entries, section, allowed):
    seen = {}
    for key, value, line in entries:
        if key not in allowed:
            raise ConfigError("unknown key", f"{section}.{key}", line)
        if key in seen:
            raise ConfigError("duplicate key", f"{section}.{key}", line)
        seen[key] = (value, line)
    return seen


def _family(section, entries):
    kind, params, points, rng = None, None, [], None
    first_line = entries[0][2] if entries else None
    for key, value, line in entries:
        where = f"{section}.{key}"
        if key == "kind":
            kind = value
        elif key == "params":
            params = _numbers(value, where, line)
        elif key == "point":
            pt = _numbers(value, where, line)
            if len(pt) != 2:
                raise ConfigError("point needs 'theta, value'", where, line)
            points.append(pt)
        elif key == "range":
            rng = _numbers(value, where, line)
            if len(rng) != 2:
                raise ConfigError("range needs 'low, high'", where, line)
        else:
            raise ConfigError("unknown key", where, line)
    if kind is None:
        raise ConfigError("missing 'kind'", f"{section}.kind", first_line)
    kw = {} if rng is None else {"theta_range": rng}
    try:
        if kind == "tabulated":
            if params is not None:
                raise ValueError("tabulated families take 'point' lines, not 'params'")
            return CoefficientFamily.tabulated(points, **kw)
        if points:
            raise ValueError(f"{kind} families take 'params', not 'point' lines")
        return CoefficientFamily(kind, params or (), **kw)
    except ValueError as exc:
        raise ConfigError(str(exc), section, first_line) from None


def parse_config(text, source=None):
    """Build a validated ``RunConfig`` from config text."""
    sections = parse_sections(text)
    known = {"physical", "bounds", "solver", "output"}
    for name, entries in sections.items():
        if name not in known and not _COEFF_SECTION.match(name):
            line = entries[0][2] if entries else None
            raise ConfigError("unknown section", name, line)
    if "physical" not in sections:
        raise ConfigError("missing [physical] section", "physical")

    phys = _unique(sections["physical"], "physical", PHYSICAL_KEYS)
    values = {k: _number(v, f"physical.{k}", ln) for k, (v, ln) in phys.items()}
    ramp = [k for k in ("I0", "omega", "t_a") if k in values]
    if ramp:
        if len(ramp) != 3:
            raise ConfigError("I0, omega and t_a must be given together", "physical.I0")
        if "k" in values:
            raise ConfigError("give either k or I0/omega/t_a", "physical.k", phys["k"][1])
        values["k"] = PhysicalParams.ramp_coefficient(values.pop("I0"), values.pop("omega"),
                                                      values.pop("t_a"))
    for key in PHYSICAL_KEYS[:10]:
        if key not in values:
            raise ConfigError("missing required field", f"physical.{key}")
    try:
        params = PhysicalParams(**values)
    except ValueError as exc:
        raise ConfigError(str(exc), "physical") from None

    families = {}
    for name, entries in sections.items():
        m = _COEFF_SECTION.match(name)
        if m:
            families[f"{m.group(2)}{m.group(1)}"] = _family(name, entries)
    for phase in (1, 2):
        for name in PHASE_FIELDS:
            families.setdefault(f"{name}{phase}",
                                CoefficientFamily.constant(0.0 if name == "rho" else 1.0))
    try:
        coeffs = CoefficientSet(theta_m=params.theta_m, **families)
    except ValueError as exc:
        raise ConfigError(str(exc), "coefficients") from None

    kw = {}
    bsec = _unique(sections.get("bounds", []), "bounds",
                   BOUND_KEYS + ("safety", "samples", "u1_min", "u1_max"))
    explicit = {k: _number(v, f"bounds.{k}", ln) for k, (v, ln) in bsec.items() if k in BOUND_KEYS}
    if explicit and set(explicit) != {"R"}:
        missing = [k for k in BOUND_KEYS if k not in explicit]
        if missing:
            raise ConfigError(f"explicit bounds need every constant; missing {', '.join(missing)}",
                              "bounds")
        try:
            kw["bounds"] = CoefficientBounds(**explicit)
        except ValueError as exc:
            raise ConfigError(str(exc), "bounds") from None
    elif "R" in explicit:
        kw["R"] = explicit["R"]
    if "safety" in bsec:
        kw["safety"] = _number(bsec["safety"][0], "bounds.safety", bsec["safety"][1])
    if "samples" in bsec:
        kw["samples"] = _number(bsec["samples"][0], "bounds.samples", bsec["samples"][1], int)
    if "u1_min" in bsec or "u1_max" in bsec:
        lo = _number(bsec["u1_min"][0], "bounds.u1_min", bsec["u1_min"][1]) if "u1_min" in bsec else 0.0
        hi = (_number(bsec["u1_max"][0], "bounds.u1_max", bsec["u1_max"][1]) if "u1_max" in bsec
              else params.theta_b / params.theta_m - 1.0)
        kw["u1_range"] = (lo, hi)

    solver = _unique(sections.get("solver", []), "solver", tuple(SOLVER_KEYS))
    s = {k: _number(v, f"solver.{k}", ln, SOLVER_KEYS[k]) for k, (v, ln) in solver.items()}
    try:
        kw["picard"] = PicardSettings(**{k: s[k] for k in ("tol", "max_iter", "grid_size") if k in s})
        quad = {}
        for key, target in (("quad_rel_tol", "rel_tol"), ("quad_abs_tol", "abs_tol"),
                            ("quad_max_depth", "max_depth")):
            if key in s:
                quad[target] = s[key]
        kw["quadrature"] = QuadratureSpec(**quad)
    except ValueError as exc:
        raise ConfigError(str(exc), "solver") from None
    for key in ("root_tol", "scan_points", "coarse_tol", "xi_max"):
        if key in s:
            kw[key] = s[key]

    out = _unique(sections.get("output", []), "output", ("dir", "snapshot_time"))
    if "dir" in out:
        kw["out_dir"] = out["dir"][0]
    if "snapshot_time" in out:
        kw["snapshot_time"] = _number(out["snapshot_time"][0], "output.snapshot_time",
                                      out["snapshot_time"][1])
    try:
        return RunConfig(params, coeffs, source=source, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc), "config") from None


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, source=str(path))
