import math

import pytest

from contactstefan import load_config
from contactstefan.errors import ConfigError

from conftest import REGRESSION_CONFIGS, config_path, make_config, physical_text


@pytest.mark.parametrize("name", REGRESSION_CONFIGS)
def test_shipped_configs_parse(name):
    config = load_config(config_path(name))
    assert config.source.endswith(f"{name}.cfg")
    assert config.params.P == pytest.approx(59.08)
    assert config.out_dir == f"out/{name}"


def test_defaults_fill_unset_coefficients():
    config = make_config(physical_text())
    cs = config.coefficients
    for phase in (1, 2):
        assert cs.family("c", phase)(0.7) == 1.0
        assert cs.family("lambda", phase)(0.7) == 1.0
        assert cs.family("rho", phase)(0.7) == 0.0
    assert config.liquid_range == (0.0, 3.0)
    assert config.bounds is None
    assert config.snapshot_time == 1.0


def test_coefficient_sections_and_solver_settings():
    text = physical_text() + """
[coefficients.phase1.lambda]
kind = affine
params = 0.9, 0.1

[coefficients.phase2.rho]
kind = tabulated
point = 0.0, 0.0
point = 2.0, 0.0

[solver]
tol = 1e-8
grid_size = 65
scan_points = 8

[output]
snapshot_time = 2.5
"""
    config = make_config(text)
    assert config.coefficients.family("lambda", 1)(2.0) == pytest.approx(1.1)
    assert config.coefficients.family("rho", 2).kind == "tabulated"
    assert config.picard.tol == 1e-8 and config.picard.grid_size == 65
    assert config.scan_points == 8
    assert config.snapshot_time == 2.5


def test_ramp_parameters_set_k():
    text = physical_text().replace("k = 0.0\n", "I0 = 2.0\nomega = 0.5\nt_a = 4.0\n")
    config = make_config(text)
    assert config.params.k == pytest.approx(2.0 * math.sin(2.0) / 2.0)


def test_R_alone_is_not_explicit_bounds():
    config = make_config(physical_text() + "[bounds]\nR = 10.0\n")
    assert config.bounds is None
    assert config.resolved_bounds.R == 10.0


def test_u1_range_override():
    config = make_config(physical_text() + "[bounds]\nu1_max = 2.0\n")
    assert config.liquid_range == (0.0, 2.0)


@pytest.mark.parametrize("extra, field, line", [
    ("[physical]\nP = 1\n", "physical", 1),
    ("[bogus]\nx = 1\n", "bogus", 2),
    ("[solver]\nspeed = 3\n", "solver.speed", 2),
    ("[solver]\ntol = 1e-8\ntol = 1e-9\n", "solver.tol", 3),
    ("[solver]\ntol = fast\n", "solver.tol", 2),
    ("[solver]\ntol = inf\n", "solver.tol", 2),
    ("[solver]\njust words\n", "solver", 2),
    ("[coefficients.phase1.c]\nparams = 1.0\n", "coefficients.phase1.c.kind", 2),
    ("[coefficients.phase1.c]\nkind = tabulated\npoint = 1.0\n", "coefficients.phase1.c.point", 3),
])
def test_errors_name_field_and_line(extra, field, line):
    # ``line`` counts from the first line of ``extra``
    head = physical_text() + "\n"
    with pytest.raises(ConfigError) as info:
        make_config(head + extra)
    assert info.value.field == field
    assert info.value.line == head.count("\n") + line
    assert field in str(info.value)


def test_entry_outside_section():
    with pytest.raises(ConfigError) as info:
        make_config("P = 1\n" + physical_text())
    assert info.value.line == 1


def test_missing_physical_field():
    text = physical_text().replace("l_m = 15.0\n", "")
    with pytest.raises(ConfigError) as info:
        make_config(text)
    assert info.value.field == "physical.l_m"


def test_missing_physical_section():
    with pytest.raises(ConfigError) as info:
        make_config("[solver]\ntol = 1e-8\n")
    assert info.value.field == "physical"


def test_partial_ramp_rejected():
    text = physical_text().replace("k = 0.0\n", "I0 = 2.0\n")
    with pytest.raises(ConfigError, match="together"):
        make_config(text)


def test_ramp_and_k_together_rejected():
    with pytest.raises(ConfigError) as info:
        make_config(physical_text() + "I0 = 2.0\nomega = 0.5\nt_a = 4.0\n")
    assert info.value.field == "physical.k"


def test_explicit_bounds_must_be_complete():
    with pytest.raises(ConfigError, match="every constant"):
        make_config(physical_text() + "[bounds]\nL_m = 0.5\nR = 10\n")


def test_mixed_family_keys_rejected():
    text = physical_text() + "[coefficients.phase1.c]\nkind = constant\nparams = 1\npoint = 0, 1\n"
    with pytest.raises(ConfigError) as info:
        make_config(text)
    assert info.value.field == "coefficients.phase1.c"


def test_unreadable_path():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(config_path("does_not_exist"))


def test_invalid_physical_value():
    with pytest.raises(ConfigError) as info:
        make_config(physical_text().replace("a = 1.0", "a = -1.0"))
    assert info.value.field == "physical"
