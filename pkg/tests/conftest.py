import math
from pathlib import Path

import pytest

from contactstefan import CoefficientSet, PhysicalParams, load_config, parse_config
from contactstefan.pipeline import run_solve

ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = ROOT / "configs"
REGRESSION_CONFIGS = ("demo", "joule", "affine", "affine_joule", "exponential")

PHYSICAL_BLOCK = """\
[physical]
P = 59.08
a = 1.0
lambda_b = 1.111
L_b = 111.1
gamma_b = 1.0
theta_ion = 5.0
theta_b = 4.0
theta_m = 1.0
l_m = 15.0
gamma_m = 1.0
k = {k}
"""


def config_path(name):
    return CONFIG_DIR / f"{name}.cfg"


def physical_text(k=0.0):
    return PHYSICAL_BLOCK.format(k=k)


def unit_params(**changes):
    """Physical constants with a = theta_m = 1 and a valid vapour zone."""
    base = dict(P=10.0, a=1.0, lambda_b=1.0, L_b=1.0, gamma_b=1.0, theta_ion=3.0,
                theta_b=2.0, theta_m=1.0, l_m=1.0, gamma_m=1.0, k=0.0)
    base.update(changes)
    return PhysicalParams(**base)


def params_with_front(alpha, p_star, a=1.0, theta_m=1.0, Lg=None, **changes):
    """Parameters whose physical vapour root is ``alpha`` and whose ``P*`` is ``p_star``.

    ``Lg = L_b gamma_b`` defaults to the value placing the other root at ``alpha/2``.
    """
    P = p_star * math.sqrt(math.pi) * theta_m * math.exp(alpha ** 2)
    if Lg is None:
        Lg = P / (2 * a * a * math.sqrt(math.pi) * 1.5 * alpha)
    A = P / (2 * a * a * math.sqrt(math.pi) * Lg)
    B = alpha * (A - alpha)
    assert A - alpha < alpha, "alpha would be the smaller root"
    lam_dtheta = 2 * a * a * Lg * B
    return PhysicalParams(P=P, a=a, lambda_b=lam_dtheta, L_b=Lg, gamma_b=1.0,
                          theta_ion=theta_m + 2.0, theta_b=theta_m + 1.0, theta_m=theta_m,
                          l_m=1.0, gamma_m=1.0, **changes)


def unit_coefficients(rho=0.0):
    return CoefficientSet.uniform(theta_m=1.0, rho=rho)


@pytest.fixture(scope="session")
def demo_config():
    return load_config(config_path("demo"))


@pytest.fixture(scope="session")
def demo_solve(demo_config):
    report, sol = run_solve(demo_config, out_dir=False)
    assert sol is not None, report.text()
    return report, sol


@pytest.fixture(scope="session")
def joule_solve():
    config = load_config(config_path("joule"))
    report, sol = run_solve(config, out_dir=False)
    assert sol is not None, report.text()
    return config, report, sol


def make_config(text):
    return parse_config(text, "<test>")


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion in the terminal report
# ---------------------------------------------------------------------------

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid or "criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        name = report.nodeid.split("::")[-1].removeprefix("test_")
        _ACCEPTANCE.append((name, report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in sorted(_ACCEPTANCE, key=lambda r: int(r[0].split("_")[1])):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {detail}")
