"""Vapour zone: ignition threshold, boiling-front coefficient and the linear
temperature profile between the arc spot and the boiling isotherm."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, ModelDomainError


@dataclass(frozen=True)
class PhysicalParams:
    """Scalar constants of the contact model (SI units).

    ``k`` is the current ramp coefficient; if omitted it is derived from a
    sinusoidal current ``I0 sin(omega t)`` matched at the arcing time ``t_a``.
    """

    P: float
    a: float
    lambda_b: float
    L_b: float
    gamma_b: float
    theta_ion: float
    theta_b: float
    theta_m: float
    l_m: float
    gamma_m: float
    k: float = 0.0

    def __post_init__(self):
        for name in ("P", "a", "lambda_b", "L_b", "gamma_b", "theta_m", "l_m", "gamma_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.theta_ion > self.theta_b > self.theta_m > 0:
            raise ValueError("need theta_ion > theta_b > theta_m > 0")
        if self.k < 0:
            raise ValueError("k must be nonnegative")

    @staticmethod
    def ramp_coefficient(I0, omega, t_a):
        """``k = I0 sin(omega t_a) / sqrt(t_a)``."""
        return I0 * math.sin(omega * t_a) / math.sqrt(t_a)

    @property
    def delta_theta(self):
        return self.theta_ion - self.theta_b

    @property
    def M(self):
        """Latent-heat coefficient of the dimensionless Stefan condition."""
        return 2.0 * self.a ** 2 * self.l_m * self.gamma_m / self.theta_m

    @property
    def source_prefactor(self):
        """``k^2 / (16 a^2 pi^2)``, the Joule-source scale in similarity form."""
        return self.k ** 2 / (16.0 * self.a ** 2 * math.pi ** 2)

    def ignition_threshold(self):
        return 2.0 * self.a * math.sqrt(2.0 * math.pi) * math.sqrt(
            self.lambda_b * self.L_b * self.gamma_b * self.delta_theta)


@dataclass(frozen=True)
class VaporFront:
    alpha0: float
    A: float
    B: float
    discriminant: float
    other_root: float

    def position(self, t, a):
        """Boiling front radius ``2 a alpha0 sqrt(t)``."""
        return 2.0 * a * self.alpha0 * math.sqrt(t)

    def speed(self, t, a):
        return a * self.alpha0 / math.sqrt(t)


def check_ignition(p):
    """True when the arc power is large enough for boiling to start."""
    return p.P >= p.ignition_threshold()


def alpha0(p):
    """Boiling-front coefficient: the root of ``x^2 - A x + B`` that grows with P."""
    if not check_ignition(p):
        raise ModelDomainError(
            f"ignition condition violated: P={p.P} < threshold {p.ignition_threshold()}")
    A = p.P / (2.0 * p.a ** 2 * math.sqrt(math.pi) * p.L_b * p.gamma_b)
    B = p.lambda_b * p.delta_theta / (2.0 * p.a ** 2 * p.L_b * p.gamma_b)
    disc = max(A * A - 4.0 * B, 0.0)
    root = math.sqrt(disc)
    # (A + sqrt)/2 equals 2B/(A - sqrt) without the cancellation for large A
    big = 0.5 * (A + root)
    # at a double root B/big can round a few ulp above big
    small = min(B / big, big)
    return VaporFront(alpha0=big, A=A, B=B, discriminant=disc, other_root=small)


def P_star(front, p):
    """Dimensionless arc flux ``P exp(-alpha0^2) / (sqrt(pi) theta_m)``."""
    return p.P * math.exp(-front.alpha0 ** 2) / (math.sqrt(math.pi) * p.theta_m)


def vapor_temperature(r, t, front, p):
    """Linear vapour temperature from ``theta_ion`` at r=0 to ``theta_b`` at the front."""
    if t <= 0:
        raise DomainError("t must be positive")
    edge = front.position(t, p.a)
    if r < 0 or r > edge * (1 + 1e-15):
        raise DomainError(f"r={r} outside the vapour zone [0, {edge}]")
    return p.theta_ion - p.delta_theta * r / edge


def vapor_flux_residual(t, front, p):
    """Arc flux minus conducted plus latent flux at the boiling front."""
    if t <= 0:
        raise DomainError("t must be positive")
    arc = p.P / (2.0 * p.a * math.sqrt(math.pi * t))
    conducted = p.lambda_b * p.delta_theta / front.position(t, p.a)
    latent = p.L_b * p.gamma_b * front.speed(t, p.a)
    return arc - (conducted + latent)
