#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Closed-form thermodynamics of the two-dimensional ideal Bose gas."""

import logging
import math
from dataclasses import dataclass

from special_fns import ZETA2, DomainError, li2, log1mexp

logger = logging.getLogger(__name__)

# Below this value of -beta*mu the occupation is numerically classical.
_EXP_UNDERFLOW = 700.0


@dataclass(frozen=True)
class ThermoPoint:
    """Thermodynamic state (beta, rho) with an optional scattering length.

    The coupling is carried as ln(sigma), sigma = |ln a^2 rho|, so that states far
    beyond the float range of a itself stay representable.

    Attributes:
        beta: Inverse temperature.
        rho: Density.
        a: Scattering length, None for ideal-gas-only queries or when it underflows.
        log_sigma: ln|ln a^2 rho|, derived from a when not given.
    """

    beta: float
    rho: float
    a: float | None = None
    log_sigma: float | None = None

    def __post_init__(self) -> None:
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be positive and finite, got {self.beta}")
        if not (self.rho > 0.0 and math.isfinite(self.rho)):
            raise DomainError(f"rho must be positive and finite, got {self.rho}")

        if self.a is not None:
            if self.a <= 0.0:
                raise DomainError(f"scattering length must be positive, got {self.a}")
            log_a2rho = 2.0 * math.log(self.a) + math.log(self.rho)
            if log_a2rho >= 0.0:
                raise DomainError("a^2 rho must be below 1")
            if self.log_sigma is None:
                object.__setattr__(self, "log_sigma", math.log(-log_a2rho))

    @classmethod
    def from_sigma(
        cls,
        beta: float,
        rho: float,
        sigma: float | None = None,
        log_sigma: float | None = None,
    ) -> "ThermoPoint":
        """Build a state from sigma (or ln sigma) instead of a.

        Args:
            beta: Inverse temperature.
            rho: Density.
            sigma: |ln a^2 rho|.
            log_sigma: ln(sigma), used when sigma overflows a float.

        Returns:
            The state; a is filled in when it is representable.
        """
        if (sigma is None) == (log_sigma is None):
            raise DomainError("give exactly one of sigma and log_sigma")
        if log_sigma is None:
            if not sigma > 0.0:
                raise DomainError(f"sigma must be positive, got {sigma}")
            log_sigma = math.log(sigma)

        a: float | None = None
        if log_sigma < math.log(_EXP_UNDERFLOW):
            a2rho = math.exp(-math.exp(log_sigma))
            if a2rho > 0.0:
                a = math.sqrt(a2rho / rho)

        return cls(beta=beta, rho=rho, a=a, log_sigma=log_sigma)

    @property
    def beta_rho(self) -> float:
        """Dimensionless inverse temperature beta*rho."""
        return self.beta * self.rho

    @property
    def sigma(self) -> float:
        """|ln a^2 rho|, inf when it exceeds the float range."""
        if self.log_sigma is None:
            raise DomainError("state carries no scattering length")
        try:
            return math.exp(self.log_sigma)
        except OverflowError:
            return math.inf


def mu0(point: ThermoPoint) -> float:
    """Chemical potential of the ideal gas, (1/beta) ln(1 - exp(-4 pi beta rho)).

    Args:
        point: Thermodynamic state.

    Returns:
        The (negative) chemical potential.
    """
    return float(log1mexp(4.0 * math.pi * point.beta_rho)) / point.beta


def f0(point: ThermoPoint) -> float:
    """Free energy per unit area of the ideal gas.

    Evaluated as -(pi^2/6 - Li2(exp(-4 pi beta rho)))/(4 pi beta^2), which is the
    usual form with Li2(1 - exp(-4 pi beta rho)) after the reflection identity
    and stays accurate in both asymptotic directions.

    Args:
        point: Thermodynamic state.

    Returns:
        The free energy density, always negative.
    """
    x = 4.0 * math.pi * point.beta_rho
    tail = float(li2(math.exp(-x))) if x < _EXP_UNDERFLOW else 0.0
    return -(ZETA2 - tail) / (4.0 * math.pi * point.beta**2)


def density_from_mu(beta: float, mu: float) -> float:
    """Density -(1/(4 pi beta)) ln(1 - exp(beta mu)) at chemical potential mu.

    Args:
        beta: Inverse temperature.
        mu: Chemical potential, mu <= 0.

    Returns:
        The density; inf at mu = 0.

    Raises:
        DomainError: If mu > 0 or beta <= 0.
    """
    if beta <= 0.0:
        raise DomainError(f"beta must be positive, got {beta}")
    if mu > 0.0:
        logger.error("Positive chemical potential %g has no ideal-gas density", mu)
        raise DomainError(f"mu must be <= 0, got {mu}")
    if mu == 0.0:
        return math.inf

    return -float(log1mexp(-beta * mu)) / (4.0 * math.pi * beta)


def pressure(point: ThermoPoint) -> float:
    """Pressure Li2(exp(beta mu0))/(4 pi beta^2) of the ideal gas.

    Args:
        point: Thermodynamic state.

    Returns:
        The pressure, equal to mu0 * rho - f0.
    """
    x = 4.0 * math.pi * point.beta_rho
    fugacity = -math.expm1(-x)
    return float(li2(fugacity)) / (4.0 * math.pi * point.beta**2)


@dataclass(frozen=True)
class AsymptoticForms:
    """Leading asymptotic forms of f0(x, 1) for large and small x."""

    large: float
    small: float


def f0_asymptotics(x: float) -> AsymptoticForms:
    """Leading forms -pi/(24 x^2) (x large) and -(1 - ln(4 pi x))/x - pi (x small).

    Args:
        x: Dimensionless beta*rho.

    Returns:
        Both asymptotic forms evaluated at x.
    """
    if x <= 0.0:
        raise DomainError(f"x must be positive, got {x}")
    large = -math.pi / (24.0 * x**2)
    small = -(1.0 - math.log(4.0 * math.pi * x)) / x - math.pi
    return AsymptoticForms(large=large, small=small)
