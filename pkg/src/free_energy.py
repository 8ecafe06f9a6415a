#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Critical temperature, correction term, variational principle and the error budget.

All quantities of the error budget are dimensionless: lengths are measured in units of
rho^{-1/2} and the error terms in units of rho^2/sigma, sigma = |ln a^2 rho|. sigma is
handled through L = ln(sigma) throughout so that states with sigma beyond the float range
remain computable.
"""

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from scipy import integrate, optimize

import dyson_kernel as dk
import ideal_gas as ig
from special_fns import DomainError, log1mexp

logger = logging.getLogger(__name__)

DEFAULT_CONSTANTS: dict[str, float] = {
    "error_constant": 1.0,
    "z1_constant": 1.0,
    "z2_constant": 1.0,
    "z3_constant": 1.0,
    "z4_constant": 1.0,
    "z5_constant": 1.0,
    "kappa_delta": 0.5,
    "range_over_a": 1.0,
}

NEARCRITICAL_POWER = 1.0 / 59.0
GROUNDSTATE_POWER = 233.0 / 580.0
SUBCRITICAL_LOG_POWER = 30.0
PC_SEARCH_DECADES = 20.0
VARIATIONAL_GRID = 10_000
VARIATIONAL_MAX_LOG_SIGMA = 709.0
J_NEGLIGIBLE = 60.0
EXP_LIMIT = 700.0
WORST_CASE_SAMPLES = 400
WORST_CASE_WIDTH = 4.0
FOUR_PI = 4.0 * math.pi


class Regime(str, Enum):
    """Temperature regime selecting the cutoff momentum and the error row."""

    SUBCRITICAL = "subcritical"
    NEARCRITICAL = "nearcritical"
    SUPERCRITICAL = "supercritical"
    GROUNDSTATE = "groundstate"


@dataclass(frozen=True)
class CriticalData:
    """Critical temperature and superfluid density of a state.

    Attributes:
        beta_c: ln(sigma)/(4 pi rho).
        rho_s: rho [1 - beta_c/beta]_+.
        tilde_pc_sq_beta: beta p~_c^2, zero iff exp(4 pi beta rho) <= sigma.
        sigma: |ln a^2 rho|, inf beyond the float range.
        log_sigma: ln(sigma).
    """

    beta_c: float
    rho_s: float
    tilde_pc_sq_beta: float
    sigma: float
    log_sigma: float


def _exp(x: float) -> float:
    return math.exp(x) if x < EXP_LIMIT else math.inf


def _log_minus_beta_mu0(x: float) -> float:
    """ln(-beta mu0) = ln(-ln(1 - e^{-x}))."""
    if x > EXP_LIMIT:
        return -x
    return math.log(-float(log1mexp(x)))


def _log_tilde_pc_sq_beta(x: float, log_sigma: float) -> float:
    """ln(beta p~_c^2) with beta p~_c^2 = [e^x/sigma - 1]_+ / (e^x - 1)."""
    if x <= log_sigma:
        return -math.inf
    return -log_sigma + math.log(-math.expm1(log_sigma - x)) - math.log(-math.expm1(-x))


def _point_log_sigma(point: ig.ThermoPoint) -> float:
    if point.log_sigma is None:
        raise DomainError("state carries no scattering length")
    if not point.log_sigma > 0.0:
        raise DomainError(f"need a^2 rho < 1/e, got ln(sigma)={point.log_sigma}")
    return point.log_sigma


def critical_data(point: ig.ThermoPoint) -> CriticalData:
    """Critical inverse temperature, superfluid density and the momentum p~_c.

    Args:
        point: State with a scattering length.

    Returns:
        The critical data.

    Raises:
        DomainError: If a^2 rho >= 1/e.
    """
    log_sigma = _point_log_sigma(point)
    beta_c = log_sigma / (FOUR_PI * point.rho)
    rho_s = point.rho * max(1.0 - beta_c / point.beta, 0.0)
    x = FOUR_PI * point.beta_rho
    return CriticalData(
        beta_c=beta_c,
        rho_s=rho_s,
        tilde_pc_sq_beta=math.exp(_log_tilde_pc_sq_beta(x, log_sigma)),
        sigma=point.sigma,
        log_sigma=log_sigma,
    )


def correction_term(point: ig.ThermoPoint) -> float:
    """Interaction term (4 pi rho^2/sigma)(2 - [1 - beta_c/beta]_+^2)."""
    data = critical_data(point)
    bracket = max(1.0 - data.beta_c / point.beta, 0.0)
    return FOUR_PI * point.rho**2 * math.exp(-data.log_sigma) * (2.0 - bracket**2)


@dataclass(frozen=True)
class ErrorBudget:
    """Regime, cutoff momentum, parameters and error terms of the lower bound.

    Attributes:
        regime: Selected regime.
        beta_rho: beta rho.
        log_sigma: ln(sigma).
        pc_sq_beta: beta p_c^2 of the regime's leading-order choice, at least beta p~_c^2.
        refined_pc_sq_beta: Minimiser of A1 + A2 + A3 over beta p_c^2 >= beta p~_c^2.
        tilde_pc_sq_beta: beta p~_c^2.
        params: Length scales and presets at the refined cutoff, lengths times sqrt(rho).
        A1: Cutoff-shift term at the leading-order cutoff.
        A2: Condensate-mode term at the leading-order cutoff.
        A3: Optimised-range term at the leading-order cutoff.
        row_value: The regime's row of the total error.
        o1_bound: error_constant times the optimised error, plus any range error.
        z_terms: Z1..Z5 diagnostics in units of rho^2/sigma.
    """

    regime: Regime
    beta_rho: float
    log_sigma: float
    pc_sq_beta: float
    refined_pc_sq_beta: float
    tilde_pc_sq_beta: float
    params: dict[str, float]
    A1: float  # noqa: N815
    A2: float  # noqa: N815
    A3: float  # noqa: N815
    row_value: float
    o1_bound: float
    z_terms: dict[str, float] = field(default_factory=dict)

    @property
    def perturbative_o1(self) -> float:
        """A1 + A2 + A3 at the leading-order cutoff."""
        return self.A1 + self.A2 + self.A3

    @property
    def vacuous(self) -> bool:
        """The bound says nothing when o1_bound >= 1."""
        return self.o1_bound >= 1.0

    @property
    def perturbative_vacuous(self) -> bool:
        """The leading-order cutoff fails once its error reaches one."""
        return self.perturbative_o1 >= 1.0

    def to_dict(self) -> dict[str, Any]:
        """Serialise for JSON output; non-finite floats become strings."""

        def clean(value: Any) -> Any:
            if isinstance(value, float) and not math.isfinite(value):
                return str(value)
            if isinstance(value, dict):
                return {key: clean(item) for key, item in value.items()}
            return value

        return clean(
            {
                "regime": self.regime.value,
                "beta_rho": self.beta_rho,
                "log_sigma": self.log_sigma,
                "pc_sq_beta": self.pc_sq_beta,
                "refined_pc_sq_beta": self.refined_pc_sq_beta,
                "tilde_pc_sq_beta": self.tilde_pc_sq_beta,
                "params": self.params,
                "A1": self.A1,
                "A2": self.A2,
                "A3": self.A3,
                "row_value": self.row_value,
                "perturbative_o1": self.perturbative_o1,
                "o1_bound": self.o1_bound,
                "vacuous": self.vacuous,
                "perturbative_vacuous": self.perturbative_vacuous,
                "z_terms": self.z_terms,
            }
        )


def select_regime(beta_rho: float, log_sigma: float) -> Regime:
    """Pick the regime by the leading-order thresholds, ties going to the lower regime."""
    x = FOUR_PI * beta_rho
    log_br = math.log(beta_rho)
    if x <= log_sigma - SUBCRITICAL_LOG_POWER * math.log(log_sigma):
        return Regime.SUBCRITICAL
    if log_br <= NEARCRITICAL_POWER * log_sigma:
        return Regime.NEARCRITICAL
    if log_br <= GROUNDSTATE_POWER * log_sigma:
        return Regime.SUPERCRITICAL
    return Regime.GROUNDSTATE


@dataclass(frozen=True)
class _State:
    """Logarithms shared by the error terms of one (beta rho, sigma) pair."""

    beta_rho: float
    log_br: float
    log_sigma: float
    log_m: float
    log_tilde_pc: float
    log_tilde_tau: float
    d: float

    @classmethod
    def build(cls, beta_rho: float, log_sigma: float) -> "_State":
        x = FOUR_PI * beta_rho
        log_m = _log_minus_beta_mu0(x)
        log_tilde_pc = _log_tilde_pc_sq_beta(x, log_sigma)
        return cls(
            beta_rho=beta_rho,
            log_br=math.log(beta_rho),
            log_sigma=log_sigma,
            log_m=log_m,
            log_tilde_pc=log_tilde_pc,
            log_tilde_tau=float(np.logaddexp(log_tilde_pc, log_m)),
            d=1.0 + (log_sigma / beta_rho) ** (1.0 / 3.0),
        )

    def log_tau(self, log_pc: float) -> float:
        """ln(beta tau) with tau = p_c^2 - mu0."""
        return float(np.logaddexp(log_pc, self.log_m))

    def a_terms(self, log_pc: float) -> tuple[float, float, float]:
        log_tau = self.log_tau(log_pc)
        a1 = max(log_tau - self.log_tilde_tau, 0.0) / self.beta_rho
        a2 = _exp(self.log_sigma + 2.0 * log_pc - 2.0 * self.log_br)
        a3 = self.d ** (6.0 / 7.0) * _exp((2.0 * self.log_br - log_tau - self.log_sigma) / 28.0)
        return a1, a2, a3

    def total(self, log_pc: float) -> float:
        return sum(self.a_terms(log_pc))


def _leading_order_log_pc(state: _State, regime: Regime) -> float:
    """ln(beta p_c^2) of the regime's leading-order choice."""
    if regime is Regime.SUBCRITICAL:
        log_pc = -math.inf
    elif regime is Regime.NEARCRITICAL:
        log_x = 30.0 * state.log_br - state.log_sigma - state.log_tilde_tau
        # ln_+ of X, taken in log form
        log_pc = 30.0 * state.log_br - state.log_sigma - 28.0 * math.log(max(log_x, 1.0))
    else:
        log_pc = (29.0 / 57.0) * (2.0 * state.log_br - state.log_sigma)
    return max(log_pc, state.log_tilde_pc)


def _refine_log_pc(state: _State, start: float) -> float:
    """Minimise A1 + A2 + A3 over ln(beta p_c^2) >= ln(beta p~_c^2)."""
    lower = state.log_tilde_pc
    if not math.isfinite(lower):
        lower = min(state.log_m, state.log_tilde_tau) - PC_SEARCH_DECADES
    upper = 0.5 * (2.0 * state.log_br - state.log_sigma) + PC_SEARCH_DECADES

    candidates = [start, lower, state.log_tilde_pc]
    if upper > lower:
        result = optimize.minimize_scalar(
            state.total, bounds=(lower, upper), method="bounded", options={"xatol": 1e-10}
        )
        candidates.append(float(result.x))

    best = min(candidates, key=state.total)
    logger.debug("Refined ln(beta pc^2) from %g to %g", start, best)
    return best


def groundstate_row(beta_rho: float, log_sigma: float) -> float:
    """sigma^{4/5}/(beta rho)^2 + sigma^{-1/5} + sigma^{1/10} (ln sigma)^{1/2}/(beta rho)^{1/2}."""
    log_br = math.log(beta_rho)
    return (
        _exp(0.8 * log_sigma - 2.0 * log_br)
        + _exp(-0.2 * log_sigma)
        + _exp(0.1 * log_sigma + 0.5 * math.log(log_sigma) - 0.5 * log_br)
    )


def _presets(state: _State, log_pc: float, kappa_delta: float) -> dict[str, float]:
    """Logarithms of the length scales at the cutoff ln(beta p_c^2), in units of rho^{-1/2}."""
    log_tau = state.log_tau(log_pc)
    log_sigma, log_br = state.log_sigma, state.log_br
    log_r2rho = 3.0 * (log_br / 14.0 - math.log(state.d) / 7.0 - (log_tau + log_sigma) / 28.0)
    log_s = (log_br + 0.5 * log_r2rho - math.log(log_sigma)) / 3.0
    return {
        "log_R2rho": log_r2rho,
        "log_R": 0.5 * log_r2rho,
        "log_s": log_s,
        "log_b": (log_sigma - log_tau) / 4.0,
        "log_D": -log_r2rho / 3.0,
        "log_tau": log_tau,
        "kappa": (1.0 + kappa_delta) * _exp(2.0 * log_s + math.log(log_sigma) - log_br),
    }


def _params(state: _State, logs: Mapping[str, float]) -> dict[str, float]:
    log_phi = 0.5 * state.log_br - state.log_sigma
    return {
        "R": _exp(logs["log_R"]),
        "s": _exp(logs["log_s"]),
        "kappa": logs["kappa"],
        "b": _exp(logs["log_b"]),
        "phi": _exp(log_phi),
        "C": _exp(0.5 * state.log_sigma),
        "epsilon": _exp(logs["log_R"] - logs["log_s"]),
        "D": _exp(logs["log_D"]),
        "tau": _exp(logs["log_tau"] - state.log_br),
        "tilde_tau": _exp(state.log_tilde_tau - state.log_br),
        "d": state.d,
    }


def _z_terms(
    state: _State,
    log_pc: float,
    logs: Mapping[str, float],
    constants: Mapping[str, float],
) -> dict[str, float]:
    """Z1..Z5 in units of rho^2/sigma."""
    log_sigma, log_br, beta_rho = state.log_sigma, state.log_br, state.beta_rho
    log_tau, log_r2rho, log_s = logs["log_tau"], logs["log_R2rho"], logs["log_s"]
    pc = _exp(log_pc)
    sqrt_br = math.sqrt(beta_rho)

    z1 = (
        _exp(log_sigma + log_pc + log_tau - math.log(FOUR_PI) - 2.0 * log_br)
        + 2.0 * sqrt_br * pc / beta_rho
        + (2.0 / math.pi)
        * _exp(0.5 * log_sigma + 2.0 * log_pc - 2.0 * log_br)
        * (1.0 + sqrt_br * _exp(-0.5 * log_sigma)) ** 2
    )

    p = _exp(log_pc - math.log(FOUR_PI) - log_br - log_tau)
    z2 = sqrt_br * (FOUR_PI * p**2 + 8.0 * math.pi * p * (1.0 + 2.0 * _exp(-0.25 * log_sigma)))

    z3 = _exp(-0.5 * (log_sigma + log_tau) - log_r2rho)

    log_b_over_s = logs["log_b"] - log_s
    tail = 0.0
    if log_b_over_s <= math.log(J_NEGLIGIBLE):
        tail = dk.kernel_tail_moment(_exp(log_b_over_s))
    log_range_sq = 2.0 * math.log(constants["range_over_a"]) - _exp(log_sigma) - log_r2rho
    z4 = (
        _exp(-2.0 * log_r2rho + 0.5 * log_br - 0.25 * (log_tau + log_sigma))
        + _exp(-0.5 * log_r2rho - log_s) * tail
        + _exp(0.5 * log_r2rho - log_s)
        + _exp(log_r2rho / 3.0)
        + _exp(0.5 * (log_pc - log_br) + 0.5 * log_r2rho)
        + logs["kappa"]
        + beta_rho**-0.25
        + _exp(log_sigma + log_range_sq) * (1.0 + pc / beta_rho**2)
    )

    a1 = max(log_tau - state.log_tilde_tau, 0.0) / beta_rho
    z5 = (
        _exp(-constants["kappa_delta"] * log_sigma - 2.0 * log_s - log_br)
        + _exp(-0.5 * log_sigma)
        + a1
        + a1**2
    )

    values = {"Z1": z1, "Z2": z2, "Z3": z3, "Z4": z4, "Z5": z5}
    return {name: constants[f"z{name[1]}_constant"] * value for name, value in values.items()}


def error_budget(
    sigma: float | None,
    beta_rho: float,
    constants: Mapping[str, float] | None = None,
    *,
    log_sigma: float | None = None,
    range_error: float = 0.0,
) -> ErrorBudget:
    """Select the regime, choose p_c and the length scales, and evaluate the error terms.

    Args:
        sigma: |ln a^2 rho|, or None when log_sigma is given.
        beta_rho: beta rho.
        constants: Overrides of DEFAULT_CONSTANTS.
        log_sigma: ln(sigma), for sigma beyond the float range.
        range_error: Additive relative error of an infinite-range potential surgery.

    Returns:
        The error budget.

    Raises:
        DomainError: If beta rho < 1 or sigma <= e.
    """
    if (sigma is None) == (log_sigma is None):
        raise DomainError("give exactly one of sigma and log_sigma")
    if log_sigma is None:
        if not sigma > 0.0:
            raise DomainError(f"sigma must be positive, got {sigma}")
        log_sigma = math.log(sigma)
    if not log_sigma > 1.0:
        raise DomainError(f"need sigma > e, got ln(sigma)={log_sigma}")
    if not (beta_rho >= 1.0 and math.isfinite(beta_rho)):
        raise DomainError(f"need beta rho >= 1, got {beta_rho}")
    if range_error < 0.0:
        raise DomainError(f"range error must be nonnegative, got {range_error}")

    merged = {**DEFAULT_CONSTANTS, **(constants or {})}
    state = _State.build(beta_rho, log_sigma)
    regime = select_regime(beta_rho, log_sigma)

    log_pc = _leading_order_log_pc(state, regime)
    a1, a2, a3 = state.a_terms(log_pc)
    refined = _refine_log_pc(state, log_pc)

    if regime is Regime.GROUNDSTATE:
        row_value = groundstate_row(beta_rho, log_sigma)
        optimised = row_value
    else:
        row_value = a1 + a2 + a3
        optimised = state.total(refined)

    logs = _presets(state, refined, merged["kappa_delta"])
    budget = ErrorBudget(
        regime=regime,
        beta_rho=beta_rho,
        log_sigma=log_sigma,
        pc_sq_beta=_exp(log_pc),
        refined_pc_sq_beta=_exp(refined),
        tilde_pc_sq_beta=_exp(state.log_tilde_pc),
        params=_params(state, logs),
        A1=a1,
        A2=a2,
        A3=a3,
        row_value=row_value,
        o1_bound=merged["error_constant"] * optimised + range_error,
        z_terms=_z_terms(state, refined, logs, merged),
    )
    logger.debug(
        "Budget at beta*rho=%g ln(sigma)=%g: %s, o1=%g",
        beta_rho,
        log_sigma,
        regime.value,
        budget.o1_bound,
    )
    return budget


def lower_bound(
    point: ig.ThermoPoint,
    constants: Mapping[str, float] | None = None,
    range_error: float = 0.0,
) -> tuple[float, ErrorBudget]:
    """Two-term lower bound f0 + correction (1 - o1_bound) on the free energy density.

    Args:
        point: State with a scattering length, beta rho >= 1.
        constants: Overrides of DEFAULT_CONSTANTS.
        range_error: Additive relative error of an infinite-range potential surgery.

    Returns:
        The lower bound and its error budget; a vacuous budget is logged, not raised.

    Raises:
        DomainError: If beta rho < 1 or sigma <= e.
    """
    log_sigma = _point_log_sigma(point)
    budget = error_budget(
        None, point.beta_rho, constants, log_sigma=log_sigma, range_error=range_error
    )
    value = ig.f0(point) + correction_term(point) * (1.0 - budget.o1_bound)
    if budget.vacuous:
        logger.warning(
            "Vacuous bound at beta*rho=%g ln(sigma)=%g: o1=%g",
            point.beta_rho,
            log_sigma,
            budget.o1_bound,
        )
    return value, budget


def variational_min(point: ig.ThermoPoint) -> tuple[float, float]:
    """Minimise f0(beta, rho - rho0) + (4 pi/sigma)(2 rho^2 - rho0^2) over 0 <= rho0 <= rho.

    With u = rho0/rho the excess over f0(beta, rho), in units of 4 pi rho^2/sigma, is
    psi(u) = (sigma/x^2) int_{x(1-u)}^{x} -ln(1 - e^{-y}) dy + 2 - u^2 with x = 4 pi beta rho.
    Interior minima are the sign changes of psi' from - to + on a uniform grid, refined
    by Brent's method; they compete with u = 0.

    Args:
        point: State with a scattering length.

    Returns:
        The minimiser rho0 and the minimum value.

    Raises:
        DomainError: If sigma is not a finite float.
    """
    log_sigma = _point_log_sigma(point)
    if log_sigma >= VARIATIONAL_MAX_LOG_SIGMA:
        raise DomainError(f"variational principle needs finite sigma, got ln={log_sigma}")
    sigma = math.exp(log_sigma)
    x = FOUR_PI * point.beta_rho

    def slope(u: float | np.ndarray) -> float | np.ndarray:
        with np.errstate(over="ignore"):
            return sigma / x * -np.asarray(log1mexp(x * (1.0 - u))) - 2.0 * u

    def psi(u: float) -> float:
        if u == 0.0:
            return 2.0
        integral, _ = integrate.quad(
            lambda y: -float(log1mexp(y)), x * (1.0 - u), x, epsabs=0.0, epsrel=1e-12, limit=200
        )
        return sigma / x**2 * integral + 2.0 - u**2

    grid = np.linspace(0.0, 1.0, VARIATIONAL_GRID + 1)[:-1]
    slopes = slope(grid)
    candidates = [0.0]
    for i in np.flatnonzero((slopes[:-1] < 0.0) & (slopes[1:] >= 0.0)):
        candidates.append(float(optimize.brentq(slope, grid[i], grid[i + 1], xtol=1e-15)))

    best = min(candidates, key=psi)
    value = ig.f0(point) + FOUR_PI * point.rho**2 / sigma * psi(best)
    logger.debug("Variational minimiser u=%g among %d candidates", best, len(candidates))
    return best * point.rho, value


def largest_error_rate(log_sigma: float) -> float:
    """Error at the worst temperature near beta_c, of order ln ln sigma / ln sigma.

    Args:
        log_sigma: ln(sigma), above e.

    Returns:
        [ln X - 28 ln ln X]_+/ln sigma + (ln sigma)^58 / (sigma (ln X)^56) with X = (ln sigma)^30.
    """
    if not log_sigma > math.e:
        raise DomainError(f"need ln(sigma) > e, got {log_sigma}")
    ln_l = math.log(log_sigma)
    log_x = 30.0 * ln_l
    return max(log_x - 28.0 * math.log(log_x), 0.0) / log_sigma + _exp(
        58.0 * ln_l - log_sigma - 56.0 * math.log(log_x)
    )


def worst_case_budget(
    log_sigma: float,
    constants: Mapping[str, float] | None = None,
    samples: int = WORST_CASE_SAMPLES,
) -> ErrorBudget:
    """Error budget at the temperature where o1_bound peaks.

    The peak sits where 4 pi beta rho is close to ln(sigma) and is narrow on a log grid in
    beta rho. The scan covers 4 pi beta rho in [ln sigma - 30 ln ln sigma, 4 ln sigma] on a
    linear grid, then refines the worst sample with a bounded search.

    Args:
        log_sigma: ln(sigma), above e.
        constants: Overrides of DEFAULT_CONSTANTS.
        samples: Number of scan points.

    Returns:
        The budget with the largest o1_bound found.

    Raises:
        DomainError: If ln(sigma) <= e or samples < 2.
    """
    if not log_sigma > math.e:
        raise DomainError(f"need ln(sigma) > e, got {log_sigma}")
    if samples < 2:
        raise DomainError(f"need at least two scan points, got {samples}")

    def budget(beta_rho: float) -> ErrorBudget:
        return error_budget(None, beta_rho, constants, log_sigma=log_sigma)

    lo = max(1.0, (log_sigma - SUBCRITICAL_LOG_POWER * math.log(log_sigma)) / FOUR_PI)
    hi = max(2.0 * lo, WORST_CASE_WIDTH * log_sigma / FOUR_PI)
    grid = np.linspace(lo, hi, samples)
    scanned = [budget(float(b)) for b in grid]
    index = int(np.argmax([b.o1_bound for b in scanned]))
    worst = scanned[index]

    left, right = float(grid[max(index - 1, 0)]), float(grid[min(index + 1, samples - 1)])
    found = optimize.minimize_scalar(
        lambda b: -budget(b).o1_bound,
        bounds=(left, right),
        method="bounded",
        options={"xatol": 1e-10 * right},
    )
    refined = budget(float(found.x))
    if refined.o1_bound > worst.o1_bound:
        worst = refined
    logger.debug(
        "Worst case at ln(sigma)=%g: beta rho=%g, o1=%g", log_sigma, worst.beta_rho, worst.o1_bound
    )
    return worst
