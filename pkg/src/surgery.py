#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Potential modifications with certified scattering-length bounds.

Two constructions are provided. cutoff_range truncates a potential at a smaller range and
reports the bound 1/ln(R/a_cut) >= 1/(ln(R/a) + tail/(4 pi)), where tail is the log-squared
moment of the removed part. cap_integral lowers a potential until its plane integral is at
most 4 pi phi and reports the bound on the scattering length of the result.
"""

import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any

from scipy import optimize

import scattering as sc
from special_fns import DomainError

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 0.5
ROOT_XTOL = 1e-14
ROOT_RTOL = 1e-12
BUDGET_SLACK = 1e-10
BOUND_TOL = 1e-12
MAX_DOUBLINGS = 200


class SurgeryError(RuntimeError):
    """Custom exception for root bracketing failures in the capping construction."""


class ConstructionCase(str, Enum):
    """Which construction produced the modified potential."""

    RANGE_CUTOFF = "range_cutoff"
    CAP_CASE1_TAIL = "cap_case1_tail"
    CAP_CASE2_SHAVE = "cap_case2_shave"
    UNCHANGED = "unchanged"


@dataclass(frozen=True)
class SurgeryReport:
    """Outcome of a potential modification and its certified inequality.

    Attributes:
        original_a: Scattering length of the input potential.
        modified_a: Scattering length of the modified potential.
        bound_lhs: Left side of the certified inequality.
        bound_rhs: Right side of the certified inequality.
        construction_case: Construction that was applied.
        R: Normalisation radius.
        phi: Integral budget parameter, capping only.
        delta: Shaving fraction, capping only.
        s_or_t: Cut radius s (tail case) or hard-core radius t (shave case).
        tau: Ceiling applied inside the shaved shell.
        cut_radius: New range, cutoff only.
        tail_integral: Log-squared moment of the removed tail, cutoff only.
        integral_budget: Plane integral of the modified potential.
        profile_value: Profile of the modified potential at the edge of its support.
        profile_bound: Ceiling 1/sqrt(phi ln(R/a)) for profile_value.
        classification: How the hard-core radius t was classified.
    """

    original_a: float
    modified_a: float
    bound_lhs: float
    bound_rhs: float
    construction_case: ConstructionCase
    R: float
    phi: float | None = None
    delta: float | None = None
    s_or_t: float | None = None
    tau: float | None = None
    cut_radius: float | None = None
    tail_integral: float | None = None
    integral_budget: float | None = None
    profile_value: float | None = None
    profile_bound: float | None = None
    classification: str = ""

    @property
    def bound_holds(self) -> bool:
        """Check lhs >= rhs up to rounding."""
        return self.bound_lhs >= self.bound_rhs - BOUND_TOL * abs(self.bound_rhs)

    @property
    def budget_holds(self) -> bool:
        """Check the plane integral against 4 pi phi."""
        if self.phi is None or self.integral_budget is None:
            return True
        return self.integral_budget <= 4.0 * math.pi * self.phi * (1.0 + BUDGET_SLACK)

    @property
    def profile_holds(self) -> bool:
        """Check the profile ceiling when it applies."""
        if self.profile_value is None or self.profile_bound is None:
            return True
        return self.profile_value <= self.profile_bound * (1.0 + 1e-8)

    @property
    def certified(self) -> bool:
        """All checks of the report pass."""
        return self.bound_holds and self.budget_holds and self.profile_holds

    def to_dict(self) -> dict[str, Any]:
        """Serialise the report for JSON output."""
        data = asdict(self)
        data["construction_case"] = self.construction_case.value
        data["certified"] = self.certified
        return data


def cutoff_range(
    v: sc.RadialPotential, R0_new: float, R: float  # noqa: N803
) -> tuple[sc.RadialPotential, SurgeryReport]:
    """Truncate v at R0_new and certify the scattering-length bound of the cutoff.

    Args:
        v: Potential.
        R0_new: New range.
        R: Normalisation radius beyond the range of v.

    Returns:
        The truncated potential and its report.

    Raises:
        DomainError: If R0_new is not positive.
        DegenerateError: If the truncated potential vanishes identically.
    """
    if not R0_new > 0.0:
        raise DomainError(f"cutoff radius must be positive, got {R0_new}")

    original = sc.scattering_length(v, R)
    if original.degenerate:
        raise sc.DegenerateError("potential vanishes identically")

    if R0_new >= v.range_R0:
        bound = 1.0 / original.log_ratio
        logger.info("Cutoff %g beyond the support, potential unchanged", R0_new)
        return v, SurgeryReport(
            original_a=original.a,
            modified_a=original.a,
            bound_lhs=bound,
            bound_rhs=bound,
            construction_case=ConstructionCase.RANGE_CUTOFF,
            R=R,
            cut_radius=R0_new,
            tail_integral=0.0,
        )

    cut = v.truncated(R0_new)
    if cut.is_zero():
        logger.error("Cutoff at %g leaves an identically vanishing potential", R0_new)
        raise sc.DegenerateError(f"potential vanishes below r={R0_new}")

    modified = sc.scattering_length(cut, R)
    tail = sc.finiteness_integral(v, modified.a, r_min=R0_new)
    lhs = 1.0 / modified.log_ratio
    rhs = 1.0 / (original.log_ratio + tail / (4.0 * math.pi))

    report = SurgeryReport(
        original_a=original.a,
        modified_a=modified.a,
        bound_lhs=lhs,
        bound_rhs=rhs,
        construction_case=ConstructionCase.RANGE_CUTOFF,
        R=R,
        cut_radius=R0_new,
        tail_integral=tail,
    )
    if not report.bound_holds:
        logger.warning("Cutoff bound violated: lhs=%.17g rhs=%.17g", lhs, rhs)
    logger.info("Cut potential at %g: a=%g -> %g", R0_new, original.a, modified.a)
    return cut, report


def balanced_delta(phi: float, log_ratio: float) -> float:
    """Shaving fraction sqrt(ln(R/a)/phi) that balances the two losses of the capping bound.

    Args:
        phi: Integral budget parameter.
        log_ratio: ln(R/a).

    Returns:
        The shaving fraction.

    Raises:
        DomainError: If the fraction is not inside (0, 1).
    """
    delta = math.sqrt(log_ratio / phi)
    if not 0.0 < delta < 1.0:
        raise DomainError(f"balanced delta {delta} outside (0, 1); phi too small")
    return delta


def capping_bound(phi: float, delta: float, log_ratio: float) -> float:
    """Lower bound on 1/ln(R/a_capped) in terms of the original ln(R/a)."""
    return (1.0 - 1.0 / math.sqrt(phi * log_ratio) + math.log(1.0 - delta) / log_ratio) / log_ratio


def _solve_tail_cut(v: sc.RadialPotential, t: float, phi: float) -> float:
    target = 2.0 * phi
    return optimize.brentq(
        lambda s: v.moment(s) - target, t, v.range_R0, xtol=ROOT_XTOL, rtol=ROOT_RTOL
    )


def _solve_shave_level(v: sc.RadialPotential, lo: float, t: float, shortfall: float) -> float:
    def excess(tau: float) -> float:
        return v.moment(lo, t, cap=tau) - shortfall

    upper = max(shortfall / (t**2 - lo**2), 1.0)
    for _ in range(MAX_DOUBLINGS):
        if excess(upper) >= 0.0:
            break
        upper *= 2.0
    else:
        logger.error("Could not bracket the shave level below %g", upper)
        raise SurgeryError("shave level cannot be bracketed")

    tau = optimize.brentq(excess, 0.0, upper, xtol=ROOT_XTOL, rtol=ROOT_RTOL)
    logger.debug("Shave level tau=%.17g bracketed below %g", tau, upper)
    return tau


def cap_integral(
    v: sc.RadialPotential,
    phi: float,
    delta: float = DEFAULT_DELTA,
    *,
    R: float,  # noqa: N803
) -> tuple[sc.RadialPotential, SurgeryReport]:
    """Replace v by 0 <= v_capped <= v with plane integral at most 4 pi phi.

    With t the hard-core radius (0 without one) the construction either removes v below
    the radius s where the remaining moment int_s r v dr equals 2 phi, or, when the part
    outside the core is too small for that, fills the shell [(1 - delta) t, t) at the
    level tau that makes up the missing moment.

    Args:
        v: Finite-range potential.
        phi: Integral budget parameter, phi > 0.
        delta: Shaving fraction in (0, 1).
        R: Normalisation radius beyond the range of v.

    Returns:
        The capped potential and its report.

    Raises:
        DomainError: If phi or delta is out of range.
        SurgeryError: If the shave level cannot be bracketed.
    """
    if not phi > 0.0:
        raise DomainError(f"phi must be positive, got {phi}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")

    original = sc.scattering_length(v, R)
    t = v.hardcore_radius
    moment_t = v.moment(t)
    target = 2.0 * phi
    classification = "hard core" if t > 0.0 else "locally integrable"

    if original.degenerate or (t == 0.0 and moment_t <= target):
        log_ratio = original.log_ratio
        lhs = 0.0 if original.degenerate else 1.0 / log_ratio
        rhs = 0.0 if original.degenerate else capping_bound(phi, delta, log_ratio)
        logger.info("Potential already within the integral budget, unchanged")
        return v, SurgeryReport(
            original_a=original.a,
            modified_a=original.a,
            bound_lhs=lhs,
            bound_rhs=rhs,
            construction_case=ConstructionCase.UNCHANGED,
            R=R,
            phi=phi,
            delta=delta,
            s_or_t=t,
            integral_budget=v.integral(),
            classification=classification,
        )

    tau: float | None = None
    if moment_t >= target:
        case = ConstructionCase.CAP_CASE1_TAIL
        s_or_t = _solve_tail_cut(v, t, phi)
        capped = v.removed_below(s_or_t)
        sample_r = s_or_t
    else:
        case = ConstructionCase.CAP_CASE2_SHAVE
        s_or_t = t
        inner = (1.0 - delta) * t
        tau = _solve_shave_level(v, inner, t, target - moment_t)
        segments = [sc.Segment(0.0, inner, sc.CONST, 0.0), sc.Segment(inner, t, sc.CONST, tau)]
        segments += list(v.segments[1:])
        capped = sc.RadialPotential(tuple(segments))
        sample_r = inner

    modified = sc.scattering_length(capped, R)
    log_ratio = original.log_ratio
    report = SurgeryReport(
        original_a=original.a,
        modified_a=modified.a,
        bound_lhs=1.0 / modified.log_ratio,
        bound_rhs=capping_bound(phi, delta, log_ratio),
        construction_case=case,
        R=R,
        phi=phi,
        delta=delta,
        s_or_t=s_or_t,
        tau=tau,
        integral_budget=capped.integral(),
        profile_value=float(modified.profile(sample_r)[0]),
        profile_bound=1.0 / math.sqrt(phi * log_ratio),
        classification=classification,
    )

    if not report.certified:
        logger.warning("Capping checks failed for phi=%g delta=%g: %s", phi, delta, report)
    logger.info("Capped potential (%s): a=%g -> %g", case.value, original.a, modified.a)
    return capped, report


def range_error_term(report: SurgeryReport, sigma: float) -> float:
    """Relative error tail/sigma contributed by a range cutoff to the free-energy bound."""
    if report.tail_integral is None:
        raise DomainError("report does not come from a range cutoff")
    return report.tail_integral / sigma
