# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.
#
# Learn more about testing at: https://juju.is/docs/sdk/testing

"""Unit tests for the critical data, the lower bound and the error budget."""

import math

import numpy as np
import pytest

import free_energy as fe
import ideal_gas as ig
from special_fns import DomainError

RATE_CONSTANT = 400.0


def _point(beta_rho: float, log_sigma: float, rho: float = 1.0) -> ig.ThermoPoint:
    return ig.ThermoPoint.from_sigma(beta=beta_rho / rho, rho=rho, log_sigma=log_sigma)


def test_critical_data_examples():
    """Test beta_c, rho_s and p~_c on closed-form states."""
    data = fe.critical_data(_point(2.0, 1.0))
    assert data.beta_c == pytest.approx(1.0 / (4.0 * math.pi))

    log_sigma = math.log(50.0)
    beta_c = log_sigma / (4.0 * math.pi)
    data = fe.critical_data(_point(2.0 * beta_c, log_sigma))
    assert data.rho_s == pytest.approx(0.5)

    # e^{4 pi beta rho} = 2 sigma gives beta p~_c^2 = 1/(2 sigma - 1)
    sigma = 50.0
    data = fe.critical_data(_point(math.log(2.0 * sigma) / (4.0 * math.pi), math.log(sigma)))
    assert data.tilde_pc_sq_beta == pytest.approx(1.0 / (2.0 * sigma - 1.0), rel=1e-12)

    data = fe.critical_data(_point(0.5 * beta_c, log_sigma))
    assert data.rho_s == 0.0
    assert data.tilde_pc_sq_beta == 0.0


def test_critical_data_requires_scattering_length():
    """Test that the ideal gas has no critical data here."""
    with pytest.raises(DomainError):
        fe.critical_data(ig.ThermoPoint(beta=1.0, rho=1.0))


def test_correction_term_examples():
    """Test the correction at high temperature, at 2 beta_c and far below T_c."""
    sigma = 1e4
    log_sigma = math.log(sigma)
    beta_c = log_sigma / (4.0 * math.pi)

    assert fe.correction_term(_point(0.5 * beta_c, log_sigma)) == pytest.approx(
        8.0 * math.pi / sigma
    )
    assert fe.correction_term(_point(2.0 * beta_c, log_sigma)) == pytest.approx(
        7.0 * math.pi / sigma
    )
    assert fe.correction_term(_point(1e8 * beta_c, log_sigma)) == pytest.approx(
        4.0 * math.pi / sigma, rel=1e-7
    )


def test_correction_factor_range():
    """Test correction/(4 pi rho^2/sigma) in [1, 2] and non-increasing in beta."""
    log_sigma = math.log(1e3)
    factors = [
        fe.correction_term(_point(b, log_sigma, rho=0.3)) * 1e3 / (4.0 * math.pi * 0.09)
        for b in np.geomspace(0.01, 100.0, 60)
    ]
    assert all(1.0 - 1e-12 <= f <= 2.0 + 1e-12 for f in factors)
    assert all(later <= earlier + 1e-12 for earlier, later in zip(factors, factors[1:]))


def test_budget_preconditions():
    """Test the domain of the error budget."""
    with pytest.raises(DomainError):
        fe.error_budget(1e3, 0.5)
    with pytest.raises(DomainError):
        fe.error_budget(2.0, 3.0)
    with pytest.raises(DomainError):
        fe.error_budget(1e3, 3.0, log_sigma=math.log(1e3))
    with pytest.raises(DomainError):
        fe.error_budget(1e3, 3.0, range_error=-1.0)


def test_subcritical_example():
    """Test that deep in the normal phase the cutoff vanishes."""
    log_sigma = 1000.0
    budget = fe.error_budget(None, log_sigma / (8.0 * math.pi), log_sigma=log_sigma)

    assert budget.regime is fe.Regime.SUBCRITICAL
    assert budget.pc_sq_beta == 0.0
    assert budget.A1 == 0.0
    assert budget.A2 == 0.0
    assert budget.A3 > 0.0


def test_nearcritical_example():
    """Test the bound at beta = beta_c against the largest-error rate."""
    log_sigma = 200.0
    budget = fe.error_budget(None, log_sigma / (4.0 * math.pi), log_sigma=log_sigma)

    assert budget.regime is fe.Regime.NEARCRITICAL
    assert budget.pc_sq_beta >= budget.tilde_pc_sq_beta
    assert budget.o1_bound <= RATE_CONSTANT * math.log(log_sigma) / log_sigma
    assert fe.largest_error_rate(log_sigma) <= RATE_CONSTANT * math.log(log_sigma) / log_sigma


@pytest.mark.parametrize("log_sigma", [50.0, 100.0, 200.0])
def test_error_rate_on_grid(log_sigma):
    """Test o1 on a 200-point grid up to sigma^{1/2} and the location of its maximum."""
    grid = np.exp(np.linspace(0.0, 0.5 * log_sigma, 202)[:-2])
    bounds = np.array(
        [fe.error_budget(None, float(b), log_sigma=log_sigma).o1_bound for b in grid]
    )

    assert np.all(np.isfinite(bounds))
    assert np.all(bounds >= 0.0)
    assert bounds.max() <= RATE_CONSTANT * math.log(log_sigma) / log_sigma

    critical = log_sigma / (4.0 * math.pi)
    peak = grid[int(np.argmax(bounds))]
    assert critical / 4.0 <= peak <= 4.0 * critical


@pytest.mark.parametrize("log_sigma", [50.0, 100.0, 200.0])
def test_worst_case_dominates_grid(log_sigma):
    """Test that the critical-window scan finds at least the grid maximum, here above one."""
    grid = np.exp(np.linspace(0.0, 0.5 * log_sigma, 202)[:-2])
    largest = max(fe.error_budget(None, float(b), log_sigma=log_sigma).o1_bound for b in grid)

    worst = fe.worst_case_budget(log_sigma)

    assert worst.o1_bound >= largest * (1.0 - 1e-9)
    assert worst.vacuous


def test_worst_case_informative_at_large_coupling():
    """Test a worst case below one that shrinks with sigma and stays under the rate ceiling."""
    worst = [fe.worst_case_budget(L) for L in (5000.0, 10000.0, 20000.0)]

    for budget in worst:
        log_sigma = budget.log_sigma
        critical = log_sigma / (4.0 * math.pi)
        assert critical / 2.0 <= budget.beta_rho <= 2.0 * critical
        assert not budget.vacuous
        assert budget.o1_bound <= RATE_CONSTANT * math.log(log_sigma) / log_sigma
    assert worst[0].o1_bound > worst[1].o1_bound > worst[2].o1_bound


def test_worst_case_domain():
    """Test the coupling and sample-count limits of the scan."""
    with pytest.raises(DomainError):
        fe.worst_case_budget(2.0)
    with pytest.raises(DomainError):
        fe.worst_case_budget(100.0, samples=1)


def test_a_terms_nonnegative():
    """Test A1, A2, A3 >= 0 and p_c >= p~_c across the regimes."""
    log_sigma = 300.0
    for beta_rho in np.geomspace(1.0, math.exp(0.49 * log_sigma), 40):
        budget = fe.error_budget(None, float(beta_rho), log_sigma=log_sigma)
        assert min(budget.A1, budget.A2, budget.A3) >= 0.0
        assert budget.pc_sq_beta >= budget.tilde_pc_sq_beta
        assert budget.refined_pc_sq_beta >= budget.tilde_pc_sq_beta
        assert budget.o1_bound >= 0.0


def test_regimes_exhaustive_and_ordered():
    """Test that every lattice point lands in one regime, in temperature order."""
    order = list(fe.Regime)
    for log_sigma in (50.0, 200.0, 1000.0):
        regimes = [
            fe.select_regime(float(b), log_sigma)
            for b in np.exp(np.linspace(0.0, 0.6 * log_sigma, 300))
        ]
        indices = [order.index(regime) for regime in regimes]
        assert indices == sorted(indices)
        assert regimes[-1] is fe.Regime.GROUNDSTATE


def test_regime_switch_points():
    """Test the regime on either side of the near and ground-state switches."""
    log_sigma = 200.0
    near = math.exp(log_sigma / 59.0)
    ground = math.exp(233.0 * log_sigma / 580.0)

    assert fe.select_regime(near * (1.0 - 1e-9), log_sigma) is fe.Regime.NEARCRITICAL
    assert fe.select_regime(near * (1.0 + 1e-9), log_sigma) is fe.Regime.SUPERCRITICAL
    assert fe.select_regime(ground * (1.0 - 1e-9), log_sigma) is fe.Regime.SUPERCRITICAL
    assert fe.select_regime(ground * (1.0 + 1e-9), log_sigma) is fe.Regime.GROUNDSTATE


def test_groundstate_row():
    """Test the ground-state error terms at large beta rho."""
    log_sigma = 100.0
    beta_rho = math.exp(0.45 * log_sigma)
    budget = fe.error_budget(None, beta_rho, log_sigma=log_sigma)

    expected = (
        math.exp(0.8 * log_sigma) / beta_rho**2
        + math.exp(-0.2 * log_sigma)
        + math.exp(0.1 * log_sigma) * math.sqrt(log_sigma / beta_rho)
    )
    assert budget.regime is fe.Regime.GROUNDSTATE
    assert budget.row_value == pytest.approx(expected, rel=1e-12)
    assert budget.o1_bound == pytest.approx(expected, rel=1e-12)


def test_perturbative_limit_flagged():
    """Test that the leading-order cutoff breaks down at beta rho = sigma^{1/2}."""
    log_sigma = 100.0
    budget = fe.error_budget(None, math.exp(0.5 * log_sigma), log_sigma=log_sigma)

    assert budget.A2 == pytest.approx(1.0)
    assert budget.perturbative_vacuous
    assert budget.to_dict()["perturbative_vacuous"] is True


@pytest.mark.parametrize("log_sigma", [200.0, 400.0])
def test_continuity_at_switches(log_sigma):
    """Test order-of-magnitude agreement across the regime switches."""
    for power in (fe.NEARCRITICAL_POWER, fe.GROUNDSTATE_POWER):
        switch = math.exp(power * log_sigma)
        below = fe.error_budget(None, switch * (1.0 - 1e-9), log_sigma=log_sigma)
        above = fe.error_budget(None, switch * (1.0 + 1e-9), log_sigma=log_sigma)
        assert below.regime is not above.regime
        assert 0.1 <= above.o1_bound / below.o1_bound <= 10.0


def test_error_constant_and_range_error():
    """Test that the constant scales the bound and the range error adds to it."""
    base = fe.error_budget(1e80, 20.0)
    scaled = fe.error_budget(1e80, 20.0, {"error_constant": 3.0}, range_error=1e-3)
    assert scaled.o1_bound == pytest.approx(3.0 * base.o1_bound + 1e-3)


def test_z_terms():
    """Test finite nonnegative Z-terms and their configurable constants."""
    base = fe.error_budget(None, 20.0, log_sigma=80.0)
    doubled = fe.error_budget(None, 20.0, {"z1_constant": 2.0}, log_sigma=80.0)

    assert set(base.z_terms) == {"Z1", "Z2", "Z3", "Z4", "Z5"}
    assert all(math.isfinite(v) and v >= 0.0 for v in base.z_terms.values())
    assert doubled.z_terms["Z1"] == pytest.approx(2.0 * base.z_terms["Z1"])
    assert doubled.z_terms["Z4"] == base.z_terms["Z4"]


def test_params_presets():
    """Test the preset length scales and their orderings."""
    log_sigma = 80.0
    budget = fe.error_budget(None, 20.0, log_sigma=log_sigma)
    params = budget.params

    assert params["phi"] == pytest.approx(math.sqrt(20.0) * math.exp(-log_sigma))
    assert params["C"] == pytest.approx(math.exp(0.5 * log_sigma))
    assert params["epsilon"] == pytest.approx(params["R"] / params["s"])
    assert params["D"] == pytest.approx(params["R"] ** (-2.0 / 3.0))
    assert params["s"] < params["b"]
    assert params["kappa"] > 0.0
    assert params["d"] == pytest.approx(1.0 + (log_sigma / 20.0) ** (1.0 / 3.0))


def test_budget_to_dict_stringifies_infinities():
    """Test that the JSON form carries no bare infinities."""
    data = fe.error_budget(None, 5.0, log_sigma=1000.0).to_dict()

    def walk(value):
        if isinstance(value, dict):
            return all(walk(v) for v in value.values())
        return not (isinstance(value, float) and not math.isfinite(value))

    assert walk(data)
    assert data["regime"] == "subcritical"


def test_lower_bound_below_ideal_plus_correction():
    """Test f0 < f_lower < f0 + correction for a non-vacuous budget."""
    point = _point(5.0, 20.0)
    value, budget = fe.lower_bound(point, {"error_constant": 0.1})
    f0 = ig.f0(point)
    correction = fe.correction_term(point)

    assert not budget.vacuous
    assert value == pytest.approx(f0 + correction * (1.0 - budget.o1_bound), rel=1e-12)
    assert f0 < value < f0 + correction


def test_lower_bound_vacuous_is_logged(caplog):
    """Test that a vacuous budget is reported but not raised."""
    point = _point(3.0, 20.0)
    with caplog.at_level("WARNING", logger="free_energy"):
        _, budget = fe.lower_bound(point)

    assert budget.vacuous
    assert "Vacuous bound" in caplog.text


def test_lower_bound_requires_beta_rho_one():
    """Test the precondition beta rho >= 1."""
    with pytest.raises(DomainError):
        fe.lower_bound(_point(0.5, 10.0))


def test_lower_bound_gap_closes():
    """Test that the relative gap to the correction term shrinks as sigma grows."""
    gaps = []
    for log_sigma in (100.0, 200.0, 400.0, 800.0):
        _, budget = fe.lower_bound(_point(5.0, log_sigma))
        gaps.append(budget.o1_bound)

    assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))


def test_variational_examples():
    """Test the minimiser above and far below the critical temperature."""
    sigma = 1e8
    log_sigma = math.log(sigma)
    beta_c = log_sigma / (4.0 * math.pi)

    rho0, value = fe.variational_min(_point(0.1 * beta_c, log_sigma))
    point = _point(0.1 * beta_c, log_sigma)
    assert rho0 == 0.0
    assert value == pytest.approx(ig.f0(point) + 8.0 * math.pi / sigma, rel=1e-12)

    point = _point(10.0 * beta_c, log_sigma)
    rho0, value = fe.variational_min(point)
    assert rho0 == pytest.approx(0.9, abs=0.05)
    assert rho0 > 0.9
    assert value <= ig.f0(point) + 8.0 * math.pi / sigma


def test_variational_value_below_empty_condensate():
    """Test that the minimum never exceeds the trial state rho0 = 0."""
    log_sigma = math.log(1e5)
    point = _point(3.0 * log_sigma / (4.0 * math.pi), log_sigma)
    _, value = fe.variational_min(point)

    assert value <= ig.f0(point) + 8.0 * math.pi / 1e5


@pytest.mark.parametrize("fraction", [0.1, 1.0, 10.0])
def test_variational_converges_to_superfluid_density(fraction):
    """Test |rho0* - rho_s|/rho non-increasing along sigma = e^{e^n}."""
    gaps = []
    for n in range(2, 6):
        log_sigma = math.exp(n)
        point = _point(fraction * log_sigma / (4.0 * math.pi), log_sigma)
        rho0, _ = fe.variational_min(point)
        gaps.append(abs(rho0 - fe.critical_data(point).rho_s))

    assert all(later <= earlier + 1e-12 for earlier, later in zip(gaps, gaps[1:]))
    # ln ln sigma = 5 at the last point
    assert gaps[-1] <= 1.0 / 5.0


def test_variational_needs_finite_sigma():
    """Test the domain of the variational principle."""
    with pytest.raises(DomainError):
        fe.variational_min(_point(5.0, 800.0))


def test_largest_error_rate_decreases():
    """Test that the worst-case rate decays with sigma."""
    assert fe.largest_error_rate(50.0) >= 0.0
    rates = [fe.largest_error_rate(L) for L in (400.0, 800.0, 1600.0, 3200.0)]
    assert all(later < earlier for earlier, later in zip(rates, rates[1:]))
    with pytest.raises(DomainError):
        fe.largest_error_rate(2.0)
