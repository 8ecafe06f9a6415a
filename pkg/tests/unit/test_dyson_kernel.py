# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.
#
# Learn more about testing at: https://juju.is/docs/sdk/testing

"""Unit tests for the soft potential, the torus fields and the Dyson operator inequality."""

import itertools
import math
from unittest.mock import patch

import numpy as np
import pytest
from pytest import fixture
from scipy import integrate
from scipy.sparse import linalg as splinalg

import dyson_kernel as dk
import scattering as sc
from special_fns import DomainError

R, S, EPS = 2.0, 4.0, 0.3


def _overlap_oracle(t: float) -> float:
    """(32/pi) times the lens area of two disks of radius 1/2 at distance t."""

    def chord(y1: float) -> float:
        first = math.sqrt(max(0.25 - y1**2, 0.0))
        second = math.sqrt(max(0.25 - (y1 - t) ** 2, 0.0))
        return 2.0 * min(first, second)

    area, _ = integrate.quad(chord, t - 0.5, 0.5, epsabs=1e-13, points=[t / 2.0])
    return 32.0 / math.pi * area


def _ramp() -> sc.RadialPotential:
    samples = tuple((float(r), 6.0 * (1.0 - r / 1.5)) for r in np.linspace(0.0, 1.5, 7))
    return sc.RadialPotential((sc.Segment(0.0, 1.5, sc.TABULATED, samples=samples),))


@fixture
def fine_grid():
    """64 x 64 grid on the torus of side 20."""
    return dk.TorusGrid(L=20.0, N=64)


@fixture
def fine_fields(fine_grid):
    """Error fields for R = 2, s = 4 on the fine grid."""
    return dk.torus_fields(fine_grid, dk.DysonParams(R=R, s=S, epsilon=EPS, kappa=0.5, R0=1.0))


def test_j_overlap_values():
    """Test j at the origin, past its support and at t = 1/2."""
    assert dk.j_overlap(0.0) == pytest.approx(8.0)
    assert dk.j_overlap(1.5) == 0.0
    expected = 16.0 / math.pi * (math.pi / 3.0 - math.sqrt(3.0) / 4.0)
    assert dk.j_overlap(0.5) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(3.12787, abs=1e-5)


@pytest.mark.parametrize("t", [0.05, 0.3, 0.5, 0.8, 0.99])
def test_j_overlap_against_disk_overlap(t):
    """Test the closed form against the overlap-area quadrature."""
    assert dk.j_overlap(t) == pytest.approx(_overlap_oracle(t), abs=1e-6)


def test_j_overlap_normalisation_and_monotonicity():
    """Test int_0^1 j(t) t dt = 1 and that j decreases."""
    value, _ = integrate.quad(lambda t: dk.j_overlap(t) * t, 0.0, 1.0, epsabs=1e-15, epsrel=1e-14)
    assert value == pytest.approx(1.0, abs=1e-12)

    grid = np.linspace(0.0, 1.0, 500)
    assert np.all(np.diff(dk.j_overlap(grid)) < 0.0)


def test_nu_bump_plateaus():
    """Test the smooth step on and between its plateaus."""
    p = np.array([0.0, 1.0, 1.5, 2.0, 3.0])
    values = dk.nu_bump(p)
    assert values[0] == 0.0 and values[1] == 0.0
    assert 0.0 < values[2] < 1.0
    assert values[3] == 1.0 and values[4] == 1.0


def test_soft_potential_support():
    """Test that U_R vanishes at t = R and inside the hole."""
    params = dk.DysonParams(R=1.0, s=1.0, epsilon=EPS, kappa=0.5, R0=0.05)
    assert float(dk.soft_potential(params, 0.01, 1.0)) == 0.0
    assert float(dk.soft_potential(params, 0.01, 0.02)) == 0.0
    assert float(dk.soft_potential(params, 0.01, 0.02, hole=False)) > 0.0

    with pytest.raises(DomainError):
        dk.soft_potential(params, 0.1, 0.5)


def test_soft_potential_condition_example():
    """Test the condition integral at R = 1, R0 = 0.05, a = 0.01."""
    params = dk.DysonParams(R=1.0, s=1.0, epsilon=EPS, kappa=0.5, R0=0.05)
    value = dk.soft_potential_condition(params, 0.01)
    assert 0.0 < value <= 1.0


def test_soft_potential_condition_sweep():
    """Test the condition integral over a sweep of length scales."""
    scales = itertools.product([1.0, 2.0, 5.0], [0.05, 0.2, 0.5], [0.1, 0.5, 0.9])
    for radius, hole, core in scales:
        params = dk.DysonParams(R=radius, s=radius, epsilon=EPS, kappa=0.5, R0=hole * radius)
        assert dk.soft_potential_condition(params, core * hole * radius) <= 1.0


def test_params_validation():
    """Test the ordering R0 < R <= s and the parameter ranges."""
    with pytest.raises(DomainError):
        dk.DysonParams(R=2.0, s=1.0, epsilon=EPS, kappa=0.5, R0=0.5)
    with pytest.raises(DomainError):
        dk.DysonParams(R=2.0, s=4.0, epsilon=1.0, kappa=0.5, R0=0.5)
    with pytest.raises(DomainError):
        dk.torus_fields(dk.TorusGrid(L=6.0, N=64), dk.DysonParams(R, S, EPS, 0.5, 1.0))


def test_grid_validation_and_metric():
    """Test grid sizes and the minimum-image metric."""
    with pytest.raises(dk.ResolutionError):
        dk.TorusGrid(L=1.0, N=8)
    with pytest.raises(dk.ResolutionError):
        dk.TorusGrid(L=1.0, N=48)

    d = dk.torus_distance(np.array([0.5, 9.5]), np.array([9.5, 0.5]), 10.0)
    assert float(d) == pytest.approx(math.sqrt(2.0))


def test_fields_nonnegative_and_monotone_in_range(fine_grid, fine_fields):
    """Test f_R, w_R >= 0 and w_R increasing in R."""
    larger = dk.torus_fields(fine_grid, dk.DysonParams(3.0, S, EPS, 0.5, 1.0))

    assert not fine_fields.degenerate
    assert np.all(fine_fields.f_R >= 0.0)
    assert np.all(fine_fields.w_R >= 0.0)
    assert np.all(larger.w_R >= fine_fields.w_R)


def test_fields_degenerate_when_only_zero_mode_survives():
    """Test the flag when s exceeds L/pi."""
    fields = dk.torus_fields(dk.TorusGrid(L=10.0, N=32), dk.DysonParams(R, S, EPS, 0.5, 1.0))
    assert fields.degenerate
    assert np.all(fields.f_R == 0.0)
    assert np.all(fields.w_R == 0.0)


def test_fields_resolution_error():
    """Test that a grid too coarse for s is rejected."""
    with pytest.raises(dk.ResolutionError):
        dk.torus_fields(dk.TorusGrid(L=20.0, N=16), dk.DysonParams(R, S, EPS, 0.5, 1.0))


def test_w_sum_translation_invariance(fine_grid, fine_fields):
    """Test that shifting all centers by lattice vectors shifts the field."""
    centers = [(3.0, 4.0), (12.5, 7.5)]
    base = fine_fields.w_sum(centers)

    shifted = fine_fields.w_sum([(x + fine_grid.L, y - fine_grid.L) for x, y in centers])
    np.testing.assert_array_equal(base, shifted)

    step = fine_grid.spacing
    moved = fine_fields.w_sum([(x + step, y) for x, y in centers])
    np.testing.assert_allclose(moved, np.roll(base, 1, axis=0), rtol=0.0, atol=1e-15)


def test_decay_envelope_dominates(fine_grid, fine_fields):
    """Test w_R(x) <= (R^2/s^4) g(d(x, 0)/s) at every node above the floor."""
    envelope = dk.decay_envelope(fine_fields)
    t = fine_grid.distance_to((0.0, 0.0)) / S
    checked = fine_fields.w_R > envelope.floor * np.max(fine_fields.w_R)
    bound = R**2 / S**4 * envelope(t)

    assert envelope.length > 0.0
    assert np.all(fine_fields.w_R[checked] <= bound[checked] * (1.0 + 1e-12))
    assert envelope.metadata()["form"] == "amplitude*exp(-(t/length)^2)"


def test_fourier_decay_bound_at_origin():
    """Test the n = 0 bound at x = 0."""
    bump = dk.CosinePowerBump(3)
    value, bound = dk.fourier_decay_bound(bump, 2.0, 20.0, 0, (0.0, 0.0))
    assert value <= bound
    assert bound == pytest.approx((2.0 / (2.0 * math.pi) + 1.0 / 20.0) ** 2)


def test_fourier_decay_bound_fixtures():
    """Test the decay bound on a set of scales, orders and points."""
    bump = dk.CosinePowerBump(3)
    cases = 0
    for s, L, n in itertools.product([0.5, 1.0, 2.0], [10.0, 20.0], [0, 1, 2]):
        for x in [(L / 2.0, L / 2.0), (L / 2.0, 0.0), (1.0, 2.0)]:
            value, bound = dk.fourier_decay_bound(bump, s, L, n, x)
            assert value <= bound, (s, L, n, x)
            cases += 1
    assert cases >= 50


def test_fourier_decay_distance_scaling():
    """Test that doubling s multiplies the n = 1 distance factor by four."""
    bump = dk.CosinePowerBump(3)
    L, x = 40.0, (20.0, 20.0)

    def count(s: float) -> float:
        return (2.0 / (math.pi * s) + 3.0 / L) ** 2

    _, first = dk.fourier_decay_bound(bump, 1.0, L, 1, x)
    _, second = dk.fourier_decay_bound(bump, 2.0, L, 1, x)
    assert (second / count(2.0)) / (first / count(1.0)) == pytest.approx(4.0)


def test_fourier_decay_order_limited_by_smoothness():
    """Test that orders beyond the test function smoothness are refused."""
    with pytest.raises(DomainError):
        dk.fourier_decay_bound(dk.CosinePowerBump(1), 1.0, 10.0, 1, (5.0, 5.0))


def test_kernel_reconstructs_gaussian():
    """Test g(t) = int_t^inf m(r) j(t/r) dr for g = exp(-t^2)."""
    for t in [0.0, 0.5, 1.0, 2.0]:
        assert dk.reconstruct_kernel(t) == pytest.approx(math.exp(-(t**2)), abs=1e-6)


def test_kernel_constants():
    """Test that c and J are finite, positive and J decreases."""
    c = dk.kernel_constant_c()
    assert 0.0 < c < math.inf
    tails = [dk.kernel_tail_moment(x) for x in [0.5, 1.0, 2.0, 4.0]]
    assert all(t > 0.0 for t in tails)
    assert np.all(np.diff(tails) < 0.0)


def _check_selection(points: np.ndarray, j: int | None, radius: float, chosen: list[int]):
    """Brute-force separation and maximality predicates."""
    separation = radius / 5.0
    for a, b in itertools.combinations(chosen, 2):
        assert np.hypot(*(points[a] - points[b])) >= separation
    for index in range(len(points)):
        if index == j or index in chosen:
            continue
        assert any(np.hypot(*(points[index] - points[k])) < separation for k in chosen)


def test_select_jj_examples():
    """Test the lone partner and the saturated cases."""
    assert dk.select_Jj([(0.0, 0.0), (1.0, 0.0)], 0, 2.0) == [1]

    spread = [(float(i), 0.0) for i in range(5)]
    assert dk.select_Jj(spread, 2, 2.0) == [0, 1, 3, 4]


def test_select_jj_random_clouds():
    """Test separation and maximality on random clouds."""
    rng = np.random.default_rng(7)
    for _ in range(1000):
        points = rng.uniform(0.0, 2.0, size=(20, 2))
        j = int(rng.integers(0, 20))
        chosen = dk.select_Jj(points, j, 1.0)
        assert j not in chosen
        _check_selection(points, j, 1.0, chosen)


def test_free_operator_margin_is_zero(fine_grid):
    """Test that the free operator has the zero mode as its bottom."""
    params = dk.DysonParams(R=R, s=S, epsilon=EPS, kappa=0.5, R0=1.0)
    margin = dk.dyson_inequality_margin(fine_grid, sc.RadialPotential(), params, 0.5)
    assert abs(margin) <= 1e-8


def _center_configurations(L: float) -> list[tuple[tuple[tuple[float, float], ...], bool]]:
    middle = L / 2.0
    return [
        (((middle, middle),), False),
        (((L / 4.0, L / 4.0), (3.0 * L / 4.0, 3.0 * L / 4.0)), False),
        (((middle, middle), (middle + 0.3, middle)), True),
    ]


@pytest.mark.parametrize("grid_spec", [(32, 10.0), (64, 20.0)])
@pytest.mark.parametrize("potential", ["soft_4", "soft_10", "ramp"])
def test_dyson_margin_fixture_matrix(grid_spec, potential):
    """Test the discretised inequality for every potential, configuration and grid."""
    v = {
        "soft_4": sc.soft_disk(4.0, 1.0),
        "soft_10": sc.soft_disk(10.0, 0.8),
        "ramp": _ramp(),
    }[potential]
    grid = dk.TorusGrid(L=grid_spec[1], N=grid_spec[0])
    a_tilde = sc.scattering_length(v, 50.0).a

    for centers, restrict in _center_configurations(grid.L):
        params = dk.DysonParams(
            R=R,
            s=S,
            epsilon=EPS,
            kappa=0.5,
            R0=v.range_R0,
            centers=centers,
            restrict_to_jj=restrict,
        )
        operator = dk.assemble_dyson_operator(grid, v, params, a_tilde)
        margin = dk.dyson_inequality_margin(grid, v, params, a_tilde)
        assert dk.margin_certified(margin, operator.norm_bound), (potential, centers, margin)


def test_dyson_margin_hard_disk_penalty(fine_grid):
    """Smoke test a hard disk through the penalty surrogate and its convergence."""
    v = sc.hard_disk(1.0)
    params = dk.DysonParams(R=R, s=S, epsilon=EPS, kappa=0.5, R0=1.25, centers=((10.0, 10.0),))
    operator = dk.assemble_dyson_operator(fine_grid, v, params, 1.0)

    margin = dk.dyson_inequality_margin(fine_grid, v, params, 1.0)
    stiffer = dk.dyson_inequality_margin(fine_grid, v, params, 1.0, penalty=1e7)

    assert dk.margin_certified(margin, operator.norm_bound)
    assert abs(stiffer - margin) < 1e-2


def test_eigensolver_failure_reported(fine_grid):
    """Test that non-convergence surfaces with the iteration count."""
    params = dk.DysonParams(R=R, s=S, epsilon=EPS, kappa=0.5, R0=1.0)
    failure = splinalg.ArpackNoConvergence("no convergence", np.array([]), np.array([]))

    with patch("dyson_kernel.splinalg.eigsh", side_effect=failure):
        with pytest.raises(dk.EigenSolverError) as excinfo:
            dk.dyson_inequality_margin(fine_grid, sc.RadialPotential(), params, 0.5)

    assert excinfo.value.iterations == dk.EIGSH_MAXITER
