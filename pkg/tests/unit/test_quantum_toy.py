# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.
#
# Learn more about testing at: https://juju.is/docs/sdk/testing

"""Unit tests for the truncated Fock-space inequalities."""

import math

import mpmath
import numpy as np
import pytest
from pytest import fixture

import quantum_toy as qt
from special_fns import DomainError

SEED = 20260101


@fixture
def mode():
    """Single mode truncated at twelve quanta."""
    return qt.FockSpace(modes=1, nmax=12)


@fixture
def rng():
    """Seeded generator for the randomised checks."""
    return np.random.default_rng(SEED)


def test_fock_space_limits():
    """Test the mode and cutoff limits."""
    assert qt.FockSpace(2, 12).dimension == 169
    with pytest.raises(DomainError):
        qt.FockSpace(3, 4)
    with pytest.raises(DomainError):
        qt.FockSpace(1, 13)


@pytest.mark.parametrize("modes", [1, 2])
def test_canonical_commutator_below_cutoff(modes):
    """Test [a, a^dagger] = 1 on states below the cutoff."""
    space = qt.FockSpace(modes, 6)
    for k in range(modes):
        a = space.annihilation(k)
        commutator = a @ a.T - a.T @ a
        inside = space.occupations[:, k] < space.nmax
        block = commutator[np.ix_(inside, inside)]
        np.testing.assert_allclose(block, np.eye(inside.sum()), atol=1e-14)


def test_number_operator(mode):
    """Test a^dagger a against the occupation numbers."""
    a = mode.annihilation(0)
    np.testing.assert_allclose(a.T @ a, mode.number(0), atol=1e-13)


def test_vacuum(mode):
    """Test that z = 0 gives the vacuum projector."""
    state = qt.coherent_state(mode, 0.0)
    expected = np.zeros((13, 13))
    expected[0, 0] = 1.0
    np.testing.assert_allclose(state.matrix, expected, atol=1e-14)


def test_coherent_mean_occupation(mode):
    """Test <z|a^dagger a|z> = |z|^2 at |z|^2 = 1."""
    z = complex(math.cos(0.3), math.sin(0.3))
    state = qt.coherent_state(mode, z)
    assert state.expectation(mode.number()).real == pytest.approx(1.0, abs=1e-8)


def test_coherent_overlap(mode):
    """Test |<z|w>|^2 = exp(-|z - w|^2)."""
    z, w = 0.5 + 0.2j, -0.3 + 0.4j
    overlap = abs(np.vdot(qt.coherent_vector(mode, z), qt.coherent_vector(mode, w))) ** 2
    assert overlap == pytest.approx(math.exp(-abs(z - w) ** 2), abs=1e-8)


def test_coherent_eigenvector(mode):
    """Test a|z> = z|z> away from the truncation edge."""
    z = 0.6 - 0.3j
    vector = qt.coherent_vector(mode, z)
    residual = mode.annihilation(0) @ vector - z * vector
    assert np.linalg.norm(residual[:-2]) <= 1e-8


def test_expm_matches_exact_amplitudes(mode):
    """Test the matrix exponential against the closed-form amplitudes."""
    z = 0.8 + 0.5j
    exact = qt.coherent_amplitudes(z, 12)
    np.testing.assert_allclose(
        qt.coherent_vector(mode, z), exact / np.linalg.norm(exact), atol=1e-10
    )


def test_coherent_amplitudes_against_mpmath():
    """Test the closed-form amplitudes against 30-digit arithmetic."""
    mpmath.mp.dps = 30
    z = mpmath.mpc(1.5, 0.5)
    expected = [
        complex(mpmath.exp(-abs(z) ** 2 / 2) * z**n / mpmath.sqrt(mpmath.factorial(n)))
        for n in range(13)
    ]
    np.testing.assert_allclose(qt.coherent_amplitudes(1.5 + 0.5j, 12), expected, rtol=1e-12)


def test_two_mode_coherent_state():
    """Test that two-mode coherent states factorise."""
    space = qt.FockSpace(2, 8)
    z = [0.3 + 0.1j, -0.2j]
    state = qt.coherent_state(space, z)
    assert state.expectation(space.number(0)).real == pytest.approx(0.1, abs=1e-8)
    assert state.expectation(space.number(1)).real == pytest.approx(0.04, abs=1e-8)


def test_coherent_leakage(mode):
    """Test that amplitudes too large for the cutoff are refused."""
    with pytest.raises(qt.LeakageError):
        qt.coherent_state(mode, 2.0)
    with pytest.raises(qt.LeakageError) as excinfo:
        qt.coherent_state(mode, 1.7)
    assert excinfo.value.leakage > qt.LEAKAGE_TOLERANCE


def test_coherent_resolution_of_identity():
    """Test int |z><z| dz/pi = 1 on the truncation."""
    for space in (qt.FockSpace(1, 12), qt.FockSpace(2, 5)):
        resolution = qt.coherent_resolution(space)
        np.testing.assert_allclose(resolution, np.eye(space.dimension), atol=1e-10)


def test_upper_symbol_reconstructs_hamiltonian(mode):
    """Test int H^s(z)|z><z| dz/pi = H for the anti-normal-ordered symbol."""
    omega, g = 1.0, 0.5
    operator = qt.operator_from_upper_symbol(mode, lambda z: qt.upper_symbol(z, omega, g))
    np.testing.assert_allclose(operator, mode.hamiltonian(omega, g), atol=1e-9)


@pytest.mark.parametrize("z", [0.0, 0.5, 0.4 + 0.5j, -0.7j])
def test_lower_symbol(mode, z):
    """Test <z|H|z> = omega |z|^2 + (g/2)|z|^4."""
    omega, g = 1.0, 0.5
    value = qt.coherent_state(mode, z).expectation(mode.hamiltonian(omega, g)).real
    assert value == pytest.approx(float(qt.lower_symbol(z, omega, g)), abs=1e-8)


@pytest.mark.parametrize("z", [0.3, 0.5 + 0.4j])
@pytest.mark.parametrize("g", [0.0, 0.5, 2.0])
def test_symbol_gap(mode, z, g):
    """Test the upper minus lower symbol against g - omega - 2 g |z|^2."""
    numerical, closed = qt.symbol_gap(mode, z, 1.3, g)
    assert numerical == pytest.approx(closed, abs=1e-8)


def test_symbol_gap_single_mode_only():
    """Test that the symbol identities are single-mode."""
    with pytest.raises(DomainError):
        qt.symbol_gap(qt.FockSpace(2, 4), 0.1, 1.0, 0.5)


def test_berezin_lieb_free_boson(mode):
    """Test both sides against the geometric series and exp(c)/c."""
    beta, omega = 3.0, 2.0
    report = qt.berezin_lieb_report(mode, omega, 0.0, beta)
    c = beta * omega

    assert report.lhs == pytest.approx(-math.expm1(-13 * c) / -math.expm1(-c), rel=1e-12)
    assert report.rhs == pytest.approx(math.exp(c) / c, rel=1e-10)
    assert report.margin > 0.0


def test_berezin_lieb_quartic_example(mode):
    """Test omega = 1, g = 0.5, beta = 1 with its error bar."""
    report = qt.berezin_lieb_report(mode, 1.0, 0.5, 1.0)

    # rhs = e^{1/2} int_0^inf e^{-t^2/4} dt
    assert report.rhs == pytest.approx(math.exp(0.5) * math.sqrt(math.pi), rel=1e-4)
    assert report.error_bar < 0.05 * report.rhs
    assert report.tail_mass <= qt.TAIL_MASS_TOLERANCE
    assert report.margin >= 0.0


@pytest.mark.parametrize("omega", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("g", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_berezin_lieb_margin_grid(mode, omega, g, beta):
    """Test the margin across the (omega, g, beta) grid."""
    assert qt.berezin_lieb_margin(mode, (omega, g), beta) >= -1e-8


def test_berezin_lieb_leakage(mode):
    """Test that hot free bosons overflow the cutoff."""
    with pytest.raises(qt.LeakageError):
        qt.berezin_lieb_margin(mode, (0.5, 0.0), 1.0)


def test_berezin_lieb_domain(mode):
    """Test the parameter domain."""
    with pytest.raises(DomainError):
        qt.berezin_lieb_margin(mode, (0.0, 0.5), 1.0)
    with pytest.raises(DomainError):
        qt.berezin_lieb_margin(qt.FockSpace(2, 4), (1.0, 0.5), 1.0)


def test_density_matrix_validation():
    """Test the Hermiticity, positivity and trace checks."""
    with pytest.raises(qt.StateError):
        qt.DensityMatrix(np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(qt.StateError):
        qt.DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(qt.StateError):
        qt.DensityMatrix(np.diag([0.5, 0.4]))
    with pytest.raises(qt.StateError):
        qt.DensityMatrix(np.ones(3))


def test_relative_entropy_of_equal_states(rng):
    """Test S(gamma, gamma) = 0."""
    state = qt.random_density_matrix(5, rng)
    assert qt.relative_entropy(state, state) == pytest.approx(0.0, abs=1e-12)


def test_relative_entropy_classical(rng):
    """Test commuting diagonal states against the Kullback-Leibler sum."""
    p = rng.dirichlet(np.ones(6))
    q = rng.dirichlet(np.ones(6))
    expected = float(np.sum(p * np.log(p / q)))
    value = qt.relative_entropy(qt.DensityMatrix(np.diag(p)), qt.DensityMatrix(np.diag(q)))
    assert value == pytest.approx(expected, abs=1e-12)


def test_relative_entropy_support_violation(caplog):
    """Test +inf with a warning when gamma leaves the support of omega."""
    gamma = qt.DensityMatrix(np.diag([0.5, 0.5]))
    omega = qt.DensityMatrix(np.diag([1.0, 0.0]))
    with caplog.at_level("WARNING", logger="quantum_toy"):
        assert qt.relative_entropy(gamma, omega) == math.inf
    assert "Support violation" in caplog.text

    # the reverse direction is finite
    assert qt.relative_entropy(omega, gamma) == pytest.approx(math.log(2.0))


def test_relative_entropy_dimension_mismatch(rng):
    """Test that states of different size are refused."""
    with pytest.raises(qt.StateError):
        qt.relative_entropy(qt.random_density_matrix(2, rng), qt.random_density_matrix(3, rng))


def test_pinsker_random_pairs(rng):
    """Test S >= ||gamma - omega||_1^2 / 2 on 500 seeded pairs in dimensions 2 to 8."""
    for _ in range(500):
        dimension = int(rng.integers(2, 9))
        rank = int(rng.integers(1, dimension + 1))
        gamma = qt.random_density_matrix(dimension, rng, rank=rank)
        omega = qt.random_density_matrix(dimension, rng)
        assert qt.pinsker_gap(gamma, omega) >= -1e-12


def test_pinsker_example(rng):
    """Test a random 4 x 4 pair with a strict gap."""
    gamma = qt.random_density_matrix(4, rng)
    omega = qt.random_density_matrix(4, rng)
    assert qt.relative_entropy(gamma, omega) >= 0.5 * qt.trace_norm_distance(gamma, omega) ** 2


def test_thermal_state(mode):
    """Test the Gibbs weights of the free boson."""
    state = qt.thermal_state(mode, 2.0, 0.0, 1.0)
    weights = np.exp(-2.0 * np.arange(13))
    np.testing.assert_allclose(np.diag(state.matrix).real, weights / weights.sum(), atol=1e-14)


def test_partial_trace(rng):
    """Test the marginals of a product state."""
    first = qt.random_density_matrix(2, rng)
    second = qt.random_density_matrix(3, rng)
    joint = first.kron(second)

    np.testing.assert_allclose(
        qt.partial_trace(joint, (2, 3), 0).matrix, first.matrix, atol=1e-14
    )
    np.testing.assert_allclose(
        qt.partial_trace(joint, (2, 3), 1).matrix, second.matrix, atol=1e-14
    )
    with pytest.raises(qt.StateError):
        qt.partial_trace(joint, (2, 2), 0)


def test_superadditivity_product_equality(rng):
    """Test equality when gamma is a product state."""
    parts = (qt.random_density_matrix(2, rng), qt.random_density_matrix(3, rng))
    gamma = qt.random_density_matrix(2, rng).kron(qt.random_density_matrix(3, rng))
    lhs, rhs = qt.superadditivity_check(gamma, parts)
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_superadditivity_entangled():
    """Test the strict gap ln 4 for a Bell state against the maximally mixed product."""
    bell = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2.0)
    gamma = qt.DensityMatrix.from_vector(bell)
    mixed = qt.DensityMatrix(np.eye(2) / 2.0)

    lhs, rhs = qt.superadditivity_check(gamma, (mixed, mixed))
    assert lhs == pytest.approx(math.log(4.0), abs=1e-12)
    assert rhs == pytest.approx(0.0, abs=1e-12)


def test_superadditivity_random(rng):
    """Test the inequality on 50 seeded bipartite draws."""
    for _ in range(50):
        gamma = qt.random_density_matrix(6, rng, rank=int(rng.integers(1, 7)))
        parts = (qt.random_density_matrix(2, rng), qt.random_density_matrix(3, rng))
        lhs, rhs = qt.superadditivity_check(gamma, parts)
        assert lhs >= rhs - 1e-10
