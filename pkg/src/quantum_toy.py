#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Coherent states, Berezin-Lieb and relative-entropy inequalities on truncated Fock spaces."""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, linalg, special

from special_fns import DomainError

logger = logging.getLogger(__name__)

MAX_MODES = 2
MAX_OCCUPATION = 12
EXPM_PADDING = 40
LEAKAGE_TOLERANCE = 1e-8
HERMITIAN_ATOL = 1e-10
EIGENVALUE_FLOOR = -1e-12
TRACE_ATOL = 1e-12
SUPPORT_TOL = 1e-12
SUPERADDITIVITY_SLACK = 1e-10
RADIAL_NODES = 64
PHASE_NODES = 64
TAIL_MASS_TOLERANCE = 1e-8


class StateError(ValueError):
    """Custom exception for matrices that are not density matrices."""


class LeakageError(StateError):
    """Custom exception for states that do not fit in the truncation."""

    def __init__(self, message: str, leakage: float):
        super().__init__(message)
        self.leakage = leakage


class QuadratureError(RuntimeError):
    """Custom exception for phase-space grids that miss integrand mass."""

    def __init__(self, message: str, tail_mass: float):
        super().__init__(message)
        self.tail_mass = tail_mass


def _single_mode_annihilation(nmax: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, nmax + 1, dtype=float)), k=1)


@dataclass(frozen=True)
class FockSpace:
    """Bosonic Fock space of M modes, each truncated at occupation nmax.

    Attributes:
        modes: Number of modes, 1 or 2.
        nmax: Per-mode occupation cutoff, at most 12.
    """

    modes: int
    nmax: int

    def __post_init__(self) -> None:
        if not 1 <= self.modes <= MAX_MODES:
            raise DomainError(f"modes must be in [1, {MAX_MODES}], got {self.modes}")
        if not 1 <= self.nmax <= MAX_OCCUPATION:
            raise DomainError(f"nmax must be in [1, {MAX_OCCUPATION}], got {self.nmax}")

    @property
    def dimension(self) -> int:
        """(nmax + 1)^M."""
        return (self.nmax + 1) ** self.modes

    @cached_property
    def occupations(self) -> np.ndarray:
        """Occupation numbers of every basis state, shape (dimension, M)."""
        axes = [np.arange(self.nmax + 1)] * self.modes
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.modes)

    def annihilation(self, mode: int) -> np.ndarray:
        """Dense a_mode on the truncated space."""
        if not 0 <= mode < self.modes:
            raise DomainError(f"mode {mode} outside [0, {self.modes})")
        single = _single_mode_annihilation(self.nmax)
        identity = np.eye(self.nmax + 1)
        factors = [single if k == mode else identity for k in range(self.modes)]
        operator = factors[0]
        for factor in factors[1:]:
            operator = np.kron(operator, factor)
        return operator

    def number(self, mode: int | None = None) -> np.ndarray:
        """a^dagger a of one mode, or the total number operator."""
        counts = self.occupations.sum(axis=1) if mode is None else self.occupations[:, mode]
        return np.diag(counts.astype(float))

    def hamiltonian(self, omega: float, g: float) -> np.ndarray:
        """omega a^dagger a + (g/2) a^dagger a^dagger a a summed over modes."""
        total = np.zeros((self.dimension, self.dimension))
        for mode in range(self.modes):
            a = self.annihilation(mode)
            ad = a.T
            total += omega * ad @ a + 0.5 * g * ad @ ad @ a @ a
        return total


class DensityMatrix:
    """Hermitian positive semidefinite matrix of unit trace."""

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise StateError(f"density matrix must be square, got shape {matrix.shape}")
        if not np.allclose(matrix, matrix.conj().T, atol=HERMITIAN_ATOL):
            raise StateError("density matrix is not Hermitian")
        self.matrix = 0.5 * (matrix + matrix.conj().T)
        self.eigenvalues, self.eigenvectors = linalg.eigh(self.matrix)
        if self.eigenvalues.min() < EIGENVALUE_FLOOR:
            raise StateError(f"negative eigenvalue {self.eigenvalues.min():.3e}")
        trace = float(np.trace(self.matrix).real)
        if abs(trace - 1.0) > TRACE_ATOL:
            raise StateError(f"trace must be one, got {trace!r}")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "DensityMatrix":
        """Projector onto a normalised vector."""
        vector = np.asarray(vector, dtype=complex)
        vector = vector / np.linalg.norm(vector)
        return cls(np.outer(vector, vector.conj()))

    def expectation(self, operator: np.ndarray) -> complex:
        """Tr(rho A)."""
        return complex(np.trace(self.matrix @ operator))

    def kron(self, other: "DensityMatrix") -> "DensityMatrix":
        """Tensor product state."""
        return DensityMatrix(np.kron(self.matrix, other.matrix))


def coherent_amplitudes(z: complex, nmax: int) -> np.ndarray:
    """Exact <n|z> = e^{-|z|^2/2} z^n / sqrt(n!) for n <= nmax."""
    n = np.arange(nmax + 1)
    modulus = abs(z)
    if modulus == 0.0:
        return (n == 0).astype(complex)
    log_norm = -0.5 * modulus**2 + n * math.log(modulus) - 0.5 * special.gammaln(n + 1)
    return np.exp(log_norm) * np.exp(1j * n * np.angle(z))


def _displaced_vacuum(z: complex, nmax: int) -> tuple[np.ndarray, float]:
    """Truncated U(z)|0> from a padded matrix exponential, and the weight it loses."""
    padded = nmax + EXPM_PADDING
    a = _single_mode_annihilation(padded)
    generator = z * a.T - np.conj(z) * a
    column = linalg.expm(generator)[:, 0]
    kept = column[: nmax + 1]
    leakage = max(1.0 - float(np.vdot(kept, kept).real), 0.0)
    return kept, leakage


def coherent_vector(space: FockSpace, z: Sequence[complex] | complex) -> np.ndarray:
    """Normalised |z> = exp(sum z_k a_k^dagger - conj(z_k) a_k)|0> on the truncation.

    Args:
        space: Fock space.
        z: One amplitude per mode.

    Returns:
        The state vector.

    Raises:
        LeakageError: If |z_k|^2 > nmax/4 or the truncation loses more than 1e-8 weight.
    """
    amplitudes = np.atleast_1d(np.asarray(z, dtype=complex))
    if amplitudes.shape != (space.modes,):
        raise DomainError(f"need {space.modes} amplitudes, got {amplitudes.shape}")

    vector = np.ones(1, dtype=complex)
    for amplitude in amplitudes:
        if abs(amplitude) ** 2 > space.nmax / 4.0:
            raise LeakageError(
                f"|z|^2={abs(amplitude) ** 2:g} exceeds nmax/4={space.nmax / 4.0:g}",
                leakage=math.nan,
            )
        mode_vector, leakage = _displaced_vacuum(complex(amplitude), space.nmax)
        if leakage > LEAKAGE_TOLERANCE:
            raise LeakageError(f"truncation leaks weight {leakage:.3e}", leakage=leakage)
        vector = np.kron(vector, mode_vector)
    return vector / np.linalg.norm(vector)


def coherent_state(space: FockSpace, z: Sequence[complex] | complex) -> DensityMatrix:
    """Coherent-state projector |z><z| on the truncation."""
    return DensityMatrix.from_vector(coherent_vector(space, z))


def upper_symbol(z: np.ndarray | complex, omega: float, g: float) -> np.ndarray:
    """Anti-normal-ordered symbol omega(|z|^2 - 1) + (g/2)(|z|^4 - 4|z|^2 + 2)."""
    t = np.abs(z) ** 2
    return omega * (t - 1.0) + 0.5 * g * (t**2 - 4.0 * t + 2.0)


def lower_symbol(z: np.ndarray | complex, omega: float, g: float) -> np.ndarray:
    """Normal-ordered symbol omega |z|^2 + (g/2)|z|^4."""
    t = np.abs(z) ** 2
    return omega * t + 0.5 * g * t**2


def symbol_gap(space: FockSpace, z: complex, omega: float, g: float) -> tuple[float, float]:
    """Upper symbol minus <z|H|z> on the truncation, and its closed form g - omega - 2 g |z|^2.

    Args:
        space: Single-mode Fock space.
        z: Phase-space point.
        omega: Mode energy.
        g: Quartic coupling.

    Returns:
        The numerical and the closed-form gap.
    """
    _require_single_mode(space)
    lower = coherent_state(space, z).expectation(space.hamiltonian(omega, g)).real
    numerical = float(upper_symbol(z, omega, g)) - lower
    closed = g - omega - 2.0 * g * abs(z) ** 2
    return numerical, closed


def _require_single_mode(space: FockSpace) -> None:
    if space.modes != 1:
        raise DomainError(f"single-mode operation, got {space.modes} modes")


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Gauss-Laguerre nodes in t = lambda |z|^2 times a uniform phase grid.

    Integrates f(z) dz/pi as sum_k,j weights_k f(sqrt(t_k) e^{i theta_j}) / phase_nodes.
    """

    radial_nodes: int = RADIAL_NODES
    phase_nodes: int = PHASE_NODES
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.radial_nodes < 2 or self.phase_nodes < 1:
            raise DomainError("need at least two radial and one phase node")
        if not self.scale > 0.0:
            raise DomainError(f"radial scale must be positive, got {self.scale}")

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Phase-space points, shape (radial, phase), and log weights per radial node."""
        s, w = special.roots_laguerre(self.radial_nodes)
        t = s / self.scale
        theta = 2.0 * np.pi * np.arange(self.phase_nodes) / self.phase_nodes
        z = np.sqrt(t)[:, None] * np.exp(1j * theta)[None, :]
        # weight e^{-s} is undone so that the grid integrates plain functions of |z|^2
        log_weights = np.log(w) + s - math.log(self.scale)
        return z, log_weights

    def integrate_log(self, log_integrand: Callable[[np.ndarray], np.ndarray]) -> float:
        """int exp(log_integrand(z)) dz/pi for a real log integrand."""
        z, log_weights = self.points()
        values = np.exp(log_integrand(z) + log_weights[:, None])
        return float(values.sum() / self.phase_nodes)

    @property
    def last_radius_sq(self) -> float:
        """Largest sampled |z|^2."""
        return float(special.roots_laguerre(self.radial_nodes)[0][-1] / self.scale)


def coherent_resolution(space: FockSpace, grid: PhaseSpaceGrid | None = None) -> np.ndarray:
    """int |z><z| dz/pi on the truncation, with exact coherent amplitudes.

    For several modes the single-mode integral is taken in every mode and tensored.
    """
    grid = grid or PhaseSpaceGrid()
    z, log_weights = grid.points()
    amplitudes = np.stack(
        [coherent_amplitudes(complex(point), space.nmax) for point in z.ravel()]
    )
    weights = np.repeat(np.exp(log_weights), grid.phase_nodes) / grid.phase_nodes
    single = np.einsum("k,km,kn->mn", weights, amplitudes, amplitudes.conj())
    resolution = single
    for _ in range(space.modes - 1):
        resolution = np.kron(resolution, single)
    return resolution


def operator_from_upper_symbol(
    space: FockSpace,
    symbol: Callable[[np.ndarray], np.ndarray],
    grid: PhaseSpaceGrid | None = None,
) -> np.ndarray:
    """Single-mode int symbol(z) |z><z| dz/pi on the truncation."""
    _require_single_mode(space)
    grid = grid or PhaseSpaceGrid()
    z, log_weights = grid.points()
    flat = z.ravel()
    amplitudes = np.stack([coherent_amplitudes(complex(point), space.nmax) for point in flat])
    weights = np.repeat(np.exp(log_weights), grid.phase_nodes) / grid.phase_nodes
    weights = weights * np.asarray(symbol(flat), dtype=complex)
    return np.einsum("k,km,kn->mn", weights, amplitudes, amplitudes.conj())


@dataclass(frozen=True)
class BerezinLiebReport:
    """Both sides of Tr exp(-beta H) <= int exp(-beta H^s(z)) dz/pi.

    Attributes:
        lhs: Trace on the truncation.
        rhs: Phase-space integral with the full node count.
        error_bar: |rhs - rhs at half the radial nodes|.
        tail_mass: Integrand mass beyond the last radial node, relative to rhs.
    """

    lhs: float
    rhs: float
    error_bar: float
    tail_mass: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def _radial_scale(omega: float, g: float, beta: float) -> float:
    """Decay rate in |z|^2 of exp(-beta H^s) from its linear and quadratic parts."""
    return beta * max(omega - 2.0 * g, 0.0) + math.sqrt(2.0 * beta * g)


def berezin_lieb_report(
    space: FockSpace,
    omega: float,
    g: float,
    beta: float,
    radial_nodes: int = RADIAL_NODES,
    phase_nodes: int = PHASE_NODES,
) -> BerezinLiebReport:
    """Evaluate both sides of the Berezin-Lieb inequality for the single-mode quartic.

    Args:
        space: Single-mode Fock space.
        omega: Mode energy, positive.
        g: Quartic coupling, nonnegative.
        beta: Inverse temperature.
        radial_nodes: Gauss-Laguerre nodes in |z|^2.
        phase_nodes: Trapezoid nodes in the phase.

    Returns:
        The report.

    Raises:
        LeakageError: If the thermal weight of the top level exceeds 1e-8.
        QuadratureError: If the grid misses more than 1e-8 of the integrand mass.
    """
    _require_single_mode(space)
    if not (omega > 0.0 and g >= 0.0 and beta > 0.0):
        raise DomainError(f"need omega > 0, g >= 0, beta > 0, got {omega}, {g}, {beta}")

    levels = linalg.eigvalsh(space.hamiltonian(omega, g))
    boltzmann = np.exp(-beta * (levels - levels.min()))
    lhs = float(boltzmann.sum() * math.exp(-beta * levels.min()))
    top_weight = float(boltzmann[np.argmax(levels)] / boltzmann.sum())
    if top_weight > LEAKAGE_TOLERANCE:
        raise LeakageError(f"thermal weight {top_weight:.3e} at the cutoff", leakage=top_weight)

    scale = _radial_scale(omega, g, beta)

    def log_integrand(z: np.ndarray) -> np.ndarray:
        return -beta * upper_symbol(z, omega, g)

    fine = PhaseSpaceGrid(radial_nodes, phase_nodes, scale)
    coarse = PhaseSpaceGrid(radial_nodes // 2, phase_nodes, scale)
    rhs = fine.integrate_log(log_integrand)
    error_bar = abs(rhs - coarse.integrate_log(log_integrand))

    tail, _ = integrate.quad(
        lambda t: math.exp(-beta * float(upper_symbol(math.sqrt(t), omega, g))),
        fine.last_radius_sq,
        np.inf,
    )
    tail_mass = tail / rhs
    if tail_mass > TAIL_MASS_TOLERANCE:
        raise QuadratureError(f"grid misses mass {tail_mass:.3e}", tail_mass=tail_mass)

    report = BerezinLiebReport(lhs=lhs, rhs=rhs, error_bar=error_bar, tail_mass=tail_mass)
    logger.info(
        "Berezin-Lieb at omega=%g g=%g beta=%g: lhs=%.12g rhs=%.12g +- %.2e",
        omega,
        g,
        beta,
        lhs,
        rhs,
        error_bar,
    )
    return report


def berezin_lieb_margin(
    space: FockSpace,
    hamiltonian_spec: tuple[float, float],
    beta: float,
    radial_nodes: int = RADIAL_NODES,
    phase_nodes: int = PHASE_NODES,
) -> float:
    """RHS - LHS of the Berezin-Lieb inequality for H = omega n + (g/2) n(n - 1)."""
    omega, g = hamiltonian_spec
    return berezin_lieb_report(space, omega, g, beta, radial_nodes, phase_nodes).margin


def thermal_state(space: FockSpace, omega: float, g: float, beta: float) -> DensityMatrix:
    """Gibbs state exp(-beta H)/Z on the truncation."""
    levels, vectors = linalg.eigh(space.hamiltonian(omega, g))
    weights = np.exp(-beta * (levels - levels.min()))
    weights /= weights.sum()
    return DensityMatrix((vectors * weights) @ vectors.conj().T)


def random_density_matrix(
    dimension: int, rng: np.random.Generator, rank: int | None = None
) -> DensityMatrix:
    """Ginibre-distributed density matrix of the given rank."""
    rank = rank or dimension
    ginibre = rng.standard_normal((dimension, rank)) + 1j * rng.standard_normal((dimension, rank))
    matrix = ginibre @ ginibre.conj().T
    return DensityMatrix(matrix / np.trace(matrix).real)


def trace_norm_distance(gamma: DensityMatrix, omega: DensityMatrix) -> float:
    """||gamma - omega||_1."""
    return float(np.abs(linalg.eigvalsh(gamma.matrix - omega.matrix)).sum())


def relative_entropy(gamma: DensityMatrix, omega: DensityMatrix) -> float:
    """S(gamma, omega) = Tr gamma (ln gamma - ln omega), by spectral decomposition.

    Args:
        gamma: First state.
        omega: Reference state.

    Returns:
        The relative entropy, +inf when gamma has weight outside the support of omega.
    """
    if gamma.dimension != omega.dimension:
        raise StateError(f"dimensions differ: {gamma.dimension} and {omega.dimension}")

    p = np.clip(gamma.eigenvalues, 0.0, None)
    q = omega.eigenvalues
    overlaps = np.abs(gamma.eigenvectors.conj().T @ omega.eigenvectors) ** 2
    # weight of gamma on each eigenvector of omega
    mass = p @ overlaps

    kernel = q <= SUPPORT_TOL
    if np.any(mass[kernel] > SUPPORT_TOL):
        logger.warning("Support violation: weight %.3e outside supp(omega)", mass[kernel].sum())
        return math.inf

    positive = p > 0.0
    entropy_term = float(np.sum(p[positive] * np.log(p[positive])))
    cross_term = float(np.sum(mass[~kernel] * np.log(q[~kernel])))
    return max(entropy_term - cross_term, 0.0)


def pinsker_gap(gamma: DensityMatrix, omega: DensityMatrix) -> float:
    """S(gamma, omega) - ||gamma - omega||_1^2 / 2, nonnegative by Pinsker's inequality."""
    return relative_entropy(gamma, omega) - 0.5 * trace_norm_distance(gamma, omega) ** 2


def partial_trace(state: DensityMatrix, dims: tuple[int, int], keep: int) -> DensityMatrix:
    """Reduced state of factor `keep` (0 or 1) of a bipartite state."""
    d1, d2 = dims
    if d1 * d2 != state.dimension:
        raise StateError(f"dims {dims} do not match dimension {state.dimension}")
    tensor = state.matrix.reshape(d1, d2, d1, d2)
    if keep == 0:
        return DensityMatrix(np.einsum("ijkj->ik", tensor))
    if keep == 1:
        return DensityMatrix(np.einsum("ijil->jl", tensor))
    raise DomainError(f"keep must be 0 or 1, got {keep}")


def superadditivity_check(
    gamma: DensityMatrix, omega_parts: tuple[DensityMatrix, DensityMatrix]
) -> tuple[float, float]:
    """S(gamma, omega_1 x omega_2) against S(gamma_1, omega_1) + S(gamma_2, omega_2).

    Args:
        gamma: Bipartite state.
        omega_parts: The two factors of the reference state.

    Returns:
        (lhs, rhs) with lhs >= rhs.

    Raises:
        StateError: If the inequality fails beyond 1e-10.
    """
    omega_1, omega_2 = omega_parts
    dims = (omega_1.dimension, omega_2.dimension)
    lhs = relative_entropy(gamma, omega_1.kron(omega_2))
    rhs = relative_entropy(partial_trace(gamma, dims, 0), omega_1) + relative_entropy(
        partial_trace(gamma, dims, 1), omega_2
    )
    if lhs < rhs - SUPERADDITIVITY_SLACK:
        raise StateError(f"superadditivity violated: {lhs!r} < {rhs!r}")
    logger.debug("Superadditivity lhs=%g rhs=%g", lhs, rhs)
    return lhs, rhs
