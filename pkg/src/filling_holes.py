#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Shallow wells around particles: radial ground energies and the filled-hole operator bound."""

import itertools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import linalg

import dyson_kernel as dk
from special_fns import DomainError

logger = logging.getLogger(__name__)

MIN_MESH = 200
DEFAULT_MESH = 400
INNER_FRACTION = 0.25
PLANE_EXTENT = 40.0
DEFAULT_CTILDE = 400.0
CHAIN_SCALE = 121.0
CHAIN_SHIFT = 240.0
NEAR_EDGE_BOUND = 361.0
LOG_BRACKET = 600.0
BISECTION_XTOL = 1e-14
MAX_BISECTIONS = 200
INVERSE_STEPS = 3
RESIDUAL_TOL = 1e-8
SEPARATION_RTOL = 1e-9
TINY = 1e-300


@dataclass(frozen=True)
class WellSpec:
    """Attractive well -depth theta(R0 - r), depth = coupling / (R0^2 ln(R/R0)).

    Attributes:
        R0: Well radius.
        R: Outer length scale, R0 < R/10.
        coupling: Multiplier of the depth, 1 for the well of the hole-filling bound.
    """

    R0: float
    R: float
    coupling: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.R0 < self.R / 10.0:
            raise DomainError(f"need 0 < R0 < R/10, got R0={self.R0}, R={self.R}")
        if not self.coupling >= 0.0:
            raise DomainError(f"coupling must be nonnegative, got {self.coupling}")

    @property
    def log_ratio(self) -> float:
        """ln(R/R0)."""
        return math.log(self.R / self.R0)

    @property
    def depth(self) -> float:
        """Depth of the well."""
        return self.coupling / (self.R0**2 * self.log_ratio)

    @property
    def domain_radius(self) -> float:
        """Radius R/10 of the Neumann disk."""
        return self.R / 10.0


@dataclass(frozen=True)
class _RadialProblem:
    """Conservative radial discretisation in units of R0; arrays are plain lists."""

    coupling: list[float]
    mass: list[float]
    potential: list[float]
    dirichlet: bool

    @property
    def size(self) -> int:
        return len(self.mass)


def _radial_nodes(outer: float, inner_cells: int, outer_cells: int) -> np.ndarray:
    """Uniform nodes on [0, 1] followed by geometric nodes on [1, outer]."""
    inner = np.linspace(0.0, 1.0, inner_cells + 1)
    stretched = np.geomspace(1.0, outer, outer_cells + 1)[1:]
    return np.concatenate([inner, stretched])


def _radial_problem(depth: float, nodes: np.ndarray, dirichlet: bool) -> _RadialProblem:
    gaps = np.diff(nodes)
    faces = 0.5 * (nodes[1:] + nodes[:-1])
    coupling = faces / gaps
    # flux 1/ln(r_{i+1}/r_i) is exact for a + b ln r
    coupling[1:] = 1.0 / np.log(nodes[2:] / nodes[1:-1])

    lower = np.concatenate([[0.0], faces])
    upper = np.concatenate([faces, [nodes[-1]]])
    mass = 0.5 * (upper**2 - lower**2)
    inside = 0.5 * (np.minimum(upper, 1.0) ** 2 - np.minimum(lower, 1.0) ** 2)
    potential = -depth * inside

    unknowns = len(nodes) - 1 if dirichlet else len(nodes)
    return _RadialProblem(
        coupling=coupling.tolist(),
        mass=mass[:unknowns].tolist(),
        potential=potential[:unknowns].tolist(),
        dirichlet=dirichlet,
    )


def _negative_pivots(problem: _RadialProblem, energy: float) -> int:
    """Inertia count of K + P - E M by the LDL^T recurrence in excess-of-coupling form.

    The pivot d_i is written c_i + e_i with e_i = c_{i-1} e_{i-1} / d_{i-1} + P_i - E m_i,
    which keeps the diffusive part of the diagonal out of every subtraction.
    """
    count = 0
    excess_prev = 0.0
    pivot_prev = 1.0
    c, m, p = problem.coupling, problem.mass, problem.potential
    for i in range(problem.size):
        excess = p[i] - energy * m[i]
        if i > 0:
            excess += c[i - 1] * excess_prev / (pivot_prev if pivot_prev != 0.0 else TINY)
        pivot = (c[i] if i < len(c) else 0.0) + excess
        if pivot < 0.0:
            count += 1
        excess_prev, pivot_prev = excess, pivot
    return count


def _bisect_ground_level(problem: _RadialProblem, depth: float) -> float:
    """Lowest eigenvalue in (-depth, 0) by Sturm bisection on x = ln(-E)."""
    hi = math.log(depth)
    lo = hi - LOG_BRACKET
    if _negative_pivots(problem, -math.exp(lo)) == 0:
        logger.error("No bound state above -exp(%g)", lo)
        raise dk.EigenSolverError("no bound state resolved by the radial mesh", iterations=0)

    for step in range(MAX_BISECTIONS):
        if hi - lo <= BISECTION_XTOL * max(1.0, abs(hi)):
            break
        middle = 0.5 * (lo + hi)
        if _negative_pivots(problem, -math.exp(middle)) >= 1:
            lo = middle
        else:
            hi = middle
    else:
        raise dk.EigenSolverError("bisection did not converge", iterations=MAX_BISECTIONS)

    logger.debug("Bisection finished after %d steps at ln(-E)=%.15g", step, lo)
    return -math.exp(0.5 * (lo + hi))


def _inverse_iteration_residual(problem: _RadialProblem, energy: float) -> float:
    """Relative residual ||(K + P - E M) u|| / ||K + P - E M|| of the inverse-iteration vector."""
    n = problem.size
    c = np.asarray(problem.coupling)
    mass = np.asarray(problem.mass)
    left = np.concatenate([[0.0], c[: n - 1]])
    right = c[:n] if len(c) >= n else np.concatenate([c, [0.0]])
    diagonal = left + right + np.asarray(problem.potential) - energy * mass
    off = -c[: n - 1]

    bands = np.zeros((3, n))
    bands[0, 1:] = off
    bands[1] = diagonal
    bands[2, :-1] = off

    vector = np.ones(n)
    try:
        for _ in range(INVERSE_STEPS):
            vector = linalg.solve_banded((1, 1), bands, mass * vector)
            vector /= np.linalg.norm(vector)
    except linalg.LinAlgError as e:
        raise dk.EigenSolverError(f"inverse iteration failed: {e}", INVERSE_STEPS) from e

    image = diagonal * vector
    image[:-1] += off * vector[1:]
    image[1:] += off * vector[:-1]
    scale = np.max(np.abs(diagonal)) + 2.0 * np.max(np.abs(off))
    return float(np.linalg.norm(image) / scale)


def _radial_ground_energy(spec: WellSpec, outer: float, mesh: int, dirichlet: bool) -> float:
    if mesh < MIN_MESH:
        raise dk.ResolutionError(f"need at least {MIN_MESH} radial nodes, got {mesh}")
    if spec.coupling == 0.0:
        return 0.0

    depth = spec.coupling / spec.log_ratio
    inner_cells = max(int(mesh * INNER_FRACTION), 8)
    outer_cells = mesh - inner_cells

    levels = []
    for refinement in (1, 2):
        nodes = _radial_nodes(outer, refinement * inner_cells, refinement * outer_cells)
        problem = _radial_problem(depth, nodes, dirichlet)
        energy = _bisect_ground_level(problem, depth)
        residual = _inverse_iteration_residual(problem, energy)
        if not residual <= RESIDUAL_TOL:
            logger.error("Radial eigenvector residual %g above %g", residual, RESIDUAL_TOL)
            raise dk.EigenSolverError(
                "radial ground state did not converge", iterations=INVERSE_STEPS, residual=residual
            )
        levels.append(energy)

    coarse, fine = levels
    extrapolated = (4.0 * fine - coarse) / 3.0
    logger.debug("Radial levels %.15g, %.15g -> %.15g", coarse, fine, extrapolated)
    return extrapolated / spec.R0**2


def neumann_ground_energy(spec: WellSpec, mesh: int = DEFAULT_MESH) -> float:
    """Lowest eigenvalue of -(1/r)(r u')' - depth theta(R0 - r) on the disk of radius R/10.

    The Neumann condition at R/10 is the natural boundary of the conservative scheme.
    Levels on two nested meshes are Richardson extrapolated.

    Args:
        spec: Well.
        mesh: Radial cells of the coarse mesh, at least 200.

    Returns:
        The ground energy.

    Raises:
        ResolutionError: If the mesh is too coarse.
        EigenSolverError: If the radial eigenproblem does not converge.
    """
    energy = _radial_ground_energy(spec, spec.domain_radius / spec.R0, mesh, dirichlet=False)
    logger.info("Neumann ground energy %.10g for R0/R=%g", energy, spec.R0 / spec.R)
    return energy


def plane_ground_energy(spec: WellSpec, mesh: int = DEFAULT_MESH) -> float:
    """Ground energy of the same well on the plane, Dirichlet at 40 R^2/R0.

    For R0 << R it behaves as -R0^2/R^4 up to a bounded factor.
    """
    outer = PLANE_EXTENT * (spec.R / spec.R0) ** 2
    energy = _radial_ground_energy(spec, outer, mesh, dirichlet=True)
    logger.info("Plane ground energy %.10g for R0/R=%g", energy, spec.R0 / spec.R)
    return energy


def chain_lower_bound(spec: WellSpec, plane_energy: float) -> float:
    """Lower bound 121 E0 - 240/R^2 on the Neumann energy in terms of the plane energy."""
    return CHAIN_SCALE * plane_energy - CHAIN_SHIFT / spec.R**2


def weak_coupling_window(spec: WellSpec, epsilon: float = 0.5) -> tuple[float, float]:
    """Accepted range of -E0 R^4/R0^2 at tolerance exponent epsilon."""
    ratio = spec.R0 / spec.R
    return 0.1 * ratio**epsilon, 10.0 * ratio ** (-epsilon)


def _check_separation(
    centers: Sequence[Sequence[float]], R: float, L: float  # noqa: N803
) -> None:
    separation = R / 5.0
    for first, second in itertools.combinations(centers, 2):
        d = float(dk.torus_distance(np.asarray(first), np.asarray(second), L))
        if d < separation * (1.0 - SEPARATION_RTOL):
            raise DomainError(f"centers {first} and {second} closer than R/5={separation}")


def holes_operator(
    grid: dk.TorusGrid,
    centers: Sequence[Sequence[float]],
    R0: float,  # noqa: N803
    R: float,  # noqa: N803
    ctilde: float = DEFAULT_CTILDE,
) -> dk.SpectralOperator:
    """-Laplacian - depth sum theta(R0 - d) + (ctilde/R^2) sum theta(R/10 - d) on the grid."""
    spec = WellSpec(R0, R)
    _check_separation(centers, R, grid.L)

    diagonal = np.zeros((grid.N, grid.N))
    for center in centers:
        d = grid.distance_to(center)
        diagonal -= spec.depth * (d < R0)
        diagonal += ctilde / R**2 * (d < spec.domain_radius)

    return grid.spectral_operator(grid.momentum_norm() ** 2, diagonal)


def holes_inequality_margin(
    grid: dk.TorusGrid,
    centers: Sequence[Sequence[float]],
    R0: float,  # noqa: N803
    R: float,  # noqa: N803
    ctilde: float = DEFAULT_CTILDE,
) -> float:
    """Lowest eigenvalue of the filled-hole operator on the torus.

    Args:
        grid: Torus grid.
        centers: Positions pairwise at least R/5 apart.
        R0: Well radius, R0 < R/10.
        R: Outer length scale.
        ctilde: Constant of the filling term.

    Returns:
        The margin; at least -1e-6 times the norm bound certifies the bound at ctilde.

    Raises:
        DomainError: If the centers are too close or R0 >= R/10.
        EigenSolverError: If the eigensolver does not converge.
    """
    operator = holes_operator(grid, centers, R0, R, ctilde)
    margin = operator.lowest_eigenvalue()
    logger.info(
        "Hole margin %.6g with %d centers, R0/R=%g, ctilde=%g",
        margin,
        len(centers),
        R0 / R,
        ctilde,
    )
    return margin
