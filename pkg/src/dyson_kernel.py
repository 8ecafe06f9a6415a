#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Soft potential, torus error fields and the discretised Dyson operator inequality."""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.sparse import linalg as splinalg

import scattering as sc
from special_fns import DomainError

logger = logging.getLogger(__name__)

MIN_POINTS = 16
POINTS_PER_CUTOFF = 8
SEPARATION_FRACTION = 0.2
HARDCORE_PENALTY = 1e6
MARGIN_TOLERANCE = 1e-6
EIGSH_TOL = 1e-10
EIGSH_MAXITER = 20000
ENVELOPE_FIT_WINDOW = 1.5
ENVELOPE_FLOOR = 1e-8


class ResolutionError(ValueError):
    """Custom exception for grids too coarse for the requested length scales."""


class EigenSolverError(RuntimeError):
    """Custom exception for eigensolver failures."""

    def __init__(self, message: str, iterations: int = 0, residual: float = math.nan):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class TorusGrid:
    """N x N grid on the periodic square of side L."""

    L: float
    N: int

    def __post_init__(self) -> None:
        if not self.L > 0.0:
            raise DomainError(f"torus side must be positive, got {self.L}")
        if self.N < MIN_POINTS or self.N & (self.N - 1):
            raise ResolutionError(f"N must be a power of two >= {MIN_POINTS}, got {self.N}")

    @property
    def spacing(self) -> float:
        """Distance between neighbouring nodes."""
        return self.L / self.N

    @property
    def cell_area(self) -> float:
        """Area per node."""
        return self.spacing**2

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates as two N x N arrays."""
        axis = self.spacing * np.arange(self.N)
        return np.meshgrid(axis, axis, indexing="ij")

    def momenta(self) -> tuple[np.ndarray, np.ndarray]:
        """Lattice momenta (2 pi / L) Z^2 in FFT ordering."""
        axis = 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.spacing)
        return np.meshgrid(axis, axis, indexing="ij")

    def momentum_norm(self) -> np.ndarray:
        """|p| on the momentum lattice."""
        px, py = self.momenta()
        return np.hypot(px, py)

    def distance_to(self, point: Sequence[float]) -> np.ndarray:
        """Torus distance min_k |x - y - kL| from every node to a point."""
        x, y = self.nodes()
        return torus_distance(np.stack([x, y], axis=-1), np.asarray(point, dtype=float), self.L)

    def snap(self, point: Sequence[float]) -> tuple[int, int]:
        """Nearest node index of a point."""
        index = np.rint(np.asarray(point, dtype=float) / self.spacing).astype(int) % self.N
        return int(index[0]), int(index[1])

    def spectral_operator(
        self, multiplier: np.ndarray, diagonal: np.ndarray
    ) -> "SpectralOperator":
        """Real symmetric operator F^-1 multiplier F + diagonal on grid functions."""
        return SpectralOperator(self, multiplier, diagonal)


def torus_distance(x: np.ndarray, y: np.ndarray, L: float) -> np.ndarray:  # noqa: N803
    """Minimum-image distance between points on the torus of side L."""
    delta = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    delta = (delta + 0.5 * L) % L - 0.5 * L
    return np.hypot(delta[..., 0], delta[..., 1])


@dataclass
class SpectralOperator:
    """Fourier multiplier plus a position-space diagonal, applied with FFTs."""

    grid: TorusGrid
    multiplier: np.ndarray
    diagonal: np.ndarray

    @property
    def norm_bound(self) -> float:
        """Upper bound max|multiplier| + max|diagonal| on the operator norm."""
        return float(np.max(np.abs(self.multiplier)) + np.max(np.abs(self.diagonal)))

    def apply(self, vector: np.ndarray) -> np.ndarray:
        """Apply the operator to a flattened grid function."""
        field_ = vector.reshape(self.grid.N, self.grid.N)
        kinetic = np.fft.ifft2(self.multiplier * np.fft.fft2(field_)).real
        return (kinetic + self.diagonal * field_).ravel()

    def as_linear_operator(self) -> splinalg.LinearOperator:
        """Wrap for the sparse eigensolvers."""
        size = self.grid.N**2
        return splinalg.LinearOperator((size, size), matvec=self.apply, dtype=float)

    def lowest_eigenvalue(self) -> float:
        """Smallest eigenvalue by implicitly restarted Lanczos.

        Raises:
            EigenSolverError: If the iteration does not converge.
        """
        size = self.grid.N**2
        try:
            values = splinalg.eigsh(
                self.as_linear_operator(),
                k=1,
                which="SA",
                tol=EIGSH_TOL,
                maxiter=EIGSH_MAXITER,
                ncv=min(size - 1, 64),
                v0=np.random.default_rng(0).standard_normal(size),
                return_eigenvectors=False,
            )
        except splinalg.ArpackNoConvergence as e:
            logger.error("Lanczos did not converge after %d iterations", EIGSH_MAXITER)
            raise EigenSolverError(
                f"eigensolver did not converge: {e}", iterations=EIGSH_MAXITER
            ) from e
        return float(values[0])


def nu_bump(p: np.ndarray) -> np.ndarray:
    """Smooth radial step: 0 for |p| <= 1, 1 for |p| >= 2."""
    p = np.abs(np.asarray(p, dtype=float))
    out = np.where(p >= 2.0, 1.0, 0.0)
    inside = (p > 1.0) & (p < 2.0)
    u = 2.0 - p[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u**2))
    return out


def chi_multiplier(p: np.ndarray, s: float) -> np.ndarray:
    """High-momentum cutoff chi(p) = nu(s |p|)."""
    return nu_bump(s * np.asarray(p, dtype=float))


def j_overlap(t: np.ndarray | float) -> np.ndarray | float:
    """Normalised overlap of two disks of diameter one at distance t.

    Args:
        t: Distance(s), t >= 0.

    Returns:
        (16/pi)(arccos t - t sqrt(1 - t^2)) on [0, 1], zero beyond.
    """
    arr = np.asarray(t, dtype=float)
    inside = np.clip(arr, 0.0, 1.0)
    value = 16.0 / np.pi * (np.arccos(inside) - inside * np.sqrt(1.0 - inside**2))
    out = np.where(arr < 1.0, value, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DysonParams:
    """Length scales and centers of the Dyson operator inequality.

    Attributes:
        R: Range of the soft potential.
        s: Momentum cutoff scale, chi(p) = nu(s p).
        epsilon: Fraction of the soft potential given up.
        kappa: Kinetic fraction reserved for the error terms.
        R0: Hole radius of the soft potential.
        centers: Fixed particle positions y_i.
        restrict_to_jj: Use only the well separated subset J for U_R and w_R.
    """

    R: float
    s: float
    epsilon: float
    kappa: float
    R0: float
    centers: tuple[tuple[float, float], ...] = ()
    restrict_to_jj: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "centers", tuple(tuple(map(float, c)) for c in self.centers))
        if not 0.0 < self.R0 < self.R <= self.s:
            raise DomainError(f"need 0 < R0 < R <= s, got {self.R0}, {self.R}, {self.s}")
        if not 0.0 < self.epsilon < 1.0 or not 0.0 < self.kappa < 1.0:
            raise DomainError("epsilon and kappa must lie in (0, 1)")

    def check_grid(self, grid: TorusGrid) -> None:
        """Check s < L/2."""
        if not self.s < grid.L / 2.0:
            raise DomainError(f"cutoff scale s={self.s} must be below L/2={grid.L / 2.0}")


def soft_potential(
    params: DysonParams, a_tilde: float, t: np.ndarray | float, hole: bool = True
) -> np.ndarray:
    """Soft potential j(t/R)/(R^2 ln(R/a)), with a hole below R0 unless hole is False.

    Args:
        params: Length scales.
        a_tilde: Scattering length used in the normalisation.
        t: Distance(s).
        hole: Apply theta(t - R0).

    Returns:
        Potential values.
    """
    if not 0.0 < a_tilde < params.R0:
        raise DomainError(f"need 0 < a_tilde < R0, got {a_tilde}")
    t = np.asarray(t, dtype=float)
    values = j_overlap(t / params.R) / (params.R**2 * math.log(params.R / a_tilde))
    if hole:
        values = np.where(t >= params.R0, values, 0.0)
    return np.asarray(values)


def soft_potential_moment(params: DysonParams, a_tilde: float) -> float:
    """int U_R(t) t dt, the weight of the w_R correction."""
    value, _ = integrate.quad(
        lambda t: float(soft_potential(params, a_tilde, t)) * t,
        params.R0,
        params.R,
        epsabs=0.0,
        epsrel=1e-12,
    )
    return value


def soft_potential_condition(params: DysonParams, a_tilde: float) -> float:
    """int U_R(t) ln(t/a) t dt, at most one for an admissible soft potential."""
    value, _ = integrate.quad(
        lambda t: float(soft_potential(params, a_tilde, t)) * math.log(t / a_tilde) * t,
        params.R0,
        params.R,
        epsabs=0.0,
        epsrel=1e-12,
    )
    return value


@dataclass
class TorusFields:
    """The error fields h, f_R and w_R on a grid, each centred at the origin."""

    grid: TorusGrid
    R: float
    s: float
    h: np.ndarray = field(repr=False)
    f_R: np.ndarray = field(repr=False)  # noqa: N815
    w_R: np.ndarray = field(repr=False)  # noqa: N815
    degenerate: bool = False

    def w_sum(self, centers: Sequence[Sequence[float]]) -> np.ndarray:
        """Sum of w_R(x - y_i) over centers snapped to the grid."""
        total = np.zeros_like(self.w_R)
        for center in centers:
            total += np.roll(self.w_R, self.grid.snap(center), axis=(0, 1))
        return total


def torus_fields(grid: TorusGrid, params: DysonParams) -> TorusFields:
    """Compute h, f_R(x) = sup_{|y|<=R} |h(x-y) - h(x)| and w_R = (2/pi) f_R int f_R.

    Args:
        grid: Torus grid.
        params: Length scales; only R and s are used.

    Returns:
        The fields; degenerate when only the zero mode survives in 1 - chi.

    Raises:
        ResolutionError: If the grid does not resolve the cutoff scale.
    """
    params.check_grid(grid)
    one_minus_chi = 1.0 - chi_multiplier(grid.momentum_norm(), params.s)
    h = np.fft.fft2(one_minus_chi).real / grid.L**2

    nonzero = np.count_nonzero(one_minus_chi > 0.0)
    degenerate = nonzero <= 1
    if not degenerate and grid.N < POINTS_PER_CUTOFF * grid.L / params.s:
        logger.error("Grid N=%d too coarse for s=%g on L=%g", grid.N, params.s, grid.L)
        raise ResolutionError(f"need N >= {POINTS_PER_CUTOFF} L/s to resolve s={params.s}")

    reach = int(math.ceil(params.R / grid.spacing)) + 1
    f_R = np.zeros_like(h)  # noqa: N806
    for ox in range(-reach, reach + 1):
        for oy in range(-reach, reach + 1):
            if math.hypot(ox, oy) * grid.spacing > params.R + grid.spacing:
                continue
            shifted = np.roll(h, (ox, oy), axis=(0, 1))
            np.maximum(f_R, np.abs(shifted - h), out=f_R)

    if degenerate or not np.any(f_R > 0.0):
        degenerate = True
        logger.warning("Only the zero mode survives the cutoff; error fields vanish")

    w_R = (2.0 / np.pi) * f_R * np.sum(f_R) * grid.cell_area  # noqa: N806
    return TorusFields(
        grid=grid, R=params.R, s=params.s, h=h, f_R=f_R, w_R=w_R, degenerate=degenerate
    )


@dataclass(frozen=True)
class DecayEnvelope:
    """Gaussian envelope g(t) = amplitude exp(-(t/length)^2) with w_R <= (R^2/s^4) g(d/s).

    Attributes:
        amplitude: Prefactor, the largest ratio over the checked nodes.
        length: Fitted decay length in units of s.
        fit_window: Largest t used in the log fit.
        floor: Relative level below which nodes are treated as periodic-image noise.
    """

    amplitude: float
    length: float
    fit_window: float
    floor: float

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return self.amplitude * np.exp(-((np.asarray(t) / self.length) ** 2))

    def metadata(self) -> dict[str, float | str]:
        """Description recorded next to verification output."""
        return {
            "form": "amplitude*exp(-(t/length)^2)",
            "amplitude": self.amplitude,
            "length": self.length,
            "fit_window": self.fit_window,
            "floor": self.floor,
        }


def decay_envelope(fields: TorusFields) -> DecayEnvelope:
    """Fit a Gaussian envelope to s^4 w_R(x) / R^2 as a function of d(x, 0)/s.

    Args:
        fields: Non-degenerate torus fields.

    Returns:
        The envelope, dominating the scaled field at every node above the floor.
    """
    if fields.degenerate:
        raise DomainError("no envelope for degenerate fields")

    t = fields.grid.distance_to((0.0, 0.0)) / fields.s
    scaled = fields.s**4 * fields.w_R / fields.R**2
    checked = fields.w_R > ENVELOPE_FLOOR * np.max(fields.w_R)

    window = checked & (t <= ENVELOPE_FIT_WINDOW)
    slope, _ = np.polyfit(t[window] ** 2, np.log(scaled[window]), 1)
    length = 1.0 / math.sqrt(max(-slope, 1e-12))
    ratio = scaled[checked] / np.exp(-((t[checked] / length) ** 2))
    envelope = DecayEnvelope(
        amplitude=float(np.max(ratio)),
        length=length,
        fit_window=ENVELOPE_FIT_WINDOW,
        floor=ENVELOPE_FLOOR,
    )
    logger.debug("Decay envelope %s", envelope)
    return envelope


class CosinePowerBump:
    """Test function prod_i cos^(2m)(pi q_i / 4) supported in the square [-2, 2]^2."""

    def __init__(self, m: int = 3):
        if m < 1:
            raise DomainError("m must be at least 1")
        self.m = m
        k = np.arange(m + 1)
        binom = np.array([math.comb(2 * m, m - int(i)) for i in k], dtype=float)
        # cos^(2m)(x) = 4^-m [C(2m, m) + 2 sum_k C(2m, m-k) cos(2 k x)]
        self._coeffs = binom * np.where(k == 0, 1.0, 2.0) / 4.0**m
        self._freqs = 2.0 * k * np.pi / 4.0

    def profile(self, q: np.ndarray, order: int = 0) -> np.ndarray:
        """order-th derivative of the one-dimensional factor."""
        q = np.asarray(q, dtype=float)
        phase = np.multiply.outer(q, self._freqs) + order * np.pi / 2.0
        values = np.cos(phase) @ (self._coeffs * self._freqs**order)
        return np.where(np.abs(q) <= 2.0, values, 0.0)

    def __call__(self, qx: np.ndarray, qy: np.ndarray) -> np.ndarray:
        return self.profile(qx) * self.profile(qy)

    @property
    def smoothness(self) -> int:
        """Highest order of continuous derivatives across the support edge."""
        return 2 * self.m - 1

    def max_derivative(self, order: int) -> float:
        """max over |alpha| <= order of sup |d^alpha o|, evaluated on a dense grid."""
        q = np.linspace(-2.0, 2.0, 20001)
        sups = [float(np.max(np.abs(self.profile(q, r)))) for r in range(order + 1)]
        return max(sups[a] * sups[b] for a in range(order + 1) for b in range(order + 1 - a))


def fourier_decay_constant(n: int) -> float:
    """C_n = (pi^2/2)^n from the discrete Laplacian estimate."""
    return (math.pi**2 / 2.0) ** n


def fourier_decay_bound(
    o: CosinePowerBump, s: float, L: float, n: int, x: Sequence[float]  # noqa: N803
) -> tuple[float, float]:
    """Compare u(x) = L^-2 sum_p o(s p) e^{-ipx} with its decay bound.

    Args:
        o: Test function supported in [-2, 2]^2.
        s: Scale.
        L: Torus side.
        n: Decay order.
        x: Point on the torus.

    Returns:
        (|u(x)|, bound) with bound (s/d)^{2n} C_n max|d^alpha o| (2/(pi s) + (2n+1)/L)^2.
    """
    if n < 0 or 2 * n > o.smoothness:
        raise DomainError(f"decay order {n} needs more smoothness than the test function has")

    kmax = int(math.floor(L / (math.pi * s)))
    k = np.arange(-kmax, kmax + 1)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    px, py = 2.0 * np.pi * kx / L, 2.0 * np.pi * ky / L
    weights = o(s * px, s * py)
    point = np.asarray(x, dtype=float)
    u = np.sum(weights * np.exp(-1j * (px * point[0] + py * point[1]))) / L**2

    d = float(torus_distance(point[None, :], np.zeros((1, 2)), L)[0])
    if n > 0 and d == 0.0:
        return float(abs(u)), math.inf
    distance_factor = (s / d) ** (2 * n) if n > 0 else 1.0
    count_factor = (2.0 / (math.pi * s) + (2 * n + 1) / L) ** 2
    bound = distance_factor * fourier_decay_constant(n) * o.max_derivative(2 * n) * count_factor
    return float(abs(u)), bound


def gaussian_third_derivative(t: np.ndarray | float) -> np.ndarray:
    """g''' for g(t) = exp(-t^2)."""
    t = np.asarray(t, dtype=float)
    return (-8.0 * t**3 + 12.0 * t) * np.exp(-(t**2))


def m_density(
    r: float,
    third_derivative: Callable[[np.ndarray | float], np.ndarray] = gaussian_third_derivative,
) -> float:
    """m(r) = -(r/16) int_0^inf g'''(sqrt(r^2 + u^2)) du."""
    value, _ = integrate.quad(
        lambda u: float(third_derivative(math.hypot(r, u))),
        0.0,
        np.inf,
        epsabs=1e-14,
        epsrel=1e-12,
    )
    return -r * value / 16.0


def reconstruct_kernel(t: float) -> float:
    """g(t) = int_t^inf m(r) j(t/r) dr for the Gaussian test profile."""
    value, _ = integrate.quad(
        lambda r: m_density(r) * float(j_overlap(t / r)),
        t,
        np.inf,
        epsabs=1e-12,
        epsrel=1e-10,
        limit=200,
    )
    return value


def kernel_constant_c() -> float:
    """c = int_0^1 |m| + int_1^inf |m| t^4 dt."""
    inner, _ = integrate.quad(lambda r: abs(m_density(r)), 0.0, 1.0, limit=200)
    outer, _ = integrate.quad(lambda r: abs(m_density(r)) * r**4, 1.0, np.inf, limit=200)
    return inner + outer


def kernel_tail_moment(x: float) -> float:
    """J(x) = int_x^inf |m(r)| r^2 dr."""
    value, _ = integrate.quad(lambda r: abs(m_density(r)) * r**2, x, np.inf, limit=200)
    return value


def select_Jj(  # noqa: N802
    centers: Sequence[Sequence[float]],
    j: int | None,
    R: float,  # noqa: N803
    L: float | None = None,  # noqa: N803
) -> list[int]:
    """Select the well separated subset J_j of the centers other than j.

    Phase one admits every i whose nearest neighbour among k != i, j is at least R/5 away.
    Phase two visits the rest in lexicographic order of coordinates and admits those at
    least R/5 away from everything admitted so far.

    Args:
        centers: Points.
        j: Excluded index, or None.
        R: Length scale.
        L: Torus side for the metric, plane metric when None.

    Returns:
        Sorted indices of J_j.
    """
    points = np.asarray(centers, dtype=float).reshape(-1, 2)
    count = len(points)
    if L is None:
        dist = np.hypot(*(points[:, None, :] - points[None, :, :]).transpose(2, 0, 1))
    else:
        dist = torus_distance(points[:, None, :], points[None, :, :], L)

    separation = SEPARATION_FRACTION * R
    others = [i for i in range(count) if i != j]
    chosen: list[int] = []

    for i in others:
        rest = [k for k in others if k != i]
        if not rest or np.min(dist[i, rest]) >= separation:
            chosen.append(i)

    for i in sorted(others, key=lambda index: (points[index, 0], points[index, 1])):
        if i in chosen:
            continue
        if not chosen or np.min(dist[i, chosen]) >= separation:
            chosen.append(i)

    return sorted(chosen)


def _potential_field(
    grid: TorusGrid, v: sc.RadialPotential, centers: list, penalty: float
) -> np.ndarray:
    total = np.zeros((grid.N, grid.N))
    cap = penalty / grid.L**2
    for center in centers:
        values = v.value(grid.distance_to(center).ravel()).reshape(grid.N, grid.N)
        total += np.minimum(values, cap)
    return total


def assemble_dyson_operator(
    grid: TorusGrid,
    v: sc.RadialPotential,
    params: DysonParams,
    a_tilde: float,
    penalty: float = HARDCORE_PENALTY,
) -> SpectralOperator:
    """Assemble the one-particle Dyson operator difference on the grid.

    The operator is -div chi^2 grad + (1/2) sum v - (1 - eps) U_R(d(x, y_NN))
    + (1/eps) (int U_R t dt) sum w_R(x - y_i).

    Args:
        grid: Torus grid.
        v: Two-body potential.
        params: Length scales and centers.
        a_tilde: Scattering length in the soft potential.
        penalty: Hard cores are replaced by penalty / L^2.

    Returns:
        The operator whose lowest eigenvalue is the inequality margin.
    """
    params.check_grid(grid)
    p = grid.momentum_norm()
    multiplier = p**2 * chi_multiplier(p, params.s) ** 2
    centers = list(params.centers)
    if not centers:
        return grid.spectral_operator(multiplier, np.zeros((grid.N, grid.N)))

    selected = centers
    if params.restrict_to_jj:
        selected = [centers[i] for i in select_Jj(centers, None, params.R, grid.L)]
        logger.debug("Restricted %d centers to J of size %d", len(centers), len(selected))

    diagonal = 0.5 * _potential_field(grid, v, centers, penalty)
    nearest = np.min(np.stack([grid.distance_to(c) for c in selected]), axis=0)
    diagonal -= (1.0 - params.epsilon) * soft_potential(params, a_tilde, nearest)

    fields = torus_fields(grid, params)
    if not fields.degenerate:
        weight = soft_potential_moment(params, a_tilde) / params.epsilon
        diagonal += weight * fields.w_sum(selected)

    return grid.spectral_operator(multiplier, diagonal)


def dyson_inequality_margin(
    grid: TorusGrid,
    v: sc.RadialPotential,
    params: DysonParams,
    a_tilde: float,
    penalty: float = HARDCORE_PENALTY,
) -> float:
    """Lowest eigenvalue of the one-particle Dyson operator difference.

    A value at or above -1e-6 times the operator norm certifies the discretised inequality.

    Args:
        grid: Torus grid.
        v: Two-body potential.
        params: Length scales and centers.
        a_tilde: Scattering length in the soft potential.
        penalty: Hard cores are replaced by penalty / L^2.

    Returns:
        The margin.
    """
    operator = assemble_dyson_operator(grid, v, params, a_tilde, penalty)
    margin = operator.lowest_eigenvalue()
    logger.info(
        "Dyson margin %.6g (norm bound %.6g) on N=%d L=%g",
        margin,
        operator.norm_bound,
        grid.N,
        grid.L,
    )
    return margin


def margin_certified(margin: float, norm: float) -> bool:
    """Check margin >= -1e-6 * norm."""
    return margin >= -MARGIN_TOLERANCE * norm

