#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Radial potentials and their two-dimensional scattering length."""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from charmlibs import pathops
from scipy import integrate, special

from special_fns import DomainError

logger = logging.getLogger(__name__)

HARDCORE = "hardcore"
CONST = "const"
TABULATED = "tabulated"
VALID_KINDS = [HARDCORE, CONST, TABULATED]

ODE_RTOL = 1e-10
ODE_ATOL = 1e-13
START_FRACTION = 1e-6
MIN_SAMPLES = 201
SAMPLE_STEP = 0.01
EXTERIOR_RADII = 5


class PotentialError(ValueError):
    """Custom exception for malformed radial potentials."""


class SolverError(RuntimeError):
    """Custom exception for failures of the radial ODE integration."""


class DegenerateError(ValueError):
    """Custom exception for a vanishing scattering length where a logarithm needs a > 0."""


@dataclass(frozen=True)
class Segment:
    """One radial piece [r_lo, r_hi) of a potential.

    Attributes:
        r_lo: Inner radius.
        r_hi: Outer radius.
        kind: One of hardcore, const or tabulated.
        value: Constant value for const segments.
        samples: (r, v) knots for tabulated segments, linearly interpolated.
    """

    r_lo: float
    r_hi: float
    kind: str
    value: float = 0.0
    samples: tuple[tuple[float, float], ...] = ()

    def knots(self) -> tuple[np.ndarray, np.ndarray]:
        """Return the tabulated knots as arrays."""
        table = np.asarray(self.samples, dtype=float)
        return table[:, 0], table[:, 1]

    def evaluate(self, r: np.ndarray) -> np.ndarray:
        """Evaluate the segment formula at radii r, ignoring the segment bounds."""
        if self.kind == HARDCORE:
            return np.full_like(r, np.inf, dtype=float)
        if self.kind == CONST:
            return np.full_like(r, self.value, dtype=float)
        sr, sv = self.knots()
        return np.interp(r, sr, sv)

    def breakpoints(self) -> list[float]:
        """Return the interior kinks of the segment."""
        if self.kind != TABULATED:
            return []
        sr, _ = self.knots()
        return [float(x) for x in sr if self.r_lo < x < self.r_hi]

    def is_zero(self) -> bool:
        """Check whether the segment vanishes identically."""
        if self.kind == HARDCORE:
            return False
        if self.kind == CONST:
            return self.value == 0.0
        _, sv = self.knots()
        return bool(np.all(sv == 0.0))

    def restricted(self, lo: float, hi: float) -> "Segment":
        """Return the same segment restricted to [lo, hi]."""
        return Segment(lo, hi, self.kind, self.value, self.samples)

    def moment(self, lo: float, hi: float, cap: float | None = None) -> float:
        """Compute int_lo^hi r min(v, cap) dr on this segment.

        Args:
            lo: Lower limit inside the segment.
            hi: Upper limit inside the segment.
            cap: Optional ceiling applied to v.

        Returns:
            The radial moment; inf across a hard core without a cap.
        """
        if hi <= lo:
            return 0.0
        if self.kind == HARDCORE:
            return math.inf if cap is None else cap * (hi**2 - lo**2) / 2.0
        if self.kind == CONST:
            level = self.value if cap is None else min(self.value, cap)
            return level * (hi**2 - lo**2) / 2.0

        points = [lo] + [x for x in self.breakpoints() if lo < x < hi] + [hi]
        if cap is not None:
            value, _ = integrate.quad(
                lambda r: r * min(float(self.evaluate(np.array([r]))[0]), cap),
                lo,
                hi,
                points=points[1:-1] or None,
                limit=max(50, 4 * len(points)),
                epsabs=1e-14,
                epsrel=1e-12,
            )
            return value

        # r times a linear function is quadratic: Simpson is exact on each piece.
        edges = np.asarray(points)
        mid = 0.5 * (edges[:-1] + edges[1:])
        f_lo = edges[:-1] * self.evaluate(edges[:-1])
        f_mid = mid * self.evaluate(mid)
        f_hi = edges[1:] * self.evaluate(edges[1:])
        return float(np.sum((edges[1:] - edges[:-1]) * (f_lo + 4.0 * f_mid + f_hi) / 6.0))

    def to_dict(self) -> dict[str, Any]:
        """Serialise using the potential file field names."""
        entry: dict[str, Any] = {"r_lo": self.r_lo, "r_hi": self.r_hi, "kind": self.kind}
        if self.kind == CONST:
            entry["value"] = self.value
        elif self.kind == TABULATED:
            entry["samples"] = [list(pair) for pair in self.samples]
        return entry


@dataclass(frozen=True)
class RadialPotential:
    """Piecewise nonnegative radial potential of finite range.

    Attributes:
        segments: Contiguous segments starting at r = 0; a hard core may only come first.
    """

    segments: tuple[Segment, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        position = 0.0

        for index, seg in enumerate(self.segments):
            if seg.kind not in VALID_KINDS:
                raise PotentialError(f"segment {index}: unknown kind {seg.kind!r}")
            if not math.isclose(seg.r_lo, position, rel_tol=1e-12, abs_tol=1e-15):
                raise PotentialError(f"segment {index}: expected r_lo={position}, got {seg.r_lo}")
            if not seg.r_hi > seg.r_lo:
                raise PotentialError(f"segment {index}: empty interval")
            if seg.kind == HARDCORE and index > 0:
                raise PotentialError(f"segment {index}: hard core must be the innermost segment")
            if seg.kind == CONST and not (seg.value >= 0.0 and math.isfinite(seg.value)):
                raise PotentialError(f"segment {index}: value must be finite and >= 0")
            if seg.kind == TABULATED:
                self._check_samples(index, seg)
            position = seg.r_hi

    @staticmethod
    def _check_samples(index: int, seg: Segment) -> None:
        if len(seg.samples) < 2:
            raise PotentialError(f"segment {index}: tabulated segments need two samples")
        sr, sv = seg.knots()
        if np.any(np.diff(sr) <= 0.0):
            raise PotentialError(f"segment {index}: sample radii must increase")
        if sr[0] > seg.r_lo or sr[-1] < seg.r_hi:
            raise PotentialError(f"segment {index}: samples must cover [r_lo, r_hi]")
        if np.any(~np.isfinite(sv)) or np.any(sv < 0.0):
            raise PotentialError(f"segment {index}: sample values must be finite and >= 0")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RadialPotential":
        """Build a potential from its JSON mapping.

        Args:
            data: Mapping with a "segments" list.

        Returns:
            The validated potential.
        """
        try:
            entries = data["segments"]
            segments = [
                Segment(
                    r_lo=float(entry["r_lo"]),
                    r_hi=float(entry["r_hi"]),
                    kind=str(entry["kind"]),
                    value=float(entry.get("value", 0.0)),
                    samples=tuple((float(r), float(v)) for r, v in entry.get("samples", [])),
                )
                for entry in entries
            ]
        except (KeyError, TypeError, ValueError) as e:
            logger.error("Invalid potential description: %s", str(e))
            raise PotentialError(f"invalid potential description: {e}") from e

        for index, (seg, entry) in enumerate(zip(segments, entries)):
            if seg.kind == CONST and "value" not in entry:
                raise PotentialError(f"segment {index}: const segment without value")

        return cls(tuple(segments))

    @classmethod
    def load(cls, path: str) -> "RadialPotential":
        """Read a potential file."""
        try:
            data = json.loads(pathops.LocalPath(path).read_text())
        except json.JSONDecodeError as e:
            raise PotentialError(f"{path}:{e.lineno}: {e.msg}") from e
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        """Serialise to the JSON mapping."""
        return {"segments": [seg.to_dict() for seg in self.segments]}

    @property
    def range_R0(self) -> float:  # noqa: N802
        """Outer edge of the support."""
        return self.segments[-1].r_hi if self.segments else 0.0

    @property
    def hardcore_radius(self) -> float:
        """Radius of the hard core, 0 without one."""
        if self.segments and self.segments[0].kind == HARDCORE:
            return self.segments[0].r_hi
        return 0.0

    def is_zero(self) -> bool:
        """Check whether v vanishes identically."""
        return all(seg.is_zero() for seg in self.segments)

    def value(self, r: np.ndarray | float) -> np.ndarray:
        """Evaluate v(r), inf inside the hard core and 0 beyond the range."""
        radii = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(radii)
        for seg in self.segments:
            mask = (radii >= seg.r_lo) & (radii < seg.r_hi)
            if np.any(mask):
                out[mask] = seg.evaluate(radii[mask])
        return out

    def moment(self, lo: float = 0.0, hi: float | None = None, cap: float | None = None) -> float:
        """Compute int_lo^hi r min(v(r), cap) dr."""
        hi = self.range_R0 if hi is None else min(hi, self.range_R0)
        total = 0.0
        for seg in self.segments:
            a, b = max(lo, seg.r_lo), min(hi, seg.r_hi)
            if b > a:
                total += seg.moment(a, b, cap)
        return total

    def integral(self) -> float:
        """Two-dimensional integral of v over the plane."""
        return 2.0 * math.pi * self.moment()

    def truncated(self, cutoff: float) -> "RadialPotential":
        """Return v times theta(cutoff - r)."""
        if cutoff >= self.range_R0:
            return self
        kept = [
            seg.restricted(seg.r_lo, min(seg.r_hi, cutoff))
            for seg in self.segments
            if seg.r_lo < cutoff
        ]
        return RadialPotential(tuple(kept))

    def removed_below(self, radius: float) -> "RadialPotential":
        """Return v times theta(r - radius)."""
        if radius <= 0.0:
            return self
        if radius >= self.range_R0:
            return RadialPotential()
        kept = [Segment(0.0, radius, CONST, 0.0)]
        kept += [
            seg.restricted(max(seg.r_lo, radius), seg.r_hi)
            for seg in self.segments
            if seg.r_hi > radius
        ]
        return RadialPotential(tuple(kept))


def soft_disk(v0: float, d: float) -> RadialPotential:
    """Constant potential v0 on the disk of radius d."""
    return RadialPotential((Segment(0.0, d, CONST, v0),))


def hard_disk(d: float) -> RadialPotential:
    """Hard disk of radius d."""
    return RadialPotential((Segment(0.0, d, HARDCORE),))


@dataclass(frozen=True)
class ScatteringResult:
    """Scattering length and the normalised zero-energy profile.

    Attributes:
        a: Scattering length.
        R_used: Radius where the profile equals one.
        functional_value: 2 pi / ln(R_used / a), the minimum of the energy functional.
        degenerate: True for v identically zero (a = 0).
        r_samples: Radii of the profile samples, pieces separated by repeated radii.
        g_samples: Profile g(r), g(R_used) = 1.
        rdg_samples: r g'(r) on the same radii.
        piece_starts: Index of the first sample of every integration piece.
    """

    a: float
    R_used: float  # noqa: N815
    functional_value: float
    degenerate: bool = False
    r_samples: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    g_samples: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    rdg_samples: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    piece_starts: tuple[int, ...] = ()

    @property
    def log_ratio(self) -> float:
        """ln(R_used / a)."""
        if self.degenerate:
            return math.inf
        return math.log(self.R_used / self.a)

    def profile(self, r: np.ndarray | float) -> np.ndarray:
        """Interpolate the normalised profile; exact logarithm outside the samples."""
        radii = np.atleast_1d(np.asarray(r, dtype=float))
        if self.degenerate:
            return np.ones_like(radii)
        inner = np.interp(radii, self.r_samples, self.g_samples)
        outer = np.log(np.maximum(radii, self.a) / self.a) / self.log_ratio
        return np.where(radii > self.r_samples[-1], outer, inner)


def _pieces(
    v: RadialPotential, t_start: float, R: float
) -> list[tuple[float, float, Segment | None]]:
    pieces = []
    for seg in v.segments:
        if seg.kind == HARDCORE:
            continue
        edges = [seg.r_lo] + seg.breakpoints() + [seg.r_hi]
        for lo, hi in zip(edges[:-1], edges[1:]):
            t_lo = max(math.log(lo), t_start) if lo > 0.0 else t_start
            pieces.append((t_lo, math.log(hi), seg))
    pieces.append((math.log(v.range_R0), math.log(R), None))
    return pieces


def _initial_state(v: RadialPotential) -> tuple[float, np.ndarray]:
    core = v.hardcore_radius
    if core > 0.0:
        return math.log(core), np.array([0.0, core])

    first = v.segments[0]
    r_start = first.r_hi * START_FRACTION
    v_start = float(first.evaluate(np.array([0.0]))[0])
    kr = math.sqrt(v_start / 2.0) * r_start
    return math.log(r_start), np.array([special.i0(kr), kr * special.i1(kr)])


def scattering_length(v: RadialPotential, R: float) -> ScatteringResult:
    """Solve the zero-energy equation -2 Laplace g + v g = 0 outward and extract a.

    The radial equation is integrated in t = ln r as g_tt = (v/2) r^2 g, starting from
    g = 0 at a hard core or from the regular Bessel solution near the origin.

    Args:
        v: Potential.
        R: Normalisation radius, beyond the range of v.

    Returns:
        The scattering length with the profile normalised to g(R) = 1.

    Raises:
        PotentialError: If R does not exceed the range of v.
        SolverError: If the ODE integration fails.
    """
    if not R > v.range_R0:
        raise PotentialError(f"R={R} must exceed the potential range {v.range_R0}")

    if v.is_zero():
        logger.warning("Potential vanishes identically, scattering length is 0")
        radii = np.array([R])
        return ScatteringResult(
            a=0.0,
            R_used=R,
            functional_value=0.0,
            degenerate=True,
            r_samples=radii,
            g_samples=np.ones(1),
            rdg_samples=np.zeros(1),
            piece_starts=(0,),
        )

    t_start, state = _initial_state(v)
    t_parts, y_parts, starts = [], [], []
    count = 0

    for t_lo, t_hi, seg in _pieces(v, t_start, R):
        if t_hi <= t_lo:
            continue

        def rhs(t: float, y: np.ndarray, seg: Segment | None = seg) -> list[float]:
            r = math.exp(t)
            level = 0.0 if seg is None else float(seg.evaluate(np.array([r]))[0])
            return [y[1], 0.5 * level * r * r * y[0]]

        samples = max(MIN_SAMPLES, 2 * math.ceil((t_hi - t_lo) / (2 * SAMPLE_STEP)) + 1)
        t_eval = np.linspace(t_lo, t_hi, samples)
        sol = integrate.solve_ivp(
            rhs, (t_lo, t_hi), state, method="RK45", t_eval=t_eval, rtol=ODE_RTOL, atol=ODE_ATOL
        )
        if sol.status != 0:
            logger.error("Radial integration failed on [%g, %g]: %s", t_lo, t_hi, sol.message)
            raise SolverError(f"radial integration failed: {sol.message}")

        starts.append(count)
        count += sol.t.size
        t_parts.append(sol.t)
        y_parts.append(sol.y)
        state = sol.y[:, -1]

    t_all = np.concatenate(t_parts)
    g_all = np.concatenate([y[0] for y in y_parts])
    gt_all = np.concatenate([y[1] for y in y_parts])
    r_all = np.exp(t_all)

    exterior = slice(starts[-1], None)
    if np.any(gt_all[exterior] <= 0.0):
        raise SolverError("non-increasing exterior solution")

    last = count - starts[-1] - 1
    picks = np.linspace(0, last, EXTERIOR_RADII + 1).astype(int)[1:]
    r_ext = r_all[exterior][picks]
    a_values = r_ext * np.exp(-g_all[exterior][picks] / gt_all[exterior][picks])
    a = float(np.mean(a_values))
    logger.debug("Scattering length spread over exterior radii: %g", float(np.ptp(a_values)))

    norm = g_all[-1]
    result = ScatteringResult(
        a=a,
        R_used=R,
        functional_value=2.0 * math.pi / math.log(R / a),
        r_samples=r_all,
        g_samples=g_all / norm,
        rdg_samples=gt_all / norm,
        piece_starts=tuple(starts),
    )
    logger.info("Solved scattering problem, a=%.12g (R=%g)", a, R)
    return result


def functional_energy(v: RadialPotential, result: ScatteringResult) -> float:
    """Evaluate int_{B_R} |grad g|^2 + (v/2) g^2 on the stored profile.

    Args:
        v: Potential the profile was solved for.
        result: Output of scattering_length.

    Returns:
        The functional value.
    """
    if result.degenerate:
        return 0.0

    total = 0.0
    bounds = list(result.piece_starts) + [result.r_samples.size]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        r = result.r_samples[lo:hi]
        g = result.g_samples[lo:hi]
        gt = result.rdg_samples[lo:hi]
        # Evaluate v from inside the piece so shared endpoints use this piece's formula.
        mid = 0.5 * (r[0] + r[-1])
        seg = next((s for s in v.segments if s.r_lo <= mid < s.r_hi), None)
        level = np.zeros_like(r) if seg is None else seg.evaluate(r)
        integrand = gt**2 + 0.5 * level * r**2 * g**2
        total += integrate.simpson(integrand, x=np.log(r))

    return 2.0 * math.pi * float(total)


def finiteness_integral(v: RadialPotential, b: float, r_min: float | None = None) -> float:
    """Compute 2 pi int v(r) ln^2(r/b) r dr from max(b, r_min) to the range of v.

    Args:
        v: Potential.
        b: Length inside the logarithm.
        r_min: Optional lower limit, b when absent.

    Returns:
        The integral; inf when the range reaches into the hard core.

    Raises:
        DomainError: If b is not positive.
    """
    if not b > 0.0:
        raise DomainError(f"b must be positive, got {b}")

    lower = b if r_min is None else max(b, r_min)
    if lower < v.hardcore_radius:
        logger.warning("Finiteness integral from %g reaches into the hard core", lower)
        return math.inf

    total = 0.0
    for seg in v.segments:
        lo, hi = max(lower, seg.r_lo), seg.r_hi
        if hi <= lo or seg.kind == HARDCORE or seg.is_zero():
            continue
        inner = [x for x in seg.breakpoints() if lo < x < hi]
        value, _ = integrate.quad(
            lambda r, s=seg: float(s.evaluate(np.array([r]))[0]) * math.log(r / b) ** 2 * r,
            lo,
            hi,
            points=inner or None,
            limit=max(50, 4 * len(inner) + 4),
            epsabs=0.0,
            epsrel=1e-12,
        )
        total += value

    return 2.0 * math.pi * total
