#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Parameter sweeps, verification suites and their reports."""

import csv
import io
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from charmlibs import pathops

import dyson_kernel as dk
import environment
import filling_holes as fh
import free_energy as fe
import ideal_gas as ig
import quantum_toy as qt
import scattering as sc
import surgery
from settings import ConfigError, Settings, SweepConfig, SweepPoint
from special_fns import DomainError

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "sigma",
    "beta_rho",
    "regime",
    "pc_sq_beta",
    "A1",
    "A2",
    "A3",
    "o1_bound",
    "f0",
    "correction",
    "f_lower",
    "log_sigma",
]
DOMAIN_ERROR = "domain_error"
ROWS_FILE = "rows.csv"
REPORT_FILE = "report.json"

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2

PASS = "pass"
FAIL = "fail"
ERROR = "error"

SURGERY_DRAWS = 20
DYSON_GRIDS = [(10.0, 32), (20.0, 64)]
DYSON_SCALES = (2.0, 4.0, 0.3)
DYSON_SCATTERING_RADIUS = 50.0
DYSON_RAMP = (6.0, 1.5, 7)
HOLES_GRID = (2.0, 64)
HOLES_RADII = (0.05, 1.0)
WEAK_COUPLING_RATIOS = [1e-2, 1e-3]
NEAR_EDGE_RATIO = 0.09
BEREZIN_LIEB_GRID = {"omega": [0.5, 1.0, 2.0], "g": [0.5, 1.0, 2.0], "beta": [0.5, 1.0, 2.0]}
BEREZIN_LIEB_NMAX = 12
BEREZIN_LIEB_TOLERANCE = 1e-8

NUMERICAL_ERRORS = (
    sc.SolverError,
    surgery.SurgeryError,
    dk.EigenSolverError,
    qt.LeakageError,
    qt.QuadratureError,
)
INPUT_ERRORS = (DomainError, ConfigError, sc.PotentialError, dk.ResolutionError, OSError)


@dataclass
class CheckResult:
    """Outcome of one verification suite.

    Attributes:
        name: Suite name.
        status: pass, fail, or error for invalid input.
        cases: One record per fixture.
    """

    name: str
    status: str = PASS
    cases: list[dict[str, Any]] = field(default_factory=list)

    def record(self, passed: bool, **details: Any) -> None:
        """Append a case and downgrade the status on failure."""
        self.cases.append({"passed": passed, **details})
        if not passed and self.status == PASS:
            self.status = FAIL

    def to_dict(self) -> dict[str, Any]:
        """Serialise for report.json."""
        return {"name": self.name, "status": self.status, "cases": self.cases}


def _format(value: Any) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def clean_json(value: Any) -> Any:
    """Make a value JSON-safe; non-finite floats become strings."""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {key: clean_json(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean_json(item) for item in value]
    return value


def _point_sigma(point: SweepPoint) -> float:
    if point.log_sigma is not None:
        return math.exp(point.log_sigma) if point.log_sigma < 709.0 else math.inf
    if point.a is not None and point.a > 0.0 and point.rho > 0.0:
        return -math.log(point.a**2 * point.rho)
    return math.nan


def evaluate_point(point: SweepPoint, constants: dict[str, float]) -> dict[str, Any]:
    """Lower bound and error budget at one sweep point.

    Args:
        point: The state.
        constants: Error-budget constants.

    Returns:
        The CSV row, plus an error entry for points outside the domain.
    """
    try:
        state = point.thermo_point()
        value, budget = fe.lower_bound(state, constants)
        return {
            "sigma": state.sigma,
            "beta_rho": state.beta_rho,
            "regime": budget.regime.value,
            "pc_sq_beta": budget.pc_sq_beta,
            "A1": budget.A1,
            "A2": budget.A2,
            "A3": budget.A3,
            "o1_bound": budget.o1_bound,
            "f0": ig.f0(state),
            "correction": fe.correction_term(state),
            "f_lower": value,
            "log_sigma": budget.log_sigma,
            "correction_factor": 2.0 - (fe.critical_data(state).rho_s / state.rho) ** 2,
            "vacuous": budget.vacuous,
        }
    except DomainError as e:
        logger.error("Domain error at beta*rho=%g: %s", point.beta_rho, str(e))
        row: dict[str, Any] = {column: math.nan for column in CSV_COLUMNS}
        row.update(
            sigma=_point_sigma(point),
            beta_rho=point.beta_rho,
            regime=DOMAIN_ERROR,
            log_sigma=math.nan if point.log_sigma is None else point.log_sigma,
            error=str(e),
        )
        return row


def evaluate_points(
    points: tuple[SweepPoint, ...], constants: dict[str, float], workers: int
) -> list[dict[str, Any]]:
    """Evaluate every point, in input order regardless of completion order."""
    if workers <= 1 or len(points) <= 1:
        return [evaluate_point(point, constants) for point in points]

    chunksize = max(1, len(points) // (4 * workers))
    logger.info("Dispatching %d points to %d workers", len(points), workers)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(
            executor.map(evaluate_point, points, itertools.repeat(constants), chunksize=chunksize)
        )


def rows_to_csv(rows: list[dict[str, Any]]) -> str:
    """Render rows with 17 significant digits; an empty sweep gives the header only."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_format(row[column]) for column in CSV_COLUMNS])
    return buffer.getvalue()


def _default_potentials() -> dict[str, sc.RadialPotential]:
    return {"hard_disk": sc.hard_disk(1.0), "soft_disk": sc.soft_disk(4.0, 1.0)}


def load_potentials(files: dict[str, str]) -> dict[str, sc.RadialPotential]:
    """Built-in potentials followed by the configured files, in name order."""
    potentials = _default_potentials()
    for name in sorted(files):
        potentials[name] = sc.RadialPotential.load(files[name])
    return potentials


def check_surgery(config: SweepConfig, potentials: dict[str, sc.RadialPotential]) -> CheckResult:
    """Range cutoff and integral capping over seeded parameter draws."""
    result = CheckResult("surgery")
    rng = np.random.default_rng(config.seed)
    delta = config.settings.surgery_delta

    for name, v in potentials.items():
        for _ in range(SURGERY_DRAWS):
            phi = float(rng.uniform(0.5, 20.0))
            R = float(rng.uniform(10.0, 1000.0))  # noqa: N806
            fraction = float(rng.uniform(0.6, 0.95))

            _, cap_report = surgery.cap_integral(v, phi, delta, R=R)
            result.record(
                cap_report.certified,
                potential=name,
                construction=cap_report.construction_case.value,
                phi=phi,
                R=R,
                lhs=cap_report.bound_lhs,
                rhs=cap_report.bound_rhs,
            )
            _, cut_report = surgery.cutoff_range(v, fraction * v.range_R0, R)
            result.record(
                cut_report.bound_holds,
                potential=name,
                construction=cut_report.construction_case.value,
                fraction=fraction,
                R=R,
                lhs=cut_report.bound_lhs,
                rhs=cut_report.bound_rhs,
            )
    return result


Centers = tuple[tuple[float, float], ...]


def _dyson_configurations(L: float) -> list[tuple[Centers, bool]]:  # noqa: N803
    middle = L / 2.0
    return [
        (((middle, middle),), False),
        (((L / 4.0, L / 4.0), (3.0 * L / 4.0, 3.0 * L / 4.0)), False),
        (((middle, middle), (middle + 0.3, middle)), True),
    ]


def _dyson_ramp() -> sc.RadialPotential:
    height, radius, samples = DYSON_RAMP
    table = tuple(
        (float(r), height * (1.0 - r / radius)) for r in np.linspace(0.0, radius, samples)
    )
    return sc.RadialPotential((sc.Segment(0.0, radius, sc.TABULATED, samples=table),))


def check_dyson(config: SweepConfig) -> CheckResult:
    """Discretised Dyson inequality for every potential, center configuration and grid."""
    result = CheckResult("dyson")
    R, s, epsilon = DYSON_SCALES  # noqa: N806
    potentials = [sc.soft_disk(4.0, 1.0), sc.soft_disk(10.0, 0.8), _dyson_ramp()]
    penalty = config.settings.hardcore_penalty

    for side, points in DYSON_GRIDS:
        grid = dk.TorusGrid(L=side, N=points)
        for v in potentials:
            a_tilde = sc.scattering_length(v, DYSON_SCATTERING_RADIUS).a
            for centers, restrict in _dyson_configurations(grid.L):
                params = dk.DysonParams(
                    R=R,
                    s=s,
                    epsilon=epsilon,
                    kappa=0.5,
                    R0=v.range_R0,
                    centers=centers,
                    restrict_to_jj=restrict,
                )
                operator = dk.assemble_dyson_operator(grid, v, params, a_tilde, penalty)
                margin = dk.dyson_inequality_margin(grid, v, params, a_tilde, penalty)
                result.record(
                    dk.margin_certified(margin, operator.norm_bound),
                    grid=[side, points],
                    potential=v.to_dict(),
                    centers=[list(c) for c in centers],
                    margin=margin,
                    norm=operator.norm_bound,
                )
    return result


def check_holes(config: SweepConfig) -> CheckResult:
    """Hole-filling operator margins, the weak-coupling window and the near-edge bound."""
    result = CheckResult("holes")
    side, points = HOLES_GRID
    grid = dk.TorusGrid(L=side, N=points)
    R0, R = HOLES_RADII  # noqa: N806
    spacing = R / 5.0
    apex = (1.0 + spacing / 2.0, 1.0 + spacing * math.sqrt(3.0) / 2.0)
    configurations = [[(1.0, 1.0)], [(1.0, 1.0), (1.0 + spacing, 1.0), apex]]

    for centers in configurations:
        ctilde = config.settings.ctilde
        operator = fh.holes_operator(grid, centers, R0, R, ctilde)
        margin = fh.holes_inequality_margin(grid, centers, R0, R, ctilde)
        result.record(
            dk.margin_certified(margin, operator.norm_bound),
            centers=[list(c) for c in centers],
            margin=margin,
            norm=operator.norm_bound,
        )

    for ratio in WEAK_COUPLING_RATIOS:
        spec = fh.WellSpec(R0=ratio, R=1.0)
        lower, upper = fh.weak_coupling_window(spec)
        scaled = -fh.plane_ground_energy(spec) / ratio**2
        result.record(lower <= scaled <= upper, ratio=ratio, scaled_energy=scaled)

    spec = fh.WellSpec(R0=NEAR_EDGE_RATIO, R=1.0)
    energy = fh.neumann_ground_energy(spec)
    result.record(energy >= -fh.NEAR_EDGE_BOUND, ratio=NEAR_EDGE_RATIO, energy=energy)
    return result


def check_berezin_lieb(config: SweepConfig) -> CheckResult:
    """Berezin-Lieb margins of the single-mode quartic over the (omega, g, beta) grid."""
    result = CheckResult("berezin_lieb")
    space = qt.FockSpace(1, BEREZIN_LIEB_NMAX)
    settings = config.settings

    for omega, g, beta in itertools.product(*BEREZIN_LIEB_GRID.values()):
        report = qt.berezin_lieb_report(
            space, omega, g, beta, settings.radial_nodes, settings.phase_nodes
        )
        result.record(
            report.margin >= -BEREZIN_LIEB_TOLERANCE,
            omega=omega,
            g=g,
            beta=beta,
            lhs=report.lhs,
            rhs=report.rhs,
            error_bar=report.error_bar,
        )
    return result


def check_rate(settings: Settings, rows: list[dict[str, Any]]) -> CheckResult:
    """Non-vacuous rate o1_bound <= K ln ln sigma / ln sigma and the correction factor in [1, 2].

    The largest rate per coupling is taken over the rows and a dense scan of the critical
    window, whose narrow peak a log grid in beta rho can step over.
    """
    result = CheckResult("rate")
    valid = [row for row in rows if row["regime"] != DOMAIN_ERROR]
    constants = settings.budget_constants()
    for log_sigma in sorted({row["log_sigma"] for row in valid}):
        group = [row for row in valid if row["log_sigma"] == log_sigma]
        largest = max(row["o1_bound"] for row in group)
        peak_beta_rho = max(group, key=lambda row: row["o1_bound"])["beta_rho"]
        if log_sigma > math.e:
            peak = fe.worst_case_budget(log_sigma, constants)
            if peak.o1_bound > largest:
                largest, peak_beta_rho = peak.o1_bound, peak.beta_rho
        ceiling = settings.rate_constant * math.log(log_sigma) / log_sigma
        result.record(
            largest < 1.0,
            condition="non_vacuous",
            log_sigma=log_sigma,
            largest=largest,
            peak_beta_rho=peak_beta_rho,
        )
        result.record(
            largest <= ceiling,
            condition="ceiling",
            log_sigma=log_sigma,
            largest=largest,
            ceiling=ceiling,
            ratio=largest * log_sigma / math.log(log_sigma),
        )
    for row in valid:
        factor = row["correction_factor"]
        if not 1.0 <= factor <= 2.0:
            result.record(False, beta_rho=row["beta_rho"], correction_factor=factor)
    return result


def _run_check(name: str, run: Callable[[], CheckResult]) -> CheckResult:
    try:
        result = run()
    except NUMERICAL_ERRORS as e:
        logger.error("Check %s failed numerically: %s", name, str(e))
        return CheckResult(name, FAIL, [{"passed": False, "error": str(e)}])
    except INPUT_ERRORS as e:
        logger.error("Check %s rejected its input: %s", name, str(e))
        return CheckResult(name, ERROR, [{"passed": False, "error": str(e)}])

    level = logging.INFO if result.status == PASS else logging.WARNING
    logger.log(level, "Check %s: %s over %d cases", name, result.status, len(result.cases))
    return result


def run_checks(config: SweepConfig, rows: list[dict[str, Any]]) -> list[CheckResult]:
    """Run the configured verification suites in order."""
    suites: dict[str, Callable[[], CheckResult]] = {
        "surgery": lambda: check_surgery(config, load_potentials(config.potentials)),
        "holes": lambda: check_holes(config),
        "dyson": lambda: check_dyson(config),
        "berezin_lieb": lambda: check_berezin_lieb(config),
        "rate": lambda: check_rate(config.settings, rows),
    }
    return [_run_check(name, suites[name]) for name in config.checks]


def exit_status(rows: list[dict[str, Any]], checks: list[CheckResult]) -> int:
    """0 when everything passes, 1 for a failed check, 2 for input or domain errors."""
    if any(row["regime"] == DOMAIN_ERROR for row in rows):
        return EXIT_INPUT_ERROR
    if any(check.status == ERROR for check in checks):
        return EXIT_INPUT_ERROR
    if any(check.status == FAIL for check in checks):
        return EXIT_CHECK_FAILED
    return EXIT_OK


def build_report(
    config: SweepConfig, rows: list[dict[str, Any]], checks: list[CheckResult], status: int
) -> dict[str, Any]:
    """Summary written to report.json."""
    errors = [
        {"index": index, "beta_rho": row["beta_rho"], "error": row["error"]}
        for index, row in enumerate(rows)
        if row["regime"] == DOMAIN_ERROR
    ]
    return clean_json(
        {
            "exit_status": status,
            "seed": config.seed,
            "settings": config.settings.to_dict(),
            "points": len(rows),
            "vacuous_rows": sum(1 for row in rows if row.get("vacuous", False)),
            "domain_errors": errors,
            "checks": [check.to_dict() for check in checks],
        }
    )


def run_sweep(config: SweepConfig, workers: int | None = None) -> int:
    """Evaluate the sweep, run its checks and write rows.csv and report.json.

    Args:
        config: Parsed sweep description.
        workers: Worker processes; BOSE2D_THREADS or the workers option when None.

    Returns:
        The exit status.
    """
    if workers is None:
        workers = environment.get_worker_count(config.settings.workers)

    rows = evaluate_points(config.points, config.settings.budget_constants(), workers)
    checks = run_checks(config, rows)
    status = exit_status(rows, checks)

    output = pathops.LocalPath(config.output)
    output.mkdir(parents=True, exist_ok=True)
    pathops.LocalPath(output, ROWS_FILE).write_text(rows_to_csv(rows))
    report = build_report(config, rows, checks, status)
    pathops.LocalPath(output, REPORT_FILE).write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n"
    )

    logger.info(
        "Wrote %d rows and %d checks to %s, exit %d", len(rows), len(checks), output, status
    )
    return status
