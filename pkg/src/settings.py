#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Configuration options and sweep descriptions."""

import itertools
import json
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml
from charmlibs import pathops

import ideal_gas as ig

logger = logging.getLogger(__name__)

CONFIG_PATH = Path(__file__).parent.parent / "config.yaml"

VALID_TYPES = ["float", "int", "string", "boolean"]
BUDGET_CONSTANTS = [
    "error_constant",
    "z1_constant",
    "z2_constant",
    "z3_constant",
    "z4_constant",
    "z5_constant",
    "kappa_delta",
    "range_over_a",
]
VALID_CHECKS = ["surgery", "holes", "dyson", "berezin_lieb", "rate"]
SWEEP_SECTIONS = ["points", "filter", "potentials", "checks", "constants", "output", "seed"]
POINT_KEYS = ["beta_rho", "beta", "rho", "sigma", "log_sigma", "a"]
DEFAULT_OUTPUT = "bose2d-out"


class ConfigError(ValueError):
    """Custom exception for invalid configuration files."""

    def __init__(self, message: str, field_name: str = "", line: int | None = None):
        location = ""
        if line is not None:
            location += f"line {line}: "
        if field_name:
            location += f"{field_name}: "
        super().__init__(location + message)
        self.reason = message
        self.field_name = field_name
        self.line = line


@dataclass(frozen=True)
class Settings:
    """Typed view of the options declared in config.yaml."""

    error_constant: float
    rate_constant: float
    z1_constant: float
    z2_constant: float
    z3_constant: float
    z4_constant: float
    z5_constant: float
    kappa_delta: float
    range_over_a: float
    large_x_constant: float
    small_x_constant: float
    ctilde: float
    surgery_delta: float
    hardcore_penalty: float
    radial_nodes: int
    phase_nodes: int
    seed: int
    workers: int

    def __post_init__(self) -> None:
        positive = ["rate_constant", "range_over_a", "hardcore_penalty"]
        positive += ["radial_nodes", "phase_nodes"]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError("must be positive", name)
        for name in ["error_constant", "kappa_delta", "ctilde", "workers", "seed"]:
            if getattr(self, name) < 0:
                raise ConfigError("must not be negative", name)
        if not 0.0 < self.surgery_delta < 1.0:
            raise ConfigError("must lie in (0, 1)", "surgery_delta")

    def budget_constants(self) -> dict[str, float]:
        """Constants consumed by the free-energy error budget."""
        return {name: getattr(self, name) for name in BUDGET_CONSTANTS}

    def to_dict(self) -> dict[str, Any]:
        """All options as a plain mapping."""
        return {item.name: getattr(self, item.name) for item in fields(self)}


def _key_lines(node: yaml.Node | None, prefix: str = "") -> dict[str, int]:
    """Map dotted mapping keys to their 1-based line in the YAML source."""
    lines: dict[str, int] = {}
    if not isinstance(node, yaml.MappingNode):
        return lines
    for key_node, value_node in node.value:
        name = f"{prefix}{key_node.value}"
        lines[name] = key_node.start_mark.line + 1
        lines.update(_key_lines(value_node, name + "."))
    return lines


def read_mapping(path: str | Path) -> tuple[dict[str, Any], dict[str, int]]:
    """Read a YAML or JSON file, chosen by suffix, into a mapping.

    Args:
        path: File to read.

    Returns:
        The mapping and the source line of every key (empty for JSON).

    Raises:
        ConfigError: If the file is missing, malformed or not a mapping.
    """
    source = pathops.LocalPath(path)
    try:
        text = source.read_text()
    except (FileNotFoundError, IsADirectoryError) as e:
        logger.error("Cannot read configuration file %s: %s", source, str(e))
        raise ConfigError(f"cannot read {source}") from e

    lines: dict[str, int] = {}
    if source.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(e.msg, line=e.lineno) from e
    else:
        try:
            data = yaml.safe_load(text)
            lines = _key_lines(yaml.compose(text, Loader=yaml.SafeLoader))
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            raise ConfigError(str(e), line=mark.line + 1 if mark else None) from e

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"top level of {source} must be a mapping")
    return data, lines


def _coerce(name: str, value: Any, type_name: str, line: int | None = None) -> Any:
    """Check a value against its declared option type."""
    if type_name == "float":
        if isinstance(value, str):
            # YAML 1.1 reads exponents without a dot, such as 1e6, as strings
            try:
                value = float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected float, got {value!r}", name, line)
        if not math.isfinite(value):
            raise ConfigError(f"expected a finite float, got {value!r}", name, line)
        return float(value)
    if type_name == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected int, got {value!r}", name, line)
        return value
    if type_name == "boolean":
        if not isinstance(value, bool):
            raise ConfigError(f"expected boolean, got {value!r}", name, line)
        return value
    if not isinstance(value, str):
        raise ConfigError(f"expected string, got {value!r}", name, line)
    return value


def declared_options(path: str | Path = CONFIG_PATH) -> dict[str, dict[str, Any]]:
    """Options declared in config.yaml with their type and default."""
    data, _ = read_mapping(path)
    options = data.get("options")
    if not isinstance(options, dict):
        raise ConfigError("missing options section", "options")
    for name, spec in options.items():
        if spec.get("type") not in VALID_TYPES:
            raise ConfigError(f"unknown type {spec.get('type')!r}", name)
    return options


def load_settings(
    path: str | Path | None = None, overrides: Mapping[str, Any] | None = None
) -> Settings:
    """Read the option defaults and overlay a user file and explicit overrides.

    Args:
        path: Flat YAML or JSON mapping of option names to values.
        overrides: Further option values, applied last.

    Returns:
        The validated settings.

    Raises:
        ConfigError: On unknown options, type mismatches or out-of-range values.
    """
    options = declared_options()
    values = {name: spec["default"] for name, spec in options.items()}

    layers: list[tuple[Mapping[str, Any], dict[str, int]]] = []
    if path is not None:
        layers.append(read_mapping(path))
    if overrides:
        layers.append((overrides, {}))

    for data, lines in layers:
        for name, value in data.items():
            if name not in options:
                raise ConfigError("unknown option", name, lines.get(name))
            values[name] = _coerce(name, value, options[name]["type"], lines.get(name))

    for name, spec in options.items():
        values[name] = _coerce(name, values[name], spec["type"])

    settings = Settings(**values)
    logger.debug("Loaded settings %s", settings)
    return settings


@dataclass(frozen=True)
class SweepPoint:
    """One thermodynamic state of a sweep, given by (beta, rho) and sigma, ln sigma or a."""

    beta: float
    rho: float = 1.0
    log_sigma: float | None = None
    a: float | None = None

    @property
    def beta_rho(self) -> float:
        """beta rho."""
        return self.beta * self.rho

    def thermo_point(self) -> ig.ThermoPoint:
        """Build the state; invalid values surface as DomainError here."""
        if self.a is not None:
            return ig.ThermoPoint(beta=self.beta, rho=self.rho, a=self.a)
        return ig.ThermoPoint.from_sigma(self.beta, self.rho, log_sigma=self.log_sigma)


@dataclass(frozen=True)
class SweepConfig:
    """Parsed sweep description.

    Attributes:
        points: States in input order, after filtering.
        potentials: Potential files by name, resolved against the config directory.
        checks: Verification suites to run.
        settings: Options with the constants overrides applied.
        output: Directory receiving rows.csv and report.json.
        seed: Seed of every random draw.
    """

    points: tuple[SweepPoint, ...] = ()
    potentials: dict[str, str] = field(default_factory=dict)
    checks: tuple[str, ...] = ()
    settings: Settings = field(default_factory=load_settings)
    output: str = DEFAULT_OUTPUT
    seed: int = 0


def _axis(name: str, value: Any, line: int | None) -> list[float]:
    """Expand a scalar, list or {start, stop, num, spacing} range."""
    if isinstance(value, dict):
        try:
            start, stop, num = float(value["start"]), float(value["stop"]), int(value["num"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"range needs start, stop and num: {e}", name, line) from e
        spacing = value.get("spacing", "linear")
        if spacing == "linear":
            return [float(x) for x in np.linspace(start, stop, num)]
        if spacing == "log":
            if not (start > 0.0 and stop > 0.0):
                raise ConfigError("log spacing needs positive ends", name, line)
            return [float(x) for x in np.geomspace(start, stop, num)]
        raise ConfigError(f"unknown spacing {spacing!r}", name, line)

    items = value if isinstance(value, list) else [value]
    return [_coerce(name, item, "float", line) for item in items]


def _expand_points(entries: Any, lines: dict[str, int]) -> list[SweepPoint]:
    if not isinstance(entries, list):
        raise ConfigError("expected a list of point groups", "points", lines.get("points"))

    points: list[SweepPoint] = []
    for index, entry in enumerate(entries):
        where = f"points[{index}]"
        line = lines.get("points")
        if not isinstance(entry, dict):
            raise ConfigError("expected a mapping", where, line)
        unknown = sorted(set(entry) - set(POINT_KEYS))
        if unknown:
            raise ConfigError(f"unknown keys {unknown}", where, line)
        if ("beta_rho" in entry) == ("beta" in entry):
            raise ConfigError("give exactly one of beta_rho and beta", where, line)
        couplings = [key for key in ["sigma", "log_sigma", "a"] if key in entry]
        if len(couplings) != 1:
            raise ConfigError("give exactly one of sigma, log_sigma and a", where, line)

        temperature_key = "beta_rho" if "beta_rho" in entry else "beta"
        coupling_key = couplings[0]
        rhos = _axis(f"{where}.rho", entry.get("rho", 1.0), line)
        couplings_axis = _axis(f"{where}.{coupling_key}", entry[coupling_key], line)
        temperatures = _axis(f"{where}.{temperature_key}", entry[temperature_key], line)

        for rho, coupling, temperature in itertools.product(
            rhos, couplings_axis, temperatures
        ):
            beta = temperature / rho if temperature_key == "beta_rho" else temperature
            if coupling_key == "a":
                points.append(SweepPoint(beta=beta, rho=rho, a=coupling))
            elif coupling_key == "sigma":
                log_sigma = math.log(coupling) if coupling > 0.0 else -math.inf
                points.append(SweepPoint(beta=beta, rho=rho, log_sigma=log_sigma))
            else:
                points.append(SweepPoint(beta=beta, rho=rho, log_sigma=coupling))
    return points


def _apply_filter(points: list[SweepPoint], bounds: Any, line: int | None) -> list[SweepPoint]:
    if not isinstance(bounds, dict):
        raise ConfigError("expected a mapping", "filter", line)
    lo = _coerce("filter.beta_rho_min", bounds.get("beta_rho_min", -math.inf), "float", line)
    hi = _coerce("filter.beta_rho_max", bounds.get("beta_rho_max", math.inf), "float", line)
    kept = [point for point in points if lo <= point.beta_rho <= hi]
    logger.info("Filter kept %d of %d points", len(kept), len(points))
    return kept


def load_sweep_config(path: str | Path, output: str | None = None) -> SweepConfig:
    """Parse a sweep description.

    Args:
        path: YAML or JSON file with the sections points, filter, potentials, checks,
            constants, output and seed.
        output: Output directory overriding the file's own.

    Returns:
        The sweep configuration.

    Raises:
        ConfigError: With the offending field and, for YAML, its line.
    """
    data, lines = read_mapping(path)
    base = pathops.LocalPath(path).parent

    unknown = sorted(set(data) - set(SWEEP_SECTIONS))
    if unknown:
        raise ConfigError("unknown section", unknown[0], lines.get(unknown[0]))

    points = _expand_points(data.get("points", []), lines)
    if "filter" in data:
        points = _apply_filter(points, data["filter"], lines.get("filter"))

    potentials = data.get("potentials", {})
    if not isinstance(potentials, dict):
        raise ConfigError("expected a mapping of names to files", "potentials")
    resolved = {str(name): str(base / str(file)) for name, file in potentials.items()}

    checks = data.get("checks", [])
    if not isinstance(checks, list):
        raise ConfigError("expected a list", "checks", lines.get("checks"))
    for check in checks:
        if check not in VALID_CHECKS:
            raise ConfigError(f"unknown check {check!r}", "checks", lines.get("checks"))

    constants = data.get("constants", {})
    if not isinstance(constants, dict):
        raise ConfigError("expected a mapping", "constants", lines.get("constants"))
    constant_lines = {
        key.removeprefix("constants."): line
        for key, line in lines.items()
        if key.startswith("constants.")
    }
    try:
        settings = load_settings(overrides=constants)
    except ConfigError as e:
        raise ConfigError(
            e.reason, f"constants.{e.field_name}", constant_lines.get(e.field_name)
        ) from e

    seed = _coerce("seed", data.get("seed", settings.seed), "int", lines.get("seed"))
    target = output if output is not None else str(base / str(data.get("output", DEFAULT_OUTPUT)))

    config = SweepConfig(
        points=tuple(points),
        potentials=resolved,
        checks=tuple(checks),
        settings=settings,
        output=target,
        seed=seed,
    )
    logger.info("Loaded sweep of %d points and %d checks from %s", len(points), len(checks), path)
    return config
