#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Command line front end of the bose2d toolkit."""

import argparse
import json
import logging
import sys
from typing import Any, Callable

from charmlibs import pathops

import dyson_kernel as dk
import environment
import filling_holes as fh
import free_energy as fe
import ideal_gas as ig
import quantum_toy as qt
import scattering as sc
import surgery
import sweep
from settings import ConfigError, Settings, load_settings, load_sweep_config

logger = logging.getLogger(__name__)

VALID_LOG_LEVELS = ["info", "debug", "warning", "error", "critical"]
DEFAULT_LOG_LEVEL = "warning"
DYSON_KAPPA = 0.5

Handler = Callable[[argparse.Namespace, Settings], int]

NUMERICAL_ERRORS = sweep.NUMERICAL_ERRORS
INPUT_ERRORS = sweep.INPUT_ERRORS + (qt.StateError, sc.DegenerateError)


def _emit(data: dict[str, Any], out: str | None = None) -> None:
    """Write JSON to a file, or to stdout without one."""
    text = json.dumps(sweep.clean_json(data), indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    pathops.LocalPath(out).write_text(text)
    logger.info("Wrote %s", out)


def _read_json(path: str) -> Any:
    try:
        return json.loads(pathops.LocalPath(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, path, e.lineno) from e


def _potential(args: argparse.Namespace) -> sc.RadialPotential:
    if args.potential:
        return sc.RadialPotential.load(args.potential)
    if args.hard_disk is not None:
        return sc.hard_disk(args.hard_disk)
    if args.soft_disk is not None:
        return sc.soft_disk(*args.soft_disk)
    raise ConfigError("give --potential, --hard-disk or --soft-disk", "potential")


def _state(args: argparse.Namespace) -> ig.ThermoPoint:
    if args.a is not None:
        return ig.ThermoPoint(beta=args.beta, rho=args.rho, a=args.a)
    if args.sigma is not None:
        return ig.ThermoPoint.from_sigma(args.beta, args.rho, sigma=args.sigma)
    if args.log_sigma is not None:
        return ig.ThermoPoint.from_sigma(args.beta, args.rho, log_sigma=args.log_sigma)
    return ig.ThermoPoint(beta=args.beta, rho=args.rho)


def run_ideal(args: argparse.Namespace, settings: Settings) -> int:
    """Ideal-gas thermodynamics, with the critical data when a coupling is given."""
    point = _state(args)
    forms = ig.f0_asymptotics(point.beta_rho)
    data: dict[str, Any] = {
        "beta": point.beta,
        "rho": point.rho,
        "beta_rho": point.beta_rho,
        "mu0": ig.mu0(point),
        "f0": ig.f0(point),
        "pressure": ig.pressure(point),
        "asymptotic_large": forms.large,
        "asymptotic_small": forms.small,
    }
    if point.log_sigma is not None:
        critical = fe.critical_data(point)
        data.update(
            beta_c=critical.beta_c,
            rho_s=critical.rho_s,
            log_sigma=critical.log_sigma,
            correction=fe.correction_term(point),
        )
    _emit(data, args.out)
    return sweep.EXIT_OK


def run_scatter(args: argparse.Namespace, settings: Settings) -> int:
    """Scattering length of a potential."""
    v = _potential(args)
    result = sc.scattering_length(v, args.R)
    data: dict[str, Any] = {
        "a": result.a,
        "R_used": result.R_used,
        "functional_value": result.functional_value,
        "degenerate": result.degenerate,
    }
    if not result.degenerate:
        data["functional_energy"] = sc.functional_energy(v, result)
    _emit(data, args.out)
    return sweep.EXIT_OK


def run_surgery_cutoff(args: argparse.Namespace, settings: Settings) -> int:
    """Range cutoff and its certified bound."""
    v = _potential(args)
    _, report = surgery.cutoff_range(v, args.cutoff, args.R)
    data = report.to_dict()
    if args.sigma is not None:
        data["range_error"] = surgery.range_error_term(report, args.sigma)
    _emit(data, args.out)
    return sweep.EXIT_OK if report.bound_holds else sweep.EXIT_CHECK_FAILED


def run_surgery_cap(args: argparse.Namespace, settings: Settings) -> int:
    """Integral capping and its certified bound."""
    v = _potential(args)
    delta = args.delta if args.delta is not None else settings.surgery_delta
    if args.balanced:
        delta = surgery.balanced_delta(args.phi, sc.scattering_length(v, args.R).log_ratio)
    _, report = surgery.cap_integral(v, args.phi, delta, R=args.R)
    _emit(report.to_dict(), args.out)
    return sweep.EXIT_OK if report.certified else sweep.EXIT_CHECK_FAILED


def _centers(path: str | None, default: list[list[float]]) -> list[list[float]]:
    if path is None:
        return default
    data = _read_json(path)
    if isinstance(data, dict):
        data = data.get("centers")
    if not isinstance(data, list) or any(len(center) != 2 for center in data):
        raise ConfigError("expected a list of [x, y] pairs", "centers")
    return [[float(x), float(y)] for x, y in data]


def run_verify_dyson(args: argparse.Namespace, settings: Settings) -> int:
    """Discretised Dyson inequality margin."""
    v = _potential(args)
    grid = dk.TorusGrid(L=args.L, N=args.grid)
    centers = _centers(args.centers, [[args.L / 2.0, args.L / 2.0]])
    R0 = args.R0 if args.R0 is not None else v.range_R0  # noqa: N806
    a_tilde = args.a_tilde if args.a_tilde is not None else sc.scattering_length(v, args.R).a
    params = dk.DysonParams(
        R=args.R,
        s=args.s,
        epsilon=args.eps,
        kappa=DYSON_KAPPA,
        R0=R0,
        centers=tuple(tuple(center) for center in centers),
        restrict_to_jj=args.restrict,
    )
    operator = dk.assemble_dyson_operator(grid, v, params, a_tilde, settings.hardcore_penalty)
    margin = dk.dyson_inequality_margin(grid, v, params, a_tilde, settings.hardcore_penalty)
    certified = dk.margin_certified(margin, operator.norm_bound)
    _emit(
        {
            "margin": margin,
            "norm_bound": operator.norm_bound,
            "certified": certified,
            "a_tilde": a_tilde,
            "condition": dk.soft_potential_condition(params, a_tilde),
        },
        args.out,
    )
    return sweep.EXIT_OK if certified else sweep.EXIT_CHECK_FAILED


def run_verify_holes(args: argparse.Namespace, settings: Settings) -> int:
    """Hole-filling margin on the torus and the radial energies of one well."""
    ctilde = args.ctilde if args.ctilde is not None else settings.ctilde
    side = args.L if args.L is not None else 2.0 * args.R
    grid = dk.TorusGrid(L=side, N=args.grid)
    centers = _centers(args.centers, [[side / 2.0, side / 2.0]])

    operator = fh.holes_operator(grid, centers, args.R0, args.R, ctilde)
    margin = fh.holes_inequality_margin(grid, centers, args.R0, args.R, ctilde)
    spec = fh.WellSpec(R0=args.R0, R=args.R)
    plane = fh.plane_ground_energy(spec)
    neumann = fh.neumann_ground_energy(spec)
    chain = fh.chain_lower_bound(spec, plane)

    certified = dk.margin_certified(margin, operator.norm_bound) and neumann >= chain
    _emit(
        {
            "margin": margin,
            "norm_bound": operator.norm_bound,
            "ctilde": ctilde,
            "plane_energy": plane,
            "neumann_energy": neumann,
            "chain_bound": chain,
            "certified": certified,
        },
        args.out,
    )
    return sweep.EXIT_OK if certified else sweep.EXIT_CHECK_FAILED


def run_bound(args: argparse.Namespace, settings: Settings) -> int:
    """Free-energy lower bound at one state."""
    point = _state(args)
    value, budget = fe.lower_bound(point, settings.budget_constants(), args.range_error)
    if args.json:
        _emit({"f_lower": value, "f0": ig.f0(point), "budget": budget.to_dict()}, args.out)
        return sweep.EXIT_OK

    sys.stdout.write(
        f"f_lower = {value:.17g}\n"
        f"f0 = {ig.f0(point):.17g}\n"
        f"correction = {fe.correction_term(point):.17g}\n"
        f"regime = {budget.regime.value}\n"
        f"o1_bound = {budget.o1_bound:.17g}\n"
    )
    return sweep.EXIT_OK


def run_budget(args: argparse.Namespace, settings: Settings) -> int:
    """Error budget at (sigma, beta rho)."""
    budget = fe.error_budget(
        args.sigma,
        args.beta_rho,
        settings.budget_constants(),
        log_sigma=args.log_sigma,
        range_error=args.range_error,
    )
    _emit(budget.to_dict(), args.out)
    return sweep.EXIT_OK


def run_toy_berezin_lieb(args: argparse.Namespace, settings: Settings) -> int:
    """Berezin-Lieb sides for the single-mode quartic toy."""
    space = qt.FockSpace(1, args.nmax)
    report = qt.berezin_lieb_report(
        space, args.omega, args.g, args.beta, settings.radial_nodes, settings.phase_nodes
    )
    passed = report.margin >= -sweep.BEREZIN_LIEB_TOLERANCE
    _emit(
        {
            "lhs": report.lhs,
            "rhs": report.rhs,
            "error_bar": report.error_bar,
            "tail_mass": report.tail_mass,
            "margin": report.margin,
            "certified": passed,
        },
        args.out,
    )
    return sweep.EXIT_OK if passed else sweep.EXIT_CHECK_FAILED


def run_sweep(args: argparse.Namespace, settings: Settings) -> int:
    """Batch sweep from a config file."""
    config = load_sweep_config(args.config_file, output=args.out)
    return sweep.run_sweep(config, workers=args.workers)


def _add_potential_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--potential", help="potential JSON file")
    group.add_argument("--hard-disk", type=float, metavar="D", help="hard disk of radius D")
    group.add_argument(
        "--soft-disk", type=float, nargs=2, metavar=("V0", "D"), help="constant V0 on radius D"
    )


def _add_state_flags(parser: argparse.ArgumentParser, coupling_required: bool) -> None:
    parser.add_argument("--beta", type=float, required=True)
    parser.add_argument("--rho", type=float, required=True)
    group = parser.add_mutually_exclusive_group(required=coupling_required)
    group.add_argument("--a", type=float, help="scattering length")
    group.add_argument("--sigma", type=float, help="|ln a^2 rho|")
    group.add_argument("--log-sigma", type=float, help="ln sigma")


def build_parser() -> argparse.ArgumentParser:
    """Parser with every subcommand."""
    parser = argparse.ArgumentParser(prog="bose2d", description=__doc__)
    level = environment.get_log_level().lower()
    parser.add_argument(
        "--log-level",
        choices=VALID_LOG_LEVELS,
        default=level if level in VALID_LOG_LEVELS else DEFAULT_LOG_LEVEL,
    )
    parser.add_argument("--config", help="YAML or JSON file overriding config.yaml options")
    commands = parser.add_subparsers(dest="command", required=True)

    ideal = commands.add_parser("ideal", help="ideal-gas thermodynamics")
    _add_state_flags(ideal, coupling_required=False)
    ideal.set_defaults(handler=run_ideal)

    scatter = commands.add_parser("scatter", help="scattering length")
    _add_potential_flags(scatter)
    scatter.add_argument("--R", type=float, required=True)
    scatter.set_defaults(handler=run_scatter)

    surgery_parser = commands.add_parser("surgery", help="potential modifications")
    surgery_commands = surgery_parser.add_subparsers(dest="construction", required=True)
    cutoff = surgery_commands.add_parser("cutoff", help="truncate the range")
    _add_potential_flags(cutoff)
    cutoff.add_argument("--cutoff", type=float, required=True)
    cutoff.add_argument("--R", type=float, required=True)
    cutoff.add_argument("--sigma", type=float, help="report the relative range error")
    cutoff.set_defaults(handler=run_surgery_cutoff)
    cap = surgery_commands.add_parser("cap", help="cap the plane integral")
    _add_potential_flags(cap)
    cap.add_argument("--phi", type=float, required=True)
    cap.add_argument("--delta", type=float)
    cap.add_argument("--balanced", action="store_true", help="delta = sqrt(ln(R/a)/phi)")
    cap.add_argument("--R", type=float, required=True)
    cap.set_defaults(handler=run_surgery_cap)

    verify = commands.add_parser("verify", help="operator inequality margins")
    verify_commands = verify.add_subparsers(dest="inequality", required=True)
    dyson = verify_commands.add_parser("dyson", help="Dyson operator inequality")
    _add_potential_flags(dyson)
    dyson.add_argument("--grid", type=int, default=64)
    dyson.add_argument("--L", type=float, required=True)
    dyson.add_argument("--R", type=float, required=True)
    dyson.add_argument("--s", type=float, required=True)
    dyson.add_argument("--eps", type=float, required=True)
    dyson.add_argument("--R0", type=float, help="hole radius, the potential range by default")
    dyson.add_argument("--a-tilde", type=float)
    dyson.add_argument("--centers", help="JSON list of [x, y] centers")
    dyson.add_argument("--restrict", action="store_true", help="use the separated subset J")
    dyson.set_defaults(handler=run_verify_dyson)
    holes = verify_commands.add_parser("holes", help="hole-filling inequality")
    holes.add_argument("--R0", type=float, required=True)
    holes.add_argument("--R", type=float, required=True)
    holes.add_argument("--ctilde", type=float)
    holes.add_argument("--grid", type=int, default=64)
    holes.add_argument("--L", type=float)
    holes.add_argument("--centers", help="JSON list of [x, y] centers")
    holes.set_defaults(handler=run_verify_holes)

    bound = commands.add_parser("bound", help="free-energy lower bound")
    _add_state_flags(bound, coupling_required=True)
    bound.add_argument("--range-error", type=float, default=0.0)
    bound.add_argument("--json", action="store_true")
    bound.set_defaults(handler=run_bound)

    budget = commands.add_parser("budget", help="error budget")
    coupling = budget.add_mutually_exclusive_group(required=True)
    coupling.add_argument("--sigma", type=float)
    coupling.add_argument("--log-sigma", type=float)
    budget.add_argument("--beta-rho", type=float, required=True)
    budget.add_argument("--range-error", type=float, default=0.0)
    budget.set_defaults(handler=run_budget)

    toy = commands.add_parser("toy", help="quantum toy models")
    toy_commands = toy.add_subparsers(dest="toy", required=True)
    berezin_lieb = toy_commands.add_parser("berezin-lieb", help="Berezin-Lieb inequality")
    berezin_lieb.add_argument("--omega", type=float, required=True)
    berezin_lieb.add_argument("--g", type=float, required=True)
    berezin_lieb.add_argument("--beta", type=float, required=True)
    berezin_lieb.add_argument("--nmax", type=int, default=qt.MAX_OCCUPATION)
    berezin_lieb.set_defaults(handler=run_toy_berezin_lieb)

    sweep_parser = commands.add_parser("sweep", help="batch sweep and verification suites")
    sweep_parser.add_argument("config_file")
    sweep_parser.add_argument("--workers", type=int)
    sweep_parser.set_defaults(handler=run_sweep)

    for subparser in [
        ideal,
        scatter,
        cutoff,
        cap,
        dyson,
        holes,
        bound,
        budget,
        berezin_lieb,
        sweep_parser,
    ]:
        subparser.add_argument("--out", help="output file (directory for sweep)")

    return parser


def main(argv: list[str] | None = None) -> int:
    """Run the command line.

    Args:
        argv: Arguments without the program name, sys.argv by default.

    Returns:
        0 when all checks pass, 1 for a failed numerical check, 2 for input or domain errors.
    """
    args = build_parser().parse_args(argv)
    level = getattr(logging, args.log_level.upper())
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)

    handler: Handler = args.handler
    try:
        settings = load_settings(args.config)
        return handler(args, settings)
    except NUMERICAL_ERRORS as e:
        logger.error("Numerical check failed: %s", str(e))
        return sweep.EXIT_CHECK_FAILED
    except INPUT_ERRORS as e:
        logger.error("Invalid input: %s", str(e))
        return sweep.EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
