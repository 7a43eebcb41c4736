#!/usr/bin/env python
"""
pyferry: simulate and analyse robotic message ferrying.
"""
import logging
from typing import List, Optional

__all__ = [
    "run",
]

logger = logging.getLogger(__name__)

_LOG_LEVELS = [logging.WARNING, logging.INFO, logging.DEBUG]


def _parser():
    import argparse

    parser = argparse.ArgumentParser(
        prog="pyferry", description="Simulate and analyse robotic message ferrying.")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="Log progress (-v) or every epoch (-vv).")
    commands = parser.add_subparsers(dest="command", metavar="command")

    def experiment_command(name: str, summary: str):
        sub = commands.add_parser(name, help=summary)
        sub.add_argument("config", help="JSON experiment configuration.")
        sub.add_argument("-o", "--output", help="Result CSV (overrides output_path).")
        sub.add_argument("--horizon", type=int, help="Simulated epochs (overrides horizon_epochs).")
        sub.add_argument("--seed", type=int, help="Seed for random robot placement.")
        sub.add_argument("--workers", type=int, help="Processes for sweep points.")
        return sub

    experiment_command("run", "Simulate the configured network once.")
    experiment_command("sweep", "Simulate every point of the configured sweep.")
    boundary = experiment_command("boundary", "Bisect the arrival-rate scale for the stability limit.")
    boundary.add_argument("--iterations", type=int, default=10)
    boundary.add_argument("--upper", type=float, help="Upper arrival-rate scale (unstable).")

    config = commands.add_parser("config", help="Print the resolved configuration.")
    config.add_argument("config")
    config.add_argument("--seed", type=int)

    table = commands.add_parser("delay-table", help="Closed-form vs. simulated single-flow delay.")
    table.add_argument("--distance", type=float, default=10.0)
    table.add_argument("--velocities", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    table.add_argument("--epoch-lens", type=float, nargs="+", default=[10.0, 20.0, 40.0])
    rates = table.add_mutually_exclusive_group()
    rates.add_argument("--lambda-fractions", type=float, nargs="+",
                       help="Arrival rates as fractions of lambda_max (default 0.1 .. 0.9).")
    rates.add_argument("--lambdas", type=float, nargs="+", help="Absolute arrival rates.")
    _rate_model_arguments(table)
    table.add_argument("--horizon", type=int, default=1000)
    table.add_argument("--warmup", type=float, default=0.1)
    table.add_argument("--resolution", type=int, default=10, help="Simulation steps per time unit.")
    table.add_argument("-o", "--output", default="delay_table.csv")

    capacity = commands.add_parser("capacity", help="Capacity region queries.")
    capacity_commands = capacity.add_subparsers(dest="capacity_command", metavar="command")
    check = capacity_commands.add_parser("check", help="Membership of arrival rates in the capacity region.")
    check.add_argument("--lambda", dest="lam", type=float, nargs="+", required=True)
    check.add_argument("--config", help="Take N, r_max and the geometry from this configuration.")
    check.add_argument("--robots", type=int, help="Number of robots (default 2K).")
    check.add_argument("--r-max", type=float, default=1.0)
    check.add_argument("--velocity", type=float)
    check.add_argument("--epoch-len", type=float)
    check.add_argument("--d-max", type=float)

    program = capacity_commands.add_parser("program", help="Write a static schedule program.")
    program.add_argument("config", help="Configuration providing the network.")
    program.add_argument("--lambda", dest="lam", type=float, nargs="+",
                         help="Target rates (default: the configured flow rates).")
    program.add_argument("--denom-cap", type=int, default=1000)
    program.add_argument("--sink-slack", type=int, default=0)
    program.add_argument("--no-transit-compensation", action="store_true")
    program.add_argument("--seed", type=int)
    program.add_argument("-o", "--output", default="program.json")

    commands.add_parser("help", help="Show the summary of commands.")
    return parser


def _rate_model_arguments(parser) -> None:
    parser.add_argument("--r-max", type=float, default=1.0)
    parser.add_argument("--c", type=float, default=1.0)
    parser.add_argument("--eta", type=float, default=2.0)
    parser.add_argument("--rate-form", choices=["inverse_polynomial", "constant"], default="inverse_polynomial")


def _experiment(args):
    from pyferry.config import load_config

    cfg = load_config(args.config, seed=args.seed)
    return cfg.with_overrides(output_path=args.output, horizon_epochs=args.horizon, workers=args.workers)


def _run_command(args) -> None:
    from pyferry.console import print_results
    from pyferry.experiment import run_experiment

    cfg = _experiment(args)
    rows = run_experiment(cfg, sweep=False)
    print_results(rows, cfg.output_path)


def _sweep_command(args) -> None:
    from pyferry.console import print_results
    from pyferry.errors import ConfigError
    from pyferry.experiment import run_experiment

    cfg = _experiment(args)
    if cfg.sweep is None:
        raise ConfigError("sweep needs a 'sweep' block", path=args.config, field="sweep")
    rows = run_experiment(cfg)
    print_results(rows, cfg.output_path)


def _boundary_command(args) -> None:
    from pyferry.console import print_html
    from pyferry.experiment import find_stability_boundary

    cfg = _experiment(args)
    scale = find_stability_boundary(cfg, hi=args.upper, iterations=args.iterations)
    print_html("largest stable arrival-rate scale: <number>%s</number>", format(scale, ".6g"))
    for flow in cfg.network.flows:
        print_html("  flow <flow>%s</flow>: lambda <number>%s</number>", flow.id, format(flow.lam * scale, ".6g"))


def _config_command(args) -> None:
    from pyferry.config import load_config
    from pyferry.console import print_json

    print_json(load_config(args.config, seed=args.seed).to_dict())


def _delay_table_command(args) -> None:
    from pyferry.console import print_delay_rows
    from pyferry.experiment import DEFAULT_LAMBDA_FRACTIONS, emit_delay_oracle_table
    from pyferry.model import RateForm, RateModel

    rate_model = RateModel(r_max=args.r_max, c=args.c, eta=args.eta, form=RateForm(args.rate_form))
    rows = emit_delay_oracle_table(
        args.distance,
        args.velocities,
        args.epoch_lens,
        rate_model,
        path=args.output,
        lambdas=args.lambdas,
        lambda_fractions=args.lambda_fractions or DEFAULT_LAMBDA_FRACTIONS,
        horizon_epochs=args.horizon,
        warmup_fraction=args.warmup,
        resolution=args.resolution,
    )
    print_delay_rows(rows, args.output)


def _capacity_check_command(args) -> None:
    from pyferry.capacity import in_capacity_region, in_hull, in_inner_bound
    from pyferry.config import load_config
    from pyferry.console import print_membership
    from pyferry.errors import PreconditionError, ValidationError

    k = len(args.lam)
    if args.config is not None:
        spec = load_config(args.config).network
        if spec.n_flows != k:
            raise ValidationError("got %d arrival rates for %d flows" % (k, spec.n_flows))
        n, r_max = spec.n_robots, spec.rate_model.r_max
        geometry: Optional[tuple] = (spec.velocity, spec.epoch_len, spec.d_max)
    else:
        n = 2 * k if args.robots is None else args.robots
        r_max = args.r_max
        geometry = None
        if None not in (args.velocity, args.epoch_len, args.d_max):
            geometry = (args.velocity, args.epoch_len, args.d_max)

    in_bound = None
    if geometry is not None:
        try:
            in_bound = in_inner_bound(args.lam, *geometry, k, n, r_max)
        except PreconditionError as e:
            logger.info("%s", e)
    print_membership(args.lam, in_capacity_region(args.lam, k, n, r_max), in_hull(args.lam, k, n, r_max), in_bound)


def _capacity_program_command(args) -> None:
    from pyferry.capacity import oracle_program, save_program
    from pyferry.config import load_config
    from pyferry.console import print_html, print_json

    spec = load_config(args.config, seed=args.seed).network
    lam = spec.lambdas if args.lam is None else args.lam
    program = oracle_program(
        lam,
        spec,
        denom_cap=args.denom_cap,
        sink_slack_epochs=args.sink_slack,
        transit_compensation=not args.no_transit_compensation,
    )
    save_program(program, args.output)
    print_json(program.to_dict())
    print_html("wrote <path>%s</path> (period <number>%s</number> epochs)", args.output, program.period)


def run(argv: Optional[List[str]] = None) -> int:
    from pyferry.console import print_error
    from pyferry.errors import FerryError

    parser = _parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=_LOG_LEVELS[min(args.verbose, len(_LOG_LEVELS) - 1)],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    if args.command in (None, "help"):
        from pyferry.console import print_help

        print_help()
        return 0

    if args.command == "capacity":
        handlers = {"check": _capacity_check_command, "program": _capacity_program_command}
        handler = handlers.get(args.capacity_command)
        if handler is None:
            parser.error("capacity needs a command: check or program")
    else:
        handler = {
            "run": _run_command,
            "sweep": _sweep_command,
            "boundary": _boundary_command,
            "config": _config_command,
            "delay-table": _delay_table_command,
        }[args.command]

    try:
        handler(args)
    except FerryError as e:
        print_error(str(e))
        return 1
    return 0
