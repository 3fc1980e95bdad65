#!/usr/bin/env python3
"""
RDNA - Reliable edge network simulator and redundancy planner
Main entry point for experiments and the planning service.
"""

import argparse
import json
import logging
import math
import os
import sys

from app import configure_logging, create_app
from app.errors import ConfigError, RdnaError, SimulationError
from app.experiments import DEFAULT_NA, DEFAULT_RATIOS, DEFAULT_XI_GRID, fig4, fig5, fig6, load_preset, run_experiment
from app.planner import PLAN_N_TAP, ReliabilityTarget, plan_redundancy
from app.scenario import build_scenario
from app.scenario_config import parse_config
from app.simulator import RunOptions, latency_profile
from app.utils import parse_float_list, parse_int_list, parse_range, validate_seed
from config import Config

logger = logging.getLogger('app.cli')

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SIMULATION = 2


def seed_arg(text):
    value = int(text, 0) if text.lower().startswith(('0x', '0o', '0b')) else int(text)
    return validate_seed(value)


def resolve_seed(args, config=None):
    """RDNA_SEED, then --seed, then the config's seed, then Config.DEFAULT_SEED"""
    override = Config.seed_override()
    if override is not None:
        return validate_seed(override)
    if args.seed is not None:
        return args.seed
    if config is not None:
        return validate_seed(config.get('experiment', 'seed'))
    return Config.DEFAULT_SEED


def resolve_reps(args, config=None):
    reps = args.reps
    if reps is None:
        reps = config.get('experiment', 'reps') if config is not None else Config.DEFAULT_REPS
    if reps < 1:
        raise ValueError(f"--reps must be >= 1, got {reps}")
    return reps


def resolve_workers(args, config=None):
    workers = args.workers
    if workers is None:
        workers = config.get('experiment', 'parallelism') if config is not None else Config.DEFAULT_PARALLELISM
    if workers < 1:
        raise ValueError(f"--workers must be >= 1, got {workers}")
    return workers


def cmd_run(args):
    """Run one scenario and write summary.csv and replications.csv"""
    config = parse_config(args.scenario)
    overrides = {}
    for option, key in (('smart', 'smart'), ('d2d', 'd2d'), ('w', 'w'), ('na', 'n_a'), ('messages', 'messages')):
        value = getattr(args, option)
        if value is not None:
            overrides[key] = value
    config = config.with_overrides(**overrides)

    seed = resolve_seed(args, config)
    reps = resolve_reps(args, config)
    workers = resolve_workers(args, config)
    summary = run_experiment(config, args.out, seed, reps, workers, RunOptions.from_config(config))

    stat = summary['tau_total']
    print(f"tau_total={stat.mean:.9g} [{stat.ci_low:.9g}, {stat.ci_high:.9g}] over {reps} replications")
    print(f"Results written to {args.out}")
    return EXIT_OK


def cmd_fig4(args):
    """Latency against the number of TAPs, four variants"""
    config = load_preset(args.scenario)
    n_o_list = parse_int_list(args.n_o) if args.n_o else [config.get('scenario', 'n_o')]
    n_tap_list = parse_range(args.n_tap_range)
    if min(n_tap_list) < 1:
        raise ValueError("--n-tap-range values must be >= 1")
    fig4(config, args.out, n_o_list, n_tap_list, resolve_seed(args, config),
         resolve_reps(args, config), resolve_workers(args, config))
    print(f"Results written to {args.out}")
    return EXIT_OK


def cmd_fig5(args):
    """Power against the number of TAPs"""
    config = load_preset(args.scenario)
    n_o_list = parse_int_list(args.n_o) if args.n_o else [config.get('scenario', 'n_o')]
    n_tap_list = parse_range(args.n_tap_range)
    if min(n_tap_list) < 1:
        raise ValueError("--n-tap-range values must be >= 1")
    fig5(config, args.out, n_o_list, n_tap_list, resolve_seed(args, config),
         resolve_reps(args, config), resolve_workers(args, config))
    print(f"Results written to {args.out}")
    return EXIT_OK


def cmd_fig6(args):
    """Minimal channel count over the reliability grid"""
    fig6(
        args.out,
        ratios=parse_float_list(args.ratios),
        n_a_list=parse_int_list(args.na),
        xi_grid=parse_float_list(args.xi_grid),
        smart=args.smart,
        monitored_channels=args.monitored_channels,
        w_max=args.w_max,
    )
    print(f"Results written to {args.out}")
    return EXIT_OK


def cmd_plan(args):
    """Print a redundancy plan as JSON"""
    target = ReliabilityTarget(xi_min=args.xi_min, tau_max=args.tau_max)
    tau_of_w = None
    w_max = args.w_max
    n_tap = args.n_tap
    if args.scenario:
        config = parse_config(args.scenario)
        scenario = build_scenario(config)
        w_max = min(w_max, scenario.n_channels)
        if n_tap is None:
            n_tap = scenario.n_tap
        tau_of_w = latency_profile(scenario, RunOptions.from_config(config), range(1, w_max + 1),
                                   resolve_reps(args, config), resolve_seed(args, config),
                                   resolve_workers(args, config))
    plan = plan_redundancy(args.lambda_p, args.mu_s, target, tau_of_w=tau_of_w,
                           n_tap=PLAN_N_TAP if n_tap is None else n_tap, w_max=w_max)
    print(json.dumps(plan.to_dict(), sort_keys=True))
    return EXIT_OK


def cmd_serve(args):
    """Start the planning service"""
    app = create_app()

    print("=" * 60)
    print("RDNA - Redundancy Planning Service")
    print("=" * 60)
    print(f"Server: http://{args.host}:{args.port}")
    print("=" * 60)
    print("\nPress Ctrl+C to stop the server\n")

    app.run(host=args.host, port=args.port, debug=False, threaded=True)
    return EXIT_OK


class CliParser(argparse.ArgumentParser):
    """Argument errors become one `error[usage]` line instead of a usage dump"""

    def error(self, message):
        raise ValueError(message)


def build_parser():
    parser = CliParser(prog='run.py', description='Edge network simulator and redundancy planner')
    parser.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING or ERROR')
    sub = parser.add_subparsers(dest='command', required=True)

    def batch_options(p, scenario_default=None):
        if scenario_default is None:
            p.add_argument('--scenario', required=True, help='Scenario .cfg file')
        else:
            p.add_argument('--scenario', default=scenario_default, help='Preset name or .cfg file')
        p.add_argument('--seed', type=seed_arg, default=None, help='Base seed (RDNA_SEED wins when set)')
        p.add_argument('--reps', type=int, default=None, help='Replications per point')
        p.add_argument('--workers', type=int, default=None, help='Worker threads')
        p.add_argument('--out', default=Config.DEFAULT_OUTPUT_DIR, help='Output directory')

    p = sub.add_parser('run', help='Run one scenario')
    batch_options(p)
    p.add_argument('--smart', action=argparse.BooleanOptionalAction, default=None)
    p.add_argument('--d2d', action=argparse.BooleanOptionalAction, default=None)
    p.add_argument('--w', type=int, default=None, help='Channels per object')
    p.add_argument('--na', type=int, default=None, help='TAPs per object')
    p.add_argument('--messages', type=int, default=None, help='Messages per replication')
    p.set_defaults(handler=cmd_run)

    for name, handler, preset in (('fig4', cmd_fig4, 'fig4'), ('fig5', cmd_fig5, 'fig5')):
        p = sub.add_parser(name, help=handler.__doc__)
        batch_options(p, scenario_default=preset)
        p.add_argument('--n-o', default=None, help='Comma list of object counts')
        p.add_argument('--n-tap-range', default='2..20', help='A..B or comma list')
        p.set_defaults(handler=handler)

    p = sub.add_parser('fig6', help=cmd_fig6.__doc__)
    p.add_argument('--out', default=Config.DEFAULT_OUTPUT_DIR, help='Output directory')
    p.add_argument('--ratios', default=','.join(str(r) for r in DEFAULT_RATIOS))
    p.add_argument('--na', default=','.join(str(n) for n in DEFAULT_NA))
    p.add_argument('--xi-grid', default=','.join(str(x) for x in DEFAULT_XI_GRID))
    p.add_argument('--smart', action='store_true')
    p.add_argument('--monitored-channels', type=int, default=None,
                   help='Channels the monitor watches (default: ideal knowledge)')
    p.add_argument('--w-max', type=int, default=Config.SURFACE_W_MAX)
    p.set_defaults(handler=cmd_fig6)

    p = sub.add_parser('plan', help=cmd_plan.__doc__)
    p.add_argument('--lambda-p', type=float, required=True)
    p.add_argument('--mu-s', type=float, default=6.0)
    p.add_argument('--xi-min', type=float, required=True)
    p.add_argument('--tau-max', type=float, default=math.inf)
    p.add_argument('--w-max', type=int, default=Config.SURFACE_W_MAX)
    p.add_argument('--n-tap', type=int, default=None, help='TAPs an object can reach (default: the scenario n_tap, else 10)')
    p.add_argument('--scenario', default=None, help='Scenario .cfg used to measure tau(w)')
    p.add_argument('--seed', type=seed_arg, default=None)
    p.add_argument('--reps', type=int, default=None)
    p.add_argument('--workers', type=int, default=None)
    p.set_defaults(handler=cmd_plan)

    p = sub.add_parser('serve', help=cmd_serve.__doc__)
    p.add_argument('--host', default=Config.BIND_HOST)
    p.add_argument('--port', type=int, default=Config.BIND_PORT)
    p.set_defaults(handler=cmd_serve)
    return parser


def fail(kind, error, code):
    message = ' '.join(str(error).split())
    print(f"error[{kind}]: {message}", file=sys.stderr)
    return code


def main(argv=None):
    """Main entry point; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ValueError as e:
        return fail('usage', e, EXIT_INVALID)
    except SystemExit as e:
        return EXIT_OK if not e.code else EXIT_INVALID

    try:
        configure_logging(args.log_level)
        if getattr(args, 'out', None):
            os.makedirs(args.out, exist_ok=True)
        return args.handler(args)
    except ConfigError as e:
        return fail('config', e, EXIT_INVALID)
    except SimulationError as e:
        return fail('simulation', e, EXIT_SIMULATION)
    except ValueError as e:
        return fail('validation', e, EXIT_INVALID)
    except RdnaError as e:
        return fail('simulation', e, EXIT_SIMULATION)
    except OSError as e:
        return fail('io', e, EXIT_INVALID)


if __name__ == '__main__':
    sys.exit(main())
