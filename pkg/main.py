#!/usr/bin/env python3
"""
Uncertain-lambda Heston Pricer - Main Entry Point with Auto-Discovery

Command-line interface for the best-case/worst-case Heston pricer: runs the
case-study experiments, prices single points against the reference
oracles and exposes the test modules as commands.

Usage:
    python main.py [command] [options]

Commands:
    run         Run the experiment described by a JSON configuration
    oracle      Compare the PDE price at one point with the reference pricers
    status      Show configuration and discovered test commands

Auto-discovered test commands are dynamically loaded from the test/ directory.

Errors are reported on stderr as one line "error: <ExceptionClass>: <message>"
with exit status 1.
"""

import argparse
import importlib.util
import json
import logging
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.absolute()
sys.path.insert(0, str(project_root))


def setup_logging(verbose: bool = False):
    """Raise the root logger to DEBUG when verbose output is requested"""
    from config.settings import CONFIG
    level = logging.DEBUG if verbose else getattr(logging, str(CONFIG['LOG_LEVEL']).upper(), logging.INFO)
    logging.getLogger().setLevel(level)


def report_error(exc):
    """Print the one-line machine-parsable error message"""
    message = str(exc).replace('\n', ' ')
    print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
    return 1


def discover_test_modules():
    """
    Automatically discover test modules from the test/ directory.

    Scans for *_test.py files and looks for functions matching run_*_test() pattern.

    Returns:
        dict: Dictionary mapping command names to test module info
    """
    test_commands = {}
    test_dir = project_root / 'test'

    if not test_dir.exists():
        return test_commands

    for test_file in sorted(test_dir.glob('*_test.py')):
        try:
            module_name = f"test.{test_file.stem}"
            spec = importlib.util.spec_from_file_location(module_name, test_file)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)

            for attr_name in dir(module):
                if attr_name.startswith('run_') and attr_name.endswith('_test'):
                    func = getattr(module, attr_name)
                    if callable(func):
                        # run_mesh_test -> test-mesh
                        cmd_name = 'test-' + attr_name[len('run_'):-len('_test')].replace('_', '-')
                        help_text = func.__doc__.strip().split('\n')[0] if func.__doc__ else f"Run {attr_name}"
                        test_commands[cmd_name] = {
                            'function': func,
                            'module': module_name,
                            'file': str(test_file),
                            'help': help_text
                        }
        except Exception as e:
            print(f"Warning: Could not load test module {test_file}: {e}", file=sys.stderr)

    return test_commands


def _load_config(args):
    from config.experiment import ExperimentConfig
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    return cfg


def run_experiment_command(args):
    """Run the configured experiment and write its output files"""
    try:
        from core.application import run_experiment
        cfg = _load_config(args).with_overrides(refinements=args.refinements, steps=args.steps)
        result = run_experiment(cfg, args.out, dump=args.dump)
        for path in result.files:
            print(path)
        return 0
    except Exception as e:
        logging.getLogger('hjbpricer.main').debug("run failed", exc_info=True)
        return report_error(e)


def run_oracle_command(args):
    """Print reference prices at one point as a JSON line"""
    try:
        from core.application import run_oracle
        from core.errors import ValidationError
        try:
            S0, v0 = (float(x) for x in args.point.split(','))
        except ValueError:
            raise ValidationError(f"point must read S,v, got '{args.point}'")
        cfg = _load_config(args)
        print(json.dumps(run_oracle(cfg, args.lam, S0, v0), sort_keys=True))
        return 0
    except Exception as e:
        logging.getLogger('hjbpricer.main').debug("oracle failed", exc_info=True)
        return report_error(e)


def show_system_status(args):
    """Show configuration and discovered tests"""
    print("Uncertain-lambda Heston Pricer Status")
    print("=" * 70)

    try:
        from config.settings import CONFIG

        print("\nCurrent Configuration:")
        for key in sorted(CONFIG):
            print(f"  {key}: {CONFIG[key]}")

        print("\nProject Structure:")
        for name in ('config', 'core', 'oracle', 'report', 'test', 'logs'):
            path = project_root / name
            status = "OK" if path.exists() else "MISSING"
            print(f"  {status}: {name}/ directory")

        test_commands = discover_test_modules()
        print(f"\nAuto-Discovered Tests ({len(test_commands)} found):")
        if test_commands:
            for cmd_name, cmd_info in sorted(test_commands.items()):
                print(f"  {cmd_name}: {cmd_info['help']}")
        else:
            print("  No test modules discovered")
        return 0

    except Exception as e:
        return report_error(e)


def create_dynamic_test_command(test_info):
    """Create a dynamic command function for a discovered test"""
    def test_command(args):
        try:
            return test_info['function']()
        except Exception as e:
            return report_error(e)
    return test_command


def build_parser(test_commands):
    parser = argparse.ArgumentParser(
        prog='price',
        description="Best-case and worst-case Heston prices under an uncertain market price of volatility risk",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )

    parser.add_argument('-v', '--verbose', action='store_true',
                        help='Enable verbose logging')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    run_parser = subparsers.add_parser('run', help='Run the experiment described by a configuration file')
    run_parser.add_argument('--config', help='JSON experiment configuration (case study when omitted)')
    run_parser.add_argument('--out', required=True, help='Output directory')
    run_parser.add_argument('--refinements', type=int, help='Uniform mesh refinements')
    run_parser.add_argument('--steps', type=int, help='Implicit Euler time steps')
    run_parser.add_argument('--dump', action='store_true',
                            help='Also write the mesh and matrices to <out>/debug')
    run_parser.set_defaults(func=run_experiment_command)

    oracle_parser = subparsers.add_parser('oracle', help='Compare with Monte Carlo and Fourier prices')
    oracle_parser.add_argument('--config', help='JSON experiment configuration (case study when omitted)')
    oracle_parser.add_argument('--lambda', dest='lam', type=float, required=True, help='Fixed control')
    oracle_parser.add_argument('--point', required=True, help='Evaluation point as S,v')
    oracle_parser.set_defaults(func=run_oracle_command)

    status_parser = subparsers.add_parser('status', help='Show configuration and discovered tests')
    status_parser.set_defaults(func=show_system_status)

    for cmd_name, test_info in test_commands.items():
        test_parser = subparsers.add_parser(cmd_name, help=test_info['help'])
        test_parser.set_defaults(func=create_dynamic_test_command(test_info))

    return parser


def main(argv=None):
    """Main CLI entry point with auto-discovery"""
    test_commands = discover_test_modules()
    parser = build_parser(test_commands)
    args = parser.parse_args(argv)

    setup_logging(args.verbose)

    if not args.command:
        parser.print_help()
        if test_commands:
            print("\nAuto-discovered Test Commands:")
            for cmd_name, test_info in sorted(test_commands.items()):
                print(f"  {cmd_name:<20} {test_info['help']}")
        return 1

    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("\nOperation cancelled by user", file=sys.stderr)
        return 1
    except Exception as e:
        return report_error(e)


if __name__ == '__main__':
    sys.exit(main())
