import sys
import os
import argparse
import logging

sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from tabulate import tabulate

from src.domain.error_codes import EXIT_SUCCESS, ErrorCode, ErrorResponse
from src.service.config import OUTPUT_FORMATS, load_config, resolve_workers
from src.service.errors import SimulationError
from src.service.harness_service import (
    CommandReport, cmd_closure, cmd_evolve, cmd_fig, cmd_rate, cmd_steady, cmd_sweep, cmd_table,
)
from src.service.summary_service import render_csv, render_json
from src.service.validators.input_validator import InputValidationError

logger = logging.getLogger('open_rabi')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default=None,
                        help='INI file overriding the shipped defaults')
    common.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                        help='Override one config value (section.key=value or key=value); repeatable')
    common.add_argument('--out', type=str, default=None,
                        help='Result file path (stdout when omitted)')
    common.add_argument('--format', choices=OUTPUT_FORMATS, default=None,
                        help='Result format (defaults to [report] format)')
    common.add_argument('--workers', type=int, default=None,
                        help='Worker processes for multi-point commands')
    common.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help='Logging level on stderr')

    parser = argparse.ArgumentParser(prog='open-rabi',
                                     description='Open Rabi model: master-equation runs, closed-form checks and reference tables')
    sub = parser.add_subparsers(dest='command', required=True)

    rate = sub.add_parser('rate', parents=[common], help='Late-time photon rate under pure dephasing')
    rate.add_argument('--sweep', action='store_true', help='Vary the [sweep] parameter')
    sub.add_parser('steady', parents=[common], help='Stationary N and S with bounds')
    sub.add_parser('evolve', parents=[common], help='Raw observable trace of one run')
    table = sub.add_parser('table', parents=[common], help='Recompute a published stationary table')
    table.add_argument('which', type=int, choices=[1, 2])
    fig = sub.add_parser('fig', parents=[common], help='Sweep data of a closure/rate figure')
    fig.add_argument('which', type=int, choices=[1, 2])
    sub.add_parser('sweep', parents=[common], help='One-parameter sweep with the [sweep] probe')
    sub.add_parser('closure', parents=[common], help='Full vs closed moment-system photon rates')
    return parser


def run_command(args, config) -> CommandReport:
    if args.command == 'rate':
        return cmd_rate(config, resolve_workers(args.workers), sweep=args.sweep)
    if args.command == 'steady':
        return cmd_steady(config)
    if args.command == 'evolve':
        return cmd_evolve(config)
    if args.command == 'table':
        return cmd_table(config, args.which, resolve_workers(args.workers))
    if args.command == 'fig':
        return cmd_fig(config, args.which, resolve_workers(args.workers))
    if args.command == 'sweep':
        return cmd_sweep(config, resolve_workers(args.workers))
    return cmd_closure(config)


def display_summary(report: CommandReport) -> None:
    table_data = []
    for key, value in report.summary.items():
        if isinstance(value, dict):
            value = ', '.join(f"{k}={v:.4g}" for k, v in value.items())
        elif isinstance(value, float):
            value = f"{value:.6g}"
        table_data.append([key, value])
    print(f"\n{report.command} summary:", file=sys.stderr)
    print(tabulate(table_data, headers=["Quantity", "Value"], tablefmt="grid"), file=sys.stderr)


def write_output(report: CommandReport, output_format: str, out_path) -> None:
    if output_format == 'json':
        text = render_json(report.command, report.frame, report.summary)
    else:
        text = render_csv(report.frame)
    if out_path:
        with open(out_path, 'w', newline='') as handle:
            handle.write(text)
        logger.info(f"Wrote {len(report.frame)} row(s) to {out_path}")
    else:
        sys.stdout.write(text)


def fail(response: ErrorResponse) -> int:
    print(response.to_json(), file=sys.stderr)
    return response.exit_code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    try:
        config = load_config(args.config, args.overrides)
        report = run_command(args, config)
        write_output(report, args.format or config.output_format, args.out)
        display_summary(report)
    except InputValidationError as e:
        logger.error(f"{args.command} rejected: {e.message}")
        return fail(e.to_response())
    except SimulationError as e:
        logger.error(f"{args.command} failed: {e.message}")
        return fail(e.to_response())
    except Exception as e:
        logger.exception(f"{args.command}: unexpected error")
        return fail(ErrorResponse(ErrorCode.INTERNAL_ERROR, {"type": type(e).__name__}, str(e)))

    violations = report.bound_violations
    if violations:
        logger.warning(f"{violations} lower-bound violation(s) detected")
        if config.fail_on_bound_violation:
            return fail(ErrorResponse(ErrorCode.BOUND_VIOLATION, {"violations": violations},
                                      f"{violations} lower-bound violation(s)"))
    return EXIT_SUCCESS


if __name__ == '__main__':
    sys.exit(main())
