"""
holevo-rgd Command Line
solve, sweep, gradcheck and generate sub-commands over JSON channel specs
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from holevo_rgd import config
from holevo_rgd.data.channel_specs import (
    build_channel,
    channel_to_spec,
    known_holevo_capacity,
    load_channel_spec,
    parse_channel_spec,
    substitute,
)
from holevo_rgd.data.generators import ChannelGenerator
from holevo_rgd.data.reports import build_report, sweep_csv, write_trace_csv
from holevo_rgd.errors import (
    ChannelValidationError,
    DimensionOverflowError,
    HolevoError,
    SpecError,
)
from holevo_rgd.optim.holevo import FD_TOL, gradient_check
from holevo_rgd.optim.manifold import SimplexGeometry, point_from_dict
from holevo_rgd.optim.solver import SolverConfig, additivity_gap, rgd, sweep
from holevo_rgd.quantum.channel import smooth

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_SOLVER_ERROR = 3

INPUT_ERRORS = (
    SpecError,
    ChannelValidationError,
    DimensionOverflowError,
    json.JSONDecodeError,
    ValidationError,
    OSError,
)

# CLI flag -> SolverConfig field
CONFIG_FLAGS = {
    'seed': 'seed',
    'restarts': 'restarts',
    'tol': 'grad_tol',
    'delta': 'delta',
    'ensemble_size': 'ensemble_size',
    'simplex_geometry': 'simplex_geometry',
    'max_iters': 'max_iters',
    'n_jobs': 'n_jobs',
}


def configure_logging(level: Optional[str] = None):
    logging.basicConfig(
        level=(level or config.LOG_LEVEL).upper(),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )


def solver_config(args: argparse.Namespace, overrides: Optional[Dict] = None) -> SolverConfig:
    """Spec-file overrides first, then any flag given on the command line"""
    values = dict(overrides or {})
    for flag, name in CONFIG_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[name] = value
    return SolverConfig(**values)


def parse_grid(text: str) -> List[float]:
    """
    Parse a grid as "start:step:stop" (stop included) or a comma separated list

    An empty string gives an empty grid.
    """
    text = text.strip()
    if not text:
        return []
    try:
        if ':' in text:
            start, step, stop = (float(part) for part in text.split(':'))
            if step <= 0:
                raise SpecError(f"grid step must be positive, got {step}")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 12) for i in range(max(count, 0))]
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError as exc:
        raise SpecError(f"cannot parse grid {text!r}: {exc}") from exc


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text, encoding='utf-8')
    else:
        sys.stdout.write(text)


def cmd_solve(args: argparse.Namespace) -> int:
    document, overrides = load_channel_spec(args.spec)
    spec = parse_channel_spec(document)
    channel = build_channel(spec)
    cfg = solver_config(args, overrides)

    initial = None
    if args.init:
        try:
            initial = [point_from_dict(json.loads(Path(args.init).read_text(encoding='utf-8')))]
        except (KeyError, TypeError) as exc:
            raise SpecError(f"malformed initial point {args.init}: {exc}") from exc

    start = time.perf_counter()
    additivity = None
    if args.copies > 1:
        additivity = additivity_gap(channel, args.copies, cfg, initial_points=initial)
        result = additivity.single
        logger.info("additivity gap over %d copies: %.10f", args.copies, additivity.gap)
    else:
        result = rgd(channel, cfg, initial_points=initial)
    seconds = time.perf_counter() - start

    report = build_report(channel, cfg, result, seconds,
                          reference_chi=known_holevo_capacity(spec), additivity=additivity)
    if args.trace:
        write_trace_csv(result, args.trace)
    _emit(report.model_dump_json(indent=2) + '\n', args.out)
    logger.info("%s: chi >= %.8f (%.2f s)", channel.label, result.chi_lower_bound, seconds)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    template, overrides = load_channel_spec(args.spec)
    cfg = solver_config(args, overrides)
    grid = parse_grid(args.grid)
    # fail fast on a template without the placeholder
    substitute(template, args.param, 0.0)

    def family(value: float):
        return build_channel(substitute(template, args.param, value))

    rows = sweep(family, grid, cfg)
    _emit(sweep_csv(rows), args.out)
    failed = [row for row in rows if row.status != 'ok']
    return EXIT_SOLVER_ERROR if failed else EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    document, overrides = load_channel_spec(args.spec)
    cfg = solver_config(args, overrides)
    channel = smooth(build_channel(document), cfg.delta)

    geometries = [SimplexGeometry(g) for g in (args.geometries or [SimplexGeometry.EUCLIDEAN, SimplexGeometry.FISHER])]
    records = []
    for geometry in geometries:
        errors = gradient_check(channel, trials=args.trials, directions=args.directions,
                                simplex_geometry=geometry, seed=cfg.seed,
                                ensemble_size=cfg.ensemble_size)
        for trial, error in enumerate(errors):
            if geometry is SimplexGeometry.PAPER_Q:
                status = 'info'
            else:
                status = 'pass' if error <= args.tolerance else 'fail'
            records.append({'geometry': geometry.value, 'trial': trial,
                            'max_rel_error': error, 'status': status})

    table = pd.DataFrame.from_records(records, columns=['geometry', 'trial', 'max_rel_error', 'status'])
    _emit(table.to_csv(index=False, float_format='%.3e', lineterminator='\n'), args.out)
    return EXIT_CHECK_FAILED if (table['status'] == 'fail').any() else EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    if min(args.d, args.letters, args.d_out) < 1:
        raise SpecError("dimensions must be positive")
    generator = ChannelGenerator(seed=args.seed if args.seed is not None else config.SEED)
    if args.kind == 'eb':
        channel = generator.entanglement_breaking(args.d)
    else:
        channel = generator.cq(args.letters, args.d_out)
    _emit(json.dumps(channel_to_spec(channel)) + '\n', args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='base seed; restart r uses seed + r')
    common.add_argument('--restarts', type=int, help='number of random restarts')
    common.add_argument('--tol', type=float, help='gradient-norm stopping tolerance')
    common.add_argument('--delta', type=float, help='smoothing weight of the depolarizing admixture')
    common.add_argument('--ensemble-size', type=int, help='ensemble cardinality (default d_in^2)')
    common.add_argument('--simplex-geometry', choices=[g.value for g in SimplexGeometry])
    common.add_argument('--max-iters', type=int, help='iteration cap per restart')
    common.add_argument('--n-jobs', type=int, help='parallel restarts (joblib n_jobs)')
    common.add_argument('--out', help='write output here instead of stdout')
    common.add_argument('--log-level', help='logging level (default from HOLEVO_LOG_LEVEL)')

    parser = argparse.ArgumentParser(
        prog='holevo-rgd',
        description='Lower bounds on the Holevo capacity of quantum channels by Riemannian gradient descent',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('solve', parents=[common], help='solve one channel and print a JSON report')
    p.add_argument('spec', help='channel spec JSON file')
    p.add_argument('--trace', help='write the convergence trace of the best restart as CSV')
    p.add_argument('--init', help='JSON ensemble point to warm-start from')
    p.add_argument('--copies', type=int, default=1, help='also solve the k-fold tensor power')
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser('sweep', parents=[common], help='solve a channel family over a parameter grid')
    p.add_argument('spec', help='channel spec template with "$param" placeholders')
    p.add_argument('--param', required=True, help='placeholder name, e.g. lambda')
    p.add_argument('--grid', required=True, help='"start:step:stop" or "v1,v2,..."')
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser('gradcheck', parents=[common], help='finite-difference check of the gradient')
    p.add_argument('spec', help='channel spec JSON file')
    p.add_argument('--trials', type=int, default=20)
    p.add_argument('--directions', type=int, default=5)
    p.add_argument('--tolerance', type=float, default=FD_TOL)
    p.add_argument('--geometries', nargs='+', choices=[g.value for g in SimplexGeometry])
    p.set_defaults(handler=cmd_gradcheck)

    p = sub.add_parser('generate', parents=[common], help='random channel spec')
    p.add_argument('kind', choices=['eb', 'cq'])
    p.add_argument('--d', type=int, default=2, help='dimension of an eb channel')
    p.add_argument('--letters', type=int, default=2, help='alphabet size of a cq channel')
    p.add_argument('--d-out', type=int, default=2, help='output dimension of a cq channel')
    p.set_defaults(handler=cmd_generate)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except INPUT_ERRORS as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except HolevoError as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER_ERROR


if __name__ == '__main__':
    sys.exit(main())
