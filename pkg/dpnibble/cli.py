"""
Command-line front end: ``python -m dpnibble <command> ...``.

Commands:
- schedule: dump the parameter recursion as CSV and check its invariants.
- color: run the full pipeline on a cover file and write the verified coloring.
- stats: Monte-Carlo statistics of one round against the analytic references.
- verify: re-check a coloring file against a cover file.
- freeness: check a graph, or a cover graph, for K_{1,s,t} subgraphs.
- gen: write generated graphs and covers.

Every failure maps to an exit code through the handlers registered with ``errorhandler``; see
``dpnibble.error`` for the code table.
"""

import argparse
import contextlib
import logging
import sys
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

from . import __version__, configure_logging
from .cover import coloring_conflicts, identity_cover, ownership_violation, random_cover, twisted_cycle_cover
from .error import (ColoringError, MalformedInputError, ScheduleDivergenceError, UsageError, VerificationError,
                    exit_code_for)
from .formats import (read_coloring, read_cover, read_edge_list, write_coloring, write_cover, write_edge_list,
                      write_pipeline_summary_csv, write_round_stats_csv, write_schedule_csv, write_statistics_csv)
from .graph import contains_K1st, gen_complete_tripartite, gen_random_regular
from .nibble import RoundParams, round_hypothesis_warnings, round_statistics, single_round_report
from .schedule import build_schedule, run_pipeline, schedule_hypothesis_warnings, verify_schedule_invariants
from .settings import Settings

logger = logging.getLogger(__name__)

GENERATORS = ('regular', 'tripartite', 'identity-cover', 'twisted-cycle', 'random-cover')
RANDOMIZED = {'color', 'stats'}

# Exception type -> handler returning the exit code. Looked up along the exception's MRO.
_error_handlers: Dict[type, Callable[[BaseException], int]] = {}


def errorhandler(exc_type: type):
    """Registers the decorated function as the handler for exc_type and its subclasses."""
    def decorator(fn):
        _error_handlers[exc_type] = fn
        return fn
    return decorator


@errorhandler(ScheduleDivergenceError)
def handle_schedule_divergence(error: ScheduleDivergenceError) -> int:
    logger.error(str(error))
    if error.last_row is not None:
        logger.error(f"last row: {error.last_row}")
    return error.exit_code


@errorhandler(VerificationError)
def handle_verification_error(error: VerificationError) -> int:
    logger.error(str(error))
    if error.edge is not None:
        print(f"FAIL conflicting cover edge {error.edge[0]} {error.edge[1]}")
    else:
        print(f"FAIL {error.message}")
    return error.exit_code


@errorhandler(ColoringError)
def handle_coloring_error(error: ColoringError) -> int:
    logger.error(str(error))
    return error.exit_code


@errorhandler(OSError)
def handle_os_error(error: OSError) -> int:
    logger.error(f"{exit_code_for(error)}: cannot read {error.filename or 'input'}: {error.strerror or error}")
    return MalformedInputError.default_exit_code


@errorhandler(Exception)
def handle_exception(error: Exception) -> int:
    logger.exception(f"unexpected {type(error).__name__}: {error}")
    return exit_code_for(error)


def handle_error(error: BaseException) -> int:
    # Most specific registered handler wins.
    for cls in type(error).__mro__:
        if cls in _error_handlers:
            return _error_handlers[cls](error)
    return exit_code_for(error)


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors raise UsageError (exit 64) instead of exiting with 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _twists(text: str) -> List[int]:
    return [int(x) for x in text.split(',') if x.strip()]


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog='dpnibble', description='DP-coloring by the wasteful nibble.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--config', help='Python config file overriding instance/config.py')
    parser.add_argument('--log-level', help='DEBUG, INFO, WARNING or ERROR')
    parser.add_argument('--log-file', help='write logs here instead of stderr')
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    p = commands.add_parser('schedule', help='dump the parameter schedule')
    p.add_argument('--d', type=float, required=True)
    p.add_argument('--eps', type=float, required=True)
    p.add_argument('--t', type=_positive_int, default=1)
    p.add_argument('--eta', type=float, help='override kappa/log d')
    p.add_argument('--a', type=float, default=0.01, help='exponent constant for ell_i >= d^(a eps)')
    p.add_argument('--max-iter', type=_positive_int)
    p.add_argument('--output', default='-')

    p = commands.add_parser('color', help='color a cover with the full pipeline')
    p.add_argument('--cover', required=True)
    p.add_argument('--output', default='-', help='coloring file')
    p.add_argument('--summary', help='per-round summary CSV')
    p.add_argument('--eps', type=float, required=True)
    p.add_argument('--s', type=_positive_int, default=1)
    p.add_argument('--t', type=_positive_int, default=1)
    p.add_argument('--seed', type=int)
    p.add_argument('--eta', type=float)
    p.add_argument('--max-attempts', type=_positive_int)
    p.add_argument('--max-rounds', type=int)
    p.add_argument('--max-resamples', type=_positive_int)

    p = commands.add_parser('stats', help='Monte-Carlo statistics of one round')
    p.add_argument('--cover', required=True)
    p.add_argument('--output', default='-')
    p.add_argument('--round-csv', help="also write one round's per-vertex stats here")
    p.add_argument('--d', type=float, help='degree bound, default max(Delta(H), 1)')
    p.add_argument('--ell', type=float, help='nominal list size, default the longest list')
    p.add_argument('--eta', type=float, required=True)
    p.add_argument('--eps', type=float, default=0.0)
    p.add_argument('--s', type=_positive_int, default=1)
    p.add_argument('--t', type=_positive_int, default=1)
    p.add_argument('--trials', type=int, required=True)
    p.add_argument('--seed', type=int)
    p.add_argument('--threads', type=_positive_int, default=1)

    p = commands.add_parser('verify', help='check a coloring file against a cover file')
    p.add_argument('--cover', required=True)
    p.add_argument('--coloring', required=True)
    p.add_argument('--partial', action='store_true', help='accept uncolored vertices')

    p = commands.add_parser('freeness', help='check for K_{1,s,t} subgraphs')
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument('--graph', help='edge list file')
    source.add_argument('--cover', help='cover file; its cover graph is checked')
    p.add_argument('--s', type=_positive_int, required=True)
    p.add_argument('--t', type=_positive_int, required=True)

    p = commands.add_parser('gen', help='generate graphs and covers')
    p.add_argument('--kind', choices=GENERATORS, required=True)
    p.add_argument('--output', default='-')
    p.add_argument('--graph', help='edge list for identity-cover and random-cover')
    p.add_argument('--n', type=int)
    p.add_argument('--d', type=int)
    p.add_argument('--k', type=int)
    p.add_argument('--p', type=float)
    p.add_argument('--a', type=int, help='first part size for tripartite')
    p.add_argument('--s', type=int)
    p.add_argument('--t', type=int)
    p.add_argument('--twists', type=_twists, default=[])
    p.add_argument('--seed', type=int)
    return parser


@dataclass(frozen=True)
class RunConfig:
    """Parsed command line plus the loaded settings."""
    command: str
    settings: Settings
    options: argparse.Namespace

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> 'RunConfig':
        # Config file first, then the command-line logging options on top.
        settings = Settings.from_pyfile(args.config) if args.config else Settings()
        overrides = {'LOG_LEVEL': args.log_level, 'LOG_FILE': args.log_file}
        settings = settings.overlay({k: v for k, v in overrides.items() if v is not None})
        config = cls(command=args.command, settings=settings, options=args)
        config.validate()
        return config

    def validate(self) -> None:
        o = self.options
        # Randomized commands and random generators need an explicit seed.
        needs_seed = self.command in RANDOMIZED or (self.command == 'gen' and (
            o.kind in ('regular', 'random-cover') or (o.kind == 'identity-cover' and not o.graph)))
        if needs_seed and o.seed is None:
            raise UsageError(f"{self.command} needs --seed")
        if getattr(o, 'seed', None) is not None and o.seed < 0:
            raise UsageError(f"--seed must be nonnegative, got {o.seed}")
        eps = getattr(o, 'eps', None)
        if self.command in ('schedule', 'color') and not 0 < eps < 1:
            raise UsageError(f"--eps must lie in (0, 1), got {eps}")


@contextlib.contextmanager
def _output(path: str):
    if path == '-':
        yield sys.stdout
    else:
        with open(path, 'w', encoding='utf-8', newline='') as stream:
            yield stream


def _read(path: str, reader):
    with open(path, encoding='utf-8') as stream:
        return reader(stream)


def cmd_schedule(config: RunConfig) -> int:
    o, settings = config.options, config.settings
    schedule = build_schedule(o.d, o.eps, o.t, max_iter=o.max_iter or settings.schedule_max_iter, eta=o.eta)
    with _output(o.output) as stream:
        write_schedule_csv(schedule, stream, digits=settings.csv_significant_digits)
    for warning in schedule_hypothesis_warnings(schedule):
        logger.warning(f"schedule: {warning}")
    report = verify_schedule_invariants(schedule, a=o.a)
    for violation in report.violations:
        (logger.error if violation.exact else logger.warning)(f"schedule invariant {violation}")
    logger.info(f"schedule: {len(schedule)} rows, i*={schedule.i_star}, kappa={schedule.kappa:.6g}, "
                f"eta={schedule.eta:.6g}")
    return 0 if report.exact_ok else 2


def cmd_color(config: RunConfig) -> int:
    o, settings = config.options, config.settings
    cover = _read(o.cover, read_cover)
    result = run_pipeline(cover, o.eps, s=o.s, t=o.t, seed=o.seed,
                          max_attempts=o.max_attempts or settings.max_attempts, eta=o.eta, max_rounds=o.max_rounds,
                          max_resamples=o.max_resamples, max_iter=settings.schedule_max_iter,
                          guard=settings.brute_force_guard, resample_factor=settings.resample_factor,
                          tolerance=settings.float_tolerance)
    # The OK trailer is written only for a verified coloring.
    with _output(o.output) as stream:
        write_coloring(result.final_coloring, stream, verified=result.verified)
    if o.summary:
        with _output(o.summary) as stream:
            write_pipeline_summary_csv(result, stream)
    return 0


def cmd_stats(config: RunConfig) -> int:
    o, settings = config.options, config.settings
    cover = _read(o.cover, read_cover)
    sizes = cover.list_sizes()
    # Defaults read the round parameters off the cover itself.
    d = o.d if o.d is not None else float(max(cover.max_color_degree(), 1))
    ell = o.ell if o.ell is not None else float(max(sizes.max() if sizes.size else 1, 1))
    p = RoundParams(d=d, ell=ell, eta=o.eta, eps=o.eps, s=o.s, t=o.t, seed=o.seed)
    for warning in round_hypothesis_warnings(p):
        logger.warning(f"round: {warning}")
    report = round_statistics(cover, p, o.trials, threads=o.threads, chunk_trials=settings.stats_chunk_trials)
    with _output(o.output) as stream:
        write_statistics_csv(report, stream, digits=settings.csv_significant_digits)
    if o.round_csv:
        stats = single_round_report(cover, p)
        with _output(o.round_csv) as stream:
            write_round_stats_csv(stats, stream, digits=settings.csv_significant_digits)
    return 0


def cmd_verify(config: RunConfig) -> int:
    o = config.options
    cover = _read(o.cover, read_cover)
    phi, _ = _read(o.coloring, lambda stream: read_coloring(stream, cover.n))
    stray = ownership_violation(cover, phi)
    if stray is not None:
        raise VerificationError(f"vertex {stray} has color {phi.color_of(stray)}, which is not in its list")
    conflict = coloring_conflicts(cover, phi)
    if conflict is not None:
        raise VerificationError(f"cover edge {conflict} joins two chosen colors", edge=conflict)
    if not o.partial and not phi.is_total():
        raise VerificationError(f"{cover.n - len(phi)} vertices are uncolored")
    print('OK')
    return 0


def cmd_freeness(config: RunConfig) -> int:
    o = config.options
    # For a cover the check runs on H, the graph on the colors.
    g = _read(o.graph, read_edge_list) if o.graph else _read(o.cover, read_cover).cover_graph()
    if contains_K1st(g, o.s, o.t):
        print(f"contains K_{{1,{o.s},{o.t}}}")
        return 1
    print(f"K_{{1,{o.s},{o.t}}}-free")
    return 0


def _require(o: argparse.Namespace, *names: str) -> None:
    missing = [f"--{name}" for name in names if getattr(o, name) is None]
    if missing:
        raise UsageError(f"gen --kind {o.kind} needs {', '.join(missing)}")


def cmd_gen(config: RunConfig) -> int:
    o, settings = config.options, config.settings

    def regular():
        _require(o, 'n', 'd', 'seed')
        return gen_random_regular(o.n, o.d, o.seed, max_restarts=settings.regular_max_restarts)

    def base_graph():
        return _read(o.graph, read_edge_list) if o.graph else regular()

    if o.kind == 'regular':
        result, writer = regular(), write_edge_list
    elif o.kind == 'tripartite':
        _require(o, 'a', 's', 't')
        result, writer = gen_complete_tripartite(o.a, o.s, o.t), write_edge_list
    elif o.kind == 'identity-cover':
        _require(o, 'k')
        result, writer = identity_cover(base_graph(), o.k), write_cover
    elif o.kind == 'twisted-cycle':
        _require(o, 'n', 'k')
        result, writer = twisted_cycle_cover(o.n, o.k, o.twists), write_cover
    else:
        _require(o, 'k', 'p', 'seed')
        result, writer = random_cover(base_graph(), o.k, o.p, o.seed), write_cover
    with _output(o.output) as stream:
        writer(result, stream)
    return 0


_COMMANDS = {'schedule': cmd_schedule, 'color': cmd_color, 'stats': cmd_stats, 'verify': cmd_verify,
             'freeness': cmd_freeness, 'gen': cmd_gen}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Runs one command.
    :param argv: Arguments without the program name; defaults to sys.argv[1:].
    :return: The process exit code.
    """
    try:
        args = build_parser().parse_args(argv)
        config = RunConfig.from_args(args)
        configure_logging(config.settings)
        return _COMMANDS[config.command](config)
    except SystemExit as e:
        # --help and --version
        return e.code if isinstance(e.code, int) else 0
    except BaseException as e:
        if isinstance(e, KeyboardInterrupt):
            raise
        # Failures before configure_logging still need a handler.
        if not logging.getLogger('dpnibble').handlers:
            configure_logging()
        return handle_error(e)
