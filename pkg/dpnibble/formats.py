"""
Text formats for graphs, covers and colorings, and the CSV reports.

Edge list:
    n m
    u v            (m lines)

Cover:
    n colorCount
    v k c1 ... ck  (one line per vertex, in id order)
    E m
    c c'           (m cover edges)
    G m            (optional: base graph edges, so edges with empty matchings survive)
    u v            (m lines)

Coloring:
    v c            (one line per colored vertex)
    OK             (written after verification)

Blank lines and lines starting with '#' are skipped. Readers raise MalformedInputError with the
1-based line number of the offending line.
"""

import csv
import math
from typing import Iterable, Iterator, List, Optional, TextIO, Tuple

import numpy as np

from instance.config import CSV_SIGNIFICANT_DIGITS

from .cover import DPCover, PartialColoring, make_cover
from .error import MalformedInputError
from .graph import Graph, build_graph
from .nibble import RoundStats, StatisticsReport
from .schedule import PipelineResult, Schedule

OK_TRAILER = 'OK'


def _lines(stream: Iterable[str]) -> Iterator[Tuple[int, List[str]]]:
    for number, line in enumerate(stream, start=1):
        tokens = line.split()
        if tokens and not tokens[0].startswith('#'):
            yield number, tokens


def _ints(tokens: List[str], number: int, count: Optional[int] = None) -> List[int]:
    if count is not None and len(tokens) != count:
        raise MalformedInputError(f"expected {count} fields, got {len(tokens)}", line=number)
    try:
        return [int(token) for token in tokens]
    except ValueError:
        raise MalformedInputError(f"expected integers, got {' '.join(tokens)!r}", line=number)


def _next(lines: Iterator[Tuple[int, List[str]]], what: str, last: int) -> Tuple[int, List[str]]:
    try:
        return next(lines)
    except StopIteration:
        raise MalformedInputError(f"unexpected end of input, expected {what}", line=last + 1)


def _pairs(lines, count: int, limit: int, what: str, last: int) -> Tuple[List[Tuple[int, int]], int]:
    pairs = []
    for _ in range(count):
        last, tokens = _next(lines, what, last)
        u, v = _ints(tokens, last, 2)
        if not (0 <= u < limit and 0 <= v < limit):
            raise MalformedInputError(f"{what} ({u}, {v}) outside [0, {limit})", line=last)
        if u == v:
            raise MalformedInputError(f"{what} ({u}, {v}) is a loop", line=last)
        pairs.append((u, v))
    return pairs, last


def _expect_end(lines, last: int) -> None:
    for number, tokens in lines:
        raise MalformedInputError(f"unexpected trailing content {' '.join(tokens)!r}", line=number)


def read_edge_list(stream: Iterable[str]) -> Graph:
    lines = _lines(stream)
    last, tokens = _next(lines, 'header "n m"', 0)
    n, m = _ints(tokens, last, 2)
    if n < 0 or m < 0:
        raise MalformedInputError("vertex and edge counts must be nonnegative", line=last)
    pairs, last = _pairs(lines, m, n, 'edge', last)
    _expect_end(lines, last)
    return build_graph(n, pairs)


def write_edge_list(g: Graph, stream: TextIO) -> None:
    stream.write(f"{g.n} {g.m}\n")
    for u, v in g.edges():
        stream.write(f"{u} {v}\n")


def read_cover(stream: Iterable[str]) -> DPCover:
    """
    Reads a cover file. Without a G section the base graph is the projection of the cover edges.
    Cover axioms are not checked here; run validate_cover.
    """
    lines = _lines(stream)
    last, tokens = _next(lines, 'header "n colorCount"', 0)
    n, color_count = _ints(tokens, last, 2)
    if n < 0 or color_count < 0:
        raise MalformedInputError("vertex and color counts must be nonnegative", line=last)
    lists = []
    seen = np.zeros(color_count, dtype=bool)
    for v in range(n):
        last, tokens = _next(lines, f'list of vertex {v}', last)
        values = _ints(tokens, last)
        if len(values) < 2 or values[0] != v:
            raise MalformedInputError(f"expected list line 'v k c1 ... ck' for vertex {v}", line=last)
        k, colors = values[1], values[2:]
        if k != len(colors):
            raise MalformedInputError(f"vertex {v} declares {k} colors but lists {len(colors)}", line=last)
        for c in colors:
            if not 0 <= c < color_count:
                raise MalformedInputError(f"color {c} outside [0, {color_count})", line=last)
            if seen[c]:
                raise MalformedInputError(f"color {c} appears in more than one list", line=last)
            seen[c] = True
        lists.append(colors)
    if not seen.all():
        raise MalformedInputError(f"color {int(np.argmin(seen))} is in no list", line=last)

    last, tokens = _next(lines, 'section "E m"', last)
    if tokens[0] != 'E' or len(tokens) != 2:
        raise MalformedInputError('expected section header "E m"', line=last)
    m = _ints(tokens[1:], last, 1)[0]
    cover_edges, last = _pairs(lines, m, color_count, 'cover edge', last)

    owner = np.empty(color_count, dtype=np.int64)
    for v, colors in enumerate(lists):
        owner[colors] = v
    section = next(lines, None)
    if section is None:
        base = build_graph(n, [(int(owner[a]), int(owner[b])) for a, b in cover_edges
                               if owner[a] != owner[b]])
    else:
        last, tokens = section
        if tokens[0] != 'G' or len(tokens) != 2:
            raise MalformedInputError('expected section header "G m" or end of input', line=last)
        g_count = _ints(tokens[1:], last, 1)[0]
        base_edges, last = _pairs(lines, g_count, n, 'base edge', last)
        _expect_end(lines, last)
        base = build_graph(n, base_edges)
    return make_cover(base, lists, cover_edges)


def write_cover(c: DPCover, stream: TextIO) -> None:
    stream.write(f"{c.n} {c.color_count}\n")
    for v in range(c.n):
        row = c.list_of(v).tolist()
        stream.write(' '.join(str(x) for x in [v, len(row), *row]) + '\n')
    edges = c.cover_edges()
    stream.write(f"E {edges.shape[0]}\n")
    for a, b in edges.tolist():
        stream.write(f"{a} {b}\n")
    stream.write(f"G {c.base.m}\n")
    for u, v in c.base.edges():
        stream.write(f"{u} {v}\n")


def read_coloring(stream: Iterable[str], n: int) -> Tuple[PartialColoring, bool]:
    """
    :param n: Vertex count of the cover the coloring belongs to.
    :return: The coloring and whether the file ends with the OK trailer.
    """
    phi = PartialColoring.empty(n)
    trailer = False
    for number, tokens in _lines(stream):
        if trailer:
            raise MalformedInputError(f"content after the {OK_TRAILER} line", line=number)
        if tokens == [OK_TRAILER]:
            trailer = True
            continue
        v, c = _ints(tokens, number, 2)
        if not 0 <= v < n:
            raise MalformedInputError(f"vertex {v} outside [0, {n})", line=number)
        if c < 0:
            raise MalformedInputError(f"color {c} is negative", line=number)
        if phi.is_assigned(v):
            raise MalformedInputError(f"vertex {v} is colored twice", line=number)
        phi.assign(v, c)
    return phi, trailer


def write_coloring(phi: PartialColoring, stream: TextIO, verified: bool = True) -> None:
    for v in phi.domain().tolist():
        stream.write(f"{v} {int(phi.assignment[v])}\n")
    if verified:
        stream.write(f"{OK_TRAILER}\n")


def format_number(x, digits: int = CSV_SIGNIFICANT_DIGITS) -> str:
    """Integers as integers, floats with the configured significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return 'nan'
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return format(x, f'.{digits}g')


def _writer(stream: TextIO):
    return csv.writer(stream, lineterminator='\n')


def write_schedule_csv(s: Schedule, stream: TextIO, digits: int = CSV_SIGNIFICANT_DIGITS) -> None:
    writer = _writer(stream)
    writer.writerow(['i', 'ell_i', 'd_i', 'eps_i', 'keep_i', 'uncolor_i', 'ratio_i'])
    ratio = s.ratio_values
    columns = (s.ell_values, s.d_values, s.eps_values, s.keep_values, s.uncolor_values, ratio)
    for j in range(len(s)):
        writer.writerow([j + 1, *(format(float(column[j]), f'.{digits}g') for column in columns)])
    writer.writerow(['iStar', '' if s.i_star is None else s.i_star, 'kappa', format(s.kappa, f'.{digits}g'),
                     'eta', format(s.eta, f'.{digits}g')])


def write_round_stats_csv(stats: RoundStats, stream: TextIO, digits: int = CSV_SIGNIFICANT_DIGITS) -> None:
    """One row per vertex, then min, max and mean rows."""
    writer = _writer(stream)
    writer.writerow(['vertex', *(name for name, _ in RoundStats.COLUMNS)])
    columns = [getattr(stats, attr) for _, attr in RoundStats.COLUMNS]
    for v in range(stats.n):
        writer.writerow([v, *(format_number(column[v], digits) for column in columns)])
    summary = stats.aggregate()
    for k, label in enumerate(('min', 'max', 'mean')):
        writer.writerow([label, *(format_number(summary[name][k], digits) for name, _ in RoundStats.COLUMNS)])


def write_statistics_csv(report: StatisticsReport, stream: TextIO, digits: int = CSV_SIGNIFICANT_DIGITS) -> None:
    """One row per vertex; the report's scalars go into a trailing row."""
    writer = _writer(stream)
    writer.writerow(['vertex', *StatisticsReport.COLUMNS])
    columns = [getattr(report, name) for name in StatisticsReport.COLUMNS]
    for v in range(report.n):
        writer.writerow([v, *(format_number(column[v], digits) for column in columns)])
    writer.writerow(['trials', report.trials, 'keep', format_number(report.keep, digits),
                     'uncolor', format_number(report.uncolor, digits), 'beta1', format_number(report.beta1, digits)])


def write_pipeline_summary_csv(result: PipelineResult, stream: TextIO) -> None:
    writer = _writer(stream)
    writer.writerow(['round', 'colored', 'attempts', 'residual_vertices', 'residual_max_degree',
                     'min_list', 'max_list'])
    for row in result.summaries:
        writer.writerow([row.round, row.colored, row.attempts, row.residual_vertices, row.residual_max_degree,
                         row.min_list, row.max_list])
    writer.writerow(['finish', result.finish_method.value, result.resamples_used, '', '', '', ''])
