import csv
import io

import numpy as np
import pytest

from dpnibble.cover import PartialColoring, identity_cover, make_cover, twisted_cycle_cover
from dpnibble.error import MalformedInputError
from dpnibble.formats import (format_number, read_coloring, read_cover, read_edge_list, write_coloring, write_cover,
                              write_edge_list, write_pipeline_summary_csv, write_round_stats_csv, write_schedule_csv,
                              write_statistics_csv)
from dpnibble.graph import build_graph
from dpnibble.nibble import RoundParams, round_statistics, single_round_report
from dpnibble.schedule import build_schedule, run_pipeline


def written(writer, value, **kwargs):
    stream = io.StringIO()
    writer(value, stream, **kwargs)
    return stream.getvalue()


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_read_edge_list_skips_comments_and_blank_lines():
    g = read_edge_list(io.StringIO("# a path\n3 2\n\n0 1\n# middle\n1 2\n"))
    assert list(g.edges()) == [(0, 1), (1, 2)]


def test_edge_list_round_trip(c4):
    assert read_edge_list(io.StringIO(written(write_edge_list, c4))) == c4


@pytest.mark.parametrize('text, line', [
    ("3\n", 1),
    ("3 2\n0 1\n", 3),
    ("3 1\n0 x\n", 2),
    ("3 1\n0 3\n", 2),
    ("3 1\n1 1\n", 2),
    ("3 1\n0 1\n1 2\n", 3),
    ("2 1\n0 1 1\n", 2),
])
def test_edge_list_errors_carry_line_numbers(text, line):
    with pytest.raises(MalformedInputError) as info:
        read_edge_list(io.StringIO(text))
    assert info.value.line == line
    assert info.value.exit_code == 65
    assert info.value.message.startswith(f"line {line}:")


def test_read_cover():
    text = "2 4\n0 2 0 1\n1 2 2 3\nE 2\n0 3\n1 2\n"
    c = read_cover(io.StringIO(text))
    assert c.lists() == [[0, 1], [2, 3]]
    assert c.cover_edges().tolist() == [[0, 3], [1, 2]]
    assert list(c.base.edges()) == [(0, 1)]


def test_cover_base_section_keeps_edges_without_matchings():
    text = "3 3\n0 1 0\n1 1 1\n2 1 2\nE 1\n0 1\nG 2\n0 1\n1 2\n"
    c = read_cover(io.StringIO(text))
    assert list(c.base.edges()) == [(0, 1), (1, 2)]
    assert c.matched_neighbor_counts().tolist() == [1, 1, 0]


def test_cover_write_read_write_is_stable(c4_twisted_2):
    for cover in (c4_twisted_2, identity_cover(build_graph(3, [(0, 2)]), 2)):
        text = written(write_cover, cover)
        again = read_cover(io.StringIO(text))
        assert again == cover
        assert written(write_cover, again) == text


@pytest.mark.parametrize('text, line', [
    ("2 4\n0 2 0 1\n", 3),
    ("2 4\n0 2 0 1\n1 3 2 3\nE 0\n", 3),
    ("2 4\n0 2 0 1\n1 2 2 4\nE 0\n", 3),
    ("2 4\n0 2 0 1\n1 2 1 3\nE 0\n", 3),
    ("2 3\n0 1 0\n1 1 1\nE 0\n", 3),
    ("2 4\n0 2 0 1\n0 2 2 3\nE 0\n", 3),
    ("2 4\n0 2 0 1\n1 2 2 3\nX 0\n", 4),
    ("2 4\n0 2 0 1\n1 2 2 3\nE 1\n0 0\n", 5),
    ("2 4\n0 2 0 1\n1 2 2 3\nE 0\nG 1\n0 2\n", 6),
    ("2 4\n0 2 0 1\n1 2 2 3\nE 0\nG 0\n0 1\n", 6),
])
def test_cover_errors_carry_line_numbers(text, line):
    with pytest.raises(MalformedInputError) as info:
        read_cover(io.StringIO(text))
    assert info.value.line == line


def test_coloring_round_trip():
    phi = PartialColoring(np.array([0, -1, 5]))
    text = written(write_coloring, phi)
    assert text == "0 0\n2 5\nOK\n"
    again, trailer = read_coloring(io.StringIO(text), 3)
    assert again == phi and trailer
    assert written(write_coloring, phi, verified=False) == "0 0\n2 5\n"


@pytest.mark.parametrize('text, line', [
    ("0 0\n3 1\n", 2), ("0 0\n0 1\n", 2), ("0 -2\n", 1), ("0 0\nOK\n1 1\n", 3), ("0\n", 1)])
def test_coloring_errors_carry_line_numbers(text, line):
    with pytest.raises(MalformedInputError) as info:
        read_coloring(io.StringIO(text), 3)
    assert info.value.line == line


@pytest.mark.parametrize('value, text', [
    (3, '3'), (np.int64(-2), '-2'), (True, '1'), (2.0, '2'), (0.1, '0.1'), (float('nan'), 'nan'),
    (1 / 3, '0.333333333333')])
def test_format_number(value, text):
    assert format_number(value) == text


def test_schedule_csv():
    s = build_schedule(1.01, 0.05, 1)
    table = rows(written(write_schedule_csv, s))
    assert table[0] == ['i', 'ell_i', 'd_i', 'eps_i', 'keep_i', 'uncolor_i', 'ratio_i']
    assert len(table) == len(s) + 2
    assert table[1][0] == '1' and float(table[1][2]) == 1.01
    footer = table[-1]
    assert footer[0] == 'iStar' and footer[1] == '1'
    assert footer[2] == 'kappa' and float(footer[3]) == pytest.approx(s.kappa, rel=1e-11)
    assert footer[4] == 'eta'


def test_round_stats_csv(c4):
    cover = identity_cover(c4, 4)
    stats = single_round_report(cover, RoundParams(d=2, ell=4, eta=1.0, seed=1))
    table = rows(written(write_round_stats_csv, stats))
    assert table[0] == ['vertex', 'ell', 'k', 'ellPrime', 'avgdeg', 'lambda', 'delta', 'lambdaPrime', 'deltaPrime',
                        'eK', 'eU', 'eKU']
    assert [row[0] for row in table[1:]] == ['0', '1', '2', '3', 'min', 'max', 'mean']
    assert table[1][1] == '4'


def test_statistics_csv(c4):
    report = round_statistics(identity_cover(c4, 3), RoundParams(d=2, ell=3, eta=0.0, seed=2), trials=5)
    table = rows(written(write_statistics_csv, report))
    assert table[0][:4] == ['vertex', 'ell', 'avgdeg', 'k_mean']
    assert len(table) == 1 + 4 + 1
    assert table[1][3] == '3'
    assert table[-1][:2] == ['trials', '5']


def test_pipeline_summary_csv():
    cover = make_cover(build_graph(2, []), [[0], [1]], [])
    result = run_pipeline(cover, eps=0.05)
    table = rows(written(write_pipeline_summary_csv, result))
    assert table[0][0] == 'round'
    assert table[-1][:3] == ['finish', 'greedy', '0']


def test_twisted_cover_file_matches_generator():
    text = written(write_cover, twisted_cycle_cover(4, 2, {0}))
    assert text.splitlines()[:6] == ['4 8', '0 2 0 1', '1 2 2 3', '2 2 4 5', '3 2 6 7', 'E 8']
