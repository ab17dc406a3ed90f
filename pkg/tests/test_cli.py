import csv

import pytest

from dpnibble.cli import main
from dpnibble.formats import read_coloring, read_cover, read_edge_list
from dpnibble.schedule import is_finishable

from .strategies import complete


@pytest.fixture
def edge_list(tmp_path):
    def write(name, n, edges):
        path = tmp_path / name
        path.write_text(f"{n} {len(edges)}\n" + ''.join(f"{u} {v}\n" for u, v in edges))
        return str(path)
    return write


@pytest.fixture
def c4_file(edge_list):
    return edge_list('c4.txt', 4, [(0, 1), (1, 2), (2, 3), (0, 3)])


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_schedule_writes_csv_with_footer(capsys, tmp_path):
    out = tmp_path / 'schedule.csv'
    assert main(['schedule', '--d', '1e6', '--eps', '0.05', '--t', '3', '--output', str(out)]) == 0
    with open(out, newline='') as stream:
        table = list(csv.reader(stream))
    assert table[0][0] == 'i'
    assert table[-1][0] == 'iStar' and int(table[-1][1]) == len(table) - 2


def test_schedule_to_stdout(capsys):
    code, out = run(capsys, 'schedule', '--d', '1.01', '--eps', '0.05')
    assert code == 0
    assert out.splitlines()[-1].startswith('iStar,1,kappa,')


def test_schedule_divergence_exits_2(capsys, tmp_path):
    assert main(['schedule', '--d', '1e6', '--eps', '0.05', '--max-iter', '5',
                 '--output', str(tmp_path / 's.csv')]) == 2


@pytest.mark.parametrize('argv', [
    ['schedule', '--eps', '0.05'],
    ['schedule', '--d', '100', '--eps', '1.5'],
    ['schedule', '--d', '100', '--eps', '0.05', '--t', '0'],
    ['nonsense'],
    [],
])
def test_usage_errors_exit_64(capsys, argv):
    assert main(argv) == 64


def test_version(capsys):
    assert main(['--version']) == 0


def test_gen_identity_cover_then_color_then_verify(capsys, tmp_path, c4_file):
    cover = tmp_path / 'cover.txt'
    coloring = tmp_path / 'coloring.txt'
    summary = tmp_path / 'summary.csv'
    assert main(['gen', '--kind', 'identity-cover', '--graph', c4_file, '--k', '3', '--output', str(cover)]) == 0
    assert read_cover(cover.read_text().splitlines()).lists()[3] == [9, 10, 11]
    assert main(['color', '--cover', str(cover), '--eps', '0.05', '--seed', '1', '--output', str(coloring),
                 '--summary', str(summary)]) == 0
    phi, trailer = read_coloring(coloring.read_text().splitlines(), 4)
    assert trailer and phi.is_total()
    assert summary.read_text().splitlines()[-1].startswith('finish,greedy')
    capsys.readouterr()
    code, out = run(capsys, 'verify', '--cover', str(cover), '--coloring', str(coloring))
    assert (code, out) == (0, 'OK\n')


def test_color_needs_a_seed(capsys, tmp_path, c4_file):
    cover = tmp_path / 'cover.txt'
    main(['gen', '--kind', 'identity-cover', '--graph', c4_file, '--k', '3', '--output', str(cover)])
    assert main(['color', '--cover', str(cover), '--eps', '0.05']) == 64


def test_color_on_an_edgeless_cover(capsys, edge_list, tmp_path):
    graph = edge_list('empty.txt', 3, [])
    cover = tmp_path / 'cover.txt'
    main(['gen', '--kind', 'identity-cover', '--graph', graph, '--k', '1', '--output', str(cover)])
    code, out = run(capsys, 'color', '--cover', str(cover), '--eps', '0.05', '--seed', '0')
    assert code == 0
    assert out == "0 0\n1 1\n2 2\nOK\n"


def test_color_uncolorable_cover_exits_3(capsys, tmp_path):
    cover = tmp_path / 'twisted.txt'
    assert main(['gen', '--kind', 'twisted-cycle', '--n', '4', '--k', '2', '--twists', '0',
                 '--output', str(cover)]) == 0
    assert main(['color', '--cover', str(cover), '--eps', '0.05', '--seed', '3', '--max-rounds', '0']) == 3


def test_color_malformed_cover_exits_65(capsys, tmp_path):
    cover = tmp_path / 'bad.txt'
    cover.write_text("2 4\n0 2 0 1\n1 2 2 x\nE 0\n")
    assert main(['color', '--cover', str(cover), '--eps', '0.05', '--seed', '1']) == 65
    assert main(['color', '--cover', str(tmp_path / 'missing.txt'), '--eps', '0.05', '--seed', '1']) == 65


def test_verify_reports_the_conflicting_edge(capsys, tmp_path):
    cover = tmp_path / 'twisted.txt'
    coloring = tmp_path / 'bad.txt'
    main(['gen', '--kind', 'twisted-cycle', '--n', '4', '--k', '2', '--twists', '0', '--output', str(cover)])
    coloring.write_text("0 0\n1 3\n2 4\n3 6\n")
    capsys.readouterr()
    code, out = run(capsys, 'verify', '--cover', str(cover), '--coloring', str(coloring))
    assert code == 1
    assert out == "FAIL conflicting cover edge 0 3\n"


def test_verify_partial_and_foreign_colorings(capsys, tmp_path):
    cover = tmp_path / 'twisted.txt'
    main(['gen', '--kind', 'twisted-cycle', '--n', '4', '--k', '2', '--output', str(cover)])
    partial = tmp_path / 'partial.txt'
    partial.write_text("0 0\n1 3\n")
    assert main(['verify', '--cover', str(cover), '--coloring', str(partial)]) == 1
    assert main(['verify', '--cover', str(cover), '--coloring', str(partial), '--partial']) == 0
    foreign = tmp_path / 'foreign.txt'
    foreign.write_text("0 2\n")
    assert main(['verify', '--cover', str(cover), '--coloring', str(foreign), '--partial']) == 1


def test_freeness(capsys, edge_list):
    k4 = edge_list('k4.txt', 4, list(complete(4).edges()))
    c5 = edge_list('c5.txt', 5, [(i, (i + 1) % 5) for i in range(5)])
    code, out = run(capsys, 'freeness', '--graph', k4, '--s', '1', '--t', '1')
    assert (code, out) == (1, "contains K_{1,1,1}\n")
    code, out = run(capsys, 'freeness', '--graph', c5, '--s', '1', '--t', '1')
    assert (code, out) == (0, "K_{1,1,1}-free\n")


def test_freeness_of_a_cover_graph(capsys, tmp_path):
    cover = tmp_path / 'cover.txt'
    main(['gen', '--kind', 'twisted-cycle', '--n', '5', '--k', '2', '--output', str(cover)])
    assert main(['freeness', '--cover', str(cover), '--s', '1', '--t', '1']) == 0


def test_gen_generators(capsys, tmp_path):
    regular = tmp_path / 'regular.txt'
    assert main(['gen', '--kind', 'regular', '--n', '10', '--d', '3', '--seed', '1', '--output', str(regular)]) == 0
    g = read_edge_list(regular.read_text().splitlines())
    assert (g.degrees() == 3).all()
    tripartite = tmp_path / 'tripartite.txt'
    assert main(['gen', '--kind', 'tripartite', '--a', '1', '--s', '2', '--t', '2', '--output', str(tripartite)]) == 0
    assert read_edge_list(tripartite.read_text().splitlines()).m == 8
    random_file = tmp_path / 'random.txt'
    assert main(['gen', '--kind', 'random-cover', '--graph', str(regular), '--k', '4', '--p', '0.5', '--seed', '2',
                 '--output', str(random_file)]) == 0
    assert read_cover(random_file.read_text().splitlines()).n == 10


@pytest.mark.parametrize('argv', [
    ['gen', '--kind', 'regular', '--n', '10', '--d', '3'],
    ['gen', '--kind', 'tripartite', '--a', '1', '--s', '2'],
    ['gen', '--kind', 'twisted-cycle', '--n', '4'],
    ['gen', '--kind', 'identity-cover', '--n', '10', '--d', '3', '--k', '4'],
])
def test_gen_missing_options_exit_64(capsys, argv):
    assert main(argv) == 64


def test_gen_infeasible_regular_graph_exits_64(capsys):
    assert main(['gen', '--kind', 'regular', '--n', '5', '--d', '3', '--seed', '1']) == 64


def test_stats(capsys, tmp_path, c4_file):
    cover = tmp_path / 'cover.txt'
    out = tmp_path / 'stats.csv'
    round_csv = tmp_path / 'round.csv'
    main(['gen', '--kind', 'identity-cover', '--graph', c4_file, '--k', '4', '--output', str(cover)])
    assert main(['stats', '--cover', str(cover), '--eta', '0.5', '--trials', '0', '--seed', '1']) == 64
    assert main(['stats', '--cover', str(cover), '--eta', '0.5', '--trials', '40', '--seed', '1', '--threads', '2',
                 '--output', str(out), '--round-csv', str(round_csv)]) == 0
    table = list(csv.reader(out.read_text().splitlines()))
    assert table[0][:2] == ['vertex', 'ell'] and table[-1][:2] == ['trials', '40']
    assert [row[0] for row in csv.reader(round_csv.read_text().splitlines())][-3:] == ['min', 'max', 'mean']


def test_config_file_overrides_settings(capsys, tmp_path):
    config = tmp_path / 'settings.py'
    config.write_text("CSV_SIGNIFICANT_DIGITS = 3\nLOG_LEVEL = 'ERROR'\n")
    code, out = run(capsys, '--config', str(config), 'schedule', '--d', '1.01', '--eps', '0.05')
    assert code == 0
    ell = out.splitlines()[1].split(',')[1]
    assert len(ell.replace('.', '')) <= 3


def test_log_file(capsys, tmp_path):
    log = tmp_path / 'run.log'
    assert main(['--log-file', str(log), '--log-level', 'DEBUG', 'schedule', '--d', '1.01', '--eps', '0.05']) == 0
    assert 'INFO schedule: 1 rows' in log.read_text()


@pytest.fixture(scope='module')
def short_list_covers(tmp_path_factory):
    """Covers of a 16-regular graph with 16 colors per vertex: no finisher applies before the rounds."""
    root = tmp_path_factory.mktemp('short')
    graph = str(root / 'regular.txt')
    assert main(['gen', '--kind', 'regular', '--n', '200', '--d', '16', '--seed', '7', '--output', graph]) == 0
    files = {'identity-cover': str(root / 'identity.txt'), 'random-cover': str(root / 'random.txt')}
    assert main(['gen', '--kind', 'identity-cover', '--graph', graph, '--k', '16',
                 '--output', files['identity-cover']]) == 0
    assert main(['gen', '--kind', 'random-cover', '--graph', graph, '--k', '16', '--p', '1.0', '--seed', '8',
                 '--output', files['random-cover']]) == 0
    return files


@pytest.mark.slow
@pytest.mark.parametrize('kind', ['identity-cover', 'random-cover'])
@pytest.mark.parametrize('seed', range(20))
def test_color_runs_rounds_then_exits_0_or_3(capsys, tmp_path, short_list_covers, kind, seed):
    cover_file = short_list_covers[kind]
    with open(cover_file) as stream:
        assert not is_finishable(read_cover(stream))
    coloring = tmp_path / 'coloring.txt'
    log = tmp_path / 'run.log'
    code = main(['--log-file', str(log), 'color', '--cover', cover_file, '--eps', '0.05', '--eta', '0.1',
                 '--max-rounds', '20', '--seed', str(seed), '--output', str(coloring)])
    # A round or the finisher may run out of retries; a wrong coloring would exit 70.
    assert code in (0, 3)
    assert 'round 1: colored' in log.read_text()
    if code == 0:
        phi, trailer = read_coloring(coloring.read_text().splitlines(), 200)
        assert trailer and phi.is_total()
        capsys.readouterr()
        assert run(capsys, 'verify', '--cover', cover_file, '--coloring', str(coloring)) == (0, 'OK\n')
