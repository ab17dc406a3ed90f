import math
from types import SimpleNamespace

import numpy as np
import pytest

from dpnibble import schedule
from dpnibble.cover import (PartialColoring, identity_cover, is_proper, make_cover, ownership_violation,
                            restrict_cover)
from dpnibble.error import (ContractViolation, InternalError, ParameterError, PipelineFailure, RetryExhaustedError,
                            ScheduleDivergenceError)
from dpnibble.finisher import FinishMethod, FinishReport
from dpnibble.graph import build_graph, gen_random_regular
from dpnibble.schedule import (build_schedule, i_star_bound, is_finishable, kappa_for, run_pipeline,
                               schedule_hypothesis_warnings, verify_schedule_invariants)

from .strategies import path


@pytest.fixture
def star_cover():
    """K_{1,3} with two colors per vertex: too short for greedy, small enough for brute force."""
    return identity_cover(build_graph(4, [(0, 1), (0, 2), (0, 3)]), 2)


def test_kappa():
    assert kappa_for(0.05) == pytest.approx(0.0020115, rel=1e-4)
    assert kappa_for(0.05) == pytest.approx(2.0125 * math.log(1.001), rel=1e-12)


def test_first_row():
    s = build_schedule(1e6, 0.05, 3)
    first = s.row(1)
    assert first.d == 1e6 and first.eps == 0.0
    assert first.ratio == pytest.approx(math.log(1e6) / 4.05, rel=1e-12)
    assert s.eta == pytest.approx(kappa_for(0.05) / math.log(1e6), rel=1e-12)


def test_rows_follow_the_recursion():
    s = build_schedule(1e4, 0.05, 2)
    exponent = -1 / 400
    for a, b in zip(s.head(50).rows(), list(s.head(51).rows())[1:]):
        assert b.ell == a.keep * a.ell
        assert b.d == a.keep * a.uncolor * a.d
        assert b.eps == (1 + 3 * s.eta) * a.eps + a.d ** exponent
    assert s.row(s.i_star).d <= s.row(s.i_star).ell / 100
    assert s.row(s.i_star - 1).d > s.row(s.i_star - 1).ell / 100
    assert len(s) == s.i_star


@pytest.mark.parametrize('d', [1e4, 1e6, 1e8])
@pytest.mark.parametrize('eps', [0.01, 0.05])
@pytest.mark.parametrize('t', [2, 3])
def test_schedule_invariants_hold_exactly(d, eps, t):
    s = build_schedule(d, eps, t)
    report = verify_schedule_invariants(s)
    assert report.exact_ok, report.clauses()
    assert s.i_star <= i_star_bound(s)
    assert (np.diff(s.ratio_values) <= 0).all()
    assert (np.diff(s.eps_values) > 0).all()
    # These two only hold for d far beyond what a double can reach here.
    assert set(report.clauses()) <= {'I2', 'eps final'}


def test_schedule_is_deterministic():
    assert build_schedule(1e4, 0.05, 3) == build_schedule(1e4, 0.05, 3)


def test_truncated_schedule_misses_the_stopping_row():
    s = build_schedule(1e4, 0.05, 3).head(10)
    assert s.i_star is None and len(s) == 10
    report = verify_schedule_invariants(s)
    assert 'I3' in report.clauses()
    assert not report.exact_ok


def test_single_row_schedule_is_vacuously_ok():
    s = build_schedule(1.01, 0.05, 1)
    assert s.i_star == 1 and len(s) == 1
    report = verify_schedule_invariants(s)
    assert report.ok


def test_divergence_reports_the_last_row():
    with pytest.raises(ScheduleDivergenceError) as info:
        build_schedule(1e6, 0.05, 3, max_iter=10)
    assert info.value.last_row.i == 10
    assert info.value.exit_code == 2


@pytest.mark.parametrize('d, eps, t', [(1.0, 0.05, 1), (0.5, 0.05, 1), (100, 0.0, 1), (100, 1.0, 1), (100, 0.05, 0)])
def test_schedule_rejects_bad_parameters(d, eps, t):
    with pytest.raises(ParameterError):
        build_schedule(d, eps, t)


def test_eta_override():
    s = build_schedule(100, 0.05, 1, eta=0.01)
    assert s.eta == 0.01
    assert s.i_star < build_schedule(100, 0.05, 1).i_star


def test_row_index_is_one_based():
    s = build_schedule(1.01, 0.05, 1)
    with pytest.raises(IndexError):
        s.row(0)
    with pytest.raises(IndexError):
        s.row(2)


def test_hypothesis_warnings_flag_large_eps():
    warnings = schedule_hypothesis_warnings(build_schedule(1e4, 0.05, 2))
    assert 'eps=0.05 exceeds 1/100' in warnings


def test_pipeline_on_an_edgeless_cover():
    cover = identity_cover(build_graph(5, []), 1)
    result = run_pipeline(cover, eps=0.05, seed=1)
    assert result.verified and result.rounds_used == 0
    assert result.schedule_used is None
    assert result.finish_method is FinishMethod.GREEDY
    assert result.final_coloring.assignment.tolist() == [0, 1, 2, 3, 4]


def test_pipeline_on_the_empty_cover():
    result = run_pipeline(identity_cover(build_graph(0, []), 1), eps=0.05)
    assert result.final_coloring.n == 0 and result.verified


def test_padded_cover_is_finished_without_rounds():
    g = gen_random_regular(40, 4, seed=3)
    cover = identity_cover(g, 8 * 4 + 1)
    assert is_finishable(cover)
    result = run_pipeline(cover, eps=0.05, seed=3)
    assert result.rounds_used == 0 and result.per_round_attempts == ()
    assert is_proper(cover, result.final_coloring)
    assert ownership_violation(cover, result.final_coloring) is None


def test_zero_rounds_goes_straight_to_the_finisher(star_cover):
    assert not is_finishable(star_cover)
    result = run_pipeline(star_cover, eps=0.05, seed=2, max_rounds=0)
    assert result.rounds_used == 0
    assert result.schedule_used is not None
    assert result.finish_method is FinishMethod.BRUTE_FORCE
    assert result.final_coloring.assignment.tolist() == [0, 3, 5, 7]


def test_rounds_compose_into_the_input_ids(star_cover):
    result = run_pipeline(star_cover, eps=0.05, seed=5, max_rounds=1)
    assert result.rounds_used == 1
    assert len(result.per_round_attempts) == 1 and len(result.summaries) == 1
    assert result.summaries[0].round == 1
    assert result.final_coloring.is_total()
    assert is_proper(star_cover, result.final_coloring)
    assert ownership_violation(star_cover, result.final_coloring) is None


def color_first_vertex(cover, p, **kwargs):
    """Stand-in round: colors vertex 0 with its first color and drops what that color blocks."""
    phi = PartialColoring.empty(cover.n)
    c = int(cover.list_of(0)[0])
    phi.assign(0, c)
    blocked = set(cover.color_neighbors(c).tolist())
    rest = range(1, cover.n)
    keep = {v: [x for x in cover.list_of(v).tolist() if x not in blocked] for v in rest}
    return SimpleNamespace(phi=phi, residual=restrict_cover(cover, rest, keep, phi=phi), attempts=1)


def test_two_rounds_compose_through_re_indexed_residuals(monkeypatch):
    # P5 with two colors per vertex: no residual of the two rounds below is finishable.
    cover = identity_cover(path(5), 2)
    monkeypatch.setattr(schedule, 'run_round_until_good', color_first_vertex)
    result = run_pipeline(cover, eps=0.05, seed=1, max_rounds=2)
    assert result.rounds_used == 2
    assert [x.residual_vertices for x in result.summaries] == [4, 3]
    assert [x.colored for x in result.summaries] == [1, 1]
    assert result.finish_method is FinishMethod.BRUTE_FORCE
    assert result.final_coloring.assignment.tolist() == [0, 3, 4, 7, 8]
    assert is_proper(cover, result.final_coloring)


def test_pipeline_is_deterministic(star_cover):
    a = run_pipeline(star_cover, eps=0.05, seed=11, max_rounds=1)
    b = run_pipeline(star_cover, eps=0.05, seed=11, max_rounds=1)
    assert a.final_coloring == b.final_coloring
    assert a.per_round_attempts == b.per_round_attempts


def test_uncolorable_residual_fails_with_its_stage(c4_twisted_2):
    with pytest.raises(PipelineFailure) as info:
        run_pipeline(c4_twisted_2, eps=0.05, max_rounds=0)
    assert info.value.stage == 1
    assert info.value.exit_code == 3


def test_round_exhaustion_is_tagged_with_its_stage(star_cover, monkeypatch):
    def exhausted(*args, **kwargs):
        raise RetryExhaustedError("no good round", last_report=['x'])

    monkeypatch.setattr(schedule, 'run_round_until_good', exhausted)
    with pytest.raises(RetryExhaustedError) as info:
        run_pipeline(star_cover, eps=0.05, max_rounds=3)
    assert info.value.stage == 1
    assert info.value.last_report == ['x']


@pytest.mark.parametrize('assignment', [[0, 2], [0, -1]])
def test_bad_finisher_output_is_an_internal_error(single_edge, monkeypatch, assignment):
    def broken(cover, **kwargs):
        return FinishReport(coloring=PartialColoring(np.array(assignment)), resamples_used=0,
                            method=FinishMethod.GREEDY)

    monkeypatch.setattr(schedule, 'finish', broken)
    with pytest.raises(InternalError) as info:
        run_pipeline(identity_cover(single_edge, 2), eps=0.05)
    assert info.value.exit_code == 70


def test_pipeline_rejects_bad_input(single_edge):
    invalid = make_cover(single_edge, [[0, 1], [2, 3]], [(0, 2), (0, 3)])
    with pytest.raises(ContractViolation):
        run_pipeline(invalid, eps=0.05)
    valid = identity_cover(single_edge, 2)
    with pytest.raises(ParameterError):
        run_pipeline(valid, eps=1.5)
    with pytest.raises(ParameterError):
        run_pipeline(valid, eps=0.05, max_rounds=-1)


@pytest.mark.slow
@pytest.mark.parametrize('d', [16, 32, 64])
def test_padded_random_regular_covers_are_finished_directly(d):
    g = gen_random_regular(2000, d, seed=d)
    k = max(math.ceil(4.05 * d / math.log(d)), d + 1)
    cover = identity_cover(g, k)
    for seed in range(3):
        result = run_pipeline(cover, eps=0.05, seed=seed)
        assert result.verified and result.rounds_used == 0
        assert is_proper(cover, result.final_coloring)
