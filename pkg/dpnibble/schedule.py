"""
The deterministic parameter recursion driving the rounds, its invariant checks, and the
multi-round coloring pipeline.

Starting from ell_1 = (4 + eps) d / log d, d_1 = d and eps_1 = 0, every row feeds the next:

    ell_{i+1} = keep_i * ell_i
    d_{i+1}   = keep_i * uncolor_i * d_i
    eps_{i+1} = (1 + 3 eta) eps_i + d_i^(-1/(200 t))

with eta = kappa / log d fixed for the whole schedule. The recursion stops at the first row
with d_i <= ell_i / 100 (i*).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np

from instance.config import BRUTE_FORCE_GUARD, FLOAT_TOLERANCE, MAX_ATTEMPTS, RESAMPLE_FACTOR, SCHEDULE_MAX_ITER

from .cover import DPCover, PartialColoring, coloring_conflicts, ownership_violation, validate_cover
from .error import (ContractViolation, InternalError, ParameterError, PipelineFailure, RetryExhaustedError,
                    ScheduleDivergenceError)
from .finisher import FinishMethod, finish, greedy_precondition_holds, resampling_precondition_holds
from .nibble import RoundParams, derive_seed, keep_value, run_round_until_good, uncolor_value

logger = logging.getLogger(__name__)

ROUND_STREAM = 3
FINISH_STREAM = 4

# Rows stop once d_i <= ell_i / STOP_RATIO.
STOP_RATIO = 100


def kappa_for(eps: float) -> float:
    """kappa = (2 + eps/4) log(1 + eps/50)."""
    return (2 + eps / 4) * math.log1p(eps / 50)


@dataclass(frozen=True)
class ScheduleRow:
    i: int
    ell: float
    d: float
    eps: float
    keep: float
    uncolor: float

    @property
    def ratio(self) -> float:
        return self.d / self.ell


@dataclass(frozen=True, eq=False)
class Schedule:
    """
    Rows of the recursion, stored column-wise. Row i (1-based) is element i-1 of every column.
    :param i_star: Index of the stopping row, or None when the rows end before it.
    """
    d: float
    eps: float
    t: int
    kappa: float
    eta: float
    ell_values: np.ndarray
    d_values: np.ndarray
    eps_values: np.ndarray
    keep_values: np.ndarray
    uncolor_values: np.ndarray
    i_star: Optional[int]

    @property
    def ratio_values(self) -> np.ndarray:
        return self.d_values / self.ell_values

    def __len__(self):
        return int(self.ell_values.size)

    def row(self, i: int) -> ScheduleRow:
        """Row i, 1-based."""
        if not 1 <= i <= len(self):
            raise IndexError(f"schedule has rows 1..{len(self)}, asked for {i}")
        j = i - 1
        return ScheduleRow(i=i, ell=float(self.ell_values[j]), d=float(self.d_values[j]),
                           eps=float(self.eps_values[j]), keep=float(self.keep_values[j]),
                           uncolor=float(self.uncolor_values[j]))

    def rows(self) -> Iterator[ScheduleRow]:
        for i in range(1, len(self) + 1):
            yield self.row(i)

    def head(self, count: int) -> 'Schedule':
        """The first ``count`` rows; i_star is kept only when the stopping row is among them."""
        keep_star = self.i_star if self.i_star is not None and self.i_star <= count else None
        return Schedule(d=self.d, eps=self.eps, t=self.t, kappa=self.kappa, eta=self.eta,
                        ell_values=self.ell_values[:count], d_values=self.d_values[:count],
                        eps_values=self.eps_values[:count], keep_values=self.keep_values[:count],
                        uncolor_values=self.uncolor_values[:count], i_star=keep_star)

    def __eq__(self, other):
        if not isinstance(other, Schedule):
            return NotImplemented
        return ((self.d, self.eps, self.t, self.kappa, self.eta, self.i_star)
                == (other.d, other.eps, other.t, other.kappa, other.eta, other.i_star)
                and all(np.array_equal(getattr(self, name), getattr(other, name))
                        for name in ('ell_values', 'd_values', 'eps_values', 'keep_values', 'uncolor_values')))

    def __repr__(self):
        return f"<Schedule d={self.d:g} eps={self.eps:g} t={self.t} rows={len(self)} i_star={self.i_star}>"


def build_schedule(d: float, eps: float, t: int, max_iter: int = SCHEDULE_MAX_ITER,
                   eta: Optional[float] = None) -> Schedule:
    """
    Runs the recursion until d_i <= ell_i / 100.

    :param d: Initial degree bound, above 1.
    :param eps: Target slack, in (0, 1).
    :param t: Forbidden-subgraph parameter.
    :param max_iter: Row cap.
    :param eta: Overrides kappa / log d when given.
    :raises ParameterError: On parameters outside their domain, or when eta / ell_i reaches 1.
    :raises ScheduleDivergenceError: When the stopping row is not reached within max_iter rows.
    """
    if not d > 1:
        raise ParameterError(f"d must exceed 1, got {d}")
    if not 0 < eps < 1:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")
    if t < 1:
        raise ParameterError(f"t must be positive, got {t}")
    if max_iter < 1:
        raise ParameterError(f"max_iter must be positive, got {max_iter}")
    log_d = math.log(d)
    kappa = kappa_for(eps)
    if eta is None:
        eta = kappa / log_d
    if not eta > 0:
        raise ParameterError(f"eta must be positive, got {eta}")
    ell, di, drift = (4 + eps) * d / log_d, float(d), 0.0
    columns = ([], [], [], [], [])
    exponent = -1.0 / (200 * t)
    i_star = None
    for i in range(1, max_iter + 1):
        if not eta / ell < 1:
            raise ParameterError(f"eta/ell_{i} = {eta / ell:.6g} is not below 1")
        keep = keep_value(di, ell, eta)
        uncolor = uncolor_value(ell, eta, keep)
        for column, value in zip(columns, (ell, di, drift, keep, uncolor)):
            column.append(value)
        if di <= ell / STOP_RATIO:
            i_star = i
            break
        ell, di, drift = keep * ell, keep * uncolor * di, (1 + 3 * eta) * drift + di ** exponent
    arrays = [np.array(column, dtype=float) for column in columns]
    schedule = Schedule(d=float(d), eps=eps, t=t, kappa=kappa, eta=eta, ell_values=arrays[0], d_values=arrays[1],
                        eps_values=arrays[2], keep_values=arrays[3], uncolor_values=arrays[4], i_star=i_star)
    if i_star is None:
        last = schedule.row(len(schedule))
        raise ScheduleDivergenceError(f"no stopping row within {max_iter} rows; last row i={last.i} "
                                      f"ell={last.ell:.6g} d={last.d:.6g} eps={last.eps:.6g}", last_row=last)
    logger.debug(f"schedule d={d:g} eps={eps:g} t={t}: i*={i_star}, kappa={kappa:.6g}, eta={eta:.6g}")
    return schedule


def schedule_hypothesis_warnings(s: Schedule) -> List[str]:
    """
    Per-row numerical hypotheses of the round analysis that desk-sized schedules miss:
    4 eta d_i < ell_i < 100 d_i, 1/log^5 d_i < eta < 1/log d_i and eps_i <= 1/10, counted over
    the rows before i*. Also flags eps above 1/100.
    """
    stop = (s.i_star - 1) if s.i_star is not None else len(s)
    ell, d, drift = s.ell_values[:stop], s.d_values[:stop], s.eps_values[:stop]
    warnings = []
    if s.eps > 0.01:
        warnings.append(f"eps={s.eps:g} exceeds 1/100")
    window = np.count_nonzero(~((4 * s.eta * d < ell) & (ell < 100 * d)))
    if window:
        warnings.append(f"{window} rows with ell_i outside (4*eta*d_i, 100*d_i)")
    with np.errstate(divide='ignore', invalid='ignore'):
        log_d = np.log(d)
        eta_ok = (log_d > 0) & (1 / log_d ** 5 < s.eta) & (s.eta < 1 / log_d)
    if np.count_nonzero(~eta_ok):
        warnings.append(f"{np.count_nonzero(~eta_ok)} rows with eta outside (1/log^5 d_i, 1/log d_i)")
    drifting = np.count_nonzero(drift > 0.1)
    if drifting:
        warnings.append(f"{drifting} rows with eps_i above 1/10")
    return warnings


@dataclass(frozen=True)
class ScheduleViolation:
    """
    :param clause: 'I1', 'I2', 'I3', 'eps increasing', 'eps final' or 'slack'.
    :param exact: True for clauses that hold for every finite d; False for the asymptotic ones.
    """
    clause: str
    message: str
    exact: bool
    row: Optional[int] = None

    def __str__(self):
        return f"{self.clause}: {self.message}"


@dataclass(frozen=True)
class ScheduleReport:
    violations: Tuple[ScheduleViolation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def exact_ok(self) -> bool:
        return not any(v.exact for v in self.violations)

    def clauses(self) -> List[str]:
        return [v.clause for v in self.violations]


def i_star_bound(s: Schedule) -> float:
    """max(1, (10/kappa) log d log log d)."""
    log_d = math.log(s.d)
    if log_d <= 1:
        return 1.0
    return max(1.0, 10 / s.kappa * log_d * math.log(log_d))


def verify_schedule_invariants(s: Schedule, a: float = 0.01) -> ScheduleReport:
    """
    Checks a schedule against:
      I1              d_i/ell_i non-increasing;
      I2              ell_i >= d^(a eps) for every i <= i*;
      I3              i* exists and i* <= max(1, (10/kappa) log d log log d);
      eps increasing  eps_i strictly increasing;
      eps final       eps_{i*} <= 1/log d;
      slack           ell_{i*} (1 - 1/log d) / 2 >= 10 d_{i*}, when at least one round is scheduled.
    I2 and eps final only hold for d far beyond desk scale and are marked inexact.
    """
    violations = []
    ratio = s.ratio_values
    rising = np.flatnonzero(ratio[1:] > ratio[:-1])
    if rising.size:
        i = int(rising[0]) + 1
        violations.append(ScheduleViolation('I1', f"ratio rises from row {i} ({ratio[i - 1]:.12g}) to row {i + 1} "
                                                  f"({ratio[i]:.12g})", exact=True, row=i + 1))
    if s.i_star is None:
        violations.append(ScheduleViolation('I3', f"no stopping row among {len(s)} rows", exact=True))
    elif s.i_star > i_star_bound(s):
        violations.append(ScheduleViolation('I3', f"i*={s.i_star} exceeds {i_star_bound(s):.6g}", exact=True,
                                            row=s.i_star))
    flat = np.flatnonzero(s.eps_values[1:] <= s.eps_values[:-1])
    if flat.size:
        violations.append(ScheduleViolation('eps increasing', f"eps does not increase at row {int(flat[0]) + 2}",
                                            exact=True, row=int(flat[0]) + 2))
    last = s.i_star if s.i_star is not None else len(s)
    floor = s.d ** (a * s.eps)
    short = np.flatnonzero(s.ell_values[:last] < floor)
    if short.size:
        i = int(short[0]) + 1
        violations.append(ScheduleViolation('I2', f"ell_{i}={s.ell_values[i - 1]:.6g} below d^(a eps)={floor:.6g}",
                                            exact=False, row=i))
    if s.i_star is not None:
        row = s.row(s.i_star)
        log_d = math.log(s.d)
        if row.eps > 1 / log_d:
            violations.append(ScheduleViolation('eps final', f"eps_i*={row.eps:.6g} exceeds 1/log d={1 / log_d:.6g}",
                                                exact=False, row=row.i))
        if s.i_star > 1 and row.ell * (1 - 1 / log_d) / 2 < 10 * row.d:
            violations.append(ScheduleViolation('slack', f"ell_i*(1-1/log d)/2={row.ell * (1 - 1 / log_d) / 2:.6g} "
                                                         f"below 10 d_i*={10 * row.d:.6g}", exact=True, row=row.i))
    return ScheduleReport(tuple(violations))


@dataclass(frozen=True)
class RoundSummary:
    round: int
    colored: int
    attempts: int
    residual_vertices: int
    residual_max_degree: int
    min_list: int
    max_list: int


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """
    :param final_coloring: Total coloring of the pristine cover, in its own vertex and color ids.
    :param schedule_used: None when no round was needed.
    :param verified: Set only after is_proper passed on the pristine cover.
    """
    final_coloring: PartialColoring
    rounds_used: int
    per_round_attempts: Tuple[int, ...]
    schedule_used: Optional[Schedule]
    summaries: Tuple[RoundSummary, ...]
    finish_method: FinishMethod
    resamples_used: int
    verified: bool = field(default=False)


def is_finishable(cover: DPCover) -> bool:
    """Every list has at least 8 * Delta(H) colors, or greedy completion is guaranteed."""
    return resampling_precondition_holds(cover) or greedy_precondition_holds(cover)


def _summary(i: int, colored: int, attempts: int, residual: DPCover) -> RoundSummary:
    sizes = residual.list_sizes()
    return RoundSummary(round=i, colored=colored, attempts=attempts, residual_vertices=residual.n,
                        residual_max_degree=residual.max_color_degree(),
                        min_list=int(sizes.min()) if sizes.size else 0,
                        max_list=int(sizes.max()) if sizes.size else 0)


def _compose(final: PartialColoring, cover: DPCover, phi: PartialColoring) -> int:
    # phi is over cover's ids; final is over the pristine ids.
    domain = phi.domain()
    final.assignment[cover.vertex_origin[domain]] = cover.origin[phi.assignment[domain]]
    return int(domain.size)


def run_pipeline(cover: DPCover, eps: float, s: int = 1, t: int = 1, seed: int = 0,
                 max_attempts: int = MAX_ATTEMPTS, eta: Optional[float] = None, max_rounds: Optional[int] = None,
                 max_resamples: Optional[int] = None, max_iter: int = SCHEDULE_MAX_ITER,
                 guard: int = BRUTE_FORCE_GUARD, resample_factor: int = RESAMPLE_FACTOR,
                 tolerance: float = FLOAT_TOLERANCE) -> PipelineResult:
    """
    Colors the whole cover: nibble rounds along the schedule built from d = max(Delta(H), 2)
    until the residual is finishable, i* is reached or max_rounds rounds ran, then the finisher.
    Round i uses derive_seed(seed, ROUND_STREAM, i).

    :raises ContractViolation: When the cover is invalid.
    :raises RetryExhaustedError: When a round or the finisher runs out of attempts; tagged with the stage.
    :raises PipelineFailure: When the residual cannot be finished.
    :raises InternalError: When the composed coloring fails verification on the input cover.
    """
    violation = validate_cover(cover)
    if violation is not None:
        raise ContractViolation(f"invalid cover: {violation}", clause=violation.clause)
    if not 0 < eps < 1:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")
    if max_rounds is not None and max_rounds < 0:
        raise ParameterError(f"max_rounds must be nonnegative, got {max_rounds}")
    # d >= 2 keeps log d positive in the schedule.
    d = max(cover.max_color_degree(), 2)
    floor = (4 + eps) * d / math.log(d)
    if cover.n and cover.list_sizes().min() < floor:
        logger.warning(f"shortest list has {int(cover.list_sizes().min())} colors, below (4+eps)d/log d={floor:.6g}")

    # current is the residual cover; its origin maps lead back to the input ids.
    current = cover.detached()
    final = PartialColoring.empty(cover.n)
    schedule = None
    summaries = []
    rounds = 0
    while not is_finishable(current):
        # Built on first need only.
        if schedule is None:
            schedule = build_schedule(d, eps, t, max_iter=max_iter, eta=eta)
            for warning in schedule_hypothesis_warnings(schedule):
                logger.warning(f"schedule: {warning}")
        # Row i* is where the finisher takes over.
        if rounds + 1 >= schedule.i_star or (max_rounds is not None and rounds >= max_rounds):
            break
        rounds += 1
        row = schedule.row(rounds)
        p = RoundParams(d=row.d, ell=row.ell, eta=schedule.eta, eps=row.eps, s=s, t=t,
                        seed=derive_seed(seed, ROUND_STREAM, rounds))
        try:
            # The residual lists drift from ell_i at desk scale; the window is logged, not enforced.
            out = run_round_until_good(current, p, max_attempts=max_attempts, strict=False, validate=False,
                                       tolerance=tolerance)
        except RetryExhaustedError as e:
            raise e.at_stage(rounds) from e
        colored = _compose(final, current, out.phi)
        current = out.residual
        summaries.append(_summary(rounds, colored, out.attempts, current))
        logger.info(f"round {rounds}: colored {colored}, {current.n} left, attempts {out.attempts}, "
                    f"max degree {current.max_color_degree()}")

    try:
        report = finish(current, seed=derive_seed(seed, FINISH_STREAM), max_resamples=max_resamples, guard=guard,
                        resample_factor=resample_factor)
    except RetryExhaustedError as e:
        raise e.at_stage(rounds + 1) from e
    except PipelineFailure as e:
        raise PipelineFailure(e.message, stage=rounds + 1) from e
    _compose(final, current, report.coloring)

    # Final checks run on the input cover itself.
    if not final.is_total():
        raise InternalError(f"pipeline left {cover.n - len(final)} vertices uncolored")
    stray = ownership_violation(cover, final)
    if stray is not None:
        raise InternalError(f"pipeline gave vertex {stray} a color outside its list")
    conflict = coloring_conflicts(cover, final)
    if conflict is not None:
        raise InternalError(f"pipeline coloring has conflicting cover edge {conflict}")
    logger.info(f"pipeline colored {cover.n} vertices in {rounds} rounds, finished by {report.method.value}")
    return PipelineResult(final_coloring=final, rounds_used=rounds,
                          per_round_attempts=tuple(x.attempts for x in summaries), schedule_used=schedule,
                          summaries=tuple(summaries), finish_method=report.method,
                          resamples_used=report.resamples_used, verified=True)
