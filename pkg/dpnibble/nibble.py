"""
One round of the wasteful coloring procedure, its derived parameters, the per-vertex checks on
its outcome, a resampling loop that repeats the round until every check passes, and a
Monte-Carlo harness for the quantities the round is built around.

A round on a cover with parameters (d, ell, eta):

    S1  activate every color independently with probability eta/ell;
    S2  flip an equalizing coin per color, succeeding with probability keep / (1 - eta/ell)^deg(c),
        so every color is kept with probability exactly keep;
    S3  K(v): colors of v with no activated cover neighbor and a successful coin;
    S4  color v with its lowest activated kept color, if any;
    S5  L'(v): kept colors of v with at most 2*d' kept neighbors among uncolored vertices.

Vertices whose activated colors were all removed stay uncolored even when they could take a
color: the procedure is wasteful on purpose, trading list size for control over degrees.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List

import numpy as np

from instance.config import FLOAT_TOLERANCE, MAX_ATTEMPTS, STATS_CHUNK_TRIALS

from .cover import (UNASSIGNED, DPCover, PartialColoring, avg_color_degrees, is_proper, restrict_by_mask,
                    validate_cover)
from .error import ContractViolation, InternalError, ParameterError, RetryExhaustedError

logger = logging.getLogger(__name__)

# Seed streams for derived seeds.
ATTEMPT_STREAM = 1
STATS_STREAM = 2


def derive_seed(seed: int, *counters: int) -> int:
    """
    Child seed for (seed, counters...), stable across platforms and independent of call order.
    """
    state = np.random.SeedSequence([seed, *counters]).generate_state(1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))


def keep_value(d: float, ell: float, eta: float) -> float:
    """(1 - eta/ell)^(2d), evaluated as exp(2d * log1p(-eta/ell))."""
    return math.exp(2.0 * d * math.log1p(-eta / ell))


def uncolor_value(ell: float, eta: float, keep: float) -> float:
    """(1 - eta/ell)^(keep * ell / 2)."""
    return math.exp(keep * ell / 2.0 * math.log1p(-eta / ell))


@dataclass(frozen=True)
class RoundParams:
    """
    Inputs to one round.
    :param d: Degree bound; the cover must have maximum degree at most 2d.
    :param ell: Nominal list size.
    :param eta: Activation scale; colors are activated with probability eta/ell.
    :param eps: Drift of list sizes and degrees accumulated by earlier rounds.
    :param s: Forbidden-subgraph parameter (K_{1,s,t}).
    :param t: Forbidden-subgraph parameter (K_{1,s,t}).
    :param seed: RNG seed.
    """
    d: float
    ell: float
    eta: float
    eps: float = 0.0
    s: int = 1
    t: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.d > 0:
            raise ParameterError(f"d must be positive, got {self.d}")
        if not self.ell > 0:
            raise ParameterError(f"ell must be positive, got {self.ell}")
        if not self.eta >= 0:
            raise ParameterError(f"eta must be nonnegative, got {self.eta}")
        if not self.eta / self.ell < 1:
            raise ParameterError(f"eta/ell must be below 1, got {self.eta}/{self.ell}")
        if not self.eps >= 0:
            raise ParameterError(f"eps must be nonnegative, got {self.eps}")
        if self.s < 1 or self.t < 1:
            raise ParameterError(f"s and t must be positive, got s={self.s}, t={self.t}")
        if self.seed < 0:
            raise ParameterError(f"seed must be nonnegative, got {self.seed}")

    @property
    def activation(self) -> float:
        return self.eta / self.ell

    @property
    def beta(self) -> float:
        return self.d ** (-1.0 / (200 * self.t))

    @property
    def beta1(self) -> float:
        return self.d ** (-1.0 / (100 * self.t))

    @property
    def drift(self) -> float:
        """(1 + 3 eta) eps + beta: the eps of the next round."""
        return (1 + 3 * self.eta) * self.eps + self.beta

    def with_seed(self, seed: int) -> 'RoundParams':
        return replace(self, seed=seed)


@dataclass(frozen=True)
class RoundDerived:
    """keep, uncolor, ell' = keep*ell and d' = keep*uncolor*d for a set of round parameters."""
    keep: float
    uncolor: float
    ell_prime: float
    d_prime: float

    @classmethod
    def from_params(cls, p: RoundParams) -> 'RoundDerived':
        keep = keep_value(p.d, p.ell, p.eta)
        uncolor = uncolor_value(p.ell, p.eta, keep)
        return cls(keep=keep, uncolor=uncolor, ell_prime=keep * p.ell, d_prime=keep * uncolor * p.d)


def keep_factor(p: RoundParams) -> float:
    """Probability that a color is kept."""
    return RoundDerived.from_params(p).keep


def uncolor_factor(p: RoundParams) -> float:
    """Upper bound on the probability that a vertex stays uncolored."""
    return RoundDerived.from_params(p).uncolor


def round_hypothesis_warnings(p: RoundParams) -> List[str]:
    """
    Numerical hypotheses of the iteration step that can be checked at runtime. Desk-sized
    instances usually miss some of them; they are reported, not enforced.
    """
    warnings = []
    log_d = math.log(p.d) if p.d > 1 else 0.0
    if not 4 * p.eta * p.d < p.ell < 100 * p.d:
        warnings.append(f"ell={p.ell:.6g} outside (4*eta*d, 100*d) = ({4 * p.eta * p.d:.6g}, {100 * p.d:.6g})")
    if not p.s <= p.d ** 0.1:
        warnings.append(f"s={p.s} exceeds d^(1/10)={p.d ** 0.1:.6g}")
    if log_d <= 0 or not 1 / log_d ** 5 < p.eta < 1 / log_d:
        warnings.append(f"eta={p.eta:.6g} outside (1/log^5 d, 1/log d)")
    if p.eps > 0.1:
        warnings.append(f"eps={p.eps:.6g} exceeds 1/10")
    return warnings


@dataclass(frozen=True)
class ConditionViolation:
    """
    A vertex failing a checked condition.
    :param vertex: Vertex id in the cover the round ran on.
    :param clause: '(i)'..'(iv)' for round outcomes, '(6)'..'(8)' for round inputs.
    :param value: Observed value.
    :param bound: The bound it was compared against.
    """
    vertex: int
    clause: str
    value: float
    bound: float

    def __str__(self):
        return f"vertex {self.vertex} fails {self.clause}: {self.value:.6g} vs bound {self.bound:.6g}"


@dataclass(frozen=True, eq=False)
class RoundStats:
    """
    Per-vertex bookkeeping of one round, indexed by the vertices of the input cover.

    ell, k, ell_prime are |L(v)|, |K(v)|, |L'(v)|; avgdeg is the average residual degree over L'(v)
    (NaN when L'(v) is empty); lam/delta and lam_prime/delta_prime are the normalized list size
    and padded average degree before and after the round; e_k, e_u, e_ku count E_K(v), E_U(v)
    and their intersection; normalized_degree is |E_K(v) and E_U(v)| / k(v).
    """
    ell: np.ndarray
    k: np.ndarray
    ell_prime: np.ndarray
    avgdeg: np.ndarray
    lam: np.ndarray
    delta: np.ndarray
    lam_prime: np.ndarray
    delta_prime: np.ndarray
    e_k: np.ndarray
    e_u: np.ndarray
    e_ku: np.ndarray
    normalized_degree: np.ndarray
    max_residual_degree: np.ndarray
    colored: np.ndarray

    # CSV column name -> attribute.
    COLUMNS = (('ell', 'ell'), ('k', 'k'), ('ellPrime', 'ell_prime'), ('avgdeg', 'avgdeg'),
               ('lambda', 'lam'), ('delta', 'delta'), ('lambdaPrime', 'lam_prime'),
               ('deltaPrime', 'delta_prime'), ('eK', 'e_k'), ('eU', 'e_u'), ('eKU', 'e_ku'))

    @property
    def n(self) -> int:
        return int(self.ell.size)

    def aggregate(self) -> Dict[str, tuple]:
        """min, max and mean of every CSV column, ignoring NaN; NaN for empty columns."""
        summary = {}
        for name, attr in self.COLUMNS:
            values = np.asarray(getattr(self, attr), dtype=float)
            values = values[~np.isnan(values)]
            summary[name] = ((float(values.min()), float(values.max()), float(values.mean()))
                             if values.size else (math.nan, math.nan, math.nan))
        return summary

    def __eq__(self, other):
        if not isinstance(other, RoundStats):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f), equal_nan=True)
                   for f in self.__dataclass_fields__)


@dataclass(frozen=True, eq=False)
class RoundOutput:
    """
    Outcome of one round.
    :param phi: Colors assigned this round, over the vertices of the input cover.
    :param pruned_lists: L'(v) for every uncolored vertex, in the input cover's color ids.
    :param residual: The cover induced by the pruned lists of uncolored vertices, re-indexed densely.
    :param attempts: Number of rounds drawn until this one passed the checks.
    """
    params: RoundParams
    derived: RoundDerived
    phi: PartialColoring
    pruned_lists: Dict[int, np.ndarray]
    residual: DPCover
    stats: RoundStats
    activated: np.ndarray
    kept: np.ndarray
    attempts: int = 1

    @property
    def uncolored(self) -> np.ndarray:
        return np.flatnonzero(self.phi.assignment == UNASSIGNED)

    def __eq__(self, other):
        if not isinstance(other, RoundOutput):
            return NotImplemented
        return (self.params == other.params and self.phi == other.phi and self.residual == other.residual
                and self.stats == other.stats and self.attempts == other.attempts
                and self.pruned_lists.keys() == other.pruned_lists.keys()
                and all(np.array_equal(a, other.pruned_lists[v]) for v, a in self.pruned_lists.items()))


@dataclass
class _Sweep:
    # Per-color state of one execution of S1-S5, before the residual is materialized.
    activated: np.ndarray
    kept: np.ndarray
    phi: PartialColoring
    in_uncolored: np.ndarray
    kept_uncolored_neighbors: np.ndarray
    kept_neighbors: np.ndarray = field(default=None)
    uncolored_neighbors: np.ndarray = field(default=None)


def _sweep(cover: DPCover, p: RoundParams, derived: RoundDerived, src: np.ndarray) -> _Sweep:
    # All activations and coins are drawn before anything is computed from them.
    rng = np.random.default_rng(np.random.SeedSequence(p.seed))
    count = cover.color_count
    activation_draw = rng.random(count)
    coin_draw = rng.random(count)
    dst = cover.cover_indices

    # S1
    activated = activation_draw < p.activation
    # S2: the coin tops up the chance that no neighbor is active, so every color ends at keep.
    coin = coin_draw < np.exp((2.0 * p.d - cover.color_degrees()) * math.log1p(-p.activation))
    # S3: kept when the coin succeeds and no cover neighbor is active. src/dst are the ends of
    # every directed cover edge.
    active_neighbors = np.bincount(src, weights=activated[dst], minlength=count)
    kept = coin & (active_neighbors == 0)
    # S4: lowest activated kept color per vertex.
    phi = PartialColoring.empty(cover.n)
    candidates = np.flatnonzero(activated & kept)
    if candidates.size:
        owners, first = np.unique(cover.owner[candidates], return_index=True)
        phi.assignment[owners] = candidates[first]
    # Per color: does its owner stay uncolored after S4.
    in_uncolored = (phi.assignment == UNASSIGNED)[cover.owner]
    kept_uncolored = kept & in_uncolored
    kept_uncolored_neighbors = np.bincount(src, weights=kept_uncolored[dst], minlength=count)
    return _Sweep(activated=activated, kept=kept, phi=phi, in_uncolored=in_uncolored,
                  kept_uncolored_neighbors=kept_uncolored_neighbors)


def _per_vertex(cover: DPCover, weights: np.ndarray) -> np.ndarray:
    if not cover.color_count:
        return np.zeros(cover.n)
    return np.bincount(cover.owner, weights=weights, minlength=cover.n)


def _edge_counts(cover: DPCover, sweep: _Sweep, src: np.ndarray) -> None:
    dst = cover.cover_indices
    count = cover.color_count
    sweep.kept_neighbors = np.bincount(src, weights=sweep.kept[dst], minlength=count)
    sweep.uncolored_neighbors = np.bincount(src, weights=sweep.in_uncolored[dst], minlength=count)


def _run(cover: DPCover, p: RoundParams, derived: RoundDerived, tolerance: float) -> RoundOutput:
    src = cover.edge_sources()
    dst = cover.cover_indices
    sweep = _sweep(cover, p, derived, src)
    _edge_counts(cover, sweep, src)
    # S5: drop kept colors with more than 2d' kept neighbors among uncolored vertices.
    pruned = sweep.kept & (sweep.kept_uncolored_neighbors <= 2.0 * derived.d_prime + tolerance)
    in_residual = pruned & sweep.in_uncolored
    uncolored_vertex = sweep.phi.assignment == UNASSIGNED
    # The residual cover keeps only uncolored vertices and their surviving colors, re-indexed.
    residual = restrict_by_mask(cover, uncolored_vertex, in_residual)
    pruned_lists = {}
    for v in np.flatnonzero(uncolored_vertex).tolist():
        row = cover.list_of(v)
        pruned_lists[v] = row[in_residual[row]]

    # Degree of every color inside the residual cover.
    residual_degree = (np.bincount(src, weights=in_residual[dst], minlength=cover.color_count)
                       if cover.color_count else np.zeros(0))
    stats = _round_stats(cover, p, derived, sweep, pruned, residual_degree)
    return RoundOutput(params=p, derived=derived, phi=sweep.phi, pruned_lists=pruned_lists, residual=residual,
                       stats=stats, activated=sweep.activated, kept=sweep.kept)


def _round_stats(cover, p, derived, sweep, pruned, residual_degree) -> RoundStats:
    ell = cover.list_sizes().astype(float)
    k = _per_vertex(cover, sweep.kept)
    ell_prime = _per_vertex(cover, pruned)
    residual_total = _per_vertex(cover, np.where(pruned, residual_degree, 0.0))
    with np.errstate(invalid='ignore', divide='ignore'):
        avgdeg = np.where(ell_prime > 0, residual_total / np.maximum(ell_prime, 1), np.nan)
    avg_in = np.nan_to_num(avg_color_degrees(cover))
    lam = ell / p.ell
    delta = lam * avg_in + (1 - lam) * 2 * p.d
    lam_prime = ell_prime / derived.ell_prime
    delta_prime = lam_prime * np.nan_to_num(avgdeg) + (1 - lam_prime) * 2 * derived.d_prime
    e_k = _per_vertex(cover, np.where(sweep.kept, sweep.kept_neighbors, 0.0))
    e_u = _per_vertex(cover, sweep.uncolored_neighbors)
    e_ku = _per_vertex(cover, np.where(sweep.kept, sweep.kept_uncolored_neighbors, 0.0))
    with np.errstate(invalid='ignore', divide='ignore'):
        normalized = np.where(k > 0, e_ku / np.maximum(k, 1), np.nan)
    max_residual = np.zeros(cover.n)
    if cover.color_count:
        np.maximum.at(max_residual, cover.owner, np.where(pruned, residual_degree, 0.0))
    return RoundStats(ell=ell, k=k, ell_prime=ell_prime, avgdeg=avgdeg, lam=lam, delta=delta,
                      lam_prime=lam_prime, delta_prime=delta_prime, e_k=e_k, e_u=e_u, e_ku=e_ku,
                      normalized_degree=normalized, max_residual_degree=max_residual,
                      colored=sweep.phi.assignment != UNASSIGNED)


def input_condition_report(cover: DPCover, p: RoundParams,
                           tolerance: float = FLOAT_TOLERANCE) -> List[ConditionViolation]:
    """
    Checks the round inputs: (6) max cover degree at most 2d, (7) every list size within
    [(1-eps) ell/2, (1+eps) ell], (8) every average color-degree at most (2 - (1-eps) ell/|L(v)|) d.
    Also asserts that (8) implies delta(v) <= (1+eps) d, which is pure arithmetic.
    :raises InternalError: When the implication fails.
    """
    report = []
    degrees = cover.color_degrees()
    if degrees.size and degrees.max() > 2 * p.d + tolerance:
        c = int(np.argmax(degrees))
        report.append(ConditionViolation(int(cover.owner[c]), '(6)', float(degrees[c]), 2 * p.d))
    sizes = cover.list_sizes().astype(float)
    low, high = (1 - p.eps) * p.ell / 2, (1 + p.eps) * p.ell
    for v in np.flatnonzero((sizes < low - tolerance) | (sizes > high + tolerance)).tolist():
        report.append(ConditionViolation(v, '(7)', float(sizes[v]), low if sizes[v] < low else high))
    avg = avg_color_degrees(cover)
    with np.errstate(invalid='ignore', divide='ignore'):
        bound = (2 - (1 - p.eps) * p.ell / sizes) * p.d
    satisfied = sizes > 0
    satisfied[satisfied] = avg[satisfied] <= bound[satisfied] + tolerance
    for v in np.flatnonzero((sizes > 0) & ~satisfied).tolist():
        report.append(ConditionViolation(v, '(8)', float(avg[v]), float(bound[v])))
    lam = sizes / p.ell
    delta = lam * np.nan_to_num(avg) + (1 - lam) * 2 * p.d
    slack = tolerance * np.maximum(1.0, lam) * max(1.0, p.d)
    broken = np.flatnonzero(satisfied & (delta > (1 + p.eps) * p.d + slack))
    if broken.size:
        v = int(broken[0])
        raise InternalError(f"vertex {v} satisfies the averaged-degree condition but delta={delta[v]:.12g} "
                            f"exceeds (1+eps)d={(1 + p.eps) * p.d:.12g}")
    return report


def _check_inputs(cover: DPCover, p: RoundParams, strict: bool, validate: bool, tolerance: float) -> None:
    if validate:
        violation = validate_cover(cover)
        if violation is not None:
            raise ContractViolation(f"invalid cover: {violation}", clause=violation.clause)
    report = input_condition_report(cover, p, tolerance)
    hard = [r for r in report if r.clause == '(6)']
    if hard:
        raise ContractViolation(f"cover degree too large for d={p.d:.6g}: {hard[0]}", vertex=hard[0].vertex,
                                clause='(6)')
    windows = [r for r in report if r.clause == '(7)']
    if windows and strict:
        raise ContractViolation(f"list size outside the round window: {windows[0]}", vertex=windows[0].vertex,
                                clause='(7)')
    averaged = [r for r in report if r.clause == '(8)']
    if windows:
        logger.warning(f"{len(windows)} vertices outside the list-size window, first: {windows[0]}")
    if averaged:
        logger.warning(f"{len(averaged)} vertices above the averaged-degree bound, first: {averaged[0]}")


def run_round(cover: DPCover, p: RoundParams, strict: bool = True, validate: bool = True,
              tolerance: float = FLOAT_TOLERANCE) -> RoundOutput:
    """
    Runs one round (S1-S5) on the cover. A pure function of (cover, params).

    :param strict: When True, list sizes outside the round window raise; otherwise they are logged.
    :param validate: Run validate_cover on the input first.
    :raises ContractViolation: On an invalid cover, a cover degree above 2d, or (strict) a list
        size outside [(1-eps) ell/2, (1+eps) ell].
    """
    _check_inputs(cover, p, strict, validate, tolerance)
    return _checked_run(cover, p, RoundDerived.from_params(p), tolerance)


def single_round_report(cover: DPCover, p: RoundParams) -> RoundStats:
    """Per-vertex stats of one round, with list-size window violations logged instead of raised."""
    return run_round(cover, p, strict=False).stats


def _checked_run(cover: DPCover, p: RoundParams, derived: RoundDerived, tolerance: float) -> RoundOutput:
    out = _run(cover, p, derived, tolerance)
    if not is_proper(cover, out.phi):
        raise InternalError(f"round with seed {p.seed} produced an improper coloring")
    _assert_drift_implication(out, p, tolerance)
    return out


def _clause_bounds(p: RoundParams, derived: RoundDerived):
    drift = p.drift
    return drift, (1 + drift) * derived.ell_prime, (1 - drift) * derived.ell_prime / 2


def _assert_drift_implication(out: RoundOutput, p: RoundParams, tolerance: float) -> None:
    # A padded average degree below (1 + drift) d' forces clauses (ii) and (iv).
    drift = p.drift
    stats = out.stats
    uncolored = out.uncolored
    small = uncolored[(stats.ell_prime[uncolored] > 0)
                      & (stats.delta_prime[uncolored] <= (1 + drift) * out.derived.d_prime)]
    if not small.size:
        return
    small = set(small.tolist())
    failing = [r for r in check_conditions(out, p, tolerance)
               if r.clause in ('(ii)', '(iv)') and r.vertex in small]
    if failing:
        raise InternalError(f"padded degree bound holds but {failing[0]}")


def check_conditions(out: RoundOutput, p: RoundParams,
                     tolerance: float = FLOAT_TOLERANCE) -> List[ConditionViolation]:
    """
    Checks every uncolored vertex of a round outcome against:
      (i)   |L'(v)| <= (1 + drift) ell'
      (ii)  |L'(v)| >= (1 - drift) ell'/2, and L'(v) non-empty
      (iii) every color of L'(v) has residual degree <= 2 d'
      (iv)  average residual degree <= (2 - (1 - drift) ell'/|L'(v)|) d'
    where drift = (1 + 3 eta) eps + beta.
    :return: Violations, empty when the round is good.
    """
    derived = out.derived
    drift, upper, lower = _clause_bounds(p, derived)
    stats = out.stats
    report = []
    for v in out.uncolored.tolist():
        size = float(stats.ell_prime[v])
        if size > upper + tolerance:
            report.append(ConditionViolation(v, '(i)', size, upper))
        if size == 0 or size < lower - tolerance:
            report.append(ConditionViolation(v, '(ii)', size, lower))
        if stats.max_residual_degree[v] > 2 * derived.d_prime + tolerance:
            report.append(ConditionViolation(v, '(iii)', float(stats.max_residual_degree[v]), 2 * derived.d_prime))
        if size > 0:
            bound = (2 - (1 - drift) * derived.ell_prime / size) * derived.d_prime
            if stats.avgdeg[v] > bound + tolerance:
                report.append(ConditionViolation(v, '(iv)', float(stats.avgdeg[v]), bound))
    return report


def run_round_until_good(cover: DPCover, p: RoundParams, max_attempts: int = MAX_ATTEMPTS,
                         strict: bool = True, validate: bool = True,
                         tolerance: float = FLOAT_TOLERANCE) -> RoundOutput:
    """
    Repeats the round with fresh seeds until check_conditions passes. Attempt 1 uses p.seed,
    attempt a >= 2 uses derive_seed(p.seed, ATTEMPT_STREAM, a).

    :return: The first good outcome, with ``attempts`` set.
    :raises RetryExhaustedError: After max_attempts bad outcomes; carries the last report.
    """
    if max_attempts < 1:
        raise ParameterError(f"max_attempts must be positive, got {max_attempts}")
    _check_inputs(cover, p, strict, validate, tolerance)
    derived = RoundDerived.from_params(p)
    report = []
    for attempt in range(1, max_attempts + 1):
        seed = p.seed if attempt == 1 else derive_seed(p.seed, ATTEMPT_STREAM, attempt)
        out = _checked_run(cover, p.with_seed(seed), derived, tolerance)
        report = check_conditions(out, p, tolerance)
        if not report:
            return replace(out, attempts=attempt)
        logger.debug(f"round attempt {attempt} rejected: {len(report)} violations, first: {report[0]}")
    raise RetryExhaustedError(f"round failed its checks {max_attempts} times; last: {report[0]}",
                              last_report=report)


@dataclass(frozen=True, eq=False)
class StatisticsReport:
    """
    Empirical means (with standard errors) of per-vertex round quantities next to the values the
    analysis predicts for them.

    k_theory = keep * ell(v) is the exact mean of k(v). eku_theory = keep^2 * uncolor * ell(v) * avgdeg(v)
    is the reference for |E_K(v) and E_U(v)|, and eku_bound multiplies it by (1 + eta*eps + 5*beta1).
    uncolored_freq is the empirical probability that v stays uncolored (at most ``uncolor``).
    k_tail_freq is the frequency of |k(v) - keep*ell(v)| >= beta1*keep*ell(v).
    """
    trials: int
    keep: float
    uncolor: float
    beta1: float
    ell: np.ndarray
    avgdeg: np.ndarray
    k_mean: np.ndarray
    k_stderr: np.ndarray
    k_theory: np.ndarray
    ek_mean: np.ndarray
    ek_stderr: np.ndarray
    ek_theory: np.ndarray
    eku_mean: np.ndarray
    eku_stderr: np.ndarray
    eku_theory: np.ndarray
    eku_bound: np.ndarray
    uncolored_freq: np.ndarray
    k_tail_freq: np.ndarray

    COLUMNS = ('ell', 'avgdeg', 'k_mean', 'k_stderr', 'k_theory', 'ek_mean', 'ek_stderr', 'ek_theory',
               'eku_mean', 'eku_stderr', 'eku_theory', 'eku_bound', 'uncolored_freq', 'k_tail_freq')

    @property
    def n(self) -> int:
        return int(self.ell.size)

    def k_within(self, z: float, tolerance: float = FLOAT_TOLERANCE) -> np.ndarray:
        """Mask of vertices whose mean k(v) lies within z standard errors of keep*ell(v)."""
        return np.abs(self.k_mean - self.k_theory) <= z * self.k_stderr + tolerance


_ACCUMULATED = ('k', 'ek', 'eku', 'uncolored', 'tail')


def _trial_chunk(cover: DPCover, p: RoundParams, derived: RoundDerived, seeds: List[int]) -> Dict[str, np.ndarray]:
    src = cover.edge_sources()
    sums = {name: np.zeros(cover.n) for name in _ACCUMULATED}
    squares = {name: np.zeros(cover.n) for name in ('k', 'ek', 'eku')}
    expected = derived.keep * cover.list_sizes()
    for seed in seeds:
        sweep = _sweep(cover, p.with_seed(seed), derived, src)
        _edge_counts(cover, sweep, src)
        values = {
            'k': _per_vertex(cover, sweep.kept),
            'ek': _per_vertex(cover, np.where(sweep.kept, sweep.kept_neighbors, 0.0)),
            'eku': _per_vertex(cover, np.where(sweep.kept, sweep.kept_uncolored_neighbors, 0.0)),
            'uncolored': (sweep.phi.assignment == UNASSIGNED).astype(float),
        }
        values['tail'] = (np.abs(values['k'] - expected) >= p.beta1 * expected).astype(float)
        for name in _ACCUMULATED:
            sums[name] += values[name]
        for name in squares:
            squares[name] += values[name] ** 2
    return {**{f'sum_{k}': v for k, v in sums.items()}, **{f'sq_{k}': v for k, v in squares.items()}}


def round_statistics(cover: DPCover, p: RoundParams, trials: int, threads: int = 1,
                     chunk_trials: int = STATS_CHUNK_TRIALS, validate: bool = True) -> StatisticsReport:
    """
    Monte-Carlo estimate of per-vertex round quantities over independent seeded rounds.

    Trial i uses derive_seed(p.seed, STATS_STREAM, i). Trials are grouped into fixed-size chunks,
    chunks run on a thread pool and their sums are combined in chunk order, so the report is
    identical for every thread count.
    :raises ParameterError: When trials < 1.
    """
    if trials < 1:
        raise ParameterError(f"trials must be positive, got {trials}")
    if threads < 1 or chunk_trials < 1:
        raise ParameterError(f"threads and chunk size must be positive, got {threads}, {chunk_trials}")
    _check_inputs(cover, p, strict=False, validate=validate, tolerance=FLOAT_TOLERANCE)
    derived = RoundDerived.from_params(p)
    seeds = [derive_seed(p.seed, STATS_STREAM, i) for i in range(trials)]
    chunks = [seeds[i:i + chunk_trials] for i in range(0, trials, chunk_trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda chunk: _trial_chunk(cover, p, derived, chunk), chunks))
    total = {key: sum((part[key] for part in parts[1:]), parts[0][key].copy()) for key in parts[0]}

    def mean_and_stderr(name):
        mean = total[f'sum_{name}'] / trials
        if trials == 1:
            return mean, np.zeros(cover.n)
        variance = np.maximum(total[f'sq_{name}'] - trials * mean ** 2, 0.0) / (trials - 1)
        return mean, np.sqrt(variance / trials)

    ell = cover.list_sizes().astype(float)
    avgdeg = np.nan_to_num(avg_color_degrees(cover))
    k_mean, k_stderr = mean_and_stderr('k')
    ek_mean, ek_stderr = mean_and_stderr('ek')
    eku_mean, eku_stderr = mean_and_stderr('eku')
    eku_theory = derived.keep ** 2 * derived.uncolor * ell * avgdeg
    logger.info(f"round statistics: {trials} trials on {cover.n} vertices, keep={derived.keep:.6g}")
    return StatisticsReport(
        trials=trials, keep=derived.keep, uncolor=derived.uncolor, beta1=p.beta1, ell=ell, avgdeg=avgdeg,
        k_mean=k_mean, k_stderr=k_stderr, k_theory=derived.keep * ell,
        ek_mean=ek_mean, ek_stderr=ek_stderr, ek_theory=derived.keep ** 2 * ell * avgdeg,
        eku_mean=eku_mean, eku_stderr=eku_stderr, eku_theory=eku_theory,
        eku_bound=eku_theory * (1 + p.eta * p.eps + 5 * p.beta1),
        uncolored_freq=total['sum_uncolored'] / trials, k_tail_freq=total['sum_tail'] / trials)
