"""
Completing a coloring once lists dominate degrees.

Three methods, tried in this order by ``finish``:
- greedy, when every list is longer than the number of neighbors matched into it;
- conflict-edge resampling, when every list has at least 8 * Delta(H) colors;
- exhaustive backtracking, when the product of list sizes is under the guard.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from instance.config import BRUTE_FORCE_GUARD, RESAMPLE_FACTOR

from .cover import DPCover, PartialColoring, coloring_conflicts
from .error import ContractViolation, InstanceTooLargeError, InternalError, PipelineFailure, RetryExhaustedError

logger = logging.getLogger(__name__)

# Lists must be this many times longer than the cover's maximum degree for resampling.
RESAMPLING_SLACK = 8


class FinishMethod(str, Enum):
    GREEDY = 'greedy'
    RESAMPLING = 'resampling'
    BRUTE_FORCE = 'brute-force'


@dataclass(frozen=True, eq=False)
class FinishReport:
    """
    :param coloring: Total proper coloring of the finisher's input cover.
    :param resamples_used: Vertex pairs resampled (0 unless method is resampling).
    :param method: How the coloring was found.
    """
    coloring: PartialColoring
    resamples_used: int
    method: FinishMethod


def _verified(cover: DPCover, phi: PartialColoring, method: FinishMethod, resamples: int = 0) -> FinishReport:
    if not phi.is_total():
        raise InternalError(f"{method.value} finisher returned a partial coloring")
    conflict = coloring_conflicts(cover, phi)
    if conflict is not None:
        raise InternalError(f"{method.value} finisher returned a coloring with conflicting cover edge {conflict}")
    return FinishReport(coloring=phi, resamples_used=resamples, method=method)


def greedy_precondition_holds(cover: DPCover) -> bool:
    """Every list is longer than the number of neighbors whose matching with it is non-empty."""
    return bool((cover.list_sizes() > cover.matched_neighbor_counts()).all())


def resampling_precondition_holds(cover: DPCover) -> bool:
    """Every list is non-empty and has at least 8 * Delta(H) colors."""
    sizes = cover.list_sizes()
    return bool((sizes >= 1).all() and (sizes >= RESAMPLING_SLACK * cover.max_color_degree()).all())


def finish_greedy(cover: DPCover) -> FinishReport:
    """
    Colors vertices in id order with the lowest color that no colored neighbor blocks.
    :raises ContractViolation: When a vertex has no free color left.
    """
    phi = PartialColoring.empty(cover.n)
    blocked = np.zeros(cover.color_count, dtype=bool)
    for v in range(cover.n):
        row = cover.list_of(v)
        free = row[~blocked[row]]
        if not free.size:
            raise ContractViolation(f"greedy finisher is stuck at vertex {v}: every color of its list is blocked",
                                    vertex=v, clause='greedy')
        c = int(free[0])
        phi.assign(v, c)
        blocked[cover.color_neighbors(c)] = True
    return _verified(cover, phi, FinishMethod.GREEDY)


def finish_by_resampling(cover: DPCover, max_resamples: Optional[int] = None, seed: int = 0,
                         resample_factor: int = RESAMPLE_FACTOR) -> FinishReport:
    """
    Samples a uniform color for every vertex, then, while some cover edge joins two chosen
    colors, resamples both endpoint vertices of the conflicting edge with the lowest edge id.

    :param max_resamples: Cap on resample steps; defaults to resample_factor * (cover edges + 1).
    :param seed: RNG seed.
    :raises ContractViolation: When a list is empty or shorter than 8 * Delta(H).
    :raises RetryExhaustedError: When the cap is reached; the report holds the last conflicting edge.
    """
    sizes = cover.list_sizes()
    if cover.n and sizes.min() < 1:
        v = int(np.argmin(sizes))
        raise ContractViolation(f"vertex {v} has an empty list", vertex=v, clause='nonempty list')
    if not resampling_precondition_holds(cover):
        v = int(np.argmin(sizes))
        raise ContractViolation(f"list of vertex {v} has {int(sizes[v])} colors, fewer than "
                                f"{RESAMPLING_SLACK} * {cover.max_color_degree()}", vertex=v, clause='8 * Delta(H)')
    edges = cover.cover_edges()
    if max_resamples is None:
        max_resamples = resample_factor * (edges.shape[0] + 1)
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    def sample(vertices: np.ndarray) -> np.ndarray:
        offsets = rng.integers(0, sizes[vertices])
        return cover.list_colors[cover.list_indptr[vertices] + offsets]

    phi = PartialColoring.empty(cover.n)
    if cover.n:
        phi.assignment[:] = sample(np.arange(cover.n, dtype=np.int64))
    chosen = np.zeros(cover.color_count, dtype=bool)
    chosen[phi.assignment] = True
    for resamples in range(max_resamples + 1):
        hit = np.flatnonzero(chosen[edges[:, 0]] & chosen[edges[:, 1]]) if edges.size else edges
        if not hit.size:
            logger.debug(f"resampling finisher done after {resamples} resamples")
            return _verified(cover, phi, FinishMethod.RESAMPLING, resamples)
        if resamples == max_resamples:
            break
        owners = cover.owner[edges[hit[0]]]
        chosen[phi.assignment[owners]] = False
        phi.assignment[owners] = sample(owners)
        chosen[phi.assignment] = True
    edge = tuple(edges[hit[0]].tolist())
    raise RetryExhaustedError(f"resampling finisher hit its cap of {max_resamples} resamples; "
                              f"cover edge {edge} still conflicts", last_report=[edge])


def brute_force_dp_color(cover: DPCover, guard: int = BRUTE_FORCE_GUARD) -> Optional[PartialColoring]:
    """
    Exhaustive backtracking over vertices in id order and list order.
    :return: The lexicographically first proper total coloring, or None when there is none.
    :raises InstanceTooLargeError: When the product of list sizes exceeds the guard.
    """
    sizes = cover.list_sizes().tolist()
    if 0 in sizes:
        return None
    space = math.prod(sizes)
    if space > guard:
        raise InstanceTooLargeError(f"brute force would visit up to {space} assignments, guard is {guard}")
    rows = cover.lists()
    # Per color, how many colored vertices hold one of its cover neighbors.
    blocking = [0] * cover.color_count
    choice = [-1] * cover.n
    v = 0
    while 0 <= v < cover.n:
        row = rows[v]
        i = choice[v]
        if i >= 0:
            for x in cover.color_neighbors(row[i]).tolist():
                blocking[x] -= 1
        i += 1
        while i < len(row) and blocking[row[i]]:
            i += 1
        if i < len(row):
            choice[v] = i
            for x in cover.color_neighbors(row[i]).tolist():
                blocking[x] += 1
            v += 1
        else:
            choice[v] = -1
            v -= 1
    if v < 0:
        return None
    phi = PartialColoring(np.array([rows[u][choice[u]] for u in range(cover.n)], dtype=np.int64))
    return _verified(cover, phi, FinishMethod.BRUTE_FORCE).coloring


def finish(cover: DPCover, seed: int = 0, max_resamples: Optional[int] = None,
           guard: int = BRUTE_FORCE_GUARD, resample_factor: int = RESAMPLE_FACTOR) -> FinishReport:
    """
    Completes a coloring of the cover with the first method whose precondition holds: greedy,
    then resampling, then brute force. When the brute-force guard is exceeded a plain greedy
    pass is still attempted.
    :raises PipelineFailure: When the cover has no proper coloring or no method applies.
    :raises RetryExhaustedError: When resampling hits its cap.
    """
    if greedy_precondition_holds(cover):
        logger.info(f"finishing {cover.n} vertices greedily")
        return finish_greedy(cover)
    if resampling_precondition_holds(cover):
        logger.info(f"finishing {cover.n} vertices by resampling")
        return finish_by_resampling(cover, max_resamples=max_resamples, seed=seed, resample_factor=resample_factor)
    try:
        phi = brute_force_dp_color(cover, guard)
    except InstanceTooLargeError as e:
        logger.warning(f"no finisher precondition holds and {e.message}; trying greedy anyway")
        try:
            return finish_greedy(cover)
        except ContractViolation as stuck:
            raise PipelineFailure(f"residual cover cannot be finished: {stuck.message}")
    if phi is None:
        raise PipelineFailure(f"residual cover on {cover.n} vertices has no proper coloring")
    logger.info(f"finished {cover.n} vertices by brute force")
    return FinishReport(coloring=phi, resamples_used=0, method=FinishMethod.BRUTE_FORCE)
