"""
Simple undirected graphs over integer vertex ids, instance generators, and brute-force
K_{1,s,t} subgraph detection.

Graphs are stored in compressed sparse row form: ``indices[indptr[v]:indptr[v + 1]]`` is the
sorted neighbor list of ``v``. Sorted rows make adjacency a binary search.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from instance.config import REGULAR_MAX_RESTARTS

from .error import MalformedInputError, ParameterError, RetryExhaustedError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Graph:
    """
    Immutable simple graph. Safe to share between threads.
    :param n: Number of vertices; ids are 0..n-1.
    :param indptr: Row pointers, length n + 1.
    :param indices: Concatenated sorted neighbor lists.
    """
    n: int
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def m(self) -> int:
        return int(self.indices.size // 2)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        i = int(np.searchsorted(row, v))
        return i < row.size and int(row[i]) == v

    def adjacency(self) -> list:
        """Per-vertex sorted neighbor lists as plain Python lists."""
        return [self.neighbors(v).tolist() for v in range(self.n)]

    def edge_array(self) -> np.ndarray:
        """All edges (u, v) with u < v as an (m, 2) array in lexicographic order."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
        mask = rows < self.indices
        return np.column_stack((rows[mask], self.indices[mask]))

    def edges(self) -> Iterator[Tuple[int, int]]:
        for u, v in self.edge_array().tolist():
            yield u, v

    def induced(self, vertices: Sequence[int]) -> Tuple['Graph', np.ndarray]:
        """
        Induced subgraph on the given vertices, re-indexed densely in increasing id order.
        :return: The subgraph and the array mapping new ids to old ids.
        """
        old = np.unique(np.asarray(vertices, dtype=np.int64))
        new_id = np.full(self.n, -1, dtype=np.int64)
        new_id[old] = np.arange(old.size, dtype=np.int64)
        pairs = self.edge_array()
        if pairs.size:
            pairs = new_id[pairs]
            pairs = pairs[(pairs >= 0).all(axis=1)]
        return _from_pairs(int(old.size), pairs), old

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges())
        return g

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __repr__(self):
        return f"<Graph n={self.n} m={self.m}>"


def _from_pairs(n: int, pairs: np.ndarray) -> Graph:
    # pairs: (m, 2) canonical (u < v), duplicate-free.
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    both = np.concatenate((pairs, pairs[:, ::-1]))
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    counts = np.bincount(both[:, 0], minlength=n) if both.size else np.zeros(n, dtype=np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return Graph(n=n, indptr=indptr, indices=both[:, 1].copy())


def build_graph(n: int, edges: Iterable[Tuple[int, int]]) -> Graph:
    """
    Builds a simple graph, collapsing duplicate edges.
    :param n: Vertex count.
    :param edges: Pairs of vertex ids.
    :return: The graph.
    :raises MalformedInputError: On a negative vertex count, an endpoint outside [0, n) or a self-loop.
    """
    if n < 0:
        raise MalformedInputError(f"vertex count must be nonnegative, got {n}")
    pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    if pairs.size:
        bad = np.flatnonzero(((pairs < 0) | (pairs >= n)).any(axis=1))
        if bad.size:
            u, v = pairs[bad[0]].tolist()
            raise MalformedInputError(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
        loops = np.flatnonzero(pairs[:, 0] == pairs[:, 1])
        if loops.size:
            v = int(pairs[loops[0], 0])
            raise MalformedInputError(f"self-loop at vertex {v}")
        pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    return _from_pairs(n, pairs)


def max_degree(g: Graph) -> int:
    """Maximum degree; 0 for edgeless and empty graphs."""
    return int(g.degrees().max()) if g.n else 0


def gen_random_regular(n: int, d: int, seed: int, max_restarts: int = REGULAR_MAX_RESTARTS) -> Graph:
    """
    Random simple d-regular graph from the pairing model.

    Each pass shuffles the unmatched points and pairs them up; a pair becomes an edge unless it
    is a loop or repeats an edge, and the rejected points go back for the next pass. When no
    suitable pair is left the whole pairing restarts. Not exactly uniform, deterministic per seed.

    :param n: Vertex count.
    :param d: Degree.
    :param seed: RNG seed.
    :param max_restarts: Cap on full restarts.
    :raises ParameterError: When n*d is odd or d >= n.
    :raises RetryExhaustedError: When the restart cap is exceeded.
    """
    if n < 0 or d < 0:
        raise ParameterError(f"n and d must be nonnegative, got n={n}, d={d}")
    if (n * d) % 2:
        raise ParameterError(f"n*d must be even, got n={n}, d={d}")
    if d >= n and not (n == 0 and d == 0):
        raise ParameterError(f"degree {d} needs more than {n} vertices")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    for restart in range(max_restarts + 1):
        pairs = _try_pairing(n, d, rng)
        if pairs is not None:
            if restart:
                logger.debug(f"random regular graph n={n} d={d} needed {restart} restarts")
            g = _from_pairs(n, pairs)
            assert (g.degrees() == d).all()
            return g
    raise RetryExhaustedError(f"no simple {d}-regular pairing on {n} vertices after {max_restarts} restarts")


def _try_pairing(n: int, d: int, rng: np.random.Generator) -> Optional[np.ndarray]:
    edges = set()
    points = np.repeat(np.arange(n, dtype=np.int64), d)
    while points.size:
        leftover = defaultdict(int)
        for u, v in rng.permutation(points).reshape(-1, 2).tolist():
            if u > v:
                u, v = v, u
            if u != v and (u, v) not in edges:
                edges.add((u, v))
            else:
                leftover[u] += 1
                leftover[v] += 1
        if not leftover:
            break
        if not _has_suitable_pair(edges, leftover):
            return None
        points = np.repeat(np.array(sorted(leftover), dtype=np.int64),
                           [leftover[v] for v in sorted(leftover)])
    return np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)


def _has_suitable_pair(edges: set, leftover: dict) -> bool:
    vertices = sorted(leftover)
    for i, u in enumerate(vertices):
        for v in vertices[i + 1:]:
            if (u, v) not in edges:
                return True
    return False


def gen_complete_tripartite(a: int, s: int, t: int) -> Graph:
    """
    Complete tripartite graph K_{a,s,t}. Part sizes a, s, t occupy ids [0, a), [a, a+s), [a+s, a+s+t).
    :raises ParameterError: When a part is empty.
    """
    if min(a, s, t) < 1:
        raise ParameterError(f"part sizes must be positive, got ({a}, {s}, {t})")
    parts = [range(0, a), range(a, a + s), range(a + s, a + s + t)]
    edges = [(u, v) for i, p in enumerate(parts) for q in parts[i + 1:] for u in p for v in q]
    return build_graph(a + s + t, edges)


def contains_K1st(g: Graph, s: int, t: int) -> bool:
    """
    Whether g has a (not necessarily induced) subgraph isomorphic to K_{1,s,t}.

    For every center c the neighborhood N(c) is searched for K_{s,t}: subsets S of N(c) of size
    min(s, t) are grown one vertex at a time while tracking their common neighbors inside N(c),
    and the search succeeds when max(s, t) common neighbors remain. Cost grows combinatorially
    in s and t; callers keep them small.
    """
    if s < 1 or t < 1:
        raise ParameterError(f"s and t must be positive, got s={s}, t={t}")
    small, large = min(s, t), max(s, t)
    adjacency = [set(g.neighbors(v).tolist()) for v in range(g.n)]
    for c in range(g.n):
        hood = adjacency[c]
        if len(hood) < s + t:
            continue
        # Vertices of N(c) with at least `large` neighbors inside N(c) can sit in S.
        local = {v: adjacency[v] & hood for v in hood}
        candidates = sorted(v for v in hood if len(local[v]) >= large)
        if len(candidates) >= small and _grow(candidates, local, small, large, 0, None):
            return True
    return False


def _grow(candidates, local, remaining, large, start, common) -> bool:
    if remaining == 0:
        return len(common) >= large
    for i in range(start, len(candidates)):
        if len(candidates) - i < remaining:
            return False
        v = candidates[i]
        narrowed = local[v] if common is None else common & local[v]
        if len(narrowed) >= large and _grow(candidates, local, remaining - 1, large, i + 1, narrowed):
            return True
    return False
