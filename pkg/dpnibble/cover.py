"""
DP-covers (correspondence covers) and partial colorings.

A cover of a graph G gives every vertex v a list L(v) of colors and joins colors by the edges
of a cover graph H. Colors are global dense ids; lists partition them. Between two lists the
cover edges form a matching, which is empty when the two vertices are not adjacent in G. A
partial coloring picks at most one color from each list and is proper when no cover edge joins
two picked colors.

Colors, lists and cover edges are kept in CSR arrays so a round can sweep every color with
array operations.
"""

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .error import ContractViolation, MalformedInputError, ParameterError, UndefinedAverageError
from .graph import Graph, _from_pairs, build_graph

UNASSIGNED = -1


@dataclass(frozen=True, eq=False)
class DPCover:
    """
    Immutable DP-cover.
    :param base: The graph being colored.
    :param owner: Color id -> vertex id.
    :param list_indptr: Row pointers into list_colors, one row per vertex.
    :param list_colors: Concatenated sorted lists.
    :param cover_indptr: Row pointers into cover_indices, one row per color.
    :param cover_indices: Concatenated sorted cover neighbor lists.
    :param origin: Color id -> color id in the cover this one was restricted from (the pristine one).
    :param vertex_origin: Vertex id -> vertex id in the pristine cover.
    """
    base: Graph
    owner: np.ndarray
    list_indptr: np.ndarray
    list_colors: np.ndarray
    cover_indptr: np.ndarray
    cover_indices: np.ndarray
    origin: np.ndarray
    vertex_origin: np.ndarray

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def color_count(self) -> int:
        return int(self.owner.size)

    def list_of(self, v: int) -> np.ndarray:
        return self.list_colors[self.list_indptr[v]:self.list_indptr[v + 1]]

    def list_sizes(self) -> np.ndarray:
        return np.diff(self.list_indptr)

    def lists(self) -> list:
        return [self.list_of(v).tolist() for v in range(self.n)]

    def color_neighbors(self, c: int) -> np.ndarray:
        return self.cover_indices[self.cover_indptr[c]:self.cover_indptr[c + 1]]

    def color_degrees(self) -> np.ndarray:
        return np.diff(self.cover_indptr)

    def max_color_degree(self) -> int:
        """Maximum degree of the cover graph H."""
        return int(self.color_degrees().max()) if self.color_count else 0

    def edge_sources(self) -> np.ndarray:
        """Row id of every entry of cover_indices, for per-color aggregation with bincount."""
        return np.repeat(np.arange(self.color_count, dtype=np.int64), self.color_degrees())

    def cover_edges(self) -> np.ndarray:
        """
        Cover edges (c, c') with c < c' as an (m, 2) array in lexicographic order.
        The row index is the edge id.
        """
        src = self.edge_sources()
        mask = src < self.cover_indices
        return np.column_stack((src[mask], self.cover_indices[mask]))

    def cover_graph(self) -> Graph:
        """H as a Graph over color ids."""
        return _from_pairs(self.color_count, self.cover_edges())

    def matched_neighbor_counts(self) -> np.ndarray:
        """Per vertex, the number of neighbors u whose matching with L(v) is non-empty."""
        edges = self.cover_edges()
        counts = np.zeros(self.n, dtype=np.int64)
        if edges.size:
            pairs = np.unique(np.sort(self.owner[edges], axis=1), axis=0)
            counts += np.bincount(pairs[:, 0], minlength=self.n)
            counts += np.bincount(pairs[:, 1], minlength=self.n)
        return counts

    def detached(self) -> 'DPCover':
        """The same cover with identity origin maps."""
        return replace(self, origin=np.arange(self.color_count, dtype=np.int64),
                       vertex_origin=np.arange(self.n, dtype=np.int64))

    def __eq__(self, other):
        if not isinstance(other, DPCover):
            return NotImplemented
        return self.base == other.base and all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ('owner', 'list_indptr', 'list_colors', 'cover_indptr', 'cover_indices',
                         'origin', 'vertex_origin'))

    def __repr__(self):
        return (f"<DPCover n={self.n} colors={self.color_count} "
                f"cover_edges={self.cover_indices.size // 2}>")


def make_cover(base: Graph, lists: Sequence[Sequence[int]], cover_edges: Iterable[Tuple[int, int]],
               origin: Optional[np.ndarray] = None,
               vertex_origin: Optional[np.ndarray] = None) -> DPCover:
    """
    Assembles a cover from per-vertex lists and cover edges. Duplicate cover edges are collapsed.
    Only ranges are checked here; run validate_cover for the cover axioms.
    :param base: The graph being colored.
    :param lists: lists[v] is the list of color ids of vertex v.
    :param cover_edges: Pairs of color ids.
    :raises MalformedInputError: When the lists do not match the graph, or a color id is out of
        range, unowned, owned twice, or a cover edge is a loop.
    """
    if len(lists) != base.n:
        raise MalformedInputError(f"expected {base.n} lists, got {len(lists)}")
    sizes = np.array([len(row) for row in lists], dtype=np.int64)
    list_indptr = np.zeros(base.n + 1, dtype=np.int64)
    np.cumsum(sizes, out=list_indptr[1:])
    list_colors = (np.concatenate([np.sort(np.asarray(row, dtype=np.int64)) for row in lists])
                   if base.n else np.zeros(0, dtype=np.int64))
    color_count = int(list_colors.size)
    if color_count and (list_colors.min() < 0 or list_colors.max() >= color_count):
        raise MalformedInputError(f"color ids must lie in [0, {color_count})")
    seen = np.bincount(list_colors, minlength=color_count)
    if color_count and (seen != 1).any():
        c = int(np.flatnonzero(seen != 1)[0])
        raise MalformedInputError(f"color {c} appears in {int(seen[c])} lists; lists must partition the colors")
    owner = np.empty(color_count, dtype=np.int64)
    owner[list_colors] = np.repeat(np.arange(base.n, dtype=np.int64), sizes)

    if not isinstance(cover_edges, np.ndarray):
        cover_edges = list(cover_edges)
    pairs = np.asarray(cover_edges, dtype=np.int64).reshape(-1, 2)
    if pairs.size:
        if pairs.min() < 0 or pairs.max() >= color_count:
            raise MalformedInputError(f"cover edge endpoint outside [0, {color_count})")
        loops = np.flatnonzero(pairs[:, 0] == pairs[:, 1])
        if loops.size:
            raise MalformedInputError(f"cover edge loop at color {int(pairs[loops[0], 0])}")
        pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    h = _from_pairs(color_count, pairs)
    return DPCover(
        base=base, owner=owner, list_indptr=list_indptr, list_colors=list_colors,
        cover_indptr=h.indptr, cover_indices=h.indices,
        origin=np.arange(color_count, dtype=np.int64) if origin is None else np.asarray(origin, dtype=np.int64),
        vertex_origin=(np.arange(base.n, dtype=np.int64) if vertex_origin is None
                       else np.asarray(vertex_origin, dtype=np.int64)))


@dataclass(frozen=True)
class CoverViolation:
    """
    First violated cover axiom.
    :param clause: One of "partition", "list not independent", "not a matching", "matching on non-edge".
    :param witness: Colors/vertices showing the violation.
    """
    clause: str
    message: str
    witness: tuple

    def __str__(self):
        return f"{self.clause}: {self.message}"


def validate_cover(c: DPCover) -> Optional[CoverViolation]:
    """
    Checks the three cover axioms: lists partition the colors, every list is independent in H,
    and cover edges between two lists form a matching that is empty across non-edges of G.
    :return: None when the cover is valid, otherwise the first violation with a witness.
    """
    # Partition: every color appears in exactly one list, the list of its owner.
    counts = np.bincount(c.list_colors, minlength=c.color_count)
    if c.color_count and (counts != 1).any():
        col = int(np.flatnonzero(counts != 1)[0])
        return CoverViolation('partition', f"color {col} appears in {int(counts[col])} lists", (col,))
    listed_owner = np.repeat(np.arange(c.n, dtype=np.int64), c.list_sizes())
    mismatch = np.flatnonzero(c.owner[c.list_colors] != listed_owner)
    if mismatch.size:
        col = int(c.list_colors[mismatch[0]])
        return CoverViolation('partition', f"color {col} is listed at vertex {int(listed_owner[mismatch[0]])} "
                                           f"but owned by {int(c.owner[col])}", (col,))

    edges = c.cover_edges()
    if not edges.size:
        return None
    owners = c.owner[edges]
    same = np.flatnonzero(owners[:, 0] == owners[:, 1])
    if same.size:
        a, b = edges[same[0]].tolist()
        return CoverViolation('list not independent',
                              f"cover edge ({a}, {b}) lies inside the list of vertex {int(owners[same[0], 0])}",
                              (a, b))

    # Matching: a color has at most one neighbor in any other single list.
    src = c.edge_sources()
    key = src * max(c.n, 1) + c.owner[c.cover_indices]
    order = np.argsort(key, kind='stable')
    dup = np.flatnonzero(np.diff(key[order]) == 0)
    if dup.size:
        i, j = order[dup[0]], order[dup[0] + 1]
        col = int(src[i])
        return CoverViolation('not a matching',
                              f"color {col} has neighbors {int(c.cover_indices[i])} and {int(c.cover_indices[j])} "
                              f"in the list of vertex {int(c.owner[c.cover_indices[i]])}",
                              (col, int(c.cover_indices[i]), int(c.cover_indices[j])))

    adjacent = np.array([c.base.has_edge(int(u), int(v)) for u, v in np.unique(owners, axis=0)], dtype=bool)
    if not adjacent.all():
        u, v = np.unique(owners, axis=0)[np.flatnonzero(~adjacent)[0]].tolist()
        hit = np.flatnonzero((owners[:, 0] == u) & (owners[:, 1] == v))[0]
        a, b = edges[hit].tolist()
        return CoverViolation('matching on non-edge',
                              f"cover edge ({a}, {b}) joins vertices {u} and {v}, which are not adjacent",
                              (a, b, u, v))
    return None


def identity_cover(g: Graph, k: int) -> DPCover:
    """
    List-coloring cover with identical lists: vertex v owns colors v*k .. v*k+k-1 and on every
    edge uv color j of u is matched to color j of v.
    """
    if k < 1:
        raise ParameterError(f"k must be positive, got {k}")
    lists = [list(range(v * k, v * k + k)) for v in range(g.n)]
    pairs = g.edge_array()
    j = np.arange(k, dtype=np.int64)
    edges = np.column_stack(((pairs[:, 0:1] * k + j).ravel(), (pairs[:, 1:2] * k + j).ravel()))
    return make_cover(g, lists, edges)


def twisted_cycle_cover(n: int, k: int, twists: Iterable[int]) -> DPCover:
    """
    Identity cover of the cycle C_n except on the twisted edges, where color j of vertex i is
    matched to color (j+1) mod k of vertex i+1. Edge i joins vertices i and (i+1) mod n.
    """
    if n < 3 or k < 1:
        raise ParameterError(f"need n >= 3 and k >= 1, got n={n}, k={k}")
    twists = sorted(set(twists))
    if any(i < 0 or i >= n for i in twists):
        raise ParameterError(f"twist indices must lie in [0, {n}), got {twists}")
    g = build_graph(n, [(i, (i + 1) % n) for i in range(n)])
    lists = [list(range(v * k, v * k + k)) for v in range(n)]
    edges = []
    for i in range(n):
        u, v = i, (i + 1) % n
        shift = 1 if i in twists else 0
        edges.extend((u * k + j, v * k + (j + shift) % k) for j in range(k))
    return make_cover(g, lists, edges)


def random_cover(g: Graph, k: int, p: float, seed: int) -> DPCover:
    """
    Cover with k colors per vertex and a random partial matching on every edge: for edge uv (in
    lexicographic edge order) a random permutation pairs the colors of u with distinct colors of
    v, and each pair is kept independently with probability p.
    """
    if k < 1:
        raise ParameterError(f"k must be positive, got {k}")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    lists = [list(range(v * k, v * k + k)) for v in range(g.n)]
    edges = []
    j = np.arange(k, dtype=np.int64)
    for u, v in g.edges():
        perm = rng.permutation(k)
        marks = rng.random(k) < p
        edges.append(np.column_stack((u * k + j[marks], v * k + perm[marks])))
    return make_cover(g, lists, np.concatenate(edges) if edges else [])


class PartialColoring:
    """
    A partial map from vertices to colors, stored as an array with UNASSIGNED (-1) holes.
    Mutated only by the round or finisher that owns it.
    """

    def __init__(self, assignment: np.ndarray):
        self.assignment = np.asarray(assignment, dtype=np.int64)

    @classmethod
    def empty(cls, n: int) -> 'PartialColoring':
        return cls(np.full(n, UNASSIGNED, dtype=np.int64))

    @property
    def n(self) -> int:
        return int(self.assignment.size)

    def assign(self, v: int, color: int) -> None:
        self.assignment[v] = color

    def color_of(self, v: int) -> Optional[int]:
        c = int(self.assignment[v])
        return None if c == UNASSIGNED else c

    def is_assigned(self, v: int) -> bool:
        return int(self.assignment[v]) != UNASSIGNED

    def domain(self) -> np.ndarray:
        return np.flatnonzero(self.assignment != UNASSIGNED)

    def image(self) -> np.ndarray:
        return self.assignment[self.assignment != UNASSIGNED]

    def is_total(self) -> bool:
        return bool((self.assignment != UNASSIGNED).all())

    def copy(self) -> 'PartialColoring':
        return PartialColoring(self.assignment.copy())

    def __eq__(self, other):
        if not isinstance(other, PartialColoring):
            return NotImplemented
        return np.array_equal(self.assignment, other.assignment)

    def __len__(self):
        return int(self.domain().size)

    def __repr__(self):
        return f"<PartialColoring assigned={len(self)}/{self.n}>"


def _image_mask(c: DPCover, phi: PartialColoring) -> np.ndarray:
    mask = np.zeros(c.color_count, dtype=bool)
    mask[phi.image()] = True
    return mask


def ownership_violation(c: DPCover, phi: PartialColoring) -> Optional[int]:
    """First vertex whose assigned color is not in its list, or None."""
    dom = phi.domain()
    colors = phi.assignment[dom]
    bad = (colors < 0) | (colors >= c.color_count)
    bad[~bad] = c.owner[colors[~bad]] != dom[~bad]
    return int(dom[np.flatnonzero(bad)[0]]) if bad.any() else None


def coloring_conflicts(c: DPCover, phi: PartialColoring) -> Optional[Tuple[int, int]]:
    """First cover edge (lowest edge id) with both endpoints in the image of phi, or None."""
    edges = c.cover_edges()
    if not edges.size:
        return None
    mask = _image_mask(c, phi)
    hit = np.flatnonzero(mask[edges[:, 0]] & mask[edges[:, 1]])
    return tuple(edges[hit[0]].tolist()) if hit.size else None


def is_proper(c: DPCover, phi: PartialColoring) -> bool:
    """True iff the image of phi is independent in the cover graph."""
    return coloring_conflicts(c, phi) is None


def blocked_colors(c: DPCover, phi: PartialColoring) -> np.ndarray:
    """Mask of colors with at least one cover neighbor in the image of phi."""
    blocked = np.zeros(c.color_count, dtype=bool)
    for x in phi.image().tolist():
        blocked[c.color_neighbors(x)] = True
    return blocked


def residual_list(c: DPCover, phi: PartialColoring, v: int) -> np.ndarray:
    """
    Colors of L(v) with no cover neighbor in the image of phi: the colors v can still take.
    :raises ContractViolation: When v is already colored.
    """
    if phi.is_assigned(v):
        raise ContractViolation(f"vertex {v} is already colored", vertex=v, clause='unassigned')
    row = c.list_of(v)
    return row[~blocked_colors(c, phi)[row]]


def avg_color_degree(c: DPCover, v: int) -> float:
    """
    Mean cover degree over L(v), in double precision.
    :raises UndefinedAverageError: When L(v) is empty.
    """
    row = c.list_of(v)
    if not row.size:
        raise UndefinedAverageError(f"list of vertex {v} is empty", vertex=v, clause='nonempty list')
    return float(c.color_degrees()[row].mean())


def avg_color_degrees(c: DPCover) -> np.ndarray:
    """avg_color_degree for every vertex at once; NaN for empty lists."""
    sizes = c.list_sizes()
    totals = np.bincount(c.owner, weights=c.color_degrees(), minlength=c.n) if c.color_count else np.zeros(c.n)
    with np.errstate(invalid='ignore', divide='ignore'):
        return np.where(sizes > 0, totals / np.maximum(sizes, 1), np.nan)


def restrict_cover(c: DPCover, keep_vertices: Iterable[int],
                   keep_colors: Optional[Mapping[int, Iterable[int]]] = None,
                   phi: Optional[PartialColoring] = None) -> DPCover:
    """
    Induced cover on the kept colors over the induced base graph.

    Vertex and color ids are re-indexed densely in increasing order; ``vertex_origin`` and
    ``origin`` of the result point back to the ids of the pristine cover.

    :param keep_vertices: Vertices to keep.
    :param keep_colors: Per kept vertex, the colors to keep; a missing vertex keeps its whole list.
    :param phi: When given, kept vertices must be uncolored under it.
    :raises ContractViolation: When kept colors are not a subset of the vertex's list, or a kept
        vertex is colored under phi.
    """
    vertex_mask = np.zeros(c.n, dtype=bool)
    vertex_mask[np.asarray(list(keep_vertices), dtype=np.int64)] = True
    if phi is not None:
        colored = np.flatnonzero(vertex_mask & (phi.assignment != UNASSIGNED))
        if colored.size:
            v = int(colored[0])
            raise ContractViolation(f"vertex {v} is colored and cannot be kept", vertex=v, clause='unassigned')
    color_mask = vertex_mask[c.owner] if c.color_count else np.zeros(0, dtype=bool)
    for v, colors in (keep_colors or {}).items():
        if not vertex_mask[v]:
            continue
        colors = np.asarray(list(colors), dtype=np.int64)
        row = c.list_of(v)
        if colors.size and not np.isin(colors, row).all():
            raise ContractViolation(f"kept colors of vertex {v} are not a subset of its list",
                                    vertex=v, clause='subset')
        color_mask[row] = False
        color_mask[colors] = True
    return restrict_by_mask(c, vertex_mask, color_mask)


def restrict_by_mask(c: DPCover, vertex_mask: np.ndarray, color_mask: np.ndarray) -> DPCover:
    """
    restrict_cover on boolean masks. Colors of dropped vertices must already be masked out.
    """
    base, old_vertices = c.base.induced(np.flatnonzero(vertex_mask))
    old_colors = np.flatnonzero(color_mask)
    new_color = np.full(c.color_count, -1, dtype=np.int64)
    new_color[old_colors] = np.arange(old_colors.size, dtype=np.int64)
    new_vertex = np.full(c.n, -1, dtype=np.int64)
    new_vertex[old_vertices] = np.arange(old_vertices.size, dtype=np.int64)

    owner = new_vertex[c.owner[old_colors]]
    order = np.argsort(owner, kind='stable')
    list_indptr = np.zeros(base.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(owner, minlength=base.n) if owner.size else np.zeros(base.n, dtype=np.int64),
              out=list_indptr[1:])
    edges = c.cover_edges()
    if edges.size:
        edges = new_color[edges]
        edges = edges[(edges >= 0).all(axis=1)]
    h = _from_pairs(int(old_colors.size), edges)
    return DPCover(base=base, owner=owner, list_indptr=list_indptr,
                   list_colors=np.arange(old_colors.size, dtype=np.int64)[order],
                   cover_indptr=h.indptr, cover_indices=h.indices,
                   origin=c.origin[old_colors], vertex_origin=c.vertex_origin[old_vertices])
