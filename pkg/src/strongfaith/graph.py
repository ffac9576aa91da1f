"""DAGs over a fixed topological order, generators and d-separation.

Vertices are labelled ``1..p`` and every edge ``(i, j)`` has ``i < j``, so
the identity is a topological order.  Vertex sets are handled both as
Python sets and as integer bitmasks (bit ``v - 1`` for vertex ``v``); the
bitmask form is what the Monte Carlo kernels consume.
"""

from __future__ import annotations

import itertools as itr
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import FrozenSet, Iterable, Iterator, Tuple

import numpy as np

from .errors import (EnumerationTooLargeError, InvalidDensityError,
                     InvalidQueryError, InvalidSizeError, ParseError)

Edge = Tuple[int, int]

#: default cap on the number of candidate (i, j, S) triples in full mode
FULL_ENUMERATION_BUDGET = 1_000_000

MODES = ("full", "restricted", "adjacency")


@dataclass(frozen=True)
class Dag:
    p: int
    edges: Tuple[Edge, ...]

    def __post_init__(self):
        if self.p < 1:
            raise InvalidSizeError(f"p must be >= 1, got {self.p}")
        edges = tuple(sorted((int(i), int(j)) for i, j in self.edges))
        if len(set(edges)) != len(edges):
            raise InvalidQueryError("duplicate edge")
        for i, j in edges:
            if not 1 <= i < j <= self.p:
                raise InvalidQueryError(
                    f"edge ({i}, {j}) violates 1 <= i < j <= p={self.p}")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, p: int, edges: Iterable[Edge]) -> "Dag":
        return cls(p, tuple(edges))

    @property
    def vertices(self) -> range:
        return range(1, self.p + 1)

    @cached_property
    def edge_set(self) -> FrozenSet[Edge]:
        return frozenset(self.edges)

    @cached_property
    def edge_index(self) -> dict:
        return {e: k for k, e in enumerate(self.edges)}

    @cached_property
    def parent_masks(self) -> Tuple[int, ...]:
        """``parent_masks[v - 1]`` is the bitmask of parents of ``v``."""
        masks = [0] * self.p
        for i, j in self.edges:
            masks[j - 1] |= 1 << (i - 1)
        return tuple(masks)

    @cached_property
    def child_masks(self) -> Tuple[int, ...]:
        masks = [0] * self.p
        for i, j in self.edges:
            masks[i - 1] |= 1 << (j - 1)
        return tuple(masks)

    def parents(self, v: int) -> FrozenSet[int]:
        return frozenset(mask_to_set(self.parent_masks[v - 1]))

    def children(self, v: int) -> FrozenSet[int]:
        return frozenset(mask_to_set(self.child_masks[v - 1]))

    def adjacent(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edge_set

    def neighbor_mask(self, v: int) -> int:
        return self.parent_masks[v - 1] | self.child_masks[v - 1]

    def degree(self, v: int) -> int:
        return bin(self.neighbor_mask(v)).count("1")

    def adjacency_matrix(self) -> np.ndarray:
        """Boolean p x p matrix, entry [i-1, j-1] set for edge i -> j."""
        out = np.zeros((self.p, self.p), dtype=bool)
        for i, j in self.edges:
            out[i - 1, j - 1] = True
        return out

    def __str__(self):
        return f"Dag(p={self.p}, edges={list(self.edges)})"


def mask_to_set(mask: int) -> list:
    out = []
    v = 1
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return out


def set_to_mask(vertices: Iterable[int]) -> int:
    mask = 0
    for v in vertices:
        mask |= 1 << (v - 1)
    return mask


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def make_tree(p: int, shape_seed=None, levels: int | None = None) -> Dag:
    """Random rooted tree with all edges directed away from the root.

    The number of levels is uniform on ``{2, ..., p}`` (unless forced with
    ``levels``); the root sits alone on the first level and the other
    ``p - 1`` nodes are spread over the remaining levels as a uniformly
    random composition.  Every non-root node picks its parent uniformly
    from the previous level.  Nodes are numbered level by level.
    """
    if p < 2:
        raise InvalidSizeError(f"a tree needs p >= 2, got {p}")
    rng = _as_rng(shape_seed)
    if levels is None:
        levels = int(rng.integers(2, p + 1))
    elif not 2 <= levels <= p:
        raise InvalidSizeError(f"levels must lie in [2, {p}], got {levels}")
    # composition of p - 1 into levels - 1 positive parts
    cuts = np.sort(rng.choice(np.arange(1, p - 1), size=levels - 2,
                              replace=False)) if levels > 2 else np.array([], int)
    bounds = [0, *cuts.tolist(), p - 1]
    sizes = [1] + [b - a for a, b in zip(bounds[:-1], bounds[1:])]
    edges = []
    start_prev, start = 1, 2
    for size_prev, size in zip(sizes[:-1], sizes[1:]):
        for v in range(start, start + size):
            parent = start_prev + int(rng.integers(size_prev))
            edges.append((parent, v))
        start_prev, start = start, start + size
    return Dag(p, tuple(edges))


def make_cycle(p: int) -> Dag:
    """Skeleton is a p-cycle: a directed line 1 -> ... -> p plus 1 -> p."""
    if p < 3:
        raise InvalidSizeError(f"a cycle needs p >= 3, got {p}")
    edges = [(i, i + 1) for i in range(1, p)] + [(1, p)]
    return Dag(p, tuple(edges))


def make_bipartite(p: int) -> Dag:
    """K_{2,p-2}: source 1, sink p, every middle node on a path 1 -> j -> p."""
    if p < 4:
        raise InvalidSizeError(f"K_(2,p-2) needs p >= 4, got {p}")
    edges = [(1, j) for j in range(2, p)] + [(j, p) for j in range(2, p)]
    return Dag(p, tuple(edges))


def make_random(p: int, expected_neighborhood: float, seed=None) -> Dag:
    """Independent edges i -> j (i < j) with probability en / (p - 1)."""
    if p < 2:
        raise InvalidSizeError(f"a random DAG needs p >= 2, got {p}")
    prob = expected_neighborhood / (p - 1)
    if not 0.0 < prob <= 1.0:
        raise InvalidDensityError(
            f"edge probability {prob} (en={expected_neighborhood}, p={p}) "
            "outside (0, 1]")
    rng = _as_rng(seed)
    draws = rng.random(comb(p, 2))
    pairs = itr.combinations(range(1, p + 1), 2)
    return Dag(p, tuple(e for e, u in zip(pairs, draws) if u < prob))


def make_complete(p: int) -> Dag:
    return Dag(p, tuple(itr.combinations(range(1, p + 1), 2)))


def make_family(family: str, p: int, seed=None, en: float | None = None) -> Dag:
    if family == "tree":
        return make_tree(p, seed)
    if family == "cycle":
        return make_cycle(p)
    if family == "bipartite":
        return make_bipartite(p)
    if family == "random":
        if en is None:
            raise InvalidDensityError("random family needs an expected neighborhood size")
        return make_random(p, en, seed)
    if family == "complete":
        return make_complete(p)
    raise InvalidQueryError(f"unknown family {family!r}")


# --------------------------------------------------------------------------
# structural queries
# --------------------------------------------------------------------------

def max_degree(g: Dag) -> int:
    """Largest in-degree plus out-degree over all vertices."""
    return max((g.degree(v) for v in g.vertices), default=0)


def is_tree(g: Dag) -> bool:
    """Connected rooted tree with every edge pointing away from the root."""
    if len(g.edges) != g.p - 1:
        return False
    roots = [v for v in g.vertices if g.parent_masks[v - 1] == 0]
    if len(roots) != 1:
        return False
    return all(bin(m).count("1") <= 1 for m in g.parent_masks)


def unshielded_triples(g: Dag) -> list:
    """All (i, j, k) with i < j non-adjacent and both adjacent to k."""
    out = []
    for i, j in itr.combinations(g.vertices, 2):
        if g.adjacent(i, j):
            continue
        common = g.neighbor_mask(i) & g.neighbor_mask(j)
        out.extend((i, j, k) for k in mask_to_set(common))
    return out


def ancestor_mask(g: Dag, mask: int) -> int:
    """Bitmask of ``mask`` together with all ancestors of its vertices."""
    result = mask
    frontier = mask
    while frontier:
        nxt = 0
        for v in mask_to_set(frontier):
            nxt |= g.parent_masks[v - 1]
        frontier = nxt & ~result
        result |= nxt
    return result


def _check_query(g: Dag, i: int, j: int, s) -> frozenset:
    s = frozenset(s)
    if i == j:
        raise InvalidQueryError(f"i and j must differ, got {i}")
    if i in s or j in s:
        raise InvalidQueryError("conditioning set must exclude i and j")
    for v in (i, j, *s):
        if not 1 <= v <= g.p:
            raise InvalidQueryError(f"vertex {v} outside 1..{g.p}")
    return s


def d_connected_mask(g: Dag, i: int, s_mask: int) -> int:
    """Vertices outside S d-connected to ``i`` given S (Bayes-ball reachability).

    Visits (vertex, direction) states: ``up`` means the ball arrived from a
    child, ``down`` from a parent.  A non-conditioned vertex passes the ball
    anywhere when it came up, and only downwards when it came down; a
    conditioned vertex bounces a downward ball back up to its parents and
    blocks an upward one.  A downward ball also turns back up at any
    ancestor of S, which opens colliders with a conditioned descendant.
    """
    anc = ancestor_mask(g, s_mask)
    visited_up = 0
    visited_down = 0
    reach = 0
    todo_up = 1 << (i - 1)
    todo_down = 0
    while todo_up or todo_down:
        todo_up &= ~visited_up
        todo_down &= ~visited_down
        visited_up |= todo_up
        visited_down |= todo_down
        new_up = 0
        new_down = 0
        for v in mask_to_set(todo_up & ~s_mask):
            new_up |= g.parent_masks[v - 1]
            new_down |= g.child_masks[v - 1]
        for v in mask_to_set(todo_down & ~s_mask):
            new_down |= g.child_masks[v - 1]
        for v in mask_to_set(todo_down & anc):
            new_up |= g.parent_masks[v - 1]
        reach |= (todo_up | todo_down) & ~s_mask
        todo_up = new_up
        todo_down = new_down
    return reach & ~(1 << (i - 1))


def d_separated_bayes_ball(g: Dag, i: int, j: int, s=()) -> bool:
    s = _check_query(g, i, j, s)
    return not (d_connected_mask(g, i, set_to_mask(s)) >> (j - 1)) & 1


def d_separated_moral(g: Dag, i: int, j: int, s=()) -> bool:
    """d-separation through the moralized ancestral graph.

    Restrict to ancestors of {i, j} and S, marry parents with a common
    child, drop directions, delete S and test whether i still reaches j.
    """
    s = _check_query(g, i, j, s)
    keep = ancestor_mask(g, set_to_mask({i, j} | s))
    nodes = mask_to_set(keep)
    nbrs = {v: set() for v in nodes}
    for a, b in g.edges:
        if (keep >> (a - 1)) & 1 and (keep >> (b - 1)) & 1:
            nbrs[a].add(b)
            nbrs[b].add(a)
    for v in nodes:
        pa = [u for u in mask_to_set(g.parent_masks[v - 1])]
        for a, b in itr.combinations(pa, 2):
            nbrs[a].add(b)
            nbrs[b].add(a)
    seen = {i}
    stack = [i]
    while stack:
        v = stack.pop()
        for w in nbrs[v]:
            if w in s or w in seen:
                continue
            if w == j:
                return False
            seen.add(w)
            stack.append(w)
    return True


def d_separated(g: Dag, i: int, j: int, s=(), method: str = "bayes_ball") -> bool:
    """True iff every path between i and j is blocked by S."""
    if method == "bayes_ball":
        return d_separated_bayes_ball(g, i, j, s)
    if method == "moral":
        return d_separated_moral(g, i, j, s)
    raise InvalidQueryError(f"unknown d-separation method {method!r}")


# --------------------------------------------------------------------------
# triples
# --------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Triple:
    i: int
    j: int
    s: Tuple[int, ...]
    dsep: bool = field(default=False, compare=False)
    in_m: bool = field(default=False, compare=False)
    in_n1: bool = field(default=False, compare=False)
    in_n2: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.i == self.j:
            raise InvalidQueryError("triple needs i != j")
        if self.i in self.s or self.j in self.s:
            raise InvalidQueryError("conditioning set must exclude i and j")

    @property
    def s_mask(self) -> int:
        return set_to_mask(self.s)

    def as_dict(self) -> dict:
        return {"i": self.i, "j": self.j, "S": list(self.s)}


def subsets_by_size(items, max_size=None):
    """Subsets of ``items`` ordered by size, then lexicographically."""
    items = sorted(items)
    top = len(items) if max_size is None else min(max_size, len(items))
    for k in range(top + 1):
        yield from itr.combinations(items, k)


def classify_triple(g: Dag, i: int, j: int, s, deg: int | None = None) -> Triple:
    i, j = min(i, j), max(i, j)
    s = tuple(sorted(s))
    if deg is None:
        deg = max_degree(g)
    sep = d_separated(g, i, j, s)
    adjacent = g.adjacent(i, j)
    small = len(s) <= deg
    in_n2 = adjacent and small
    shares = bool(g.neighbor_mask(i) & g.neighbor_mask(j))
    in_n1 = in_n2 or (small and not adjacent and shares and not sep)
    return Triple(i, j, s, dsep=sep, in_m=not sep, in_n1=in_n1, in_n2=in_n2)


def count_candidates(g: Dag, mode: str) -> int:
    if mode == "full":
        return comb(g.p, 2) * 2 ** max(g.p - 2, 0)
    deg = max_degree(g)
    per_pair = sum(comb(g.p - 2, k) for k in range(min(deg, g.p - 2) + 1))
    return comb(g.p, 2) * per_pair


def enumerate_triples(g: Dag, mode: str = "full",
                      budget: int = FULL_ENUMERATION_BUDGET) -> Iterator[Triple]:
    """Stream the triple set of one class in deterministic order.

    ``full``: every (i, j, S) with j not d-separated from i given S.
    ``restricted``: the N1 set, edges plus non-d-separated pairs lying on an
    unshielded triple, with ``|S| <= max_degree``.
    ``adjacency``: the N2 set, edges with ``|S| <= max_degree``.
    """
    if mode not in MODES:
        raise InvalidQueryError(f"unknown triple mode {mode!r}")
    if mode == "full":
        n = count_candidates(g, mode)
        if n > budget:
            raise EnumerationTooLargeError(n, budget)
    return _enumerate(g, mode)


def _enumerate(g: Dag, mode: str) -> Iterator[Triple]:
    deg = max_degree(g)
    for i, j in itr.combinations(g.vertices, 2):
        adjacent = g.adjacent(i, j)
        if mode == "adjacency" and not adjacent:
            continue
        shares = bool(g.neighbor_mask(i) & g.neighbor_mask(j))
        if mode == "restricted" and not (adjacent or shares):
            continue
        rest = [v for v in g.vertices if v != i and v != j]
        limit = None if mode == "full" else deg
        for s in subsets_by_size(rest, limit):
            t = classify_triple(g, i, j, s, deg)
            if (mode == "full" and t.in_m) or (mode == "restricted" and t.in_n1) \
                    or (mode == "adjacency" and t.in_n2):
                yield t


# --------------------------------------------------------------------------
# text format
# --------------------------------------------------------------------------

def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_dag_text(text: str, path=None, weighted: bool = False):
    """Parse the DAG (or weights) text format.

    Returns the Dag, plus the list of weights in edge order when
    ``weighted`` is set.
    """
    lines = list(_content_lines(text))
    if not lines:
        raise ParseError("empty file, expected 'p <count>'", path=path)
    lineno, head = lines[0]
    if len(head) != 2 or head[0] != "p":
        raise ParseError("expected 'p <count>'", line=lineno, path=path)
    try:
        p = int(head[1])
    except ValueError:
        raise ParseError(f"bad vertex count {head[1]!r}", line=lineno, path=path) from None
    if p < 1:
        raise ParseError(f"vertex count must be >= 1, got {p}", line=lineno, path=path)
    edges, weights = [], {}
    width = 3 if weighted else 2
    for lineno, parts in lines[1:]:
        if len(parts) != width:
            raise ParseError(f"expected {width} columns, got {len(parts)}",
                             line=lineno, path=path)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError("vertex labels must be integers", line=lineno, path=path) from None
        if not 1 <= i < j <= p:
            raise ParseError(f"edge ({i}, {j}) violates 1 <= i < j <= {p}",
                             line=lineno, path=path)
        if (i, j) in weights or (i, j) in edges:
            raise ParseError(f"duplicate edge ({i}, {j})", line=lineno, path=path)
        edges.append((i, j))
        if weighted:
            try:
                weights[(i, j)] = float(parts[2])
            except ValueError:
                raise ParseError(f"bad weight {parts[2]!r}", line=lineno, path=path) from None
    g = Dag(p, tuple(edges))
    if weighted:
        return g, [weights[e] for e in g.edges]
    return g


def format_dag(g: Dag) -> str:
    lines = [f"p {g.p}"] + [f"{i} {j}" for i, j in g.edges]
    return "\n".join(lines) + "\n"


def read_dag(path) -> Dag:
    with open(path, encoding="utf-8") as fh:
        return parse_dag_text(fh.read(), path=str(path))


def write_dag(g: Dag, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_dag(g))
