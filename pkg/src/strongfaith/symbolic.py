"""Exact polynomial algebra in the edge weights.

Every polynomial lives in the ring generated by one variable per edge, in
the DAG's edge order; variable ``k`` prints as ``a_i_j`` for edge ``(i, j)``.
"""

from __future__ import annotations

import itertools as itr
from functools import lru_cache
from typing import Dict, List, Sequence

from .errors import InvalidFamilyError, InvalidQueryError, SymbolicTooLargeError
from .graph import (Dag, enumerate_triples, is_tree, make_bipartite,
                    make_cycle, mask_to_set)
from .poly import SparsePoly, poly_sum

Matrix = List[List[SparsePoly]]

#: largest DAG for which the trek expansion of Sigma is attempted
TREK_MAX_P = 10
#: largest block whose determinant is expanded exactly
DET_MAX_SIZE = 12
#: largest block handled by the cycle/path expansion
PONSTEIN_MAX_SIZE = 6

MONOMIAL_SOS = "monomial_times_one_plus_sos"
AFFINE_TWO_EDGES = "affine_in_two_edges"
OTHER = "other"


def variable_names(g: Dag) -> List[str]:
    return [f"a_{i}_{j}" for i, j in g.edges]


def edge_var(g: Dag, i: int, j: int) -> SparsePoly:
    return SparsePoly.var(len(g.edges), g.edge_index[(i, j)])


def format_poly(g: Dag, poly: SparsePoly) -> str:
    return poly.format(variable_names(g))


def _zero(g):
    return SparsePoly.zero(len(g.edges))


def _one(g):
    return SparsePoly.const(len(g.edges), 1)


def symbolic_A(g: Dag) -> Matrix:
    a = [[_zero(g) for _ in range(g.p)] for _ in range(g.p)]
    for i, j in g.edges:
        a[i - 1][j - 1] = edge_var(g, i, j)
    return a


def identity(g: Dag) -> Matrix:
    return [[_one(g) if r == c else _zero(g) for c in range(g.p)] for r in range(g.p)]


def mat_mul(x: Matrix, y: Matrix) -> Matrix:
    n, m, k = len(x), len(y[0]), len(y)
    nvars = x[0][0].nvars
    return [[poly_sum((x[r][t] * y[t][c] for t in range(k)), nvars)
             for c in range(m)] for r in range(n)]


def transpose(x: Matrix) -> Matrix:
    return [list(row) for row in zip(*x)]


def symbolic_K(g: Dag) -> Matrix:
    """Concentration matrix from the path rule.

    Diagonal: ``1 + sum of squared out-edge weights``.  Off-diagonal
    ``(i, j)``: sum over common children ``k`` of ``a_ik a_jk`` minus the
    direct edge weight if i and j are adjacent.
    """
    p = g.p
    k = [[_zero(g) for _ in range(p)] for _ in range(p)]
    for v in g.vertices:
        k[v - 1][v - 1] = _one(g) + poly_sum(
            (edge_var(g, v, c) ** 2 for c in g.children(v)), len(g.edges))
    for u, v in itr.combinations(g.vertices, 2):
        common = g.children(u) & g.children(v)
        entry = poly_sum((edge_var(g, u, c) * edge_var(g, v, c) for c in sorted(common)),
                         len(g.edges))
        if g.adjacent(u, v):
            entry = entry - edge_var(g, u, v)
        k[u - 1][v - 1] = entry
        k[v - 1][u - 1] = entry
    return k


def symbolic_K_product(g: Dag) -> Matrix:
    """(I - A)(I - A)^T expanded as a plain matrix product."""
    a = symbolic_A(g)
    eye = identity(g)
    u = [[eye[r][c] - a[r][c] for c in range(g.p)] for r in range(g.p)]
    return mat_mul(u, transpose(u))


def directed_path_polys(g: Dag) -> Matrix:
    """``out[k][i]``: sum of monomials of all directed paths k -> ... -> i.

    The trivial path contributes 1 on the diagonal.
    """
    p = g.p
    out = [[_zero(g) for _ in range(p)] for _ in range(p)]
    for top in range(p, 0, -1):
        out[top - 1][top - 1] = _one(g)
        # vertices after ``top`` in topological order
        for v in range(top + 1, p + 1):
            out[top - 1][v - 1] = poly_sum(
                (out[top - 1][u - 1] * edge_var(g, u, v) for u in sorted(g.parents(v))
                 if u >= top), len(g.edges))
    return out


def symbolic_sigma_trek(g: Dag, max_p: int = TREK_MAX_P) -> Matrix:
    """Covariance as a sum over treks: a backward path to a top, then forward.

    Entry ``(i, j)`` is ``sum_k paths(k -> i) * paths(k -> j)``, which is the
    ``(i, j)`` entry of ``sum_{r, s} (A^T)^r A^s``.
    """
    if g.p > max_p:
        raise SymbolicTooLargeError(f"trek expansion limited to p <= {max_p}, got {g.p}")
    paths = directed_path_polys(g)
    nv = len(g.edges)
    return [[poly_sum((paths[t][i] * paths[t][j] for t in range(g.p)), nv)
             for j in range(g.p)] for i in range(g.p)]


def symbolic_sigma_neumann(g: Dag) -> Matrix:
    """Sigma from the truncated power series sum_{r,s<p} (A^T)^r A^s."""
    a = symbolic_A(g)
    powers = [identity(g)]
    for _ in range(g.p - 1):
        powers.append(mat_mul(powers[-1], a))
    nv = len(g.edges)
    fwd = [[poly_sum((pw[r][c] for pw in powers), nv) for c in range(g.p)]
           for r in range(g.p)]
    return mat_mul(transpose(fwd), fwd)


# --------------------------------------------------------------------------
# determinants
# --------------------------------------------------------------------------

def determinant(mat: Matrix, max_size: int = DET_MAX_SIZE) -> SparsePoly:
    """Laplace expansion along rows, memoised on the set of unused columns."""
    n = len(mat)
    if n > max_size:
        raise SymbolicTooLargeError(f"exact determinant limited to size {max_size}, got {n}")
    if n == 0:
        raise InvalidQueryError("use det_of_block for the empty block")
    nvars = mat[0][0].nvars

    @lru_cache(maxsize=None)
    def minor(cols: int) -> SparsePoly:
        free = [c for c in range(n) if (cols >> c) & 1]
        row = n - len(free)
        if row == n:
            return SparsePoly.const(nvars, 1)
        acc = []
        for pos, c in enumerate(free):
            entry = mat[row][c]
            if entry.is_zero():
                continue
            sub = minor(cols & ~(1 << c))
            if sub.is_zero():
                continue
            term = entry * sub
            acc.append(-term if pos % 2 else term)
        return poly_sum(acc, nvars)

    return minor((1 << n) - 1)


def submatrix(mat: Matrix, rows: Sequence[int], cols: Sequence[int]) -> Matrix:
    """Rows and columns given as 1-based vertex labels."""
    return [[mat[r - 1][c - 1] for c in cols] for r in rows]


def det_of_block(g: Dag, k: Matrix, block: Sequence[int]) -> SparsePoly:
    block = sorted(block)
    if not block:
        return _one(g)
    return determinant(submatrix(k, block, block))


def cofactor(g: Dag, k: Matrix, block: Sequence[int], u: int, v: int) -> SparsePoly:
    """(u, v) cofactor of the principal block of K on ``block``."""
    block = sorted(block)
    ru, cv = block.index(u), block.index(v)
    rows = [b for b in block if b != u]
    cols = [b for b in block if b != v]
    if not rows:
        return _one(g)
    d = determinant(submatrix(k, rows, cols))
    return -d if (ru + cv) % 2 else d


# --------------------------------------------------------------------------
# partial covariance polynomials
# --------------------------------------------------------------------------

def _complement(g: Dag, i: int, j: int, s) -> List[int]:
    q = set(s) | {i, j}
    return [v for v in g.vertices if v not in q]


def _check(g, i, j, s):
    s = frozenset(s)
    if i in s or j in s:
        raise InvalidQueryError("conditioning set must exclude i and j")
    for v in (i, j, *s):
        if not 1 <= v <= g.p:
            raise InvalidQueryError(f"vertex {v} outside 1..{g.p}")
    return s


def partial_cov_poly(g: Dag, i: int, j: int, s=(), k: Matrix | None = None,
                     method: str = "bordered", max_size: int = DET_MAX_SIZE) -> SparsePoly:
    """det(K_cc) K_ij - K_ic C(K_cc) K_cj with c the complement of S u {i, j}.

    ``bordered`` evaluates this as the determinant of K restricted to rows
    ``{i} u c`` and columns ``{j} u c`` (the same quantity, by expanding
    along the border).  ``cofactor`` builds the cofactor matrix explicitly.
    ``i == j`` is allowed and gives the diagonal counterpart.
    """
    s = _check(g, i, j, s)
    if k is None:
        k = symbolic_K(g)
    qc = _complement(g, i, j, s)
    if len(qc) + 1 > max_size:
        raise SymbolicTooLargeError(
            f"complement of size {len(qc)} exceeds the exact-determinant bound {max_size}")
    if method == "bordered":
        return determinant(submatrix(k, [i] + qc, [j] + qc), max_size=max_size)
    if method == "cofactor":
        det = det_of_block(g, k, qc)
        acc = [det * k[i - 1][j - 1]]
        for u in qc:
            if k[i - 1][u - 1].is_zero():
                continue
            for v in qc:
                if k[v - 1][j - 1].is_zero():
                    continue
                acc.append(-(k[i - 1][u - 1] * cofactor(g, k, qc, u, v) * k[v - 1][j - 1]))
        return poly_sum(acc, len(g.edges))
    raise InvalidQueryError(f"unknown method {method!r}")


def normalizer_polys(g: Dag, i: int, j: int, s=(), k: Matrix | None = None):
    """Diagonal partners of P_ij|S sharing its block Q = S u {i, j}."""
    s = _check(g, i, j, s)
    if k is None:
        k = symbolic_K(g)
    return (partial_cov_poly(g, i, i, s | {j}, k),
            partial_cov_poly(g, j, j, s | {i}, k))


# --------------------------------------------------------------------------
# cycle / path expansion
# --------------------------------------------------------------------------

def reweighted_adjacency(g: Dag, k: Matrix | None = None) -> Matrix:
    """Edge weights of the symmetrized graph, A + A^T - A A^T = I - K."""
    if k is None:
        k = symbolic_K(g)
    eye = identity(g)
    return [[eye[r][c] - k[r][c] for c in range(g.p)] for r in range(g.p)]


class _CycleExpansion:
    def __init__(self, g: Dag, qc: Sequence[int], k: Matrix | None):
        qc = sorted(set(qc))
        if len(qc) > PONSTEIN_MAX_SIZE:
            raise SymbolicTooLargeError(
                f"cycle expansion limited to {PONSTEIN_MAX_SIZE} vertices, got {len(qc)}")
        self.g = g
        self.nv = len(g.edges)
        self.qc = qc
        self.w = reweighted_adjacency(g, k)
        self.cycles = self._simple_cycles()

    def weight(self, u, v):
        return self.w[u - 1][v - 1]

    def _simple_cycles(self):
        """Directed simple cycles (loops included), keyed by their least vertex."""
        out: Dict[int, list] = {v: [] for v in self.qc}
        for start in self.qc:
            if not self.weight(start, start).is_zero():
                out[start].append((1 << (start - 1), self.weight(start, start)))
            allowed = [v for v in self.qc if v > start]

            def extend(v, mask, mono):
                back = self.weight(v, start)
                if v != start and not back.is_zero():
                    out[start].append((mask, mono * back))
                for nxt in allowed:
                    if (mask >> (nxt - 1)) & 1:
                        continue
                    step = self.weight(v, nxt)
                    if step.is_zero():
                        continue
                    extend(nxt, mask | (1 << (nxt - 1)), mono * step)

            extend(start, 1 << (start - 1), SparsePoly.const(self.nv, 1))
        return out

    def det(self, excluded: int = 0) -> SparsePoly:
        """sum over sets of disjoint cycles avoiding ``excluded`` of prod(-weight)."""
        verts = [v for v in self.qc if not (excluded >> (v - 1)) & 1]

        @lru_cache(maxsize=None)
        def rec(pos: int, used: int) -> SparsePoly:
            if pos == len(verts):
                return SparsePoly.const(self.nv, 1)
            v = verts[pos]
            if (used >> (v - 1)) & 1:
                return rec(pos + 1, used)
            acc = [rec(pos + 1, used)]
            for mask, mono in self.cycles[v]:
                if mask & (used | excluded):
                    continue
                acc.append(-(mono * rec(pos + 1, used | mask)))
            return poly_sum(acc, self.nv)

        return rec(0, 0)

    def cofactor(self, u: int, v: int) -> SparsePoly:
        if u == v:
            return self.det(1 << (u - 1))
        acc = []

        def walk(x, mask, mono):
            if x == v:
                acc.append(mono * self.det(mask))
                return
            for nxt in self.qc:
                if (mask >> (nxt - 1)) & 1:
                    continue
                step = self.weight(x, nxt)
                if step.is_zero():
                    continue
                walk(nxt, mask | (1 << (nxt - 1)), mono * step)

        walk(u, 1 << (u - 1), SparsePoly.const(self.nv, 1))
        return poly_sum(acc, self.nv)


def ponstein_det(g: Dag, qc: Sequence[int], k: Matrix | None = None) -> SparsePoly:
    """det(K on ``qc``) from disjoint self-avoiding cycles of the reweighted graph."""
    if not qc:
        return SparsePoly.const(len(g.edges), 1)
    return _CycleExpansion(g, qc, k).det()


def ponstein_cofactor(g: Dag, qc: Sequence[int], i: int, j: int,
                      k: Matrix | None = None) -> SparsePoly:
    """(i, j) cofactor of K on ``qc``: one self-avoiding i -> j path times the
    cycle expansion of the vertices it leaves free."""
    if i not in qc or j not in qc:
        raise InvalidQueryError("cofactor indices must lie in the block")
    return _CycleExpansion(g, qc, k).cofactor(i, j)


# --------------------------------------------------------------------------
# degree census and structure
# --------------------------------------------------------------------------

def degree_sum(g: Dag, mode: str = "full") -> int:
    """Sum of total degrees of P_ij|S over the triple set of ``mode``."""
    k = symbolic_K(g)
    return sum(partial_cov_poly(g, t.i, t.j, t.s, k).degree()
               for t in enumerate_triples(g, mode))


def degree_census(g: Dag, mode: str = "full") -> list:
    """``[(triple, degree), ...]`` in enumeration order."""
    k = symbolic_K(g)
    return [(t, partial_cov_poly(g, t.i, t.j, t.s, k).degree())
            for t in enumerate_triples(g, mode)]


def detect_family(g: Dag) -> str:
    if is_tree(g):
        return "tree"
    if g.p >= 3 and g == make_cycle(g.p):
        return "cycle"
    if g.p >= 4 and g == make_bipartite(g.p):
        return "bipartite"
    raise InvalidFamilyError(f"{g} is not a tree, cycle or K_(2,p-2) DAG")


def tree_path_edges(g: Dag, i: int, j: int) -> List[tuple]:
    """Edges on the unique skeleton path between i and j in a tree."""
    def to_root(v):
        chain = [v]
        while g.parent_masks[v - 1]:
            v = mask_to_set(g.parent_masks[v - 1])[0]
            chain.append(v)
        return chain

    up_i, up_j = to_root(i), to_root(j)
    common = next(v for v in up_i if v in set(up_j))
    edges = []
    for chain in (up_i, up_j):
        for a, b in zip(chain, chain[1:]):
            if a == common:
                break
            edges.append((b, a))
    return sorted(edges)


def tree_path_monomial(g: Dag, i: int, j: int) -> SparsePoly:
    mono = _one(g)
    for e in tree_path_edges(g, i, j):
        mono = mono * edge_var(g, *e)
    return mono


def _is_monomial_times_one_plus_sos(poly: SparsePoly) -> bool:
    if poly.is_zero():
        return False
    quotient = poly.divide_monomial(poly.monomial_content())
    c0 = quotient.constant_term()
    if abs(c0) != 1:
        return False
    for exp, c in quotient.terms.items():
        if not any(exp):
            continue
        if any(e % 2 for e in exp) or c * c0 < 0:
            return False
    return True


def designated_edges(g: Dag, family: str, i: int, j: int, s) -> tuple | None:
    """The two edges the affine form is linear in, when the triple has one."""
    i, j = min(i, j), max(i, j)
    s = frozenset(s)
    p = g.p
    if family == "cycle" and s == {p} and j < p:
        return (i, i + 1), (j, j + 1)
    if family == "bipartite" and i == 1 and p in s and j < p:
        return (1, j), (j, p)
    return None


def sos_structure_check(g: Dag, i: int, j: int, s=(), k: Matrix | None = None) -> str:
    """Structural class of P_ij|S on tree, cycle and K_(2,p-2) DAGs.

    ``monomial_times_one_plus_sos``: P is a monomial times +-(1 + q) with q
    having only even exponents and coefficients of one sign, which makes
    1 + q a sum of squares bounded below by 1.
    ``affine_in_two_edges``: for the designated cycle / bipartite triples, P
    has degree at most one in each of the two designated edge variables.
    """
    family = detect_family(g)
    poly = partial_cov_poly(g, i, j, s, k)
    if _is_monomial_times_one_plus_sos(poly):
        return MONOMIAL_SOS
    edges = designated_edges(g, family, i, j, s)
    if edges is not None and not poly.is_zero():
        idx = [g.edge_index[e] for e in edges]
        if all(poly.degree_in(x) <= 1 for x in idx):
            return AFFINE_TWO_EDGES
    return OTHER
