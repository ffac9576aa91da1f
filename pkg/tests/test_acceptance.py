"""End-to-end acceptance checks.

Each test records a one-line verdict through the ``criterion`` fixture; the
summary is printed at the end of the pytest run.
"""

import itertools as itr
from math import comb

import numpy as np
import pytest

from strongfaith import bounds as bnd
from strongfaith import montecarlo as mc
from strongfaith import symbolic as sy
from strongfaith.cli import main
from strongfaith.graph import Dag, d_separated, make_bipartite, make_complete, make_cycle, make_tree, subsets_by_size
from strongfaith.verify import run_verification

SEED = 2024
N = 10_000
LAMBDAS = (0.1, 0.01, 0.001)


def by_key(cells):
    return {(c.p, c.lam, c.c, c.cls): c for c in cells}


# 1 ------------------------------------------------------------------------

def test_headline_random_ensemble(criterion):
    cfg = mc.SweepConfig(lambdas=LAMBDAS, samples=N, seed=SEED, classes=("M",))
    cells = by_key(mc.estimate_random_ensemble(10, [2.0], cfg))
    got = {lam: cells[(10, lam, 0.0, "M")].proportion for lam in LAMBDAS}
    checks = [got[0.1] >= 0.95, abs(got[0.01] - 0.9) <= 0.05, abs(got[0.001] - 0.7) <= 0.07]
    detail = (f"random p=10 en=2 n={N}: lambda=0.1 -> {got[0.1]:.4f} (>= 0.95), "
              f"0.01 -> {got[0.01]:.4f} (0.9 +- 0.05), 0.001 -> {got[0.001]:.4f} (0.7 +- 0.07)")
    criterion(1, all(checks), detail)
    assert all(checks), detail


# 2 ------------------------------------------------------------------------

_FAMILY_CACHE = {}


def family_cells(family):
    if family not in _FAMILY_CACHE:
        cfg = mc.SweepConfig(lambdas=LAMBDAS, samples=N, seed=SEED)
        cells = []
        for p in range(4, 11):
            cells += mc.estimate_family(family, p, cfg)
        _FAMILY_CACHE[family] = by_key(cells)
    return _FAMILY_CACHE[family]


@pytest.mark.parametrize("cls", ["M", "N1", "N2"])
@pytest.mark.parametrize("family", ["tree", "cycle", "bipartite"])
def test_lower_bound_dominance(family, cls, criterion):
    cells = family_cells(family)
    failures = []
    for p, lam in itr.product(range(4, 11), LAMBDAS):
        cell = cells[(p, lam, 0.0, cls)]
        bound = bnd.lower_bound(family, p, lam, cls)
        if cell.proportion < bound - 3 * cell.ci95:
            failures.append(f"p={p} lam={lam}: {cell.proportion:.4f} < {bound:.4f} - 3*{cell.ci95:.4f}")
    detail = f"{family}/{cls} 21 cells" + ("" if not failures else "; violations: " + "; ".join(failures))
    criterion(2, not failures, detail)
    assert not failures, detail


# 3 ------------------------------------------------------------------------

def test_exact_algebra_oracle_suite(criterion):
    report = run_verification(p_max=5, n_random=200, seed=SEED, points=100)
    lines = [f"{c.name}: {'ok' if c.passed else c.failure}" for c in report.checks]
    detail = f"{report.dag_count} DAGs; " + "; ".join(lines)
    criterion(3, report.ok, detail)
    assert report.ok, detail


# 4 ------------------------------------------------------------------------

def test_three_node_ground_truth(criterion):
    g = make_complete(3)
    a12, a13, a23 = (sy.edge_var(g, *e) for e in ((1, 2), (1, 3), (2, 3)))
    sigma = sy.symbolic_sigma_trek(g)
    k = sy.symbolic_K(g)
    marginal = {(1, 2): a12, (1, 3): a13 + a12 * a23, (2, 3): a12 ** 2 * a23 + a12 * a13 + a23}
    conditional = {(1, 2, (3,)): a13 * a23 - a12, (1, 3, (2,)): -a13, (2, 3, (1,)): -a23}
    ok = []
    for (i, j), want in marginal.items():
        ok.append(sigma[i - 1][j - 1] == want)
        p_num = sy.partial_cov_poly(g, i, j, ())
        ok.append(p_num == want or p_num == -want)
    for (i, j, s), want in conditional.items():
        p_num = sy.partial_cov_poly(g, i, j, s)
        ok.append(p_num == want or p_num == -want)
        # the full concentration matrix is the conditioning block here, with determinant 1
        ok.append(sy.det_of_block(g, k, list(g.vertices)) == 1)
    census = {(t.i, t.j, t.s): d for t, d in sy.degree_census(g)}
    order = [(1, 2, ()), (1, 3, ()), (2, 3, ()), (1, 2, (3,)), (1, 3, (2,)), (2, 3, (1,))]
    degrees = [census[t] for t in order]
    total = sy.degree_sum(g)
    passed = all(ok) and degrees == [1, 2, 3, 2, 1, 1] and total == 10
    detail = f"{sum(ok)}/{len(ok)} polynomial identities; census {degrees}; degree_sum {total}"
    criterion(4, passed, detail)
    assert passed, detail


# 5 ------------------------------------------------------------------------

def test_calibration_single_edge(criterion):
    edge = Dag(2, ((1, 2),))
    misses = []
    pairs = [(lam, seed) for lam in (0.001, 0.01, 0.05, 0.1) for seed in range(5)]
    for lam, seed in pairs:
        cfg = mc.SweepConfig(lambdas=(lam,), samples=N, seed=seed, classes=("M",))
        prop = mc.estimate_fixed_dag(edge, cfg)[0].proportion
        sigma = np.sqrt(lam * (1 - lam) / N)
        if abs(prop - lam) > 4 * sigma:
            misses.append(f"lam={lam} seed={seed}: {prop:.5f}")
    detail = f"{len(pairs) - len(misses)}/{len(pairs)} (lambda, seed) pairs within 4 sigma of lambda"
    if misses:
        detail += "; " + "; ".join(misses)
    criterion(5, not misses, detail)
    assert not misses, detail


def test_determinism_across_workers(tmp_path, criterion):
    outputs = {}
    for workers in (1, 4, 16):
        out = tmp_path / f"w{workers}.csv"
        code = main(["sweep", "--family", "random", "--p", "8", "--en-list", "1,2,3",
                     "--c-list", "0,0.5", "--samples", "3000", "--seed", str(SEED),
                     "--workers", str(workers), "--out", str(out)])
        assert code == 0
        outputs[workers] = out.read_bytes()
    same = outputs[1] == outputs[4] == outputs[16]
    criterion(5, same, "sweep CSV byte-identical under 1, 4 and 16 workers" if same
              else "sweep CSV differs between worker counts")
    assert same


# 6 ------------------------------------------------------------------------

def _non_separated(g, pred=lambda i, j, s: True):
    for i, j in itr.combinations(g.vertices, 2):
        rest = [v for v in g.vertices if v not in (i, j)]
        for s in subsets_by_size(rest):
            if pred(i, j, s) and not d_separated(g, i, j, s):
                yield i, j, tuple(s)


def test_tree_cycle_bipartite_structure(criterion):
    trees = [make_tree(p, seed) for p in range(2, 8) for seed in range(4)]
    bad = []
    n_tree = 0
    for g in trees:
        k = sy.symbolic_K(g)
        for i, j, s in _non_separated(g):
            n_tree += 1
            if sy.sos_structure_check(g, i, j, s, k) != sy.MONOMIAL_SOS:
                bad.append(f"tree {g.edges} ({i},{j},{s})")

    n_cycle = 0
    for p in range(3, 8):
        g = make_cycle(p)
        k = sy.symbolic_K(g)
        for i, j in itr.combinations(range(1, p), 2):
            n_cycle += 1
            if sy.sos_structure_check(g, i, j, (p,), k) != sy.AFFINE_TWO_EDGES:
                bad.append(f"cycle p={p} ({i},{j},{{{p}}})")

    n_bip = 0
    for p in range(4, 8):
        g = make_bipartite(p)
        k = sy.symbolic_K(g)
        for j in range(2, p):
            rest = [v for v in range(2, p) if v != j]
            for s in subsets_by_size(rest):
                s = tuple(sorted(s + (p,)))
                full = len(s) == p - 2
                got = sy.sos_structure_check(g, 1, j, s, k)
                # conditioning on everything else leaves P = -a_1j, a single edge
                want = sy.MONOMIAL_SOS if full else sy.AFFINE_TWO_EDGES
                n_bip += 1
                if got != want:
                    bad.append(f"bipartite p={p} (1,{j},{s}): {got}")
        designated = sum(1 for j in range(2, p) for _ in range(2 ** (p - 3) - 1))
        assert designated == (p - 2) * (2 ** (p - 3) - 1)

    rng = np.random.default_rng(SEED)
    n_points = 0
    for g in trees:
        if not g.edges:
            continue
        k = sy.symbolic_K(g)
        pts = rng.uniform(-1, 1, (1000, len(g.edges)))
        for i, j, s in _non_separated(g):
            poly = np.abs(sy.partial_cov_poly(g, i, j, s, k).evaluate_many(pts))
            mono = np.abs(sy.tree_path_monomial(g, i, j).evaluate_many(pts))
            n_points += 1
            if np.any(poly < mono * (1 - 1e-12)):
                bad.append(f"pointwise tree {g.edges} ({i},{j},{s})")

    detail = (f"{n_tree} tree triples monomial_times_one_plus_sos; {n_cycle} cycle and {n_bip} "
              f"bipartite designated triples; pointwise bound on {n_points} tree triples x 1000 points")
    if bad:
        detail += "; failures: " + "; ".join(bad[:5])
    criterion(6, not bad, detail)
    assert not bad, detail


# 7 ------------------------------------------------------------------------

def test_restricted_space_effect(criterion):
    cfg = mc.SweepConfig(lambdas=(0.01,), cs=(0.0, 0.75), samples=N, seed=SEED, classes=("M",))
    tree = by_key(mc.estimate_family("tree", 10, cfg))
    t0, t75 = tree[(10, 0.01, 0.0, "M")], tree[(10, 0.01, 0.75, "M")]
    tree_ok = t0.proportion - t75.proportion > 3 * (t0.ci95 + t75.ci95)

    bip = by_key(mc.estimate_family("bipartite", 10, cfg))
    b0, b75 = bip[(10, 0.01, 0.0, "M")], bip[(10, 0.01, 0.75, "M")]
    bip_ok = abs(b0.proportion - b75.proportion) < 0.05

    detail = (f"tree p=10 lambda=0.01: c=0 {t0.proportion:.4f} vs c=0.75 {t75.proportion:.4f} "
              f"(gap > {3 * (t0.ci95 + t75.ci95):.4f}); bipartite p=10: c=0 {b0.proportion:.4f} "
              f"vs c=0.75 {b75.proportion:.4f} (|diff| < 0.05)")
    criterion(7, tree_ok and bip_ok, detail)
    assert tree_ok and bip_ok, detail
