import numpy as np
import pytest

from strongfaith import montecarlo as mc
from strongfaith.audit import early_exit_membership
from strongfaith.errors import InvalidQueryError, InvalidRangeError
from strongfaith.graph import Dag, make_cycle, make_random
from strongfaith.numeric import Weights

EDGE = Dag(2, ((1, 2),))


def props(cells):
    return {(c.lam, c.c, c.cls, c.density): c.proportion for c in cells}


class TestSampleWeights:
    def test_symmetric_mean(self):
        g = make_cycle(4)
        vals = np.array([mc.sample_weights(g, 0.0, 1.0, mc.sample_stream(7, k)).values
                         for k in range(10_000)])
        sigma = np.sqrt(1 / 3 / 10_000)
        assert np.all(np.abs(vals.mean(axis=0)) < 3 * sigma)

    def test_restricted_magnitudes(self):
        rng = np.random.default_rng(3)
        vals = np.concatenate([mc.sample_weights(make_cycle(5), 0.5, 1.0, rng).values
                               for _ in range(4000)])
        assert np.all(np.abs(vals) >= 0.5)
        # |w| uniform on [0.5, 1]: mean 0.75, sd 0.5 / sqrt(12)
        assert abs(np.abs(vals).mean() - 0.75) < 3 * 0.5 / np.sqrt(12 * vals.size)

    def test_gap(self):
        rng = np.random.default_rng(4)
        vals = np.concatenate([mc.sample_weights(make_cycle(5), 0.75, 1.0, rng).values
                               for _ in range(2000)])
        assert not np.any(np.abs(vals) < 0.75)

    def test_bad_range(self):
        with pytest.raises(InvalidRangeError):
            mc.sample_weights(EDGE, 1.0, 1.0)
        with pytest.raises(InvalidRangeError):
            mc.SweepConfig(cs=(0.5,), radius=0.5)
        with pytest.raises(InvalidRangeError):
            mc.SweepConfig(lambdas=(1.2,))
        with pytest.raises(InvalidRangeError):
            mc.SweepConfig(samples=0)
        with pytest.raises(InvalidQueryError):
            mc.SweepConfig(classes=("Q",))


class TestEstimates:
    def test_single_edge_slab(self):
        cfg = mc.SweepConfig(lambdas=(0.1,), samples=10_000, seed=11, classes=("M",))
        cell = mc.estimate_fixed_dag(EDGE, cfg)[0]
        # the unfaithful slab is |a| <= lam / sqrt(1 - lam^2)
        exact = 0.1 / np.sqrt(1 - 0.01)
        assert abs(cell.proportion - exact) <= 3 * np.sqrt(exact * (1 - exact) / 10_000)
        assert cell.ci95 == pytest.approx(1.96 * np.sqrt(cell.proportion * (1 - cell.proportion) / 10_000))

    def test_tree_bound(self):
        cfg = mc.SweepConfig(lambdas=(0.1,), samples=2000, seed=5, classes=("M",))
        cell = mc.estimate_family("tree", 10, cfg)[0]
        bound = 1 - 0.9 ** 9
        assert bound == pytest.approx(0.612579511, abs=1e-9)
        assert cell.proportion >= bound - 3 * cell.ci95

    def test_matches_per_sample_audit(self):
        # every sample replayed through early-exit membership
        g = make_cycle(5)
        cfg = mc.SweepConfig(lambdas=(0.05, 0.2), cs=(0.0, 0.25), samples=200, seed=9, workers=1)
        cells = mc.estimate_fixed_dag(g, cfg)
        key = mc.philox_key(cfg.seed)
        for c in cfg.cs:
            weights = []
            for k in range(cfg.samples):
                rng = mc.sample_stream(cfg.seed, k, key)
                mu, su = rng.random(len(g.edges)), rng.random(len(g.edges))
                weights.append(Weights(g, tuple(mc.map_uniforms(mu, su, c, 1.0))))
            for cell in (x for x in cells if x.c == c):
                hits = sum(early_exit_membership(w, cell.lam, cell.cls) for w in weights)
                assert cell.proportion == hits / cfg.samples

    def test_monotone_in_lambda_and_class(self):
        cfg = mc.SweepConfig(lambdas=(0.001, 0.01, 0.1, 0.3), cs=(0.0, 0.5), samples=1000, seed=3)
        for cells in (mc.estimate_family("cycle", 6, cfg), mc.estimate_random_ensemble(7, [2.0], cfg),
                      mc.estimate_family("tree", 6, cfg)):
            pr = props(cells)
            for (lam, c, cls, d), v in pr.items():
                for lam2 in cfg.lambdas:
                    if lam2 > lam:
                        assert pr[(lam2, c, cls, d)] >= v
                assert pr[(lam, c, "N2", d)] <= pr[(lam, c, "N1", d)] <= pr[(lam, c, "M", d)]

    @pytest.mark.parametrize("workers", [2, 4, 16])
    def test_worker_count_invariant(self, workers):
        base = mc.SweepConfig(samples=700, seed=42, chunk=64, workers=1, cs=(0.0, 0.25))
        other = mc.SweepConfig(samples=700, seed=42, chunk=64, workers=workers, cs=(0.0, 0.25))
        assert props(mc.estimate_random_ensemble(8, [2.0], base)) == \
            props(mc.estimate_random_ensemble(8, [2.0], other))

    def test_chunking_invariant(self):
        a = mc.SweepConfig(samples=300, seed=1, chunk=7)
        b = mc.SweepConfig(samples=300, seed=1, chunk=300)
        assert props(mc.estimate_family("tree", 7, a)) == props(mc.estimate_family("tree", 7, b))

    def test_seed_changes_result(self):
        a = mc.sample_minima(mc.dag_sampler("random", 6, 2.0), 6, mc.SweepConfig(samples=50, seed=1))[0]
        b = mc.sample_minima(mc.dag_sampler("random", 6, 2.0), 6, mc.SweepConfig(samples=50, seed=2))[0]
        assert not np.array_equal(a, b)

    def test_full_class_cap(self):
        cfg = mc.SweepConfig(lambdas=(0.1,), samples=20, seed=0, full_max_p=8)
        cells = mc.estimate_family("cycle", 9, cfg)
        m = [c for c in cells if c.cls == "M"][0]
        assert not m.available and "capped" in m.reason and m.samples == 0
        assert all(c.available for c in cells if c.cls != "M")

    def test_large_p_uses_triple_list(self):
        cfg = mc.SweepConfig(lambdas=(0.1,), samples=16, seed=0, classes=("N1", "N2"))
        g = make_cycle(18)
        cells = mc.estimate_fixed_dag(g, cfg, "cycle")
        key = mc.philox_key(0)
        for cell in cells:
            hits = 0
            for k in range(16):
                rng = mc.sample_stream(0, k, key)
                mu, su = rng.random(len(g.edges)), rng.random(len(g.edges))
                w = Weights(g, tuple(mc.map_uniforms(mu, su, 0.0, 1.0)))
                hits += early_exit_membership(w, 0.1, cell.cls)
            assert cell.proportion == hits / 16

    def test_edgeless_ensemble_draws_kept(self):
        cfg = mc.SweepConfig(lambdas=(0.1,), samples=500, seed=0, classes=("M",))
        mins, _ = mc.sample_minima(mc.dag_sampler("random", 3, 0.2), 3, cfg)
        assert mins.shape == (500, 1, 3) and np.isinf(mins[:, 0, 0]).any()

    def test_unknown_family(self):
        with pytest.raises(InvalidQueryError):
            mc.dag_sampler("star", 5)
        with pytest.raises(InvalidQueryError):
            mc.dag_sampler("random", 5)
        with pytest.raises(InvalidQueryError):
            mc.estimate_family("random", 5, mc.SweepConfig(samples=1))


def test_wilson_contains_estimate():
    lo, hi = mc.wilson_interval(30, 100)
    assert lo < 0.3 < hi and 0 <= lo and hi <= 1
    assert mc.wilson_interval(0, 0) == (0.0, 1.0)


def test_threads_env(monkeypatch):
    monkeypatch.setenv(mc.THREADS_ENV, "3")
    assert mc.default_workers() == 3
    monkeypatch.setenv(mc.THREADS_ENV, "x")
    assert mc.default_workers() == 1
