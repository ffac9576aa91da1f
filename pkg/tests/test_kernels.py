import os
import subprocess
import sys

import numpy as np
import pytest

from strongfaith import kernels
from strongfaith.graph import (Dag, enumerate_triples, make_bipartite, make_complete, make_cycle,
                               make_random, make_tree)
from strongfaith.numeric import (ZERO_THRESHOLD, Weights, build_model, min_abs_parcorr,
                                 partial_correlation)

MODES = {"M": "full", "N1": "restricted", "N2": "adjacency"}


def brute(g, vals):
    m = build_model(Weights(g, tuple(vals)))
    out = {}
    for cls, mode in MODES.items():
        triples = list(enumerate_triples(g, mode, budget=float("inf")))
        out[cls] = min_abs_parcorr(m, triples)[0] if triples else np.inf
    return out


def corpus(rng):
    gs = [make_cycle(5), make_bipartite(6), make_complete(5), make_tree(7, 3), Dag(4, ())]
    gs += [make_random(int(rng.integers(3, 9)), 2.0, rng) for _ in range(25)]
    return gs


def test_fixed_matches_brute_force(backend, rng):
    for g in corpus(rng):
        vals = rng.uniform(-1, 1, (4, len(g.edges)))
        mins, args, bad = kernels.minima_fixed(kernels.weight_matrices(g, vals),
                                               kernels.flag_table(g), ZERO_THRESHOLD)
        assert bad == 0
        for t in range(4):
            want = brute(g, vals[t])
            for cls, bit in kernels.CLASS_BIT.items():
                if np.isinf(want[cls]):
                    assert np.isinf(mins[t, bit]) and args[t, bit] < 0
                else:
                    assert mins[t, bit] == pytest.approx(want[cls], abs=1e-12)


def test_argmin_decodes_to_minimizer(backend, rng):
    g = make_cycle(6)
    vals = rng.uniform(-1, 1, (20, len(g.edges)))
    mins, args, _ = kernels.minima_fixed(kernels.weight_matrices(g, vals), kernels.flag_table(g),
                                         ZERO_THRESHOLD)
    for t in range(20):
        m = build_model(Weights(g, tuple(vals[t])))
        i, j, s = kernels.decode_arg(int(args[t, 0]), g.p)
        assert abs(partial_correlation(m, i, j, s)) == pytest.approx(mins[t, 0], abs=1e-12)


def test_varying_equals_fixed(backend, rng):
    dags = [make_random(7, 2.5, rng) for _ in range(30)]
    a = np.stack([kernels.weight_matrices(g, rng.uniform(-1, 1, len(g.edges)))[0] for g in dags])
    mins_v, _, _ = kernels.minima_varying(a, dags, ZERO_THRESHOLD)
    for t, g in enumerate(dags):
        mins_f, _, _ = kernels.minima_fixed(a[t:t + 1], kernels.flag_table(g), ZERO_THRESHOLD)
        assert np.array_equal(np.isinf(mins_v[t]), np.isinf(mins_f[0]))
        fin = np.isfinite(mins_f[0])
        assert np.allclose(mins_v[t][fin], mins_f[0][fin], rtol=0, atol=1e-13)


def test_triple_list_matches_table(backend, rng):
    g = make_cycle(7)
    triples = list(enumerate_triples(g, "full"))
    rows, sizes, bits = kernels.encode_triples(triples, g.p)
    vals = rng.uniform(-1, 1, (10, len(g.edges)))
    a = kernels.weight_matrices(g, vals)
    m_list, _, _ = kernels.minima_triples(a, rows, sizes, bits, ZERO_THRESHOLD)
    m_tab, _, _ = kernels.minima_fixed(a, kernels.flag_table(g), ZERO_THRESHOLD)
    assert np.allclose(m_list, m_tab, atol=1e-12)


def test_backends_agree(rng):
    g = make_bipartite(7)
    a = kernels.weight_matrices(g, rng.uniform(-1, 1, (50, len(g.edges))))
    flags = {}
    out = {}
    for name in ("numba", "numpy"):
        with kernels.using_backend(name):
            flags[name] = kernels.flag_table(g)
            out[name] = kernels.minima_fixed(a, flags[name], ZERO_THRESHOLD)
    assert np.array_equal(flags["numba"], flags["numpy"])
    assert np.allclose(out["numba"][0], out["numpy"][0], atol=1e-13)
    assert np.array_equal(out["numba"][1], out["numpy"][1])


def test_flag_table_matches_enumeration(backend):
    for g in (make_cycle(6), make_bipartite(6), make_tree(6, 11)):
        table = kernels.flag_table(g)
        pairs = kernels.pair_list(g.p)
        for cls, bit in kernels.CLASS_BIT.items():
            want = {(t.i, t.j, tuple(t.s)) for t in enumerate_triples(g, MODES[cls])}
            got = set()
            for s_mask, pair in zip(*np.nonzero(table & (1 << bit))):
                i, j = pairs[pair]
                got.add((i + 1, j + 1, tuple(v + 1 for v in range(g.p) if (s_mask >> v) & 1)))
            assert got == want, (g, cls)


def test_table_size_guard():
    from strongfaith.errors import EnumerationTooLargeError
    with pytest.raises(EnumerationTooLargeError):
        kernels.flag_table(Dag(17, ()))


@pytest.mark.parametrize("value,expected", [("1", "numpy"), ("", "numba"), ("0", "numba")])
def test_env_flag_selects_backend(value, expected):
    env = dict(os.environ, STRONGFAITH_DISABLE_NUMBA=value)
    out = subprocess.run([sys.executable, "-c",
                          "from strongfaith import kernels; print(kernels.backend_name())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")
