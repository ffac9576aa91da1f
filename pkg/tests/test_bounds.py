from math import comb

import pytest
from hypothesis import given, strategies as st

from strongfaith import bounds as bnd
from strongfaith.errors import InvalidFamilyError, InvalidQueryError, InvalidRangeError, InvalidSizeError
from strongfaith.graph import Dag, make_complete


def test_tree_value():
    assert bnd.lower_bound("tree", 10, 0.1) == pytest.approx(0.612579511, abs=1e-9)


def test_cycle_exponents():
    assert bnd.exponent("cycle", 5, "M") == 5 + comb(4, 2) == 11
    assert bnd.exponent("cycle", 5, "N1") == 13
    assert bnd.exponent("cycle", 5, "N2") == 9


def test_bipartite_exponent_forms_agree():
    for p in range(4, 20):
        e = bnd.exponent("bipartite", p, "M")
        assert e == 2 * (p - 2) + (p - 2) * (2 ** (p - 3) - 1)
        assert e == bnd.exponent("bipartite", p, "N1") == bnd.exponent("bipartite", p, "N2")


def test_tree_class_invariant():
    for p in range(2, 12):
        vals = {bnd.lower_bound("tree", p, 0.05, c) for c in bnd.CLASSES}
        assert len(vals) == 1


def test_rescaled_cube():
    assert bnd.lower_bound("cycle", 6, 0.2, "N2", r=2.0) == bnd.lower_bound("cycle", 6, 0.1, "N2")


@given(st.sampled_from(bnd.FAMILIES), st.integers(4, 14), st.sampled_from(bnd.CLASSES),
       st.floats(1e-6, 0.98), st.floats(1e-6, 0.98))
def test_monotone_and_bounded(family, p, cls, a, b):
    lo, hi = sorted((a, b))
    x, y = bnd.lower_bound(family, p, lo, cls), bnd.lower_bound(family, p, hi, cls)
    assert 0.0 <= x <= y <= 1.0
    assert bnd.lower_bound(family, p + 1, lo, cls) >= x


def test_limits():
    for fam in bnd.FAMILIES:
        assert bnd.lower_bound(fam, 6, 1e-12) < 1e-9
        assert bnd.lower_bound(fam, 6, 1 - 1e-12) > 0.999


@pytest.mark.parametrize("args,err", [
    (("star", 5, 0.1), InvalidFamilyError),
    (("tree", 5, 0.1, "N3"), InvalidQueryError),
    (("cycle", 2, 0.1), InvalidSizeError),
    (("bipartite", 3, 0.1), InvalidSizeError),
    (("tree", 5, 0.0), InvalidRangeError),
    (("tree", 5, 1.5, "M", 1.0), InvalidRangeError),
    (("tree", 5, 0.1, "M", 0.0), InvalidRangeError),
])
def test_errors(args, err):
    with pytest.raises(err):
        bnd.lower_bound(*args)


def test_table():
    rows = bnd.bound_table(["tree", "cycle"], [4, 5], [0.1, 0.01])
    assert len(rows) == 2 * 2 * 2 * 3
    assert all(r.bound == bnd.lower_bound(r.family, r.p, r.lam, r.cls) for r in rows)


def test_degree_term():
    assert bnd.upper_bound_degree_term(make_complete(3))["degree_sum"] == 10
    assert bnd.upper_bound_degree_term(Dag(5, ()))["degree_sum"] == 0
    term = bnd.upper_bound_degree_term(Dag(4, ((1, 2), (2, 3), (3, 4))))
    assert term["degree_sum"] == 39 and "unknown constants" in term["formula"]
