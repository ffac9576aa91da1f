"""Backend selection and array-level entry points for the hot loops.

numba is used unless ``STRONGFAITH_DISABLE_NUMBA`` is set to a truthy value
(or numba fails to import), in which case the pure-numpy implementations
run instead.  ``set_backend`` switches at runtime for tests and benchmarks.
"""

from __future__ import annotations

import itertools as itr
import os
from contextlib import contextmanager
from typing import Sequence

import numpy as np

from . import _kernels_numpy
from .errors import EnumerationTooLargeError
from .graph import Dag, max_degree, set_to_mask

ENV_FLAG = "STRONGFAITH_DISABLE_NUMBA"

#: largest p for which the (2**p x pairs) flag table is built
MAX_TABLE_P = 16

CLASSES = ("M", "N1", "N2")
CLASS_BIT = {"M": 0, "N1": 1, "N2": 2}


def _env_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false", "no")


def _load_numba():
    try:
        from . import _kernels_numba
    except ImportError:  # pragma: no cover - numba is a hard dependency
        return None
    return _kernels_numba


_backends = {"numpy": _kernels_numpy}
_active = "numpy"
if not _env_disabled():
    _nb = _load_numba()
    if _nb is not None:
        _backends["numba"] = _nb
        _active = "numba"


def backend_name() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name == "numba" and "numba" not in _backends:
        mod = _load_numba()
        if mod is None:
            raise RuntimeError("numba is not available")
        _backends["numba"] = mod
    if name not in _backends:
        raise ValueError(f"unknown backend {name!r}")
    _active = name


@contextmanager
def using_backend(name: str):
    prev = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def _impl():
    return _backends[_active]


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def npairs(p: int) -> int:
    return p * (p - 1) // 2


def pair_list(p: int):
    """0-based (i, j) pairs in kernel order."""
    return list(itr.combinations(range(p), 2))


def decode_arg(code: int, p: int):
    """Kernel argmin code -> (i, j, S) with 1-based labels, or None."""
    if code < 0:
        return None
    n = npairs(p)
    s_mask, pair = divmod(int(code), n)
    i, j = pair_list(p)[pair]
    s = tuple(v + 1 for v in range(p) if (s_mask >> v) & 1)
    return i + 1, j + 1, s


def dag_masks(g: Dag):
    return (np.array(g.parent_masks, dtype=np.int64),
            np.array(g.child_masks, dtype=np.int64))


def check_table_size(p: int) -> None:
    if p > MAX_TABLE_P:
        raise EnumerationTooLargeError(npairs(p) * 2 ** p, npairs(MAX_TABLE_P) * 2 ** MAX_TABLE_P)


def flag_table(g: Dag, need_dsep: bool = True) -> np.ndarray:
    """Class bits for all (S, pair) of one DAG, shape (2**p, npairs)."""
    check_table_size(g.p)
    par, chi = dag_masks(g)
    out = np.zeros((1, 1 << g.p, max(npairs(g.p), 1)), dtype=np.uint8)
    _impl().batch_flags(par[None], chi[None], np.array([max_degree(g)], dtype=np.int64),
                        need_dsep, out)
    return out[0]


def weight_matrices(dag: Dag, values: np.ndarray) -> np.ndarray:
    """(n, |E|) weight rows -> (n, p, p) upper-triangular A matrices."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    out = np.zeros((values.shape[0], dag.p, dag.p))
    if dag.edges:
        rows = np.array([i - 1 for i, _ in dag.edges])
        cols = np.array([j - 1 for _, j in dag.edges])
        out[:, rows, cols] = values
    return out


def minima_fixed(a_batch: np.ndarray, flags: np.ndarray, zero_threshold: float):
    """Per-sample, per-class minima for samples sharing one DAG."""
    a_batch = np.ascontiguousarray(a_batch, dtype=float)
    n = a_batch.shape[0]
    mins = np.empty((n, 3))
    args = np.empty((n, 3), dtype=np.int64)
    bad = _impl().batch_minima_fixed(a_batch, np.ascontiguousarray(flags), float(zero_threshold),
                                     mins, args)
    return mins, args, int(bad)


def minima_varying(a_batch: np.ndarray, dags: Sequence[Dag], zero_threshold: float,
                   need_dsep: bool = True):
    """Per-sample minima where sample t lives on ``dags[t]``."""
    a_batch = np.ascontiguousarray(a_batch, dtype=float)
    n, p = a_batch.shape[0], a_batch.shape[1]
    check_table_size(p)
    parents = np.array([g.parent_masks for g in dags], dtype=np.int64).reshape(n, p)
    children = np.array([g.child_masks for g in dags], dtype=np.int64).reshape(n, p)
    degs = np.array([max_degree(g) for g in dags], dtype=np.int64)
    mins = np.empty((n, 3))
    args = np.empty((n, 3), dtype=np.int64)
    bad = _impl().batch_minima_varying(a_batch, parents, children, degs, bool(need_dsep),
                                       float(zero_threshold), mins, args)
    return mins, args, int(bad)


def encode_triples(triples, p: int):
    """Triple objects -> (index rows, sizes, class bits) for the list kernel."""
    triples = list(triples)
    width = max(p, 2)
    rows = np.zeros((len(triples), width), dtype=np.int64)
    sizes = np.zeros(len(triples), dtype=np.int64)
    classes = np.zeros(len(triples), dtype=np.uint8)
    for t, tr in enumerate(triples):
        idx = [tr.i - 1, tr.j - 1] + [v - 1 for v in tr.s]
        rows[t, :len(idx)] = idx
        sizes[t] = len(idx)
        classes[t] = (tr.in_m << 0) | (tr.in_n1 << 1) | (tr.in_n2 << 2)
    return rows, sizes, classes


def minima_triples(a_batch: np.ndarray, rows, sizes, classes, zero_threshold: float):
    """Minima over an explicit triple list; ``args`` holds row numbers."""
    a_batch = np.ascontiguousarray(a_batch, dtype=float)
    n = a_batch.shape[0]
    mins = np.empty((n, 3))
    args = np.empty((n, 3), dtype=np.int64)
    bad = _impl().batch_minima_triples(a_batch, rows, sizes, classes, float(zero_threshold),
                                       mins, args)
    return mins, args, int(bad)


def s_mask_of(s) -> int:
    return set_to_mask(s)
