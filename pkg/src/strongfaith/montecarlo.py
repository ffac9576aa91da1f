"""Monte Carlo estimates of the volume of lambda-strong-unfaithful parameters.

A sample is a DAG (fixed, or freshly drawn for trees and random ensembles)
plus a weight vector.  Each sample yields the per-class minimum |partial
correlation|; a sample is unfaithful at lambda exactly when that minimum is
at most lambda, so one pass serves every lambda, and the same uniforms are
mapped onto every restricted range ``[-r, -c] u [c, r]``.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import kernels
from .errors import InvalidRangeError, InvalidQueryError
from .graph import (Dag, FULL_ENUMERATION_BUDGET, count_candidates,
                    enumerate_triples, make_bipartite, make_cycle,
                    make_random, make_tree)
from .numeric import ZERO_THRESHOLD, Weights
from .rng import philox_key, sample_stream

CLASS_MODE = {"M": "full", "N1": "restricted", "N2": "adjacency"}
FAMILIES = ("tree", "cycle", "bipartite", "random")

DEFAULT_LAMBDAS = (0.1, 0.01, 0.001)
DEFAULT_CS = (0.0, 0.25, 0.5, 0.75)

#: largest p for which the full (M) class is estimated by default
FULL_CLASS_MAX_P = 15

THREADS_ENV = "STRONGFAITH_THREADS"

ENSEMBLE_NOTE = ("random ensembles keep every drawn DAG, including edgeless ones, "
                 "which are vacuously faithful")


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class SweepConfig:
    lambdas: Sequence[float] = DEFAULT_LAMBDAS
    cs: Sequence[float] = (0.0,)
    radius: float = 1.0
    samples: int = 10_000
    seed: int = 0
    classes: Sequence[str] = ("M", "N1", "N2")
    zero_threshold: float = ZERO_THRESHOLD
    workers: int = field(default_factory=default_workers)
    chunk: int = 256
    full_max_p: int = FULL_CLASS_MAX_P

    def __post_init__(self):
        self.lambdas = tuple(float(x) for x in self.lambdas)
        self.cs = tuple(float(x) for x in self.cs)
        self.classes = tuple(self.classes)
        for lam in self.lambdas:
            if not 0.0 < lam < 1.0:
                raise InvalidRangeError(f"lambda must lie in (0, 1), got {lam}")
        for c in self.cs:
            if not 0.0 <= c < self.radius:
                raise InvalidRangeError(f"c must lie in [0, r={self.radius}), got {c}")
        if self.samples < 1:
            raise InvalidRangeError("samples must be >= 1")
        for cls in self.classes:
            if cls not in CLASS_MODE:
                raise InvalidQueryError(f"unknown class {cls!r}")

    def as_dict(self) -> dict:
        return {
            "lambdas": list(self.lambdas), "cs": list(self.cs), "radius": self.radius,
            "samples": self.samples, "seed": self.seed, "classes": list(self.classes),
            "zero_threshold": self.zero_threshold, "full_max_p": self.full_max_p,
        }


@dataclass
class Cell:
    family: str
    p: int
    density: Optional[float]
    lam: float
    c: float
    cls: str
    samples: int
    proportion: Optional[float]
    ci95: Optional[float]
    seed: int
    wall_time: float = 0.0
    reason: str = ""

    @property
    def available(self) -> bool:
        return self.proportion is not None


def ci95(prop: float, n: int) -> float:
    """Normal-approximation 95% radius."""
    return 1.96 * math.sqrt(prop * (1.0 - prop) / n)


def wilson_interval(successes: int, n: int, z: float = 1.96):
    """Wilson score interval, returned as (low, high)."""
    if n == 0:
        return 0.0, 1.0
    phat = successes / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


# --------------------------------------------------------------------------
# weights
# --------------------------------------------------------------------------

def map_uniforms(mag_u: np.ndarray, sign_u: np.ndarray, c: float, r: float) -> np.ndarray:
    """Uniform magnitudes on [c, r] with independent fair signs."""
    return np.where(sign_u < 0.5, -1.0, 1.0) * (c + (r - c) * mag_u)


def sample_weights(g: Dag, c: float = 0.0, r: float = 1.0, rng=None) -> Weights:
    """Each edge weight uniform on [-r, -c] u [c, r] (the full cube when c = 0)."""
    if not 0.0 <= c < r:
        raise InvalidRangeError(f"need 0 <= c < r, got c={c}, r={r}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    m = len(g.edges)
    vals = map_uniforms(rng.random(m), rng.random(m), c, r)
    return Weights(g, tuple(vals), radius=r)


# --------------------------------------------------------------------------
# sample generation
# --------------------------------------------------------------------------

def _fixed(g: Dag) -> Callable:
    return lambda rng: g


def dag_sampler(family: str, p: int, en: float | None = None) -> Callable:
    """rng -> Dag; trees and random ensembles draw a fresh DAG per sample."""
    if family == "tree":
        return lambda rng: make_tree(p, rng)
    if family == "random":
        if en is None:
            raise InvalidQueryError("random family needs an expected neighborhood size")
        return lambda rng: make_random(p, en, rng)
    if family == "cycle":
        return _fixed(make_cycle(p))
    if family == "bipartite":
        return _fixed(make_bipartite(p))
    raise InvalidQueryError(f"unknown family {family!r}")


def _draw(sampler, seed, key, indices):
    dags, mags, signs = [], [], []
    for k in indices:
        rng = sample_stream(seed, int(k), key)
        g = sampler(rng)
        m = len(g.edges)
        dags.append(g)
        mags.append(rng.random(m))
        signs.append(rng.random(m))
    return dags, mags, signs


def _a_batch(dags, mags, signs, c, r, p):
    out = np.zeros((len(dags), p, p))
    for t, (g, mu, su) in enumerate(zip(dags, mags, signs)):
        if g.edges:
            vals = map_uniforms(mu, su, c, r)
            rows = [i - 1 for i, _ in g.edges]
            cols = [j - 1 for _, j in g.edges]
            out[t, rows, cols] = vals
    return out


class _Evaluator:
    """Per-chunk minima for one sampler; fixed DAGs get their class table built once."""

    def __init__(self, sampler, p, cfg: SweepConfig, classes, fixed: Dag | None):
        self.sampler = sampler
        self.p = p
        self.cfg = cfg
        self.classes = classes
        self.need_dsep = "M" in classes or "N1" in classes
        self.table = None
        self.fixed_triples = None
        if fixed is not None:
            if p <= kernels.MAX_TABLE_P:
                self.table = kernels.flag_table(fixed, self.need_dsep)
            else:
                self.fixed_triples = self._triples_for(fixed)

    def _triples_for(self, g: Dag):
        want = [c for c in ("N1", "N2") if c in self.classes]
        mode = "restricted" if "N1" in want else "adjacency"
        return kernels.encode_triples(enumerate_triples(g, mode), g.p)

    def run(self, indices, key):
        cfg = self.cfg
        dags, mags, signs = _draw(self.sampler, cfg.seed, key, indices)
        out = np.empty((len(indices), len(cfg.cs), 3))
        bad = 0
        for ci, c in enumerate(cfg.cs):
            a = _a_batch(dags, mags, signs, c, cfg.radius, self.p)
            if self.table is not None:
                mins, _, b = kernels.minima_fixed(a, self.table, cfg.zero_threshold)
            elif self.p <= kernels.MAX_TABLE_P:
                mins, _, b = kernels.minima_varying(a, dags, cfg.zero_threshold, self.need_dsep)
            else:
                mins = np.empty((len(dags), 3))
                b = 0
                for t, g in enumerate(dags):
                    rows, sizes, cls = self.fixed_triples or self._triples_for(g)
                    m1, _, bt = kernels.minima_triples(a[t:t + 1], rows, sizes, cls,
                                                       cfg.zero_threshold)
                    mins[t] = m1[0]
                    b += bt
            out[:, ci, :] = mins
            bad += b
        return out, bad


def sample_minima(sampler, p: int, cfg: SweepConfig, classes=None, fixed: Dag | None = None):
    """Per-sample minima, shape (samples, len(cs), 3), in sample order."""
    classes = tuple(classes or cfg.classes)
    ev = _Evaluator(sampler, p, cfg, classes, fixed)
    key = philox_key(cfg.seed)
    chunks = [range(lo, min(lo + cfg.chunk, cfg.samples))
              for lo in range(0, cfg.samples, cfg.chunk)]
    if cfg.workers <= 1 or len(chunks) == 1:
        results = [ev.run(ch, key) for ch in chunks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(lambda ch: ev.run(ch, key), chunks))
    mins = np.concatenate([r[0] for r in results], axis=0)
    bad = sum(r[1] for r in results)
    return mins, bad


def _cells_from_minima(mins, family, p, density, cfg, classes, unavailable, wall):
    rows = []
    n = mins.shape[0]
    for ci, c in enumerate(cfg.cs):
        for lam in cfg.lambdas:
            for cls in cfg.classes:
                if cls in unavailable:
                    rows.append(Cell(family, p, density, lam, c, cls, 0, None, None,
                                     cfg.seed, wall, unavailable[cls]))
                    continue
                col = kernels.CLASS_BIT[cls]
                hits = int(np.count_nonzero(mins[:, ci, col] <= lam))
                prop = hits / n
                rows.append(Cell(family, p, density, lam, c, cls, n, prop, ci95(prop, n),
                                 cfg.seed, wall))
    return rows


def _unavailable(p, cfg, count_full):
    out = {}
    if "M" in cfg.classes:
        if p > cfg.full_max_p or p > kernels.MAX_TABLE_P:
            out["M"] = f"full class capped at p <= {min(cfg.full_max_p, kernels.MAX_TABLE_P)}"
        elif count_full is not None and count_full > FULL_ENUMERATION_BUDGET:
            out["M"] = f"{count_full} triples exceed the enumeration budget"
    return out


def _estimate(sampler, family, p, density, cfg, fixed=None):
    start = time.perf_counter()
    unavailable = _unavailable(p, cfg, count_candidates(fixed, "full") if fixed else None)
    classes = tuple(c for c in cfg.classes if c not in unavailable)
    if classes:
        mins, _ = sample_minima(sampler, p, cfg, classes, fixed)
    else:
        mins = np.full((cfg.samples, len(cfg.cs), 3), np.inf)
    wall = time.perf_counter() - start
    return _cells_from_minima(mins, family, p, density, cfg, classes, unavailable, wall)


def estimate_fixed_dag(g: Dag, cfg: SweepConfig, family: str = "fixed") -> List[Cell]:
    """Proportion of weight draws on ``g`` that are unfaithful, per cell."""
    return _estimate(_fixed(g), family, g.p, None, cfg, fixed=g)


def estimate_random_ensemble(p: int, en_list: Sequence[float], cfg: SweepConfig) -> List[Cell]:
    """Fresh random DAG and weights per sample, for each expected neighborhood size."""
    rows = []
    for en in en_list:
        rows += _estimate(dag_sampler("random", p, en), "random", p, float(en), cfg)
    return rows


def estimate_family(family: str, p: int, cfg: SweepConfig) -> List[Cell]:
    if family == "tree":
        return _estimate(dag_sampler("tree", p), "tree", p, None, cfg)
    if family in ("cycle", "bipartite"):
        g = make_cycle(p) if family == "cycle" else make_bipartite(p)
        return estimate_fixed_dag(g, cfg, family)
    raise InvalidQueryError(f"use estimate_random_ensemble for family {family!r}")
