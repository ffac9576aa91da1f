"""Cross-checks between the exact, numeric and graphical engines.

Every identity here holds exactly in theory; the suite runs each one over a
corpus of small DAGs and records the first counterexample it meets.
"""

from __future__ import annotations

import itertools as itr
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import symbolic
from ._kernels_numpy import sem_matrices
from .errors import SymbolicTooLargeError, VerificationError
from .graph import (Dag, d_separated, make_bipartite, make_complete, make_cycle,
                    make_random, make_tree, subsets_by_size)

PARCORR_TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    checked: int = 0
    failure: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.failure is None

    def line(self) -> str:
        status = "ok" if self.passed else "FAIL"
        tail = "" if self.passed else f": {self.failure}"
        return f"{status:4s} {self.name} ({self.checked} cases){tail}"


@dataclass
class VerificationReport:
    p_max: int
    dag_count: int
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> Optional[CheckResult]:
        return next((c for c in self.checks if not c.passed), None)

    def text(self) -> str:
        head = f"verify p<={self.p_max} over {self.dag_count} DAGs"
        return "\n".join([head] + [c.line() for c in self.checks])

    def to_dict(self) -> dict:
        return {
            "p_max": self.p_max,
            "dag_count": self.dag_count,
            "ok": self.ok,
            "checks": [{"name": c.name, "checked": c.checked, "passed": c.passed,
                        "failure": c.failure} for c in self.checks],
        }

    def raise_on_failure(self) -> None:
        bad = self.first_failure
        if bad is not None:
            raise VerificationError(f"{bad.name} failed: {bad.failure}")


def dag_corpus(p_max: int = 5, n_random: int = 200, seed: int = 0) -> List[Dag]:
    """Structured DAGs for every p <= p_max plus ``n_random`` random ones.

    Structured DAGs are deduplicated; random draws are kept even when they
    repeat, so the corpus always holds ``n_random`` of them.
    """
    rng = np.random.default_rng(seed)
    seen, out = set(), []

    def add(g):
        if g not in seen:
            seen.add(g)
            out.append(g)

    for p in range(1, p_max + 1):
        add(Dag(p, []))
        if p >= 2:
            add(make_complete(p))
            add(make_tree(p, levels=p))
            add(make_tree(p, levels=2))
            for s in range(4):
                add(make_tree(p, s))
        if p >= 3:
            add(make_cycle(p))
        if p >= 4:
            add(make_bipartite(p))
    for _ in range(n_random):
        p = int(rng.integers(2, p_max + 1))
        en = float(rng.uniform(0.1, p - 1))
        out.append(make_random(p, en, rng))
    return out


def _describe(g: Dag) -> str:
    return f"DAG p={g.p} edges={list(g.edges)}"


def _all_triples(g: Dag):
    for i, j in itr.combinations(g.vertices, 2):
        rest = [v for v in g.vertices if v not in (i, j)]
        for s in subsets_by_size(rest):
            yield i, j, tuple(s)


def _sigma_k_identity(g: Dag, res: CheckResult):
    k = symbolic.symbolic_K(g)
    sigma = symbolic.symbolic_sigma_trek(g)
    prod = symbolic.mat_mul(sigma, k)
    eye = symbolic.identity(g)
    res.checked += 1
    for r in range(g.p):
        for c in range(g.p):
            if prod[r][c] != eye[r][c]:
                return f"Sigma*K != I at entry ({r + 1},{c + 1}) on {_describe(g)}"
    return None


def _k_product(g: Dag, res: CheckResult):
    res.checked += 1
    if symbolic.symbolic_K(g) != symbolic.symbolic_K_product(g):
        return f"path-rule K differs from (I-A)(I-A)^T on {_describe(g)}"
    return None


def _trek_neumann(g: Dag, res: CheckResult):
    res.checked += 1
    if symbolic.symbolic_sigma_trek(g) != symbolic.symbolic_sigma_neumann(g):
        return f"trek Sigma differs from the Neumann series on {_describe(g)}"
    return None


def _dsep_agreement(g: Dag, res: CheckResult):
    for i, j, s in _all_triples(g):
        res.checked += 1
        a = d_separated(g, i, j, s, method="bayes_ball")
        b = d_separated(g, i, j, s, method="moral")
        if a != b:
            return f"Bayes-ball {a} vs moral {b} for (i={i}, j={j}, S={list(s)}) on {_describe(g)}"
    return None


def _zero_iff_dsep(g: Dag, res: CheckResult):
    k = symbolic.symbolic_K(g)
    for i, j, s in _all_triples(g):
        res.checked += 1
        zero = symbolic.partial_cov_poly(g, i, j, s, k).is_zero()
        sep = d_separated(g, i, j, s)
        if zero != sep:
            return (f"P zero={zero} but d-separated={sep} for (i={i}, j={j}, S={list(s)}) "
                    f"on {_describe(g)}")
    return None


def _ponstein(g: Dag, res: CheckResult, max_qc: int = 4):
    k = symbolic.symbolic_K(g)
    for qc in subsets_by_size(g.vertices, max_qc):
        qc = list(qc)
        res.checked += 1
        if symbolic.ponstein_det(g, qc, k) != symbolic.det_of_block(g, k, qc):
            return f"Ponstein det differs on Q^c={qc} of {_describe(g)}"
        for u in qc:
            for v in qc:
                res.checked += 1
                if symbolic.ponstein_cofactor(g, qc, u, v, k) != symbolic.cofactor(g, k, qc, u, v):
                    return f"Ponstein cofactor ({u},{v}) differs on Q^c={qc} of {_describe(g)}"
    return None


def _parcorr_agreement(g: Dag, res: CheckResult, points: int, rng):
    if not g.edges:
        return None
    k = symbolic.symbolic_K(g)
    vals = rng.uniform(-1.0, 1.0, size=(points, len(g.edges)))
    a = np.zeros((points, g.p, g.p))
    for e, (i, j) in enumerate(g.edges):
        a[:, i - 1, j - 1] = vals[:, e]
    sigma, _ = sem_matrices(a)
    for i, j, s in _all_triples(g):
        res.checked += points
        pij = symbolic.partial_cov_poly(g, i, j, s, k)
        pii, pjj = symbolic.normalizer_polys(g, i, j, s, k)
        sym = np.abs(pij.evaluate_many(vals)) / np.sqrt(
            pii.evaluate_many(vals) * pjj.evaluate_many(vals))
        q = [i - 1, j - 1] + [v - 1 for v in s]
        theta = np.linalg.inv(sigma[:, q][:, :, q])
        num = np.abs(theta[:, 0, 1]) / np.sqrt(theta[:, 0, 0] * theta[:, 1, 1])
        worst = int(np.argmax(np.abs(sym - num)))
        if abs(sym[worst] - num[worst]) > PARCORR_TOL:
            return (f"|parcorr| {num[worst]!r} vs polynomial ratio {sym[worst]!r} for "
                    f"(i={i}, j={j}, S={list(s)}) at a={vals[worst].tolist()} on {_describe(g)}")
    return None


def run_verification(p_max: int = 5, n_random: int = 200, seed: int = 0,
                     points: int = 100, progress: Callable[[str], None] | None = None
                     ) -> VerificationReport:
    """Run every cross-check; stops each check at its first counterexample."""
    if p_max > symbolic.TREK_MAX_P:
        raise SymbolicTooLargeError(
            f"verify covers p <= {symbolic.TREK_MAX_P} (trek expansion limit), got {p_max}")
    dags = dag_corpus(p_max, n_random, seed)
    rng = np.random.default_rng(seed + 1)
    checks = [
        ("Sigma*K = I (exact)", _sigma_k_identity),
        ("path-rule K = (I-A)(I-A)^T", _k_product),
        ("trek Sigma = Neumann Sigma", _trek_neumann),
        ("Bayes-ball = moral d-separation", _dsep_agreement),
        ("P_ij|S = 0 <=> d-separated", _zero_iff_dsep),
        ("Ponstein det/cofactor = direct", _ponstein),
        ("|parcorr| = |P_ij|S| / sqrt(P_ii P_jj)",
         lambda g, r: _parcorr_agreement(g, r, points, rng)),
    ]
    report = VerificationReport(p_max, len(dags))
    for name, fn in checks:
        res = CheckResult(name)
        for g in dags:
            msg = fn(g, res)
            if msg is not None:
                res.failure = msg
                break
        report.checks.append(res)
        if progress is not None:
            progress(res.line())
    return report
