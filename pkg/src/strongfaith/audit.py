"""Point-level lambda-strong-faithfulness verdicts.

A weight vector is lambda-faithful for a class when every triple in that
class has ``|partial correlation| > lambda``; values under the zero
threshold are structural zeros and never count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .errors import (EnumerationTooLargeError, InvalidQueryError,
                     InvalidRangeError)
from .graph import (FULL_ENUMERATION_BUDGET, Triple, count_candidates,
                    enumerate_triples)
from .numeric import ZERO_THRESHOLD, Weights, build_model, min_abs_parcorr, partial_correlation

CLASSES = ("M", "N1", "N2")
CLASS_MODE = {"M": "full", "N1": "restricted", "N2": "adjacency"}

ArgTriple = Optional[Tuple[int, int, Tuple[int, ...]]]


def check_lambdas(lambdas: Sequence[float]) -> Tuple[float, ...]:
    out = tuple(float(x) for x in lambdas)
    if not out:
        raise InvalidRangeError("need at least one lambda")
    for lam in out:
        if not 0.0 < lam < 1.0:
            raise InvalidRangeError(f"lambda must lie in (0, 1), got {lam}")
    return out


@dataclass
class AuditReport:
    lambda_values: Tuple[float, ...]
    zero_threshold: float
    minima: Dict[str, float]
    argmins: Dict[str, ArgTriple]
    full_class_available: bool = True
    note: str = ""
    classes: Tuple[str, ...] = field(default=CLASSES)

    def faithful(self, cls: str, lam: float) -> Optional[bool]:
        """True when the class minimum exceeds lambda; None if the class was skipped."""
        if cls not in self.minima:
            return None
        return bool(self.minima[cls] > lam)

    def unfaithful(self, cls: str, lam: float) -> Optional[bool]:
        v = self.faithful(cls, lam)
        return None if v is None else not v

    def rows(self):
        out = []
        for lam in self.lambda_values:
            for cls in self.classes:
                if cls not in self.minima:
                    out.append({"lambda": lam, "class": cls, "min_parcorr": None,
                                "verdict": None, "argmin": None})
                    continue
                m = self.minima[cls]
                arg = self.argmins[cls]
                out.append({
                    "lambda": lam,
                    "class": cls,
                    "min_parcorr": None if not np.isfinite(m) else float(m),
                    "verdict": "faithful" if m > lam else "unfaithful",
                    "argmin": None if arg is None else {"i": arg[0], "j": arg[1], "S": list(arg[2])},
                })
        return out

    def to_dict(self) -> dict:
        d = {
            "zero_threshold": self.zero_threshold,
            "full_class_available": self.full_class_available,
            "rows": self.rows(),
        }
        if self.note:
            d["note"] = self.note
        return d

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _triple_key(t: Triple | None) -> ArgTriple:
    return None if t is None else (t.i, t.j, tuple(t.s))


def _audit_enumerate(w: Weights, classes, thr):
    m = build_model(w)
    minima, args = {}, {}
    for cls in classes:
        triples = list(enumerate_triples(w.dag, CLASS_MODE[cls], budget=float("inf")))
        if not triples:
            minima[cls], args[cls] = np.inf, None
            continue
        val, arg = min_abs_parcorr(m, triples, thr)
        minima[cls], args[cls] = val, _triple_key(arg)
    return minima, args


def _audit_kernel(w: Weights, classes, thr):
    g = w.dag
    a = w.matrix()[None]
    need_dsep = "M" in classes or "N1" in classes
    if g.p <= kernels.MAX_TABLE_P:
        mins, args, _ = kernels.minima_fixed(a, kernels.flag_table(g, need_dsep), thr)
        decode = lambda code: kernels.decode_arg(code, g.p)
    else:
        mode = "restricted" if "N1" in classes else "adjacency"
        triples = list(enumerate_triples(g, mode))
        rows, sizes, bits = kernels.encode_triples(triples, g.p)
        mins, args, _ = kernels.minima_triples(a, rows, sizes, bits, thr)
        decode = lambda row: None if row < 0 else _triple_key(triples[row])
    minima = {c: float(mins[0, kernels.CLASS_BIT[c]]) for c in classes}
    argmins = {c: decode(int(args[0, kernels.CLASS_BIT[c]])) for c in classes}
    return minima, argmins


def audit(w: Weights, lambdas: Sequence[float] = (0.1, 0.01, 0.001),
          zero_threshold: float = ZERO_THRESHOLD,
          budget: int = FULL_ENUMERATION_BUDGET,
          method: str = "kernel") -> AuditReport:
    """Per-class minima and verdicts for one parameter point.

    ``method="kernel"`` uses the batched Schur-complement walk;
    ``method="enumerate"`` evaluates every triple independently and serves
    as the reference.  When the full class exceeds ``budget`` it is dropped
    and ``full_class_available`` is false.
    """
    lambdas = check_lambdas(lambdas)
    full_ok = count_candidates(w.dag, "full") <= budget and w.dag.p <= kernels.MAX_TABLE_P
    classes = CLASSES if full_ok else ("N1", "N2")
    if method == "kernel":
        minima, argmins = _audit_kernel(w, classes, zero_threshold)
    elif method == "enumerate":
        minima, argmins = _audit_enumerate(w, classes, zero_threshold)
    else:
        raise InvalidQueryError(f"unknown audit method {method!r}")
    note = "" if full_ok else "full class over the enumeration budget; M skipped"
    return AuditReport(lambdas, zero_threshold, minima, argmins, full_ok, note)


def early_exit_membership(w: Weights, lam: float, cls: str,
                          zero_threshold: float = ZERO_THRESHOLD,
                          budget: int = FULL_ENUMERATION_BUDGET) -> bool:
    """True iff some triple of ``cls`` has zero_threshold <= |parcorr| <= lam.

    Walks the class in enumeration order and stops at the first witness.
    """
    check_lambdas([lam])
    if cls not in CLASS_MODE:
        raise InvalidQueryError(f"unknown class {cls!r}")
    mode = CLASS_MODE[cls]
    if mode == "full" and count_candidates(w.dag, "full") > budget:
        raise EnumerationTooLargeError(count_candidates(w.dag, "full"), budget)
    m = build_model(w)
    for t in enumerate_triples(w.dag, mode, budget=budget):
        r = abs(partial_correlation(m, t.i, t.j, t.s))
        if zero_threshold <= r <= lam:
            return True
    return False
