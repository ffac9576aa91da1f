"""Closed-form lower bounds on unfaithful volume for structured DAG families.

Every bound has the form ``1 - (1 - lambda / r) ** E`` where the exponent
``E`` depends on the family, the size ``p`` and the triple class.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import List, Sequence

from .errors import InvalidFamilyError, InvalidQueryError, InvalidRangeError, InvalidSizeError
from .graph import Dag
from .symbolic import degree_sum

FAMILIES = ("tree", "cycle", "bipartite")
CLASSES = ("M", "N1", "N2")
MIN_P = {"tree": 2, "cycle": 3, "bipartite": 4}

UPPER_BOUND_FORMULA = ("vol <= C(|E|) * c * kappa^k * lambda^k / 2^(|E|/2) * D, "
                       "D = sum of deg P_ij|S over the triple set; "
                       "C, c, kappa, k are unknown constants")


def exponent(family: str, p: int, cls: str) -> int:
    if family not in FAMILIES:
        raise InvalidFamilyError(f"no closed-form bound for family {family!r}")
    if cls not in CLASSES:
        raise InvalidQueryError(f"unknown class {cls!r}")
    if p < MIN_P[family]:
        raise InvalidSizeError(f"{family} needs p >= {MIN_P[family]}, got {p}")
    if family == "tree":
        return p - 1
    if family == "bipartite":
        return (p - 2) * (2 ** (p - 3) + 1)
    return {"M": p + comb(p - 1, 2), "N1": 3 * p - 2, "N2": 2 * p - 1}[cls]


def lower_bound(family: str, p: int, lam: float, cls: str = "M", r: float = 1.0) -> float:
    """1 - (1 - lambda/r)^E; the scaled cube [-r, r] enters only through lambda/r."""
    if r <= 0:
        raise InvalidRangeError("cube radius must be positive")
    x = lam / r
    if not 0.0 < x < 1.0:
        raise InvalidRangeError(f"lambda/r must lie in (0, 1), got {x}")
    return 1.0 - (1.0 - x) ** exponent(family, p, cls)


@dataclass(frozen=True)
class BoundRow:
    family: str
    p: int
    lam: float
    cls: str
    bound: float
    exponent: int
    r: float = 1.0


def bound_table(families: Sequence[str], ps: Sequence[int], lambdas: Sequence[float],
                classes: Sequence[str] = CLASSES, r: float = 1.0) -> List[BoundRow]:
    return [BoundRow(f, p, lam, c, lower_bound(f, p, lam, c, r), exponent(f, p, c), r)
            for f in families for p in ps for lam in lambdas for c in classes]


def upper_bound_degree_term(g: Dag, mode: str = "full") -> dict:
    """The computable factor of the volume upper bound.

    The remaining constants have no known values, so no number is produced
    for the bound itself; only the degree sum and the formula it enters.
    """
    return {"degree_sum": degree_sum(g, mode), "mode": mode, "formula": UPPER_BOUND_FORMULA}
