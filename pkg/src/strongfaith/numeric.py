"""Floating-point Gaussian SEM: covariance, concentration, partial correlations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (InvalidQueryError, InvalidRangeError,
                     NumericalDegeneracyError)
from .graph import Dag, Triple, parse_dag_text

#: partial correlations below this are treated as structural zeros
ZERO_THRESHOLD = 1e-12

_COND_LIMIT = 1e13


@dataclass(frozen=True)
class Weights:
    """Edge weights of a DAG, stored in the DAG's edge order."""

    dag: Dag
    values: tuple
    radius: float = 1.0

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if len(values) != len(self.dag.edges):
            raise InvalidQueryError(
                f"{len(values)} weights for {len(self.dag.edges)} edges")
        if not np.all(np.isfinite(values)):
            raise InvalidRangeError("weights must be finite")
        if any(abs(v) > self.radius for v in values):
            raise InvalidRangeError(
                f"weights must lie in [-{self.radius}, {self.radius}]")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_mapping(cls, dag: Dag, mapping: dict, radius: float = 1.0) -> "Weights":
        missing = [e for e in dag.edges if e not in mapping]
        extra = [e for e in mapping if e not in dag.edge_set]
        if missing or extra:
            raise InvalidQueryError(
                f"weights do not match edges (missing {missing}, extra {extra})")
        return cls(dag, tuple(mapping[e] for e in dag.edges), radius)

    def __getitem__(self, edge):
        return self.values[self.dag.edge_index[tuple(edge)]]

    def as_dict(self) -> dict:
        return dict(zip(self.dag.edges, self.values))

    def matrix(self) -> np.ndarray:
        """Upper-triangular A with A[i-1, j-1] = a_ij."""
        a = np.zeros((self.dag.p, self.dag.p))
        for (i, j), v in zip(self.dag.edges, self.values):
            a[i - 1, j - 1] = v
        return a


@dataclass(frozen=True, eq=False)
class GaussianModel:
    sigma: np.ndarray
    k: np.ndarray

    @property
    def p(self) -> int:
        return self.sigma.shape[0]


def build_model(w: Weights) -> GaussianModel:
    """K = (I - A)(I - A)^T and its inverse.

    ``I - A`` is unit upper triangular, so it is already a factor of K and
    the inverse follows from inverting that factor.
    """
    p = w.dag.p
    u = np.eye(p) - w.matrix()
    k = u @ u.T
    try:
        u_inv = np.linalg.inv(u)
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError(str(exc)) from exc
    sigma = u_inv.T @ u_inv
    if not (np.all(np.isfinite(sigma)) and np.all(np.isfinite(k))):
        raise NumericalDegeneracyError("non-finite covariance")
    sigma = 0.5 * (sigma + sigma.T)
    sigma.setflags(write=False)
    k.setflags(write=False)
    return GaussianModel(sigma=sigma, k=k)


def _indices(p, i, j, s):
    if i == j:
        raise InvalidQueryError("partial correlation needs i != j")
    s = tuple(sorted(s))
    if i in s or j in s:
        raise InvalidQueryError("conditioning set must exclude i and j")
    for v in (i, j, *s):
        if not 1 <= v <= p:
            raise InvalidQueryError(f"vertex {v} outside 1..{p}")
    return [i - 1, j - 1] + [v - 1 for v in s]


def _spd_inverse(mat: np.ndarray) -> np.ndarray:
    try:
        chol = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError("submatrix is not positive definite") from exc
    diag = np.diag(chol)
    if diag.min() <= 0 or (diag.max() / diag.min()) ** 2 > _COND_LIMIT:
        raise NumericalDegeneracyError("ill-conditioned submatrix")
    l_inv = np.linalg.inv(chol)
    return l_inv.T @ l_inv


def _corr_from_precision(theta: np.ndarray) -> float:
    r = -theta[0, 1] / np.sqrt(theta[0, 0] * theta[1, 1])
    return float(min(1.0, max(-1.0, r)))


def parcorr_sigma(m: GaussianModel, i: int, j: int, s=()) -> float:
    """Invert the (S u {i, j}) principal submatrix of Sigma."""
    q = _indices(m.p, i, j, s)
    return _corr_from_precision(_spd_inverse(m.sigma[np.ix_(q, q)]))


def parcorr_schur(m: GaussianModel, i: int, j: int, s=()) -> float:
    """Marginalize the complement out of K with a Schur complement."""
    q = _indices(m.p, i, j, s)
    qc = [v for v in range(m.p) if v not in q]
    kq = m.k[np.ix_(q, q)]
    if qc:
        kqc = m.k[np.ix_(q, qc)]
        kq = kq - kqc @ _spd_inverse(m.k[np.ix_(qc, qc)]) @ kqc.T
    return _corr_from_precision(kq)


def partial_correlation(m: GaussianModel, i: int, j: int, s=(),
                        method: str = "auto") -> float:
    """corr(X_i, X_j | X_S), sign convention -Theta_ij / sqrt(Theta_ii Theta_jj).

    ``auto`` inverts a Sigma block when the conditioning block is at most
    half the graph and otherwise takes the Schur complement in K, so the
    matrix that gets inverted is always the smaller one.
    """
    if method == "auto":
        method = "sigma" if len(tuple(s)) + 2 <= m.p / 2 + 1 else "schur"
    if method == "sigma":
        return parcorr_sigma(m, i, j, s)
    if method == "schur":
        return parcorr_schur(m, i, j, s)
    raise InvalidQueryError(f"unknown method {method!r}")


def min_abs_parcorr(m: GaussianModel, triples: Iterable[Triple],
                    zero_threshold: float = ZERO_THRESHOLD):
    """Smallest |partial correlation| over ``triples`` ignoring structural zeros.

    Returns ``(inf, None)`` when every value falls below the threshold.
    """
    best, arg = np.inf, None
    seen = False
    for t in triples:
        seen = True
        r = abs(partial_correlation(m, t.i, t.j, t.s))
        if r < zero_threshold:
            continue
        if r < best:
            best, arg = r, t
    if not seen:
        raise InvalidQueryError("min_abs_parcorr needs at least one triple")
    return best, arg


# --------------------------------------------------------------------------
# weights text format
# --------------------------------------------------------------------------

def parse_weights_text(text: str, path=None, radius: float = 1.0) -> Weights:
    g, values = parse_dag_text(text, path=path, weighted=True)
    return Weights(g, tuple(values), radius)


def format_weights(w: Weights) -> str:
    lines = [f"p {w.dag.p}"]
    lines += [f"{i} {j} {v!r}" for (i, j), v in zip(w.dag.edges, w.values)]
    return "\n".join(lines) + "\n"


def read_weights(path, radius: float = 1.0) -> Weights:
    with open(path, encoding="utf-8") as fh:
        return parse_weights_text(fh.read(), path=str(path), radius=radius)


def write_weights(w: Weights, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_weights(w))


def weights_from_sequence(g: Dag, values: Sequence[float], radius: float = 1.0) -> Weights:
    return Weights(g, tuple(values), radius)
