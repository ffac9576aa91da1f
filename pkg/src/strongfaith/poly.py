"""Sparse multivariate polynomials with exact integer coefficients.

A polynomial maps exponent tuples (one entry per variable) to Python ints.
Zero coefficients are never stored, so the zero polynomial is the empty
map and equality is structural.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

Exponent = Tuple[int, ...]


def _add_exp(a: Exponent, b: Exponent) -> Exponent:
    return tuple(x + y for x, y in zip(a, b))


def _grlex_key(exp: Exponent):
    # graded lexicographic, highest first
    return (-sum(exp), tuple(-e for e in exp))


class SparsePoly:
    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Dict[Exponent, int] | None = None):
        self.nvars = nvars
        clean = {}
        for exp, c in (terms or {}).items():
            if len(exp) != nvars:
                raise ValueError(f"exponent {exp} has wrong length for {nvars} variables")
            if c:
                clean[tuple(exp)] = int(c)
        self.terms = clean
        self._hash = None

    # -- constructors ------------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "SparsePoly":
        return cls(nvars)

    @classmethod
    def const(cls, nvars: int, value: int) -> "SparsePoly":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def var(cls, nvars: int, index: int, power: int = 1) -> "SparsePoly":
        exp = [0] * nvars
        exp[index] = power
        return cls(nvars, {tuple(exp): 1})

    @classmethod
    def _raw(cls, nvars, terms):
        out = cls.__new__(cls)
        out.nvars = nvars
        out.terms = terms
        out._hash = None
        return out

    def _coerce(self, other) -> "SparsePoly":
        if isinstance(other, SparsePoly):
            if other.nvars != self.nvars:
                raise ValueError("polynomials live in different rings")
            return other
        if isinstance(other, int):
            return SparsePoly.const(self.nvars, other)
        return NotImplemented

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for exp, c in other.terms.items():
            v = out.get(exp, 0) + c
            if v:
                out[exp] = v
            else:
                out.pop(exp, None)
        return SparsePoly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self.terms or not other.terms:
            return SparsePoly._raw(self.nvars, {})
        out: Dict[Exponent, int] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = _add_exp(e1, e2)
                v = out.get(e, 0) + c1 * c2
                if v:
                    out[e] = v
                else:
                    out.pop(e, None)
        return SparsePoly._raw(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        out = SparsePoly.const(self.nvars, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, int):
            other = SparsePoly.const(self.nvars, other)
        if not isinstance(other, SparsePoly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    # -- queries -----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; the zero polynomial has degree 0 by convention here."""
        return max((sum(e) for e in self.terms), default=0)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e in self.terms), default=0)

    def constant_term(self) -> int:
        return self.terms.get((0,) * self.nvars, 0)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: _grlex_key(t[0]))

    def monomial_content(self) -> Exponent:
        """Largest monomial dividing every term (componentwise min exponent)."""
        if not self.terms:
            return (0,) * self.nvars
        exps = list(self.terms)
        return tuple(min(col) for col in zip(*exps))

    def divide_monomial(self, exp: Exponent) -> "SparsePoly":
        out = {}
        for e, c in self.terms.items():
            q = tuple(a - b for a, b in zip(e, exp))
            if min(q, default=0) < 0:
                raise ValueError(f"monomial {exp} does not divide the polynomial")
            out[q] = c
        return SparsePoly._raw(self.nvars, out)

    def variables(self) -> set:
        return {k for e in self.terms for k, x in enumerate(e) if x}

    # -- evaluation --------------------------------------------------------
    def evaluate(self, point: Sequence) -> object:
        """Exact evaluation at ints or Fractions (floats also work)."""
        total = 0
        for e, c in self.terms.items():
            term = c
            for x, k in zip(point, e):
                if k:
                    term = term * x ** k
            total = total + term
        return total

    def evaluate_fraction(self, point: Iterable) -> Fraction:
        return Fraction(self.evaluate([Fraction(x) for x in point]))

    def to_arrays(self):
        """``(exponents, coefficients)`` as int and float arrays."""
        if not self.terms:
            return np.zeros((0, self.nvars), dtype=np.int64), np.zeros(0)
        exps = np.array(list(self.terms), dtype=np.int64).reshape(len(self.terms), self.nvars)
        coefs = np.array([float(c) for c in self.terms.values()])
        return exps, coefs

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorised float evaluation at the rows of ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        exps, coefs = self.to_arrays()
        if len(coefs) == 0:
            return np.zeros(points.shape[0])
        powers = np.ones((points.shape[0], len(coefs)))
        for k in range(self.nvars):
            col = exps[:, k]
            if col.any():
                powers *= points[:, k:k + 1] ** col[None, :]
        return powers @ coefs

    # -- printing ----------------------------------------------------------
    def format(self, names: Sequence[str] | None = None) -> str:
        """Deterministic ``coef * x^e ...`` text, graded-lex order."""
        if names is None:
            names = [f"x{k}" for k in range(self.nvars)]
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            factors = []
            for name, k in zip(names, e):
                if k == 1:
                    factors.append(name)
                elif k > 1:
                    factors.append(f"{name}^{k}")
            parts.append(" * ".join([str(c)] + factors))
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"SparsePoly({self.format()})"


def poly_sum(polys: Iterable[SparsePoly], nvars: int) -> SparsePoly:
    out: Dict[Exponent, int] = {}
    for q in polys:
        for e, c in q.terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
    return SparsePoly._raw(nvars, out)
