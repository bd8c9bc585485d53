"""Multivariate polynomials over named grid axes.

Coefficient data for PDE terms is kept symbolic as sparse exponent->coefficient
maps so the operator layer can form adjoints, derivatives and products exactly.
Axis names are free-form strings ("x1", "z1", "chi", "q0", ...).
"""
from __future__ import annotations

import numpy as np

Monomial = tuple[tuple[str, int], ...]   # sorted ((axis, exponent), ...)


def _norm_key(exps: dict[str, int]) -> Monomial:
    return tuple(sorted((a, int(e)) for a, e in exps.items() if e != 0))


class Poly:
    """Sparse polynomial sum_m c_m * prod_axis coord_axis^e."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Monomial, complex] | None = None):
        self.terms: dict[Monomial, complex] = {}
        if terms:
            for k, c in terms.items():
                if c != 0:
                    self.terms[k] = self.terms.get(k, 0) + complex(c)
        self.terms = {k: c for k, c in self.terms.items() if c != 0}

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, c: complex) -> "Poly":
        return cls({(): complex(c)}) if c != 0 else cls({})

    @classmethod
    def var(cls, axis: str, power: int = 1, coeff: complex = 1.0) -> "Poly":
        return cls({_norm_key({axis: power}): complex(coeff)})

    @classmethod
    def from_terms(cls, terms) -> "Poly":
        """terms: iterable of (exponent dict, coefficient)."""
        out: dict[Monomial, complex] = {}
        for exps, c in terms:
            k = _norm_key(exps)
            out[k] = out.get(k, 0) + complex(c)
        return cls(out)

    # -- queries -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(k == () for k in self.terms)

    def constant_value(self) -> complex:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.terms.get((), 0.0)

    @property
    def axes(self) -> set[str]:
        return {a for k in self.terms for a, _ in k}

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max((sum(e for _, e in k) for k in self.terms), default=0)

    def is_real(self, tol: float = 0.0) -> bool:
        return all(abs(c.imag) <= tol for c in self.terms.values())

    # -- algebra -------------------------------------------------------
    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return Poly(out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + other.scale(-1)

    def scale(self, c: complex) -> "Poly":
        return Poly({k: v * c for k, v in self.terms.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict[Monomial, complex] = {}
        for k1, c1 in self.terms.items():
            d1 = dict(k1)
            for k2, c2 in other.terms.items():
                d = dict(d1)
                for a, e in k2:
                    d[a] = d.get(a, 0) + e
                k = _norm_key(d)
                out[k] = out.get(k, 0) + c1 * c2
        return Poly(out)

    def diff(self, axis: str) -> "Poly":
        out: dict[Monomial, complex] = {}
        for k, c in self.terms.items():
            d = dict(k)
            e = d.get(axis, 0)
            if e == 0:
                continue
            d[axis] = e - 1
            kk = _norm_key(d)
            out[kk] = out.get(kk, 0) + c * e
        return Poly(out)

    def conj(self) -> "Poly":
        return Poly({k: np.conj(c) for k, c in self.terms.items()})

    # -- evaluation ----------------------------------------------------
    def evaluate(self, coords: dict[str, np.ndarray]) -> np.ndarray | complex:
        """Evaluate on broadcastable coordinate arrays (or scalars)."""
        total = None
        for k, c in self.terms.items():
            val = c
            for a, e in k:
                val = val * coords[a] ** e
            total = val if total is None else total + val
        if total is None:
            return 0.0 + 0.0j
        return total

    def eval_points(self, pts: dict[str, float]) -> complex:
        return complex(self.evaluate({a: np.asarray(v) for a, v in pts.items()}))

    # -- comparison / hashing -------------------------------------------
    def allclose(self, other: "Poly", tol: float = 1e-12) -> bool:
        keys = set(self.terms) | set(other.terms)
        scale = max((abs(c) for c in list(self.terms.values()) + list(other.terms.values())),
                    default=1.0)
        return all(abs(self.terms.get(k, 0) - other.terms.get(k, 0)) <= tol * max(scale, 1.0)
                   for k in keys)

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset((k, c) for k, c in self.terms.items()))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for k, c in sorted(self.terms.items()):
            mono = " ".join(f"{a}^{e}" if e > 1 else a for a, e in k)
            cs = _fmt_coeff(c)
            parts.append(f"{cs} {mono}".strip() if mono else cs)
        return " + ".join(parts)

    # -- serialization ---------------------------------------------------
    def to_json(self) -> list:
        return [[{a: e for a, e in k}, [c.real, c.imag]] for k, c in sorted(self.terms.items())]

    @classmethod
    def from_json(cls, data) -> "Poly":
        return cls.from_terms((exps, complex(re, im)) for exps, (re, im) in data)


def _fmt_coeff(c: complex) -> str:
    if c.imag == 0:
        return f"{c.real:g}"
    if c.real == 0:
        return f"{c.imag:g}i"
    return f"({c.real:g}{c.imag:+g}i)"
