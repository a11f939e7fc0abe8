"""Exact integration of symmetric polynomials over the unit simplex.

The simplex in dimension k is {t in [0, inf)^k : t_1 + ... + t_k <= 1}.  Symmetric
polynomials are stored in a power-sum representation: every term is

    (1 - P1)^beta * P_{e_1} * P_{e_2} * ...      with P_r = sum_i t_i^r,

which is closed under multiplication.  Integrals reduce to the Dirichlet formula

    int prod t_i^{a_i} (1 - sum t_i)^beta dt = beta! * prod a_i! / (k + beta + sum a_i)!

after expanding each power-sum product into monomial symmetric functions.
"""
from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, prod
from typing import Iterable, Mapping, Sequence

__all__ = [
    "FAMILIES",
    "MonomialTerm",
    "Signature",
    "SymPoly",
    "enumerate_signatures",
    "expand_to_monomials",
    "factorial",
    "integrate_sympoly",
    "monomial_simplex_integral",
    "orbit_size",
    "powersum_to_monomials",
    "signature_integral",
]

_FACTORIALS = [1]
_FACTORIAL_LOCK = threading.Lock()


def factorial(n: int) -> int:
    """Memoized n!; the table only ever grows."""
    if n < 0:
        raise ValueError(f"factorial of negative number {n}")
    if n < len(_FACTORIALS):
        return _FACTORIALS[n]
    with _FACTORIAL_LOCK:
        while len(_FACTORIALS) <= n:
            _FACTORIALS.append(_FACTORIALS[-1] * len(_FACTORIALS))
    return _FACTORIALS[n]


def _check_nonneg_int(name: str, value: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {value!r}")


def monomial_simplex_integral(a: Sequence[int], k: int, beta: int = 0) -> Fraction:
    """Integral of prod t_i^{a_i} * (1 - sum t_i)^beta over the k-dimensional simplex.

    Coordinates beyond ``len(a)`` carry exponent zero.  ``k = 0`` is the
    zero-dimensional simplex (a point), where the integral of the empty
    monomial is 1.
    """
    _check_nonneg_int("k", k)
    _check_nonneg_int("beta", beta)
    a = list(a)
    if len(a) > k:
        raise ValueError(f"{len(a)} exponents given for a {k}-dimensional simplex")
    for e in a:
        _check_nonneg_int("exponent", e)
    num = factorial(beta) * prod(factorial(e) for e in a)
    return Fraction(num, factorial(k + beta + sum(a)))


@dataclass(frozen=True)
class Signature:
    """Basis index: (1 - P1)^boundary_power times the product of P_e over ``exponents``.

    ``exponents`` is kept sorted descending, so two signatures compare equal
    exactly when their exponent multisets and boundary powers agree.
    """

    exponents: tuple[int, ...] = ()
    boundary_power: int = 0

    def __post_init__(self) -> None:
        exps = tuple(sorted((int(e) for e in self.exponents), reverse=True))
        if any(e < 1 for e in exps):
            raise ValueError(f"power-sum exponents must be >= 1, got {exps}")
        _check_nonneg_int("boundary_power", self.boundary_power)
        object.__setattr__(self, "exponents", exps)

    @property
    def degree(self) -> int:
        return sum(self.exponents) + self.boundary_power

    def sort_key(self) -> tuple:
        return (self.degree, self.exponents, self.boundary_power)

    def __mul__(self, other: "Signature") -> "Signature":
        if not isinstance(other, Signature):
            return NotImplemented
        return Signature(self.exponents + other.exponents, self.boundary_power + other.boundary_power)

    def __str__(self) -> str:
        parts = []
        if self.boundary_power == 1:
            parts.append("(1-P1)")
        elif self.boundary_power > 1:
            parts.append(f"(1-P1)^{self.boundary_power}")
        for e, m in sorted(Counter(self.exponents).items()):
            parts.append(f"P{e}" if m == 1 else f"P{e}^{m}")
        return "*".join(parts) or "1"

    def to_json(self) -> dict:
        return {"exponents": list(self.exponents), "boundary_power": self.boundary_power}


def _sorted_desc(values: Iterable[int]) -> tuple[int, ...]:
    return tuple(sorted(values, reverse=True))


@lru_cache(maxsize=None)
def powersum_to_monomials(exponents: tuple[int, ...]) -> Mapping[tuple[int, ...], int]:
    """Expand prod_j P_{e_j} into monomial symmetric functions m_lambda.

    The coefficients do not depend on the number of variables; terms whose
    partition is longer than the dimension simply vanish there.  Built one
    factor at a time from P_r * m_lam = sum_nu c_nu m_nu, where nu raises one
    part u of lam (possibly a new zero part) by r and c_nu is the multiplicity
    of u + r in nu.
    """
    if not exponents:
        return {(): 1}
    r = exponents[-1]
    out: Counter = Counter()
    for lam, coeff in powersum_to_monomials(exponents[:-1]).items():
        for u in set(lam) | {0}:
            parts = list(lam)
            if u:
                parts.remove(u)
            parts.append(u + r)
            nu = _sorted_desc(parts)
            out[nu] += coeff * nu.count(u + r)
    return dict(out)


def orbit_size(lam: Sequence[int], k: int) -> int:
    """Number of distinct exponent vectors in k coordinates that sort to ``lam``."""
    parts = [e for e in lam if e]
    if len(parts) > k:
        return 0
    n = factorial(k) // factorial(k - len(parts))
    for m in Counter(parts).values():
        n //= factorial(m)
    return n


@lru_cache(maxsize=None)
def _powersum_weight(k: int, exponents: tuple[int, ...]) -> int:
    # sum over monomials of prod(a_i!) = (k + |e|)! * integral of the power-sum product
    total = 0
    for lam, coeff in powersum_to_monomials(exponents).items():
        n = orbit_size(lam, k)
        if n:
            total += coeff * n * prod(factorial(e) for e in lam)
    return total


def signature_integral(sig: Signature, k: int) -> Fraction:
    """Exact integral of one signature over the k-dimensional simplex (k >= 0)."""
    beta = sig.boundary_power
    weight = _powersum_weight(k, sig.exponents)
    return Fraction(factorial(beta) * weight, factorial(k + beta + sum(sig.exponents)))


def signature_integral_scaled(sig: Signature, k: int, top: int) -> int:
    """``top! * signature_integral(sig, k)`` as an exact integer.

    Requires ``top >= k + sig.degree``; used to fill integer matrices over a
    common factorial denominator.
    """
    total = k + sig.degree
    if top < total:
        raise ValueError(f"common denominator {top}! too small for total degree {total}")
    weight = _powersum_weight(k, sig.exponents)
    return factorial(sig.boundary_power) * weight * (factorial(top) // factorial(total))


class SymPoly:
    """Symmetric polynomial in k variables as a combination of signatures."""

    __slots__ = ("k", "_terms")

    def __init__(self, k: int, terms: Mapping[Signature, Fraction | int] | None = None):
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            raise ValueError(f"dimension must be a positive integer, got {k!r}")
        self.k = k
        clean: dict[Signature, Fraction] = {}
        for sig, c in (terms or {}).items():
            if not isinstance(sig, Signature):
                raise TypeError(f"term key must be a Signature, got {type(sig).__name__}")
            c = Fraction(c)
            if c:
                clean[sig] = clean.get(sig, Fraction(0)) + c
        self._terms = {s: c for s, c in clean.items() if c}

    @classmethod
    def constant(cls, k: int, value=1) -> "SymPoly":
        return cls(k, {Signature(): value})

    @classmethod
    def from_signature(cls, sig: Signature, k: int, coeff=1) -> "SymPoly":
        return cls(k, {sig: coeff})

    @classmethod
    def boundary(cls, k: int, power: int = 1) -> "SymPoly":
        """(1 - P1)^power."""
        return cls(k, {Signature((), power): 1})

    @classmethod
    def power_sum(cls, k: int, r: int) -> "SymPoly":
        return cls(k, {Signature((r,)): 1})

    @property
    def terms(self) -> Mapping[Signature, Fraction]:
        return dict(self._terms)

    @property
    def degree(self) -> int:
        return max((s.degree for s in self._terms), default=0)

    def _coerce(self, other) -> "SymPoly":
        if isinstance(other, SymPoly):
            if other.k != self.k:
                raise ValueError(f"dimension mismatch: {self.k} vs {other.k}")
            return other
        return SymPoly.constant(self.k, Fraction(other))

    def __add__(self, other) -> "SymPoly":
        other = self._coerce(other)
        terms = dict(self._terms)
        for s, c in other._terms.items():
            terms[s] = terms.get(s, 0) + c
        return SymPoly(self.k, terms)

    __radd__ = __add__

    def __neg__(self) -> "SymPoly":
        return SymPoly(self.k, {s: -c for s, c in self._terms.items()})

    def __sub__(self, other) -> "SymPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "SymPoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "SymPoly":
        if not isinstance(other, SymPoly):
            c = Fraction(other)
            return SymPoly(self.k, {s: c * v for s, v in self._terms.items()})
        other = self._coerce(other)
        out: dict[Signature, Fraction] = {}
        for s1, c1 in self._terms.items():
            for s2, c2 in other._terms.items():
                s = s1 * s2
                out[s] = out.get(s, 0) + c1 * c2
        return SymPoly(self.k, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "SymPoly":
        _check_nonneg_int("power", n)
        result = SymPoly.constant(self.k)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymPoly):
            return NotImplemented
        return self.k == other.k and self._terms == other._terms

    def __hash__(self):
        return hash((self.k, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        body = " + ".join(f"{c}*{s}" for s, c in sorted(self._terms.items(), key=lambda kv: kv[0].sort_key()))
        return f"SymPoly(k={self.k}, {body or '0'})"

    def evaluate(self, point: Sequence[float]) -> float:
        """Value at a point of R^k (no support cut-off is applied)."""
        if len(point) != self.k:
            raise ValueError(f"expected {self.k} coordinates, got {len(point)}")
        p1 = sum(point)
        total = 0.0
        for sig, c in self._terms.items():
            v = float(c) * (1.0 - p1) ** sig.boundary_power
            for e in sig.exponents:
                v *= sum(t**e for t in point)
            total += v
        return total


@dataclass(frozen=True)
class MonomialTerm:
    """Coefficient of each single monomial t^lambda, and how many such monomials exist."""

    coefficient: Fraction
    multiplicity: int

    @property
    def total(self) -> Fraction:
        return self.coefficient * self.multiplicity


def expand_to_monomials(p: SymPoly) -> dict[tuple[int, ...], MonomialTerm]:
    """Full expansion into monomials, grouped by sorted exponent vector.

    Every distinct permutation of a key ``lam`` (padded to k coordinates)
    carries the same coefficient; ``multiplicity`` counts those permutations.
    """
    acc: dict[tuple[int, ...], Fraction] = {}
    for sig, c in p.terms.items():
        beta = sig.boundary_power
        for j in range(beta + 1):
            scale = c * comb(beta, j) * (-1) ** j
            exps = _sorted_desc(sig.exponents + (1,) * j)
            for lam, m in powersum_to_monomials(exps).items():
                if len(lam) <= p.k:
                    acc[lam] = acc.get(lam, 0) + scale * m
    return {
        lam: MonomialTerm(Fraction(v), orbit_size(lam, p.k))
        for lam, v in sorted(acc.items(), key=lambda kv: (sum(kv[0]), kv[0]))
        if v
    }


def integrate_sympoly(p: SymPoly) -> Fraction:
    return sum((c * signature_integral(s, p.k) for s, c in p.terms.items()), Fraction(0))


# name -> (power-sum generators as a function of the generator budget, description)
FAMILIES: dict[str, tuple] = {
    "p1p2": (lambda n: (2,), "(1-P1)^a * P2^b"),
    "p1p2p3": (lambda n: (2, 3), "(1-P1)^a * P2^b * P3^c"),
    "even": (lambda n: tuple(range(2, 2 * n + 1, 2)), "(1-P1)^a * prod P_{2j}"),
}


def family_generators(family: str, k: int, max_degree: int) -> tuple[int, ...]:
    """Power-sum generators usable in dimension k.

    P1 together with at most k - 1 further power sums keeps the basis
    algebraically independent in k variables, so longer generator lists are
    truncated.
    """
    try:
        gens_of, _ = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown basis family {family!r}; known: {sorted(FAMILIES)}") from None
    gens = [g for g in gens_of(max(max_degree, 1)) if g <= max_degree]
    return tuple(gens[: max(k - 1, 0)])


def enumerate_signatures(k: int, family: str = "p1p2", max_degree: int = 0) -> list[Signature]:
    """All basis signatures of total degree <= max_degree, sorted by (degree, exponents, boundary)."""
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    _check_nonneg_int("max_degree", max_degree)
    gens = family_generators(family, k, max_degree)

    products: list[tuple[int, ...]] = []

    def extend(prefix: list[int], remaining: int, start: int) -> None:
        products.append(tuple(prefix))
        for idx in range(start, len(gens)):
            g = gens[idx]
            if g <= remaining:
                prefix.append(g)
                extend(prefix, remaining - g, idx)
                prefix.pop()

    extend([], max_degree, 0)
    sigs = {
        Signature(exps, a)
        for exps in products
        for a in range(max_degree - sum(exps) + 1)
    }
    return sorted(sigs, key=Signature.sort_key)
