"""Exact assembly of the sieve quadratic forms on a symmetric basis.

For F = sum_i f_i g_i supported on the simplex,

    I(F)         = int F^2,
    sum_l J_l(F) = k * int_{simplex_{k-1}} ( int_0^{1 - s} F dt_k )^2,

the second identity holding because every basis element is symmetric.  Both
forms are returned as exact rational matrices.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as cartesian
from math import comb, prod
from typing import Sequence

import flint

from .simplex import Signature, _powersum_weight, factorial

__all__ = ["FormPair", "RationalMatrix", "assemble_I_form", "assemble_J_form", "assemble_forms", "inner_integral"]


class RationalMatrix:
    """Exact rational matrix stored as an integer matrix over one positive denominator."""

    __slots__ = ("numerator", "denominator")

    def __init__(self, numerator: flint.fmpz_mat, denominator: int = 1):
        if denominator <= 0:
            raise ValueError("denominator must be positive")
        self.numerator = numerator
        self.denominator = int(denominator)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "RationalMatrix":
        fr = [[Fraction(x) for x in r] for r in rows]
        den = 1
        for r in fr:
            for x in r:
                den = den * x.denominator // _gcd(den, x.denominator)
        num = flint.fmpz_mat([[int(x * den) for x in r] for r in fr]) if fr else flint.fmpz_mat(0, 0)
        return cls(num, den)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.numerator.nrows(), self.numerator.ncols())

    def __len__(self) -> int:
        return self.numerator.nrows()

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return Fraction(int(self.numerator[i, j]), self.denominator)

    def to_fractions(self) -> list[list[Fraction]]:
        n, m = self.shape
        return [[self[i, j] for j in range(m)] for i in range(n)]

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(self.numerator.transpose(), self.denominator)

    def is_symmetric(self) -> bool:
        return self.numerator == self.numerator.transpose()

    def leading(self, n: int) -> "RationalMatrix":
        """Leading principal n x n block."""
        rows = [[self.numerator[i, j] for j in range(n)] for i in range(n)]
        return RationalMatrix(flint.fmpz_mat(rows) if n else flint.fmpz_mat(0, 0), self.denominator)

    def quadratic_form(self, vec: Sequence) -> Fraction:
        """vec^T M vec, exactly."""
        fr = [Fraction(v) for v in vec]
        den = 1
        for v in fr:
            den = den * v.denominator // _gcd(den, v.denominator)
        col = flint.fmpz_mat([[int(v * den)] for v in fr])
        val = (col.transpose() * self.numerator * col)[0, 0]
        return Fraction(int(val), self.denominator * den * den)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.shape == other.shape and (
            self.numerator * other.denominator == other.numerator * self.denominator
        )

    def __repr__(self) -> str:
        return f"RationalMatrix(shape={self.shape})"


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


@dataclass(frozen=True)
class FormPair:
    """The two quadratic forms on a basis: M1 for sum_l J_l, M2 for I."""

    M1: RationalMatrix
    M2: RationalMatrix
    basis: tuple[Signature, ...]
    k: int
    family: str | None = None
    max_degree: int | None = None
    degrees: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        n = len(self.basis)
        if self.M1.shape != (n, n) or self.M2.shape != (n, n):
            raise ValueError(f"form shapes {self.M1.shape}, {self.M2.shape} do not match basis size {n}")
        if not self.degrees:
            object.__setattr__(self, "degrees", tuple(s.degree for s in self.basis))

    def prefix_length(self, degree: int) -> int:
        """Number of leading basis elements of total degree <= degree."""
        return sum(1 for d in self.degrees if d <= degree)


def _check_basis(basis: Sequence[Signature], k: int) -> tuple[Signature, ...]:
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    basis = tuple(basis)
    for s in basis:
        if not isinstance(s, Signature):
            raise TypeError(f"basis entries must be Signature, got {type(s).__name__}")
    if len(set(basis)) != len(basis):
        raise ValueError("basis contains repeated signatures")
    return basis


def _gram_numerator(sigs: Sequence[Signature], k: int) -> tuple[flint.fmpz_mat, int]:
    """Integer Gram matrix of int g_i g_j over the k-simplex, and its denominator top!."""
    n = len(sigs)
    if n == 0:
        return flint.fmpz_mat(0, 0), 1
    top = k + 2 * max(s.degree for s in sigs)
    fact_top = factorial(top)

    exp_index: dict[tuple[int, ...], int] = {}
    for s in sigs:
        exp_index.setdefault(s.exponents, len(exp_index))
    distinct = list(exp_index)
    weights: dict[tuple[int, int], tuple[int, int]] = {}
    for a, ea in enumerate(distinct):
        for b in range(a, len(distinct)):
            union = tuple(sorted(ea + distinct[b], reverse=True))
            weights[a, b] = weights[b, a] = (_powersum_weight(k, union), sum(union))

    rows = [[0] * n for _ in range(n)]
    idx = [exp_index[s.exponents] for s in sigs]
    betas = [s.boundary_power for s in sigs]
    for i in range(n):
        ii, bi = idx[i], betas[i]
        row = rows[i]
        for j in range(i, n):
            w, size = weights[ii, idx[j]]
            beta = bi + betas[j]
            v = factorial(beta) * w * (fact_top // factorial(k + beta + size)) if w else 0
            row[j] = v
            rows[j][i] = v
    return flint.fmpz_mat(rows), fact_top


def assemble_I_form(basis: Sequence[Signature], k: int) -> RationalMatrix:
    """Exact matrix of (g_a, g_b) -> int_simplex g_a g_b."""
    basis = _check_basis(basis, k)
    num, den = _gram_numerator(basis, k)
    return RationalMatrix(num, den)


def inner_integral(sig: Signature) -> dict[Signature, Fraction]:
    """int_0^{1-s} g dt_k for g = sig in k variables, as signatures in the other k - 1.

    Splitting P_r = P'_r + t_k^r and 1 - P1 = (1 - s) - t_k, each sub-multiset S
    of the power-sum factors sent to t_k contributes
    e! a! / (e + a + 1)! * (1 - s)^(e + a + 1) * prod_{r not in S} P'_r, e = sum(S).
    """
    a = sig.boundary_power
    counts = sorted(Counter(sig.exponents).items())
    out: dict[Signature, Fraction] = {}
    for take in cartesian(*(range(m + 1) for _, m in counts)):
        e = sum(v * t for (v, _), t in zip(counts, take))
        mult = prod(comb(m, t) for (_, m), t in zip(counts, take))
        rest = tuple(v for (v, m), t in zip(counts, take) for _ in range(m - t))
        q = Signature(rest, a + e + 1)
        out[q] = out.get(q, 0) + Fraction(mult * factorial(e) * factorial(a), factorial(e + a + 1))
    return out


def assemble_J_form(basis: Sequence[Signature], k: int) -> RationalMatrix:
    """Exact matrix of sum_l J_l as a bilinear form, using sum_l J_l = k * J_k."""
    basis = _check_basis(basis, k)
    n = len(basis)
    if n == 0:
        return RationalMatrix(flint.fmpz_mat(0, 0), 1)
    inner = [inner_integral(s) for s in basis]
    q_index: dict[Signature, int] = {}
    for h in inner:
        for q in h:
            q_index.setdefault(q, len(q_index))
    qs = sorted(q_index, key=Signature.sort_key)
    q_index = {q: i for i, q in enumerate(qs)}

    # coefficients e! a! / (e + a + 1)! have denominators dividing (d + 1)!
    scale = factorial(max(s.degree for s in basis) + 1)
    h_rows = [[0] * len(qs) for _ in range(n)]
    for i, h in enumerate(inner):
        for q, c in h.items():
            v = c * scale
            if v.denominator != 1:
                raise AssertionError("inner-integral coefficient not integral after scaling")
            h_rows[i][q_index[q]] = int(v)
    H = flint.fmpz_mat(h_rows)
    G, gden = _gram_numerator(qs, k - 1)
    num = H * G * H.transpose() * k
    return RationalMatrix(num, gden * scale * scale)


def assemble_forms(basis: Sequence[Signature], k: int, family: str | None = None,
                   max_degree: int | None = None) -> FormPair:
    basis = _check_basis(basis, k)
    return FormPair(
        M1=assemble_J_form(basis, k),
        M2=assemble_I_form(basis, k),
        basis=basis,
        k=k,
        family=family,
        max_degree=max_degree,
    )
