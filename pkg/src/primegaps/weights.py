"""Direct evaluation of the multidimensional sieve weights for small k.

w(n) = ( sum_{d_i | L_i(n), d_1...d_k < R} mu(d_1...d_k) F(log d_1/log R, ..., log d_k/log R) )^2

with F recovered from F~ as its orthant tail integral
F(x) = int_{t >= x, sum t <= 1} F~(t) dt, so that differentiating once in
each coordinate returns F~ up to the sign (-1)^k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as cartesian

import numpy as np

from .primes import least_factor_tables
from .simplex import SymPoly

__all__ = ["WeightStats", "empirical_weight_expectation", "tail_integral"]

MAX_K = 4
MAX_SPAN = 2_000_000


def _eval_many(poly: SymPoly, pts: np.ndarray) -> np.ndarray:
    """Vectorized value of poly at the rows of pts."""
    p1 = pts.sum(axis=1)
    cache: dict[int, np.ndarray] = {}
    out = np.zeros(len(pts))
    for sig, c in poly.terms.items():
        v = float(c) * (1 - p1) ** sig.boundary_power
        for e in sig.exponents:
            if e not in cache:
                cache[e] = (pts**e).sum(axis=1)
            v = v * cache[e]
        out += v
    return out


class _TailIntegrator:
    """Exact (up to rounding) tail integrals of a polynomial by collapsed Gauss-Legendre rules."""

    def __init__(self, poly: SymPoly):
        self.poly = poly
        k = poly.k
        n = (poly.degree + k) // 2 + 2
        g, w = np.polynomial.legendre.leggauss(n)
        g, w = (g + 1) / 2, w / 2
        # map the unit cube onto the unit simplex: u_1 = v_1, u_j = v_j prod_{i<j}(1 - v_i)
        V = np.array(list(cartesian(g, repeat=k)))
        W = np.prod(np.array(list(cartesian(w, repeat=k))), axis=1)
        U = np.empty_like(V)
        rest = np.ones(len(V))
        jac = np.ones(len(V))
        for j in range(k):
            U[:, j] = V[:, j] * rest
            jac *= rest
            rest = rest * (1 - V[:, j])
        self.U = U
        self.W = W * jac
        self.k = k

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        s = 1 - x.sum()
        if s <= 0:
            return 0.0
        pts = x + s * self.U
        return float(s**self.k * (self.W * _eval_many(self.poly, pts)).sum())


def tail_integral(poly: SymPoly, x) -> float:
    return _TailIntegrator(poly)(x)


@dataclass(frozen=True)
class WeightStats:
    k: int
    X: int
    R: float
    raw_weight_sum: float
    mean_weight: float
    prime_hit_expectation: float
    n_count: int
    zero_weight_count: int


def _squarefree_divisors(n: int, lpf: np.ndarray, bound: float) -> list[tuple[int, int]]:
    """(d, mu(d)) for squarefree d | n with d < bound."""
    primes = []
    while n > 1:
        p = int(lpf[n])
        primes.append(p)
        while n % p == 0:
            n //= p
    divs = [(1, 1)]
    for p in primes:
        divs += [(d * p, -m) for d, m in divs if d * p < bound]
    return divs


def empirical_weight_expectation(shifts, R: float, X: int, F_tilde: SymPoly) -> WeightStats:
    """Sum of w(n) over n in [X, 2X] and E #{i : n + h_i prime} under the normalized weights.

    The normalization constant cancels in the expectation, so both the raw sum
    and the mean weight per n are reported.
    """
    shifts = [int(h) for h in (getattr(shifts, "shifts", shifts))]
    k = len(shifts)
    if k > MAX_K:
        raise ValueError(f"direct evaluation supports k <= {MAX_K}")
    if F_tilde.k != k:
        raise ValueError("F_tilde dimension must equal the tuple length")
    if not R**2 < X:
        raise ValueError("need R^2 < X")
    if X + 1 > MAX_SPAN:
        raise ValueError("X exceeds the divisor enumeration budget")
    top = 2 * X + max(shifts)
    lpf, _ = least_factor_tables(top)
    logR = math.log(R)
    F = _TailIntegrator(F_tilde)
    f_cache: dict[tuple[int, ...], float] = {}

    def f_of(ds: tuple[int, ...]) -> float:
        v = f_cache.get(ds)
        if v is None:
            v = f_cache[ds] = F([math.log(d) / logR for d in ds])
        return v

    ns = np.arange(X, 2 * X + 1)
    total = 0.0
    hit = 0.0
    zeros = 0
    for n in ns:
        n = int(n)
        divs = [_squarefree_divisors(n + h, lpf, R) for h in shifts]
        s = 0.0
        for combo in cartesian(*divs):
            d = 1
            mu = 1
            ok = True
            for di, mi in combo:
                # mu of the product vanishes unless the d_i are pairwise coprime
                if math.gcd(di, d) != 1 or d * di >= R:
                    ok = False
                    break
                d *= di
                mu *= mi
            if ok:
                s += mu * f_of(tuple(di for di, _ in combo))
        w = s * s
        if w == 0:
            zeros += 1
        total += w
        primes_here = sum(1 for h in shifts if lpf[n + h] == n + h)
        hit += w * primes_here
    return WeightStats(
        k=k, X=X, R=R, raw_weight_sum=total, mean_weight=total / len(ns),
        prime_hit_expectation=hit / total if total else 0.0,
        n_count=len(ns), zero_weight_count=zeros,
    )
