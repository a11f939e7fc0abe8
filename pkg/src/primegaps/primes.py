"""Sieves, arithmetic tables and empirical gap statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "GapRecord",
    "primes_up_to",
    "sieve_range",
    "is_prime",
    "next_prime",
    "least_factor_tables",
    "max_gap_scan",
    "max_gap_scan_pairwise",
    "interval_prime_counts",
    "IntervalCounts",
    "gap_growth_curves",
    "rankin_form",
]

SEGMENT = 1 << 18
MAX_SIEVE = 1 << 63
MAX_SPAN = 10**9


@lru_cache(maxsize=8)
def _base_sieve(n: int) -> np.ndarray:
    """Primes < n by a plain Eratosthenes sieve (the monolithic reference)."""
    if n <= 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(n - 1) + 1, 2):
        if flags[p]:
            flags[p * p::2 * p] = False
    out = np.flatnonzero(flags).astype(np.int64)
    out.flags.writeable = False
    return out


def primes_up_to(n: int) -> np.ndarray:
    """All primes p <= n."""
    return _base_sieve(int(n) + 1)


def sieve_range(lo: int, hi: int) -> np.ndarray:
    """Primes in [lo, hi) by segmented sieving."""
    lo, hi = max(int(lo), 2), int(hi)
    if hi > MAX_SIEVE:
        raise ValueError("range exceeds 2^63")
    if hi - lo > MAX_SPAN:
        raise ValueError(f"range wider than {MAX_SPAN}")
    if hi <= lo:
        return np.zeros(0, dtype=np.int64)
    small = primes_up_to(math.isqrt(hi - 1))
    chunks = []
    for seg_lo in range(lo, hi, SEGMENT):
        seg_hi = min(seg_lo + SEGMENT, hi)
        flags = np.ones(seg_hi - seg_lo, dtype=bool)
        for p in small:
            p = int(p)
            if p * p >= seg_hi:
                break
            start = max(p * p, -(-seg_lo // p) * p)
            flags[start - seg_lo::p] = False
        chunks.append(np.flatnonzero(flags).astype(np.int64) + seg_lo)
    return np.concatenate(chunks)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 3.3e24, trial division below 10^6."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for p in small:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Least prime > n."""
    m = n + 1
    while not is_prime(m):
        m += 1
    return m


def least_factor_tables(limit: int) -> tuple[np.ndarray, np.ndarray]:
    """Least-prime-factor and Moebius tables for 0..limit (index 0 and 1: lpf 0 and 1)."""
    limit = int(limit)
    if limit < 1:
        raise ValueError("limit must be >= 1")
    lpf = np.zeros(limit + 1, dtype=np.int64)
    for p in primes_up_to(math.isqrt(limit))[::-1]:
        lpf[p::p] = p  # smaller primes overwrite later
    rest = lpf == 0
    lpf[rest] = np.arange(limit + 1)[rest]
    mu = np.ones(limit + 1, dtype=np.int8)
    mu[0] = 0
    for p in primes_up_to(limit):
        p = int(p)
        mu[p::p] *= -1
        if p * p <= limit:
            mu[p * p::p * p] = 0
    return lpf, mu


@dataclass(frozen=True)
class GapRecord:
    p: int
    next: int
    gap: int
    maximal: bool = True


def max_gap_scan(limit: int) -> list[GapRecord]:
    """Maximal gaps p -> next with p < limit, from a segmented sieve."""
    if limit < 3:
        raise ValueError("limit must be >= 3")
    # extend past limit far enough to find the successor of the last prime
    primes = sieve_range(2, limit)
    last = int(primes[-1])
    nxt = next_prime(last)
    ps = np.append(primes, nxt)
    gaps = np.diff(ps)
    running = np.maximum.accumulate(gaps)
    is_record = np.empty(len(gaps), dtype=bool)
    is_record[0] = True
    is_record[1:] = gaps[1:] > running[:-1]
    return [GapRecord(int(ps[i]), int(ps[i + 1]), int(gaps[i])) for i in np.flatnonzero(is_record)]


def max_gap_scan_pairwise(limit: int) -> list[GapRecord]:
    """Second, independent scan: walk integers with Miller-Rabin, no sieve."""
    if limit < 3:
        raise ValueError("limit must be >= 3")
    out: list[GapRecord] = []
    best = 0
    p = 2
    while p < limit:
        q = next_prime(p)
        if q - p > best:
            best = q - p
            out.append(GapRecord(p, q, q - p))
        p = q
    return out


@dataclass(frozen=True)
class IntervalCounts:
    X: int
    y: int
    histogram: dict[int, int]
    n_x: int
    exhaustive: bool
    threshold: float
    meeting_threshold: int

    @property
    def mean(self) -> float:
        return sum(c * n for c, n in self.histogram.items()) / self.n_x


def interval_prime_counts(X: int, y: int, c: float = 1.0, sample_budget: int = 10**7, seed: int = 0) -> IntervalCounts:
    """Histogram of #primes in [x, x + y] for x in [X, 2X]."""
    if X < 2 or y < 1:
        raise ValueError("need X >= 2 and y >= 1")
    primes = sieve_range(X, 2 * X + y + 1)
    flags = np.zeros(X + y + 2, dtype=np.int64)
    flags[primes - X] = 1
    cum = np.concatenate([[0], np.cumsum(flags)])
    if X + 1 <= sample_budget:
        xs = np.arange(X, 2 * X + 1)
        exhaustive = True
    else:
        # deterministic stratified sample: one point per stratum
        n = sample_budget
        rng = np.random.Generator(np.random.Philox(key=[seed, 7]))
        edges = np.linspace(X, 2 * X + 1, n + 1)
        xs = np.floor(edges[:-1] + rng.random(n) * np.diff(edges)).astype(np.int64)
        exhaustive = False
    counts = cum[xs - X + y + 1] - cum[xs - X]
    values, freq = np.unique(counts, return_counts=True)
    thr = c * math.log(y) if y > 1 else 0.0
    return IntervalCounts(
        X=X, y=y,
        histogram={int(v): int(f) for v, f in zip(values, freq)},
        n_x=len(xs), exhaustive=exhaustive, threshold=thr,
        meeting_threshold=int(np.count_nonzero(counts >= thr)),
    )


def rankin_form(X: float) -> float | None:
    """log X loglog X loglogloglog X / (logloglog X)^2, or None off its domain."""
    if X <= math.e:
        return None
    l1 = math.log(X)
    if l1 <= 1:
        return None
    l2 = math.log(l1)
    if l2 <= 1:
        return None
    l3 = math.log(l2)
    if l3 <= 1:
        return None
    l4 = math.log(l3)
    return l1 * l2 * l4 / l3**2


def gap_growth_curves(limit: int, step: int) -> list[dict]:
    """Rows (X, max gap below X, log^2 X, Rankin-shape value) for X = step, 2 step, ..."""
    if limit < 1000:
        raise ValueError("limit must be >= 1000")
    records = max_gap_scan(limit)
    rows = []
    for X in range(step, limit + 1, step):
        g = max((r.gap for r in records if r.next <= X), default=0)
        rows.append({"X": X, "max_gap": g, "log2_sq": math.log(X) ** 2, "rankin_form": rankin_form(X)})
    return rows
