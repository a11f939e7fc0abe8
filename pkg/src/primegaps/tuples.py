"""Admissible tuples: verification, construction, narrowest search, gap bounds."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Callable, Iterable, Sequence

from .optimizer import ExpectationParams, MinKResult, RatioCertificate, guaranteed_primes, min_k_certify
from .primes import primes_up_to

__all__ = [
    "AdmissibleTuple",
    "Admissibility",
    "LinearSystem",
    "is_admissible",
    "primes_after_k_tuple",
    "narrowest_tuple",
    "NarrowestResult",
    "load_tuple54",
    "default_k_range",
    "gap_bound_pipeline",
    "PipelineResult",
]

EXHAUSTIVE_MAX_K = 8


@dataclass(frozen=True)
class Admissibility:
    admissible: bool
    witnesses: dict[int, int] = field(default_factory=dict)  # p -> omitted residue
    covering_prime: int | None = None

    def __bool__(self) -> bool:
        return self.admissible


def _small_primes(k: int) -> list[int]:
    return [int(p) for p in primes_up_to(k)]


def is_admissible(shifts: Sequence[int]) -> Admissibility:
    """Decide admissibility with a witness either way.

    Only primes p <= k need checking: k shifts cannot fill p > k classes.
    """
    shifts = [int(h) for h in shifts]
    if any(b <= a for a, b in zip(shifts, shifts[1:])):
        raise ValueError("shifts must be strictly increasing")
    witnesses = {}
    for p in _small_primes(len(shifts)):
        seen = {h % p for h in shifts}
        if len(seen) == p:
            return Admissibility(False, covering_prime=p)
        witnesses[p] = min(r for r in range(p) if r not in seen)
    return Admissibility(True, witnesses)


@dataclass(frozen=True)
class AdmissibleTuple:
    shifts: tuple[int, ...]

    def __post_init__(self) -> None:
        s = tuple(int(h) for h in self.shifts)
        if not s:
            raise ValueError("empty tuple")
        s = tuple(h - s[0] for h in s)
        object.__setattr__(self, "shifts", s)
        res = is_admissible(s)
        if not res:
            raise ValueError(f"shifts are not admissible: residues mod {res.covering_prime} are all occupied")
        object.__setattr__(self, "_witnesses", res.witnesses)

    @property
    def k(self) -> int:
        return len(self.shifts)

    @property
    def diameter(self) -> int:
        return self.shifts[-1] - self.shifts[0]

    @property
    def witnesses(self) -> dict[int, int]:
        return dict(self._witnesses)

    def verify_witnesses(self) -> bool:
        """Independent recheck: no shift lies in the recorded omitted class."""
        for p in _small_primes(self.k):
            r = self._witnesses.get(p)
            if r is None or any(h % p == r for h in self.shifts):
                return False
        return True

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "diameter": self.diameter,
            "shifts": list(self.shifts),
            "witnesses": {str(p): r for p, r in sorted(self._witnesses.items())},
        }


@dataclass(frozen=True)
class LinearSystem:
    """Linear forms L_i(n) = a_i n + b_i."""

    functions: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        fs = tuple((int(a), int(b)) for a, b in self.functions)
        if any(a < 1 for a, _ in fs):
            raise ValueError("leading coefficients must be >= 1")
        if len(set(fs)) != len(fs):
            raise ValueError("linear forms must be distinct")
        object.__setattr__(self, "functions", fs)

    @classmethod
    def from_shifts(cls, shifts: Iterable[int], scale: int = 1) -> "LinearSystem":
        return cls(tuple((1, scale * h) for h in shifts))

    def admissibility(self) -> Admissibility:
        """For each relevant prime, an n_p with prod L_i(n_p) coprime to p."""
        k = len(self.functions)
        primes = set(_small_primes(k))
        for a, _ in self.functions:
            m, q = a, 2
            while q * q <= m:
                while m % q == 0:
                    primes.add(q)
                    m //= q
                q += 1
            if m > 1:
                primes.add(m)
        witnesses = {}
        for p in sorted(primes):
            ok = [n for n in range(p) if all((a * n + b) % p for a, b in self.functions)]
            if not ok:
                return Admissibility(False, covering_prime=p)
            witnesses[p] = ok[0]
        return Admissibility(True, witnesses)


def primes_after_k_tuple(k: int) -> AdmissibleTuple:
    """The first k primes larger than k, translated to start at 0."""
    if k < 1:
        raise ValueError("k must be positive")
    bound = max(20, int(2 * k * math.log(k + 2)) + 2 * k)
    while True:
        ps = [int(p) for p in primes_up_to(bound) if p > k]
        if len(ps) >= k:
            return AdmissibleTuple(tuple(ps[:k]))
        bound *= 2


def load_tuple54() -> AdmissibleTuple:
    data = json.loads(resources.files(__package__).joinpath("data/tuple54.json").read_text())
    t = AdmissibleTuple(tuple(data["shifts"]))
    if t.k != data["k"] or t.diameter != data["diameter"]:
        raise ValueError("stored tuple metadata is inconsistent")
    return t


KNOWN_TUPLES = {54: load_tuple54}


# ------------------------------------------------------------- narrowest search

@dataclass(frozen=True)
class NarrowestResult:
    tuple: AdmissibleTuple
    proven: bool
    nodes: int = 0

    def to_json(self) -> dict:
        d = self.tuple.to_json()
        d["optimality"] = "proven" if self.proven else "heuristic"
        return d


def _exhaustive(k: int, diameter: int, primes: list[int], budget: list[int]) -> tuple[int, ...] | None:
    """Lexicographically smallest admissible tuple {0 < ... < diameter} of size k, or None."""
    occ = {p: [0] * p for p in primes}
    filled = {p: 0 for p in primes}

    def add(h: int) -> bool:
        ok = True
        for p in primes:
            r = h % p
            if occ[p][r] == 0:
                filled[p] += 1
                if filled[p] == p:
                    ok = False
            occ[p][r] += 1
        return ok

    def remove(h: int) -> None:
        for p in primes:
            r = h % p
            occ[p][r] -= 1
            if occ[p][r] == 0:
                filled[p] -= 1

    chosen = [0]
    if not add(0) or not add(diameter):
        return None

    def dfs(start: int, need: int) -> bool:
        budget[0] -= 1
        if budget[0] < 0:
            raise TimeoutError
        if need == 0:
            return True
        for h in range(start, diameter - need + 1):
            if add(h):
                chosen.append(h)
                if dfs(h + 1, need - 1):
                    return True
                chosen.pop()
            remove(h)
        return False

    if dfs(1, k - 2):
        return tuple(chosen + [diameter])
    return None


def _greedy_sieve(k: int, start: int, length: int, primes: list[int]) -> tuple[int, ...] | None:
    """Sieve [start, start + length) by the emptiest class for each p <= k; best k-window."""
    alive = list(range(start, start + length))
    for p in primes:
        counts = [0] * p
        for n in alive:
            counts[n % p] += 1
        r = min(range(p), key=lambda c: (counts[c], c))
        alive = [n for n in alive if n % p != r]
    if len(alive) < k:
        return None
    best = min(range(len(alive) - k + 1), key=lambda i: (alive[i + k - 1] - alive[i], i))
    return tuple(alive[best:best + k])


def _local_search(shifts: tuple[int, ...]) -> tuple[int, ...]:
    """Drop an endpoint and refill inside while admissibility allows; repeat."""
    cur = list(shifts)
    improved = True
    while improved:
        improved = False
        for drop_last in (True, False):
            rest = cur[:-1] if drop_last else cur[1:]
            lo, hi = rest[0], rest[-1]
            present = set(rest)
            for h in range(lo + 1, hi):
                if h in present:
                    continue
                cand = sorted(rest + [h])
                if is_admissible(cand):
                    cur = cand
                    improved = True
                    break
            if improved:
                break
    return tuple(h - cur[0] for h in cur)


def _better(a: tuple[int, ...], b: tuple[int, ...] | None) -> bool:
    if b is None:
        return True
    return (a[-1] - a[0], a) < (b[-1] - b[0], b)


def narrowest_tuple(k: int, budget: int = 2000) -> NarrowestResult:
    """Narrowest admissible k-tuple found.

    k <= 8: exhaustive branch-and-bound by increasing diameter, proven optimal,
    lexicographically smallest among optimal tuples.  Larger k: best of the
    shifted-primes tuple, any stored tuple, greedy sieve windows at `budget`
    offsets, each polished by endpoint-replacement local search.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    primes = _small_primes(k)
    if k <= EXHAUSTIVE_MAX_K:
        nodes = [10**9]
        d = k - 1
        while True:
            found = _exhaustive(k, d, primes, nodes)
            if found is not None:
                return NarrowestResult(AdmissibleTuple(found), True, 10**9 - nodes[0])
            d += 1

    best: tuple[int, ...] | None = None
    seeds = [primes_after_k_tuple(k).shifts]
    if k in KNOWN_TUPLES:
        seeds.append(KNOWN_TUPLES[k]().shifts)
    for s in seeds:
        s = _local_search(s)
        if _better(s, best):
            best = s
    length = 2 * (best[-1] + 1)
    for i in range(budget):
        offset = (i + 1) // 2 * (1 if i % 2 else -1)
        cand = _greedy_sieve(k, offset - length // 2, length, primes)
        if cand is None:
            continue
        cand = tuple(h - cand[0] for h in cand)
        if cand[-1] <= best[-1]:
            cand = _local_search(cand)
        if _better(cand, best):
            best = cand
    return NarrowestResult(AdmissibleTuple(best), False, budget)


# ------------------------------------------------------------- pipeline

def default_k_range(theta, span: int = 10) -> range:
    """k values to search for ratio > 2/theta.

    Starts at the least k with k log k / (k - 1) > 2/theta: below that the
    supremum of the ratio over all admissible functions is already at most
    the target, so no basis can succeed.
    """
    target = 2 / Fraction(theta)
    k = 2
    while k * math.log(k) / (k - 1) <= target:
        k += 1
    return range(k, k + span + 1)


@dataclass
class PipelineResult:
    theta: Fraction
    target: Fraction
    success: bool
    k: int | None = None
    certificate: RatioCertificate | None = None
    tuple: NarrowestResult | None = None
    rejected: dict[int, float] = field(default_factory=dict)
    primes_guaranteed: int | None = None

    @property
    def gap_bound(self) -> int | None:
        return None if self.tuple is None else self.tuple.tuple.diameter

    def to_json(self) -> dict:
        return {
            "schema": "primegaps/gap-bound/1",
            "theta": str(self.theta),
            "target_ratio": str(self.target),
            "success": self.success,
            "k": self.k,
            "gap_bound": self.gap_bound,
            "primes_guaranteed": self.primes_guaranteed,
            "rejected": {str(k): f"{v:.12f}" for k, v in sorted(self.rejected.items())},
            "certificate": None if self.certificate is None else self.certificate.to_json(),
            "tuple": None if self.tuple is None else self.tuple.to_json(),
        }


def gap_bound_pipeline(
    theta,
    k_range: Iterable[int] | None = None,
    family: str = "even",
    max_degree: int = 23,
    tuple_budget: int = 2000,
    certify: Callable[..., MinKResult] = min_k_certify,
) -> PipelineResult:
    """Smallest certified k with theta/2 * ratio > 1, then a narrow admissible k-tuple."""
    theta = Fraction(theta)
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    target = 2 / theta
    k_range = default_k_range(theta) if k_range is None else k_range
    try:
        found = certify(target, k_range, family=family, max_degree=max_degree)
    except LookupError as exc:
        rejected = getattr(exc, "rejected", {})
        return PipelineResult(theta, target, False, rejected=rejected)
    cert = found.certificate
    _, m = guaranteed_primes(ExpectationParams(theta, cert.rayleigh_exact, found.k))
    if m < 2:
        return PipelineResult(theta, target, False, rejected=found.rejected)
    tup = narrowest_tuple(found.k, tuple_budget)
    return PipelineResult(theta, target, True, found.k, cert, tup, found.rejected, m)
