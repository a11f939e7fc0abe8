"""Covering {1, ..., y} by one residue class a_p mod p for each prime p <= x.

If every m in [1, y] satisfies m = a_p (mod p) for some p <= x, any N with
N = -a_p (mod p) for all p has N + 1, ..., N + y composite once N > x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .primes import primes_up_to

__all__ = [
    "CoveringPlan",
    "SurvivorSet",
    "GapWitness",
    "STRATEGIES",
    "default_z",
    "verify_cover",
    "crt_witness",
    "plan_trivial",
    "plan_greedy_only",
    "plan_erdos_rankin",
    "plan_random_weighted",
    "RandomTrace",
    "make_plan",
    "max_covered_y",
    "MaxCover",
    "survivors_after_small_medium",
    "characterize_survivors",
    "random_stage_ensemble",
    "EnsembleStats",
]

STRATEGIES = ("trivial", "erdos-rankin", "greedy-only", "random-weighted")


def default_z(x: float) -> float:
    """exp(log x * logloglog x / (2 loglog x)), floored at 3 (and 3 where undefined)."""
    lx = math.log(x)
    llx = math.log(lx) if lx > 1 else 0.0
    if llx <= 1:
        return 3.0
    return max(3.0, math.exp(lx * math.log(llx) / (2 * llx)))


def _primes(x: int) -> list[int]:
    return [int(p) for p in primes_up_to(x)]


@dataclass(frozen=True)
class CoveringPlan:
    x: int
    y: int
    choices: Mapping[int, int]
    stages: Mapping[int, str]
    strategy: str
    z: float | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        primes = _primes(self.x)
        if sorted(self.choices) != primes:
            raise ValueError("choices must assign exactly the primes <= x")
        if sorted(self.stages) != primes:
            raise ValueError("stage labels must partition the primes <= x")
        for p, a in self.choices.items():
            if not 0 <= a < p:
                raise ValueError(f"residue {a} out of range mod {p}")

    def to_json(self) -> dict:
        return {
            "schema": "primegaps/covering-plan/1",
            "x": self.x,
            "y": self.y,
            "strategy": self.strategy,
            "z": self.z,
            "seed": self.seed,
            "choices": {str(p): a for p, a in sorted(self.choices.items())},
            "stages": {str(p): s for p, s in sorted(self.stages.items())},
        }


@dataclass(frozen=True)
class SurvivorSet:
    y: int
    elements: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.elements)


def _sieve_out(alive: np.ndarray, p: int, a: int) -> np.ndarray:
    return alive[alive % p != a]


def verify_cover(plan: CoveringPlan) -> tuple[bool, list[int]]:
    """Direct check of every m in [1, y]; returns (covered, uncovered list)."""
    alive = np.arange(1, plan.y + 1, dtype=np.int64)
    for p, a in plan.choices.items():
        alive = _sieve_out(alive, p, a)
    return len(alive) == 0, [int(m) for m in alive]


@dataclass(frozen=True)
class GapWitness:
    N: int
    y: int
    factors: tuple[int, ...]  # factors[m - 1] divides N + m

    def verify(self) -> bool:
        return len(self.factors) == self.y and all(
            (self.N + m) % p == 0 and self.N + m > p for m, p in enumerate(self.factors, start=1)
        )

    def to_json(self) -> dict:
        return {"N": str(self.N), "y": self.y, "factors": list(self.factors)}


def crt_witness(plan: CoveringPlan) -> GapWitness:
    """Smallest N > x with N = -a_p (mod p) for all p <= x, with a factor for each N + m."""
    ok, uncovered = verify_cover(plan)
    if not ok:
        raise ValueError(f"plan does not cover [1, {plan.y}]: {len(uncovered)} uncovered")
    r, M = 0, 1
    for p, a in sorted(plan.choices.items()):
        # solve N = r (mod M), N = -a (mod p)
        t = ((-a - r) * pow(M, -1, p)) % p
        r, M = r + M * t, M * p
    N = r + ((plan.x - r) // M + 1) * M  # smallest > x in the class
    factors = []
    for m in range(1, plan.y + 1):
        p = next(p for p, a in sorted(plan.choices.items()) if m % p == a)
        factors.append(p)
    w = GapWitness(N, plan.y, tuple(factors))
    if not w.verify():
        raise AssertionError("CRT witness failed self-check")
    return w


# ------------------------------------------------------------- strategies

def plan_trivial(x: int, y: int) -> CoveringPlan:
    """a_p = p - 1 for all p: covers m whenever m + 1 has a prime factor <= x."""
    primes = _primes(x)
    return CoveringPlan(x, y, {p: p - 1 for p in primes}, {p: "trivial" for p in primes}, "trivial")


def _greedy(alive: np.ndarray, p: int) -> int:
    """Class mod p holding the most alive elements, smallest residue on ties."""
    if len(alive) == 0:
        return 0
    return int(np.argmax(np.bincount(alive % p, minlength=p)))


def plan_greedy_only(x: int, y: int) -> CoveringPlan:
    alive = np.arange(1, y + 1, dtype=np.int64)
    choices = {}
    for p in _primes(x):
        a = choices[p] = _greedy(alive, p)
        alive = _sieve_out(alive, p, a)
    return CoveringPlan(x, y, choices, {p: "greedy" for p in choices}, "greedy-only")


def _small_medium(x: int, z: float) -> tuple[dict[int, int], dict[int, str]]:
    choices, stages = {}, {}
    for p in _primes(x):
        if p < z:
            choices[p], stages[p] = 1 % p, "small"
        elif p <= x / 3:
            choices[p], stages[p] = 0, "medium"
    return choices, stages


def survivors_after_small_medium(x: int, y: int, z: float) -> SurvivorSet:
    choices, _ = _small_medium(x, z)
    alive = np.arange(1, y + 1, dtype=np.int64)
    for p, a in choices.items():
        alive = _sieve_out(alive, p, a)
    return SurvivorSet(y, tuple(int(m) for m in alive))


def characterize_survivors(x: int, y: int, z: float) -> SurvivorSet:
    """{n <= y : no prime factor of n in [z, x/3], no prime factor of n - 1 below z}."""
    small = [p for p in _primes(x) if p < z]
    medium = [p for p in _primes(x) if z <= p <= x / 3]
    out = [
        n for n in range(1, y + 1)
        if all(n % p for p in medium) and all((n - 1) % p for p in small)
    ]
    return SurvivorSet(y, tuple(out))


def _check_z(x: int, z: float) -> None:
    if not 2 < z < math.sqrt(x):
        raise ValueError(f"need 2 < z < sqrt(x), got z={z} for x={x}")


def plan_erdos_rankin(x: int, y: int, z: float | None = None) -> CoveringPlan:
    """Small primes a_p = 1, medium primes a_p = 0, large primes greedily."""
    z = default_z(x) if z is None else z
    _check_z(x, z)
    choices, stages = _small_medium(x, z)
    alive = np.arange(1, y + 1, dtype=np.int64)
    for p, a in choices.items():
        alive = _sieve_out(alive, p, a)
    for p in _primes(x):
        if p > x / 3:
            a = choices[p] = _greedy(alive, p)
            stages[p] = "large-greedy"
            alive = _sieve_out(alive, p, a)
    return CoveringPlan(x, y, choices, stages, "erdos-rankin", z=z)


@dataclass
class RandomTrace:
    survivors: np.ndarray  # S after small and medium stages
    hits: np.ndarray  # per survivor: number of random-stage primes whose class contains it
    expected_hits: np.ndarray  # per survivor: sum over random primes of P(a_p = n mod p)
    uncovered_after_random: int
    random_primes: tuple[int, ...]


def plan_random_weighted(x: int, y: int, z: float | None = None, seed: int = 0) -> tuple[CoveringPlan, RandomTrace]:
    """Erdos-Rankin with a random stage on (x/3, x/2] before the greedy stage on (x/2, x].

    Each random prime draws a_p independently with P(a_p = a) proportional to
    the number of survivors S (after the small and medium stages) in class a.
    """
    z = default_z(x) if z is None else z
    _check_z(x, z)
    choices, stages = _small_medium(x, z)
    S = np.array(survivors_after_small_medium(x, y, z).elements, dtype=np.int64)
    rng = np.random.Generator(np.random.Philox(key=[seed, 11]))
    hits = np.zeros(len(S), dtype=np.int64)
    expected = np.zeros(len(S))
    rand_primes = [p for p in _primes(x) if x / 3 < p <= x / 2]
    for p in rand_primes:
        counts = np.bincount(S % p, minlength=p) if len(S) else np.ones(p, dtype=np.int64)
        probs = counts / counts.sum()
        a = int(rng.choice(p, p=probs))
        choices[p], stages[p] = a, "random"
        if len(S):
            hits += S % p == a
            expected += probs[S % p]
    alive = S[hits == 0]
    trace = RandomTrace(S, hits, expected, int(len(alive)), tuple(rand_primes))
    for p in _primes(x):
        if p > x / 2:
            a = choices[p] = _greedy(alive, p)
            stages[p] = "large-greedy"
            alive = _sieve_out(alive, p, a)
    plan = CoveringPlan(x, y, choices, stages, "random-weighted", z=z, seed=seed)
    return plan, trace


def make_plan(strategy: str, x: int, y: int, z: float | None = None, seed: int = 0) -> CoveringPlan:
    if strategy == "trivial":
        return plan_trivial(x, y)
    if strategy == "greedy-only":
        return plan_greedy_only(x, y)
    if strategy == "erdos-rankin":
        return plan_erdos_rankin(x, y, z)
    if strategy == "random-weighted":
        return plan_random_weighted(x, y, z, seed)[0]
    raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")


@dataclass
class MaxCover:
    x: int
    strategy: str
    y: int
    plan: CoveringPlan | None
    probes: int
    exhausted: bool = False


def max_covered_y(x: int, strategy: str, budget: int = 64, z: float | None = None, seed: int = 0) -> MaxCover:
    """Largest y found with a verified cover: doubling then binary search.

    Coverability need not be monotone in y for adaptive strategies, so the
    result is the largest verified probe, not a proof that y + 1 fails.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    probes = 0

    def covers(y: int) -> CoveringPlan | None:
        nonlocal probes
        probes += 1
        plan = make_plan(strategy, x, y, z, seed)
        return plan if verify_cover(plan)[0] else None

    best_y, best = 0, None
    lo, hi = 0, max(1, x // 2)
    while probes < budget:
        plan = covers(hi)
        if plan is None:
            break
        best_y, best, lo, hi = hi, plan, hi, hi * 2
    else:
        return MaxCover(x, strategy, best_y, best, probes, exhausted=True)
    while hi - lo > 1:
        if probes >= budget:
            return MaxCover(x, strategy, best_y, best, probes, exhausted=True)
        mid = (lo + hi) // 2
        plan = covers(mid)
        if plan is not None:
            best_y, best, lo = mid, plan, mid
        else:
            hi = mid
    return MaxCover(x, strategy, best_y, best, probes)


@dataclass
class EnsembleStats:
    x: int
    y: int
    seeds: int
    survivors: int
    uncovered_frequency: float  # pooled over survivors and seeds
    standard_error: float  # binomial, over seeds * survivors trials
    mean_measured_hits: float  # mean over survivors and seeds of the hit count
    bound: float  # exp(-mean_measured_hits)
    per_survivor_bound: float  # mean over survivors of exp(-their mean hits), >= bound by convexity
    mean_expected_hits: float  # exact expectation from the weights

    @property
    def passes(self) -> bool:
        return self.uncovered_frequency <= self.bound + 3 * self.standard_error


def random_stage_ensemble(x: int, y: int, seeds: Iterable[int], z: float | None = None) -> EnsembleStats:
    """Uncovered frequency after the random stage versus the e^{-t} product bound."""
    seeds = list(seeds)
    hit_sum = None
    uncovered = []
    expected = None
    for s in seeds:
        _, tr = plan_random_weighted(x, y, z, s)
        hit_sum = tr.hits.astype(float) if hit_sum is None else hit_sum + tr.hits
        uncovered.append(tr.hits == 0)
        expected = tr.expected_hits
    U = np.array(uncovered, dtype=float)  # seeds x survivors
    n_surv = U.shape[1]
    freq = float(U.mean())
    se = math.sqrt(freq * (1 - freq) / U.size)
    mean_hits_n = hit_sum / len(seeds)
    return EnsembleStats(
        x=x, y=y, seeds=len(seeds), survivors=n_surv,
        uncovered_frequency=freq, standard_error=se,
        mean_measured_hits=float(mean_hits_n.mean()),
        bound=float(math.exp(-mean_hits_n.mean())),
        per_survivor_bound=float(np.exp(-mean_hits_n).mean()),
        mean_expected_hits=float(expected.mean()),
    )
