"""Largest generalized eigenvalue of (M1, M2) and exact certification.

The pipeline:

1. equilibrate M2 by powers of two so its diagonal is close to 1;
2. factor M2 = L L^T in multiprecision ball arithmetic by a recursive 2 x 2
   block Cholesky, also forming L^{-1};
3. reduce to C = L^{-1} M1 L^{-T}, round C once to float64 and run power
   iteration from the all-ones vector;
4. map the eigenvector back, rationalize it and recompute the Rayleigh
   quotient f^T M1 f / f^T M2 f exactly.

Only step 4 is trusted for the inequality; the floating point value is
reported alongside.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import flint
import numpy as np

from .forms import FormPair, RationalMatrix, assemble_forms
from .simplex import enumerate_signatures

log = logging.getLogger(__name__)

__all__ = [
    "LinearDependenceError",
    "NonConvergenceError",
    "SearchExhausted",
    "RatioCertificate",
    "ExpectationParams",
    "MinKResult",
    "solve_ratio",
    "closed_form_ratio",
    "guaranteed_primes",
    "family_forms",
    "min_k_certify",
    "exact_rayleigh_quotient",
]

DEFAULT_TOLERANCE = 1e-12
_BASE_BLOCK = 32
_MAX_PREC = 16384


class LinearDependenceError(ArithmeticError):
    """M2 is not numerically positive definite: the basis is (nearly) dependent."""


class NonConvergenceError(ArithmeticError):
    """Power iteration did not reach the tolerance within the iteration budget."""


class SearchExhausted(LookupError):
    """No k in the search range certified the target; `rejected` maps k to its best lambda."""

    def __init__(self, message: str, rejected: dict[int, float]):
        super().__init__(message)
        self.rejected = rejected


# ---------------------------------------------------------------- closed forms

def closed_form_ratio(k: int, ell: int) -> Fraction:
    """Ratio sum J / I for the one-term choice (1 - P1)^ell in dimension k."""
    if k < 1 or ell < 0:
        raise ValueError("need k >= 1 and ell >= 0")
    return Fraction(2 * k * (2 * ell + 1), (ell + 1) * (k + 2 * ell + 1))


@dataclass(frozen=True)
class ExpectationParams:
    theta: Fraction
    ratio: Fraction | float
    k: int

    def __post_init__(self) -> None:
        theta = Fraction(self.theta)
        if not 0 < theta <= 1:
            raise ValueError("theta must lie in (0, 1]")
        if self.ratio < 0:
            raise ValueError("ratio must be nonnegative")
        if self.k < 1:
            raise ValueError("k must be positive")
        object.__setattr__(self, "theta", theta)

    @property
    def expectation_limit(self) -> Fraction:
        ratio = self.ratio if isinstance(self.ratio, Fraction) else Fraction(self.ratio)
        return ratio * self.theta / 2


def guaranteed_primes(params: ExpectationParams) -> tuple[Fraction, int]:
    """Expected prime count E = ratio * theta / 2 and the number m of primes it forces.

    With epsilon > 0 the realized expectation is slightly below E, so m primes
    are forced only when E > m - 1 strictly: m = ceil(E) for E > 1, else 1
    (and 0 when E = 0).
    """
    E = params.expectation_limit
    if E == 0:
        return E, 0
    if E <= 1:
        return E, 1
    return E, math.ceil(E)


# ------------------------------------------------------------------ certificate

@dataclass
class RatioCertificate:
    lambda_max: float
    f: tuple[float, ...]
    residual: float
    target: Fraction | None
    exceeds_target: bool
    forms: FormPair = field(repr=False)
    f_exact: tuple[Fraction, ...] = field(repr=False, default=())
    rayleigh_exact: Fraction | None = field(repr=False, default=None)
    iterations: int = 0
    precision_bits: int = 0
    degree_profile: dict[int, float] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.forms.k

    def verify(self, target=None) -> bool:
        """Independent exact recheck of the Rayleigh quotient against target."""
        target = self.target if target is None else Fraction(target)
        q = exact_rayleigh_quotient(self.forms, self.f_exact)
        if q < Fraction(self.lambda_max) - Fraction(1, 10**9):
            return False
        return target is None or q > target

    def to_json(self, coefficient_digits: int = 17) -> dict:
        fp = self.forms
        lam_exact = self.rayleigh_exact
        return {
            "schema": "primegaps/ratio-certificate/1",
            "family": fp.family,
            "k": fp.k,
            "max_degree": fp.max_degree,
            "basis_size": len(fp.basis),
            "basis": [str(s) for s in fp.basis],
            "lambda": _decimal(self.lambda_max, 15),
            "lambda_exact_rayleigh": None if lam_exact is None else _frac_decimal(lam_exact, 20),
            "target": None if self.target is None else str(self.target),
            "exceeds_target": self.exceeds_target,
            "residual": float(f"{self.residual:.3e}"),
            "coefficients": [float(f"{c:.{coefficient_digits - 1}e}") for c in self.f],
            "degree_profile": {str(d): _decimal(v, 12) for d, v in sorted(self.degree_profile.items())},
        }


def _decimal(x: float, digits: int) -> str:
    return f"{x:.{digits}f}"


def _frac_decimal(q: Fraction, digits: int) -> str:
    sign = "-" if q < 0 else ""
    q = abs(q)
    scaled = q.numerator * 10**digits // q.denominator
    s = str(scaled).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


def exact_rayleigh_quotient(forms: FormPair, f: Sequence) -> Fraction:
    num = forms.M1.quadratic_form(f)
    den = forms.M2.quadratic_form(f)
    if den <= 0:
        raise LinearDependenceError("f^T M2 f is not positive")
    return num / den


# --------------------------------------------------------------- arb helpers

def _block(rows: list, r0: int, r1: int, c0: int, c1: int) -> flint.arb_mat:
    if r1 == r0 or c1 == c0:
        return flint.arb_mat(r1 - r0, c1 - c0)
    return flint.arb_mat([r[c0:c1] for r in rows[r0:r1]])


def _cholesky_small(rows: list) -> tuple[list, list, flint.arb]:
    n = len(rows)
    L = [[flint.arb(0)] * n for _ in range(n)]
    min_piv = None
    for j in range(n):
        s = rows[j][j]
        for t in range(j):
            s -= L[j][t] * L[j][t]
        s = s.mid()
        if not s > 0:
            raise LinearDependenceError(f"nonpositive pivot at row {j}")
        min_piv = s if min_piv is None or s < min_piv else min_piv
        d = s.sqrt().mid()
        L[j][j] = d
        for i in range(j + 1, n):
            v = rows[i][j]
            for t in range(j):
                v -= L[i][t] * L[j][t]
            L[i][j] = (v / d).mid()
    Li = [[flint.arb(0)] * n for _ in range(n)]
    for j in range(n):
        Li[j][j] = (1 / L[j][j]).mid()
        for i in range(j + 1, n):
            v = flint.arb(0)
            for t in range(j, i):
                v += L[i][t] * Li[t][j]
            Li[i][j] = (-v / L[i][i]).mid()
    return L, Li, min_piv


def _cholesky(A: flint.arb_mat) -> tuple[flint.arb_mat, flint.arb_mat, flint.arb]:
    """Recursive block Cholesky: returns L, L^{-1} and the smallest squared pivot."""
    n = A.nrows()
    rows = A.tolist()
    if n <= _BASE_BLOCK:
        L, Li, piv = _cholesky_small(rows)
        return flint.arb_mat(L), flint.arb_mat(Li), piv
    m = n // 2
    L11, L11i, p1 = _cholesky(_block(rows, 0, m, 0, m))
    A21 = _block(rows, m, n, 0, m)
    A22 = _block(rows, m, n, m, n)
    L21 = (A21 * L11i.transpose()).mid()
    S = (A22 - L21 * L21.transpose()).mid()
    L22, L22i, p2 = _cholesky(S)
    Li21 = (-(L22i * (L21 * L11i))).mid()
    return _join(L11, L21, L22), _join(L11i, Li21, L22i), min(p1, p2)


def _join(T11: flint.arb_mat, T21: flint.arb_mat, T22: flint.arb_mat) -> flint.arb_mat:
    m, r = T11.nrows(), T22.nrows()
    a, b, c = T11.tolist(), T21.tolist(), T22.tolist()
    zero = [flint.arb(0)] * r
    rows = [a[i] + zero for i in range(m)] + [b[i] + c[i] for i in range(r)]
    return flint.arb_mat(rows)


def _arb_to_fraction(x: flint.arb) -> Fraction:
    man, exp = x.mid().man_exp()
    man, exp = int(man), int(exp)
    return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2**-exp)


def _equilibration(M2: RationalMatrix) -> list[int]:
    """Exponents e_i with 2^(2 e_i) * M2_ii close to 1."""
    out = []
    for i in range(len(M2)):
        num = int(M2.numerator[i, i])
        if num <= 0:
            raise LinearDependenceError(f"M2 has nonpositive diagonal entry at {i}")
        # log2(num / den) without floats
        l2 = num.bit_length() - M2.denominator.bit_length()
        out.append(-(l2 // 2))
    return out


def _scaled_arb(M: RationalMatrix, exps: list[int], shift: int) -> flint.arb_mat:
    """diag(2^e) M diag(2^e) as arb_mat; the shift keeps integer exponents nonnegative."""
    e = [x - shift for x in exps]
    rows = M.numerator.tolist()
    scaled = flint.fmpz_mat([[int(v) << (ei + ej) for v, ej in zip(row, e)] for row, ei in zip(rows, e)])
    factor = flint.arb(2) ** (2 * shift) / M.denominator
    return (flint.arb_mat(scaled) * factor).mid()


def _man_exp(X: flint.arb_mat) -> list[list[tuple[int, int]]]:
    return [[tuple(int(v) for v in x.mid().man_exp()) for x in row] for row in X.tolist()]


def _fixed_point(me: list[list[tuple[int, int]]], bits: int) -> flint.fmpz_mat:
    """round(X * 2^bits) entrywise from (mantissa, exponent) pairs."""
    out = []
    for row in me:
        out.append([m << (e + bits) if e + bits >= 0 else m >> -(e + bits) for m, e in row])
    return flint.fmpz_mat(out)


def _reduced_float(Li: flint.arb_mat, B: flint.arb_mat) -> np.ndarray:
    """float64 rounding of Li B Li^T, via exact integer products of fixed-point copies.

    A fixed-point copy with s fractional bits has absolute error 2^-s, so the
    product error is about n |Li|_max^2 |B|_max 2^-s; s is chosen to make that
    far below double precision.
    """
    n = Li.nrows()
    li, b = _man_exp(Li), _man_exp(B)
    top = lambda me: max((m.bit_length() + e for row in me for m, e in row if m), default=0)
    s = 2 * max(top(li), 0) + max(top(b), 0) + n.bit_length() + 96
    Lf, Bf = _fixed_point(li, s), _fixed_point(b, s)
    P = Lf * Bf * Lf.transpose()
    shift = 3 * s - 64
    C = np.empty((n, n))
    for i, row in enumerate(P.tolist()):
        C[i] = [math.ldexp(float(int(v) >> shift), -64) for v in row]
    return C


# -------------------------------------------------------------------- solver

def _power_iteration(C: np.ndarray, tolerance: float, max_iter: int) -> tuple[float, np.ndarray, float, int]:
    n = C.shape[0]
    y = np.ones(n) / math.sqrt(n)
    lam = float(y @ C @ y)
    res = math.inf
    for it in range(1, max_iter + 1):
        z = C @ y
        lam = float(y @ z)
        res = float(np.linalg.norm(z - lam * y))
        if res <= tolerance:
            return lam, y, res, it
        y = z / np.linalg.norm(z)
    raise NonConvergenceError(
        f"power iteration residual {res:.3e} > {tolerance:.1e} after {max_iter} iterations"
    )


def solve_ratio(
    forms: FormPair,
    tolerance: float = DEFAULT_TOLERANCE,
    target=None,
    max_iter: int = 200_000,
    precision: int = 320,
    profile: bool = True,
) -> RatioCertificate:
    """Largest lambda with M1 f = lambda M2 f, plus an exact recheck on rationalized f."""
    n = len(forms.basis)
    if n == 0:
        raise ValueError("empty basis")
    if not (forms.M1.is_symmetric() and forms.M2.is_symmetric()):
        raise ValueError("forms must be symmetric")
    target = None if target is None else Fraction(target)
    exps = _equilibration(forms.M2)
    shift = min(exps)

    old_prec = flint.ctx.prec
    prec = precision
    try:
        while True:
            flint.ctx.prec = prec
            A = _scaled_arb(forms.M2, exps, shift)
            max_diag = max(A[i, i] for i in range(n))
            try:
                L, Li, min_piv = _cholesky(A)
            except LinearDependenceError:
                if prec * 2 > _MAX_PREC:
                    raise
                prec *= 2
                continue
            if min_piv < max_diag * flint.arb(2) ** (-(prec - 80)):
                if prec * 2 > _MAX_PREC:
                    raise LinearDependenceError("M2 too ill-conditioned for the precision budget")
                log.debug("min pivot too small at %d bits, doubling", prec)
                prec *= 2
                continue
            break
        B = _scaled_arb(forms.M1, exps, shift)
        C = _reduced_float(Li, B)
        C = (C + C.T) / 2
        lam, y, _, iters = _power_iteration(C, tolerance, max_iter)

        y_arb = flint.arb_mat([[float(v)] for v in y])
        u = (Li.transpose() * y_arb).mid()  # coefficients in equilibrated coordinates
        res_vec = (B * u - A * u * flint.arb(lam)).mid()
        residual = math.sqrt(sum(float(res_vec[i, 0]) ** 2 for i in range(n)))
        unorm = math.sqrt(sum(float(u[i, 0]) ** 2 for i in range(n)))
        residual /= unorm

        f_exact = tuple(
            _arb_to_fraction(u[i, 0]) * Fraction(2) ** (exps[i] - shift) for i in range(n)
        )
    finally:
        flint.ctx.prec = old_prec

    # sign convention: first nonzero coefficient positive
    lead = next((c for c in f_exact if c != 0), Fraction(1))
    if lead < 0:
        f_exact = tuple(-c for c in f_exact)
    scale = max(abs(c) for c in f_exact)
    f_float = tuple(float(c / scale) for c in f_exact)
    f_exact = tuple(c / scale for c in f_exact)

    q = exact_rayleigh_quotient(forms, f_exact)
    if q < Fraction(lam) - Fraction(1, 10**9):
        raise ArithmeticError(f"exact Rayleigh quotient {float(q)} disagrees with lambda {lam}")

    degree_profile: dict[int, float] = {}
    if profile and list(forms.degrees) == sorted(forms.degrees):
        for d in sorted(set(forms.degrees)):
            p = forms.prefix_length(d)
            sub = C[:p, :p]
            degree_profile[d] = float(np.linalg.eigvalsh(sub)[-1]) if p < n else lam

    return RatioCertificate(
        lambda_max=lam,
        f=f_float,
        residual=residual,
        target=target,
        exceeds_target=target is not None and q > target,
        forms=forms,
        f_exact=f_exact,
        rayleigh_exact=q,
        iterations=iters,
        precision_bits=prec,
        degree_profile=degree_profile,
    )


# --------------------------------------------------------------- k search

@lru_cache(maxsize=16)
def family_forms(k: int, family: str = "even", max_degree: int = 23) -> FormPair:
    basis = enumerate_signatures(k, family, max_degree)
    return assemble_forms(basis, k, family=family, max_degree=max_degree)


@dataclass
class MinKResult:
    k: int
    certificate: RatioCertificate
    rejected: dict[int, float]

    def to_json(self) -> dict:
        return {
            "schema": "primegaps/min-k/1",
            "k": self.k,
            "rejected": {str(k): _decimal(v, 12) for k, v in sorted(self.rejected.items())},
            "certificate": self.certificate.to_json(),
        }


def min_k_certify(
    target_ratio,
    k_range: Iterable[int],
    family: str = "even",
    max_degree: int = 23,
    tolerance: float = DEFAULT_TOLERANCE,
) -> MinKResult:
    """Smallest k in k_range whose basis certifies ratio > target_ratio.

    A rejected k only means this basis did not reach the target; it is a
    failed lower bound, not a proof that no better function exists.
    """
    target = Fraction(target_ratio)
    rejected: dict[int, float] = {}
    for k in sorted(k_range):
        forms = family_forms(k, family, max_degree)
        cert = solve_ratio(forms, tolerance=tolerance, target=target, profile=False)
        log.info("k=%d lambda=%.10f", k, cert.lambda_max)
        if cert.exceeds_target and cert.verify(target):
            return MinKResult(k=k, certificate=cert, rejected=rejected)
        rejected[k] = cert.lambda_max
    raise SearchExhausted(f"no k in range certifies ratio > {target}", rejected)
