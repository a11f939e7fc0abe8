"""The product-form choice F(t) = prod G(t_i) and its concentration behaviour.

G(t) = s * sqrt(A) / (1 + A t) on [0, T) with A = k log k and T = k^(-3/4),
where the scale s makes int G^2 = 1.  Then G^2 is a probability density and
the Z_i below are i.i.d. with that density.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "GProfile",
    "g_moments",
    "g_value",
    "density_cdf",
    "density_quantile",
    "sample_z",
    "McEstimate",
    "mc_concentration",
    "RatioBound",
    "product_ratio_lower_bound",
    "mc_true_ratio",
    "moments_table",
    "table_to_csv",
]

_CHUNK = 2_000_000  # floats per sampling chunk


@dataclass(frozen=True)
class GProfile:
    k: int
    A: float
    cutoff: float
    scale: float
    norm: float  # int G^2 by quadrature, should be 1
    mu: float
    sigma2: float
    integral_g: float
    mu_closed: float
    sigma2_closed: float
    integral_g_closed: float

    @property
    def mu_ok(self) -> bool:
        return self.mu < 1 / (3 * self.k)

    @property
    def k_sigma2(self) -> float:
        return self.k * self.sigma2

    @property
    def k_int_g_sq(self) -> float:
        return self.k * self.integral_g**2

    def indicators(self) -> dict:
        return {
            "mu_times_3k": 3 * self.k * self.mu,
            "mu_below_1_over_3k": self.mu_ok,
            "k_sigma2": self.k_sigma2,
            "k_int_g_sq": self.k_int_g_sq,
        }


def _params(k: int) -> tuple[float, float, float]:
    if k < 2:
        raise ValueError("k must be at least 2 (A = k log k vanishes at k = 1)")
    A = k * math.log(k)
    T = k ** -0.75
    c = (1 + A * T) / (A * T)  # scale^2
    return A, T, c


def g_value(k: int, t):
    A, T, c = _params(k)
    t = np.asarray(t, dtype=float)
    return np.where((t >= 0) & (t < T), math.sqrt(c * A) / (1 + A * t), 0.0)


def g_moments(k: int) -> GProfile:
    """Moments of G^2 by adaptive quadrature, with closed forms alongside."""
    A, T, c = _params(k)
    dens = lambda t: c * A / (1 + A * t) ** 2
    opts = dict(epsabs=0, epsrel=1e-13, limit=200)
    norm = integrate.quad(dens, 0, T, **opts)[0]
    mu = integrate.quad(lambda t: t * dens(t), 0, T, **opts)[0]
    sigma2 = integrate.quad(lambda t: (t - mu) ** 2 * dens(t), 0, T, **opts)[0]
    int_g = integrate.quad(lambda t: math.sqrt(c * A) / (1 + A * t), 0, T, **opts)[0]

    X = 1 + A * T
    mu_c = c / A * (math.log(X) + 1 / X - 1)
    second = c / A**2 * ((X - 1) - 2 * math.log(X) + 1 - 1 / X)
    return GProfile(
        k=k, A=A, cutoff=T, scale=math.sqrt(c), norm=norm, mu=mu, sigma2=sigma2, integral_g=int_g,
        mu_closed=mu_c, sigma2_closed=second - mu_c**2,
        integral_g_closed=math.sqrt(c / A) * math.log(X),
    )


def density_cdf(k: int, t):
    A, T, c = _params(k)
    t = np.clip(np.asarray(t, dtype=float), 0, T)
    return c * A * t / (1 + A * t)


def density_quantile(k: int, u):
    A, T, c = _params(k)
    v = np.asarray(u, dtype=float) / c
    return v / (A * (1 - v))


def _rng(seed: int, stream: int = 0) -> np.random.Generator:
    # counter-based: each (seed, stream) pair is an independent Philox key
    return np.random.Generator(np.random.Philox(key=[seed, stream]))


def sample_z(k: int, size, seed: int, stream: int = 0) -> np.ndarray:
    return density_quantile(k, _rng(seed, stream).random(size))


def _row_sums(k: int, n_rows: int, seed: int, stream: int, width: int | None = None) -> np.ndarray:
    width = k if width is None else width
    out = np.empty(n_rows)
    step = max(1, _CHUNK // max(width, 1))
    rng = _rng(seed, stream)
    for start in range(0, n_rows, step):
        m = min(step, n_rows - start)
        u = rng.random((m, width))
        out[start:start + m] = density_quantile(k, u).sum(axis=1) if width else 0.0
    return out


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    radius: float  # 1.96 binomial standard errors
    samples: int


def _binomial(hits: int, n: int) -> McEstimate:
    p = hits / n
    return McEstimate(p, 1.96 * math.sqrt(max(p * (1 - p), 0.0) / n), n)


def mc_concentration(k: int, samples: int, threshold: float, seed: int) -> McEstimate:
    """P(Z_1 + ... + Z_k < threshold) by Monte Carlo."""
    if samples < 10_000:
        raise ValueError("samples must be at least 10^4")
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    if math.isinf(threshold):
        return McEstimate(1.0, 0.0, samples)
    s = _row_sums(k, samples, seed, 0)
    return _binomial(int(np.count_nonzero(s < threshold)), samples)


@dataclass(frozen=True)
class RatioBound:
    k: int
    bound: float
    k_int_g_sq: float
    p_half: McEstimate
    p_one: McEstimate

    @property
    def bound_over_log_k(self) -> float:
        return self.bound / math.log(self.k)


def product_ratio_lower_bound(k: int, samples: int, seed: int) -> RatioBound:
    """k (int_0^{1/2} G)^2 P(sum Z < 1/2) / P(sum Z < 1), one shared sample."""
    if samples < 10_000:
        raise ValueError("samples must be at least 10^4")
    prof = g_moments(k)
    # G vanishes beyond the cutoff k^(-3/4) < 1/2, so the truncated integral is the full one
    int_half = prof.integral_g if prof.cutoff <= 0.5 else _partial_integral(k, 0.5)
    s = _row_sums(k, samples, seed, 0)
    p_half = _binomial(int(np.count_nonzero(s < 0.5)), samples)
    p_one = _binomial(int(np.count_nonzero(s < 1.0)), samples)
    if p_one.estimate == 0:
        raise ArithmeticError("no sample landed in the simplex; increase samples")
    kg = k * int_half**2
    return RatioBound(k=k, bound=kg * p_half.estimate / p_one.estimate, k_int_g_sq=kg, p_half=p_half, p_one=p_one)


def _partial_integral(k: int, upper) -> np.ndarray:
    """int_0^min(upper, T) G, vectorized; zero for negative upper."""
    A, T, c = _params(k)
    m = np.clip(np.asarray(upper, dtype=float), 0, T)
    return math.sqrt(c / A) * np.log1p(A * m)


def mc_true_ratio(k: int, samples: int, seed: int) -> McEstimate:
    """Monte Carlo estimate of sum_l J_l / I for F = prod G(t_i) cut to the simplex.

    I = P(S_k < 1) and, by symmetry, sum_l J_l = k E[(int_0^{1 - S_{k-1}} G)^2].
    """
    s_rest = _row_sums(k, samples, seed, 1, width=k - 1)
    inner = _partial_integral(k, 1 - s_rest) ** 2
    s_all = s_rest + sample_z(k, samples, seed, 2)
    p_one = np.count_nonzero(s_all < 1) / samples
    if p_one == 0:
        raise ArithmeticError("no sample landed in the simplex")
    ratio = k * inner.mean() / p_one
    se = k * inner.std(ddof=1) / math.sqrt(samples) / p_one
    return McEstimate(float(ratio), 1.96 * float(se), samples)


def moments_table(ks, samples: int, seed: int) -> list[dict]:
    rows = []
    for k in ks:
        prof = g_moments(k)
        rb = product_ratio_lower_bound(k, samples, seed)
        rows.append({
            "k": k,
            "mu": prof.mu,
            "sigma2": prof.sigma2,
            "bound": rb.bound,
            "bound_over_log_k": rb.bound_over_log_k,
        })
    return rows


def table_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({key: (f"{v:.12g}" if isinstance(v, float) else v) for key, v in r.items()})
    return buf.getvalue()


def profile_dict(prof: GProfile) -> dict:
    d = asdict(prof)
    d.update(prof.indicators())
    return d
