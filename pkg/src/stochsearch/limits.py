"""
Limit laws for nearest-candidate distances and regularity diagnostics.

Contents
--------
* constants ``alpha_q`` and ``beta_q`` of the Weibull nearest-neighbour limits,
* the Weibull(q) law with cdf ``1 - exp(-x^q)``,
* the scaled nearest-point statistic and draws from the limit law of
  ``B^{1/q} min_b ||Z_0 + c Z_b||`` for Gaussian ``Z``,
* plug-in statistics for the design/error conditions,
* the permutation-average inequality used to control weighted sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .model import RegressionProblem, gram_matrix
from .weights import w2_statistic, w3_statistic

RANK_RTOL = 1e-10


def alpha_q(q: int) -> float:
    """``sqrt(pi) / Gamma(q/2 + 1)^{1/q}``; ``alpha_q**q`` is the volume of the unit q-ball."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return math.exp(0.5 * math.log(math.pi) - gammaln(q / 2 + 1) / q)


def beta_q(q: int) -> float:
    """``sqrt(2) Gamma(q/2 + 1)^{1/q}``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return math.exp(0.5 * math.log(2.0) + gammaln(q / 2 + 1) / q)


def weibull_cdf(x, q):
    """Distribution function ``1 - exp(-x^q)`` of Weibull(q)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("Weibull cdf is defined for x >= 0")
    out = -np.expm1(-(x ** q))
    return float(out) if out.ndim == 0 else out


def weibull_sample(q, rng: np.random.Generator, size=None):
    """Inverse-transform draws ``(-log U)^{1/q}``."""
    u = rng.random(size)
    return (-np.log1p(-u)) ** (1.0 / q)


def scaled_min_statistic(points, z, f_z: float, q: int) -> float:
    """``alpha_q f(z)^{1/q} B^{1/q} min_b ||Z_b - z||`` for a (B, q) array of points."""
    if f_z <= 0:
        raise ValueError("density at z must be positive")
    points = np.asarray(points, dtype=float).reshape(-1, q)
    B = points.shape[0]
    dmin = math.sqrt(float(np.min(np.sum((points - np.asarray(z, dtype=float)) ** 2, axis=1))))
    return alpha_q(q) * (f_z * B) ** (1.0 / q) * dmin


@dataclass(frozen=True)
class LimitLawSpec:
    """Parameters of the limit law of the scaled minimal candidate distance.

    Use :meth:`from_sigma` to fill in `rank` and `pseudo_det` from ``sigma``.
    """

    q: int
    c: float
    sigma: np.ndarray
    rank: int
    pseudo_det: float

    @classmethod
    def from_sigma(cls, sigma, c: float = 1.0) -> "LimitLawSpec":
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        if sigma.shape[0] != sigma.shape[1]:
            raise ValueError("sigma must be square")
        if c <= 0:
            raise ValueError("c must be positive")
        sigma = 0.5 * (sigma + sigma.T)
        ev = np.linalg.eigvalsh(sigma)
        if ev.max() <= 0:
            raise ValueError("sigma has rank 0")
        if ev.min() < -RANK_RTOL * ev.max():
            raise ValueError("sigma is not positive semidefinite")
        nz = ev[ev > RANK_RTOL * ev.max()]
        return cls(q=sigma.shape[0], c=float(c), sigma=sigma, rank=int(nz.size),
                   pseudo_det=float(np.prod(nz)))

    def to_dict(self) -> dict:
        return {"q": self.q, "c": self.c, "sigma": self.sigma.tolist(),
                "rank": self.rank, "pseudo_det": self.pseudo_det}


def corollary_limit_sample(spec: LimitLawSpec, rng: np.random.Generator, size=None):
    """Draws of ``beta_r det^{1/(2r)} c exp(S^2 / (2 c^2 r)) W``.

    Here ``r`` is the rank of sigma, ``det`` the product of its nonzero
    eigenvalues, ``S^2 ~ chi^2_r`` and ``W ~ Weibull(r)`` independent.
    """
    r = spec.rank
    if r < 1:
        raise ValueError("sigma has rank 0")
    s2 = rng.chisquare(r, size)
    w = weibull_sample(r, rng, size)
    c = spec.c
    return beta_q(r) * spec.pseudo_det ** (1.0 / (2 * r)) * c * np.exp(s2 / (2 * c * c * r)) * w


def direct_min_statistic(sigma, c: float, B: int, rng: np.random.Generator, size: int, chunk: int = 4_000_000):
    """Simulate ``B^{1/r} min_{b<=B} ||Z_0 + c Z_b||`` with ``Z ~ N(0, sigma)``.

    The exponent uses the rank ``r`` of sigma.
    """
    spec = LimitLawSpec.from_sigma(sigma, c)
    root = _psd_sqrt(spec.sigma)
    q = spec.q
    out = np.empty(size)
    per = max(1, chunk // max(B * q, 1))
    for start in range(0, size, per):
        k = min(per, size - start)
        z0 = rng.standard_normal((k, 1, q)) @ root
        zb = rng.standard_normal((k, B, q)) @ root
        d2 = np.sum((z0 + c * zb) ** 2, axis=2)
        out[start:start + k] = np.sqrt(d2.min(axis=1))
    return B ** (1.0 / spec.rank) * out


def _psd_sqrt(sigma):
    ev, vec = np.linalg.eigh(sigma)
    ev = np.clip(ev, 0.0, None)
    return (vec * np.sqrt(ev)) @ vec.T


def approx_stochastic_factor(c):
    """High-dimensional approximation ``c exp(1 / (2 c^2))`` of the c-dependent factor."""
    c = np.asarray(c, dtype=float)
    return c * np.exp(1.0 / (2.0 * c * c))


# --- regularity diagnostics ----------------------------------------------------

@dataclass
class ConditionReport:
    """Plug-in statistics for the weight and design/error conditions."""

    n: int
    d1_gap: float | None
    d3_stat: float
    lindeberg_stat: dict = field(default_factory=dict)
    w2: float | None = None
    w3: dict = field(default_factory=dict)
    sum_L: float = 0.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d1_gap": self.d1_gap,
            "d3_stat": self.d3_stat,
            "sum_L": self.sum_L,
            "lindeberg_stat": {repr(float(k)): v for k, v in self.lindeberg_stat.items()},
            "w2": self.w2,
            "w3": {repr(float(k)): v for k, v in self.w3.items()},
        }


def d_condition_stats(problem: RegressionProblem, errors, deltas=(0.01, 0.1), Ks=(1.0, 2.0, 3.0),
                      weights=None, gram_target=None) -> ConditionReport:
    """Design/error statistics with ``L_i = n^{-1} (1 + e_i^2) ||x_i||^2``.

    Parameters
    ----------
    problem : RegressionProblem
    errors : array_like
        True errors or residuals, length n.
    deltas : sequence of float
        Thresholds for the Lindeberg statistic ``sum_i L_i 1{L_i > delta}``.
    Ks : sequence of float
        Thresholds for the weight statistic ``n^{-1} sum w_i^2 1{w_i >= K}``
        (only if `weights` is given).
    weights : WeightVector or array_like, optional
    gram_target : ndarray, optional
        Large-n limit of the Gram matrix; its Frobenius distance to
        ``n^{-1} sum x_i x_i^T`` is reported as `d1_gap`.
    """
    e = np.asarray(errors, dtype=float)
    if e.shape != (problem.n,):
        raise ValueError(f"errors have shape {e.shape}, expected ({problem.n},)")
    L = (1.0 + e * e) * np.sum(problem.X ** 2, axis=1) / problem.n
    d1 = None
    if gram_target is not None:
        d1 = float(np.linalg.norm(gram_matrix(problem) - np.asarray(gram_target, dtype=float)))
    rep = ConditionReport(
        n=problem.n,
        d1_gap=d1,
        d3_stat=float(np.sum(L * np.minimum(L, 1.0))),
        lindeberg_stat={float(d): float(np.sum(L[L > d])) for d in deltas},
        sum_L=float(L.sum()),
    )
    if weights is not None:
        rep.w2 = w2_statistic(weights)
        rep.w3 = {float(K): w3_statistic(weights, K) for K in Ks}
    return rep


def lemma6_bound(v, mean_norms, trunc_norms, K: float) -> dict:
    """Upper bound on ``E || sum_i V_i M_i - vbar sum_i E M_i ||``.

    `V` is a uniform random permutation of the nonnegative vector `v`,
    independent of the random vectors ``M_i``; ``mean_norms[i] = E||M_i||``
    and ``trunc_norms[i] = E ||M_i|| min(||M_i||, 1)``. The bound is
    ``2 R(K) S + 2 vbar L + sqrt(n/(n-1) K vbar L)`` with
    ``R(K) = n^{-1} sum v_i 1{v_i > K}``, ``S = sum E||M_i||`` and
    ``L = sum E||M_i|| min(||M_i||, 1)``.
    """
    v = np.asarray(v, dtype=float)
    n = v.size
    if n < 2:
        raise ValueError("need n >= 2")
    if K < 0:
        raise ValueError("K must be nonnegative")
    vbar = float(v.mean())
    R = float(np.sum(v[v > K]) / n)
    S = float(np.sum(mean_norms))
    L = float(np.sum(trunc_norms))
    bound = 2 * R * S + 2 * vbar * L + math.sqrt(n / (n - 1) * K * vbar * L)
    return {"R_K": R, "S": S, "L": L, "vbar": vbar, "bound": bound}
