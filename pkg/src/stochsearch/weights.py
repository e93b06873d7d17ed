"""
Exchangeable random weight vectors and their empirical regularity statistics.

Two schemes are provided: multinomial weights (ordinary bootstrap resampling)
and subsampling without replacement, where ``m`` entries equal ``n/m`` and
the rest are zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SCHEMES = ("multinomial", "subsample")


@dataclass(frozen=True)
class WeightVector:
    """One draw of an exchangeable weight vector summing to ``n``.

    Attributes
    ----------
    w : ndarray
        Nonnegative weights.
    scheme : {'multinomial', 'subsample'}
    c_nominal : float
        Limit of ``n^{-1} sum (w_i - 1)^2`` targeted by the scheme.
    m : int or None
        Subsample size (subsample scheme only).
    """

    w: np.ndarray
    scheme: str
    c_nominal: float
    m: int | None = None

    @property
    def n(self) -> int:
        return self.w.shape[0]


def multinomial_weights(n: int, rng: np.random.Generator) -> WeightVector:
    """Counts of ``n`` uniform draws over ``n`` cells."""
    if n < 2:
        raise ValueError(f"multinomial weights need n >= 2, got {n}")
    counts = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(float)
    return WeightVector(counts, "multinomial", 1.0)


def subsample_weights(n: int, m: int, rng: np.random.Generator) -> WeightVector:
    """Random permutation of ``m`` entries ``n/m`` and ``n - m`` zeros."""
    if not 1 <= m <= n - 1:
        raise ValueError(f"subsample size must lie in [1, n-1] = [1, {n - 1}], got {m}")
    w = np.zeros(n)
    w[rng.permutation(n)[:m]] = n / m
    return WeightVector(w, "subsample", math.sqrt(n / m - 1.0), m)


def subsample_size_for_c(n: int, c: float) -> int:
    """Subsample size with ``n/m - 1`` closest to ``c**2``, clamped to [1, n-1]."""
    if n < 2 or c <= 0:
        raise ValueError("need n >= 2 and c > 0")
    m = int(round(n / (c * c + 1.0)))
    return min(max(m, 1), n - 1)


def draw_weights(scheme: str, n: int, c: float, rng: np.random.Generator) -> WeightVector:
    """Draw one weight vector for a named scheme with target constant `c`.

    The multinomial scheme has ``c = 1`` fixed; asking for another value is
    an error rather than being silently ignored.
    """
    if scheme == "multinomial":
        if abs(c - 1.0) > 1e-12:
            raise ValueError(f"multinomial weights have c = 1; got c = {c} (use the subsample scheme)")
        return multinomial_weights(n, rng)
    if scheme == "subsample":
        return subsample_weights(n, subsample_size_for_c(n, c), rng)
    raise ValueError(f"unknown weight scheme {scheme!r}; choose from {SCHEMES}")


def _values(w) -> np.ndarray:
    return np.asarray(getattr(w, "w", w), dtype=float)


def w2_statistic(w) -> float:
    """``n^{-1} sum_i (w_i - 1)^2``."""
    v = _values(w)
    return float(np.mean((v - 1.0) ** 2))


def w3_statistic(w, K: float) -> float:
    """``n^{-1} sum_i w_i^2 1{w_i >= K}``."""
    v = _values(w)
    return float(np.sum(v[v >= K] ** 2) / v.size)


def write_weight_dump(path, draws) -> None:
    """Write weight vectors as CSV, one row per draw, columns w1..wn."""
    rows = np.vstack([_values(d) for d in draws])
    header = ",".join(f"w{i + 1}" for i in range(rows.shape[1]))
    np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt="%.17g")
