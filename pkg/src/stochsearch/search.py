"""
Stochastic search over randomly weighted least-squares candidates.

The candidate set holds the OLS estimate (index 0) and ``B`` weighted
least-squares estimates, each under an independent exchangeable weight draw.
The estimator is the candidate with the largest log-concave profile
log-likelihood.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import rng as rngmod
from .logconcave import DEFAULT_TOL, LogConcaveFit, MLEDoesNotExist, profile_fit, recenter_to_mean_zero
from .model import Estimate, RegressionProblem, ols_fit, wls_fit
from .weights import WeightVector, draw_weights

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateSet:
    """OLS estimate followed by ``B`` randomly weighted LS estimates."""

    candidates: tuple[Estimate, ...]
    B: int
    scheme: str
    c: float
    seed: int
    weights: tuple[WeightVector, ...] = field(default=(), repr=False, compare=False)

    @property
    def thetas(self) -> np.ndarray:
        return np.vstack([e.theta for e in self.candidates])

    def __len__(self):
        return len(self.candidates)


@dataclass(frozen=True)
class SearchResult:
    """Outcome of the stochastic search.

    `theta_hat` is the winning candidate with its intercept shifted by the
    mean of the fitted error density, and `fit` is that density recentered
    to mean zero. Candidates whose residuals are all equal have profile
    value ``-inf``.
    """

    theta_hat: np.ndarray
    best_index: int
    profile_values: np.ndarray
    fit: LogConcaveFit
    candidates: CandidateSet

    def to_dict(self) -> dict:
        vals = self.profile_values
        finite = vals[np.isfinite(vals)]
        return {
            "theta_hat": self.theta_hat.tolist(),
            "best_index": self.best_index,
            "profile_values": {
                "count": int(vals.size),
                "valid": int(finite.size),
                "max": float(finite.max()),
                "min": float(finite.min()),
                "median": float(np.median(finite)),
                "ols": float(vals[0]),
            },
            "fit": self.fit.to_dict(),
        }


def build_candidates(problem: RegressionProblem, scheme: str, c: float, B: int, seed: int,
                     key: tuple = (), keep_weights: bool = False) -> CandidateSet:
    """Candidate set of OLS plus `B` weighted LS fits.

    Weight draw ``b`` comes from the substream ``(seed, *key, b)``, so the set
    for ``B`` is a prefix of the set for any larger ``B``.
    """
    if B < 0:
        raise ValueError("B must be nonnegative")
    cands = [ols_fit(problem)]
    kept = []
    for b in range(1, B + 1):
        w = draw_weights(scheme, problem.n, c, rngmod.substream(seed, rngmod.WEIGHTS, *key, b))
        cands.append(wls_fit(problem, w))
        if keep_weights:
            kept.append(w)
    return CandidateSet(tuple(cands), B, scheme, float(c), int(seed), tuple(kept))


def search_candidates(problem: RegressionProblem, cands: CandidateSet, tol: float = DEFAULT_TOL) -> SearchResult:
    """Pick the candidate maximizing the profile log-likelihood."""
    values = np.full(len(cands), -np.inf)
    fits: dict[int, LogConcaveFit] = {}
    for b, est in enumerate(cands.candidates):
        try:
            fit = profile_fit(problem, est.theta, tol)
        except MLEDoesNotExist:
            log.warning("candidate %d skipped: residuals are all equal", b)
            continue
        values[b] = fit.loglik
        fits[b] = fit
    if not fits:
        raise ValueError("no valid candidate: every candidate has degenerate residuals")
    best = int(np.argmax(values))  # first maximizer on ties
    if problem.intercept_col is None:
        log.warning("design has no intercept column; fitted density is not recentered")
        fit, theta_hat = fits[best], cands.candidates[best].theta.copy()
    else:
        fit, theta_hat = recenter_to_mean_zero(fits[best], cands.candidates[best].theta, problem.intercept_col)
    return SearchResult(theta_hat, best, values, fit, cands)


def stochastic_search_fit(problem: RegressionProblem, scheme: str = "multinomial", c: float = 1.0,
                          B: int = 200, seed: int = 0, tol: float = DEFAULT_TOL,
                          key: tuple = ()) -> SearchResult:
    """Stochastic search estimate of the regression coefficients.

    Parameters
    ----------
    problem : RegressionProblem
    scheme : {'multinomial', 'subsample'}
        Weighting scheme for the random candidates.
    c : float
        Target constant of the weights; must be 1 for multinomial weights.
    B : int
        Number of random candidates in addition to OLS.
    seed : int
        Seed of the weight substreams.
    tol : float
        Log-concave solver tolerance.
    key : tuple of int
        Extra substream key, e.g. a Monte Carlo replicate index.

    Returns
    -------
    SearchResult
    """
    cands = build_candidates(problem, scheme, c, B, seed, key=key)
    return search_candidates(problem, cands, tol)


def min_distance_to(cands, theta_true, n: int) -> dict:
    """``min_b sqrt(n) ||theta_b - theta_true||`` with and without the OLS entry.

    `cands` may be a CandidateSet or an array of shape (B+1, q).
    """
    thetas = cands.thetas if isinstance(cands, CandidateSet) else np.atleast_2d(np.asarray(cands, dtype=float))
    d = np.sqrt(n) * np.linalg.norm(thetas - np.asarray(theta_true, dtype=float), axis=1)
    return {
        "min_all": float(d.min()),
        "min_excl0": float(d[1:].min()) if d.size > 1 else None,
    }


def choose_c(q: int, method: str = "unit") -> float:
    """Tuning constant for the weights.

    ``'unit'`` returns 1. ``'median_rule'`` returns the median of
    ``S^2 / q`` for ``S^2 ~ chi^2_q``. (Minimizing ``c exp(t / (2 c^2))`` at
    ``t = S^2/q`` would instead give ``sqrt(t)``; that variant is not
    implemented.)
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if method == "unit":
        return 1.0
    if method == "median_rule":
        return float(stats.chi2.ppf(0.5, q) / q)
    raise ValueError(f"unknown method {method!r}")


def write_candidate_dump(path, result: SearchResult) -> None:
    """CSV with columns b, theta_1..theta_q, profile_loglik."""
    thetas = result.candidates.thetas
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["b"] + [f"theta_{j + 1}" for j in range(thetas.shape[1])] + ["profile_loglik"])
        for b, (th, v) in enumerate(zip(thetas, result.profile_values)):
            writer.writerow([b] + [repr(float(t)) for t in th] + [repr(float(v))])
