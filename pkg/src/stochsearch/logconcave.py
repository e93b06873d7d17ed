"""
Univariate log-concave maximum-likelihood density estimation.

The estimator maximizes

    (1/n) sum_i phi(r_i) - integral exp(phi) + 1

over concave functions phi that are piecewise linear with knots among the
distinct observations and equal to -inf outside their range. At the optimum
``integral exp(phi) = 1``, so no explicit normalization constraint is needed.

The solver is an active-set method. For a fixed knot set the objective is
smooth and strictly concave in the knot values and is maximized by damped
Newton steps with a tridiagonal Hessian. A knot is added where the
directional derivative for a new downward kink is largest and positive, and
dropped again when the Newton step would violate concavity there.

Computations run on the data mapped affinely to [0, 1]; results are mapped
back, which makes the fit exactly translation- and scale-equivariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .model import Estimate, RegressionProblem, residuals

DEFAULT_TOL = 1e-7

# |d| below which A_1, A_2 come from their Taylor series; 12 terms give
# truncation error < 1e-18 there, and the closed forms lose < 1e-12 above it
_SERIES_CUT = 0.1
_SERIES_POW = np.arange(12)
_SERIES_COEF = np.array([
    [1.0 / (math.factorial(j) * (j + k + 1)) for j in _SERIES_POW] for k in (1, 2)
]).T


class MLEDoesNotExist(ValueError):
    """Raised when all observations coincide and no density maximizes the likelihood."""


# --- segment integrals -----------------------------------------------------
#
# For a segment with endpoint values (a, b), phi(t) = (1-t) a + t b on [0, 1].
# All moments are taken about the larger endpoint so exponentials never
# overflow: with h = max(a, b) and d = min(a, b) - h <= 0,
#   A_k(d) = int_0^1 u^k exp(u d) du,
# where u is the fractional distance from the larger endpoint.

def _a0(d):
    tiny = np.abs(d) < 1e-8
    safe = np.where(tiny, 1.0, d)
    return np.where(tiny, 1.0 + 0.5 * d, np.expm1(safe) / safe)


def _a_moments(d):
    small = np.abs(d) < _SERIES_CUT
    ds = np.where(small, -1.0, d)
    ed = np.exp(ds)
    a0 = _a0(d)
    a1 = (ed * (ds - 1.0) + 1.0) / (ds * ds)
    a2 = (ed * (ds * ds - 2.0 * ds + 2.0) - 2.0) / (ds * ds * ds)
    if small.any():
        ser = (d[small, None] ** _SERIES_POW) @ _SERIES_COEF
        a1[small] = ser[:, 0]
        a2[small] = ser[:, 1]
    return a0, a1, a2


def segment_mass(a, b):
    """``int_0^1 exp((1-t) a + t b) dt``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    h = np.maximum(a, b)
    return np.exp(h) * _a0(np.minimum(a, b) - h)


def segment_integrals(a, b, second_order=False):
    """Integrals of ``exp((1-t) a + t b)`` over t in [0, 1].

    Returns ``(I, I_t)`` with ``I = int e`` and ``I_t = int t e``; with
    `second_order` also ``(I_tt, I_t1t, I_1t1t)`` = int of t^2, t(1-t),
    (1-t)^2 times the exponential.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    right_hi = b >= a
    h = np.where(right_hi, b, a)
    d = np.where(right_hi, a - b, b - a)
    a0, a1, a2 = _a_moments(d)
    eh = np.exp(h)
    i0 = eh * a0
    near = eh * (a0 - a1)   # weight (1-u) toward the larger endpoint
    far = eh * a1
    i_t = np.where(right_hi, near, far)
    if not second_order:
        return i0, i_t
    nn = eh * (a0 - 2.0 * a1 + a2)
    nf = eh * (a1 - a2)
    ff = eh * a2
    i_tt = np.where(right_hi, nn, ff)
    i_11 = np.where(right_hi, ff, nn)
    return i0, i_t, i_tt, nf, i_11


# --- result type -------------------------------------------------------------

@dataclass(frozen=True)
class LogConcaveFit:
    """Piecewise-linear concave log-density.

    Attributes
    ----------
    knots : ndarray
        Strictly increasing knot locations; the first and last are the
        smallest and largest observation.
    phi : ndarray
        Log-density values at the knots. The log-density is linear between
        knots and ``-inf`` outside ``[knots[0], knots[-1]]``.
    loglik : float
        ``sum_i phi(r_i)`` over the (possibly tied) observations.
    integral : float
        ``int exp(phi)``; equals one up to solver tolerance.
    mean : float
        ``int y exp(phi(y)) dy``.
    tol : float
        Tolerance the fit was computed with.
    n : int
        Number of observations.
    """

    knots: np.ndarray
    phi: np.ndarray
    loglik: float
    integral: float
    mean: float
    tol: float
    n: int

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.phi) / np.diff(self.knots)

    def log_density(self, y):
        y = np.asarray(y, dtype=float)
        inside = (y >= self.knots[0]) & (y <= self.knots[-1])
        vals = np.interp(y, self.knots, self.phi)
        return np.where(inside, vals, -np.inf)

    def density(self, y):
        return np.exp(self.log_density(y))

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 0:
            return self.cdf(y[None])[0]
        t, p = self.knots, self.phi
        width = np.diff(t)
        seg, _ = segment_integrals(p[:-1], p[1:])
        cum = np.concatenate([[0.0], np.cumsum(seg * width)])
        yc = np.clip(y, t[0], t[-1])
        s = np.clip(np.searchsorted(t, yc, side="right") - 1, 0, t.size - 2)
        dy = yc - t[s]
        part, _ = segment_integrals(p[s], np.interp(yc, t, p))
        return cum[s] + dy * part

    def to_dict(self) -> dict:
        return {
            "knots": self.knots.tolist(),
            "phi": self.phi.tolist(),
            "loglik": self.loglik,
            "integral": self.integral,
            "mean": self.mean,
            "tol": self.tol,
        }


def evaluate_fit(fit: LogConcaveFit, y) -> dict:
    """Log-density, density and distribution function of `fit` at `y`."""
    logd = fit.log_density(y)
    out = {"log_density": logd, "density": np.exp(logd), "cdf": fit.cdf(y)}
    if np.ndim(y) == 0:
        out = {k: float(v) for k, v in out.items()}
    return out


# --- solver ------------------------------------------------------------------

class _Problem:
    """Distinct standardized points z in [0, 1] with probability weights w."""

    def __init__(self, z, w):
        self.z = z
        self.w = w
        self.dz = np.diff(z)
        # sum_i w_i (z_i - z_j)^+ for every j
        wz_tail = np.cumsum((w * z)[::-1])[::-1]
        w_tail = np.cumsum(w[::-1])[::-1]
        self.data_tail = wz_tail - z * w_tail

    def project(self, kidx):
        """Data weights carried by each knot under linear interpolation."""
        tk = self.z[kidx]
        s = np.clip(np.searchsorted(tk, self.z, side="right") - 1, 0, tk.size - 2)
        lam = (self.z - tk[s]) / (tk[s + 1] - tk[s])
        c = np.bincount(s, self.w * (1.0 - lam), minlength=tk.size)
        c += np.bincount(s + 1, self.w * lam, minlength=tk.size)
        return c


def _objective(theta, c, width):
    i0 = segment_mass(theta[:-1], theta[1:])
    return float(np.dot(width, i0) - np.dot(c, theta))


def _newton(theta, c, width, max_iter=200):
    """Minimize ``sum width*J(theta) - c.theta`` for a fixed knot set."""
    k = theta.size
    f = _objective(theta, c, width)
    for _ in range(max_iter):
        i0, i_t, i_tt, i_mix, i_11 = segment_integrals(theta[:-1], theta[1:], second_order=True)
        grad = -c.copy()
        grad[:-1] += width * (i0 - i_t)
        grad[1:] += width * i_t
        diag = np.zeros(k)
        diag[:-1] += width * i_11
        diag[1:] += width * i_tt
        ab = np.zeros((2, k))
        ab[0, 1:] = width * i_mix
        ab[1] = diag
        step = -solveh_banded(ab, grad, check_finite=False)
        decrement = -float(np.dot(grad, step))
        if decrement < 1e-12:
            # quadratic-convergence regime: the Armijo test is below rounding
            theta = theta + step
            if decrement < 1e-24:
                break
            f = _objective(theta, c, width)
            continue
        t = 1.0
        while t >= 1e-10:
            cand = theta + t * step
            fc = _objective(cand, c, width)
            if fc <= f - 0.25 * t * decrement:
                break
            t *= 0.5
        else:
            # no representable descent left
            break
        theta, f = cand, fc
    return theta


def _slope_changes(theta, tk):
    s = np.diff(theta) / np.diff(tk)
    return s[1:] - s[:-1]


def _directional(prob, phi_all):
    """Gain from adding a downward kink at each observation."""
    z, dz = prob.z, prob.dz
    i0, i_t = segment_integrals(phi_all[:-1], phi_all[1:])
    mass = dz * i0
    first = dz * dz * i_t + z[:-1] * mass
    mass_tail = np.concatenate([np.cumsum(mass[::-1])[::-1], [0.0]])
    first_tail = np.concatenate([np.cumsum(first[::-1])[::-1], [0.0]])
    model_tail = first_tail - z * mass_tail
    return model_tail - prob.data_tail


def _solve(prob, tol, max_outer=10_000):
    m = prob.z.size
    kidx = np.array([0, m - 1])
    theta = np.zeros(2)
    kkt_tol = 1e-2 * tol
    for _ in range(max_outer):
        # inner loop: Newton on the current knot set, backing off to stay concave
        while True:
            tk = prob.z[kidx]
            width = np.diff(tk)
            new = _newton(theta, prob.project(kidx), width)
            ch_new = _slope_changes(new, tk)
            if ch_new.size == 0 or np.all(ch_new <= 0.0):
                theta = new
                break
            ch_old = _slope_changes(theta, tk)
            bad = ch_new > 0.0
            ratio = np.full(ch_new.shape, np.inf)
            ratio[bad] = -ch_old[bad] / (ch_new[bad] - ch_old[bad])
            t = float(np.clip(ratio.min(), 0.0, 1.0))
            theta = theta + t * (new - theta)
            drop = int(np.argmin(ratio)) + 1
            keep = np.ones(kidx.size, dtype=bool)
            keep[drop] = False
            kidx, theta = kidx[keep], theta[keep]

        phi_all = np.interp(prob.z, prob.z[kidx], theta)
        gain = _directional(prob, phi_all)
        gain[kidx] = -np.inf
        if gain.max() <= kkt_tol:
            return kidx, theta
        # best candidate kink within each gap between current knots
        gap = np.searchsorted(kidx, np.arange(m), side="right")
        order = np.lexsort((-gain, gap))
        first = order[np.r_[True, gap[order][1:] != gap[order][:-1]]]
        new_knots = first[gain[first] > kkt_tol]
        merged = np.union1d(kidx, new_knots)
        theta = np.interp(prob.z[merged], prob.z[kidx], theta)
        kidx = merged
    raise RuntimeError("log-concave solver did not converge")


def fit_logconcave(r, tol: float = DEFAULT_TOL) -> LogConcaveFit:
    """Log-concave maximum-likelihood density estimate for a sample.

    Parameters
    ----------
    r : array_like
        Observations (for example regression residuals). Ties are allowed.
    tol : float
        Convergence tolerance; knots are added while a kink improves the
        scaled objective by more than ``tol / 100`` per unit step.

    Returns
    -------
    LogConcaveFit

    Raises
    ------
    MLEDoesNotExist
        If fewer than two distinct values are present.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    r = np.asarray(r, dtype=float).ravel()
    if not np.all(np.isfinite(r)):
        raise ValueError("observations must be finite")
    n = r.size
    x, counts = np.unique(r, return_counts=True)
    if x.size < 2:
        raise MLEDoesNotExist("MLE does not exist: fewer than two distinct observations")
    lo, scale = x[0], x[-1] - x[0]
    z = (x - lo) / scale
    z[-1] = 1.0
    w = counts / n
    prob = _Problem(z, w)
    kidx, theta = _solve(prob, tol)

    tz = z[kidx]
    width = np.diff(tz)
    i0, i_t = segment_integrals(theta[:-1], theta[1:])
    integral = float(np.dot(width, i0))
    zmean = float(np.dot(width, tz[:-1] * i0 + width * i_t))
    phi = theta - math.log(scale)
    knots = x[kidx]
    phi_data = np.interp(z, tz, theta) - math.log(scale)
    loglik = float(np.dot(counts, phi_data))
    return LogConcaveFit(
        knots=knots,
        phi=phi,
        loglik=loglik,
        integral=integral,
        mean=lo * integral + scale * zmean,
        tol=tol,
        n=n,
    )


def recenter_to_mean_zero(fit: LogConcaveFit, theta, intercept_col: int | None):
    """Shift a fit to mean zero and move the shift into the intercept.

    Returns the shifted fit ``y -> phi(y + mean)`` and the coefficient vector
    (an `Estimate` or array) with its intercept coordinate increased by the
    fitted mean. The fitted values ``x^T theta`` plus errors are unchanged.
    """
    if intercept_col is None:
        raise ValueError("recentering needs an intercept column in the design")
    mu = fit.mean / fit.integral
    shifted = LogConcaveFit(
        knots=fit.knots - mu,
        phi=fit.phi.copy(),
        loglik=fit.loglik,
        integral=fit.integral,
        mean=fit.mean - mu * fit.integral,
        tol=fit.tol,
        n=fit.n,
    )
    if isinstance(theta, Estimate):
        vec = theta.theta.copy()
        vec[intercept_col] += mu
        new_theta = Estimate(vec, theta.gram, theta.rank, theta.used_pseudoinverse)
    else:
        new_theta = np.array(theta, dtype=float)
        new_theta[intercept_col] += mu
    return shifted, new_theta


def profile_loglik(problem: RegressionProblem, eta, tol: float = DEFAULT_TOL) -> float:
    """Profile log-likelihood: maximal log-concave log-likelihood of the residuals at `eta`."""
    return profile_fit(problem, eta, tol).loglik


def profile_fit(problem: RegressionProblem, eta, tol: float = DEFAULT_TOL) -> LogConcaveFit:
    """Unconstrained log-concave fit of the residuals at `eta`."""
    try:
        return fit_logconcave(residuals(problem, eta), tol)
    except MLEDoesNotExist:
        raise MLEDoesNotExist("MLE does not exist at this eta: residuals are all equal") from None
