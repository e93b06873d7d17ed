"""Synthetic regression data for the Monte Carlo experiments."""

from __future__ import annotations

import numpy as np

from .model import RegressionProblem

ERROR_MODELS = ("normal", "centered_exponential", "centered_gumbel", "heteroscedastic_normal")
DESIGNS = ("uniform", "sign")


def design_matrix(n: int, q: int, rng: np.random.Generator, kind: str = "uniform") -> np.ndarray:
    """Rows ``(u_1, ..., u_{q-1}, 1)`` with iid covariates and a trailing intercept.

    ``'uniform'`` draws ``u ~ U[-1, 1]``, ``'sign'`` draws ``u = +-1`` with
    equal probability (Gram matrix tending to the identity).
    """
    if kind == "uniform":
        u = rng.uniform(-1.0, 1.0, size=(n, q - 1))
    elif kind == "sign":
        u = rng.choice([-1.0, 1.0], size=(n, q - 1))
    else:
        raise ValueError(f"unknown design {kind!r}; choose from {DESIGNS}")
    return np.column_stack([u, np.ones(n)])


def gram_limit(q: int, kind: str = "uniform") -> np.ndarray:
    """Large-n limit of ``n^{-1} X^T X`` for :func:`design_matrix`."""
    g = np.eye(q)
    if kind == "uniform":
        g[: q - 1, : q - 1] /= 3.0
    return g


def true_theta(q: int) -> np.ndarray:
    return np.linspace(1.0, -1.0, q) if q > 1 else np.array([1.0])


def error_variances(X: np.ndarray, model: str, sigma: float = 1.0) -> np.ndarray:
    """Per-observation error variances."""
    n, q = X.shape
    if model == "heteroscedastic_normal":
        return sigma**2 * (1.0 + np.sum(X**2, axis=1) / q)
    if model == "centered_gumbel":
        return np.full(n, sigma**2 * np.pi**2 / 6.0)
    if model in ("normal", "centered_exponential"):
        return np.full(n, sigma**2)
    raise ValueError(f"unknown error model {model!r}; choose from {ERROR_MODELS}")


def draw_errors(X: np.ndarray, model: str, rng: np.random.Generator, sigma: float = 1.0) -> np.ndarray:
    """Mean-zero errors for the rows of `X`."""
    n = X.shape[0]
    if model == "normal":
        return sigma * rng.standard_normal(n)
    if model == "centered_exponential":
        return sigma * (rng.standard_exponential(n) - 1.0)
    if model == "centered_gumbel":
        return sigma * (rng.gumbel(size=n) - np.euler_gamma)
    if model == "heteroscedastic_normal":
        return np.sqrt(error_variances(X, model, sigma)) * rng.standard_normal(n)
    raise ValueError(f"unknown error model {model!r}; choose from {ERROR_MODELS}")


def error_density(model: str, y, sigma: float = 1.0):
    """Density of iid error models; heteroscedastic errors have none."""
    y = np.asarray(y, dtype=float) / sigma
    if model == "normal":
        f = np.exp(-0.5 * y * y) / np.sqrt(2 * np.pi)
    elif model == "centered_exponential":
        f = np.where(y >= -1.0, np.exp(-(y + 1.0)), 0.0)
    elif model == "centered_gumbel":
        z = y + np.euler_gamma
        f = np.exp(-(z + np.exp(-z)))
    else:
        raise ValueError(f"error model {model!r} has no common density")
    return f / sigma


def error_support(model: str, sigma: float = 1.0) -> tuple[float, float]:
    """Interval carrying all but a negligible part of the error mass."""
    if model == "normal":
        return -12.0 * sigma, 12.0 * sigma
    if model == "centered_exponential":
        return -sigma, 40.0 * sigma
    if model == "centered_gumbel":
        return -5.0 * sigma, 40.0 * sigma
    raise ValueError(f"error model {model!r} has no common density")


def sandwich(X: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """``Gamma^{-1} Gamma_eps Gamma^{-1}`` at finite n."""
    n = X.shape[0]
    G = X.T @ X / n
    Ge = (X * variances[:, None]).T @ X / n
    Gi = np.linalg.inv(G)
    S = Gi @ Ge @ Gi
    return 0.5 * (S + S.T)


def make_problem(X: np.ndarray, theta: np.ndarray, errors: np.ndarray) -> RegressionProblem:
    return RegressionProblem(X, X @ theta + errors, intercept_col=X.shape[1] - 1)
