"""
Regression data model and (weighted) least-squares estimators.

The least-squares solvers go through the weighted Gram matrix
``n^{-1} sum_i w_i x_i x_i^T``. When that matrix is numerically singular
the minimum-norm solution is returned via a truncated SVD.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class RegressionProblem:
    """Fixed-design linear regression data ``Y = X theta + eps``.

    Parameters
    ----------
    X : ndarray, shape (n, q)
        Design matrix, one row per observation.
    Y : ndarray, shape (n,)
        Response vector.
    intercept_col : int, optional
        Index of the column of ``X`` that is identically one.
    column_names : tuple of str, optional
        Covariate names, used only for reporting.
    """

    X: np.ndarray
    Y: np.ndarray
    intercept_col: int | None = None
    column_names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        Y = np.array(self.Y, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or Y.ndim != 1:
            raise ValueError("X must be 2-d and Y 1-d")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but Y has length {Y.shape[0]}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("need n >= 1 and q >= 1")
        if self.intercept_col is not None:
            j = int(self.intercept_col)
            if not 0 <= j < X.shape[1]:
                raise ValueError(f"intercept_col {j} out of range")
            if not np.all(X[:, j] == 1.0):
                raise ValueError(f"column {j} is not identically one")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def q(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class Estimate:
    """Result of a (weighted) least-squares fit."""

    theta: np.ndarray
    gram: np.ndarray
    rank: int
    used_pseudoinverse: bool

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "rank": self.rank,
            "used_pseudoinverse": self.used_pseudoinverse,
        }


def load_problem(path, response_column: str, add_intercept: bool = False) -> RegressionProblem:
    """Read a regression problem from a CSV file with a header row.

    Every column other than `response_column` is taken as a covariate.
    With `add_intercept` an all-ones column is appended after the covariates.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if response_column not in header:
        raise ValueError(f"{path}: response column {response_column!r} not in header {header}")
    if not rows:
        raise ValueError(f"{path}: no data rows")

    data = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(header)}")
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise ValueError(f"{path}: non-numeric cell {cell!r} at row {i + 2}, column {header[j]!r}") from None
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: missing or non-finite values")

    iy = header.index(response_column)
    cov_idx = [j for j in range(len(header)) if j != iy]
    names = [header[j] for j in cov_idx]
    X = data[:, cov_idx]
    intercept_col = None
    if add_intercept:
        X = np.column_stack([X, np.ones(len(rows))])
        intercept_col = X.shape[1] - 1
        names.append("(intercept)")
    if X.shape[1] == 0:
        raise ValueError(f"{path}: no covariate columns (use add_intercept for a location model)")
    return RegressionProblem(X, data[:, iy], intercept_col=intercept_col, column_names=tuple(names))


def gram_matrix(problem: RegressionProblem) -> np.ndarray:
    """Return ``n^{-1} sum_i x_i x_i^T``."""
    X = problem.X
    G = X.T @ X / problem.n
    return 0.5 * (G + G.T)


def _rank_cutoff(s: np.ndarray, dim: int) -> float:
    return np.finfo(float).eps * dim * (s[0] if s.size else 0.0)


def _solve_normal_equations(gram: np.ndarray, rhs: np.ndarray):
    """Minimum-norm solution of ``gram @ theta = rhs`` for symmetric PSD `gram`."""
    U, s, Vt = np.linalg.svd(gram)
    keep = s > _rank_cutoff(s, gram.shape[0])
    rank = int(keep.sum())
    if rank == gram.shape[0]:
        theta = np.linalg.solve(gram, rhs)
    else:
        theta = Vt[keep].T @ ((U[:, keep].T @ rhs) / s[keep])
    return theta, rank


def pseudo_inverse(gram: np.ndarray) -> np.ndarray:
    """Moore-Penrose inverse with the same singular-value cutoff as the solvers."""
    U, s, Vt = np.linalg.svd(gram)
    keep = s > _rank_cutoff(s, max(gram.shape))
    return Vt[keep].T @ (U[:, keep].T / s[keep, None])


def _weighted_fit(problem: RegressionProblem, w: np.ndarray) -> Estimate:
    X, Y, n = problem.X, problem.Y, problem.n
    Xw = X * w[:, None]
    gram = Xw.T @ X / n
    gram = 0.5 * (gram + gram.T)
    rhs = Xw.T @ Y / n
    theta, rank = _solve_normal_equations(gram, rhs)
    return Estimate(theta=theta, gram=gram, rank=rank, used_pseudoinverse=rank < problem.q)


def ols_fit(problem: RegressionProblem) -> Estimate:
    """Ordinary least squares; minimum-norm solution if the Gram matrix is singular."""
    return _weighted_fit(problem, np.ones(problem.n))


def wls_fit(problem: RegressionProblem, w) -> Estimate:
    """Weighted least squares minimizing ``sum_i w_i (Y_i - x_i^T eta)^2``.

    Parameters
    ----------
    problem : RegressionProblem
    w : WeightVector or array_like
        Nonnegative weights of length n.

    Raises
    ------
    ValueError
        On length mismatch, negative entries, or all-zero ("degenerate") weights.
    """
    w = np.asarray(getattr(w, "w", w), dtype=float)
    if w.shape != (problem.n,):
        raise ValueError(f"weight vector has shape {w.shape}, expected ({problem.n},)")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if not np.any(w > 0):
        raise ValueError("degenerate weights: all entries are zero")
    return _weighted_fit(problem, w)


def wls_batch(X: np.ndarray, Y: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Weighted least-squares coefficients for many weight vectors at once.

    `W` has shape (B, n); returns an array of shape (B, q). Rows whose Gram
    matrix is singular fall back to the minimum-norm solution.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    n = X.shape[0]
    grams = np.einsum("bi,ij,ik->bjk", W, X, X) / n
    rhs = (W * Y) @ X / n
    try:
        return np.linalg.solve(grams, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.empty_like(rhs)
        for b in range(W.shape[0]):
            out[b], _ = _solve_normal_equations(grams[b], rhs[b])
        return out


def residuals(problem: RegressionProblem, theta) -> np.ndarray:
    """Return ``Y - X theta``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (problem.q,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({problem.q},)")
    return problem.Y - problem.X @ theta
