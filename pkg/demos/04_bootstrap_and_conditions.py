"""
Weighted bootstrap and its regularity conditions
================================================

Given one dataset, a randomly reweighted least-squares fit fluctuates
around OLS. The scaled fluctuation has covariance close to c^2 times the
heteroscedasticity-robust sandwich matrix, which is what makes the
candidates spread out in the right shape. The condition statistics report
how far a given design and weight scheme are from the large-n regime.
"""

import math

import numpy as np

from stochsearch import RegressionProblem, d_condition_stats, subsample_weights
from stochsearch.datagen import design_matrix, draw_errors, error_variances, sandwich, true_theta
from stochsearch.model import wls_batch
from stochsearch.rng import substream

n, q = 2000, 2
rng = substream(0, 1)
X = design_matrix(n, q, rng)
theta = true_theta(q)
eps = draw_errors(X, "heteroscedastic_normal", rng)
Y = X @ theta + eps
sigma = sandwich(X, error_variances(X, "heteroscedastic_normal"))

# 500 half-subsamples: c = 1.
W = np.vstack([np.ones(n)] + [subsample_weights(n, n // 2, substream(0, 2, b)).w for b in range(500)])
est = wls_batch(X, Y, W)
cov = np.cov(math.sqrt(n) * (est[1:] - est[0]), rowvar=False)
print("sandwich matrix:\n", np.round(sigma, 3))
print("bootstrap covariance:\n", np.round(cov, 3))
print(f"relative Frobenius error {np.linalg.norm(cov - sigma) / np.linalg.norm(sigma):.3f}")

rep = d_condition_stats(RegressionProblem(X, Y), eps, weights=W[1], Ks=(2.0, 3.0))
print("condition statistics:", rep.to_dict())
