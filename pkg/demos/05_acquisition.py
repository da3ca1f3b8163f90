"""
Acquisition functions
=====================

Acquisition functions turn a predictive mean and spread into a priority.
Expected improvement is the expected amount by which a candidate beats the
incumbent best.
"""

# %%
import numpy as np

from boga.acquisition import expected_improvement, select_for_evaluation, upper_confidence_bound

incumbent = 0.5
mean = np.array([0.40, 0.45, 0.55, 0.30])
std = np.array([0.01, 0.20, 0.02, 0.50])
print("EI :", np.round(expected_improvement(mean, std, incumbent), 4))
print("UCB:", np.round(upper_confidence_bound(mean, std, beta=2.0), 4))

# %%
# A Monte Carlo check of the closed form.
z = np.random.default_rng(0).standard_normal(1_000_000)
mc = np.maximum(mean[:, None] + std[:, None] * z - incumbent, 0).mean(axis=1)
print("MC :", np.round(mc, 4))

# %%
# With no spread, EI collapses to max(mean - incumbent, 0).
print(expected_improvement(np.array([0.4, 0.7]), np.array([0.0, 0.0]), incumbent))

# %%
# The m best candidates by acquisition value go to the expensive objective.
pool = ["AAAAAAAA", "CCCCCCCC", "DDDDDDDD", "EEEEEEEE"]
print([pool[i] for i in select_for_evaluation(pool, expected_improvement(mean, std, incumbent), 2)])
