"""
Surrogates with uncertainty
===========================

Two surrogate families give a mean and a standard deviation for each input: a
deep ensemble of small MLPs, and a single evidential network with a
normal-inverse-gamma output head.
"""

# %%
import matplotlib

matplotlib.use("Agg")
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from boga.surrogate import SurrogateConfig, fit_surrogate

rng = np.random.default_rng(0)
x = np.concatenate([rng.uniform(-3, -1, 60), rng.uniform(1, 3, 60)])
y = np.sin(x) + 0.1 * rng.normal(size=x.size)
grid = np.linspace(-5, 5, 200)

# %%
# Predictive spread grows away from the data, most visibly in the gap.
out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
for ax, kind in zip(axes, ["deep_ensemble", "evidential"]):
    model = fit_surrogate(x[:, None], y, SurrogateConfig(kind=kind, hidden_sizes=(32,), epochs=300), rng)
    mu, sd = model.predict_batch(grid[:, None])
    print(f"{kind}: validation R2={model.validation_r2:.3f}, std at x=0 {sd[100]:.3f} vs x=2 {sd[140]:.3f}")
    ax.plot(x, y, ".", ms=4)
    ax.plot(grid, mu)
    ax.fill_between(grid, mu - 2 * sd, mu + 2 * sd, alpha=0.3)
    ax.set_title(kind)
fig.savefig(out / "surrogate_uncertainty.png", dpi=100)
print("wrote", out / "surrogate_uncertainty.png")
