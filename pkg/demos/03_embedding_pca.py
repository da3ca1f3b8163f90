"""
Sequence embedding and PCA
==========================

Sequences become fixed-length physicochemical feature vectors, which a PCA
fitted once on the initial set compresses for the surrogate.
"""

# %%
import matplotlib

matplotlib.use("Agg")
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from boga.embed import SequenceEncoder, feature_names, fit_pca
from boga.seqcore import random_sequences

seqs = random_sequences(300, np.random.default_rng(0))
print(len(feature_names()), "features, e.g.", feature_names()[:5])

# %%
# The PCA agrees with an eigendecomposition of the covariance matrix.
enc = SequenceEncoder(n_components=10)
X = enc.raw(seqs)
pca = enc.fit_raw(X)
evals = np.sort(np.linalg.eigvalsh(np.cov(X, rowvar=False)))[::-1][:10]
print("max variance mismatch:", np.abs(pca.explained_variance - evals).max())

# %%
# A rank-deficient matrix still yields orthonormal components; the surplus
# ones carry zero variance and a warning.
rank2 = np.random.default_rng(1).normal(size=(30, 2)) @ np.random.default_rng(2).normal(size=(2, 6))
import warnings

with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    model = fit_pca(rank2, 4)
print("variances:", np.round(model.explained_variance, 6), "|", caught[0].message)

# %%
out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
Z = enc.transform(seqs)
fig, ax = plt.subplots()
ax.scatter(Z[:, 0], Z[:, 1], s=8)
ax.set_xlabel("PC1")
ax.set_ylabel("PC2")
fig.savefig(out / "embedding_pca.png", dpi=100)
print("wrote", out / "embedding_pca.png")
