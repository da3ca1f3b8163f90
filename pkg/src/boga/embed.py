"""Sequence featurization, PCA reduction and precomputed embedding tables."""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .objectives import EISENBERG_SCALE, HELIX_ANGLE_DEG
from .seqcore import ALPHABET, RESIDUE_INDEX, SequenceError, parse_sequence

logger = logging.getLogger(__name__)

HYDRO_WINDOW = 5


class DimensionMismatch(ValueError):
    pass


class RankDeficient(UserWarning):
    pass


class EmbeddingTableError(ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class MalformedRow(EmbeddingTableError):
    pass


class DuplicateSequence(EmbeddingTableError):
    pass


class TableDimensionMismatch(EmbeddingTableError, DimensionMismatch):
    pass


class EmbeddingMissing(KeyError):
    pass


def feature_blocks(dipeptides: bool = False) -> list[tuple[str, int]]:
    blocks = [("composition", 20)]
    if dipeptides:
        blocks.append(("dipeptide", 400))
    blocks += [("length", 1), ("hydrophobicity_stats", 3)]
    return blocks


def feature_names(dipeptides: bool = False) -> list[str]:
    names = [f"comp_{aa}" for aa in ALPHABET]
    if dipeptides:
        names += [f"di_{a}{b}" for a in ALPHABET for b in ALPHABET]
    return names + ["length", "hydro_mean", "hydro_max_window5", "hydro_moment"]


def featurize(seq: str, dipeptides: bool = False) -> np.ndarray:
    """Fixed-length physicochemical vector for `seq`.

    Blocks: residue composition (20), optional dipeptide frequencies (400),
    length (1), then Eisenberg hydrophobicity mean, best 5-residue window mean
    and helical hydrophobic moment.
    """
    idx = np.fromiter((RESIDUE_INDEX[c] for c in seq), dtype=np.intp, count=len(seq))
    n = len(seq)
    comp = np.bincount(idx, minlength=20) / n
    parts = [comp]
    if dipeptides:
        di = np.zeros(400)
        if n > 1:
            np.add.at(di, idx[:-1] * 20 + idx[1:], 1.0)
            di /= n - 1
        parts.append(di)
    h = EISENBERG_SCALE.vector[idx]
    w = min(HYDRO_WINDOW, n)
    window = np.convolve(h, np.ones(w) / w, mode="valid")
    wheel = np.exp(1j * np.deg2rad(HELIX_ANGLE_DEG) * np.arange(n))
    moment = abs(np.dot(h, wheel)) / n
    parts.append(np.array([float(n), h.mean(), window.max(), moment]))
    return np.concatenate(parts)


def featurize_many(seqs: Sequence[str], dipeptides: bool = False) -> np.ndarray:
    return np.stack([featurize(s, dipeptides) for s in seqs])


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def input_dim(self) -> int:
        return self.components.shape[1]

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> PcaModel:
        return cls(
            np.asarray(d["mean"], dtype=float),
            np.asarray(d["components"], dtype=float).reshape(len(d["components"]), -1),
            np.asarray(d["explained_variance"], dtype=float),
        )


def fit_pca(matrix: np.ndarray, n_components: int) -> PcaModel:
    """Principal axes of `matrix` (rows are samples) via a thin SVD.

    Each component is sign-fixed so its largest-magnitude entry is positive.
    Components beyond the numerical rank keep an orthonormal direction but
    report zero variance.
    """
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need a 2-D matrix with at least two rows")
    n, d = X.shape
    if not 1 <= n_components <= min(n - 1, d):
        raise ValueError(f"n_components must lie in [1, {min(n - 1, d)}], got {n_components}")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    comps = vt[:n_components].copy()
    var = s[:n_components] ** 2 / (n - 1)
    tol = s.max() * max(n, d) * np.finfo(float).eps if s.size else 0.0
    rank = int(np.sum(s > tol))
    if n_components > rank:
        warnings.warn(
            f"requested {n_components} components but data rank is {rank}; "
            "excess components carry zero variance",
            RankDeficient,
            stacklevel=2,
        )
        var[rank:] = 0.0
    pivot = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(n_components), pivot])
    signs[signs == 0] = 1.0
    comps *= signs[:, None]
    return PcaModel(mean, comps, var)


def project(model: PcaModel, raw: np.ndarray) -> np.ndarray:
    """Centered projection onto the principal axes; accepts one row or many."""
    raw = np.asarray(raw, dtype=float)
    if raw.shape[-1] != model.input_dim:
        raise DimensionMismatch(f"expected {model.input_dim} features, got {raw.shape[-1]}")
    return (raw - model.mean) @ model.components.T


def load_embedding_table(path: str | Path, expected_dim: int | None = None) -> dict[str, np.ndarray]:
    """Read ``sequence,<feature>...`` rows into a sequence -> vector map."""
    table: dict[str, np.ndarray] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "sequence" or len(header) < 2:
            raise MalformedRow(1, "header must start with 'sequence' followed by feature columns")
        dim = len(header) - 1
        if expected_dim is not None and dim != expected_dim:
            raise TableDimensionMismatch(1, f"table has {dim} features, expected {expected_dim}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != dim + 1:
                raise MalformedRow(line, f"expected {dim + 1} fields, got {len(row)}")
            try:
                seq = parse_sequence(row[0].strip())
            except SequenceError as exc:
                raise MalformedRow(line, str(exc)) from None
            try:
                values = np.array([float(v.replace("−", "-")) for v in row[1:]])
            except ValueError:
                raise MalformedRow(line, "non-numeric feature value") from None
            if not np.all(np.isfinite(values)):
                raise MalformedRow(line, "non-finite feature value")
            if seq in table:
                raise DuplicateSequence(line, f"{seq} appears more than once")
            table[seq] = values
    return table


class SequenceEncoder:
    """Maps sequences to surrogate inputs: raw features, then a frozen PCA.

    With a precomputed `table`, every sequence must be present; a miss raises
    `EmbeddingMissing` rather than falling back to the featurizer.
    """

    def __init__(
        self,
        table: Mapping[str, np.ndarray] | None = None,
        dipeptides: bool = False,
        n_components: int | None = None,
    ) -> None:
        self.table = table
        self.dipeptides = dipeptides
        self.n_components = n_components
        self.pca: PcaModel | None = None
        self.n_embedded = 0

    def raw(self, seqs: Sequence[str]) -> np.ndarray:
        self.n_embedded += len(seqs)
        if self.table is None:
            return featurize_many(seqs, self.dipeptides)
        rows = []
        for s in seqs:
            try:
                rows.append(self.table[s])
            except KeyError:
                raise EmbeddingMissing(f"no precomputed embedding for {s}") from None
        return np.stack(rows)

    def fit(self, seqs: Sequence[str]) -> PcaModel:
        return self.fit_raw(self.raw(seqs))

    def fit_raw(self, X: np.ndarray) -> PcaModel:
        """Fit the PCA on raw feature rows; a single row yields an identity map."""
        if X.shape[0] < 2:
            self.pca = PcaModel(X.mean(axis=0), np.eye(X.shape[1]), np.zeros(X.shape[1]))
            return self.pca
        limit = min(X.shape[0] - 1, X.shape[1])
        k = limit if self.n_components is None else min(self.n_components, limit)
        if self.n_components is not None and k < self.n_components:
            logger.warning("PCA components reduced from %d to %d by data size", self.n_components, k)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficient)
            self.pca = fit_pca(X, k)
        return self.pca

    def transform(self, seqs: Sequence[str]) -> np.ndarray:
        if self.pca is None:
            raise RuntimeError("encoder has not been fitted")
        return project(self.pca, self.raw(seqs))

    @property
    def dim(self) -> int:
        if self.pca is None:
            raise RuntimeError("encoder has not been fitted")
        return self.pca.n_components
