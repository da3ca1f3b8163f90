"""Cheap sequence-level objectives and the objective wrappers used by the engine."""

from __future__ import annotations

import csv
import functools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Literal, Mapping, Sequence

import numpy as np

from .seqcore import ALPHABET, Direction, check_direction

WATER_MASS = 18.01528
SHEET_RESIDUES = frozenset("EMAL")
HELIX_ANGLE_DEG = 100.0


def _load_residue_table() -> tuple[dict[str, float], dict[str, float]]:
    text = resources.files("boga").joinpath("data/residues.csv").read_text(encoding="utf-8")
    hydro: dict[str, float] = {}
    mass: dict[str, float] = {}
    for row in csv.DictReader(text.splitlines()):
        hydro[row["residue"]] = float(row["eisenberg"])
        mass[row["residue"]] = float(row["avg_residue_mass"])
    return hydro, mass


EISENBERG, RESIDUE_MASS = _load_residue_table()


class HydrophobicityScale(Mapping[str, float]):
    """Per-residue hydrophobicity values; must cover the full alphabet."""

    def __init__(self, values: Mapping[str, float], name: str = "custom") -> None:
        missing = set(ALPHABET) - set(values)
        if missing:
            raise ValueError(f"scale is missing residues {sorted(missing)}")
        vals = {aa: float(values[aa]) for aa in ALPHABET}
        if not all(math.isfinite(v) for v in vals.values()):
            raise ValueError("scale values must be finite")
        self._values = vals
        self.name = name
        self.vector = np.array([vals[aa] for aa in ALPHABET])

    def __getitem__(self, aa: str) -> float:
        return self._values[aa]

    def __iter__(self):
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __hash__(self) -> int:
        return hash(tuple(self.vector.tolist()))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, HydrophobicityScale) and bool(np.array_equal(self.vector, other.vector))


EISENBERG_SCALE = HydrophobicityScale(EISENBERG, name="eisenberg")


def beta_sheet_fraction(seq: str) -> float:
    """Fraction of residues drawn from {E, M, A, L}."""
    return sum(ch in SHEET_RESIDUES for ch in seq) / len(seq)


def _moment(values: np.ndarray, angle_deg: float, offset: int = 0) -> float:
    n = np.arange(offset, offset + len(values))
    z = np.sum(values * np.exp(1j * np.deg2rad(angle_deg) * n))
    return float(abs(z)) / len(values)


@functools.lru_cache(maxsize=512)
def ideal_moment(length: int, angle_deg: float = HELIX_ANGLE_DEG, scale: HydrophobicityScale = EISENBERG_SCALE) -> float:
    """Largest moment of a two-residue amphipathic arrangement of `length` residues.

    For each axis direction on a 1 degree grid, the most hydrophobic residue of the
    scale goes wherever the helical-wheel position projects positively onto the axis
    and the most hydrophilic residue everywhere else.
    """
    hi, lo = float(scale.vector.max()), float(scale.vector.min())
    n = np.arange(length)
    pos = np.deg2rad(angle_deg * n)[None, :] - np.deg2rad(np.arange(360.0))[:, None]
    values = np.where(np.cos(pos) > 0, hi, lo)
    wheel = np.exp(1j * np.deg2rad(angle_deg) * n)
    return float(np.max(np.abs(values @ wheel))) / length


def hydrophobic_moment(
    seq: str,
    angle_deg: float = HELIX_ANGLE_DEG,
    scale: HydrophobicityScale = EISENBERG_SCALE,
    offset: int = 0,
) -> tuple[float, float]:
    """Return ``(muH, uHrel)``: the mean helical hydrophobic moment and its
    value relative to the ideal two-residue arrangement of the same length,
    clamped to [0, 1].

    `offset` shifts the residue index origin; muH does not depend on it.
    """
    values = np.array([scale[ch] for ch in seq])
    mu = _moment(values, angle_deg, offset)
    ideal = ideal_moment(len(seq), float(angle_deg), scale)
    rel = 0.0 if ideal == 0.0 else min(max(mu / ideal, 0.0), 1.0)
    return mu, rel


def relative_hydrophobic_moment(seq: str) -> float:
    return hydrophobic_moment(seq)[1]


def molecular_weight(seq: str) -> float:
    """Average mass in daltons: residue masses plus one water."""
    return sum(RESIDUE_MASS[ch] for ch in seq) + WATER_MASS


LANDSCAPES: dict[str, Callable[[str], float]] = {
    "sheet": beta_sheet_fraction,
    "moment": relative_hydrophobic_moment,
    "mw": molecular_weight,
}


def mock_expensive(seq: str, landscape: str = "sheet", latency: float = 0.0) -> float:
    """Builtin landscape value after sleeping `latency` seconds."""
    if latency > 0:
        time.sleep(latency)
    return LANDSCAPES[landscape](seq)


@dataclass(frozen=True)
class ObjectiveSpec:
    name: str = "sheet"
    direction: Direction = "maximize"
    kind: Literal["builtin", "external", "mock"] = "builtin"
    latency: float = 0.0
    command: tuple[str, ...] = ()
    timeout: float = 60.0
    n_jobs: int = 1

    def __post_init__(self) -> None:
        check_direction(self.direction)
        if self.kind not in ("builtin", "external", "mock"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.kind in ("builtin", "mock") and self.name not in LANDSCAPES:
            raise ValueError(f"unknown builtin objective {self.name!r}; choose from {sorted(LANDSCAPES)}")
        if self.kind == "external" and not self.command:
            raise ValueError("external objective needs a command")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be >= 1")


class Objective:
    """Batch evaluation interface shared by builtin, mock and external objectives.

    `evaluate_batch` returns one entry per sequence in input order: a float on
    success or the exception describing that candidate's failure.
    """

    spec: ObjectiveSpec

    def evaluate_batch(self, seqs: Sequence[str]) -> list[float | Exception]:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class LocalObjective(Objective):
    def __init__(self, spec: ObjectiveSpec, n_jobs: int | None = None) -> None:
        self.spec = spec
        self.n_jobs = n_jobs or spec.n_jobs
        if spec.kind == "mock":
            self._fn = functools.partial(mock_expensive, landscape=spec.name, latency=spec.latency)
        else:
            self._fn = LANDSCAPES[spec.name]

    def _safe(self, seq: str) -> float | Exception:
        try:
            y = float(self._fn(seq))
        except Exception as exc:  # a failing candidate must not abort the batch
            return exc
        if not math.isfinite(y):
            from .evaluator import NonFiniteScore

            return NonFiniteScore(seq)
        return y

    def evaluate_batch(self, seqs: Sequence[str]) -> list[float | Exception]:
        if self.n_jobs == 1 or len(seqs) <= 1:
            return [self._safe(s) for s in seqs]
        with ThreadPoolExecutor(max_workers=self.n_jobs) as ex:
            return list(ex.map(self._safe, seqs))


def make_objective(spec: ObjectiveSpec, n_jobs: int | None = None) -> Objective:
    if spec.kind == "external":
        from .evaluator import ExternalEvaluator

        return ExternalEvaluator(list(spec.command), timeout=spec.timeout, n_jobs=n_jobs or spec.n_jobs, spec=spec)
    return LocalObjective(spec, n_jobs)
