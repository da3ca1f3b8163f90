"""Sequences, mutation operators, elite selection and the evaluated-dataset store."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Literal

import numpy as np

logger = logging.getLogger(__name__)

ALPHABET = "ACDEFGHIKLMNPQRSTVWY"
RESIDUE_INDEX = {aa: i for i, aa in enumerate(ALPHABET)}

Direction = Literal["maximize", "minimize"]


class SequenceError(ValueError):
    pass


class EmptySequence(SequenceError):
    def __init__(self) -> None:
        super().__init__("sequence is empty")


class InvalidResidue(SequenceError):
    def __init__(self, position: int, char: str) -> None:
        super().__init__(f"invalid residue {char!r} at position {position}")
        self.position = position
        self.char = char


class DuplicateEntry(ValueError):
    pass


class InvalidStrategyParams(ValueError):
    pass


def check_direction(direction: str) -> str:
    if direction not in ("maximize", "minimize"):
        raise ValueError(f"direction must be 'maximize' or 'minimize', got {direction!r}")
    return direction


def parse_sequence(text: str) -> str:
    """Validate `text` as an amino-acid sequence and return it uppercased.

    >>> parse_sequence("emal")
    'EMAL'
    """
    if len(text) == 0:
        raise EmptySequence()
    seq = text.upper()
    for pos, ch in enumerate(seq):
        if ch not in RESIDUE_INDEX:
            raise InvalidResidue(pos, text[pos])
    return seq


@dataclass(frozen=True)
class ScoredSequence:
    sequence: str
    score: float
    generation: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(f"non-finite score {self.score!r} for {self.sequence}")
        if self.generation < 0:
            raise ValueError("generation must be >= 0")


class EvaluationDataset:
    """Append-only store of evaluated sequences, in evaluation order.

    Writes are not synchronized; the engine's control loop is the only writer.
    """

    def __init__(self, entries: Iterable[ScoredSequence] = ()) -> None:
        self._entries: list[ScoredSequence] = []
        self._index: dict[str, ScoredSequence] = {}
        for e in entries:
            self._append(e)

    def _append(self, entry: ScoredSequence) -> None:
        if entry.sequence in self._index:
            raise DuplicateEntry(f"{entry.sequence} already evaluated")
        self._entries.append(entry)
        self._index[entry.sequence] = entry

    def add(self, sequence: str, score: float, generation: int = 0) -> ScoredSequence:
        entry = ScoredSequence(sequence, float(score), generation)
        self._append(entry)
        return entry

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[ScoredSequence]:
        return iter(self._entries)

    def __contains__(self, sequence: object) -> bool:
        return sequence in self._index

    def __getitem__(self, i: int) -> ScoredSequence:
        return self._entries[i]

    def get(self, sequence: str) -> ScoredSequence | None:
        return self._index.get(sequence)

    @property
    def sequences(self) -> list[str]:
        return [e.sequence for e in self._entries]

    @property
    def scores(self) -> np.ndarray:
        return np.array([e.score for e in self._entries], dtype=float)

    def best(self, direction: Direction = "maximize") -> ScoredSequence:
        if not self._entries:
            raise ValueError("dataset is empty")
        return rank_entries(self._entries, direction)[0]


@dataclass(frozen=True)
class MutationParams:
    """Per-residue substitution rate plus per-sequence insertion/deletion rates."""

    substitution_rate: float = 0.05
    insertion_rate: float = 0.05
    deletion_rate: float = 0.05
    min_length: int = 8
    max_length: int = 25

    def __post_init__(self) -> None:
        for name in ("substitution_rate", "insertion_rate", "deletion_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not 1 <= self.min_length <= self.max_length:
            raise ValueError(
                f"need 1 <= min_length <= max_length, got {self.min_length}, {self.max_length}"
            )

    @classmethod
    def from_rate(cls, mutation_rate: float, min_length: int = 8, max_length: int = 25) -> MutationParams:
        """Single-rate form: the rate is used for substitution, insertion and deletion."""
        return cls(mutation_rate, mutation_rate, mutation_rate, min_length, max_length)


def mutate(parent: str, params: MutationParams, rng: np.random.Generator) -> str:
    """Apply substitutions, then at most one insertion, then at most one deletion."""
    residues = list(parent)
    n = len(residues)
    if params.substitution_rate > 0.0:
        hits = np.flatnonzero(rng.random(n) < params.substitution_rate)
        if hits.size:
            draws = rng.integers(0, 19, size=hits.size)
            for pos, r in zip(hits.tolist(), draws.tolist()):
                cur = RESIDUE_INDEX[residues[pos]]
                residues[pos] = ALPHABET[r if r < cur else r + 1]
    if params.insertion_rate > 0.0 and rng.random() < params.insertion_rate:
        if len(residues) < params.max_length:
            pos = int(rng.integers(0, len(residues) + 1))
            residues.insert(pos, ALPHABET[int(rng.integers(0, 20))])
    if params.deletion_rate > 0.0 and rng.random() < params.deletion_rate:
        if len(residues) > params.min_length:
            del residues[int(rng.integers(0, len(residues)))]
    return "".join(residues)


@dataclass
class ProposalPool:
    sequences: list[str]
    fallback_admitted: int = 0
    attempts: int = 0

    def __len__(self) -> int:
        return len(self.sequences)

    def __iter__(self) -> Iterator[str]:
        return iter(self.sequences)

    def __getitem__(self, i: int) -> str:
        return self.sequences[i]


RETRY_FACTOR = 20


def propose_pool(
    elites: list[str],
    params: MutationParams,
    k_propose: int,
    seen: set[str] | EvaluationDataset,
    rng: np.random.Generator,
) -> ProposalPool:
    """Mutate uniformly drawn elites until `k_propose` novel, distinct candidates exist.

    After ``20 * k_propose`` attempts the novelty check is dropped and remaining
    slots take whatever the mutation operator returns.
    """
    if not elites:
        raise ValueError("elites must be non-empty")
    if k_propose < 1:
        raise ValueError("k_propose must be >= 1")
    cap = RETRY_FACTOR * k_propose
    pool: list[str] = []
    in_pool: set[str] = set()
    attempts = 0
    admitted = 0
    n_elites = len(elites)
    while len(pool) < k_propose:
        parent = elites[int(rng.integers(0, n_elites))] if n_elites > 1 else elites[0]
        child = mutate(parent, params, rng)
        attempts += 1
        if attempts > cap:
            admitted += 1
        elif child in in_pool or child in seen:
            continue
        pool.append(child)
        in_pool.add(child)
    if admitted:
        logger.warning(
            "proposal retry cap (%d attempts) reached; admitted %d non-novel candidates",
            cap,
            admitted,
        )
    return ProposalPool(pool, admitted, attempts)


@dataclass(frozen=True)
class SelectionStrategy:
    kind: Literal["top_k", "top_fraction_uniform", "exponential_rank", "threshold"] = "top_k"
    fraction: float = 0.25
    temperature: float = 10.0
    threshold: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("top_k", "top_fraction_uniform", "exponential_rank", "threshold"):
            raise InvalidStrategyParams(f"unknown selection kind {self.kind!r}")
        if self.kind == "top_fraction_uniform" and not 0.0 < self.fraction <= 1.0:
            raise InvalidStrategyParams(f"fraction must lie in (0, 1], got {self.fraction}")
        if self.kind == "exponential_rank" and not self.temperature > 0.0:
            raise InvalidStrategyParams(f"temperature must be > 0, got {self.temperature}")
        if self.kind == "threshold" and (self.threshold is None or not math.isfinite(self.threshold)):
            raise InvalidStrategyParams("threshold strategy needs a finite threshold value")


def rank_entries(entries: Iterable[ScoredSequence], direction: Direction) -> list[ScoredSequence]:
    """Best first; ties go to the lexicographically smaller sequence, then the earlier generation."""
    sign = -1.0 if check_direction(direction) == "maximize" else 1.0
    return sorted(entries, key=lambda e: (sign * e.score, e.sequence, e.generation))


def select_elites(
    dataset: EvaluationDataset | Iterable[ScoredSequence],
    strategy: SelectionStrategy,
    k: int,
    direction: Direction,
    rng: np.random.Generator | None = None,
) -> list[str]:
    """Choose mutation parents from evaluated entries.

    ``top_k`` and ``threshold`` are deterministic; the sampling strategies draw
    ``k`` parents with replacement and need `rng`.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = rank_entries(dataset, direction)
    if not ranked:
        raise ValueError("cannot select elites from an empty dataset")
    if len(ranked) <= k:
        return [e.sequence for e in ranked]

    if strategy.kind == "top_k":
        return [e.sequence for e in ranked[:k]]

    if strategy.kind == "threshold":
        if direction == "maximize":
            passing = [e for e in ranked if e.score > strategy.threshold]
        else:
            passing = [e for e in ranked if e.score < strategy.threshold]
        if not passing:
            logger.info("no entry beats threshold %s; falling back to the best entry", strategy.threshold)
            passing = ranked[:1]
        return [e.sequence for e in passing[:k]]

    if rng is None:
        raise ValueError(f"{strategy.kind} selection needs an rng")
    if strategy.kind == "top_fraction_uniform":
        m = max(1, math.ceil(strategy.fraction * len(ranked)))
        picks = rng.integers(0, m, size=k)
    else:
        ranks = np.arange(len(ranked), dtype=float)
        w = np.exp(-(ranks - ranks[0]) / strategy.temperature)
        picks = rng.choice(len(ranked), size=k, replace=True, p=w / w.sum())
    return [ranked[i].sequence for i in picks.tolist()]


def random_sequences(
    n: int,
    rng: np.random.Generator,
    min_length: int = 8,
    max_length: int = 25,
) -> list[str]:
    """`n` distinct uniform-random sequences with uniform lengths in the given range."""
    out: list[str] = []
    seen: set[str] = set()
    while len(out) < n:
        length = int(rng.integers(min_length, max_length + 1))
        seq = "".join(ALPHABET[i] for i in rng.integers(0, 20, size=length).tolist())
        if seq not in seen:
            seen.add(seq)
            out.append(seq)
    return out
