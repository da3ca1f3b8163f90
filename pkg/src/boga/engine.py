"""The surrogate-filtered genetic algorithm loop, its GA reference path and budget accounting."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Sequence

import numpy as np

from .acquisition import AcquisitionSpec, acquisition_values, select_for_evaluation
from .embed import PcaModel, SequenceEncoder, load_embedding_table, project
from .evaluator import EvaluatorLost
from .objectives import Objective, ObjectiveSpec, make_objective
from .seqcore import (
    EvaluationDataset,
    MutationParams,
    ScoredSequence,
    SelectionStrategy,
    parse_sequence,
    propose_pool,
    select_elites,
)
from .surrogate import SurrogateConfig, SurrogateModel, config_dict, fit_surrogate

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
MIN_SURROGATE_POINTS = 4

# purpose tags for the hierarchical rng split; values are part of the reproducibility contract
PURPOSES = {"topup": 0, "elite": 1, "propose": 2, "surrogate": 3, "acquisition": 4}


def stream(master_seed: int, generation: int, purpose: str) -> np.random.Generator:
    """Independent generator for one (generation, purpose) cell of a campaign."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(generation, PURPOSES[purpose]))
    return np.random.Generator(np.random.PCG64(ss))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SchedulePhase:
    acquisition: AcquisitionSpec = AcquisitionSpec()
    generations: int = 1
    m_select: int = 10
    k_propose: int = 10
    elite_k: int = 10
    elite_strategy: SelectionStrategy = SelectionStrategy()

    def __post_init__(self) -> None:
        if self.generations < 1:
            raise ConfigError("phase generations must be >= 1")
        if self.m_select < 1:
            raise ConfigError("m_select must be >= 1")
        if self.k_propose < self.m_select:
            raise ConfigError(f"k_propose ({self.k_propose}) must be >= m_select ({self.m_select})")
        if self.elite_k < 1:
            raise ConfigError("elite_k must be >= 1")


@dataclass(frozen=True)
class EmbeddingConfig:
    encoder: Literal["features", "table"] = "features"
    table_path: str | None = None
    dipeptides: bool = False
    pca_components: int | None = None

    def __post_init__(self) -> None:
        if self.encoder not in ("features", "table"):
            raise ConfigError(f"unknown encoder {self.encoder!r}")
        if self.encoder == "table" and not self.table_path:
            raise ConfigError("table encoder needs table_path")
        if self.pca_components is not None and self.pca_components < 1:
            raise ConfigError("pca_components must be >= 1")


@dataclass(frozen=True)
class CampaignConfig:
    objective: ObjectiveSpec = ObjectiveSpec()
    initial_sequences: tuple[str, ...] = ()
    n_init: int = 100
    mutation: MutationParams = MutationParams()
    embedding: EmbeddingConfig = EmbeddingConfig()
    surrogate: SurrogateConfig = SurrogateConfig()
    schedule: tuple[SchedulePhase, ...] = ()
    master_seed: int = 0
    output_dir: str | None = None
    elite_source: Literal["history", "population"] = "history"
    refit_interval: int = 1
    n_jobs: int = 1
    save_models: bool = False

    def __post_init__(self) -> None:
        seqs = tuple(parse_sequence(s) for s in self.initial_sequences)
        object.__setattr__(self, "initial_sequences", seqs)
        object.__setattr__(self, "schedule", tuple(self.schedule))
        if self.n_init < 2:
            raise ConfigError(f"n_init must be >= 2, got {self.n_init}")
        if not seqs:
            raise ConfigError("at least one initial sequence is required")
        m = self.mutation
        for s in seqs:
            if not m.min_length <= len(s) <= m.max_length:
                raise ConfigError(f"initial sequence {s} violates length bounds [{m.min_length}, {m.max_length}]")
        if self.elite_source not in ("history", "population"):
            raise ConfigError(f"unknown elite_source {self.elite_source!r}")
        if self.refit_interval < 1 or self.n_jobs < 1:
            raise ConfigError("refit_interval and n_jobs must be >= 1")

    @property
    def direction(self) -> str:
        return self.objective.direction

    def replace(self, **changes: Any) -> CampaignConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = {
            "objective": dataclasses.asdict(self.objective),
            "initial_sequences": list(self.initial_sequences),
            "n_init": self.n_init,
            "mutation": dataclasses.asdict(self.mutation),
            "embedding": dataclasses.asdict(self.embedding),
            "surrogate": config_dict(self.surrogate),
            "schedule": [
                {
                    "acquisition": dataclasses.asdict(p.acquisition),
                    "generations": p.generations,
                    "m_select": p.m_select,
                    "k_propose": p.k_propose,
                    "elite_k": p.elite_k,
                    "elite_strategy": dataclasses.asdict(p.elite_strategy),
                }
                for p in self.schedule
            ],
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "elite_source": self.elite_source,
            "refit_interval": self.refit_interval,
            "n_jobs": self.n_jobs,
            "save_models": self.save_models,
        }
        d["objective"]["command"] = list(self.objective.command)
        return d

    def digest(self) -> str:
        """Hash of everything that determines the trajectory (paths and parallelism excluded)."""
        d = self.to_dict()
        for key in ("output_dir", "n_jobs", "save_models"):
            d.pop(key)
        d["objective"].pop("n_jobs")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class BudgetCounters:
    objective_evals: int = 0
    failed_evals: int = 0
    dedup_shortfall: int = 0
    surrogate_fits: int = 0
    surrogate_predictions: int = 0
    embeddings_computed: int = 0
    wall_clock: dict[str, float] = field(
        default_factory=lambda: {k: 0.0 for k in ("objective", "train", "embed", "surrogate", "propose", "total")}
    )

    def counts(self) -> dict[str, int]:
        d = dataclasses.asdict(self)
        d.pop("wall_clock")
        return d

    def objective_fraction(self) -> float:
        total = self.wall_clock["total"]
        return self.wall_clock["objective"] / total if total > 0 else 0.0


@dataclass
class EvaluatedCandidate:
    sequence: str
    score: float
    acq_value: float | None
    surrogate_mean: float | None
    surrogate_std: float | None


@dataclass
class GenerationRecord:
    generation: int
    phase: int
    evaluated: list[EvaluatedCandidate]
    failures: list[tuple[str, str]]
    shortfall: int
    elites: list[str]
    surrogate_r2: float | None
    timing: dict[str, float]


@dataclass
class CampaignLog:
    config: CampaignConfig
    dataset: EvaluationDataset
    population: list[str]
    records: list[GenerationRecord]
    counters: BudgetCounters
    phase_boundaries: list[int]

    @property
    def best(self) -> ScoredSequence:
        return self.dataset.best(self.config.direction)

    def evaluated_sequences(self) -> list[str]:
        """Every evaluated sequence in evaluation order, initialization included."""
        return self.dataset.sequences


def _num(x: float | None) -> float | None:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


class _LogWriter:
    """Append-only writer for the deterministic evaluation log and the timing side log."""

    def __init__(self, out_dir: Path | None) -> None:
        self.dir = out_dir
        self.counter = 0
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)

    def _append(self, name: str, records: list[dict]) -> None:
        if self.dir is None or not records:
            return
        with open(self.dir / name, "a", encoding="utf-8") as fh:
            for r in records:
                fh.write(json.dumps(r, separators=(",", ":")) + "\n")

    def evaluations(self, records: list[dict]) -> None:
        self._append("evaluations.jsonl", records)

    def timing(self, record: dict) -> None:
        self._append("timings.jsonl", [record])

    def log_size(self) -> int:
        if self.dir is None:
            return 0
        p = self.dir / "evaluations.jsonl"
        return p.stat().st_size if p.exists() else 0


class CampaignState:
    """Mutable state of a running campaign; only the control loop writes to it."""

    def __init__(self, config: CampaignConfig, objective: Objective) -> None:
        self.config = config
        self.objective = objective
        self.dataset = EvaluationDataset()
        self.population: list[str] = []
        self.last_batch: list[str] = []
        self.embeddings: dict[str, np.ndarray] = {}
        self.encoder = _make_encoder(config.embedding)
        self.model: SurrogateModel | None = None
        self.last_fit: tuple[int, int] = (0, 0)  # generation, dataset size at that fit
        self.counters = BudgetCounters()
        self.generation = 0
        self.phase_index = 0
        self.phase_generation = 0
        self.records: list[GenerationRecord] = []
        self.phase_boundaries: list[int] = []
        out = Path(config.output_dir) if config.output_dir else None
        self.writer = _LogWriter(out)

    @property
    def direction(self) -> str:
        return self.config.direction

    def incumbent(self) -> float:
        return self.dataset.best(self.direction).score

    def to_log(self) -> CampaignLog:
        return CampaignLog(
            self.config, self.dataset, self.population, self.records, self.counters, self.phase_boundaries
        )


def _make_encoder(cfg: EmbeddingConfig) -> SequenceEncoder:
    table = load_embedding_table(cfg.table_path) if cfg.encoder == "table" else None
    return SequenceEncoder(table=table, dipeptides=cfg.dipeptides, n_components=cfg.pca_components)


def _timed(counters: BudgetCounters, key: str, t0: float) -> float:
    dt = time.perf_counter() - t0
    counters.wall_clock[key] += dt
    return dt


def _evaluate(
    state: CampaignState, seqs: list[str], generation: int
) -> tuple[list[tuple[int, float]], list[tuple[int, str]], int]:
    """Evaluate novel sequences; returns successes, failures (index, error) and the dedup shortfall."""
    todo: list[int] = []
    batch_seen: set[str] = set()
    shortfall = 0
    for i, s in enumerate(seqs):
        if s in state.dataset or s in batch_seen:
            shortfall += 1
            continue
        batch_seen.add(s)
        todo.append(i)
    if shortfall:
        logger.warning("generation %d: %d selected candidates were already evaluated; skipped", generation, shortfall)
    t0 = time.perf_counter()
    results = state.objective.evaluate_batch([seqs[i] for i in todo]) if todo else []
    _timed(state.counters, "objective", t0)
    ok: list[tuple[int, float]] = []
    failed: list[tuple[int, str]] = []
    for i, res in zip(todo, results):
        if isinstance(res, Exception):
            if isinstance(res, EvaluatorLost):
                raise res
            logger.warning("evaluation of %s failed: %s", seqs[i], res)
            failed.append((i, type(res).__name__))
        elif not math.isfinite(res):
            failed.append((i, "NonFiniteScore"))
        else:
            ok.append((i, float(res)))
    state.counters.objective_evals += len(ok)
    state.counters.failed_evals += len(failed)
    state.counters.dedup_shortfall += shortfall
    return ok, failed, shortfall


def _embed(state: CampaignState, seqs: Sequence[str]) -> np.ndarray:
    t0 = time.perf_counter()
    Z = state.encoder.transform(seqs)
    state.counters.embeddings_computed += len(seqs)
    _timed(state.counters, "embed", t0)
    return Z


def _refit(state: CampaignState, generation: int, n_data: int | None = None) -> SurrogateModel:
    entries = list(state.dataset)[: n_data if n_data is not None else len(state.dataset)]
    seqs = [e.sequence for e in entries]
    y = np.array([e.score for e in entries])
    Z = np.stack([state.embeddings[s] for s in seqs])
    t0 = time.perf_counter()
    if len(entries) < MIN_SURROGATE_POINTS:
        logger.warning("only %d evaluations; using a constant surrogate", len(entries))
        model = SurrogateModel.constant(float(y.mean()), Z.shape[1], len(entries))
    else:
        model = fit_surrogate(Z, y, state.config.surrogate, stream(state.config.master_seed, generation, "surrogate"))
    _timed(state.counters, "train", t0)
    state.counters.surrogate_fits += 1
    state.model = model
    state.last_fit = (generation, len(entries))
    if state.config.save_models and state.writer.dir is not None:
        (state.writer.dir / "surrogate_latest.json").write_text(json.dumps(model.to_dict()))
    return model


def _eval_record(t: int, state: CampaignState, c: EvaluatedCandidate) -> dict:
    state.writer.counter += 1
    return {
        "type": "evaluation",
        "generation": t,
        "sequence": c.sequence,
        "score": c.score,
        "acq_value": _num(c.acq_value),
        "surrogate_mean": _num(c.surrogate_mean),
        "surrogate_std": _num(c.surrogate_std),
        "timestamp": state.writer.counter,
    }


def _summary_record(state: CampaignState, rec: GenerationRecord) -> dict:
    scores = [c.score for c in rec.evaluated]
    best = state.dataset.best(state.direction) if len(state.dataset) else None
    return {
        "type": "generation",
        "generation": rec.generation,
        "phase": rec.phase,
        "n_evaluated": len(rec.evaluated),
        "n_failed": len(rec.failures),
        "shortfall": rec.shortfall,
        "batch_mean": _num(float(np.mean(scores))) if scores else None,
        "batch_best": _num(max(scores) if state.direction == "maximize" else min(scores)) if scores else None,
        "best_sequence": best.sequence if best else None,
        "best_score": best.score if best else None,
        "dataset_size": len(state.dataset),
        "surrogate_r2": _num(rec.surrogate_r2),
        "elites": rec.elites,
    }


def _emit(state: CampaignState, rec: GenerationRecord) -> None:
    lines = [_eval_record(rec.generation, state, c) for c in rec.evaluated]
    lines += [
        {"type": "failure", "generation": rec.generation, "sequence": s, "error": err} for s, err in rec.failures
    ]
    lines.append(_summary_record(state, rec))
    state.writer.evaluations(lines)
    state.writer.timing({"generation": rec.generation, **{k: round(v, 6) for k, v in rec.timing.items()}})
    state.records.append(rec)


def initialize_campaign(config: CampaignConfig, objective: Objective | None = None) -> CampaignState:
    """Evaluate the initial set, fit the frozen PCA and the first surrogate."""
    objective = objective or make_objective(config.objective, config.n_jobs)
    state = CampaignState(config, objective)
    t_start = time.perf_counter()
    seeds = list(dict.fromkeys(config.initial_sequences))[: config.n_init]
    if len(seeds) < config.n_init:
        pool = propose_pool(
            seeds, config.mutation, config.n_init - len(seeds), set(seeds), stream(config.master_seed, 0, "topup")
        )
        if pool.fallback_admitted:
            logger.warning("could not top up to %d distinct initial sequences", config.n_init)
        seeds += pool.sequences
    ok, failed, shortfall = _evaluate(state, seeds, 0)
    evaluated = []
    for i, y in ok:
        state.dataset.add(seeds[i], y, 0)
        state.population.append(seeds[i])
        evaluated.append(EvaluatedCandidate(seeds[i], y, None, None, None))
    state.last_batch = [seeds[i] for i, _ in ok]
    if not len(state.dataset):
        raise RuntimeError("initialization produced no successful evaluations")

    t0 = time.perf_counter()
    X = state.encoder.raw(state.dataset.sequences)
    state.encoder.fit_raw(X)
    for s, z in zip(state.dataset.sequences, project(state.encoder.pca, X)):
        state.embeddings[s] = z
    state.counters.embeddings_computed += len(state.dataset)
    _timed(state.counters, "embed", t0)

    model = _refit(state, 0)
    state.counters.wall_clock["total"] += time.perf_counter() - t_start
    rec = GenerationRecord(
        0, -1, evaluated, [(seeds[i], e) for i, e in failed], shortfall, [], _num(model.validation_r2), {}
    )
    _emit(state, rec)
    _checkpoint(state)
    return state


def _choose_elites(state: CampaignState, phase: SchedulePhase, t: int) -> list[str]:
    source: Any = state.dataset
    if state.config.elite_source == "population" and state.last_batch:
        source = [state.dataset.get(s) for s in state.last_batch]
    return select_elites(
        source, phase.elite_strategy, phase.elite_k, state.direction, stream(state.config.master_seed, t, "elite")
    )


def run_generation(state: CampaignState, phase: SchedulePhase) -> tuple[CampaignState, GenerationRecord]:
    """One pass of select -> propose -> embed -> predict -> acquire -> evaluate -> update -> refit.

    `state` is updated in place and returned with the generation's record.
    """
    cfg = state.config
    t = state.generation + 1
    seed = cfg.master_seed
    timing: dict[str, float] = {}
    t_start = time.perf_counter()
    c = state.counters
    wall0 = dict(c.wall_clock)

    elites = _choose_elites(state, phase, t)
    t0 = time.perf_counter()
    pool = propose_pool(elites, cfg.mutation, phase.k_propose, state.dataset, stream(seed, t, "propose"))
    _timed(c, "propose", t0)

    Z = _embed(state, pool.sequences)
    t0 = time.perf_counter()
    assert state.model is not None
    means, stds = state.model.predict_batch(Z)
    c.surrogate_predictions += len(pool)
    acq = dataclasses.replace(phase.acquisition, direction=state.direction)
    values = acquisition_values(acq, means, stds, state.incumbent())
    chosen = select_for_evaluation(
        pool.sequences, values, phase.m_select, acq.uniform_top, stream(seed, t, "acquisition")
    )
    _timed(c, "surrogate", t0)

    picked = [pool[i] for i in chosen]
    ok, failed, shortfall = _evaluate(state, picked, t)
    evaluated = []
    for j, y in ok:
        i = chosen[j]
        s = pool[i]
        state.dataset.add(s, y, t)
        state.population.append(s)
        state.embeddings[s] = Z[i]
        evaluated.append(EvaluatedCandidate(s, y, float(values[i]), float(means[i]), float(stds[i])))
    state.last_batch = [e.sequence for e in evaluated]

    r2 = None
    if t % cfg.refit_interval == 0:
        r2 = _num(_refit(state, t).validation_r2)
    state.generation = t
    c.wall_clock["total"] += time.perf_counter() - t_start
    timing = {k: c.wall_clock[k] - wall0[k] for k in c.wall_clock}
    rec = GenerationRecord(
        t, state.phase_index, evaluated, [(picked[j], e) for j, e in failed], shortfall, list(elites), r2, timing
    )
    _emit(state, rec)
    return state, rec


def _checkpoint(state: CampaignState) -> None:
    w = state.writer
    if w.dir is None:
        return
    ck = {
        "version": CHECKPOINT_VERSION,
        "config_digest": state.config.digest(),
        "generation": state.generation,
        "phase_index": state.phase_index,
        "phase_generation": state.phase_generation,
        "dataset": [[e.sequence, e.score, e.generation] for e in state.dataset],
        "population": state.population,
        "last_batch": state.last_batch,
        "last_fit": list(state.last_fit),
        "pca": state.encoder.pca.to_dict() if state.encoder.pca is not None else None,
        "counters": dataclasses.asdict(state.counters),
        "phase_boundaries": state.phase_boundaries,
        "log_bytes": w.log_size(),
        "log_counter": w.counter,
    }
    tmp = w.dir / "checkpoint.json.tmp"
    tmp.write_text(json.dumps(ck))
    os.replace(tmp, w.dir / "checkpoint.json")


def _resume(config: CampaignConfig, objective: Objective) -> CampaignState | None:
    if not config.output_dir:
        return None
    path = Path(config.output_dir) / "checkpoint.json"
    if not path.exists():
        return None
    ck = json.loads(path.read_text())
    if ck.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {ck.get('version')!r}")
    if ck["config_digest"] != config.digest():
        raise ValueError("checkpoint was written by a different configuration")
    state = CampaignState(config, objective)
    for seq, score, gen in ck["dataset"]:
        state.dataset.add(seq, score, gen)
    state.population = list(ck["population"])
    state.last_batch = list(ck["last_batch"])
    state.generation = ck["generation"]
    state.phase_index = ck["phase_index"]
    state.phase_generation = ck["phase_generation"]
    state.phase_boundaries = list(ck["phase_boundaries"])
    counters = ck["counters"]
    state.counters = BudgetCounters(**{k: v for k, v in counters.items() if k != "wall_clock"})
    state.counters.wall_clock.update(counters["wall_clock"])
    state.encoder.pca = PcaModel.from_dict(ck["pca"])
    X = state.encoder.raw(state.dataset.sequences)
    for s, z in zip(state.dataset.sequences, project(state.encoder.pca, X)):
        state.embeddings[s] = z
    fit_gen, fit_n = ck["last_fit"]
    fits = state.counters.surrogate_fits
    _refit(state, fit_gen, fit_n)
    state.counters.surrogate_fits = fits
    log = state.writer.dir / "evaluations.jsonl"  # type: ignore[operator]
    with open(log, "r+b") as fh:
        fh.truncate(ck["log_bytes"])
    timings = state.writer.dir / "timings.jsonl"  # type: ignore[operator]
    if timings.exists():
        kept = [ln for ln in timings.read_text().splitlines(keepends=True) if json.loads(ln)["generation"] <= state.generation]
        timings.write_text("".join(kept))
    state.writer.counter = ck["log_counter"]
    logger.info("resumed campaign at generation %d", state.generation)
    return state


def _prepare_output(config: CampaignConfig, resume: bool) -> None:
    if not config.output_dir:
        return
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not resume:
        for name in ("evaluations.jsonl", "timings.jsonl", "checkpoint.json", "counters.json"):
            (out / name).unlink(missing_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")


def run_campaign(config: CampaignConfig, objective: Objective | None = None, resume: bool = False) -> CampaignLog:
    """Run every schedule phase in order and return the full log.

    With an `output_dir`, the evaluation log is appended after every
    generation and a checkpoint written; ``resume=True`` continues from it.
    """
    _prepare_output(config, resume)
    own = objective is None
    objective = objective or make_objective(config.objective, config.n_jobs)
    try:
        state = _resume(config, objective) if resume else None
        if state is None:
            state = initialize_campaign(config, objective)
        while state.phase_index < len(config.schedule):
            phase = config.schedule[state.phase_index]
            if state.phase_generation == 0:
                state.phase_boundaries.append(state.generation)
                state.writer.evaluations(
                    [
                        {
                            "type": "phase",
                            "phase": state.phase_index,
                            "start_after_generation": state.generation,
                            "acquisition": phase.acquisition.kind,
                            "generations": phase.generations,
                            "m_select": phase.m_select,
                            "k_propose": phase.k_propose,
                        }
                    ]
                )
            run_generation(state, phase)
            state.phase_generation += 1
            if state.phase_generation >= phase.generations:
                state.phase_index += 1
                state.phase_generation = 0
            _checkpoint(state)
        state.writer.evaluations([{"type": "counters", **state.counters.counts()}])
        if state.writer.dir is not None:
            (state.writer.dir / "counters.json").write_text(
                json.dumps(dataclasses.asdict(state.counters), indent=2, sort_keys=True) + "\n"
            )
        return state.to_log()
    finally:
        if own:
            objective.close()


def budget_report(log: CampaignLog) -> BudgetCounters:
    return dataclasses.replace(log.counters, wall_clock=dict(log.counters.wall_clock))


def expected_objective_evals(config: CampaignConfig) -> int:
    """Objective calls for a failure- and shortfall-free run."""
    return config.n_init + sum(p.generations * p.m_select for p in config.schedule)


def run_reference_ga(config: CampaignConfig, objective: Objective | None = None) -> list[str]:
    """Plain GA with the same operators and rng streams, no surrogate or acquisition.

    Every phase evaluates its whole proposal pool of `m_select` children.
    Returns all evaluated sequences in evaluation order.
    """
    own = objective is None
    objective = objective or make_objective(config.objective, config.n_jobs)
    seed = config.master_seed
    direction = config.direction
    try:
        dataset = EvaluationDataset()
        seeds = list(dict.fromkeys(config.initial_sequences))[: config.n_init]
        if len(seeds) < config.n_init:
            pool = propose_pool(seeds, config.mutation, config.n_init - len(seeds), set(seeds), stream(seed, 0, "topup"))
            seeds += pool.sequences

        def evaluate(seqs: list[str], t: int) -> list[str]:
            novel = list(dict.fromkeys(s for s in seqs if s not in dataset))
            added = []
            for s, y in zip(novel, objective.evaluate_batch(novel)):
                if not isinstance(y, Exception) and math.isfinite(y):
                    dataset.add(s, y, t)
                    added.append(s)
            return added

        last = evaluate(seeds, 0)
        t = 0
        for phase in config.schedule:
            for _ in range(phase.generations):
                t += 1
                source: Any = dataset
                if config.elite_source == "population" and last:
                    source = [dataset.get(s) for s in last]
                elites = select_elites(source, phase.elite_strategy, phase.elite_k, direction, stream(seed, t, "elite"))
                pool = propose_pool(elites, config.mutation, phase.m_select, dataset, stream(seed, t, "propose"))
                last = evaluate(pool.sequences, t)
        return dataset.sequences
    finally:
        if own:
            objective.close()
