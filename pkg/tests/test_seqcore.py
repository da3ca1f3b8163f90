import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boga.seqcore import (
    ALPHABET,
    DuplicateEntry,
    EmptySequence,
    EvaluationDataset,
    InvalidResidue,
    InvalidStrategyParams,
    MutationParams,
    RETRY_FACTOR,
    ScoredSequence,
    SelectionStrategy,
    mutate,
    parse_sequence,
    propose_pool,
    random_sequences,
    select_elites,
)


# ---- alphabet and parsing -------------------------------------------------------------


def test_alphabet_is_twenty_distinct_uppercase_letters():
    assert len(ALPHABET) == 20 and len(set(ALPHABET)) == 20
    assert ALPHABET == "".join(sorted(ALPHABET)) and ALPHABET.isupper()


def test_parse_valid_and_lowercase():
    assert parse_sequence("EMAL") == "EMAL"
    assert parse_sequence("emal") == "EMAL"


def test_parse_rejects_digit_with_position():
    with pytest.raises(InvalidResidue) as info:
        parse_sequence("EM1L")
    assert (info.value.position, info.value.char) == (2, "1")


def test_parse_rejects_empty():
    with pytest.raises(EmptySequence):
        parse_sequence("")


@pytest.mark.parametrize("bad", ["B", "X", "Z", "O", "U", " ", "-", "*"])
def test_parse_rejects_non_canonical(bad):
    with pytest.raises(InvalidResidue):
        parse_sequence("AC" + bad)


# ---- dataset ----------------------------------------------------------------------------


@pytest.mark.parametrize("score", [math.nan, math.inf, -math.inf])
def test_scored_sequence_rejects_non_finite(score):
    with pytest.raises(ValueError):
        ScoredSequence("AAAA", score)


def test_dataset_rejects_duplicate_and_is_unchanged():
    d = EvaluationDataset()
    d.add("AAAA", 1.0)
    d.add("CCCC", 2.0, generation=1)
    with pytest.raises(DuplicateEntry):
        d.add("AAAA", 5.0)
    assert d.sequences == ["AAAA", "CCCC"]
    assert d.get("AAAA").score == 1.0 and len(d) == 2


def test_dataset_keeps_insertion_order_and_best():
    d = EvaluationDataset()
    for s, y in [("C", 1.0), ("A", 3.0), ("B", 3.0)]:
        d.add(s, y)
    assert d.sequences == ["C", "A", "B"]
    assert d.best("maximize").sequence == "A"
    assert d.best("minimize").sequence == "C"
    np.testing.assert_array_equal(d.scores, [1.0, 3.0, 3.0])


# ---- mutation ----------------------------------------------------------------------------


def test_zero_rate_identity():
    params = MutationParams(0.0, 0.0, 0.0, 1, 25)
    rng = np.random.default_rng(0)
    assert all(mutate("AAAA", params, rng) == "AAAA" for _ in range(100))


def test_insertion_skipped_at_max_length():
    params = MutationParams(0.0, 1.0, 0.0, 4, 4)
    rng = np.random.default_rng(0)
    assert all(len(mutate("AAAA", params, rng)) == 4 for _ in range(200))


def test_deletion_skipped_at_min_length():
    params = MutationParams(0.0, 0.0, 1.0, 4, 8)
    rng = np.random.default_rng(0)
    assert all(mutate("ACDE", params, rng) == "ACDE" for _ in range(200))


def test_certain_insertion_and_deletion_change_length_by_one():
    rng = np.random.default_rng(1)
    ins = MutationParams(0.0, 1.0, 0.0, 1, 10)
    dele = MutationParams(0.0, 0.0, 1.0, 1, 10)
    for _ in range(200):
        child = mutate("ACDEF", ins, rng)
        assert len(child) == 6
        # removing one character of the child recovers the parent
        assert any(child[:i] + child[i + 1 :] == "ACDEF" for i in range(6))
        child = mutate("ACDEF", dele, rng)
        assert len(child) == 4
        assert any("ACDEF"[:i] + "ACDEF"[i + 1 :] == child for i in range(5))


def test_substitution_never_keeps_residue_and_is_uniform_over_others():
    # oracle: with rate 1 each position takes one of the 19 other residues uniformly
    params = MutationParams(1.0, 0.0, 0.0, 1, 25)
    rng = np.random.default_rng(2)
    counts = {aa: 0 for aa in ALPHABET}
    n = 38000
    for _ in range(n // 2):
        child = mutate("AA", params, rng)
        assert "A" not in child
        for c in child:
            counts[c] += 1
    expected = n / 19
    sigma = math.sqrt(n * (1 / 19) * (18 / 19))
    for aa in ALPHABET[1:]:
        assert abs(counts[aa] - expected) < 4 * sigma


@given(
    parent=st.text(alphabet=ALPHABET, min_size=8, max_size=25),
    sub=st.floats(0, 1),
    ins=st.floats(0, 1),
    dele=st.floats(0, 1),
    seed=st.integers(0, 2**32 - 1),
)
def test_mutate_respects_bounds_and_alphabet(parent, sub, ins, dele, seed):
    params = MutationParams(sub, ins, dele, 8, 25)
    child = mutate(parent, params, np.random.default_rng(seed))
    assert 8 <= len(child) <= 25
    assert set(child) <= set(ALPHABET)
    assert abs(len(child) - len(parent)) <= 1


def test_mutation_params_validation():
    with pytest.raises(ValueError):
        MutationParams(1.5)
    with pytest.raises(ValueError):
        MutationParams(min_length=10, max_length=5)
    with pytest.raises(ValueError):
        MutationParams(min_length=0)
    p = MutationParams.from_rate(0.05)
    assert p.substitution_rate == p.insertion_rate == p.deletion_rate == 0.05


# ---- proposal pool ---------------------------------------------------------------------


def test_zero_rate_pool_fills_with_copies_after_cap(caplog):
    params = MutationParams(0.0, 0.0, 0.0, 1, 25)
    pool = propose_pool(["AAAA"], params, 3, set(), np.random.default_rng(0))
    assert pool.sequences == ["AAAA"] * 3
    assert pool.fallback_admitted == 2
    assert pool.attempts == RETRY_FACTOR * 3 + 2
    assert "retry cap" in caplog.text


def test_exhausted_neighbourhood_uses_fallback():
    # a length-1 elite under certain substitution has exactly 19 children; mark all seen
    params = MutationParams(1.0, 0.0, 0.0, 1, 1)
    neighbourhood = {aa for aa in ALPHABET if aa != "W"}
    assert len(neighbourhood) == 19
    pool = propose_pool(["W"], params, 5, neighbourhood | {"W"}, np.random.default_rng(0))
    assert len(pool) == 5
    assert pool.fallback_admitted == 5
    assert set(pool.sequences) <= neighbourhood


def test_pool_of_500_from_ten_elites_is_novel_and_distinct():
    rng = np.random.default_rng(3)
    elites = random_sequences(10, rng)
    seen = set(elites)
    pool = propose_pool(elites, MutationParams.from_rate(0.05), 500, seen, rng)
    assert len(pool) == 500 and pool.fallback_admitted == 0
    assert len(set(pool.sequences)) == 500
    assert not set(pool.sequences) & seen
    assert all(8 <= len(s) <= 25 for s in pool)


@given(k=st.integers(1, 40), seed=st.integers(0, 10_000), rate=st.floats(0, 0.5))
def test_pool_size_is_exact(k, seed, rate):
    rng = np.random.default_rng(seed)
    pool = propose_pool(random_sequences(3, rng), MutationParams.from_rate(rate), k, set(), rng)
    assert len(pool) == k


def test_pool_input_validation():
    with pytest.raises(ValueError):
        propose_pool([], MutationParams(), 3, set(), np.random.default_rng(0))
    with pytest.raises(ValueError):
        propose_pool(["AAAAAAAA"], MutationParams(), 0, set(), np.random.default_rng(0))


# ---- elite selection -------------------------------------------------------------------


def _dataset(pairs):
    d = EvaluationDataset()
    for s, y in pairs:
        d.add(s, y)
    return d


def test_top_k_ranking():
    d = _dataset([("A", 1.0), ("B", 2.0), ("C", 3.0)])
    assert select_elites(d, SelectionStrategy(), 2, "maximize") == ["C", "B"]
    assert select_elites(d, SelectionStrategy(), 2, "minimize") == ["A", "B"]


def test_top_k_lexicographic_tie_break():
    d = _dataset([("B", 1.0), ("A", 1.0)])
    assert select_elites(d, SelectionStrategy(), 1, "maximize") == ["A"]


def test_chronological_tie_break_after_lexicographic():
    entries = [ScoredSequence("A", 1.0, 3), ScoredSequence("A", 1.0, 1)]
    from boga.seqcore import rank_entries

    assert [e.generation for e in rank_entries(entries, "maximize")] == [1, 3]


def test_fewer_entries_than_k_returns_all():
    d = _dataset([("A", 1.0), ("B", 2.0)])
    for kind in ("top_k", "top_fraction_uniform", "exponential_rank"):
        out = select_elites(d, SelectionStrategy(kind), 5, "maximize", np.random.default_rng(0))
        assert sorted(out) == ["A", "B"]


def test_threshold_strategy_and_fallback():
    d = _dataset([("A", 1.0), ("B", 2.0), ("C", 3.0), ("D", 4.0)])
    s = SelectionStrategy("threshold", threshold=1.5)
    assert select_elites(d, s, 2, "maximize") == ["D", "C"]
    assert select_elites(d, SelectionStrategy("threshold", threshold=99.0), 2, "maximize") == ["D"]
    assert select_elites(d, SelectionStrategy("threshold", threshold=2.5), 3, "minimize") == ["A", "B"]


def test_top_fraction_uniform_frequencies():
    # 200 entries, fraction 0.25 -> top 50; each drawn with probability 1/50
    rng = np.random.default_rng(4)
    seqs = random_sequences(200, rng)
    d = _dataset([(s, float(i)) for i, s in enumerate(seqs)])
    top50 = set(seqs[150:])
    draws = 100_000
    strategy = SelectionStrategy("top_fraction_uniform", fraction=0.25)
    picks = [p for _ in range(draws // 100) for p in select_elites(d, strategy, 100, "maximize", rng)]
    assert set(picks) <= top50
    counts = {s: 0 for s in top50}
    for p in picks:
        counts[p] += 1
    sigma = math.sqrt(draws * (1 / 50) * (49 / 50))
    assert all(abs(c - draws / 50) < 3.5 * sigma for c in counts.values())


def test_exponential_rank_frequencies_match_weights():
    rng = np.random.default_rng(5)
    seqs = [f"{a}" for a in ALPHABET[:10]]
    d = _dataset([(s, float(i)) for i, s in enumerate(seqs)])
    T = 3.0
    draws = 50_000
    strategy = SelectionStrategy("exponential_rank", temperature=T)
    picks = [p for _ in range(draws // 5) for p in select_elites(d, strategy, 5, "maximize", rng)]
    # oracle: best (highest score) has rank 0
    ranked = seqs[::-1]
    w = np.array([math.exp(-r / T) for r in range(10)])
    p = w / w.sum()
    for r, s in enumerate(ranked):
        freq = picks.count(s)
        sigma = math.sqrt(draws * p[r] * (1 - p[r]))
        assert abs(freq - draws * p[r]) < 4 * sigma + 1


def test_top_k_deterministic_and_sorted():
    rng = np.random.default_rng(6)
    seqs = random_sequences(30, rng)
    scores = rng.normal(size=30).round(1)
    d = _dataset(zip(seqs, scores))
    a = select_elites(d, SelectionStrategy(), 10, "maximize", np.random.default_rng(1))
    b = select_elites(d, SelectionStrategy(), 10, "maximize", np.random.default_rng(2))
    assert a == b
    vals = [d.get(s).score for s in a]
    assert vals == sorted(vals, reverse=True)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "top_fraction_uniform", "fraction": 0.0},
        {"kind": "top_fraction_uniform", "fraction": 1.5},
        {"kind": "exponential_rank", "temperature": 0.0},
        {"kind": "threshold"},
        {"kind": "roulette"},
    ],
)
def test_invalid_strategy_params(kwargs):
    with pytest.raises(InvalidStrategyParams):
        SelectionStrategy(**kwargs)


def test_select_elites_validation():
    with pytest.raises(ValueError):
        select_elites(EvaluationDataset(), SelectionStrategy(), 1, "maximize")
    d = _dataset([("A", 1.0), ("B", 2.0), ("C", 3.0)])
    with pytest.raises(ValueError):
        select_elites(d, SelectionStrategy("exponential_rank"), 1, "maximize", None)
    with pytest.raises(ValueError):
        select_elites(d, SelectionStrategy(), 1, "sideways")


def test_random_sequences_distinct_and_bounded():
    seqs = random_sequences(300, np.random.default_rng(7), 3, 6)
    assert len(set(seqs)) == 300
    assert all(3 <= len(s) <= 6 and set(s) <= set(ALPHABET) for s in seqs)
