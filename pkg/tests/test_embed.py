import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boga.embed import (
    DimensionMismatch,
    DuplicateSequence,
    EmbeddingMissing,
    MalformedRow,
    PcaModel,
    RankDeficient,
    SequenceEncoder,
    TableDimensionMismatch,
    feature_names,
    featurize,
    fit_pca,
    load_embedding_table,
    project,
)
from boga.seqcore import ALPHABET, random_sequences

EISENBERG_EMAL = {"E": -0.74, "M": 0.64, "A": 0.62, "L": 1.06}


# ---- featurizer -----------------------------------------------------------------------


def test_homopolymer_composition_and_length():
    f = featurize("AAAA")
    assert f[0] == 1.0 and np.all(f[1:20] == 0.0)
    assert f[20] == 4.0
    assert len(f) == len(feature_names()) == 24


def test_order_sensitivity_only_in_dipeptides():
    ac, ca = featurize("AC", dipeptides=True), featurize("CA", dipeptides=True)
    np.testing.assert_array_equal(ac[:20], ca[:20])
    assert not np.array_equal(ac[20:420], ca[20:420])
    assert ac[20 + 0 * 20 + 1] == 1.0  # A->C
    assert ca[20 + 1 * 20 + 0] == 1.0  # C->A


def test_hydrophobicity_mean_oracle():
    f = featurize("EMAL")
    names = feature_names()
    assert f[names.index("hydro_mean")] == pytest.approx(np.mean(list(EISENBERG_EMAL.values())), abs=1e-12)
    # a 4-residue sequence has a single full-length window
    assert f[names.index("hydro_max_window5")] == pytest.approx(np.mean(list(EISENBERG_EMAL.values())), abs=1e-12)


def test_max_window_oracle():
    seq = "RRRRRIIIIIRRRR"
    f = featurize(seq)
    assert f[feature_names().index("hydro_max_window5")] == pytest.approx(1.38, abs=1e-12)


@given(st.text(alphabet=ALPHABET, min_size=1, max_size=25))
def test_composition_sums_to_one_and_deterministic(seq):
    f = featurize(seq, dipeptides=True)
    assert f[:20].sum() == pytest.approx(1.0)
    if len(seq) > 1:
        assert f[20:420].sum() == pytest.approx(1.0)
    assert featurize(seq, dipeptides=True).tobytes() == f.tobytes()


# ---- PCA -------------------------------------------------------------------------------------


def _check_model(m):
    np.testing.assert_allclose(m.components @ m.components.T, np.eye(m.n_components), atol=1e-8)
    assert np.all(np.diff(m.explained_variance) <= 1e-12)


def test_rank_one_line():
    x = np.linspace(-3, 3, 25)
    X = np.column_stack([x, 2 * x])
    m = fit_pca(X, 1)
    total = X.var(axis=0, ddof=1).sum()
    assert m.explained_variance[0] == pytest.approx(total, rel=1e-12)
    np.testing.assert_allclose(m.components[0], np.array([1, 2]) / np.sqrt(5), atol=1e-12)


def test_isotropic_sample_only_structure_asserted():
    X = np.random.default_rng(0).normal(size=(400, 5))
    _check_model(fit_pca(X, 5))


@pytest.mark.parametrize("seed", range(5))
def test_pca_matches_covariance_eigendecomposition(seed):
    X = np.random.default_rng(seed).normal(size=(50, 20)) @ np.diag(np.linspace(3, 0.2, 20))
    m = fit_pca(X, 10)
    C = np.cov(X, rowvar=False)
    w, V = np.linalg.eigh(C)
    order = np.argsort(w)[::-1][:10]
    np.testing.assert_allclose(m.explained_variance, w[order], atol=1e-8)
    for i, j in enumerate(order):
        v = V[:, j]
        assert min(np.abs(m.components[i] - v).max(), np.abs(m.components[i] + v).max()) < 1e-8
    _check_model(m)


def test_sign_convention():
    X = np.random.default_rng(9).normal(size=(30, 6))
    m = fit_pca(X, 4)
    for row in m.components:
        assert row[np.argmax(np.abs(row))] > 0
    m2 = fit_pca(-X, 4)
    np.testing.assert_allclose(m.components, m2.components, atol=1e-12)


def test_rank_deficient_warns_and_zero_pads():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(10, 2)) @ rng.normal(size=(2, 6))
    with pytest.warns(RankDeficient):
        m = fit_pca(X, 4)
    assert np.all(m.explained_variance[2:] == 0.0)
    _check_model(m)


def test_pca_preconditions():
    with pytest.raises(ValueError):
        fit_pca(np.ones((1, 3)), 1)
    with pytest.raises(ValueError):
        fit_pca(np.random.default_rng(0).normal(size=(5, 3)), 4)


def test_project_mean_is_zero_and_matches_matmul():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 8))
    m = fit_pca(X, 5)
    np.testing.assert_array_equal(project(m, m.mean), np.zeros(5))
    z = rng.normal(size=8)
    oracle = np.array([sum((z[j] - m.mean[j]) * m.components[i, j] for j in range(8)) for i in range(5)])
    np.testing.assert_allclose(project(m, z), oracle, atol=1e-10)


def test_full_rank_projection_reconstructs_training_rows():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(12, 4))
    m = fit_pca(X, 4)
    back = project(m, X) @ m.components + m.mean
    np.testing.assert_allclose(back, X, atol=1e-10)


def test_projection_preserves_total_variance():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(60, 10)) * np.arange(1, 11)
    m = fit_pca(X, 10)
    Z = project(m, X)
    assert Z.var(axis=0, ddof=1).sum() == pytest.approx(m.explained_variance.sum(), rel=1e-6)


def test_project_dimension_mismatch():
    m = fit_pca(np.random.default_rng(0).normal(size=(10, 4)), 2)
    with pytest.raises(DimensionMismatch):
        project(m, np.zeros(5))


def test_pca_model_round_trip():
    m = fit_pca(np.random.default_rng(0).normal(size=(10, 4)), 3)
    m2 = PcaModel.from_dict(m.to_dict())
    np.testing.assert_array_equal(m.components, m2.components)
    np.testing.assert_array_equal(m.mean, m2.mean)


# ---- embedding tables -------------------------------------------------------------------------


def test_minimal_table_with_unicode_minus(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("sequence,e0,e1\nAA,0.5,−1.0\n", encoding="utf-8")
    t = load_embedding_table(p)
    assert list(t) == ["AA"]
    np.testing.assert_array_equal(t["AA"], [0.5, -1.0])


@pytest.mark.parametrize(
    "body,exc,line",
    [
        ("sequence,e0,e1\nAA,1,2\nAA,3,4\n", DuplicateSequence, 3),
        ("sequence,e0,e1\nAA,1,2,3\n", MalformedRow, 2),
        ("sequence,e0,e1\nAA,1,x\n", MalformedRow, 2),
        ("sequence,e0,e1\nA1,1,2\n", MalformedRow, 2),
        ("seq,e0\nAA,1\n", MalformedRow, 1),
    ],
)
def test_table_errors_carry_line(tmp_path, body, exc, line):
    p = tmp_path / "t.csv"
    p.write_text(body)
    with pytest.raises(exc) as info:
        load_embedding_table(p)
    assert info.value.line == line


def test_table_dimension_check(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("sequence,e0,e1\nAA,1,2\n")
    with pytest.raises(TableDimensionMismatch):
        load_embedding_table(p, expected_dim=3)


def test_encoder_with_table_refuses_misses():
    table = {"AAAA": np.array([1.0, 2.0, 3.0]), "CCCC": np.array([0.0, 1.0, 0.0]), "DDDD": np.array([2.0, 2.0, 1.0])}
    enc = SequenceEncoder(table=table)
    enc.fit(list(table))
    assert enc.transform(["AAAA"]).shape == (1, 2)
    with pytest.raises(EmbeddingMissing):
        enc.transform(["EEEE"])


def test_encoder_component_cap_and_single_row():
    seqs = random_sequences(6, np.random.default_rng(0))
    enc = SequenceEncoder(n_components=50)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RankDeficient)
        enc.fit(seqs)
    assert enc.dim == 5
    one = SequenceEncoder()
    one.fit(seqs[:1])
    assert one.dim == 24
    np.testing.assert_array_equal(one.transform(seqs[:1]), np.zeros((1, 24)))
