import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classcontrast import contextual
from classcontrast.contextual import (build_contextual_block, compute_landmarks,
                                      contextual_vector, measure_matrix, pca_reduce)
from classcontrast.errors import ClassContrastWarning
from classcontrast.graph import NodeTable, Role, SplitAssignment, stratified_split
from classcontrast.recipes import DatasetRecipe, LandmarkSpec


def test_single_member_centroid():
    nt = NodeTable.from_arrays([[0.5, 2.0], [1.0, 1.0], [3.0, 4.0]], [0, 1, 1])
    marks = compute_landmarks(nt, kind="centroid")
    np.testing.assert_array_equal(marks[0].vector, [0.5, 2.0])
    np.testing.assert_array_equal(marks[1].vector, [2.0, 2.5])


def test_symmetric_centroid():
    nt = NodeTable.from_arrays([[0, 2], [2, 0]], [0, 0])
    np.testing.assert_array_equal(compute_landmarks(nt)[0].vector, [1, 1])


def test_selective_threshold_by_frequency():
    rows = np.zeros((20, 3))
    rows[:3, 0] = 1   # 15 %
    rows[:1, 1] = 1   # 5 %
    rows[:2, 2] = 1   # exactly 10 %
    nt = NodeTable.from_arrays(rows, np.zeros(20, int))
    sel = compute_landmarks(nt, kind="selective", threshold=0.10)[0]
    inc = compute_landmarks(nt, kind="inclusive")[0]
    assert sel.vector.tolist() == [1, 0, 1]
    assert inc.vector.tolist() == [1, 1, 1]
    assert sel.measure == "common"


def test_landmarks_use_training_rows_only():
    rng = np.random.default_rng(0)
    feats = rng.integers(0, 2, (60, 12)).astype(float)
    labels = np.arange(60) % 3
    nt = NodeTable.from_arrays(feats, labels)
    split = stratified_split(nt, seed=4)
    perturbed = feats.copy()
    perturbed[split.test] = 1 - perturbed[split.test]
    perturbed[split.val] = rng.random((split.val.size, 12))
    nt2 = NodeTable.from_arrays(perturbed, labels)
    for kind in ("centroid", "inclusive", "selective"):
        a = compute_landmarks(nt, split, kind)
        b = compute_landmarks(nt2, split, kind)
        for x, y in zip(a, b):
            assert x.vector.tobytes() == y.vector.tobytes()


def test_identity_euclidean_zero():
    nt = NodeTable.from_arrays([[1.0, 2.0], [3.0, 5.0]], [0, 1])
    marks = compute_landmarks(nt)
    assert contextual_vector([3.0, 5.0], marks)[1] == 0.0


def test_common_and_jaccard_small():
    x, lm = np.array([1, 1, 0]), np.array([[1, 0, 1]])
    assert measure_matrix(x, lm, "common")[0, 0] == 1
    assert measure_matrix(x, lm, "jaccard")[0, 0] == pytest.approx(1 / 3)


def test_binary_measures_vs_set_oracle():
    rng = np.random.default_rng(5)
    x = rng.integers(0, 2, (40, 25))
    marks = rng.integers(0, 2, (4, 25))
    common = measure_matrix(x, marks, "common")
    jac = measure_matrix(x, marks, "jaccard")
    for i in range(40):
        a = set(np.flatnonzero(x[i]).tolist())
        for j in range(4):
            b = set(np.flatnonzero(marks[j]).tolist())
            assert common[i, j] == len(a & b)
            assert jac[i, j] == (len(a & b) / len(a | b) if a | b else 0.0)


def test_cosine_zero_vector_flagged():
    with pytest.warns(ClassContrastWarning):
        v = measure_matrix(np.zeros(3), np.array([[1.0, 0, 0]]), "cosine")
    assert v[0, 0] == 0.0
    np.testing.assert_allclose(measure_matrix([1.0, 1.0], [[2.0, 2.0]], "cosine"), [[1.0]])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_common_count_bounded_and_equivariant(seed, n_cls):
    rng = np.random.default_rng(seed)
    n = 30
    feats = rng.integers(0, 2, (n, 10)).astype(float)
    labels = np.concatenate([np.arange(n_cls), rng.integers(0, n_cls, n - n_cls)])
    nt = NodeTable.from_arrays(feats, labels, class_count=n_cls)
    marks = compute_landmarks(nt, kind="inclusive")
    beta = np.vstack([contextual_vector(f, marks) for f in feats])
    xs = feats.sum(1)[:, None]
    ms = np.array([m.vector.sum() for m in marks])[None, :]
    assert np.all(beta <= np.minimum(xs, ms))
    perm = rng.permutation(n_cls)
    nt_p = NodeTable.from_arrays(feats, perm[labels], class_count=n_cls)
    marks_p = compute_landmarks(nt_p, kind="inclusive")
    beta_p = np.vstack([contextual_vector(f, marks_p) for f in feats])
    np.testing.assert_array_equal(beta_p[:, perm], beta)


def test_leave_one_out_matches_refit():
    rng = np.random.default_rng(9)
    feats = rng.integers(0, 2, (30, 8)).astype(float)
    nt = NodeTable.from_arrays(feats, np.arange(30) % 2)
    split = stratified_split(nt, seed=0)
    for spec in (LandmarkSpec("inclusive", "common"), LandmarkSpec("selective", "common", 0.3),
                 LandmarkSpec("centroid", "euclidean")):
        recipe = DatasetRecipe("t", True, landmarks=(spec,), leave_one_out=True)
        block = build_contextual_block(nt, split, recipe)
        for u in split.train[:6]:
            c = nt.labels[u]
            roles = split.roles.copy()
            roles[u] = Role.TEST
            marks = compute_landmarks(nt, SplitAssignment(roles), spec.kind, spec.measure, spec.threshold)
            assert block.values[u, c] == pytest.approx(contextual_vector(feats[u], marks)[c])
        plain = build_contextual_block(nt, split, DatasetRecipe("t", True, landmarks=(spec,)))
        np.testing.assert_array_equal(block.values[split.test], plain.values[split.test])


def test_contextual_block_layout():
    rng = np.random.default_rng(1)
    nt = NodeTable.from_arrays(rng.integers(0, 2, (50, 10)), np.arange(50) % 5)
    recipe = DatasetRecipe("t", True, landmarks=(LandmarkSpec("inclusive", "common"),
                                                 LandmarkSpec("centroid", "euclidean")))
    block = build_contextual_block(nt, stratified_split(nt, seed=0), recipe)
    assert block.values.shape == (50, 10)
    assert block.semantics == ("similarity", "distance")
    assert block.row_values(1).shape == (50, 5)
    assert np.all(block.values >= 0)


# -- PCA --------------------------------------------------------------------------

def test_pca_exact_subspace():
    rng = np.random.default_rng(2)
    basis = np.linalg.qr(rng.normal(size=(5, 2)))[0].T
    data = rng.normal(size=(40, 2)) @ basis + 3.0
    reduced, b = pca_reduce(data, 2)
    recon = reduced @ b.components + b.mean
    assert np.abs(recon - data).max() < 1e-8


def test_pca_variances_match_dense_eigensolver():
    rng = np.random.default_rng(30)
    data = rng.normal(size=(30, 6)) @ rng.normal(size=(6, 6))
    reduced, b = pca_reduce(data, 6)
    oracle = np.sort(np.linalg.eigvalsh(np.cov(data, rowvar=False)))[::-1]
    np.testing.assert_allclose(reduced.var(axis=0, ddof=1), oracle, rtol=1e-6)
    cov = np.cov(reduced, rowvar=False)
    off = cov - np.diag(np.diag(cov))
    assert np.abs(off).max() < 1e-6 * cov[0, 0]
    piv = np.argmax(np.abs(b.components), axis=1)
    assert np.all(b.components[np.arange(6), piv] > 0)


def test_pca_fit_on_training_rows_only():
    rng = np.random.default_rng(3)
    data = rng.normal(size=(50, 4))
    fit = np.arange(30)
    r1, _ = pca_reduce(data, 2, fit)
    data2 = data.copy()
    data2[30:] *= 100
    r2, _ = pca_reduce(data2, 2, fit)
    np.testing.assert_array_equal(r1[:30], r2[:30])


def test_pca_rank_deficit_zero_padded():
    rng = np.random.default_rng(4)
    data = rng.normal(size=(20, 2)) @ rng.normal(size=(2, 6))
    with pytest.warns(ClassContrastWarning):
        reduced, _ = pca_reduce(data, 4)
    assert np.all(reduced[:, 2:] == 0)
    with pytest.raises(ValueError):
        pca_reduce(data, 7)


def test_pca_iterative_path_agrees(monkeypatch):
    rng = np.random.default_rng(6)
    data = rng.normal(size=(80, 40)) * np.linspace(3, 0.1, 40)
    dense, _ = pca_reduce(data, 5)
    monkeypatch.setattr(contextual, "DENSE_EIGH_MAX_DIM", 10)
    iterative, _ = pca_reduce(data, 5)
    np.testing.assert_allclose(iterative, dense, atol=1e-8)


def test_pca_500_to_100_shape():
    rng = np.random.default_rng(7)
    reduced, b = pca_reduce(rng.random((300, 500)), 100, np.arange(250))
    assert reduced.shape == (300, 100)
    assert b.components.shape == (100, 500)
