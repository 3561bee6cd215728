import itertools
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classcontrast.errors import ConfigError, DataError, TrainingError
from classcontrast.graph import NodeTable, SplitAssignment, stratified_split
from classcontrast.mlp import (LOGISTIC, Adam, MlpModel, TrainConfig, auc, gradient_check,
                               link_scores, predict_classes, train_link_predictor,
                               train_node_classifier)


def all_train(n):
    return SplitAssignment(np.zeros(n, dtype=np.int8))


def test_blobs_fit_within_50_epochs():
    rng = np.random.default_rng(0)
    x = np.vstack([rng.normal(-3, 0.5, (40, 2)), rng.normal(3, 0.5, (40, 2))])
    y = np.repeat([0, 1], 40)
    model, hist = train_node_classifier(x, y, all_train(80), TrainConfig(epochs=50, hidden=(16,)))
    assert np.all(predict_classes(model, x)[0] == y)
    assert len(hist.train_loss) == 50


def test_xor_pattern():
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, (400, 2))
    y = ((x[:, 0] > 0) ^ (x[:, 1] > 0)).astype(int)
    nt = NodeTable.from_arrays(x, y)
    split = stratified_split(nt, seed=0)
    model, _ = train_node_classifier(x, y, split, TrainConfig(epochs=500, hidden=(64,), learning_rate=1e-2))
    acc = np.mean(predict_classes(model, x[split.test])[0] == y[split.test])
    assert acc > 0.95


@pytest.mark.parametrize("hidden,output", [((8,), "softmax"), ((10, 6), "softmax"),
                                           ((16, 16), "logistic")])
def test_gradient_check_fresh_and_trained(hidden, output):
    rng = np.random.default_rng(2)
    x = rng.normal(size=(12, 7))
    n_out = 3 if output == "softmax" else 1
    y = rng.integers(0, 3, 12) if output == "softmax" else rng.integers(0, 2, 12).astype(float)
    model = MlpModel((7,) + hidden + (n_out,), output, seed=3)
    assert gradient_check(model, x, y, l2=1e-3) < 1e-4
    opt = Adam(model.params, lr=1e-2)
    for _ in range(10):
        opt.step(model.gradients(x, y, 1e-3)[1])
    assert gradient_check(model, x, y, l2=1e-3) < 1e-4


def test_zero_input_bias_gradient_is_softmax_residual():
    model = MlpModel((4, 5, 3), seed=0)
    y = np.array([0, 2, 2, 1])
    _, grads = model.gradients(np.zeros((4, 4)), y)
    residual = (np.full((4, 3), 1 / 3) - np.eye(3)[y]).mean(axis=0)
    np.testing.assert_array_equal(grads[-1], residual)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_l2_step_shrinks_every_weight(seed):
    # with Adam the first step moves each weight by about lr * l2|w| / (l2|w| + eps),
    # which stays below 2|w| for the configured lr and l2
    lam = TrainConfig().l2
    model = MlpModel((5, 7, 3), seed=seed)
    before = [np.abs(w).copy() for w in model.weights]
    grads = [lam * w for w in model.weights] + [np.zeros_like(b) for b in model.biases]
    Adam(model.params).step(grads)
    for b, w in zip(before, model.weights):
        nz = b > 0
        assert np.all(np.abs(w)[nz] < b[nz])


def test_training_is_bitwise_deterministic():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(60, 5))
    y = rng.integers(0, 3, 60)
    split = stratified_split(NodeTable.from_arrays(x, y), seed=1)
    cfg = TrainConfig(epochs=30, hidden=(20,), seed=7)
    a, ha = train_node_classifier(x, y, split, cfg)
    b, hb = train_node_classifier(x, y, split, cfg)
    assert a.flat_parameters().tobytes() == b.flat_parameters().tobytes()
    assert ha.val_metric == hb.val_metric


def test_best_validation_snapshot_returned():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(80, 4))
    y = rng.integers(0, 2, 80)
    split = stratified_split(NodeTable.from_arrays(x, y), seed=2)
    model, hist = train_node_classifier(x, y, split, TrainConfig(epochs=40, hidden=(10,)))
    acc = np.mean(predict_classes(model, x[split.val])[0] == y[split.val])
    assert acc == max(hist.val_metric)
    assert hist.val_metric.index(acc) == hist.best_epoch


def test_non_finite_loss_aborts():
    x = np.random.default_rng(0).normal(size=(4, 2))
    with pytest.raises(TrainingError, match="non-finite loss .* at epoch"):
        train_node_classifier(x, [0, 1, 0, 1], all_train(4),
                              TrainConfig(epochs=5, hidden=(4,), learning_rate=1e300))
    with pytest.raises(DataError):
        train_node_classifier(np.full((4, 2), np.nan), [0, 1, 0, 1], all_train(4))


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ConfigError):
        TrainConfig(epochs=0)


def test_predict_tie_break_and_one_hot():
    model = MlpModel((2, 3), weights=[np.zeros((2, 3))], biases=[np.zeros(3)])
    cls, proba = predict_classes(model, np.ones((2, 2)))
    assert cls.tolist() == [0, 0]
    model.biases[0][:] = [0, 50, 0]
    cls, proba = predict_classes(model, np.ones((1, 2)))
    assert cls[0] == 1 and proba[0, 1] == pytest.approx(1.0)


def test_predict_matches_direct_arithmetic():
    rng = np.random.default_rng(6)
    model = MlpModel((6, 9, 8, 4), seed=1)
    x = rng.normal(size=(50, 6))
    h = np.maximum(x @ model.weights[0] + model.biases[0], 0)
    h = np.maximum(h @ model.weights[1] + model.biases[1], 0)
    z = h @ model.weights[2] + model.biases[2]
    cls, proba = predict_classes(model, x)
    assert np.array_equal(cls, z.argmax(axis=1))
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-6)


def test_checkpoint_round_trip(tmp_path):
    model = MlpModel((3, 5, 2), seed=9)
    model.shift = np.array([1.0, 2.0, 3.0])
    path = tmp_path / "m.bin"
    model.save(path, TrainConfig())
    raw = path.read_bytes()
    n = int.from_bytes(raw[:8], "little")
    assert raw[8:9] == b"{" and len(raw) == 8 + n + 8 * (model.param_count + 6)
    back = MlpModel.load(path)
    assert back.flat_parameters().tobytes() == model.flat_parameters().tobytes()
    x = np.random.default_rng(0).normal(size=(4, 3))
    np.testing.assert_array_equal(back.predict_proba(x), model.predict_proba(x))


# -- AUC --------------------------------------------------------------------------

def pair_count_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    wins = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p, q in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


def test_auc_examples():
    assert auc([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert auc([0.9, 0.8, 0.4, 0.3], [1, 0, 1, 0]) == 0.75
    assert auc([0.5, 0.5], [1, 0]) == 0.5
    with pytest.raises(ValueError):
        auc([0.1, 0.2], [1, 1])


def test_auc_vs_quadratic_oracle():
    rng = np.random.default_rng(7)
    scores = rng.integers(0, 200, 1000) / 200  # plenty of ties
    labels = rng.integers(0, 2, 1000)
    assert abs(auc(scores, labels) - pair_count_auc(scores, labels)) < 1e-12


# -- link head --------------------------------------------------------------------

def _one_hot_link_split():
    # 40 nodes in 4 groups; group members share a one-hot embedding
    groups = np.arange(40) % 4
    emb = np.eye(4)[groups]
    rng = np.random.default_rng(8)
    same = [(u, v) for u in range(40) for v in range(u + 1, 40) if groups[u] == groups[v]]
    diff = [(u, v) for u in range(40) for v in range(u + 1, 40) if groups[u] != groups[v]]
    same = np.array(same)[rng.permutation(len(same))]
    diff = np.array(diff)[rng.permutation(len(diff))][:len(same)]
    cut = [int(len(same) * 0.85), int(len(same) * 0.90)]
    p, n = np.split(same, cut), np.split(diff, cut)
    return emb, SimpleNamespace(train_pos=p[0], val_pos=p[1], test_pos=p[2],
                                train_neg=n[0], val_neg=n[1], test_neg=n[2])


def test_link_predictor_separable():
    emb, split = _one_hot_link_split()
    model, _ = train_link_predictor(emb, split, TrainConfig.link_defaults(epochs=60))
    assert model.output == LOGISTIC and model.widths == (4, 16, 16, 1)
    s = link_scores(model, emb, np.vstack([split.test_pos, split.test_neg]))
    y = np.r_[np.ones(len(split.test_pos)), np.zeros(len(split.test_neg))]
    assert auc(s, y) == 1.0
    assert np.all((s > 0) & (s < 1))


def test_link_scores_symmetric():
    rng = np.random.default_rng(9)
    emb = rng.normal(size=(20, 6))
    model = MlpModel((6, 16, 16, 1), LOGISTIC, seed=2)
    pairs = rng.integers(0, 20, (50, 2))
    assert np.array_equal(link_scores(model, emb, pairs), link_scores(model, emb, pairs[:, ::-1]))
