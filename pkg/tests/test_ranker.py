import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from archrank.errors import (
    EmptyPairSet,
    FormatVersionMismatch,
    ModelKindMismatch,
    ShapeMismatch,
)
from archrank.metrics import pair_accuracy
from archrank.pairs import PairExample, build_pairs, split_by_architecture
from archrank.ranker import (
    TrainConfig,
    fit_tree,
    load_model,
    model_from_json,
    model_to_json,
    pair_grad_hess,
    pair_loss,
    pair_prob,
    save_model,
    sigmoid,
    train,
)
from archrank.seeding import substream
from archrank.space import encode_batch

from conftest import sample_records


# --- pairwise objective --------------------------------------------------------

def test_pair_prob_hand_values():
    assert pair_prob(0.0, 0.0) == 0.5
    assert pair_prob(math.log(3), 0.0) == pytest.approx(0.75, abs=1e-12)
    assert pair_prob(0.0, math.log(3)) == pytest.approx(0.25, abs=1e-12)


@given(st.floats(-50, 50), st.floats(-50, 50))
@settings(max_examples=200, deadline=None)
def test_pair_prob_sums_to_one(a, b):
    assert pair_prob(a, b) + pair_prob(b, a) == pytest.approx(1.0, abs=1e-12)


def test_pair_loss_is_cross_entropy():
    # score gap capped at 8: past that, 1-p loses bits to cancellation and
    # the naive reference itself cannot reach 1e-12, while pair_loss can
    rng = np.random.default_rng(0)
    for _ in range(200):
        sl, sr = rng.uniform(-4, 4, size=2)
        label = rng.integers(0, 2)
        p = pair_prob(sl, sr)
        expected = -(label * math.log(p) + (1 - label) * math.log(1 - p))
        assert pair_loss(sl, sr, label) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_pair_loss_is_stable_at_extreme_scores():
    # the naive -log(sigmoid) form overflows here; the softplus form must not
    assert pair_loss(1000.0, 0.0, 1) == pytest.approx(0.0, abs=1e-12)
    assert pair_loss(1000.0, 0.0, 0) == pytest.approx(1000.0, rel=1e-12)
    assert np.isfinite(pair_loss(-1000.0, 1000.0, 1))


def test_pair_loss_label_symmetry():
    rng = np.random.default_rng(1)
    for _ in range(50):
        sl, sr = rng.uniform(-5, 5, size=2)
        assert pair_loss(sl, sr, 1) == pytest.approx(pair_loss(sr, sl, 0), rel=1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    eps = 1e-6
    for _ in range(300):
        sl, sr = rng.uniform(-3, 3, size=2)
        label = int(rng.integers(0, 2))
        g, h = pair_grad_hess(sl, sr, label)
        g_fd = (pair_loss(sl + eps, sr, label) - pair_loss(sl - eps, sr, label)) / (2 * eps)
        assert g == pytest.approx(g_fd, rel=1e-6, abs=1e-9)
        # second derivative via central differences of the gradient
        gp, _ = pair_grad_hess(sl + eps, sr, label)
        gm, _ = pair_grad_hess(sl - eps, sr, label)
        assert h == pytest.approx((gp - gm) / (2 * eps), rel=1e-5, abs=1e-9)


def test_gradient_is_antisymmetric_in_sides():
    g_left, h_left = pair_grad_hess(1.3, -0.4, 1)
    g_swap, h_swap = pair_grad_hess(-0.4, 1.3, 0)
    assert g_swap == pytest.approx(-g_left, rel=1e-12)
    assert h_swap == pytest.approx(h_left, rel=1e-12)


def test_grad_hess_vectorized():
    sl = np.array([0.0, 1.0, -2.0])
    sr = np.array([0.0, 0.0, 1.0])
    y = np.array([1.0, 0.0, 1.0])
    g, h = pair_grad_hess(sl, sr, y)
    assert g.shape == h.shape == (3,)
    assert g[0] == pytest.approx(-0.5)
    assert np.all(h > 0)


# --- tree fitting ----------------------------------------------------------------

def _brute_force_best_gain(X, g, h, lam, min_leaf):
    n = X.shape[0]
    G, H = g.sum(), h.sum()
    parent = G * G / (H + lam)
    best = 0.0
    for cell in range(X.shape[1]):
        for thr in np.unique(X[:, cell])[:-1]:
            mask = X[:, cell] <= thr
            nl = int(mask.sum())
            if nl < min_leaf or n - nl < min_leaf:
                continue
            GL, HL = g[mask].sum(), h[mask].sum()
            gain = GL * GL / (HL + lam) + (G - GL) ** 2 / (H - HL + lam) - parent
            best = max(best, gain)
    return best


def _root_gain(tree, X, g, h, lam):
    if tree.feature[0] < 0:
        return 0.0
    mask = X[:, tree.feature[0]] <= tree.threshold[0]
    G, H = g.sum(), h.sum()
    GL, HL = g[mask].sum(), h[mask].sum()
    return GL * GL / (HL + lam) + (G - GL) ** 2 / (H - HL + lam) - G * G / (H + lam)


@pytest.mark.parametrize("seed", range(5))
def test_root_split_matches_exhaustive_search(seed):
    rng = np.random.default_rng(seed)
    X = rng.choice([0.0, 1.0, 2.0, 4.0, 8.0], size=(10, 4))
    g = rng.normal(size=10)
    h = rng.uniform(0.1, 1.0, size=10)
    config = TrainConfig(max_leaves=2, max_depth=1, min_samples_per_leaf=1)
    tree = fit_tree(X, g, h, config)
    expected = _brute_force_best_gain(X, g, h, config.l2_lambda, 1)
    assert _root_gain(tree, X, g, h, config.l2_lambda) == pytest.approx(expected, rel=1e-12)


def test_leaf_values_are_newton_steps():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(12, 3))
    g = rng.normal(size=12)
    h = rng.uniform(0.1, 1.0, size=12)
    lam = 1.0
    tree = fit_tree(X, g, h, TrainConfig(max_leaves=2, max_depth=1, min_samples_per_leaf=1))
    assert tree.feature[0] >= 0
    mask = X[:, tree.feature[0]] <= tree.threshold[0]
    left_node, right_node = tree.left[0], tree.right[0]
    assert tree.value[left_node] == pytest.approx(-g[mask].sum() / (h[mask].sum() + lam))
    assert tree.value[right_node] == pytest.approx(-g[~mask].sum() / (h[~mask].sum() + lam))


def test_stump_when_splitting_is_disallowed():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(8, 2))
    g = rng.normal(size=8)
    h = np.ones(8)
    tree = fit_tree(X, g, h, TrainConfig(max_leaves=1))
    assert len(tree.value) == 1
    assert tree.value[0] == pytest.approx(-g.sum() / (h.sum() + 1.0))


def test_min_samples_per_leaf_blocks_unbalanced_split():
    # only possible cut separates 1 point from 5; min_leaf 2 forbids it
    X = np.array([[0.0], [1.0], [1.0], [1.0], [1.0], [1.0]])
    g = np.array([5.0, -1.0, -1.0, -1.0, -1.0, -1.0])
    h = np.ones(6)
    tree = fit_tree(X, g, h, TrainConfig(max_leaves=4, min_samples_per_leaf=2))
    assert len(tree.value) == 1


def test_max_leaves_caps_growth():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(60, 4))
    g = rng.normal(size=60)
    h = np.ones(60)
    tree = fit_tree(X, g, h, TrainConfig(max_leaves=4, max_depth=6, min_samples_per_leaf=1))
    n_leaves = int(np.sum(np.asarray(tree.feature) < 0))
    assert n_leaves <= 4


def test_fit_tree_rejects_bad_shapes():
    with pytest.raises(ShapeMismatch):
        fit_tree(np.zeros((4, 2, 2)), np.zeros(4), np.ones(4), TrainConfig())
    with pytest.raises(ShapeMismatch):
        fit_tree(np.zeros((4, 2)), np.zeros(3), np.ones(4), TrainConfig())


# --- boosting --------------------------------------------------------------------

def _training_setup(space, n=60, seed=0):
    records = sample_records(space, n, seed=seed, noise_sigma=0.05)
    train_recs, val_recs = split_by_architecture(records, 0.25, substream(seed, "split"))
    both = train_recs + val_recs
    encodings = encode_batch(space, [r.arch for r in both])
    train_pairs = build_pairs(train_recs)
    offset = len(train_recs)
    val_pairs = [PairExample(p.left + offset, p.right + offset, p.label)
                 for p in build_pairs(val_recs)]
    return both, encodings, train_pairs, val_pairs


def test_training_learns_the_ordering(small_space):
    both, enc, tp, vp = _training_setup(small_space)
    model = train(tp, vp, enc)
    assert model.meta["best_val_accuracy"] > 0.65
    assert pair_accuracy(model, vp, enc) == pytest.approx(model.meta["best_val_accuracy"])


def test_returned_model_is_best_prefix(small_space):
    both, enc, tp, vp = _training_setup(small_space, seed=1)
    model = train(tp, vp, enc)
    meta = model.meta
    assert len(model.trees) == meta["rounds_used"] <= meta["rounds_grown"]
    curve = meta["val_accuracy_curve"]
    assert len(curve) == meta["rounds_grown"]
    assert meta["best_val_accuracy"] == max(curve)
    # first round achieving the maximum is the one kept
    assert curve.index(max(curve)) + 1 == meta["rounds_used"]


def test_training_loss_curve_decreases_overall(small_space):
    both, enc, tp, vp = _training_setup(small_space, seed=2)
    model = train(tp, vp, enc)
    curve = model.meta["train_loss_curve"]
    assert curve[-1] < curve[0]


def test_training_is_deterministic(small_space):
    both, enc, tp, vp = _training_setup(small_space, seed=3)
    a = train(tp, vp, enc, TrainConfig(max_rounds=30))
    b = train(tp, vp, enc, TrainConfig(max_rounds=30))
    assert model_to_json(a) == model_to_json(b)


def test_empty_pair_sets_rejected(small_space):
    both, enc, tp, vp = _training_setup(small_space, seed=4)
    with pytest.raises(EmptyPairSet):
        train([], vp, enc)
    with pytest.raises(EmptyPairSet):
        train(tp, [], enc)


def test_pair_index_out_of_range(small_space):
    both, enc, tp, vp = _training_setup(small_space, seed=5)
    bad = [PairExample(0, len(both) + 5, 1)]
    with pytest.raises(ShapeMismatch):
        train(tp, bad, enc)


# --- serialization -----------------------------------------------------------------

def test_model_json_round_trip(small_space, tmp_path):
    both, enc, tp, vp = _training_setup(small_space, seed=6)
    model = train(tp, vp, enc)
    back = model_from_json(json.loads(json.dumps(model_to_json(model))))
    assert np.array_equal(back.predict(enc), model.predict(enc))
    path = str(tmp_path / "m.json")
    save_model(path, model)
    assert np.array_equal(load_model(path).predict(enc), model.predict(enc))


def test_model_format_version_checked(small_space):
    both, enc, tp, vp = _training_setup(small_space, seed=7)
    obj = model_to_json(train(tp, vp, enc))
    obj["format_version"] = 99
    with pytest.raises(FormatVersionMismatch):
        model_from_json(obj)


def test_model_kind_checked(small_space):
    both, enc, tp, vp = _training_setup(small_space, seed=8)
    obj = model_to_json(train(tp, vp, enc))
    obj["model_kind"] = "latency_predictor"
    with pytest.raises(ModelKindMismatch):
        model_from_json(obj)


def test_predict_rejects_wrong_cell_count(small_space):
    both, enc, tp, vp = _training_setup(small_space, seed=9)
    model = train(tp, vp, enc)
    with pytest.raises(ShapeMismatch):
        model.predict(np.zeros((3, 2, 2)))
