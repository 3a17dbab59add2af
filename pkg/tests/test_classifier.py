from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings

from flusense.classifier import (ConvergenceError, EvalReport, Kernel, SvmError, SvmModel, confusion,
                                 dual_objective, evaluate, label_corpus, train_svm)
from flusense.corpus import Label
from flusense.features import fit_feature_space, tfidf_transform, to_matrix
from flusense.synth import SynthSpec, synth_corpus
from flusense.text import segment

from oracles import PROBES, exact_dual, oracle_decision, small_problem


@settings(max_examples=150, deadline=None)
@given(small_problem())
def test_smo_matches_exact_dual(problem):
    X, y, kernel, C = problem
    # duplicate points with opposite labels make b and alpha non-unique; skip them
    if len({tuple(r) for r in X}) < len(X):
        return
    model = train_svm(X, y, kernel, C=C, tol=1e-6)
    a, b = exact_dual(X, y, kernel, C)
    ours = model.decision_function(PROBES)
    assert np.max(np.abs(ours - oracle_decision(X, y, kernel, a, b, PROBES))) < 1e-3


@settings(max_examples=50, deadline=None)
@given(small_problem())
def test_dual_feasibility_and_monotone_objective(problem):
    X, y, kernel, C = problem
    model = train_svm(X, y, kernel, C=C, track_objective=True)
    alpha = np.abs(model.dual_coef)
    assert abs(model.dual_coef.sum()) < 1e-9  # sum alpha_i y_i
    assert np.all(alpha > 0) and np.all(alpha <= C)
    trace = np.array(model.objective_trace)
    assert np.all(np.diff(trace) >= -1e-12)
    if model.dual_coef.size:
        assert dual_objective(model) == pytest.approx(trace[-1], rel=1e-9, abs=1e-9)


def test_two_point_boundary_at_zero():
    model = train_svm(np.array([[-1.0], [1.0]]), [-1, 1], Kernel("linear"), C=1e6, tol=1e-9)
    assert model.decision_value([0.0]) == pytest.approx(0.0, abs=1e-9)
    assert model.predict([[0.5]])[0] == 1
    assert model.predict([[-0.5]])[0] == -1


def test_xor_with_rbf():
    X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    y = np.array([-1, -1, 1, 1])
    model = train_svm(X, y, Kernel("rbf", 1.0), C=1.0)
    assert np.array_equal(model.predict(X), y)


def separable(seed, n=12):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(2, 0.5, (n // 2, 2)), rng.normal(-2, 0.5, (n // 2, 2))])
    return X, np.array([1] * (n // 2) + [-1] * (n // 2))


@pytest.mark.parametrize("kernel", [Kernel("linear"), Kernel("rbf", 0.5)])
def test_duplicated_training_set_same_decision(kernel):
    X, y = separable(0)
    grid = np.array([[a, b] for a in np.linspace(-3, 3, 7) for b in np.linspace(-3, 3, 7)])
    once = train_svm(X, y, kernel, C=1e3, tol=1e-10)
    twice = train_svm(np.vstack([X, X]), np.concatenate([y, y]), kernel, C=1e3, tol=1e-10)
    assert np.max(np.abs(once.decision_function(grid) - twice.decision_function(grid))) < 1e-6


def test_margin_condition_at_free_support_vectors():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 2))
    y = np.where(X[:, 0] + 0.3 * rng.normal(size=30) > 0, 1, -1)
    model = train_svm(X, y, Kernel("rbf", 1.0), C=1.0, tol=1e-6)
    sv = np.asarray(model.support_vectors)
    free = np.abs(model.dual_coef) < model.C
    labels = np.sign(model.dual_coef)
    assert free.any()
    assert np.allclose(model.decision_function(sv[free]), labels[free], atol=1e-5)


def test_rbf_self_similarity():
    k = Kernel("rbf", 0.7)
    for x in np.random.default_rng(0).normal(size=(5, 4)):
        assert k(x, x) == 1.0
        assert k.matrix(x[None, :], x[None, :])[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_linear_decision_is_explicit_hyperplane():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(20, 3))
    y = np.where(X @ [1.0, -1.0, 0.5] > 0, 1, -1)
    model = train_svm(X, y, Kernel("linear"), C=1.0)
    w = model.dual_coef @ np.asarray(model.support_vectors)
    probes = rng.normal(size=(10, 3))
    assert np.allclose(model.decision_function(probes), probes @ w + model.bias, atol=1e-12)


def test_permuting_training_order_keeps_predictions():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 2))
    y = np.where(X[:, 0] * X[:, 1] + 0.2 * rng.normal(size=40) > 0, 1, -1)
    probes = rng.normal(size=(50, 2))
    base = train_svm(X, y, Kernel("rbf", 1.0), tol=1e-8).predict(probes)
    for seed in range(3):
        perm = np.random.default_rng(seed).permutation(40)
        assert np.array_equal(train_svm(X[perm], y[perm], Kernel("rbf", 1.0), tol=1e-8).predict(probes), base)


def test_sparse_and_dense_agree():
    X, y = separable(4)
    dense = train_svm(X, y, Kernel("rbf", 0.3), tol=1e-10)
    sparse = train_svm(sp.csr_matrix(X), y, Kernel("rbf", 0.3), tol=1e-10)
    assert np.allclose(dense.decision_function(X), sparse.decision_function(sp.csr_matrix(X)), atol=1e-8)


def test_errors():
    X, y = separable(0)
    with pytest.raises(SvmError):
        train_svm(X, np.ones(len(y)))
    with pytest.raises(SvmError):
        train_svm(X, y[:-1])
    with pytest.raises(ConvergenceError):
        train_svm(X, y, Kernel("linear"), C=1e3, tol=1e-12, max_iter=1)


def test_save_load_roundtrip(tmp_path):
    X, y = separable(5)
    model = train_svm(X, y, Kernel("rbf", 0.4))
    model.save(tmp_path / "m.json")
    loaded = SvmModel.load(tmp_path / "m.json")
    assert np.allclose(loaded.decision_function(X), model.decision_function(X), atol=1e-12)
    assert loaded.kernel == model.kernel and loaded.C == model.C


# -- evaluation -------------------------------------------------------------------

def test_perfect_report():
    r = confusion([1, -1, 1], [1, -1, 1])
    assert r.accuracy == r.precision == r.recall == 1.0


def test_all_positive_predictions():
    r = confusion([1, 1, -1, -1], [1, 1, 1, 1])
    assert r.precision == 0.5 and r.recall == 1.0


def test_hand_confusion_matrix():
    r = EvalReport(tp=2, fp=1, tn=3, fn=2)
    assert r.accuracy == 0.625
    assert r.precision == pytest.approx(2 / 3)
    assert r.recall == 0.5


def test_undefined_metrics_are_none():
    r = confusion([-1, -1], [-1, -1])
    assert r.precision is None and r.recall is None and r.accuracy == 1.0


# -- labelling --------------------------------------------------------------------

def test_label_empty_corpus():
    space = fit_feature_space([["a"], ["b"]], [1, -1], 2)
    assert label_corpus(train_svm(np.eye(2), [1, -1]), [], space) == []


def test_label_synthetic_corpus_matches_ground_truth():
    train = synth_corpus(SynthSpec(n_posts=600), 11)
    test = synth_corpus(SynthSpec(n_posts=400), 12)
    docs = [segment(p.text, train.lexicon) for p in train.posts]
    space = fit_feature_space(docs, train.labels, 120)
    X = to_matrix([tfidf_transform(d, space) for d in docs], 120)
    model = train_svm(X, train.labels, Kernel("rbf", 1 / 120), C=10.0)
    posts = [replace(p, tokens=tuple(segment(p.text, test.lexicon))) for p in test.posts]
    labeled = label_corpus(model, posts, space)
    truth = [Label.INFLUENZA if y > 0 else Label.NOISE for y in test.labels]
    agree = np.mean([p.label is t for p, t in zip(labeled, truth)])
    assert agree >= 0.95
    assert label_corpus(model, posts, space) == labeled


def test_evaluate_on_training_data():
    X, y = separable(6)
    report = evaluate(train_svm(X, y, Kernel("linear")), X, y)
    assert report.total == len(y) and report.accuracy == 1.0
    with pytest.raises(SvmError):
        evaluate(train_svm(X, y, Kernel("linear")), X[:0], y[:0])


def test_bias_when_every_multiplier_sits_at_a_bound():
    # every alpha ends at 0 or C, so b is the midpoint of an interval; a multiplier
    # left a rounding error below C used to be treated as free
    X = np.array([[-1.6055246, -1.84347186], [1.33492384, -0.25069858], [0.20267726, -0.90913981],
                  [-0.26714007, -1.46920347], [1.96652401, 0.19860296]])
    y = np.array([-1.0, -1.0, -1.0, 1.0, 1.0])
    kernel = Kernel("linear")
    model = train_svm(X, y, kernel, C=10.0, tol=1e-6)
    a, b = exact_dual(X, y, kernel, 10.0)
    assert model.bias == pytest.approx(b, abs=1e-6)
    assert np.max(np.abs(model.decision_function(PROBES) - oracle_decision(X, y, kernel, a, b, PROBES))) < 1e-3
