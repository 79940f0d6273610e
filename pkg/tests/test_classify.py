import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dascite import classify as clf
from dascite.classify import LabeledExample as Ex
from dascite.text_prep import PrepConfig


def _toy(n_per_class=10, classes=(0, 1)):
    words = {0: "none unavailable", 1: "request contact", 2: "supplementary within", 3: "repository accession"}
    return [Ex(f"{words[c]} item{c}x{i}", c) for c in classes for i in range(n_per_class)]


def test_nb_disjoint_vocabularies():
    examples = [Ex("alpha", 0), Ex("beta", 1)]
    for feat in ("bow", "tfidf"):
        model = clf.train_nb(examples, feat)
        if feat == "bow":
            assert clf.predict_many(model, ["alpha", "beta"]) == [0, 1]


def test_nb_probabilities():
    model = clf.train_nb(_toy(5, (0, 1, 2, 3)), "bow")
    assert np.allclose(model.log_priors, -np.log(4))
    assert abs(np.exp(model.log_priors).sum() - 1) < 1e-9
    assert np.allclose(np.exp(model.log_likelihoods).sum(axis=1), 1, atol=1e-9)


def test_nb_tfidf_scaling_test_vector():
    # with uniform priors only the likelihood term matters, and it is linear in the features
    model = clf.train_nb(_toy(5, (0, 1, 2, 3)), "tfidf")
    x = clf.features_for(model, ["none contact accession item0x1"])
    for k in (0.5, 3.0, 10.0):
        assert np.argmax(model.scores(k * x)) == np.argmax(model.scores(x))


def test_nb_missing_class_never_predicted():
    model = clf.train_nb(_toy(5, (0, 1)), "bow")
    assert set(clf.predict_many(model, ["repository", "request", ""])) <= {0, 1}


def test_svm_separable():
    examples = _toy(5, (0, 1))
    model = clf.train_svm(examples)
    assert model.weights.shape == (4, len(model.vocab))
    assert clf.predict_many(model, [e.text for e in examples]) == [e.category for e in examples]


def test_svm_duplication_invariant():
    examples = _toy(5, (0, 1, 2))
    a = clf.train_svm(examples, seed=3, epochs=20)
    b = clf.train_svm(examples + examples, seed=3, epochs=20)
    texts = ["none request", "repository supplementary", "item1x2"]
    assert np.allclose(clf.features_for(a, texts) @ a.weights.T + a.bias,
                       clf.features_for(b, texts) @ b.weights.T + b.bias, atol=1e-9, rtol=0)


def test_svm_order_invariant_and_deterministic():
    examples = _toy(5, (0, 1, 2, 3))
    a = clf.train_svm(examples, seed=11, epochs=10)
    b = clf.train_svm(list(reversed(examples)), seed=11, epochs=10)
    assert np.array_equal(a.weights, b.weights) and np.array_equal(a.bias, b.bias)


def test_training_errors():
    with pytest.raises(clf.EmptyTrainingSet):
        clf.train_svm([])
    with pytest.raises(clf.SingleClassTrainingSet):
        clf.train_svm([Ex("a", 1), Ex("b", 1)])


def test_predict_resubmitted_and_empty():
    examples = _toy(5, (0, 1, 2, 3))
    model = clf.train_svm(examples)
    assert all(clf.predict(model, e.text) == e.category for e in examples)
    assert clf.predict(model, "") == int(np.argmax(model.bias))
    nb = clf.train_nb(examples[:5] + examples[5:7], "bow")
    assert clf.predict(nb, "") == int(np.argmax(nb.log_priors))  # prior argmax


def test_manual_label_precedence():
    model = clf.train_svm(_toy(5, (0, 1)))
    manual = clf.manual_label_map([Ex("none   unavailable", 3)])
    assert clf.predict(model, "none unavailable", manual) == 3


def test_repository_exemplar():
    from dascite.synthetic import EXEMPLARS, generate_labeled_statements

    examples = generate_labeled_statements()
    model = clf.train_svm(examples, PrepConfig(stemming=True))
    assert clf.predict(model, EXEMPLARS[3]) == 3


def _confusion_oracle(pred, gold, c):
    tp = fp = fn = tn = 0
    for p, g in zip(pred, gold):
        if p == c and g == c:
            tp += 1
        elif p == c:
            fp += 1
        elif g == c:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=60))
def test_evaluate_matches_confusion_oracle(pairs):
    pred, gold = zip(*pairs)
    report = clf.evaluate(pred, gold)
    assert sum(m.support for m in report.per_class) == len(gold)
    for m in report.per_class:
        tp, fp, fn, tn = _confusion_oracle(pred, gold, m.category)
        assert (m.tp, m.fp, m.fn, m.tn) == (tp, fp, fn, tn)
        assert m.tp + m.fp + m.fn + m.tn == len(gold)
        for v in (m.precision, m.recall, m.f1, m.specificity):
            assert 0.0 <= v <= 1.0
        if m.precision + m.recall:
            assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall))
        if tp + fp == 0:
            assert m.precision == 0.0 and "no_predicted_positives" in m.flags


def test_evaluate_perfect_and_frequency_weighting():
    report = clf.evaluate([0, 1, 2, 3], [0, 1, 2, 3])
    assert report.accuracy == 1.0
    assert all(m.precision == m.recall == m.f1 == m.specificity == 1.0 for m in report.per_class)
    weighted = clf.evaluate([0, 1], [0, 0], frequencies=[9, 1])
    assert weighted.accuracy == 0.5 and weighted.frequency_weighted_accuracy == 0.9


def test_stratified_split_quotas():
    from dascite.synthetic import generate_labeled_statements

    examples = generate_labeled_statements()
    train, test = clf.stratified_split(examples, 42)
    assert len(train) == 304 and len(test) == 76
    assert sorted(set(train) | set(test)) == list(range(380))
    counts = np.bincount([examples[i].category for i in test], minlength=4)
    assert counts.tolist() == [4, 20, 45, 7]
    assert clf.stratified_split(examples, 42) == (train, test)


def test_grid_tie_break_on_separable_corpus():
    result = clf.grid_search(_toy(10, (0, 1)), epochs=20)
    assert all(c.accuracy == 1.0 for c in result.cells)
    assert result.config.classifier == "svm"
    assert result.config.prep == PrepConfig(stopword_filter=False, stemming=True)


def test_grid_prefers_stemming_when_it_separates():
    labels = [0] * 10 + [1] * 10
    _, test = clf.stratified_split([Ex("x", c) for c in labels], 42)
    forms = {0: ("fishing", "fishes", "fished"), 1: ("connecting", "connects", "connected")}
    examples = [
        Ex(forms[c][2] if i in test else forms[c][i % 2], c) for i, c in enumerate(labels)
    ]
    result = clf.grid_search(examples, epochs=20)
    by = {(c.classifier, c.prep.stemming): c.accuracy for c in result.cells}
    assert all(by[(k, True)] == 1.0 and by[(k, False)] < 1.0 for k in clf.CLASSIFIERS)
    assert result.config.prep.stemming


def test_grid_threads_equivalent():
    examples = _toy(10, (0, 1, 2))
    a = clf.grid_search(examples, epochs=5, threads=1)
    b = clf.grid_search(examples, epochs=5, threads=4)
    assert a.cells == b.cells
    assert clf.model_to_bytes(a.model) == clf.model_to_bytes(b.model)


@pytest.mark.parametrize("kind", ["nb_bow", "nb_tfidf", "svm"])
def test_model_round_trip(kind, tmp_path):
    model = clf.train_classifier(kind, _toy(5, (0, 1, 3)), PrepConfig(True, True), epochs=5)
    path = tmp_path / "m.bin"
    clf.save_model(model, path, {"note": "x"})
    loaded, extra = clf.load_model(path)
    assert extra == {"note": "x"}
    assert clf.model_to_bytes(loaded, extra) == path.read_bytes()
    texts = ["none", "repository accession", "contact"]
    assert np.array_equal(loaded.scores(clf.features_for(loaded, texts)), model.scores(clf.features_for(model, texts)))


def test_model_bad_magic():
    with pytest.raises(ValueError):
        clf.model_from_bytes(b"NOTAMODEL" + bytes(20))


def test_labels_round_trip():
    examples = [Ex("a, b \"quoted\"", 2, 5), Ex("c", 0)]
    buf = io.StringIO()
    clf.write_labels(examples, buf)
    buf.seek(0)
    assert clf.read_labels(buf) == examples
