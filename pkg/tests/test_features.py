import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dascite.features import (
    EmptyCorpus,
    SparseVector,
    Vocabulary,
    ZeroLengthDocument,
    build_vocabulary,
    featurize,
    tfidf_weight,
    vectorize_bow,
    vectorize_tfidf,
)
from dascite.text_prep import tokenize


def test_vocabulary_counts():
    v = build_vocabulary([["a", "b"], ["b", "c"]])
    assert v.n_documents == 2
    assert {t: v.df[v.index(t)] for t in v.terms} == {"a": 1, "b": 2, "c": 1}
    v1 = build_vocabulary([["x", "x", "x"]])
    assert v1.terms == ("x",) and list(v1.df) == [1] and v1.n_documents == 1


def test_empty_corpus():
    with pytest.raises(EmptyCorpus):
        build_vocabulary([])


def test_bow():
    v = build_vocabulary([["a"], ["b"]])
    assert list(vectorize_bow(["a", "b", "b"], v)) == [(0, 1.0), (1, 2.0)]
    assert len(vectorize_bow(["zzz", "qqq"], v)) == 0


def test_bow_category_zero_text():
    docs = [tokenize(t) for t in (
        "No additional data available",
        "Data available on request",
        "All data are in the paper",
        "Data deposited in a repository",
    )]
    v = build_vocabulary(docs)
    bow = dict(vectorize_bow(docs[0], v))
    assert {v.terms[i]: c for i, c in bow.items()} == {"no": 1, "additional": 1, "data": 1, "available": 1}
    assert v.df[v.index("data")] == 4 and v.df[v.index("available")] == 2


def test_tfidf_hand_value():
    v = Vocabulary(("t", "u"), (2, 1), 4)
    w = tfidf_weight(SparseVector((0,), (2.0,)), 10, v)
    assert math.isclose(dict(w)[0], 0.2 * math.log(2), rel_tol=0, abs_tol=1e-15)
    assert round(dict(w)[0], 5) == 0.13863


def test_tfidf_degenerate():
    v = build_vocabulary([["a", "b", "c"]])
    assert len(vectorize_tfidf(["a", "b"], v)) == 0  # N = 1
    v2 = build_vocabulary([["a", "b"], ["a"]])
    assert dict(vectorize_tfidf(["a", "b"], v2)) == {v2.index("b"): 0.5 * math.log(2)}
    with pytest.raises(ZeroLengthDocument):
        tfidf_weight(SparseVector((), ()), 0, v2)


def test_vocabulary_file_round_trip(tmp_path):
    v = build_vocabulary([["b", "a"], ["a", "c", "c"], ["tabé"]])
    path = tmp_path / "vocab.tsv"
    v.save(path)
    assert Vocabulary.load(path) == v
    assert path.read_text(encoding="utf-8").startswith("# dascite-vocabulary version=1")


words = st.sampled_from(list("abcdefgh"))


@given(st.lists(st.lists(words, min_size=1, max_size=8), min_size=1, max_size=8))
def test_vocabulary_invariants(docs):
    v = build_vocabulary(docs)
    assert [v.index(t) for t in v.terms] == list(range(len(v)))
    assert all(1 <= d <= v.n_documents for d in v.df)
    dense = featurize(docs, v, "tfidf")
    assert dense.shape == (len(docs), len(v))
    assert np.all(dense >= 0)
    for i, t in enumerate(v.terms):
        if v.df[i] == v.n_documents:
            assert np.all(dense[:, i] == 0)
