"""Vocabulary construction and bag-of-words / TF-IDF vectorization."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

VOCAB_FORMAT = "dascite-vocabulary"
VOCAB_VERSION = 1


class EmptyCorpus(ValueError):
    pass


class ZeroLengthDocument(ValueError):
    pass


@dataclass(frozen=True)
class SparseVector:
    """(index, weight) pairs with strictly increasing indices and no zeros."""

    indices: tuple[int, ...] = ()
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.indices) != len(self.weights):
            raise ValueError("indices and weights differ in length")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be strictly increasing")
        if any(w == 0 for w in self.weights):
            raise ValueError("zero weights are not stored")

    @classmethod
    def from_mapping(cls, mapping: dict[int, float]) -> "SparseVector":
        pairs = sorted((i, w) for i, w in mapping.items() if w != 0)
        return cls(tuple(i for i, _ in pairs), tuple(w for _, w in pairs))

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(zip(self.indices, self.weights))

    def __len__(self) -> int:
        return len(self.indices)

    def to_dense(self, dim: int) -> np.ndarray:
        out = np.zeros(dim)
        if self.indices:
            out[list(self.indices)] = self.weights
        return out


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    df: tuple[int, ...]
    n_documents: int

    def __post_init__(self):
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def index(self, term: str) -> int:
        return self._index[term]

    def get(self, term: str, default=None):
        return self._index.get(term, default)

    def idf(self) -> np.ndarray:
        return np.log(self.n_documents / np.asarray(self.df, dtype=float))

    def to_text(self) -> str:
        lines = [f"# {VOCAB_FORMAT} version={VOCAB_VERSION} N={self.n_documents}"]
        lines += [f"{t}\t{i}\t{d}" for i, (t, d) in enumerate(zip(self.terms, self.df))]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Vocabulary":
        header, *rows = text.rstrip("\n").split("\n")
        fields = dict(kv.split("=") for kv in header.split()[2:])
        if not header.startswith(f"# {VOCAB_FORMAT}") or int(fields["version"]) != VOCAB_VERSION:
            raise ValueError("not a version-1 vocabulary file")
        terms, df = [], []
        for expected, row in enumerate(rows):
            term, index, count = row.split("\t")
            if int(index) != expected:
                raise ValueError(f"non-contiguous index at {term!r}")
            terms.append(term)
            df.append(int(count))
        return cls(tuple(terms), tuple(df), int(fields["N"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def build_vocabulary(prepared_corpus: Iterable[Sequence[str]]) -> Vocabulary:
    """One entry per unique token, indexed in lexicographic order; df counts documents."""
    df: Counter[str] = Counter()
    n = 0
    for doc in prepared_corpus:
        n += 1
        df.update(set(doc))
    if n == 0:
        raise EmptyCorpus("cannot build a vocabulary from zero documents")
    terms = tuple(sorted(df))
    return Vocabulary(terms, tuple(df[t] for t in terms), n)


def vectorize_bow(doc: Sequence[str], vocab: Vocabulary) -> SparseVector:
    counts: Counter[int] = Counter()
    for token in doc:
        i = vocab.get(token)
        if i is not None:
            counts[i] += 1
    return SparseVector.from_mapping(dict(counts))


def tfidf_weight(bow: SparseVector, doc_length: int, vocab: Vocabulary) -> SparseVector:
    """(count / doc_length) * ln(N / df).

    ``doc_length`` is the document's full token count, out-of-vocabulary
    tokens included.
    """
    if doc_length <= 0:
        raise ZeroLengthDocument("document has no tokens")
    n = vocab.n_documents
    weights = {i: (c / doc_length) * math.log(n / vocab.df[i]) for i, c in bow}
    return SparseVector.from_mapping(weights)


def vectorize_tfidf(doc: Sequence[str], vocab: Vocabulary) -> SparseVector:
    if not doc:
        return SparseVector()
    return tfidf_weight(vectorize_bow(doc, vocab), len(doc), vocab)


def featurize(docs: Sequence[Sequence[str]], vocab: Vocabulary, kind: str) -> np.ndarray:
    """Dense (n_docs, |V|) matrix of ``bow`` counts or ``tfidf`` weights."""
    vectorize = {"bow": vectorize_bow, "tfidf": vectorize_tfidf}[kind]
    out = np.zeros((len(docs), len(vocab)))
    for row, doc in enumerate(docs):
        vec = vectorize(doc, vocab)
        if vec.indices:
            out[row, list(vec.indices)] = vec.weights
    return out
