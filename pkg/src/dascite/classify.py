"""DAS classifiers: multinomial naive Bayes and a one-vs-rest linear SVM.

The SVM is trained in the primal by stochastic subgradient descent with the
``1 / (lambda * t)`` step schedule.  Identical training examples are merged
into a single weighted example before training, so duplicating the training
set or reordering it leaves the learned weights bit-for-bit unchanged.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .das import CATEGORIES, normalize_text
from .features import Vocabulary, build_vocabulary, featurize
from .text_prep import PrepConfig, prepare

log = logging.getLogger(__name__)

N_CLASSES = len(CATEGORIES)
MODEL_MAGIC = b"DASCMODL"
MODEL_VERSION = 1

CLASSIFIERS = ("nb_bow", "nb_tfidf", "svm")
# Higher rank wins ties in grid search.
_CLASSIFIER_RANK = {"nb_bow": 0, "nb_tfidf": 1, "svm": 2}


class EmptyTrainingSet(ValueError):
    pass


class SingleClassTrainingSet(ValueError):
    pass


@dataclass(frozen=True)
class LabeledExample:
    text: str
    category: int
    frequency: int = 1

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"category {self.category!r} not in 0..3")
        if self.frequency < 1:
            raise ValueError("frequency must be >= 1")


def load_labels(path: str | Path) -> list[LabeledExample]:
    """Read labels.csv with columns text, category, frequency."""
    with open(path, newline="", encoding="utf-8") as fh:
        return read_labels(fh, str(path))


def read_labels(fh, name: str = "labels") -> list[LabeledExample]:
    reader = csv.DictReader(fh)
    if not {"text", "category"} <= set(reader.fieldnames or ()):
        raise ValueError(f"{name}: need columns text, category[, frequency]")
    out = []
    for line_no, row in enumerate(reader, start=2):
        try:
            out.append(
                LabeledExample(
                    row["text"],
                    int(row["category"]),
                    int(row.get("frequency") or 1),
                )
            )
        except ValueError as exc:
            raise ValueError(f"{name}:{line_no}: {exc}") from exc
    return out


def write_labels(examples: Sequence[LabeledExample], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["text", "category", "frequency"])
    for ex in examples:
        writer.writerow([ex.text, ex.category, ex.frequency])


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


@dataclass
class NBModel:
    log_priors: np.ndarray  # (4,)
    log_likelihoods: np.ndarray  # (4, |V|)
    featurization: str  # bow | tfidf
    prep: PrepConfig
    vocab: Vocabulary
    alpha: float = 1.0

    kind = "nb"

    def scores(self, features: np.ndarray) -> np.ndarray:
        return features @ self.log_likelihoods.T + self.log_priors

    @property
    def name(self) -> str:
        return f"nb_{self.featurization}"


@dataclass
class LinearModel:
    weights: np.ndarray  # (4, |V|)
    bias: np.ndarray  # (4,)
    prep: PrepConfig
    vocab: Vocabulary
    lam: float
    seed: int
    epochs: int
    featurization: str = "tfidf"

    kind = "svm"
    name = "svm"

    def scores(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weights.T + self.bias


Model = Union[NBModel, LinearModel]


def _prepare_all(texts: Sequence[str], prep: PrepConfig) -> list[list[str]]:
    return [prepare(t, prep) for t in texts]


def train_nb(
    examples: Sequence[LabeledExample],
    featurization: str = "bow",
    prep: PrepConfig = PrepConfig(),
    alpha: float = 1.0,
) -> NBModel:
    """Multinomial NB with additive smoothing; tf-idf weights act as fractional counts."""
    if not examples:
        raise EmptyTrainingSet("no training examples")
    docs = _prepare_all([e.text for e in examples], prep)
    vocab = build_vocabulary(docs)
    x = featurize(docs, vocab, featurization)
    y = np.array([e.category for e in examples])

    class_counts = np.bincount(y, minlength=N_CLASSES).astype(float)
    with np.errstate(divide="ignore"):
        log_priors = np.log(class_counts / class_counts.sum())
    term_mass = np.zeros((N_CLASSES, len(vocab)))
    np.add.at(term_mass, y, x)
    smoothed = term_mass + alpha
    log_lik = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
    return NBModel(log_priors, log_lik, featurization, prep, vocab, alpha)


def train_svm(
    examples: Sequence[LabeledExample],
    prep: PrepConfig = PrepConfig(),
    lam: float = 1e-4,
    seed: int = 42,
    epochs: int = 100,
) -> LinearModel:
    """One-vs-rest linear SVM on tf-idf features.

    Minimizes ``lam/2 |w|^2 + mean(hinge)`` per class.  The bias is an extra
    weight on a constant feature and is regularized with the rest.
    """
    if not examples:
        raise EmptyTrainingSet("no training examples")
    labels = {e.category for e in examples}
    if len(labels) < 2:
        raise SingleClassTrainingSet(f"only class {labels} present")

    docs = _prepare_all([e.text for e in examples], prep)
    vocab = build_vocabulary(docs)
    x = featurize(docs, vocab, "tfidf")
    x = np.hstack([x, np.ones((len(examples), 1))])
    y = np.array([e.category for e in examples])

    # Merge identical examples into weighted ones, in a canonical order.
    groups: dict[tuple[int, bytes], int] = {}
    for row, label in zip(x, y):
        key = (int(label), row.tobytes())
        groups[key] = groups.get(key, 0) + 1
    keys = sorted(groups)
    xs = np.array([np.frombuffer(k[1]) for k in keys])
    ys = np.array([k[0] for k in keys])
    n_unique = len(keys)
    scale = np.array([groups[k] for k in keys], dtype=float) * n_unique / len(examples)
    signs = np.where(ys[:, None] == np.arange(N_CLASSES)[None, :], 1.0, -1.0)

    w = np.zeros((N_CLASSES, xs.shape[1]))
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n_unique):
            t += 1
            eta = 1.0 / (lam * t)
            xi = xs[i]
            yi = signs[i]
            violated = yi * (w @ xi) < 1.0
            w *= 1.0 - eta * lam
            if violated.any():
                w[violated] += (eta * scale[i]) * yi[violated, None] * xi[None, :]
    return LinearModel(w[:, :-1].copy(), w[:, -1].copy(), prep, vocab, lam, seed, epochs)


def features_for(model: Model, texts: Sequence[str]) -> np.ndarray:
    docs = _prepare_all(texts, model.prep)
    return featurize(docs, model.vocab, model.featurization)


def predict_many(model: Model, texts: Sequence[str]) -> list[int]:
    if not texts:
        return []
    scores = model.scores(features_for(model, texts))
    # argmax returns the first maximum: ties go to the lowest class index.
    return [int(c) for c in np.argmax(scores, axis=1)]


def predict(model: Model, text: str, manual_labels: Optional[dict[str, int]] = None) -> int:
    """Category for one statement; a manual label for the same text takes precedence."""
    if manual_labels:
        manual = manual_labels.get(normalize_text(text))
        if manual is not None:
            return manual
    return predict_many(model, [text])[0]


def manual_label_map(examples: Sequence[LabeledExample]) -> dict[str, int]:
    """Whitespace-normalized text -> label; the first occurrence wins."""
    out: dict[str, int] = {}
    for ex in examples:
        out.setdefault(normalize_text(ex.text), ex.category)
    return out


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassMetrics:
    category: int
    precision: float
    recall: float
    f1: float
    specificity: float
    support: int
    tp: int
    fp: int
    fn: int
    tn: int
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class EvalReport:
    per_class: tuple[ClassMetrics, ...]
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    frequency_weighted_accuracy: float
    n: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["category", "precision", "recall", "f1", "specificity", "support", "flags"])
        for c in self.per_class:
            writer.writerow(
                [c.category, _fmt(c.precision), _fmt(c.recall), _fmt(c.f1),
                 _fmt(c.specificity), c.support, ";".join(c.flags)]
            )
        writer.writerow(["weighted", _fmt(self.weighted_precision), _fmt(self.weighted_recall),
                         _fmt(self.weighted_f1), "", self.n, ""])
        writer.writerow(["accuracy", _fmt(self.accuracy), "", "", "", self.n, ""])
        writer.writerow(["frequency_weighted_accuracy", _fmt(self.frequency_weighted_accuracy),
                         "", "", "", self.n, ""])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _ratio(num: int, den: int, flag: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(flag)
        return 0.0
    return num / den


def evaluate(
    predictions: Sequence[int],
    gold: Sequence[int],
    frequencies: Optional[Sequence[int]] = None,
    classes: Sequence[int] = CATEGORIES,
) -> EvalReport:
    if len(predictions) != len(gold):
        raise ValueError("predictions and gold differ in length")
    if not gold:
        raise ValueError("empty evaluation set")
    pred = np.asarray(predictions)
    true = np.asarray(gold)
    freq = np.ones(len(true)) if frequencies is None else np.asarray(frequencies, dtype=float)
    n = len(true)
    per_class = []
    for c in classes:
        tp = int(np.sum((pred == c) & (true == c)))
        fp = int(np.sum((pred == c) & (true != c)))
        fn = int(np.sum((pred != c) & (true == c)))
        tn = n - tp - fp - fn
        flags: list[str] = []
        precision = _ratio(tp, tp + fp, "no_predicted_positives", flags)
        recall = _ratio(tp, tp + fn, "no_support", flags)
        specificity = _ratio(tn, tn + fp, "no_negatives", flags)
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class.append(
            ClassMetrics(c, precision, recall, f1, specificity, tp + fn, tp, fp, fn, tn, tuple(flags))
        )
    supports = np.array([m.support for m in per_class], dtype=float)
    weights = supports / supports.sum()
    correct = pred == true
    return EvalReport(
        per_class=tuple(per_class),
        accuracy=float(correct.mean()),
        weighted_precision=float(weights @ [m.precision for m in per_class]),
        weighted_recall=float(weights @ [m.recall for m in per_class]),
        weighted_f1=float(weights @ [m.f1 for m in per_class]),
        frequency_weighted_accuracy=float(freq @ correct / freq.sum()),
        n=n,
    )


# ---------------------------------------------------------------------------
# Split and grid search
# ---------------------------------------------------------------------------


def stratified_split(
    examples: Sequence[LabeledExample], seed: int = 42, test_fraction: float = 0.2
) -> tuple[list[int], list[int]]:
    """Stratified (train, test) index lists.

    The test set has ``round(test_fraction * n)`` items; per-class quotas are
    allocated by largest remainder, ties to the lower class.
    """
    labels = np.array([e.category for e in examples])
    n_test = int(round(test_fraction * len(examples)))
    present = sorted(set(labels.tolist()))
    exact = {c: test_fraction * np.sum(labels == c) for c in present}
    quota = {c: int(np.floor(exact[c])) for c in present}
    leftover = n_test - sum(quota.values())
    for c in sorted(present, key=lambda c: (-(exact[c] - quota[c]), c))[:leftover]:
        quota[c] += 1
    rng = np.random.default_rng(seed)
    test: list[int] = []
    for c in present:
        idx = np.flatnonzero(labels == c)
        test.extend(rng.permutation(idx)[: quota[c]].tolist())
    test_set = set(test)
    train = [i for i in range(len(examples)) if i not in test_set]
    return train, sorted(test)


@dataclass(frozen=True)
class GridCell:
    classifier: str
    prep: PrepConfig
    accuracy: float

    @property
    def rank_key(self):
        return (
            self.accuracy,
            _CLASSIFIER_RANK[self.classifier],
            self.prep.stemming,
            not self.prep.stopword_filter,
        )


@dataclass
class GridResult:
    model: Model
    config: GridCell
    accuracy: float
    cells: list[GridCell] = field(default_factory=list)
    train_index: list[int] = field(default_factory=list)
    test_index: list[int] = field(default_factory=list)


def train_classifier(
    classifier: str,
    examples: Sequence[LabeledExample],
    prep: PrepConfig,
    lam: float = 1e-4,
    seed: int = 42,
    epochs: int = 100,
) -> Model:
    if classifier == "svm":
        return train_svm(examples, prep, lam=lam, seed=seed, epochs=epochs)
    if classifier in ("nb_bow", "nb_tfidf"):
        return train_nb(examples, classifier.split("_")[1], prep)
    raise ValueError(f"unknown classifier {classifier!r}")


def grid_search(
    examples: Sequence[LabeledExample],
    classifiers: Sequence[str] = CLASSIFIERS,
    split_seed: int = 42,
    lam: float = 1e-4,
    seed: int = 42,
    epochs: int = 100,
    threads: int = 1,
) -> GridResult:
    """Train every classifier x {stop-word filter} x {stemming} cell on one split.

    Ties in held-out accuracy prefer svm > nb_tfidf > nb_bow, then stemming
    on, then stop-word filter off.
    """
    if len(examples) < 20:
        raise ValueError("grid search needs at least 20 examples")
    train_idx, test_idx = stratified_split(examples, split_seed)
    train = [examples[i] for i in train_idx]
    test = [examples[i] for i in test_idx]
    gold = [e.category for e in test]

    grid = [
        (clf, PrepConfig(stopword_filter=stop, stemming=stem_))
        for clf in classifiers
        for stop in (False, True)
        for stem_ in (False, True)
    ]

    def run(cell):
        clf, prep = cell
        model = train_classifier(clf, train, prep, lam=lam, seed=seed, epochs=epochs)
        acc = float(np.mean(np.array(predict_many(model, [e.text for e in test])) == gold))
        return model, GridCell(clf, prep, acc)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, grid))
    else:
        results = [run(c) for c in grid]
    for _, cell in results:
        log.info("grid %s %s accuracy=%.4f", cell.classifier, cell.prep.tag, cell.accuracy)
    best_model, best = max(results, key=lambda r: r[1].rank_key)
    return GridResult(best_model, best, best.accuracy, [c for _, c in results], train_idx, test_idx)


# ---------------------------------------------------------------------------
# Model file
# ---------------------------------------------------------------------------


def save_model(model: Model, path: str | Path, extra: Optional[dict] = None) -> None:
    Path(path).write_bytes(model_to_bytes(model, extra))


def model_to_bytes(model: Model, extra: Optional[dict] = None) -> bytes:
    """Magic, version, header length, JSON header, then little-endian float64 arrays."""
    if isinstance(model, NBModel):
        arrays = [model.log_priors, model.log_likelihoods]
        params = {"alpha": model.alpha}
    else:
        arrays = [model.weights, model.bias]
        params = {"lambda": model.lam, "seed": model.seed, "epochs": model.epochs}
    header = {
        "kind": model.kind,
        "featurization": model.featurization,
        "prep": model.prep.to_dict(),
        "params": params,
        "vocabulary": model.vocab.to_text(),
        "arrays": [list(a.shape) for a in arrays],
        "extra": extra or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    return MODEL_MAGIC + struct.pack("<IQ", MODEL_VERSION, len(blob)) + blob + body


def load_model(path: str | Path) -> tuple[Model, dict]:
    return model_from_bytes(Path(path).read_bytes())


def model_from_bytes(data: bytes) -> tuple[Model, dict]:
    if data[:8] != MODEL_MAGIC:
        raise ValueError("not a dascite model file")
    version, size = struct.unpack("<IQ", data[8:20])
    if version != MODEL_VERSION:
        raise ValueError(f"unsupported model version {version}")
    header = json.loads(data[20 : 20 + size])
    offset = 20 + size
    arrays = []
    for shape in header["arrays"]:
        count = int(np.prod(shape))
        arrays.append(np.frombuffer(data, "<f8", count, offset).reshape(shape).copy())
        offset += 8 * count
    prep = PrepConfig.from_dict(header["prep"])
    vocab = Vocabulary.from_text(header["vocabulary"])
    p = header["params"]
    if header["kind"] == "nb":
        model: Model = NBModel(arrays[0], arrays[1], header["featurization"], prep, vocab, p["alpha"])
    else:
        model = LinearModel(arrays[0], arrays[1], prep, vocab, p["lambda"], p["seed"], p["epochs"])
    return model, header["extra"]
