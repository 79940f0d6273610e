"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error (missing inputs,
missing store sections, malformed files).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

from . import classify as clf
from .das import ExtractionRules, attach_policy_flags, extract_das, normalize_text
from .graph import build_author_profiles, build_citation_index
from .ingest import JournalPolicyTable, filter_analysis_set, ingest_paths
from .regression import (
    Formula,
    RankDeficient,
    coefficient_csv,
    coefficient_text,
    das_column,
    effect_size,
    encode_design,
    fit_ols,
    fit_robust,
)
from .store import ENV_STORE, Store, StoreError
from .table import (
    DEFAULT_JOURNAL_GROUPS,
    WINDOWS,
    AnalysisEntry,
    FieldTaxonomy,
    build_table,
    correlation_matrix,
    correlation_table_csv,
    das_over_time,
    das_over_time_csv,
    dataset_csv,
    descriptive_stats,
    descriptives_csv,
)
from .text_prep import PrepConfig

log = logging.getLogger("dascite")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
DEFAULT_STORE = "dascite-store"


class DataError(Exception):
    """Problem with input data or store contents; maps to exit code 2."""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class PipelineConfig:
    store: str = DEFAULT_STORE
    journals: Optional[str] = None
    taxonomy: Optional[str] = None
    labels: Optional[str] = None
    rules: Optional[str] = None
    stopword_filter: bool = False
    stemming: bool = True
    window_years: int = 3
    split_seed: int = 42
    svm_seed: int = 42

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        data = json.loads(text)
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def check_files(self, *names: str) -> None:
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise UsageError(f"--{name} is required")
            if not Path(value).is_file():
                raise DataError(f"{name} file not found: {value}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_ingest(args, cfg: PipelineConfig) -> int:
    cfg.check_files("journals")
    table = JournalPolicyTable.from_csv(cfg.journals)
    try:
        result = ingest_paths(args.paths, table, threads=args.threads)
    except FileNotFoundError as exc:
        raise DataError(f"input not found: {exc}") from exc
    for path, rejection in result.rejections:
        log.info("rejected %s: %s", path, rejection.reason)
    for path, message in result.malformed:
        log.warning("malformed XML %s: %s", path, message)
    store = Store(cfg.store)
    with store.writer():
        store.save_records(result.records)
    print(
        f"ingested {len(result.records)} records "
        f"({len(result.rejections)} rejected, {len(result.malformed)} malformed, "
        f"{result.duplicates} duplicates merged)"
    )
    return EXIT_OK


def cmd_extract_das(args, cfg: PipelineConfig) -> int:
    cfg.check_files("journals")
    rules = ExtractionRules.load(cfg.rules) if cfg.rules else ExtractionRules.default()
    table = JournalPolicyTable.from_csv(cfg.journals)
    store = Store(cfg.store)
    analysis = filter_analysis_set(store.load_records(), table)
    entries = {}
    for rec in analysis:
        encouraged, required = attach_policy_flags(rec, table)
        entries[rec.key] = AnalysisEntry(extract_das(rec, rules), encouraged, required)
    with store.writer():
        store.save_analysis(entries)
    n_das = sum(e.das is not None for e in entries.values())
    share = n_das / len(entries) if entries else 0.0
    print(f"analysis set {len(entries)} articles; {n_das} with a statement ({share:.1%})")
    return EXIT_OK


def _prep_from(args, cfg: PipelineConfig) -> PrepConfig:
    return PrepConfig(stopword_filter=cfg.stopword_filter, stemming=cfg.stemming)


def cmd_train(args, cfg: PipelineConfig) -> int:
    cfg.check_files("labels")
    examples = clf.load_labels(cfg.labels)
    log.info("split_seed=%d svm_seed=%d lambda=%g epochs=%d", cfg.split_seed, cfg.svm_seed, args.lam, args.epochs)
    if args.grid:
        result = clf.grid_search(
            examples, split_seed=cfg.split_seed, lam=args.lam, seed=cfg.svm_seed,
            epochs=args.epochs, threads=args.threads,
        )
        for cell in result.cells:
            print(f"{cell.classifier:9s} {cell.prep.tag:20s} accuracy={cell.accuracy:.4f}")
        model, accuracy = result.model, result.accuracy
        name, prep = result.config.classifier, result.config.prep
    else:
        name = args.classifier.replace("-", "_")
        prep = _prep_from(args, cfg)
        train_idx, test_idx = clf.stratified_split(examples, cfg.split_seed)
        model = clf.train_classifier(
            name, [examples[i] for i in train_idx], prep, lam=args.lam, seed=cfg.svm_seed, epochs=args.epochs
        )
        test = [examples[i] for i in test_idx]
        predicted = clf.predict_many(model, [e.text for e in test])
        accuracy = sum(p == e.category for p, e in zip(predicted, test)) / len(test)
    store = Store(cfg.store)
    with store.writer():
        store.write_section("labels", (asdict(e) for e in examples))
        store.write_blob("model", clf.model_to_bytes(model, {"split_seed": cfg.split_seed}))
    print(f"trained {name} ({prep.tag}) vocabulary={len(model.vocab)} held-out accuracy={accuracy:.4f}")
    return EXIT_OK


def _load_model(store: Store):
    try:
        return clf.model_from_bytes(store.read_blob("model"))
    except StoreError as exc:
        raise DataError("model not trained; run `train` first") from exc


def _load_labels(store: Store) -> list[clf.LabeledExample]:
    _, items = store.read_section("labels")
    return [clf.LabeledExample(**d) for d in items]


def cmd_classify(args, cfg: PipelineConfig) -> int:
    store = Store(cfg.store)
    model, _ = _load_model(store)
    manual = clf.manual_label_map(_load_labels(store))
    entries = store.load_analysis()
    keyed = [(k, e) for k, e in sorted(entries.items()) if e.das is not None]
    texts = [e.das.text for _, e in keyed]

    chunks = [texts[i : i + 500] for i in range(0, len(texts), 500)]
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            predicted = [c for part in pool.map(lambda ch: clf.predict_many(model, ch), chunks) for c in part]
    else:
        predicted = [c for ch in chunks for c in clf.predict_many(model, ch)]

    n_manual = 0
    for (key, entry), category in zip(keyed, predicted):
        label = manual.get(normalize_text(entry.das.text))
        origin = "predicted"
        if label is not None:
            category, origin = label, "manual"
            n_manual += 1
        entries[key] = replace(entry, das=replace(entry.das, category=category, category_origin=origin))
    with store.writer():
        store.save_analysis(entries)
    print(f"classified {len(keyed)} statements ({n_manual} from manual labels)")
    return EXIT_OK


def cmd_evaluate(args, cfg: PipelineConfig) -> int:
    store = Store(cfg.store)
    model, extra = _load_model(store)
    examples = _load_labels(store)
    _, test_idx = clf.stratified_split(examples, extra.get("split_seed", cfg.split_seed))
    test = [examples[i] for i in test_idx]
    predicted = clf.predict_many(model, [e.text for e in test])
    report = clf.evaluate(predicted, [e.category for e in test], [e.frequency for e in test])
    text = report.to_csv()
    if args.out:
        _write_text(Path(args.out), text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_build_table(args, cfg: PipelineConfig) -> int:
    cfg.check_files("taxonomy")
    store = Store(cfg.store)
    records = store.load_records()
    if not store.has("das"):
        raise DataError("statements not extracted; run `extract-das` first")
    entries = store.load_analysis()
    analysis = [r for r in records if r.key in entries]
    index = build_citation_index(records)
    profiles = build_author_profiles(records)
    taxonomy = FieldTaxonomy.from_csv(cfg.taxonomy)
    window = cfg.window_years
    try:
        rows = build_table(
            analysis, entries, index, profiles, taxonomy, window,
            corpus_end=args.corpus_end, inclusive_h_index=args.h_index_inclusive,
        )
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    with store.writer():
        store.save_indexes(index, profiles)
        store.save_table(window, rows, {"window": window})
    if args.out:
        _write_text(Path(args.out), dataset_csv(rows, window))
    n_das = sum(r.das_category is not None for r in rows)
    print(f"table window={window}: {len(rows)} rows, {n_das} with a statement; {len(profiles)} authors")
    return EXIT_OK


def _load_table(store: Store, window: int):
    if not store.has(store.table_section(window)):
        raise DataError(f"table not built for window {window}; run `build-table --window {window}`")
    return store.load_table(window)[1]


def cmd_regress(args, cfg: PipelineConfig) -> int:
    store = Store(cfg.store)
    window = cfg.window_years
    rows = _load_table(store, window)
    formula = Formula(window=window, zero_as_reference=args.zero_as_reference)
    try:
        design, y = encode_design(rows, formula)
    except RankDeficient as exc:
        raise DataError(str(exc)) from exc
    fits = []
    if args.method in ("ols", "both"):
        fits.append(fit_ols(design, y))
    if args.method in ("robust", "both"):
        fits.append(fit_robust(design, y, tuning_c=args.huber_c, tol=args.tol, max_iter=args.max_iter))
    text = coefficient_text(fits)
    mean_cit = sum(r.n_cit_y for r in rows) / len(rows)
    term = das_column(3)
    if mean_cit > 0:
        for fit in fits:
            eff = effect_size(fit[term].estimate, mean_cit, fit[term].std_error)
            text += (
                f"{fit.method}: {term} effect {eff.percent:.2f}% (+/- {eff.band:.2f}%) "
                f"over mean n_cit_{window} = {mean_cit:.3f}\n"
            )
    if args.out_dir:
        out = Path(args.out_dir)
        _write_text(out / f"coefficients_w{window}.csv", coefficient_csv(fits))
        _write_text(out / f"coefficients_w{window}.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_report(args, cfg: PipelineConfig) -> int:
    store = Store(cfg.store)
    out = Path(args.out_dir)
    if not store.has("das"):
        raise DataError("statements not extracted; run `extract-das` first")
    records = store.load_records()
    entries = store.load_analysis()
    analysis = [r for r in records if r.key in entries]
    _write_text(out / "das_over_time.csv", das_over_time_csv(das_over_time(analysis, entries, args.journal_group)))

    window = cfg.window_years
    rows = _load_table(store, window)
    _write_text(out / f"descriptives_w{window}.csv", descriptives_csv(descriptive_stats(rows)))
    pearson = correlation_matrix(rows, "pearson")
    spearman = correlation_matrix(rows, "spearman")
    _write_text(out / f"correlations_w{window}.csv", correlation_table_csv(pearson, spearman))
    print(f"reports written to {out}")
    return EXIT_OK


def cmd_export(args, cfg: PipelineConfig) -> int:
    store = Store(cfg.store)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    if args.what == "dataset":
        text = dataset_csv(_load_table(store, cfg.window_years), cfg.window_years)
    else:
        if not store.has("indexes"):
            raise DataError("indexes not built; run `build-table` first")
        citations, authors = store.load_indexes()
        if args.what == "citations":
            writer.writerow(["citing", "cited", "citing_year", "citing_month"])
            for d in citations:
                m = d["citing_month_index"]
                writer.writerow([d["citing"], d["cited"], m // 12, m % 12 + 1])
        else:
            writer.writerow(["given_name", "surname", "article_key", "pub_year", "pub_month"])
            for d in authors:
                for key, year, month in d["publications"]:
                    writer.writerow([d["given_name"], d["surname"], key, year, "" if month is None else month])
        text = buf.getvalue()
    if args.out:
        _write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def global_options(suppress: bool) -> argparse.ArgumentParser:
        # Subcommand copies must not reset values given before the subcommand.
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p = _Parser(add_help=False)
        p.add_argument("--store", default=d(None), help=f"store directory (env {ENV_STORE}; default ./{DEFAULT_STORE})")
        p.add_argument("--config", default=d(None), help="pipeline config JSON providing defaults")
        p.add_argument("--threads", type=int, default=d(1), help="worker threads (results do not depend on it)")
        p.add_argument("-v", "--verbose", action="count", default=d(0))
        return p

    common = global_options(suppress=True)
    parser = _Parser(
        prog="dascite", description="Data availability statement mining pipeline.", parents=[global_options(False)]
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    p = sub.add_parser("ingest", parents=[common], help="parse JATS files into the store")
    p.add_argument("paths", nargs="+")
    p.add_argument("--journals")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract-das", parents=[common], help="extract statements and policy flags")
    p.add_argument("--journals")
    p.add_argument("--rules", help="extraction rules JSON (default: shipped rules)")
    p.set_defaults(func=cmd_extract_das)

    p = sub.add_parser("train", parents=[common], help="train a statement classifier")
    p.add_argument("--labels")
    p.add_argument("--classifier", choices=["nb-bow", "nb-tfidf", "svm"], default="svm")
    p.add_argument("--stem", dest="stemming", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--stopwords", dest="stopword_filter", action=argparse.BooleanOptionalAction, default=None,
                   help="remove stop words before featurization")
    p.add_argument("--seed", dest="svm_seed", type=int)
    p.add_argument("--split-seed", type=int)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--grid", action="store_true", help="grid-search classifiers and preprocessing")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", parents=[common], help="categorize extracted statements")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", parents=[common], help="classification report on the held-out split")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("build-table", parents=[common], help="citation index, H-index and regression table")
    p.add_argument("--window", dest="window_years", type=int, choices=WINDOWS)
    p.add_argument("--taxonomy")
    p.add_argument("--corpus-end", type=int, help="last year of the corpus (default: latest in store)")
    p.add_argument("--h-index-inclusive", action="store_true",
                   help="count same-month papers and citations at the cutoff")
    p.add_argument("--out", help="write dataset CSV here")
    p.set_defaults(func=cmd_build_table)

    p = sub.add_parser("regress", parents=[common], help="fit OLS and robust models")
    p.add_argument("--window", dest="window_years", type=int, choices=WINDOWS)
    p.add_argument("--method", choices=["ols", "robust", "both"], default="both")
    p.add_argument("--huber-c", type=float, default=1.345)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--zero-as-reference", action="store_true",
                   help="fold category 0 into the no-statement reference level")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("report", parents=[common], help="statements over time, descriptives, correlations")
    p.add_argument("--window", dest="window_years", type=int, choices=WINDOWS)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--journal-group", action="append", default=None,
                   help="journal to report separately (repeatable)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("export", parents=[common], help="flat CSV exports")
    p.add_argument("what", choices=["authors", "citations", "dataset"])
    p.add_argument("--window", dest="window_years", type=int, choices=WINDOWS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return parser


_CONFIG_OVERRIDES = ("journals", "taxonomy", "labels", "rules", "stopword_filter", "stemming",
                     "window_years", "split_seed", "svm_seed")


def resolve_config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise DataError(f"config file not found: {path}")
        cfg = PipelineConfig.from_json(path.read_text(encoding="utf-8"))
    elif os.environ.get(ENV_STORE):
        cfg.store = os.environ[ENV_STORE]
    if args.store:
        cfg.store = args.store
    for name in _CONFIG_OVERRIDES:
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        if getattr(args, "journal_group", "unset") is None:
            args.journal_group = list(DEFAULT_JOURNAL_GROUPS)
        logging.basicConfig(
            level=logging.WARNING - 10 * min(args.verbose, 2),
            format="%(levelname)s %(name)s: %(message)s",
        )
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"dascite: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, StoreError, ValueError, OSError) as exc:
        print(f"dascite: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
