"""Regression dataset assembly, descriptive statistics and correlation matrices."""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .das import DasStatement
from .graph import (
    AuthorKey,
    AuthorProfile,
    AuthorlessArticle,
    CitationIndex,
    article_author_hstats,
    citations_in_window,
)
from .ingest import ArticleRecord, Publisher, normalize_title

log = logging.getLogger(__name__)

UNCLASSIFIED = "Unclassified"
WINDOWS = (2, 3, 5)

DESCRIPTIVE_VARIABLES = (
    "n_cit_2",
    "n_cit_3",
    "n_cit_5",
    "n_cit_tot",
    "n_authors",
    "n_references_tot",
    "p_year",
    "p_month",
    "h_index_median",
    "h_index_mean",
)


class EmptyTable(ValueError):
    pass


@dataclass(frozen=True)
class FieldTaxonomy:
    fields: Mapping[str, tuple[str, str, str]]  # normalized title -> (domain, field, subfield)

    def field_of(self, journal_title: str) -> Optional[str]:
        entry = self.fields.get(normalize_title(journal_title))
        return entry[1] if entry else None

    @classmethod
    def from_csv(cls, path: str | Path) -> "FieldTaxonomy":
        out = {}
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            need = {"journal_title", "domain", "field", "subfield"}
            if not need <= set(reader.fieldnames or ()):
                raise ValueError(f"{path}: need columns {sorted(need)}")
            for row in reader:
                out[normalize_title(row["journal_title"])] = (
                    row["domain"].strip(), row["field"].strip(), row["subfield"].strip()
                )
        return cls(out)


@dataclass(frozen=True)
class AnalysisEntry:
    """Per analysis-set article: its statement (if any) and policy flags."""

    das: Optional[DasStatement]
    das_encouraged: bool
    das_required: bool


@dataclass(frozen=True)
class RegressionRow:
    article_key: str
    journal_title: str
    window: int
    n_cit_2: int
    n_cit_3: int
    n_cit_5: int
    n_cit_tot: int
    n_authors: int
    n_references_tot: int
    p_year: int
    p_month: int
    h_index_mean: float
    h_index_median: float
    das_category: Optional[int]
    is_plos: bool
    das_encouraged: bool
    das_required: bool
    journal_field: str

    @property
    def n_cit_y(self) -> int:
        return getattr(self, f"n_cit_{self.window}")

    @property
    def ln_n_cit_y(self) -> float:
        return math.log(self.n_cit_y + 1)

    @property
    def ln_n_authors(self) -> float:
        return math.log(self.n_authors)

    @property
    def ln_n_references_tot(self) -> float:
        return math.log(self.n_references_tot + 1)

    @property
    def ln_h_index_mean(self) -> float:
        return math.log(self.h_index_mean + 1)

    def value(self, name: str) -> float:
        if name == f"ln_n_cit_{self.window}":
            return self.ln_n_cit_y
        return float(getattr(self, name))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionRow":
        return cls(**d)


_BASE_COLUMNS = [f.name for f in fields(RegressionRow)]


def dataset_columns(window: int) -> list[str]:
    return _BASE_COLUMNS + [
        f"ln_n_cit_{window}",
        "ln_n_authors",
        "ln_n_references_tot",
        "ln_h_index_mean",
    ]


def correlation_variables(window: int) -> list[str]:
    return [
        f"ln_n_cit_{window}",
        "ln_n_authors",
        "p_year",
        "p_month",
        "ln_h_index_mean",
        "h_index_median",
        "ln_n_references_tot",
    ]


def build_table(
    analysis_records: Sequence[ArticleRecord],
    entries: Mapping[str, AnalysisEntry],
    index: CitationIndex,
    profiles: Mapping[AuthorKey, AuthorProfile],
    taxonomy: FieldTaxonomy,
    window_years: int = 3,
    corpus_end: Optional[int] = None,
    inclusive_h_index: bool = False,
) -> list[RegressionRow]:
    """One row per analysis article published by ``corpus_end - window_years``.

    ``corpus_end`` defaults to the latest publication year in the citation index.
    """
    if window_years not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}")
    if corpus_end is None:
        corpus_end = max(m // 12 for m in index.pub_month_index.values())
    cutoff_year = corpus_end - window_years
    unmapped: Counter[str] = Counter()
    rows = []
    for rec in analysis_records:
        if rec.pub_year > cutoff_year:
            continue
        entry = entries.get(rec.key, AnalysisEntry(None, False, False))
        if entry.das is not None and entry.das.category is None:
            raise ValueError(f"statement of {rec.key} has no category; run classify first")
        try:
            h_mean, h_median = article_author_hstats(rec, profiles, index, inclusive_h_index)
        except AuthorlessArticle:
            log.warning("skipping %s: no authors", rec.key)
            continue
        journal_field = taxonomy.field_of(rec.journal_title)
        if journal_field is None:
            unmapped[rec.journal_title] += 1
            journal_field = UNCLASSIFIED
        rows.append(
            RegressionRow(
                article_key=rec.key,
                journal_title=rec.journal_title,
                window=window_years,
                n_cit_2=citations_in_window(rec, index, 2),
                n_cit_3=citations_in_window(rec, index, 3),
                n_cit_5=citations_in_window(rec, index, 5),
                n_cit_tot=index.total(rec.key),
                n_authors=rec.n_authors,
                n_references_tot=rec.n_references_total,
                p_year=rec.pub_year,
                p_month=rec.month_or_default,
                h_index_mean=h_mean,
                h_index_median=h_median,
                das_category=None if entry.das is None else entry.das.category,
                is_plos=rec.publisher is Publisher.PLOS,
                das_encouraged=entry.das_encouraged,
                das_required=entry.das_required,
                journal_field=journal_field,
            )
        )
    for journal, count in sorted(unmapped.items()):
        log.warning("journal %r missing from taxonomy (%d rows): %s", journal, count, UNCLASSIFIED)
    return sorted(rows, key=lambda r: r.article_key)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dataset_csv(rows: Sequence[RegressionRow], window: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    columns = dataset_columns(window)
    writer.writerow(columns)
    for row in rows:
        d = row.to_dict()
        writer.writerow([_cell(d[c]) if c in d else _cell(row.value(c)) for c in columns])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Descriptive:
    minimum: float
    median: float
    mean: float
    maximum: float


def descriptive_stats(
    rows: Sequence[RegressionRow], variables: Sequence[str] = DESCRIPTIVE_VARIABLES
) -> dict[str, Descriptive]:
    """(min, median, mean, max) of untransformed variables."""
    if not rows:
        raise EmptyTable("no rows")
    out = {}
    for name in variables:
        col = np.array([row.value(name) for row in rows])
        out[name] = Descriptive(float(col.min()), float(np.median(col)), float(col.mean()), float(col.max()))
    return out


@dataclass(frozen=True)
class CorrelationMatrix:
    variables: tuple[str, ...]
    values: np.ndarray  # undefined entries hold 0.0
    defined: np.ndarray  # bool mask
    method: str


def pearson_matrix(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Product-moment correlations of the columns of ``data``.

    Columns with zero variance give undefined entries (mask False, value 0).
    """
    centered = data - data.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    defined_col = norms > 0
    safe = np.where(defined_col, norms, 1.0)
    z = centered / safe
    corr = z.T @ z
    defined = np.outer(defined_col, defined_col)
    corr = np.where(defined, np.clip(corr, -1.0, 1.0), 0.0)
    np.fill_diagonal(corr, np.where(defined_col, 1.0, 0.0))
    corr = (corr + corr.T) / 2
    return corr, defined


def average_ranks(column: np.ndarray) -> np.ndarray:
    return rankdata(column, method="average")


def correlation_matrix(
    rows_or_data, method: str = "pearson", variables: Optional[Sequence[str]] = None
) -> CorrelationMatrix:
    """Pearson or Spearman (Pearson on average ranks) correlation matrix."""
    if isinstance(rows_or_data, np.ndarray):
        data = np.asarray(rows_or_data, dtype=float)
        variables = tuple(variables or (f"x{i}" for i in range(data.shape[1])))
    else:
        rows = list(rows_or_data)
        if variables is None:
            variables = correlation_variables(rows[0].window)
        data = np.array([[row.value(v) for v in variables] for row in rows], dtype=float)
    if data.shape[0] < 2:
        raise ValueError("need at least two rows")
    if method == "spearman":
        data = np.column_stack([average_ranks(data[:, j]) for j in range(data.shape[1])])
    elif method != "pearson":
        raise ValueError(f"unknown method {method!r}")
    values, defined = pearson_matrix(data)
    return CorrelationMatrix(tuple(variables), values, defined, method)


def _corr_cell(m: CorrelationMatrix, i: int, j: int) -> str:
    return f"{m.values[i, j]:.6f}" if m.defined[i, j] else "NA"


def correlation_table_csv(pearson: CorrelationMatrix, spearman: CorrelationMatrix) -> str:
    """Spearman above the diagonal, Pearson below, blank diagonal."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["variable", *pearson.variables])
    k = len(pearson.variables)
    for i, name in enumerate(pearson.variables):
        cells = []
        for j in range(k):
            if i == j:
                cells.append("")
            elif j > i:
                cells.append(_corr_cell(spearman, i, j))
            else:
                cells.append(_corr_cell(pearson, i, j))
        writer.writerow([name, *cells])
    return buf.getvalue()


def descriptives_csv(stats: Mapping[str, Descriptive]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["variable", "minimum", "median", "mean", "maximum"])
    for name, d in stats.items():
        writer.writerow([name, *(f"{v:.6g}" for v in (d.minimum, d.median, d.mean, d.maximum))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Statements over time
# ---------------------------------------------------------------------------

DEFAULT_JOURNAL_GROUPS = ("BMC Genomics", "Trials", "Parasites & Vectors")


def journal_groups(record: ArticleRecord, extra_journals: Sequence[str] = DEFAULT_JOURNAL_GROUPS) -> list[str]:
    title = record.journal_title.strip()
    groups = []
    if record.publisher is Publisher.BMC:
        groups.append("BMC")
        if title.casefold().startswith("bmc "):
            groups.append("BMC Series")
    elif record.publisher is Publisher.PLOS:
        groups.append("PLOS")
        groups.append("PLOS ONE" if normalize_title(title) == "plos one" else "PLOS other")
    wanted = {normalize_title(j): j for j in extra_journals}
    if normalize_title(title) in wanted:
        groups.append(f"journal:{wanted[normalize_title(title)]}")
    return groups


def das_over_time(
    analysis_records: Iterable[ArticleRecord],
    entries: Mapping[str, AnalysisEntry],
    extra_journals: Sequence[str] = DEFAULT_JOURNAL_GROUPS,
) -> list[tuple[str, int, str, int]]:
    """(group, year, category, count) rows; category is "none" or "0".."3"."""
    counts: Counter[tuple[str, int, str]] = Counter()
    for rec in analysis_records:
        entry = entries.get(rec.key)
        das = entry.das if entry else None
        if das is None:
            category = "none"
        else:
            category = "unclassified" if das.category is None else str(das.category)
        for group in journal_groups(rec, extra_journals):
            counts[(group, rec.pub_year, category)] += 1
    return [(g, y, c, n) for (g, y, c), n in sorted(counts.items())]


def das_over_time_csv(rows: Sequence[tuple[str, int, str, int]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["group", "year", "category", "count"])
    writer.writerows(rows)
    return buf.getvalue()
