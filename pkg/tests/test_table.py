import csv
import io
import math
import random
import statistics

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dascite.das import DasStatement
from dascite.graph import build_author_profiles, build_citation_index
from dascite.table import (
    UNCLASSIFIED,
    AnalysisEntry,
    EmptyTable,
    FieldTaxonomy,
    RegressionRow,
    average_ranks,
    build_table,
    correlation_matrix,
    correlation_table_csv,
    das_over_time,
    dataset_csv,
    dataset_columns,
    descriptive_stats,
)

from helpers import h_oracle, random_corpus, record, window_oracle

TAXONOMY = FieldTaxonomy({"plos one": ("Natural Sciences", "General Science & Technology", "General")})


def _row(**kw):
    base = dict(
        article_key="doi:x", journal_title="PLOS ONE", window=3, n_cit_2=0, n_cit_3=0, n_cit_5=0,
        n_cit_tot=0, n_authors=1, n_references_tot=1, p_year=2014, p_month=6, h_index_mean=0.0,
        h_index_median=0.0, das_category=None, is_plos=True, das_encouraged=False,
        das_required=False, journal_field="General Science & Technology",
    )
    base.update(kw)
    return RegressionRow(**base)


def test_log_transforms():
    row = _row()
    assert (row.ln_n_cit_y, row.ln_n_authors, row.ln_n_references_tot) == (0.0, 0.0, math.log(2))


def _entries(records, rng):
    out = {}
    for rec in records:
        cat = rng.choice([None, 0, 1, 2, 3])
        das = None if cat is None else DasStatement(rec.id, "text", "plos_section", "Data Availability", cat, "predicted")
        out[rec.key] = AnalysisEntry(das, rng.random() < 0.3, rng.random() < 0.5)
    return out


def test_rows_match_recomputation():
    rng = random.Random(8)
    records = random_corpus(rng, 100, years=(2008, 2016))
    records.append(record(999, 2009, 3, authors=()))
    entries = _entries(records, rng)
    index = build_citation_index(records)
    rows = build_table(records, entries, index, build_author_profiles(records), TAXONOMY, 3, corpus_end=2016)
    by_key = {r.key: r for r in records}
    assert all(r.p_year <= 2013 for r in rows)
    assert len(rows) == sum(1 for r in records if r.pub_year <= 2013 and r.authors)
    for row in rows:
        rec = by_key[row.article_key]
        for y in (2, 3, 5):
            assert getattr(row, f"n_cit_{y}") == window_oracle(records, rec, y)
        assert row.n_cit_2 <= row.n_cit_3 <= row.n_cit_5 <= row.n_cit_tot
        hs = sorted(
            h_oracle(records, a, (rec.pub_year, rec.pub_month))
            for a in {(" ".join(g.split()).lower(), " ".join(s.split()).lower()) for g, s in rec.authors}
        )
        assert row.h_index_mean == pytest.approx(statistics.fmean(hs), abs=1e-12)
        assert row.h_index_median == statistics.median(hs)
        assert row.p_month == (rec.pub_month or 6)
        entry = entries[rec.key]
        assert row.das_category == (None if entry.das is None else entry.das.category)
        assert (row.das_encouraged, row.das_required) == (entry.das_encouraged, entry.das_required)
        for v in (row.ln_n_cit_y, row.ln_n_authors, row.ln_n_references_tot, row.ln_h_index_mean):
            assert math.isfinite(v) and v >= 0


def test_unclassified_journal_and_missing_category():
    recs = [record(0, 2010, 1, journal="Trials")]
    index = build_citation_index(recs)
    rows = build_table(recs, {}, index, build_author_profiles(recs), TAXONOMY, 2, corpus_end=2015)
    assert rows[0].journal_field == UNCLASSIFIED and not rows[0].is_plos
    bad = {recs[0].key: AnalysisEntry(DasStatement(recs[0].id, "t", "bmc_section", "x"), False, False)}
    with pytest.raises(ValueError):
        build_table(recs, bad, index, build_author_profiles(recs), TAXONOMY, 2, corpus_end=2015)
    with pytest.raises(ValueError):
        build_table(recs, {}, index, build_author_profiles(recs), TAXONOMY, 4)


def test_dataset_csv_shape():
    rows = [_row(article_key="a"), _row(article_key="b", das_category=3, n_cit_3=4)]
    text = dataset_csv(rows, 3)
    parsed = list(csv.reader(io.StringIO(text)))
    assert parsed[0] == dataset_columns(3)
    assert parsed[2][parsed[0].index("das_category")] == "3"
    assert parsed[1][parsed[0].index("das_category")] == ""
    assert float(parsed[2][parsed[0].index("ln_n_cit_3")]) == math.log(5)
    assert RegressionRow.from_dict(rows[1].to_dict()) == rows[1]


def test_descriptives_constant_and_empty():
    stats = descriptive_stats([_row(n_references_tot=7) for _ in range(3)], ["n_references_tot"])
    d = stats["n_references_tot"]
    assert (d.minimum, d.median, d.mean, d.maximum) == (7, 7, 7, 7)
    with pytest.raises(EmptyTable):
        descriptive_stats([])


@given(st.lists(st.integers(0, 50), min_size=1, max_size=40))
def test_descriptives_sort_oracle(values):
    stats = descriptive_stats([_row(n_cit_3=v) for v in values], ["n_cit_3"])["n_cit_3"]
    s = sorted(values)
    n = len(s)
    median = s[n // 2] if n % 2 else (s[n // 2 - 1] + s[n // 2]) / 2
    total = 0
    for v in s:
        total += v
    assert (stats.minimum, stats.maximum, stats.median) == (s[0], s[-1], median)
    assert stats.mean == pytest.approx(total / n, rel=1e-12)


def _rank_oracle(col):
    out = []
    for v in col:
        less = sum(1 for u in col if u < v)
        equal = sum(1 for u in col if u == v)
        out.append(less + (equal + 1) / 2)
    return np.array(out)


def test_average_ranks_with_ties():
    assert average_ranks(np.array([10, 20, 20, 5])).tolist() == [2.0, 3.5, 3.5, 1.0]


def test_correlation_basics():
    x = np.arange(10.0)
    m = correlation_matrix(np.column_stack([x, 2 * x + 3, x**3, np.ones(10)]), "spearman")
    assert m.values[0, 0] == 1.0
    assert m.values[0, 1] == pytest.approx(1.0) and m.values[0, 2] == pytest.approx(1.0)
    assert not m.defined[0, 3] and m.values[0, 3] == 0.0
    p = correlation_matrix(np.column_stack([x, 2 * x + 3]), "pearson")
    assert p.values[0, 1] == pytest.approx(1.0)


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(-300, 300).map(lambda v: v / 100)), min_size=3, max_size=30))
def test_spearman_invariant_under_monotone_transform(pairs):
    data = np.array(pairs, dtype=float)
    transformed = np.column_stack([np.exp(data[:, 0]), data[:, 1] ** 3 + 7])
    a = correlation_matrix(data, "spearman")
    b = correlation_matrix(transformed, "spearman")
    assert np.array_equal(a.defined, b.defined)
    assert np.allclose(a.values, b.values, atol=1e-12)


def test_correlation_table_layout():
    rng = np.random.default_rng(0)
    data = rng.normal(size=(30, 3))
    data[:, 2] = np.exp(data[:, 0])  # monotone in column 0: Spearman 1, Pearson < 1
    p = correlation_matrix(data, "pearson", ["a", "b", "c"])
    s = correlation_matrix(data, "spearman", ["a", "b", "c"])
    table = list(csv.reader(io.StringIO(correlation_table_csv(p, s))))
    assert table[0] == ["variable", "a", "b", "c"]
    assert table[1][3] == "1.000000"  # Spearman above
    assert float(table[3][1]) == pytest.approx(p.values[2, 0], abs=1e-6) and table[3][1] != "1.000000"
    assert [table[i][i] for i in (1, 2, 3)] == ["", "", ""]


def test_das_over_time_groups():
    recs = [record(0, 2015, 1, journal="PLOS ONE"), record(1, 2016, 1, journal="Trials"),
            record(2, 2016, 1, journal="BMC Genomics")]
    entries = {recs[1].key: AnalysisEntry(DasStatement(recs[1].id, "t", "bmc_section", "x", 2), False, True)}
    rows = das_over_time(recs, entries)
    assert ("PLOS ONE", 2015, "none", 1) in rows
    assert ("journal:Trials", 2016, "2", 1) in rows
    assert ("BMC Series", 2016, "none", 1) in rows
    assert ("BMC", 2016, "none", 1) in rows and ("BMC", 2016, "2", 1) in rows
