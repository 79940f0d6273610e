"""Author profiles, within-collection citations, citation windows and H-index."""

from __future__ import annotations

import bisect
import re
import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .ingest import ArticleRecord

_WS = re.compile(r"\s+")

DEFAULT_MONTH = 6


class AuthorlessArticle(ValueError):
    pass


def month_index(year: int, month: Optional[int]) -> int:
    """Months since year 0; a missing month counts as June."""
    return year * 12 + ((month if month is not None else DEFAULT_MONTH) - 1)


def months_between(y1: int, m1: Optional[int], y2: int, m2: Optional[int]) -> int:
    return month_index(y2, m2) - month_index(y1, m1)


@dataclass(frozen=True, order=True)
class AuthorKey:
    given_name: str
    surname: str

    @classmethod
    def of(cls, given_name: str, surname: str) -> "AuthorKey":
        norm = lambda s: _WS.sub(" ", s).strip().lower()  # noqa: E731
        return cls(norm(given_name), norm(surname))


@dataclass
class AuthorProfile:
    key: AuthorKey
    # (record key, pub_year, pub_month) sorted by date then key
    publications: list[tuple[str, int, Optional[int]]] = field(default_factory=list)


@dataclass
class CitationIndex:
    """cited record key -> sorted list of (citing month index, citing record key)."""

    cited_by: dict[str, list[tuple[int, str]]]
    pub_month_index: dict[str, int]

    def citers(self, key: str) -> list[tuple[int, str]]:
        return self.cited_by.get(key, [])

    def total(self, key: str) -> int:
        return len(self.citers(key))

    def count_before(self, key: str, cutoff: int, inclusive: bool = False) -> int:
        """Citations from articles published before month index ``cutoff``."""
        months = [m for m, _ in self.citers(key)]
        return (bisect.bisect_right if inclusive else bisect.bisect_left)(months, cutoff)

    def edges(self) -> list[tuple[str, str]]:
        """(citing, cited) pairs sorted by cited then citing date."""
        return [(citing, cited) for cited in sorted(self.cited_by) for _, citing in self.cited_by[cited]]


def _lookup(records: Sequence[ArticleRecord]) -> dict[tuple[str, str], str]:
    table: dict[tuple[str, str], str] = {}
    for rec in records:
        for item in rec.id.items():
            table.setdefault(item, rec.key)
    return table


def build_citation_index(records: Sequence[ArticleRecord]) -> CitationIndex:
    """One edge per (citing, cited) pair of retained records; no self-citations."""
    lookup = _lookup(records)
    dates = {rec.key: month_index(rec.pub_year, rec.pub_month) for rec in records}
    cited_by: dict[str, set[str]] = defaultdict(set)
    for rec in records:
        for ref in rec.references:
            target = next((lookup[item] for item in ref.items() if item in lookup), None)
            if target is not None and target != rec.key:
                cited_by[target].add(rec.key)
    return CitationIndex(
        {k: sorted((dates[c], c) for c in v) for k, v in sorted(cited_by.items())},
        dates,
    )


def citations_in_window(record: ArticleRecord, index: CitationIndex, years: int) -> int:
    """Citers published 0..12*years months after the article, endpoint inclusive."""
    start = month_index(record.pub_year, record.pub_month)
    months = [m for m, _ in index.citers(record.key)]
    lo = bisect.bisect_left(months, start)
    hi = bisect.bisect_right(months, start + 12 * years)
    return hi - lo


def build_author_profiles(records: Iterable[ArticleRecord]) -> dict[AuthorKey, AuthorProfile]:
    profiles: dict[AuthorKey, AuthorProfile] = {}
    for rec in records:
        for key in {AuthorKey.of(g, s) for g, s in rec.authors}:
            profiles.setdefault(key, AuthorProfile(key)).publications.append(
                (rec.key, rec.pub_year, rec.pub_month)
            )
    for profile in profiles.values():
        profile.publications.sort(key=lambda p: (month_index(p[1], p[2]), p[0]))
    return dict(sorted(profiles.items()))


def h_index(citation_counts: Iterable[int]) -> int:
    counts = sorted(citation_counts, reverse=True)
    h = 0
    while h < len(counts) and counts[h] >= h + 1:
        h += 1
    return h


def h_index_at(
    author: AuthorProfile,
    cutoff: tuple[int, Optional[int]],
    index: CitationIndex,
    inclusive: bool = False,
) -> int:
    """H-index from papers, and citations to them, dated before ``cutoff``.

    With ``inclusive`` the cutoff month itself counts as "before".
    """
    limit = month_index(*cutoff)
    counts = []
    for key, year, month in author.publications:
        m = month_index(year, month)
        if m > limit or (m == limit and not inclusive):
            break
        counts.append(index.count_before(key, limit, inclusive))
    return h_index(counts)


def article_author_hstats(
    record: ArticleRecord,
    profiles: dict[AuthorKey, AuthorProfile],
    index: CitationIndex,
    inclusive: bool = False,
) -> tuple[float, float]:
    """(mean, median) H-index of the article's authors at its publication month."""
    keys = sorted({AuthorKey.of(g, s) for g, s in record.authors})
    if not keys:
        raise AuthorlessArticle(record.key)
    cutoff = (record.pub_year, record.pub_month)
    values = [h_index_at(profiles[k], cutoff, index, inclusive) for k in keys]
    return statistics.fmean(values), float(statistics.median(values))
