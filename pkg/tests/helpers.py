"""Random record corpora and brute-force oracles shared by the tests."""

import random

from dascite.ingest import ArticleId, ArticleRecord, ArticleType, Publisher

NAMES = [("Ana", "Silva"), ("ana", "SILVA "), ("Bo", "Chen"), ("Cy", "Okafor"), ("Di", "Novak"),
         ("Ed", "Park"), ("Fa", "Ruiz"), ("Gu", "Berg"), ("Hi", "Sato"), ("Io", "Kaya")]


def record(i, year, month, authors=(("A", "B"),), cites=(), journal="PLOS ONE", n_refs=None):
    refs = tuple(ArticleId.create(doi=f"10.1/a{j}") for j in cites)
    return ArticleRecord(
        id=ArticleId.create(doi=f"10.1/a{i}"),
        journal_title=journal,
        pub_year=year,
        pub_month=month,
        publisher=Publisher.PLOS if journal.startswith("PLOS") else Publisher.BMC,
        authors=tuple(authors),
        references=refs,
        n_references_total=n_refs if n_refs is not None else max(len(refs), 1),
        article_type=ArticleType.RESEARCH,
        das_candidates=(),
    )


def random_corpus(rng: random.Random, n: int, n_authors: int = 10, years=(2008, 2018), p_missing_month=0.1):
    out = []
    for i in range(n):
        year = rng.randint(*years)
        month = None if rng.random() < p_missing_month else rng.randint(1, 12)
        authors = rng.sample(NAMES[:n_authors], rng.randint(1, min(4, n_authors)))
        cites = rng.sample(range(n), min(n, rng.randint(0, 8)))
        out.append(record(i, year, month, authors, cites))
    return out


def mi(year, month):
    return year * 12 + (6 if month is None else month) - 1


def citers_oracle(records, target):
    """Distinct records whose references hit ``target`` (self excluded)."""
    doi = target.id.doi
    return {r.key for r in records if r.key != target.key and any(ref.doi == doi for ref in r.references)}


def window_oracle(records, target, years):
    by_key = {r.key: r for r in records}
    start = mi(target.pub_year, target.pub_month)
    return sum(
        0 <= mi(by_key[c].pub_year, by_key[c].pub_month) - start <= 12 * years
        for c in citers_oracle(records, target)
    )


def h_oracle(records, author, cutoff, inclusive=False):
    lim = mi(*cutoff)
    before = (lambda m: m <= lim) if inclusive else (lambda m: m < lim)
    norm = lambda s: " ".join(s.split()).lower()  # noqa: E731
    g, s = norm(author[0]), norm(author[1])
    by_key = {r.key: r for r in records}
    papers = [
        r for r in records
        if any((norm(a), norm(b)) == (g, s) for a, b in r.authors) and before(mi(r.pub_year, r.pub_month))
    ]
    counts = [
        sum(before(mi(by_key[c].pub_year, by_key[c].pub_month)) for c in citers_oracle(records, p))
        for p in papers
    ]
    return max([h for h in range(len(counts) + 1) if sum(c >= h for c in counts) >= h])
