"""Deterministic synthetic data: labeled statements and a small JATS corpus.

Used for the shipped fixtures and for tests; nothing here is needed to run
the pipeline on real data.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape

from .classify import LabeledExample, write_labels

# Category exemplars the templates are built around.
EXEMPLARS = {
    0: "No additional data available",
    1: (
        "Supporting information is available in the additional files and further "
        "supporting data is available from the authors on request"
    ),
    2: (
        "The authors confirm that all data underlying the findings are fully available "
        "without restriction. All data are included within the manuscript"
    ),
    3: (
        "The authors confirm that all data underlying the findings are fully available "
        "without restriction. The transcriptome data is deposited at NCBI/Gene Bank as "
        "the TSA accession SRR1151079 and SRR1151080"
    ),
}

_PLOS_OPENER = (
    "The authors confirm that all data underlying the findings are fully available without restriction."
)

_TEMPLATES = {
    0: [
        "No additional data available",
        "No additional data are available",
        "Not applicable",
        "Not applicable.",
        "Data sharing is not applicable to this article as no datasets were generated or analysed during the current study.",
        "Data sharing not applicable to this article as no {datasets} were generated or analysed during the current study.",
        "The {datasets} generated during the current study are not publicly available due to {restriction}.",
        "No {datasets} were generated or analysed in this study.",
        "{datasets_cap} cannot be shared because of {restriction}.",
        "There are no additional data available for this {study}.",
        "Data are not available for sharing owing to {restriction}.",
        "The data are not available.",
    ],
    1: [
        "Supporting information is available in the additional files and further supporting data is available from the authors on request",
        "The {datasets} used and/or analysed during the current {study} are available from the corresponding author on reasonable request.",
        "The {datasets} analysed during the current {study} are available from the {contact} on reasonable request.",
        "Data are available upon request from the {contact}.",
        "{datasets_cap} are available from the {contact} upon reasonable request, subject to {restriction}.",
        "Data cannot be made publicly available due to {restriction}; requests may be sent to the {contact}.",
        "The {datasets} supporting the conclusions of this article are available on request from the {contact}.",
        "Please contact the {contact} for data requests.",
        "Data may be obtained from the {contact} upon request.",
        "Because of {restriction}, {datasets} are available only on request to the {contact}.",
    ],
    2: [
        "{opener} All relevant data are within the paper and its Supporting Information files.",
        "{opener} All data are included within the manuscript",
        "All relevant data are within the paper and its Supporting Information files.",
        "All data generated or analysed during this {study} are included in this published article and its supplementary information files.",
        "All data generated or analysed during this {study} are included in this published article.",
        "The {datasets} supporting the conclusions of this article are included within the article and its additional files.",
        "{opener} All relevant data are within the manuscript and its {supplement}.",
        "The {datasets} supporting the findings of this {study} are included in the article and its {supplement}.",
        "All the data supporting our findings are contained within the manuscript and the {supplement}.",
        "The data underlying this {study} are provided in the {supplement} accompanying the paper.",
    ],
    3: [
        "{opener} The transcriptome data is deposited at NCBI/Gene Bank as the TSA accession {acc} and {acc}",
        "{opener} The {datasets} are available from the {repo} database (accession number {acc}).",
        "The {datasets} generated during the current {study} are available in the {repo} repository, {link}.",
        "{opener} Data are available from the {repo} repository: {link}.",
        "Sequence data have been deposited in {repo} under accession numbers {acc} and {acc}.",
        "The {datasets} supporting the conclusions of this article are available in the {repo} repository, {link}.",
        "{opener} All sequence files are available from the {repo} database (accession number {acc}).",
        "Raw reads were deposited in the {repo} with accession {acc}.",
        "The {datasets} are archived in {repo} at {link}.",
        "{datasets_cap} are publicly available in the {repo} repository under {link}.",
    ],
}

_SLOTS = {
    "datasets": ["datasets", "data", "data sets", "raw data", "underlying data"],
    "restriction": [
        "patient confidentiality",
        "ethical restrictions",
        "privacy concerns",
        "legal restrictions imposed by the ethics committee",
        "third-party licensing restrictions",
        "participant consent limitations",
    ],
    "study": ["study", "work", "trial", "analysis", "project"],
    "contact": [
        "corresponding author",
        "authors",
        "first author",
        "study steering committee",
        "senior investigator",
    ],
    "supplement": [
        "Supporting Information files",
        "supplementary materials",
        "additional files",
        "supplementary tables",
    ],
    "repo": ["GEO", "Dryad", "Zenodo", "figshare", "SRA", "ENA", "ArrayExpress", "GenBank", "OSF", "PRIDE"],
}

_NOISE = [
    "",
    "",
    "",
    " See Methods for details.",
    " Details are described in the text.",
    " This statement applies to all experiments reported here.",
]


def _accession(rng: random.Random) -> str:
    kind = rng.randrange(5)
    if kind == 0:
        return f"SRR{rng.randrange(10**6, 10**7)}"
    if kind == 1:
        return f"GSE{rng.randrange(10**4, 10**6)}"
    if kind == 2:
        return f"PRJNA{rng.randrange(10**5, 10**6)}"
    if kind == 3:
        return f"KX{rng.randrange(10**5, 10**6)}"
    return f"E-MTAB-{rng.randrange(1000, 9999)}"


def _link(rng: random.Random) -> str:
    kind = rng.randrange(4)
    if kind == 0:
        return f"https://doi.org/10.5061/dryad.{rng.randrange(16**5, 16**6):x}"
    if kind == 1:
        return f"https://doi.org/10.5281/zenodo.{rng.randrange(10**6, 10**7)}"
    if kind == 2:
        return f"https://www.ncbi.nlm.nih.gov/geo/query/acc.cgi?acc=GSE{rng.randrange(10**4, 10**6)}"
    return f"https://osf.io/{rng.randrange(36**4, 36**5):x}/"


def _fill(template: str, rng: random.Random) -> str:
    out = template
    while "{" in out:
        start = out.index("{")
        end = out.index("}", start)
        slot = out[start + 1 : end]
        if slot == "acc":
            value = _accession(rng)
        elif slot == "link":
            value = _link(rng)
        elif slot == "opener":
            value = _PLOS_OPENER
        elif slot == "datasets_cap":
            value = rng.choice(_SLOTS["datasets"]).capitalize()
        else:
            value = rng.choice(_SLOTS[slot])
        out = out[:start] + value + out[end + 1 :]
    return out


def generate_statement(category: int, rng: random.Random) -> str:
    text = _fill(rng.choice(_TEMPLATES[category]), rng) + rng.choice(_NOISE)
    if rng.random() < 0.1:
        text = text.rstrip(".")
    if rng.random() < 0.05:
        text = text.upper()
    return text


def generate_labeled_statements(
    n: int = 380,
    proportions: tuple[float, float, float, float] = (4 / 76, 20 / 76, 45 / 76, 7 / 76),
    seed: int = 2019,
) -> list[LabeledExample]:
    """``n`` distinct labeled statements with class shares ``proportions``.

    Frequencies are heavy-tailed: a few templated statements occur many times,
    most occur once.
    """
    rng = random.Random(seed)
    counts = [int(round(p * n)) for p in proportions]
    counts[2] += n - sum(counts)
    seen: set[str] = set()
    out: list[LabeledExample] = []
    for category, count in enumerate(counts):
        made = 0
        while made < count:
            text = generate_statement(category, rng)
            if text in seen:
                continue
            seen.add(text)
            freq = max(1, int(rng.paretovariate(1.2))) if made >= 3 else rng.randrange(8, 400)
            out.append(LabeledExample(text, category, freq))
            made += 1
    rng.shuffle(out)
    return out


# ---------------------------------------------------------------------------
# JATS corpus
# ---------------------------------------------------------------------------

# title, publisher, encouraged_from, required_from, (domain, field, subfield) or None
JOURNALS = [
    ("PLOS ONE", "PLOS", "", "2014-03-01",
     ("General Science & Technology", "General Science & Technology", "General Science & Technology")),
    ("PLOS Biology", "PLOS", "", "2014-03-01", ("Natural Sciences", "Biology", "Evolutionary Biology")),
    ("PLoS Genetics", "PLOS", "", "2014-03-01",
     ("Health Sciences", "Biomedical Research", "Genetics & Heredity")),
    ("BMC Genomics", "BMC", "2011-07-01", "2015-05-01",
     ("Health Sciences", "Biomedical Research", "Genetics & Heredity")),
    ("Trials", "BMC", "2012-01-01", "2015-05-01",
     ("Health Sciences", "Clinical Medicine", "General & Internal Medicine")),
    ("Parasites & Vectors", "BMC", "2011-07-01", "2015-05-01",
     ("Natural Sciences", "Biology", "Parasitology")),
    ("BMC Bioinformatics", "BMC", "", "2015-05-01", None),
    ("Journal of Applied Examples", "OTHER", "", "", ("Applied Sciences", "Engineering", "Bioengineering")),
    ("Annals of Control Studies", "OTHER", "", "", None),
]

_GIVEN = ["Anna", "Ben", "Chen", "Dana", "Emil", "Fatima", "Goran", "Hana", "Ivan", "Jia",
          "Kofi", "Lena", "Mario", "Nadia", "Omar", "Priya", "Quinn", "Rosa", "Sven", "Tariq"]
_SURNAMES = ["Smith", "Garcia", "Wang", "Okafor", "Novak", "Kim", "Rossi", "Müller", "Silva",
             "Haddad", "Ivanova", "Tanaka"]

# Publisher-specific category mixes for statements in the corpus.
_CATEGORY_MIX = {"PLOS": (0.03, 0.17, 0.55, 0.25), "BMC": (0.10, 0.45, 0.20, 0.25)}


@dataclass
class SyntheticArticle:
    doi: Optional[str]
    pmid: str
    pmcid: str
    journal: str
    publisher: str
    year: int
    month: Optional[int]
    article_type: str
    authors: list[tuple[str, str]]
    cites: list[int]  # indices of cited corpus articles
    external_refs: int
    unidentified_refs: int
    das_text: Optional[str] = None
    das_category: Optional[int] = None
    das_kind: Optional[str] = None  # meta | plos_section | bmc_mandated | bmc_supporting

    @property
    def key(self) -> str:
        return f"doi:{self.doi.lower()}" if self.doi else f"pmid:{self.pmid}"


@dataclass
class SyntheticCorpus:
    articles: list[SyntheticArticle]

    def planted_edges(self) -> set[tuple[str, str]]:
        """(citing key, cited key) pairs planted in the corpus."""
        return {(a.key, self.articles[j].key) for a in self.articles for j in a.cites}

    def write(self, directory: str | Path, labels: Optional[list[LabeledExample]] = None) -> None:
        """Write articles/ (some gzipped), journals.csv, taxonomy.csv and labels.csv."""
        import gzip

        root = Path(directory)
        (root / "articles").mkdir(parents=True, exist_ok=True)
        for i, art in enumerate(self.articles):
            data = article_xml(art, self.articles).encode("utf-8")
            if i % 10 == 9:
                (root / "articles" / f"article_{i:04d}.nxml.gz").write_bytes(gzip.compress(data, mtime=0))
            else:
                (root / "articles" / f"article_{i:04d}.xml").write_bytes(data)
        journals_csv(root / "journals.csv")
        taxonomy_csv(root / "taxonomy.csv")
        with open(root / "labels.csv", "w", newline="", encoding="utf-8") as fh:
            write_labels(labels if labels is not None else generate_labeled_statements(), fh)


def journals_csv(path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["journal_title", "publisher", "encouraged_from", "required_from"])
        for title, publisher, enc, req, _ in JOURNALS:
            if publisher != "OTHER":
                writer.writerow([title, publisher, enc, req])


def taxonomy_csv(path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["journal_title", "domain", "field", "subfield"])
        for title, *_, tax in JOURNALS:
            if tax is not None:
                writer.writerow([title, *tax])


def _date_index(year: int, month: Optional[int]) -> int:
    return year * 12 + (month or 6) - 1


def _statement_for(art: SyntheticArticle, rng: random.Random) -> None:
    journal = next(j for j in JOURNALS if j[0] == art.journal)
    _, publisher, enc, req, _ = journal
    when = _date_index(art.year, art.month)
    required = req and when >= _date_index(*map(int, req.split("-")[:2]))
    encouraged = not required and enc and when >= _date_index(*map(int, enc.split("-")[:2]))
    if publisher == "PLOS":
        rate = 0.95 if required else 0.02
    elif publisher == "BMC":
        rate = 0.85 if required else (0.40 if encouraged else 0.0)
    else:
        return
    if rng.random() >= rate:
        return
    category = rng.choices(range(4), weights=_CATEGORY_MIX[publisher])[0]
    art.das_category = category
    art.das_text = generate_statement(category, rng)
    if publisher == "PLOS":
        art.das_kind = "meta" if rng.random() < 0.8 else "plos_section"
    else:
        art.das_kind = "bmc_mandated" if required else "bmc_supporting"


def generate_corpus(n: int = 200, seed: int = 7) -> SyntheticCorpus:
    rng = random.Random(seed)
    people = [(g, s) for g in _GIVEN for s in _SURNAMES]
    rng.shuffle(people)
    people = people[:110]
    year_weights = {2009: 2, 2010: 3, 2011: 5, 2012: 8, 2013: 10, 2014: 12, 2015: 12, 2016: 8, 2017: 6, 2018: 5}
    journal_weights = [18, 8, 8, 14, 10, 10, 8, 6, 4]

    dates = []
    for _ in range(n):
        year = rng.choices(list(year_weights), weights=list(year_weights.values()))[0]
        month = None if rng.random() < 0.1 else rng.randint(1, 12)
        dates.append((year, month))
    dates.sort(key=lambda d: _date_index(*d))

    articles: list[SyntheticArticle] = []
    popularity = [1.0] * len(people)
    for i, (year, month) in enumerate(dates):
        journal = rng.choices(JOURNALS, weights=journal_weights)[0]
        title, publisher = journal[0], journal[1]
        if publisher == "OTHER":
            article_type = "research-article"
        else:
            article_type = rng.choices(
                ["research-article", "review-article", "editorial", "brief-report"],
                weights=[85, 7, 4, 4],
            )[0]
        n_auth = rng.choices([1, 2, 3, 4, 5, 6, 8], weights=[8, 14, 18, 18, 14, 10, 6])[0]
        picked = set()
        while len(picked) < n_auth:
            picked.add(rng.choices(range(len(people)), weights=popularity)[0])
        for p in picked:
            popularity[p] += 0.5
        authors = [people[p] for p in sorted(picked)]

        earlier = list(range(i))
        n_cites = min(len(earlier), rng.choice([0, 1, 2, 3, 4, 5, 6]))
        cites = sorted(rng.sample(earlier, n_cites)) if n_cites else []
        if i + 1 < n and rng.random() < 0.03:
            cites.append(rng.randrange(i + 1, n))  # cites a later article
        external = rng.randint(0, 6)
        unidentified = rng.randint(0, 4)
        if not cites and not external and not unidentified:
            unidentified = 1

        doi_prefix = "10.1371/journal.pone" if publisher == "PLOS" else "10.1186/s1" if publisher == "BMC" else "10.5555/x"
        art = SyntheticArticle(
            doi=None if rng.random() < 0.08 else f"{doi_prefix}.{1000000 + i * 37}",
            pmid=str(20000000 + i * 13),
            pmcid=str(3000000 + i * 7),
            journal=title,
            publisher=publisher,
            year=year,
            month=month,
            article_type=article_type,
            authors=authors,
            cites=cites,
            external_refs=external,
            unidentified_refs=unidentified,
        )
        _statement_for(art, rng)
        articles.append(art)
    return SyntheticCorpus(articles)


def _ref_xml(idx: int, id_kind: str, id_value: str) -> str:
    pub_id = f'<pub-id pub-id-type="{id_kind}">{escape(id_value)}</pub-id>' if id_kind else ""
    return (
        f'<ref id="R{idx}"><element-citation publication-type="journal">'
        f"<article-title>Reference {idx}</article-title>{pub_id}</element-citation></ref>"
    )


def article_xml(art: SyntheticArticle, corpus: list[SyntheticArticle]) -> str:
    ids = []
    if art.pmid:
        ids.append(f'<article-id pub-id-type="pmid">{art.pmid}</article-id>')
    ids.append(f'<article-id pub-id-type="pmc">PMC{art.pmcid}</article-id>')
    if art.doi:
        ids.append(f'<article-id pub-id-type="doi">{art.doi}</article-id>')
    contribs = "".join(
        f'<contrib contrib-type="author"><name><surname>{escape(s)}</surname>'
        f"<given-names>{escape(g)}</given-names></name></contrib>"
        for g, s in art.authors
    )
    month = f"<month>{art.month}</month>" if art.month else ""
    meta_das = ""
    if art.das_kind == "meta":
        meta_das = (
            '<custom-meta-group><custom-meta id="data-availability"><meta-name>Data Availability</meta-name>'
            f"<meta-value>{escape(art.das_text)}</meta-value></custom-meta></custom-meta-group>"
        )
    back_sec = ""
    if art.das_kind in ("plos_section", "bmc_mandated", "bmc_supporting"):
        title = {
            "plos_section": "Data Availability",
            "bmc_mandated": "Availability of data and materials",
            "bmc_supporting": "Availability of supporting data:",
        }[art.das_kind]
        back_sec = f"<sec><title>{title}</title><p>{escape(art.das_text)}</p></sec>"

    refs = []
    k = 0
    for j in art.cites:
        target = corpus[j]
        k += 1
        if target.doi and k % 3:
            refs.append(_ref_xml(k, "doi", f"https://doi.org/{target.doi.upper()}" if k % 5 == 0 else target.doi))
        else:
            refs.append(_ref_xml(k, "pmid", target.pmid))
    for e in range(art.external_refs):
        k += 1
        refs.append(_ref_xml(k, "doi", f"10.9999/external.{art.pmid}.{e}"))
    for _ in range(art.unidentified_refs):
        k += 1
        refs.append(_ref_xml(k, "", ""))

    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        '<!DOCTYPE article PUBLIC "-//NLM//DTD JATS (Z39.96) Journal Archiving and Interchange DTD v1.1 20151215//EN" '
        '"JATS-archivearticle1.dtd">\n'
        f'<article xmlns:xlink="http://www.w3.org/1999/xlink" article-type="{art.article_type}">'
        "<front><journal-meta><journal-title-group>"
        f"<journal-title>{escape(art.journal)}</journal-title></journal-title-group></journal-meta>"
        f"<article-meta>{''.join(ids)}<title-group><article-title>Synthetic article {art.pmid}"
        f"</article-title></title-group><contrib-group>{contribs}</contrib-group>"
        f'<pub-date pub-type="epub">{month}<year>{art.year}</year></pub-date>{meta_das}'
        "</article-meta></front>"
        "<body><sec><title>Introduction</title><p>Background text.</p></sec>"
        "<sec><title>Methods</title><sec><title>Data analysis</title><p>Statistics were computed.</p></sec></sec>"
        "</body>"
        f"<back>{back_sec}<ref-list>{''.join(refs)}</ref-list></back></article>\n"
    )


def write_fixture(directory: str | Path, n: int = 200, seed: int = 7) -> SyntheticCorpus:
    corpus = generate_corpus(n, seed)
    corpus.write(directory)
    return corpus


if __name__ == "__main__":  # pragma: no cover
    import sys

    write_fixture(sys.argv[1] if len(sys.argv) > 1 else "fixture")
