"""JATS ingestion: parse article XML into records and apply corpus filters."""

from __future__ import annotations

import csv
import datetime as dt
import gzip
import logging
import re
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional

log = logging.getLogger(__name__)

ID_KINDS = ("doi", "pmid", "pmcid", "publisher_id")

_DOI_PREFIXES = re.compile(r"^(?:https?://(?:dx\.)?doi\.org/|doi:\s*)", re.IGNORECASE)
_WS = re.compile(r"\s+")

# JATS pub-id-type / article-id values -> ArticleId field
_PUB_ID_TYPES = {
    "doi": "doi",
    "pmid": "pmid",
    "pubmed": "pmid",
    "pmc": "pmcid",
    "pmcid": "pmcid",
    "publisher-id": "publisher_id",
    "publisher_id": "publisher_id",
}

_RESEARCH_TYPES = {
    "research-article",
    "brief-report",
    "case-report",
    "methods-article",
    "data-paper",
    "research-note",
}
_REVIEW_TYPES = {"review-article", "systematic-review"}
_EDITORIAL_TYPES = {"editorial"}

_PUB_DATE_PREFERENCE = ("epub", "ppub", "pub", "collection")

# Sections retained at ingest as DAS candidates; titles are matched after normalization.
_CANDIDATE_TITLE = re.compile(r"availab|data|sharing|accessib")


class MalformedXml(ValueError):
    """Input could not be parsed as XML."""


class Publisher(str, Enum):
    PLOS = "PLOS"
    BMC = "BMC"
    OTHER = "OTHER"


class ArticleType(str, Enum):
    RESEARCH = "research"
    REVIEW = "review"
    EDITORIAL = "editorial"
    OTHER = "other"


def normalize_id(kind: str, value: Optional[str]) -> Optional[str]:
    """Canonical form of an identifier so keys compare across files."""
    if value is None:
        return None
    value = _WS.sub("", value)
    if not value:
        return None
    if kind == "doi":
        value = _DOI_PREFIXES.sub("", value).lower()
    elif kind == "pmcid":
        value = re.sub(r"^pmc", "", value, flags=re.IGNORECASE)
    return value or None


@dataclass(frozen=True)
class ArticleId:
    doi: Optional[str] = None
    pmid: Optional[str] = None
    pmcid: Optional[str] = None
    publisher_id: Optional[str] = None

    @classmethod
    def create(cls, **raw: Optional[str]) -> "ArticleId":
        return cls(**{k: normalize_id(k, raw.get(k)) for k in ID_KINDS})

    def items(self) -> list[tuple[str, str]]:
        """Present (kind, value) pairs in priority order."""
        return [(k, getattr(self, k)) for k in ID_KINDS if getattr(self, k)]

    def is_empty(self) -> bool:
        return not self.items()

    @property
    def key(self) -> str:
        """Stable string key: the highest-priority identifier present."""
        kind, value = self.items()[0]
        return f"{kind}:{value}"

    def matches(self, other: "ArticleId") -> bool:
        """True when the two ids agree on any shared non-empty field."""
        return any(
            getattr(self, k) and getattr(self, k) == getattr(other, k) for k in ID_KINDS
        )

    def merged_with(self, other: "ArticleId") -> "ArticleId":
        """Fill absent fields from ``other``; present fields are never overwritten."""
        return ArticleId(**{k: getattr(self, k) or getattr(other, k) for k in ID_KINDS})

    def to_dict(self) -> dict:
        return {k: v for k, v in self.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ArticleId":
        return cls(**{k: d.get(k) for k in ID_KINDS})


@dataclass(frozen=True)
class DasCandidate:
    """A metadata element or section that may hold a data availability statement."""

    kind: str  # "meta_element" or "section_title"
    label: str
    text: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "label": self.label, "text": self.text}

    @classmethod
    def from_dict(cls, d: dict) -> "DasCandidate":
        return cls(d["kind"], d["label"], d["text"])


@dataclass(frozen=True)
class ArticleRecord:
    id: ArticleId
    journal_title: str
    pub_year: int
    pub_month: Optional[int] = None
    publisher: Publisher = Publisher.OTHER
    authors: tuple[tuple[str, str], ...] = ()
    references: tuple[ArticleId, ...] = ()
    n_references_total: int = 0
    article_type: ArticleType = ArticleType.OTHER
    das_candidates: tuple[DasCandidate, ...] = ()

    @property
    def key(self) -> str:
        return self.id.key

    @property
    def n_authors(self) -> int:
        return len(self.authors)

    @property
    def month_or_default(self) -> int:
        return self.pub_month if self.pub_month is not None else 6

    def to_dict(self) -> dict:
        return {
            "id": self.id.to_dict(),
            "journal_title": self.journal_title,
            "publisher": self.publisher.value,
            "pub_year": self.pub_year,
            "pub_month": self.pub_month,
            "authors": [list(a) for a in self.authors],
            "references": [r.to_dict() for r in self.references],
            "n_references_total": self.n_references_total,
            "article_type": self.article_type.value,
            "das_candidates": [c.to_dict() for c in self.das_candidates],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArticleRecord":
        return cls(
            id=ArticleId.from_dict(d["id"]),
            journal_title=d["journal_title"],
            publisher=Publisher(d["publisher"]),
            pub_year=d["pub_year"],
            pub_month=d["pub_month"],
            authors=tuple((a[0], a[1]) for a in d["authors"]),
            references=tuple(ArticleId.from_dict(r) for r in d["references"]),
            n_references_total=d["n_references_total"],
            article_type=ArticleType(d["article_type"]),
            das_candidates=tuple(DasCandidate.from_dict(c) for c in d["das_candidates"]),
        )


@dataclass(frozen=True)
class ParseRejection:
    """Filter outcome for an article that fails the retention rules."""

    reason: str  # missing_id | missing_date | zero_references
    detail: str = ""


# ---------------------------------------------------------------------------
# Journal policy table
# ---------------------------------------------------------------------------


def normalize_title(title: str) -> str:
    return _WS.sub(" ", title).strip().casefold()


@dataclass(frozen=True)
class JournalPolicy:
    journal_title: str
    publisher: Publisher
    encouraged_from: Optional[dt.date] = None
    required_from: Optional[dt.date] = None

    def __post_init__(self):
        if (
            self.encouraged_from
            and self.required_from
            and self.encouraged_from > self.required_from
        ):
            raise ValueError(
                f"{self.journal_title}: encouraged_from after required_from"
            )


@dataclass
class JournalPolicyTable:
    journals: dict[str, JournalPolicy] = field(default_factory=dict)

    def get(self, journal_title: str) -> Optional[JournalPolicy]:
        return self.journals.get(normalize_title(journal_title))

    def add(self, policy: JournalPolicy) -> None:
        self.journals[normalize_title(policy.journal_title)] = policy

    @classmethod
    def from_csv(cls, path: str | Path) -> "JournalPolicyTable":
        """Read journals.csv (journal_title, publisher, encouraged_from, required_from)."""
        table = cls()
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = {"journal_title", "publisher"} - set(reader.fieldnames or ())
            if missing:
                raise ValueError(f"{path}: missing columns {sorted(missing)}")
            for line_no, row in enumerate(reader, start=2):
                try:
                    table.add(
                        JournalPolicy(
                            journal_title=row["journal_title"].strip(),
                            publisher=Publisher(row["publisher"].strip().upper()),
                            encouraged_from=_parse_date(row.get("encouraged_from")),
                            required_from=_parse_date(row.get("required_from")),
                        )
                    )
                except ValueError as exc:
                    raise ValueError(f"{path}:{line_no}: {exc}") from exc
        return table


def _parse_date(value: Optional[str]) -> Optional[dt.date]:
    value = (value or "").strip()
    return dt.date.fromisoformat(value) if value else None


# ---------------------------------------------------------------------------
# XML parsing
# ---------------------------------------------------------------------------


def _local(tag) -> str:
    if not isinstance(tag, str):
        return ""
    return tag.rsplit("}", 1)[-1]


def _strip_namespaces(root: ET.Element) -> None:
    for el in root.iter():
        el.tag = _local(el.tag)
        for name in list(el.attrib):
            bare = _local(name)
            if bare != name:
                el.attrib[bare] = el.attrib.pop(name)


def text_of(el: Optional[ET.Element]) -> str:
    if el is None:
        return ""
    return _WS.sub(" ", "".join(el.itertext())).strip()


def _ids_from(elements: Iterable[ET.Element], attr: str) -> ArticleId:
    raw: dict[str, str] = {}
    for el in elements:
        kind = _PUB_ID_TYPES.get((el.get(attr) or "").strip().lower())
        if kind and kind not in raw:
            value = text_of(el)
            if value:
                raw[kind] = value
    return ArticleId.create(**raw)


def _parse_pub_date(article_meta: ET.Element) -> tuple[Optional[int], Optional[int]]:
    dates = article_meta.findall("pub-date")
    if not dates:
        return None, None

    def rank(el):
        kind = (el.get("pub-type") or el.get("date-type") or "").lower()
        return _PUB_DATE_PREFERENCE.index(kind) if kind in _PUB_DATE_PREFERENCE else 99

    for el in sorted(dates, key=rank):
        year = _as_int(el.findtext("year"))
        if year is None:
            continue
        month = _as_int(el.findtext("month"))
        if month is not None and not 1 <= month <= 12:
            month = None
        return year, month
    return None, None


def _as_int(value: Optional[str]) -> Optional[int]:
    try:
        return int((value or "").strip())
    except ValueError:
        return None


def map_article_type(value: Optional[str]) -> ArticleType:
    value = (value or "").strip().lower()
    if value in _RESEARCH_TYPES:
        return ArticleType.RESEARCH
    if value in _REVIEW_TYPES:
        return ArticleType.REVIEW
    if value in _EDITORIAL_TYPES:
        return ArticleType.EDITORIAL
    return ArticleType.OTHER


def normalize_heading(text: str) -> str:
    """Casefold, treat punctuation as spacing, collapse whitespace."""
    text = text.replace("&", " and ").casefold()
    text = re.sub(r"[^\w\s]|_", " ", text)
    return _WS.sub(" ", text).strip()


def _section_text(sec: ET.Element) -> str:
    """Paragraph text of a section, including nested subsections."""
    paragraphs = [text_of(p) for p in sec.iter("p")]
    paragraphs = [p for p in paragraphs if p]
    if paragraphs:
        return " ".join(paragraphs)
    parts = [text_of(child) for child in sec if child.tag != "title"]
    return " ".join(p for p in parts if p)


def _das_candidates(root: ET.Element) -> tuple[DasCandidate, ...]:
    out: list[DasCandidate] = []
    for meta in root.iter("custom-meta"):
        label = text_of(meta.find("meta-name")) or meta.get("id", "")
        value = text_of(meta.find("meta-value"))
        if label and value:
            out.append(DasCandidate("meta_element", label, value))
    for sec in root.iter("sec"):
        title = text_of(sec.find("title"))
        if title and _CANDIDATE_TITLE.search(normalize_heading(title)):
            body = _section_text(sec)
            if body:
                out.append(DasCandidate("section_title", title, body))
    return tuple(out)


def parse_article(xml_document: bytes, table: Optional[JournalPolicyTable] = None):
    """Parse one JATS document.

    Returns an :class:`ArticleRecord`, or a :class:`ParseRejection` when the
    article has no identifier, no publication year, or no references.
    Raises :class:`MalformedXml` on unparseable input.
    """
    try:
        root = ET.fromstring(xml_document)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc
    _strip_namespaces(root)

    article = root if root.tag == "article" else root.find(".//article")
    if article is None:
        raise MalformedXml("no <article> element")
    front = article.find("front")
    meta = front.find("article-meta") if front is not None else None
    if meta is None:
        return ParseRejection("missing_id", "no article-meta")

    article_id = _ids_from(meta.findall("article-id"), "pub-id-type")
    if article_id.is_empty():
        return ParseRejection("missing_id")

    year, month = _parse_pub_date(meta)
    if year is None or year < 1900:
        return ParseRejection("missing_date", article_id.key)

    refs = article.findall(".//back//ref-list//ref") or article.findall(".//ref-list//ref")
    if not refs:
        return ParseRejection("zero_references", article_id.key)
    references = []
    for ref in refs:
        ref_id = _ids_from(ref.iter("pub-id"), "pub-id-type")
        if not ref_id.is_empty():
            references.append(ref_id)

    journal_meta = front.find("journal-meta")
    journal = ""
    if journal_meta is not None:
        journal = text_of(journal_meta.find(".//journal-title"))

    authors = []
    for contrib in meta.iter("contrib"):
        if (contrib.get("contrib-type") or "author") != "author":
            continue
        name = contrib.find("name")
        if name is None:
            continue
        authors.append((text_of(name.find("given-names")), text_of(name.find("surname"))))

    record = ArticleRecord(
        id=article_id,
        journal_title=journal,
        pub_year=year,
        pub_month=month,
        authors=tuple(authors),
        references=tuple(references),
        n_references_total=len(refs),
        article_type=map_article_type(article.get("article-type")),
        das_candidates=_das_candidates(article),
    )
    return replace(record, publisher=assign_publisher(journal, table))


def assign_publisher(journal_title: str, table: Optional[JournalPolicyTable]) -> Publisher:
    """PLOS by name prefix; BMC by membership in the curated list."""
    if journal_title.strip().casefold().startswith("plos"):
        return Publisher.PLOS
    if table is not None:
        policy = table.get(journal_title)
        if policy is not None and policy.publisher is Publisher.BMC:
            return Publisher.BMC
    return Publisher.OTHER


def filter_analysis_set(
    records: Iterable[ArticleRecord], journal_list: JournalPolicyTable
) -> list[ArticleRecord]:
    """PLOS/BMC articles minus reviews and editorials."""
    out = []
    for rec in records:
        publisher = assign_publisher(rec.journal_title, journal_list)
        if publisher is Publisher.OTHER:
            continue
        if rec.article_type in (ArticleType.REVIEW, ArticleType.EDITORIAL):
            continue
        out.append(rec if rec.publisher is publisher else replace(rec, publisher=publisher))
    return out


# ---------------------------------------------------------------------------
# Corpus-level ingestion
# ---------------------------------------------------------------------------


def iter_xml_files(paths: Iterable[str | Path]) -> list[Path]:
    """All .xml / .nxml (optionally .gz) files under ``paths``, sorted."""
    suffixes = (".xml", ".nxml", ".xml.gz", ".nxml.gz")
    found = set()
    for p in map(Path, paths):
        if p.is_dir():
            found.update(f for f in p.rglob("*") if f.is_file() and f.name.endswith(suffixes))
        elif p.is_file():
            found.add(p)
        else:
            raise FileNotFoundError(p)
    return sorted(found)


def read_document(path: Path) -> bytes:
    data = path.read_bytes()
    if path.name.endswith(".gz"):
        data = gzip.decompress(data)
    return data


@dataclass
class IngestResult:
    records: list[ArticleRecord]
    rejections: list[tuple[str, ParseRejection]]
    malformed: list[tuple[str, str]]
    duplicates: int = 0


def _parse_file(path: Path, table: Optional[JournalPolicyTable]):
    try:
        return parse_article(read_document(path), table)
    except MalformedXml as exc:
        return exc


def merge_records(records: Iterable[ArticleRecord]) -> tuple[list[ArticleRecord], int]:
    """Deduplicate records sharing any identifier; the first-seen record wins.

    Identifier fields missing on the winner are filled from duplicates.
    Output is sorted by record key.
    """
    kept: list[ArticleRecord] = []
    index: dict[tuple[str, str], int] = {}
    duplicates = 0
    for rec in records:
        hit = next((index[item] for item in rec.id.items() if item in index), None)
        if hit is None:
            index.update({item: len(kept) for item in rec.id.items()})
            kept.append(rec)
            continue
        duplicates += 1
        first = kept[hit]
        if first.to_dict() | {"id": None} != rec.to_dict() | {"id": None}:
            log.warning("duplicate %s conflicts with %s; keeping first", rec.key, first.key)
        merged_id = first.id.merged_with(rec.id)
        if merged_id != first.id:
            kept[hit] = replace(first, id=merged_id)
            for item in merged_id.items():
                index.setdefault(item, hit)
    return sorted(kept, key=lambda r: r.key), duplicates


def ingest_paths(
    paths: Iterable[str | Path],
    table: Optional[JournalPolicyTable] = None,
    threads: int = 1,
) -> IngestResult:
    """Parse every file under ``paths`` and merge into a deduplicated record set.

    Results do not depend on ``threads``: files are parsed independently and
    merged in sorted path order.
    """
    files = iter_xml_files(paths)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda f: _parse_file(f, table), files))
    else:
        outcomes = [_parse_file(f, table) for f in files]

    parsed, rejections, malformed = [], [], []
    for path, outcome in zip(files, outcomes):
        if isinstance(outcome, ArticleRecord):
            parsed.append(outcome)
        elif isinstance(outcome, ParseRejection):
            rejections.append((str(path), outcome))
        else:
            malformed.append((str(path), str(outcome)))
    records, duplicates = merge_records(parsed)
    return IngestResult(records, rejections, malformed, duplicates)


def iter_records(records: Iterable[ArticleRecord]) -> Iterator[ArticleRecord]:
    """Yield records, checking the retention invariants."""
    for rec in records:
        if rec.id.is_empty() or rec.pub_year < 1900 or rec.n_references_total < 1:
            raise ValueError(f"record {rec.key} violates retention rules")
        if rec.n_references_total < len(rec.references):
            raise ValueError(f"record {rec.key}: more resolved references than total")
        yield rec
