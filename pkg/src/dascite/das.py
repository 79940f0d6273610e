"""Locate data availability statements and derive policy-regime flags."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .ingest import (
    ArticleId,
    ArticleRecord,
    JournalPolicyTable,
    Publisher,
    normalize_heading,
)

RULES_VERSION = 1
CATEGORIES = (0, 1, 2, 3)
CATEGORY_NAMES = {
    0: "Not available",
    1: "Data available on request or similar",
    2: "Data available with the paper and its supplementary files",
    3: "Data available in a repository",
}

_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    return _WS.sub(" ", text).strip()


@dataclass(frozen=True)
class Rule:
    publisher: Publisher
    match_kind: str  # meta_element | section_title
    pattern: str

    def __post_init__(self):
        if self.match_kind not in ("meta_element", "section_title"):
            raise ValueError(f"unknown match_kind {self.match_kind!r}")

    @property
    def source(self) -> str:
        if self.match_kind == "meta_element":
            return "plos_custom_meta" if self.publisher is Publisher.PLOS else "meta_element"
        return f"{self.publisher.value.lower()}_section"

    def matches(self, label: str) -> bool:
        return re.fullmatch(self.pattern, normalize_heading(label)) is not None


@dataclass(frozen=True)
class ExtractionRules:
    rules: tuple[Rule, ...]

    @classmethod
    def from_dict(cls, d: dict) -> "ExtractionRules":
        if d.get("version") != RULES_VERSION:
            raise ValueError(f"unsupported rules version {d.get('version')!r}")
        return cls(
            tuple(
                Rule(Publisher(r["publisher"]), r["match_kind"], r["pattern"])
                for r in d["rules"]
            )
        )

    def to_dict(self) -> dict:
        return {
            "version": RULES_VERSION,
            "rules": [
                {"publisher": r.publisher.value, "match_kind": r.match_kind, "pattern": r.pattern}
                for r in self.rules
            ],
        }

    @classmethod
    def load(cls, path: str | Path) -> "ExtractionRules":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def default(cls) -> "ExtractionRules":
        text = resources.files("dascite.data").joinpath("extraction_rules.json").read_text("utf-8")
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DasStatement:
    article_id: ArticleId
    text: str
    source: str
    section_title: str
    category: Optional[int] = None
    category_origin: Optional[str] = None  # "manual" | "predicted"

    def __post_init__(self):
        if not self.text:
            raise ValueError("empty statement")
        if self.category is not None and self.category not in CATEGORIES:
            raise ValueError(f"category {self.category!r} not in 0..3")

    def to_dict(self) -> dict:
        return {
            "article_id": self.article_id.to_dict(),
            "text": self.text,
            "source": self.source,
            "section_title": self.section_title,
            "category": self.category,
            "category_origin": self.category_origin,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DasStatement":
        return cls(
            ArticleId.from_dict(d["article_id"]),
            d["text"],
            d["source"],
            d["section_title"],
            d.get("category"),
            d.get("category_origin"),
        )


def extract_das(record: ArticleRecord, rules: Optional[ExtractionRules] = None) -> Optional[DasStatement]:
    """First statement matched by the publisher's rules, in rule order."""
    rules = rules or ExtractionRules.default()
    for rule in rules.rules:
        if rule.publisher is not record.publisher:
            continue
        for cand in record.das_candidates:
            if cand.kind != rule.match_kind or not rule.matches(cand.label):
                continue
            text = normalize_text(cand.text)
            if text:
                return DasStatement(record.id, text, rule.source, cand.label)
    return None


def _month_index(year: int, month: int) -> int:
    return year * 12 + (month - 1)


def attach_policy_flags(record: ArticleRecord, policy_table: JournalPolicyTable) -> tuple[bool, bool]:
    """(das_encouraged, das_required) at the article's publication month.

    A missing publication month counts as June.
    """
    policy = policy_table.get(record.journal_title)
    if policy is None:
        return False, False
    published = _month_index(record.pub_year, record.month_or_default)
    required = (
        policy.required_from is not None
        and published >= _month_index(policy.required_from.year, policy.required_from.month)
    )
    encouraged = (
        not required
        and policy.encouraged_from is not None
        and published >= _month_index(policy.encouraged_from.year, policy.encouraged_from.month)
    )
    return encouraged, required
