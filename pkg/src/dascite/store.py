"""On-disk store: a directory of versioned, whole-file sections.

Each JSON-lines section starts with a header object carrying the format
name, section name and format version.  Sections are replaced atomically
and never edited in place.  Output is deterministic: keys are sorted and
no timestamps are written, so re-running a stage reproduces its bytes.
"""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Iterator, Optional

from filelock import FileLock

from .das import DasStatement
from .graph import CitationIndex
from .ingest import ArticleRecord
from .table import AnalysisEntry, RegressionRow

STORE_FORMAT = "dascite-store"
STORE_VERSION = 1
ENV_STORE = "DASCITE_STORE"


class StoreError(RuntimeError):
    """A section is missing, or was written by an incompatible version."""


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


class Store:
    def __init__(self, path: str | Path):
        self.path = Path(path)

    # -- low level -----------------------------------------------------------

    def _file(self, section: str, suffix: str = ".jsonl") -> Path:
        return self.path / f"{section}{suffix}"

    def has(self, section: str, suffix: str = ".jsonl") -> bool:
        return self._file(section, suffix).exists()

    @contextmanager
    def writer(self) -> Iterator["Store"]:
        """Hold the store's advisory write lock."""
        self.path.mkdir(parents=True, exist_ok=True)
        with FileLock(str(self.path / ".lock")):
            yield self

    def _atomic_write(self, target: Path, data: bytes) -> None:
        self.path.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        self._update_manifest()

    def _update_manifest(self) -> None:
        sections = sorted(
            p.name for p in self.path.iterdir()
            if p.is_file() and not p.name.startswith(".") and p.name != "manifest.json"
        )
        manifest = {"format": STORE_FORMAT, "version": STORE_VERSION, "sections": sections}
        (self.path / "manifest.json").write_text(_dumps(manifest) + "\n", encoding="utf-8")

    def write_section(self, section: str, items: Iterable[dict], meta: Optional[dict] = None) -> int:
        header = {"format": STORE_FORMAT, "section": section, "version": STORE_VERSION}
        header.update(meta or {})
        lines = [_dumps(header)]
        lines.extend(_dumps(item) for item in items)
        self._atomic_write(self._file(section), ("\n".join(lines) + "\n").encode("utf-8"))
        return len(lines) - 1

    def read_section(self, section: str) -> tuple[dict, list[dict]]:
        path = self._file(section)
        if not path.exists():
            raise StoreError(f"section {section!r} not found in {self.path}")
        with open(path, encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("format") != STORE_FORMAT or header.get("version") != STORE_VERSION:
                raise StoreError(f"{path}: not a version-{STORE_VERSION} store section")
            return header, [json.loads(line) for line in fh if line.strip()]

    def write_blob(self, section: str, data: bytes) -> None:
        self._atomic_write(self._file(section, ".bin"), data)

    def read_blob(self, section: str) -> bytes:
        path = self._file(section, ".bin")
        if not path.exists():
            raise StoreError(f"section {section!r} not found in {self.path}")
        return path.read_bytes()

    # -- typed sections ------------------------------------------------------

    def save_records(self, records: Iterable[ArticleRecord]) -> int:
        return self.write_section("records", (r.to_dict() for r in records))

    def load_records(self) -> list[ArticleRecord]:
        _, items = self.read_section("records")
        return [ArticleRecord.from_dict(d) for d in items]

    def save_analysis(self, entries: dict[str, AnalysisEntry]) -> int:
        return self.write_section(
            "das",
            (
                {
                    "article_key": key,
                    "das": None if e.das is None else e.das.to_dict(),
                    "das_encouraged": e.das_encouraged,
                    "das_required": e.das_required,
                }
                for key, e in sorted(entries.items())
            ),
        )

    def load_analysis(self) -> dict[str, AnalysisEntry]:
        _, items = self.read_section("das")
        return {
            d["article_key"]: AnalysisEntry(
                None if d["das"] is None else DasStatement.from_dict(d["das"]),
                d["das_encouraged"],
                d["das_required"],
            )
            for d in items
        }

    def save_indexes(self, index: CitationIndex, profiles: dict) -> int:
        def items():
            for cited in sorted(index.cited_by):
                for month, citing in index.cited_by[cited]:
                    yield {"kind": "citation", "cited": cited, "citing": citing, "citing_month_index": month}
            for key, profile in profiles.items():
                yield {
                    "kind": "author",
                    "given_name": key.given_name,
                    "surname": key.surname,
                    "publications": [list(p) for p in profile.publications],
                }

        return self.write_section("indexes", items())

    def load_indexes(self) -> tuple[list[dict], list[dict]]:
        _, items = self.read_section("indexes")
        return (
            [d for d in items if d["kind"] == "citation"],
            [d for d in items if d["kind"] == "author"],
        )

    def table_section(self, window: int) -> str:
        return f"table_w{window}"

    def save_table(self, window: int, rows: Iterable[RegressionRow], meta: Optional[dict] = None) -> int:
        return self.write_section(self.table_section(window), (r.to_dict() for r in rows), meta)

    def load_table(self, window: int) -> tuple[dict, list[RegressionRow]]:
        header, items = self.read_section(self.table_section(window))
        return header, [RegressionRow.from_dict(d) for d in items]

