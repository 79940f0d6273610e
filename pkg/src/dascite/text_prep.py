"""Tokenization, stop-word removal and Porter stemming."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

_TOKEN = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class PrepConfig:
    stopword_filter: bool = False
    stemming: bool = True

    def to_dict(self) -> dict:
        return {"stopword_filter": self.stopword_filter, "stemming": self.stemming}

    @classmethod
    def from_dict(cls, d: dict) -> "PrepConfig":
        return cls(bool(d["stopword_filter"]), bool(d["stemming"]))

    @property
    def tag(self) -> str:
        return f"stop={'on' if self.stopword_filter else 'off'},stem={'on' if self.stemming else 'off'}"


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that is not a letter or digit."""
    return _TOKEN.findall(text.lower())


def load_stopwords(path: Optional[str | Path] = None) -> frozenset[str]:
    """Stop-word list, one token per line. Defaults to the shipped English list."""
    if path is None:
        return _default_stopwords()
    text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


@lru_cache(maxsize=None)
def _default_stopwords() -> frozenset[str]:
    text = resources.files("dascite.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def remove_stopwords(tokens: Iterable[str], stopwords: Optional[frozenset[str]] = None) -> list[str]:
    stopwords = _default_stopwords() if stopwords is None else stopwords
    return [t for t in tokens if t not in stopwords]


def prepare(text: str, config: PrepConfig, stopwords: Optional[frozenset[str]] = None) -> list[str]:
    tokens = tokenize(text)
    if config.stopword_filter:
        tokens = remove_stopwords(tokens, stopwords)
    if config.stemming:
        tokens = [stem(t) for t in tokens]
    return tokens


# ---------------------------------------------------------------------------
# Porter (1980) suffix stripping
# ---------------------------------------------------------------------------

_VOWELS = frozenset("aeiou")


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem_: str) -> int:
    """Number of VC sequences in [C](VC)^m[V]."""
    m = 0
    prev_vowel = False
    for i in range(len(stem_)):
        vowel = not _is_consonant(stem_, i)
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _has_vowel(stem_: str) -> bool:
    return any(not _is_consonant(stem_, i) for i in range(len(stem_)))


def _ends_double_consonant(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    n = len(word)
    return (
        _is_consonant(word, n - 3)
        and not _is_consonant(word, n - 2)
        and _is_consonant(word, n - 1)
        and word[-1] not in "wxy"
    )


def _replace_longest(word: str, rules, condition) -> str:
    """Apply the rule with the longest matching suffix, if its condition holds."""
    for suffix, repl in rules:
        if word.endswith(suffix):
            base = word[: len(word) - len(suffix)]
            return base + repl if condition(base) else word
    return word


def _m_gt(k):
    return lambda base: _measure(base) > k


_STEP2 = sorted(
    [
        ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
        ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
        ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
        ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
        ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
    ],
    key=lambda r: -len(r[0]),
)

_STEP3 = sorted(
    [
        ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
        ("ical", "ic"), ("ful", ""), ("ness", ""),
    ],
    key=lambda r: -len(r[0]),
)

_STEP4 = sorted(
    [
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
        "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
    ],
    key=len,
    reverse=True,
)


def _step1a(w: str) -> str:
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith("ies"):
        return w[:-2]
    if w.endswith("ss"):
        return w
    if w.endswith("s"):
        return w[:-1]
    return w


def _step1b(w: str) -> str:
    if w.endswith("eed"):
        return w[:-1] if _measure(w[:-3]) > 0 else w
    for suffix in ("ed", "ing"):
        if w.endswith(suffix):
            base = w[: -len(suffix)]
            if not _has_vowel(base):
                return w
            return _step1b_tidy(base)
    return w


def _step1b_tidy(w: str) -> str:
    if w.endswith(("at", "bl", "iz")):
        return w + "e"
    if _ends_double_consonant(w) and w[-1] not in "lsz":
        return w[:-1]
    if _measure(w) == 1 and _ends_cvc(w):
        return w + "e"
    return w


def _step1c(w: str) -> str:
    if w.endswith("y") and _has_vowel(w[:-1]):
        return w[:-1] + "i"
    return w


def _step4(w: str) -> str:
    for suffix in _STEP4:
        if w.endswith(suffix):
            base = w[: -len(suffix)]
            if _measure(base) <= 1:
                return w
            if suffix == "ion" and not base.endswith(("s", "t")):
                return w
            return base
    return w


def _step5(w: str) -> str:
    if w.endswith("e"):
        base = w[:-1]
        m = _measure(base)
        if m > 1 or (m == 1 and not _ends_cvc(base)):
            w = base
    if _measure(w) > 1 and _ends_double_consonant(w) and w.endswith("l"):
        w = w[:-1]
    return w


@lru_cache(maxsize=65536)
def stem(token: str) -> str:
    """Porter stem of a lowercase token. Tokens of length <= 2 are returned as is."""
    if len(token) <= 2:
        return token
    w = _step1a(token)
    w = _step1b(w)
    w = _step1c(w)
    w = _replace_longest(w, _STEP2, _m_gt(0))
    w = _replace_longest(w, _STEP3, _m_gt(0))
    w = _step4(w)
    return _step5(w)
