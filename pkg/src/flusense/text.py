"""Dictionary segmentation (forward maximum matching) and emoticon counting."""

from __future__ import annotations

import enum
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .io import read_tsv


class EmoticonCategory(str, enum.Enum):
    JOY = "Joy"
    HAPPINESS = "Happiness"
    SADNESS = "Sadness"
    ANGER = "Anger"


POSITIVE_EMOTICONS = (EmoticonCategory.JOY, EmoticonCategory.HAPPINESS)
NEGATIVE_EMOTICONS = (EmoticonCategory.SADNESS, EmoticonCategory.ANGER)


@dataclass(frozen=True)
class Lexicon:
    """Segmentation dictionary. ``entries`` maps word -> optional frequency weight."""

    entries: Mapping[str, float | None] = field(default_factory=dict)

    def __post_init__(self):
        if any(not w for w in self.entries):
            raise ValueError("lexicon entries must be non-empty")
        object.__setattr__(self, "_max_len", max((len(w) for w in self.entries), default=1))

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "Lexicon":
        entries: dict[str, float | None] = {}
        for w in words:
            if w in entries:
                raise ValueError(f"duplicate lexicon entry {w!r}")
            entries[w] = None
        return cls(entries)

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        entries: dict[str, float | None] = {}
        for row in read_tsv(path):
            word = row[0].strip()
            if word in entries:
                raise ValueError(f"{path}: duplicate lexicon entry {word!r}")
            entries[word] = float(row[1]) if len(row) > 1 and row[1].strip() else None
        return cls(entries)

    def save(self, path: str | Path) -> None:
        lines = [w if v is None else f"{w}\t{v:g}" for w, v in sorted(self.entries.items())]
        Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def max_len(self) -> int:
        return self._max_len  # type: ignore[attr-defined]

    def union(self, words: Iterable[str]) -> "Lexicon":
        entries = dict(self.entries)
        for w in words:
            entries.setdefault(w, None)
        return Lexicon(entries)


def is_separator(token: str) -> bool:
    """True for tokens made only of whitespace and punctuation."""
    return all(ch.isspace() or unicodedata.category(ch)[0] in "PZ" for ch in token)


def segment(text: str, lexicon: Lexicon, keep_separators: bool = False) -> list[str]:
    """Forward maximum matching: at each position take the longest lexicon entry,
    otherwise a single character.

    Whitespace/punctuation tokens are dropped unless ``keep_separators``; with it,
    ``"".join(segment(text, lex, True)) == text``.
    """
    tokens = []
    i, n = 0, len(text)
    max_len = lexicon.max_len
    while i < n:
        for size in range(min(max_len, n - i), 1, -1):
            if text[i:i + size] in lexicon.entries:
                break
        else:
            size = 1
        tok = text[i:i + size]
        if keep_separators or not is_separator(tok):
            tokens.append(tok)
        i += size
    return tokens


_BRACKETED = re.compile(r"\[[^\[\]\s]{1,16}\]")


@dataclass(frozen=True)
class EmoticonTable:
    mapping: Mapping[str, EmoticonCategory]

    @classmethod
    def load(cls, path: str | Path | None = None) -> "EmoticonTable":
        if path is None:
            path = resources.files("flusense") / "data" / "emoticons.tsv"
        mapping: dict[str, EmoticonCategory] = {}
        for row in read_tsv(path):
            literal, cat = row[0].strip(), EmoticonCategory(row[1].strip().capitalize())
            if literal in mapping and mapping[literal] is not cat:
                raise ValueError(f"{path}: {literal} mapped to two categories")
            mapping[literal] = cat
        return cls(mapping)

    def literals(self) -> list[str]:
        return sorted(self.mapping)


def extract_emoticons(text: str, table: EmoticonTable) -> dict[EmoticonCategory, int]:
    """Count bracketed emoticon literals per category; unknown brackets are ignored."""
    counts = Counter()
    for m in _BRACKETED.finditer(text):
        cat = table.mapping.get(m.group())
        if cat is not None:
            counts[cat] += 1
    return {cat: counts.get(cat, 0) for cat in EmoticonCategory}
