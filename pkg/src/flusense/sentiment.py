"""Lexicon sentiment scores, range filtering, intensity means and emoticon rates."""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

from .corpus import Post, Region
from .io import read_lines, read_tsv
from .text import EmoticonCategory, EmoticonTable, extract_emoticons

WINDOW = 3
SCORE_LIMIT = 100.0


class Polarity(str, enum.Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"
    NEUTRAL = "Neutral"


class IntensityMode(str, enum.Enum):
    ABSOLUTE = "Absolute"
    POSITIVE_ONLY = "PositiveOnly"
    NEGATIVE_ONLY = "NegativeOnly"


@dataclass(frozen=True)
class SentimentScore:
    value: float

    @property
    def polarity(self) -> Polarity:
        if self.value > 0:
            return Polarity.POSITIVE
        if self.value < 0:
            return Polarity.NEGATIVE
        return Polarity.NEUTRAL


@dataclass(frozen=True)
class SentimentLexicon:
    words: Mapping[str, float]
    degree: Mapping[str, float] = field(default_factory=dict)
    negations: frozenset[str] = frozenset()

    def __post_init__(self):
        bad = [w for w, s in self.words.items() if s == 0]
        if bad:
            raise ValueError(f"zero-strength sentiment words: {bad[:5]}")
        bad = [w for w, m in self.degree.items() if not m > 0]
        if bad:
            raise ValueError(f"non-positive degree multipliers: {bad[:5]}")

    @classmethod
    def load(cls, words: str | Path | None = None, degree: str | Path | None = None,
             negations: str | Path | None = None) -> "SentimentLexicon":
        data = resources.files("flusense") / "data"
        words = words or data / "sentiment.tsv"
        degree = degree or data / "degree.tsv"
        negations = negations or data / "negation.txt"
        return cls(
            words={r[0].strip(): float(r[1]) for r in read_tsv(words)},
            degree={r[0].strip(): float(r[1]) for r in read_tsv(degree)},
            negations=frozenset(read_lines(negations)),
        )

    def vocabulary(self) -> set[str]:
        return set(self.words) | set(self.degree) | set(self.negations)


def score_text(tokens: Sequence[str], lexicon: SentimentLexicon, window: int = WINDOW) -> SentimentScore:
    """Sum of base strengths, each scaled by the nearest preceding degree adverb and
    flipped by a negation word, both looked up in the ``window`` tokens before it."""
    total = 0.0
    for i, tok in enumerate(tokens):
        base = lexicon.words.get(tok)
        if base is None:
            continue
        context = tokens[max(0, i - window):i]
        mult = 1.0
        for prev in reversed(context):
            if prev in lexicon.degree:
                mult = lexicon.degree[prev]
                break
        sign = -1.0 if any(t in lexicon.negations for t in context) else 1.0
        total += base * mult * sign
    return SentimentScore(total)


def filter_range(scores: Iterable[SentimentScore], limit: float = SCORE_LIMIT) -> list[SentimentScore]:
    """Keep scores in the closed interval [-limit, limit]."""
    return [s for s in scores if -limit <= s.value <= limit]


def analysis_set(scores: Iterable[SentimentScore], limit: float = SCORE_LIMIT) -> list[SentimentScore]:
    """In-range, non-neutral scores."""
    return [s for s in filter_range(scores, limit) if s.value != 0]


def mean_intensity(items: Iterable[tuple[Hashable, float]], mode: IntensityMode) -> dict[Hashable, float]:
    """Mean score per group. Groups with no qualifying values are absent."""
    sums: dict[Hashable, float] = defaultdict(float)
    counts: dict[Hashable, int] = defaultdict(int)
    for key, v in items:
        if mode is IntensityMode.ABSOLUTE:
            v = abs(v)
        elif mode is IntensityMode.POSITIVE_ONLY and not v > 0:
            continue
        elif mode is IntensityMode.NEGATIVE_ONLY and not v < 0:
            continue
        sums[key] += v
        counts[key] += 1
    return {k: sums[k] / counts[k] for k in sorted(counts, key=_sort_key)}


def _sort_key(k):
    if isinstance(k, tuple):
        return tuple(str(getattr(x, "value", x)) for x in k)
    return (str(getattr(k, "value", k)),)


@dataclass(frozen=True)
class EmoticonSummary:
    frequency: dict[tuple[Region, EmoticonCategory], float]  # mean occurrences per post
    rate: dict[EmoticonCategory, float]                       # north / south, absent if south is 0
    n_posts: dict[Region, int]


def emoticon_frequency(posts: Iterable[Post], table: EmoticonTable) -> EmoticonSummary:
    totals: dict[tuple[Region, EmoticonCategory], int] = defaultdict(int)
    n_posts: dict[Region, int] = defaultdict(int)
    for p in posts:
        if p.region is None:
            raise ValueError(f"post {p.id} has no region")
        n_posts[p.region] += 1
        for cat, c in extract_emoticons(p.text, table).items():
            totals[(p.region, cat)] += c
    freq = {}
    for region in Region:
        if n_posts[region]:
            for cat in EmoticonCategory:
                freq[(region, cat)] = totals[(region, cat)] / n_posts[region]
    rate = {}
    for cat in EmoticonCategory:
        north = freq.get((Region.NORTH, cat))
        south = freq.get((Region.SOUTH, cat))
        if north is not None and south:
            rate[cat] = north / south
    return EmoticonSummary(freq, rate, dict(n_posts))
