"""Keyword ratios, PIRT flags, the Adjusted-IRT carry-forward and the two tests
used throughout the regional comparison (chi-square, Pearson)."""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np
from scipy import stats

from .corpus import DEFAULT_SEASONS, Post, Region, Season, SeasonMap, WeeklySeries, assign_season
from .io import read_lines


class KeywordRole(str, enum.Enum):
    HOSPITAL = "Hospital"
    DURATION = "Duration"


@dataclass(frozen=True)
class KeywordSet:
    name: str
    role: KeywordRole
    phrases: tuple[str, ...]

    def __post_init__(self):
        if not self.phrases:
            raise ValueError(f"keyword set {self.name!r} is empty")
        if len(set(self.phrases)) != len(self.phrases):
            raise ValueError(f"keyword set {self.name!r} has duplicate phrases")
        object.__setattr__(self, "_folded", tuple(p.casefold() for p in self.phrases))

    @classmethod
    def load(cls, path: str | Path | None, role: KeywordRole) -> "KeywordSet":
        if path is None:
            fname = "hospital.txt" if role is KeywordRole.HOSPITAL else "duration.txt"
            path = resources.files("flusense") / "data" / fname
        return cls(Path(str(path)).stem, role, tuple(read_lines(path)))

    def matches(self, text: str) -> bool:
        """Any phrase occurs as a substring of the raw text (case-insensitive)."""
        folded = text.casefold()
        return any(p in folded for p in self._folded)  # type: ignore[attr-defined]

    def hits(self, text: str) -> list[str]:
        folded = text.casefold()
        return [p for p, f in zip(self.phrases, self._folded) if f in folded]  # type: ignore[attr-defined]


def region_season(season_map: SeasonMap = DEFAULT_SEASONS) -> Callable[[Post], tuple]:
    return lambda p: (p.region, assign_season(p.timestamp, season_map))


def incentive_ratio(posts: Iterable[Post], hospital: KeywordSet,
                    group: Callable[[Post], Hashable] | None = None) -> dict[Hashable, float]:
    """Share of posts per group mentioning at least one hospital phrase.

    Groups default to (region, season); groups with no posts are absent.
    """
    group = group or region_season()
    hit: dict[Hashable, int] = defaultdict(int)
    n: dict[Hashable, int] = defaultdict(int)
    for p in posts:
        key = group(p)
        n[key] += 1
        hit[key] += hospital.matches(p.text)
    return {k: hit[k] / n[k] for k in n}


# -- contingency tables -----------------------------------------------------------

@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=float)
        if c.ndim != 2 or c.shape[0] < 2 or c.shape[1] < 2:
            raise ValueError(f"contingency table must be at least 2x2, got shape {c.shape}")
        if np.any(c < 0):
            raise ValueError("contingency counts must be nonnegative")
        if len(self.row_labels) != c.shape[0] or len(self.col_labels) != c.shape[1]:
            raise ValueError("label count does not match table shape")
        object.__setattr__(self, "counts", c)

    @classmethod
    def of(cls, counts, rows=None, cols=None) -> "ContingencyTable":
        counts = np.asarray(counts, dtype=float)
        rows = tuple(rows or (f"r{i}" for i in range(counts.shape[0])))
        cols = tuple(cols or (f"c{j}" for j in range(counts.shape[1])))
        return cls(counts, rows, cols)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    expected: np.ndarray

    def to_json(self) -> dict:
        return {"statistic": self.statistic, "dof": self.dof, "p_value": self.p_value,
                "expected": self.expected.tolist()}


class ZeroMarginalError(ValueError):
    pass


def chi_square(table: ContingencyTable, row_totals: Sequence[float] | None = None,
               col_totals: Sequence[float] | None = None) -> ChiSquareResult:
    """Pearson chi-square test of independence, no continuity correction.

    Expected counts are R_i C_j / N from the table's own margins. Published
    tables sometimes report margins that also count items outside the cells
    (e.g. neutral posts in a polarity table); pass those as ``row_totals`` /
    ``col_totals`` to reproduce their expected values. N is then the sum of the
    row totals.
    """
    obs = table.counts
    rows = _margin(row_totals, obs.sum(axis=1), "row")
    cols = _margin(col_totals, obs.sum(axis=0), "column")
    if np.any(rows == 0) or np.any(cols == 0):
        raise ZeroMarginalError("contingency table has an empty row or column")
    expected = np.outer(rows, cols) / rows.sum()
    stat = float(np.sum((obs - expected) ** 2 / expected))
    dof = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return ChiSquareResult(stat, dof, float(stats.chi2.sf(stat, dof)), expected)


def _margin(given: Sequence[float] | None, observed: np.ndarray, name: str) -> np.ndarray:
    if given is None:
        return observed
    given = np.asarray(given, dtype=float)
    if given.shape != observed.shape:
        raise ValueError(f"{name} totals have length {given.size}, table has {observed.size}")
    if np.any(given < observed):
        raise ValueError(f"{name} totals are smaller than the observed {name} sums")
    return given


def incentive_tables(posts: Iterable[Post], hospital: KeywordSet,
                     season_map: SeasonMap = DEFAULT_SEASONS) -> dict[str, ContingencyTable]:
    """Region x {with, without hospital phrase} tables per season plus ``Total``.

    Seasons where either region has no posts are left out.
    """
    counts: dict[str, np.ndarray] = defaultdict(lambda: np.zeros((2, 2)))
    row = {Region.NORTH: 0, Region.SOUTH: 1}
    for p in posts:
        col = 0 if hospital.matches(p.text) else 1
        season = assign_season(p.timestamp, season_map).value
        counts[season][row[p.region], col] += 1
        counts["Total"][row[p.region], col] += 1
    out = {}
    for key in [s.value for s in Season] + ["Total"]:
        c = counts.get(key)
        if c is None or np.any(c.sum(axis=1) == 0) or np.any(c.sum(axis=0) == 0):
            continue
        out[key] = ContingencyTable(c, ("North", "South"), ("with", "without"))
    return out


# -- correlation ------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p_value: float
    n: int


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Product-moment r with a two-sided p-value from t = r sqrt((n-2)/(1-r^2))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("series differ in length")
    n = x.size
    if n < 3:
        raise ValueError("pearson needs at least 3 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ValueError("pearson is undefined for a constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return CorrelationResult(r, 0.0, n)
    t = r * math.sqrt((n - 2) / (1 - r * r))
    return CorrelationResult(r, float(2 * stats.t.sf(abs(t), n - 2)), n)


# -- duration / PIRT --------------------------------------------------------------

def flag_pirt(post: Post | str, duration: KeywordSet) -> bool:
    text = post if isinstance(post, str) else post.text
    return duration.matches(text)


def pirt_ratio(series: WeeklySeries) -> list[float | None]:
    return [p / i if i > 0 else None for i, p in zip(series.irt, series.pirt)]


class CarryMode(str, enum.Enum):
    ADD = "add"
    MOVE = "move"


def adjust_irt(series: WeeklySeries, mode: CarryMode | str = CarryMode.ADD) -> WeeklySeries:
    """Carry each week's PIRT into the following week.

    ``add`` leaves PIRT in its origin week too; ``move`` takes it out of the origin
    week (the final week keeps its PIRT, having no successor).
    """
    mode = CarryMode(mode)
    irt = np.asarray(series.irt, dtype=np.int64)
    pirt = np.asarray(series.pirt, dtype=np.int64)
    adj = irt.copy()
    adj[1:] += pirt[:-1]
    if mode is CarryMode.MOVE:
        adj[:-1] -= pirt[:-1]
    return replace(series, adjusted_irt=tuple(int(v) for v in adj))
