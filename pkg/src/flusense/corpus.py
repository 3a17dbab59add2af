"""Posts, ILI records and weekly aggregation.

Posts come in as JSONL or CSV with ``id, timestamp, province, text`` (and an
optional ``label``). ILI records come in as CSV ``week,region,ili_pct`` with
ISO weeks written ``YYYY-Www``.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import json
import logging
from dataclasses import dataclass, field, replace
from functools import total_ordering
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .io import read_kv

log = logging.getLogger(__name__)


class Region(str, enum.Enum):
    NORTH = "North"
    SOUTH = "South"


class Label(str, enum.Enum):
    UNLABELED = "Unlabeled"
    INFLUENZA = "Influenza"
    NOISE = "Noise"


class Season(str, enum.Enum):
    SPRING = "Spring"
    SUMMER = "Summer"
    AUTUMN = "Autumn"
    WINTER = "Winter"


class UnmappedProvinceError(KeyError):
    """A post names a province the active region map does not cover."""


class AlignmentError(ValueError):
    def __init__(self, missing: Sequence["IsoWeek"]):
        self.missing = list(missing)
        super().__init__("weeks with posts but no ILI record: " + ", ".join(str(w) for w in self.missing))


@total_ordering
@dataclass(frozen=True)
class IsoWeek:
    year: int
    week: int

    def __post_init__(self):
        if not 1 <= self.week <= 53:
            raise ValueError(f"ISO week out of range: {self.week}")

    @classmethod
    def parse(cls, s: str) -> "IsoWeek":
        s = s.strip()
        year, sep, week = s.partition("-W")
        if not sep:
            # also accept the compact 201608 form used in week labels
            if len(s) == 6 and s.isdigit():
                return cls(int(s[:4]), int(s[4:]))
            raise ValueError(f"bad ISO week {s!r}; expected YYYY-Www")
        return cls(int(year), int(week))

    @classmethod
    def of(cls, when: dt.date | dt.datetime) -> "IsoWeek":
        y, w, _ = when.isocalendar()
        return cls(y, w)

    def monday(self) -> dt.date:
        return dt.date.fromisocalendar(self.year, self.week, 1)

    def next(self) -> "IsoWeek":
        return IsoWeek.of(self.monday() + dt.timedelta(days=7))

    def __lt__(self, other: "IsoWeek") -> bool:
        return (self.year, self.week) < (other.year, other.week)

    def __str__(self) -> str:
        return f"{self.year}-W{self.week:02d}"


def week_range(first: IsoWeek, last: IsoWeek) -> list[IsoWeek]:
    out = [first]
    while out[-1] < last:
        out.append(out[-1].next())
    return out


@dataclass(frozen=True)
class Post:
    id: str
    timestamp: dt.datetime
    province: str
    text: str
    region: Region | None = None
    tokens: tuple[str, ...] = ()
    label: Label = Label.UNLABELED

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"post {self.id!r} has empty text")

    @property
    def week(self) -> IsoWeek:
        return IsoWeek.of(self.timestamp)

    def to_json(self) -> dict:
        d = {
            "id": self.id,
            "timestamp": self.timestamp.isoformat(),
            "province": self.province,
            "text": self.text,
        }
        if self.region is not None:
            d["region"] = self.region.value
        if self.label is not Label.UNLABELED:
            d["label"] = self.label.value
        return d


@dataclass(frozen=True)
class IliRecord:
    week: IsoWeek
    region: Region
    ili_pct: float

    def __post_init__(self):
        if not self.ili_pct >= 0:
            raise ValueError(f"negative ILI at {self.week}: {self.ili_pct}")


@dataclass(frozen=True)
class WeeklySeries:
    region: Region
    weeks: tuple[IsoWeek, ...]
    irt: tuple[int, ...]
    pirt: tuple[int, ...]
    ili: tuple[float, ...]
    adjusted_irt: tuple[int, ...] | None = None

    def __post_init__(self):
        n = len(self.weeks)
        for name in ("irt", "pirt", "ili"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has length {len(getattr(self, name))}, expected {n}")
        if self.adjusted_irt is not None and len(self.adjusted_irt) != n:
            raise ValueError("adjusted_irt length mismatch")
        for w, a, b in zip(self.weeks, self.irt, self.pirt):
            if a < 0 or b < 0:
                raise ValueError(f"negative count at {w}")
            if b > a:
                raise ValueError(f"pirt exceeds irt at {w}: {b} > {a}")


# -- label / region / season maps ------------------------------------------------

_LABEL_ALIASES = {
    "influenza": Label.INFLUENZA, "positive": Label.INFLUENZA, "pos": Label.INFLUENZA,
    "1": Label.INFLUENZA, "true": Label.INFLUENZA, "+1": Label.INFLUENZA,
    "noise": Label.NOISE, "negative": Label.NOISE, "neg": Label.NOISE,
    "0": Label.NOISE, "-1": Label.NOISE, "false": Label.NOISE,
    "unlabeled": Label.UNLABELED, "": Label.UNLABELED,
}


def parse_label(value) -> Label:
    try:
        return _LABEL_ALIASES[str(value).strip().lower()]
    except KeyError:
        raise ValueError(f"unrecognised label {value!r}") from None


RegionMap = Mapping[str, Region]
SeasonMap = Mapping[int, Season]

DEFAULT_SEASONS: dict[int, Season] = {
    3: Season.SPRING, 4: Season.SPRING, 5: Season.SPRING,
    6: Season.SUMMER, 7: Season.SUMMER, 8: Season.SUMMER,
    9: Season.AUTUMN, 10: Season.AUTUMN, 11: Season.AUTUMN,
    12: Season.WINTER, 1: Season.WINTER, 2: Season.WINTER,
}


def load_region_map(path: str | Path | None = None) -> dict[str, Region]:
    """Province -> region from a ``province = North|South`` file (packaged default if no path)."""
    if path is None:
        path = resources.files("flusense") / "data" / "region_map.cfg"
    return {k: Region(v.capitalize()) for k, v in read_kv(path).items()}


def load_season_map(path: str | Path | None = None) -> dict[int, Season]:
    if path is None:
        return dict(DEFAULT_SEASONS)
    out = {int(k): Season(v.capitalize()) for k, v in read_kv(path).items()}
    if set(out) != set(range(1, 13)):
        raise ValueError(f"season map must cover months 1-12, got {sorted(out)}")
    return out


def assign_region(post: Post, region_map: RegionMap) -> Post:
    try:
        region = region_map[post.province]
    except KeyError:
        raise UnmappedProvinceError(f"province {post.province!r} (post {post.id}) not in region map") from None
    return post if post.region is region else replace(post, region=region)


def assign_season(when: dt.date | dt.datetime, season_map: SeasonMap = DEFAULT_SEASONS) -> Season:
    return season_map[when.month]


# -- ingestion --------------------------------------------------------------------

@dataclass
class Ingested:
    posts: list[Post] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)


def parse_timestamp(s: str) -> dt.datetime:
    s = s.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    return dt.datetime.fromisoformat(s)


def _record_to_post(rec: Mapping) -> Post:
    missing = [k for k in ("id", "timestamp", "province", "text") if not rec.get(k)]
    if missing:
        raise ValueError("missing " + ", ".join(missing))
    region = rec.get("region")
    return Post(
        id=str(rec["id"]),
        timestamp=parse_timestamp(str(rec["timestamp"])),
        province=str(rec["province"]),
        text=str(rec["text"]),
        region=Region(region) if region else None,
        label=parse_label(rec.get("label", "")),
    )


def ingest_posts(path: str | Path, fmt: str | None = None,
                 window: tuple[dt.date, dt.date] | None = None) -> Ingested:
    """Read posts in file order, skipping malformed records with a diagnostic.

    ``fmt`` is ``"jsonl"`` or ``"csv"``; inferred from the suffix when omitted.
    ``window`` is an inclusive date range; posts outside it are skipped.
    """
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt not in ("jsonl", "csv"):
        raise ValueError(f"unknown post format {fmt!r}")
    text = path.read_text(encoding="utf-8")
    result = Ingested()

    if fmt == "jsonl":
        records = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                records.append((lineno, json.loads(line)))
            except json.JSONDecodeError as e:
                result.skipped.append(f"{path.name}:{lineno}: bad JSON ({e.msg})")
    else:
        records = list(enumerate(csv.DictReader(text.splitlines()), 2))

    for lineno, rec in records:
        try:
            if not isinstance(rec, dict):
                raise ValueError("record is not an object")
            post = _record_to_post(rec)
        except (ValueError, TypeError) as e:
            result.skipped.append(f"{path.name}:{lineno}: {e}")
            continue
        if window is not None and not window[0] <= post.timestamp.date() <= window[1]:
            result.skipped.append(f"{path.name}:{lineno}: outside study window")
            continue
        result.posts.append(post)

    for msg in result.skipped:
        log.warning("skipped %s", msg)
    return result


def write_posts(path: str | Path, posts: Iterable[Post]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(p.to_json(), ensure_ascii=False, sort_keys=True) for p in posts]
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def load_ili(path: str | Path) -> list[IliRecord]:
    records = []
    seen = set()
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            rec = IliRecord(IsoWeek.parse(row["week"]), Region(row["region"].strip().capitalize()),
                            float(row["ili_pct"]))
            key = (rec.week, rec.region)
            if key in seen:
                raise ValueError(f"duplicate ILI record for {rec.week} {rec.region.value}")
            seen.add(key)
            records.append(rec)
    for region in Region:
        weeks = sorted(r.week for r in records if r.region is region)
        if weeks and weeks != week_range(weeks[0], weeks[-1]):
            raise ValueError(f"ILI weeks for {region.value} are not contiguous")
    return records


def weekly_aggregate(posts: Iterable[Post], ili: Iterable[IliRecord], region: Region,
                     is_pirt: Callable[[Post], bool] | None = None) -> WeeklySeries:
    """Count influenza posts of ``region`` per ISO week, aligned to that region's ILI weeks."""
    ili_by_week = {r.week: r.ili_pct for r in ili if r.region is region}
    weeks = tuple(sorted(ili_by_week))
    irt = dict.fromkeys(weeks, 0)
    pirt = dict.fromkeys(weeks, 0)
    missing = set()
    for p in posts:
        if p.region is not region or p.label is not Label.INFLUENZA:
            continue
        w = p.week
        if w not in irt:
            missing.add(w)
            continue
        irt[w] += 1
        if is_pirt is not None and is_pirt(p):
            pirt[w] += 1
    if missing:
        raise AlignmentError(sorted(missing))
    return WeeklySeries(
        region=region,
        weeks=weeks,
        irt=tuple(irt[w] for w in weeks),
        pirt=tuple(pirt[w] for w in weeks),
        ili=tuple(ili_by_week[w] for w in weeks),
    )
