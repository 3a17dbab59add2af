"""Pipeline configuration: one flat ``key = value`` file.

Relative paths resolve against the config file's directory. Path keys may be
overridden by environment variables named ``FLUSENSE_<KEY>`` (upper case).
Empty values mean "use the packaged default" for lexicon-type files.
"""

from __future__ import annotations

import datetime as dt
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .io import read_kv

PATH_KEYS = (
    "posts", "train", "ili", "labeled", "lexicon", "emoticons", "sentiment_words", "degree_words",
    "negation_words", "hospital_keywords", "duration_keywords", "region_map", "season_map", "stoplist",
)
# paths that must be given (the rest fall back to packaged data or are optional)
REQUIRED_PATHS = ("posts", "ili")


class ConfigError(ValueError):
    pass


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(v) for v in s.replace(" ", "").split(",") if v)


def _words(s: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in s.split(",") if v.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s: str) -> float | None:
    return float(s) if s.strip() else None


@dataclass
class PipelineConfig:
    # paths
    posts: Path | None = None
    train: Path | None = None
    ili: Path | None = None
    labeled: Path | None = None
    lexicon: Path | None = None
    emoticons: Path | None = None
    sentiment_words: Path | None = None
    degree_words: Path | None = None
    negation_words: Path | None = None
    hospital_keywords: Path | None = None
    duration_keywords: Path | None = None
    region_map: Path | None = None
    season_map: Path | None = None
    stoplist: Path | None = None
    out: Path = Path("out")
    seed: int = 0
    study_start: dt.date = dt.date(2016, 1, 25)
    study_end: dt.date = dt.date(2016, 12, 31)
    # classifier
    grid: tuple[int, ...] = (250, 500, 1000, 2000, 4000)
    test_fraction: float = 0.2
    svm_kernel: str = "rbf"
    svm_c: float = 1.0
    svm_gamma: float | None = None
    svm_tol: float = 1e-3
    # embeddings
    emb_dim: int = 100
    emb_window: int = 5
    emb_negatives: int = 5
    emb_epochs: int = 5
    emb_min_count: int = 5
    emb_lr: float = 0.025
    network_k: int = 100
    seed_words: tuple[str, ...] = ("influenza", "cold", "cough", "fever", "sneeze", "rhinobyon")
    # analysis
    score_limit: float = 100.0
    charts: bool = True
    # regression
    gam_k: int = 10
    carry_mode: str = "add"
    response_scale: float = 1.0
    source: Path | None = field(default=None, repr=False)

    def validate(self, need: tuple[str, ...] = REQUIRED_PATHS) -> None:
        problems = []
        for key in need:
            if getattr(self, key) is None:
                problems.append(f"{key}: not set")
        for key in PATH_KEYS:
            p = getattr(self, key)
            if p is not None and not Path(p).is_file():
                problems.append(f"{key}: file not found: {p}")
        if self.carry_mode not in ("add", "move"):
            problems.append(f"carry_mode: expected add or move, got {self.carry_mode!r}")
        if not self.grid:
            problems.append("grid: empty")
        if not 0 < self.test_fraction < 1:
            problems.append("test_fraction: must be in (0, 1)")
        if problems:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))


_PARSERS = {
    "seed": int, "test_fraction": float, "svm_c": float, "svm_gamma": _opt_float, "svm_tol": float,
    "emb_dim": int, "emb_window": int, "emb_negatives": int, "emb_epochs": int, "emb_min_count": int,
    "emb_lr": float, "network_k": int, "score_limit": float, "gam_k": int, "response_scale": float,
    "grid": _ints, "seed_words": _words, "charts": _bool, "svm_kernel": str, "carry_mode": str,
    "study_start": dt.date.fromisoformat, "study_end": dt.date.fromisoformat,
}


def load_config(path: str | Path | None = None, env: dict | None = None) -> PipelineConfig:
    env = os.environ if env is None else env
    if path is not None and not Path(path).is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = read_kv(path) if path is not None else {}
    except ValueError as e:
        raise ConfigError(str(e)) from None
    base = Path(path).resolve().parent if path is not None else Path.cwd()
    known = {f.name for f in fields(PipelineConfig)} - {"source"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = PipelineConfig(source=Path(path) if path is not None else None)
    for key, value in raw.items():
        try:
            if key in PATH_KEYS or key == "out":
                setattr(cfg, key, (base / value) if value else (None if key != "out" else Path("out")))
            else:
                setattr(cfg, key, _PARSERS[key](value))
        except ValueError as e:
            raise ConfigError(f"{key}: {e}") from None
    for key in PATH_KEYS + ("out",):
        override = env.get(f"FLUSENSE_{key.upper()}")
        if override:
            setattr(cfg, key, Path(override))
    return cfg
