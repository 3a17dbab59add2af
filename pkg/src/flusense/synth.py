"""Seeded synthetic corpora and weekly series with planted structure.

Nothing here is meant to look like real microblog text. Posts are space-joined
pseudo-words drawn from two class vocabularies plus a shared one, with
sentiment phrases, duration and hospital phrases, emoticons and optional
co-occurring token pairs mixed in at configurable rates.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .corpus import IsoWeek, Label, Post, Region, WeeklySeries, load_region_map, week_range, write_posts
from .io import write_csv
from .text import EmoticonCategory, Lexicon

SEED_WORDS = ("influenza", "cold", "cough", "fever", "sneeze", "rhinobyon")
SYMPTOM_WORDS = ("headache", "sore throat", "runny nose", "chills", "fatigue", "virus", "dizzy",
                 "nausea", "muscle ache", "stuffy", "phlegm", "temperature", "medicine", "sick leave")
NOISE_WORDS = ("weather", "traffic", "movie", "football", "dinner", "shopping", "concert", "exam",
               "holiday", "stock", "game", "coffee", "subway", "weekend")
POSITIVE_SENTIMENT = ("happy", "better", "recover", "relieved", "good", "glad", "grateful")
NEGATIVE_SENTIMENT = ("sad", "painful", "terrible", "tired", "uncomfortable", "miserable", "awful", "worried")
DEGREE_WORDS = ("very", "extremely", "slightly")
NEGATION_WORDS = ("not", "never")
HOSPITAL_PHRASES = ("hospital", "doctor", "blood test", "transfusion", "take an injection", "queue")
DURATION_PHRASES = ("two weeks", "half a month", "one month", "several weeks", "a long time", "over ten days")
EMOTICONS = {
    EmoticonCategory.JOY: ("[haha]", "[laugh]"),
    EmoticonCategory.HAPPINESS: ("[smile]", "[love]"),
    EmoticonCategory.SADNESS: ("[sad]", "[tears]"),
    EmoticonCategory.ANGER: ("[angry]", "[rage]"),
}


@dataclass(frozen=True)
class RegionKnobs:
    share: float = 0.5
    hospital_rate: float = 0.05
    duration_rate: float = 0.1
    sentiment_rate: float = 0.6
    positive_sentiment: float = 0.3
    negation_rate: float = 0.1
    degree_rate: float = 0.3
    emoticon_rates: tuple[float, float, float, float] = (0.1, 0.1, 0.4, 0.1)  # Joy, Happiness, Sadness, Anger
    exclusive: tuple[tuple[str, str], ...] = ()  # (word, partner) pairs planted side by side in positives
    peaks: tuple[tuple[float, float, float], ...] = ((8.0, 5.0, 1.0), (48.0, 5.0, 0.6))  # (week, width, height)


@dataclass(frozen=True)
class SynthSpec:
    n_posts: int = 2000
    positive_fraction: float = 0.5
    n_flu_terms: int = 60
    n_noise_terms: int = 60
    n_shared_terms: int = 300
    class_terms: int = 3
    shared_terms: int = 6
    planted_pair: tuple[str, str] | None = None
    pair_rate: float = 1.0
    year: int = 2016
    first_week: int = 4
    last_week: int = 52
    north: RegionKnobs = field(default_factory=RegionKnobs)
    south: RegionKnobs = field(default_factory=RegionKnobs)

    def knobs(self, region: Region) -> RegionKnobs:
        return self.north if region is Region.NORTH else self.south


@dataclass
class SynthCorpus:
    posts: list[Post]
    labels: list[int]          # +1 influenza, -1 noise
    lexicon: Lexicon
    pirt: list[bool]           # ground truth: a duration phrase was planted


def vocabularies(spec: SynthSpec) -> tuple[list[str], list[str], list[str]]:
    flu = list(SEED_WORDS) + list(SYMPTOM_WORDS)
    flu += [f"flu{i:03d}" for i in range(max(spec.n_flu_terms - len(flu), 0))]
    noise = list(NOISE_WORDS) + [f"nz{i:03d}" for i in range(max(spec.n_noise_terms - len(NOISE_WORDS), 0))]
    shared = [f"sh{i:03d}" for i in range(spec.n_shared_terms)]
    return flu, noise, shared


def synth_lexicon(spec: SynthSpec) -> Lexicon:
    flu, noise, shared = vocabularies(spec)
    words = set(flu) | set(noise) | set(shared)
    words |= set(POSITIVE_SENTIMENT) | set(NEGATIVE_SENTIMENT) | set(DEGREE_WORDS) | set(NEGATION_WORDS)
    words |= set(HOSPITAL_PHRASES) | set(DURATION_PHRASES)
    words |= {lit for lits in EMOTICONS.values() for lit in lits}
    for knobs in (spec.north, spec.south):
        for pair in knobs.exclusive:
            words |= set(pair)
    if spec.planted_pair:
        words |= set(spec.planted_pair)
    return Lexicon.from_words(sorted(words))


def week_profile(knobs: RegionKnobs, weeks: list[IsoWeek]) -> np.ndarray:
    w = np.array([wk.week for wk in weeks], dtype=float)
    prof = np.full(w.size, 0.15)
    for center, width, height in knobs.peaks:
        prof += height * np.exp(-(((w - center) / width) ** 2))
    return prof / prof.sum()


def synth_corpus(spec: SynthSpec, seed: int) -> SynthCorpus:
    rng = np.random.default_rng(seed)
    flu, noise, shared = vocabularies(spec)
    lexicon = synth_lexicon(spec)
    provinces = {r: sorted(p for p, reg in load_region_map().items() if reg is r) for r in Region}
    weeks = week_range(IsoWeek(spec.year, spec.first_week), IsoWeek(spec.year, spec.last_week))
    profiles = {r: week_profile(spec.knobs(r), weeks) for r in Region}
    uniform = np.full(len(weeks), 1.0 / len(weeks))

    posts, labels, pirt = [], [], []
    for i in range(spec.n_posts):
        positive = rng.random() < spec.positive_fraction
        region = Region.NORTH if rng.random() < spec.north.share else Region.SOUTH
        knobs = spec.knobs(region)
        week = weeks[rng.choice(len(weeks), p=profiles[region] if positive else uniform)]
        when = dt.datetime.combine(week.monday(), dt.time(), tzinfo=dt.timezone(dt.timedelta(hours=8)))
        when += dt.timedelta(seconds=int(rng.integers(0, 7 * 86400)))

        pool = flu if positive else noise
        toks = [pool[j] for j in rng.integers(0, len(pool), spec.class_terms)]
        toks += [shared[j] for j in rng.integers(0, len(shared), spec.shared_terms)]
        rng.shuffle(toks)
        has_duration = False
        if positive:
            if spec.planted_pair and rng.random() < spec.pair_rate:
                toks += list(spec.planted_pair)
            for word, partner in knobs.exclusive:
                toks += [word, partner]
            if rng.random() < knobs.hospital_rate:
                toks.append(HOSPITAL_PHRASES[rng.integers(len(HOSPITAL_PHRASES))])
            if rng.random() < knobs.duration_rate:
                toks.append(DURATION_PHRASES[rng.integers(len(DURATION_PHRASES))])
                has_duration = True
        if rng.random() < knobs.sentiment_rate:
            toks += _sentiment_phrase(rng, knobs)
        for cat, rate in zip(EmoticonCategory, knobs.emoticon_rates):
            for _ in range(rng.poisson(rate)):
                lits = EMOTICONS[cat]
                toks.append(lits[rng.integers(len(lits))])

        prov = provinces[region][rng.integers(len(provinces[region]))]
        posts.append(Post(id=f"s{seed}-{i:06d}", timestamp=when, province=prov, text=" ".join(toks)))
        labels.append(1 if positive else -1)
        pirt.append(has_duration)
    return SynthCorpus(posts, labels, lexicon, pirt)


def _sentiment_phrase(rng, knobs: RegionKnobs) -> list[str]:
    pool = POSITIVE_SENTIMENT if rng.random() < knobs.positive_sentiment else NEGATIVE_SENTIMENT
    phrase = []
    if rng.random() < knobs.negation_rate:
        phrase.append(NEGATION_WORDS[rng.integers(len(NEGATION_WORDS))])
    if rng.random() < knobs.degree_rate:
        phrase.append(DEGREE_WORDS[rng.integers(len(DEGREE_WORDS))])
    phrase.append(pool[rng.integers(len(pool))])
    return phrase


# -- weekly series with a planted carry-forward ------------------------------------

def synth_weekly(seed: int, region: Region = Region.SOUTH, n_weeks: int = 49, carry: bool = True,
                 kappa: float = 200.0, ili_scale: float = 100.0) -> WeeklySeries:
    """Weekly IRT/PIRT/ILI where ILI follows IRT plus last week's PIRT.

    ``ili`` is returned in percent: the NB draw divided by ``ili_scale``; fit
    with ``response_scale=ili_scale`` to get back to the count scale. With
    ``carry=False`` ILI follows IRT alone.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(n_weeks, dtype=float)
    latent = 150 + 900 * np.exp(-(((t - 6) / 5) ** 2)) + 450 * np.exp(-(((t - n_weeks + 4) / 6) ** 2))
    irt = rng.poisson(latent)
    ratio = rng.uniform(0.05, 0.6, n_weeks)
    pirt = rng.binomial(irt, ratio)
    signal = irt.astype(float)
    if carry:
        signal[1:] += pirt[:-1]
    y = np.zeros(n_weeks)
    for i in range(n_weeks):
        lag = y[i - 2] if i >= 2 else 0.0
        mu = 40.0 * (signal[i] / 200.0) ** 0.8 * np.exp(0.001 * lag)
        y[i] = rng.negative_binomial(kappa, kappa / (kappa + mu))
    y = np.maximum(y, 1.0)
    weeks = tuple(week_range(IsoWeek(2016, 4), IsoWeek(2016, 4 + n_weeks - 1)))
    return WeeklySeries(region, weeks, tuple(int(v) for v in irt), tuple(int(v) for v in pirt),
                        tuple(float(v) / ili_scale for v in y))


# -- a complete on-disk fixture for the command-line pipeline ----------------------

FIXTURE_CONFIG = """\
# Synthetic fixture for the flusense pipeline. Paths are relative to this file.
posts = posts.jsonl
train = train.jsonl
ili = ili.csv
lexicon = lexicon.txt
out = out
seed = {seed}
study_start = {year}-01-25
study_end = {next_year}-01-01

# classifier
grid = 100,200,400
test_fraction = 0.2
svm_kernel = rbf
svm_c = 10

# embeddings (kept small so the fixture runs quickly)
emb_dim = 32
emb_window = 5
emb_negatives = 5
emb_epochs = 3
emb_min_count = 5
network_k = 20

# regression
gam_k = 10
carry_mode = add
"""


def fixture_spec(n_posts: int) -> SynthSpec:
    north = RegionKnobs(share=0.5, hospital_rate=0.04, duration_rate=0.15, positive_sentiment=0.35,
                        emoticon_rates=(0.15, 0.1, 0.3, 0.1), exclusive=(("heating", "dry air"),))
    south = RegionKnobs(share=0.5, hospital_rate=0.09, duration_rate=0.3, positive_sentiment=0.25,
                        emoticon_rates=(0.1, 0.1, 0.4, 0.15), exclusive=(("humid", "rainy"),),
                        peaks=((10.0, 6.0, 1.0), (46.0, 5.0, 0.8)))
    return SynthSpec(n_posts=n_posts, north=north, south=south)


def write_fixture(out_dir, seed: int = 7, n_train: int = 2000, n_posts: int = 5000) -> dict[str, str]:
    """Write train/posts/ILI/lexicon/config files for an end-to-end run.

    ILI per region and week follows the planted influenza posts of that week
    plus last week's prolonged ones, with multiplicative noise.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train = synth_corpus(fixture_spec(n_train), seed)
    posts = synth_corpus(fixture_spec(n_posts), seed + 1)

    labeled = [_with_label(p, y) for p, y in zip(train.posts, train.labels)]
    write_posts(out_dir / "train.jsonl", labeled)
    write_posts(out_dir / "posts.jsonl", posts.posts)
    words = set(train.lexicon.entries) | set(posts.lexicon.entries)
    (out_dir / "lexicon.txt").write_text("".join(w + "\n" for w in sorted(words)), encoding="utf-8")

    spec = fixture_spec(n_posts)
    weeks = week_range(IsoWeek(spec.year, spec.first_week), IsoWeek(spec.year, spec.last_week))
    pos = {w: i for i, w in enumerate(weeks)}
    rmap = load_region_map()
    rng = np.random.default_rng(seed + 2)
    rows = []
    for region in Region:
        irt = np.zeros(len(weeks))
        pirt = np.zeros(len(weeks))
        for p, y, long in zip(posts.posts, posts.labels, posts.pirt):
            if y > 0 and rmap[p.province] is region:
                irt[pos[p.week]] += 1
                pirt[pos[p.week]] += long
        signal = irt.copy()
        signal[1:] += pirt[:-1]
        ili = 1.0 + 0.08 * signal * np.exp(rng.normal(0.0, 0.08, len(weeks)))
        rows += [(str(w), region.value, round(float(v), 4)) for w, v in zip(weeks, ili)]
    write_csv(out_dir / "ili.csv", ("week", "region", "ili_pct"), rows)
    (out_dir / "config.cfg").write_text(
        FIXTURE_CONFIG.format(seed=seed, year=spec.year, next_year=spec.year + 1), encoding="utf-8")
    return {name: str(out_dir / name) for name in
            ("train.jsonl", "posts.jsonl", "ili.csv", "lexicon.txt", "config.cfg")}


def _with_label(post: Post, y: int) -> Post:
    return replace(post, label=Label.INFLUENZA if y > 0 else Label.NOISE)
