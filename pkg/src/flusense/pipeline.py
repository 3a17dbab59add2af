"""Pipeline stages behind the command-line subcommands.

Each stage reads everything it needs up front (so bad inputs fail before any
file is written), computes in memory and then writes its outputs under one
subdirectory of the configured output directory.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import svg
from .analytics import (CarryMode, KeywordRole, KeywordSet, adjust_irt, chi_square, incentive_ratio,
                        incentive_tables, pearson, pirt_ratio, ContingencyTable)
from .classifier import label_corpus
from .config import PipelineConfig
from .corpus import (Label, Post, Region, Season, assign_region, assign_season, ingest_posts, load_ili,
                     load_region_map, load_season_map, weekly_aggregate, write_posts)
from .embeddings import SgnsParams, build_word_network, train_sgns, write_network_csv
from .features import sweep_dimensions
from .gam import run_model_suite, write_curve_csv, write_suite_csv
from .io import read_lines, write_csv, write_json
from .sentiment import (IntensityMode, Polarity, SentimentLexicon, analysis_set, emoticon_frequency,
                        mean_intensity, score_text)
from .text import EmoticonCategory, EmoticonTable, Lexicon, segment

log = logging.getLogger(__name__)


class InputError(ValueError):
    """Input data failed validation before any output was written."""


@dataclass
class Resources:
    lexicon: Lexicon
    emoticons: EmoticonTable
    sentiment: SentimentLexicon
    hospital: KeywordSet
    duration: KeywordSet
    region_map: dict
    season_map: dict
    stoplist: tuple[str, ...]


def load_resources(cfg: PipelineConfig) -> Resources:
    try:
        sentiment = SentimentLexicon.load(cfg.sentiment_words, cfg.degree_words, cfg.negation_words)
        emoticons = EmoticonTable.load(cfg.emoticons)
        base = Lexicon.load(cfg.lexicon) if cfg.lexicon else Lexicon()
        lexicon = base.union(sorted(sentiment.vocabulary())).union(emoticons.literals())
        return Resources(
            lexicon=lexicon,
            emoticons=emoticons,
            sentiment=sentiment,
            hospital=KeywordSet.load(cfg.hospital_keywords, KeywordRole.HOSPITAL),
            duration=KeywordSet.load(cfg.duration_keywords, KeywordRole.DURATION),
            region_map=load_region_map(cfg.region_map),
            season_map=load_season_map(cfg.season_map),
            stoplist=tuple(read_lines(cfg.stoplist)) if cfg.stoplist else (),
        )
    except (ValueError, KeyError) as e:
        raise InputError(f"[resources] {e}") from e


def read_posts(path: Path, cfg: PipelineConfig, res: Resources, need_labels: bool = False) -> list[Post]:
    """Ingest, assign regions and tokenize."""
    try:
        ing = ingest_posts(path, window=(cfg.study_start, cfg.study_end))
        posts = [assign_region(p, res.region_map) for p in ing.posts]
    except (ValueError, KeyError) as e:
        raise InputError(f"[corpus] {path}: {e}") from e
    if not posts:
        raise InputError(f"[corpus] {path}: no usable posts")
    if need_labels:
        bad = [p.id for p in posts if p.label is Label.UNLABELED]
        if bad:
            raise InputError(f"[corpus] {path}: {len(bad)} posts lack a label (first: {bad[0]})")
    return [replace(p, tokens=tuple(segment(p.text, res.lexicon))) for p in posts]


# -- classify ---------------------------------------------------------------------

@dataclass
class Classified:
    posts: list[Post]
    sweep: object | None = None


def classify_posts(cfg: PipelineConfig, res: Resources, train: list[Post], posts: list[Post]) -> Classified:
    docs = [list(p.tokens) for p in train]
    labels = [1 if p.label is Label.INFLUENZA else -1 for p in train]
    sweep = sweep_dimensions(docs, labels, grid=cfg.grid, seed=cfg.seed, test_fraction=cfg.test_fraction,
                             C=cfg.svm_c, kernel=cfg.svm_kernel, gamma=cfg.svm_gamma, tol=cfg.svm_tol)
    return Classified(label_corpus(sweep.model, posts, sweep.space), sweep)


def write_classify(out: Path, result: Classified, n_train: int) -> None:
    sw = result.sweep
    out.mkdir(parents=True, exist_ok=True)
    write_posts(out / "labeled.jsonl", result.posts)
    sw.model.save(out / "model.json")
    sw.space.save(out / "features.tsv")
    write_csv(out / "sweep.csv", ("k", "n_selected", "train_accuracy", "test_accuracy"),
              ((r["k"], r["n_selected"], r["train_accuracy"], r["test_accuracy"]) for r in sw.table))
    n_flu = sum(p.label is Label.INFLUENZA for p in result.posts)
    write_json(out / "metrics.json", {
        "best_k": sw.best_k,
        "test": sw.report.to_json(),
        "sweep": sw.table,
        "n_train": int(sw.train_idx.size),
        "n_test": int(sw.test_idx.size),
        "n_labeled_input": n_train,
        "n_posts": len(result.posts),
        "n_influenza": n_flu,
        "n_noise": len(result.posts) - n_flu,
    })


def labeled_posts(cfg: PipelineConfig, res: Resources) -> list[Post]:
    """Labelled corpus from ``labeled`` if configured, else classify ``posts`` in memory."""
    if cfg.labeled is not None:
        posts = read_posts(cfg.labeled, cfg, res, need_labels=True)
        return posts
    if cfg.train is None:
        raise InputError("[config] need either 'labeled' or 'train' to obtain labelled posts")
    train = read_posts(cfg.train, cfg, res, need_labels=True)
    posts = read_posts(cfg.posts, cfg, res)
    return classify_posts(cfg, res, train, posts).posts


def influenza_only(posts: list[Post]) -> list[Post]:
    return [p for p in posts if p.label is Label.INFLUENZA]


# -- embed ------------------------------------------------------------------------

def run_embed(cfg: PipelineConfig, res: Resources, posts: list[Post], out: Path) -> None:
    params = SgnsParams(dim=cfg.emb_dim, window=cfg.emb_window, negatives=cfg.emb_negatives,
                        epochs=cfg.emb_epochs, min_count=cfg.emb_min_count, lr=cfg.emb_lr)
    irt = influenza_only(posts)
    models = {}
    for region in Region:
        corpus = [list(p.tokens) for p in irt if p.region is region]
        models[region] = train_sgns(corpus, params, seed=cfg.seed)
    networks, missing = build_word_network(cfg.seed_words, models[Region.NORTH], models[Region.SOUTH],
                                           k=cfg.network_k, stoplist=res.stoplist)
    out.mkdir(parents=True, exist_ok=True)
    for region, model in models.items():
        model.save(out / f"vectors_{region.value.lower()}.txt")
    write_network_csv(out / "network.csv", networks)
    write_json(out / "summary.json", {
        "params": asdict(params),
        "seed": cfg.seed,
        "vocabulary": {r.value: len(m.vocab) for r, m in models.items()},
        "epoch_loss": {r.value: m.epoch_loss for r, m in models.items()},
        "missing_seeds": missing,
        "edges": {n.seed: len(n.edges) for n in networks},
    })


# -- analyze ----------------------------------------------------------------------

SEASON_ORDER = [s.value for s in Season]


def _chi_rows(name: str, table: ContingencyTable):
    res = chi_square(table)
    cells = []
    for i, r in enumerate(table.row_labels):
        for j, c in enumerate(table.col_labels):
            cells.append((name, r, c, float(table.counts[i, j]), float(res.expected[i, j])))
    return res, cells


def run_analyze(cfg: PipelineConfig, res: Resources, posts: list[Post], ili, out: Path,
                series: dict | None = None) -> None:
    irt = influenza_only(posts)
    season_of = {p.id: assign_season(p.timestamp, res.season_map).value for p in irt}
    out.mkdir(parents=True, exist_ok=True)
    report: dict = {"n_influenza_posts": len(irt)}

    # treatment incentive
    ratios = incentive_ratio(irt, res.hospital, group=lambda p: (p.region.value, season_of[p.id]))
    ratios.update(incentive_ratio(irt, res.hospital, group=lambda p: (p.region.value, "Total")))
    counts = _count(irt, lambda p: (p.region.value, season_of[p.id]))
    counts.update(_count(irt, lambda p: (p.region.value, "Total")))
    inc_rows = []
    for region in Region:
        for season in SEASON_ORDER + ["Total"]:
            key = (region.value, season)
            if key in ratios:
                inc_rows.append((region.value, season, counts[key], ratios[key]))
    write_csv(out / "incentives.csv", ("region", "season", "n_posts", "ratio"), inc_rows)
    report["incentives"] = [dict(zip(("region", "season", "n_posts", "ratio"), r)) for r in inc_rows]

    # chi-square tests: incentive per season, sentiment polarity by region
    stats_rows, cell_rows, chi_json = [], [], {}
    for season, table in incentive_tables(irt, res.hospital, res.season_map).items():
        result, cells = _chi_rows(f"incentive:{season}", table)
        stats_rows.append((f"incentive:{season}", result.statistic, result.dof, result.p_value))
        cell_rows += cells
        chi_json[f"incentive:{season}"] = result.to_json()

    scored = [(p, score_text(p.tokens, res.sentiment)) for p in irt]
    scored = [(p, s) for p, s in scored if analysis_set([s], cfg.score_limit)]
    pol = np.zeros((2, 2))
    for p, s in scored:
        pol[0 if p.region is Region.NORTH else 1, 0 if s.polarity is Polarity.POSITIVE else 1] += 1
    if np.all(pol.sum(axis=0) > 0) and np.all(pol.sum(axis=1) > 0):
        table = ContingencyTable(pol, ("North", "South"), ("Positive", "Negative"))
        result, cells = _chi_rows("sentiment", table)
        stats_rows.append(("sentiment", result.statistic, result.dof, result.p_value))
        cell_rows += cells
        chi_json["sentiment"] = result.to_json()
    else:
        log.warning("sentiment table has an empty row or column; chi-square skipped")
    write_csv(out / "chi_square.csv", ("test", "row", "column", "observed", "expected"), cell_rows)
    write_csv(out / "chi_square_stats.csv", ("test", "statistic", "dof", "p_value"), stats_rows)
    report["chi_square"] = chi_json

    # sentiment intensity
    int_rows = []
    for mode in IntensityMode:
        items = [((p.region.value, season_of[p.id]), s.value) for p, s in scored]
        items += [((p.region.value, "Total"), s.value) for p, s in scored]
        means = mean_intensity(items, mode)
        for region in Region:
            for season in SEASON_ORDER + ["Total"]:
                v = means.get((region.value, season))
                if v is not None:
                    int_rows.append((region.value, season, mode.value, v))
    write_csv(out / "intensity.csv", ("region", "season", "mode", "value"), int_rows)

    # emoticons
    emo = emoticon_frequency(irt, res.emoticons)
    emo_rows = [(r.value, c.value, emo.frequency[(r, c)]) for r in Region for c in EmoticonCategory
                if (r, c) in emo.frequency]
    write_csv(out / "emoticons.csv", ("region", "category", "frequency"), emo_rows)
    write_csv(out / "emoticon_rates.csv", ("category", "rate"),
              ((c.value, emo.rate.get(c)) for c in EmoticonCategory))
    report["emoticon_rates"] = {c.value: emo.rate.get(c) for c in EmoticonCategory}

    # weekly series, PIRT ratio and IRT-ILI correlation
    series = series or weekly_series(cfg, res, posts, ili)
    pirt_rows, corr_rows = [], []
    for region, s in series.items():
        for w, a, b, adj, ratio in zip(s.weeks, s.irt, s.pirt, s.adjusted_irt, pirt_ratio(s)):
            pirt_rows.append((region.value, str(w), a, b, adj, ratio))
        try:
            c = pearson(s.irt, s.ili)
            corr_rows.append((region.value, c.r, c.p_value, c.n))
        except ValueError as e:
            log.warning("%s: correlation skipped: %s", region.value, e)
    write_csv(out / "weekly.csv", ("region", "week", "irt", "pirt", "adjusted_irt", "pirt_ratio"), pirt_rows)
    write_csv(out / "correlation.csv", ("region", "r", "p_value", "n"), corr_rows)
    report["correlation"] = {r[0]: {"r": r[1], "p_value": r[2], "n": r[3]} for r in corr_rows}
    write_json(out / "analysis.json", report)

    if cfg.charts:
        _analysis_charts(out, inc_rows, int_rows, emo, series)


def _count(posts, key) -> dict:
    out: dict = {}
    for p in posts:
        k = key(p)
        out[k] = out.get(k, 0) + 1
    return out


def _analysis_charts(out: Path, inc_rows, int_rows, emo, series) -> None:
    seasons = SEASON_ORDER + ["Total"]
    inc = {(r, s): v for r, s, _, v in inc_rows}
    svg.bar_chart(out / "fig_incentive.svg", "Treatment incentive by season", seasons,
                  {r.value: [inc.get((r.value, s)) for s in seasons] for r in Region})
    absolute = {(r, s): v for r, s, m, v in int_rows if m == IntensityMode.ABSOLUTE.value}
    svg.bar_chart(out / "fig_intensity.svg", "Mean absolute sentiment intensity", seasons,
                  {r.value: [absolute.get((r.value, s)) for s in seasons] for r in Region})
    cats = [c.value for c in EmoticonCategory]
    svg.bar_chart(out / "fig_emoticons.svg", "Emoticons per influenza post", cats,
                  {r.value: [emo.frequency.get((r, c)) for c in EmoticonCategory] for r in Region})
    for region, s in series.items():
        labels = [str(w) for w in s.weeks]
        svg.line_chart(out / f"fig_pirt_{region.value.lower()}.svg", f"PIRT ratio ({region.value})", labels,
                       {"PIRT / IRT": pirt_ratio(s)})
        svg.scatter(out / f"fig_correlation_{region.value.lower()}.svg", f"IRT vs ILI ({region.value})",
                    [float(v) for v in s.irt], [float(v) for v in s.ili], note="y: ILI%")


# -- regress ----------------------------------------------------------------------

def weekly_series(cfg: PipelineConfig, res: Resources, posts: list[Post], ili) -> dict:
    out = {}
    for region in Region:
        try:
            s = weekly_aggregate(posts, ili, region, is_pirt=lambda p: res.duration.matches(p.text))
        except ValueError as e:
            raise InputError(f"[corpus] {region.value}: {e}") from e
        out[region] = adjust_irt(s, CarryMode(cfg.carry_mode))
    return out


def _slug(name: str) -> str:
    return "".join(ch.lower() if ch.isalnum() else "_" for ch in name).strip("_")


def run_regress(cfg: PipelineConfig, res: Resources, posts: list[Post], ili, out: Path,
                series: dict | None = None) -> None:
    series = series or weekly_series(cfg, res, posts, ili)
    rows = run_model_suite(series[Region.NORTH], series[Region.SOUTH], k=cfg.gam_k,
                           response_scale=cfg.response_scale)
    out.mkdir(parents=True, exist_ok=True)
    write_suite_csv(out / "suite.csv", rows)
    for row in rows:
        write_curve_csv(out / "curves" / f"{row.region.lower()}_{_slug(row.spec.value)}.csv", row.fit)
    write_json(out / "suite.json", {
        "carry_mode": cfg.carry_mode,
        "response_scale": cfg.response_scale,
        "models": [{"region": r.region, "spec": r.spec.value, "beta2": r.fit.beta2,
                    "n_iter": r.fit.n_iter, "loglik": r.fit.loglik, "n_weeks": int(r.fit.y.size)}
                   for r in rows],
    })
    if cfg.charts:
        for region in Region:
            fits = {r.spec.value: r.fit for r in rows if r.region == region.value}
            before, after = fits["Smooth+Lag"], fits["AdjustedSmooth+Lag"]
            svg.line_chart(out / f"fig_adjustment_{region.value.lower()}.svg",
                           f"Fitted ILI before and after IRT adjustment ({region.value})",
                           [str(w) for w in before.weeks],
                           {"observed": [float(v) for v in before.y],
                            "IRT": [float(v) for v in before.fitted],
                            "Adjusted IRT": [float(v) for v in after.fitted]})


def read_ili(cfg: PipelineConfig):
    try:
        return load_ili(cfg.ili)
    except (ValueError, KeyError) as e:
        raise InputError(f"[corpus] {cfg.ili}: {e}") from e
