import datetime as dt
import json

import pytest
from hypothesis import given, strategies as st

from flusense.corpus import (AlignmentError, IliRecord, IsoWeek, Label, Post, Region, Season,
                             UnmappedProvinceError, assign_region, assign_season, ingest_posts, load_ili,
                             load_region_map, load_season_map, week_range, weekly_aggregate, write_posts)
from flusense.synth import SynthSpec, synth_corpus

TZ = dt.timezone(dt.timedelta(hours=8))


def post(i, when=dt.datetime(2016, 3, 9, 12, tzinfo=TZ), province="Beijing", text="fever", **kw):
    return Post(id=f"p{i}", timestamp=when, province=province, text=text, **kw)


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


REC = {"id": "a", "timestamp": "2016-03-01T08:00:00+08:00", "province": "Beijing", "text": "cough"}


# -- ingestion --------------------------------------------------------------------

def test_ingest_empty_file(tmp_path):
    f = tmp_path / "empty.jsonl"
    f.write_text("")
    got = ingest_posts(f)
    assert got.posts == [] and got.skipped == []


def test_ingest_three_valid_lines_in_order(tmp_path):
    f = tmp_path / "p.jsonl"
    write_jsonl(f, [dict(REC, id=i) for i in ("z", "a", "m")])
    got = ingest_posts(f)
    assert [p.id for p in got.posts] == ["z", "a", "m"]
    assert got.skipped == []


def test_ingest_skips_record_missing_text(tmp_path):
    f = tmp_path / "p.jsonl"
    bad = {k: v for k, v in REC.items() if k != "text"}
    write_jsonl(f, [REC, bad, dict(REC, id="b")])
    got = ingest_posts(f)
    assert [p.id for p in got.posts] == ["a", "b"]
    assert len(got.skipped) == 1 and "text" in got.skipped[0]


def test_ingest_bad_json_and_window(tmp_path):
    f = tmp_path / "p.jsonl"
    f.write_text(json.dumps(REC) + "\n{not json\n" + json.dumps(dict(REC, id="late", timestamp="2017-06-01T00:00:00Z")) + "\n")
    got = ingest_posts(f, window=(dt.date(2016, 1, 25), dt.date(2016, 12, 31)))
    assert [p.id for p in got.posts] == ["a"]
    assert len(got.skipped) == 2


def test_ingest_csv_matches_jsonl(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("id,timestamp,province,text,label\na,2016-03-01T08:00:00+08:00,Beijing,cough,Influenza\n")
    (p,) = ingest_posts(f).posts
    assert p.label is Label.INFLUENZA and p.text == "cough"


def test_ingest_is_idempotent_over_rereads(tmp_path):
    f = tmp_path / "p.jsonl"
    write_jsonl(f, [dict(REC, id=str(i)) for i in range(5)])
    assert ingest_posts(f).posts == ingest_posts(f).posts


def test_write_then_ingest_roundtrip(tmp_path):
    posts = [post(1, region=Region.NORTH, label=Label.NOISE), post(2, text="咳嗽 [sad]")]
    write_posts(tmp_path / "o.jsonl", posts)
    assert ingest_posts(tmp_path / "o.jsonl").posts == posts


def test_empty_text_rejected():
    with pytest.raises(ValueError):
        post(1, text="")


# -- regions and seasons ----------------------------------------------------------

def test_guangdong_is_south():
    assert assign_region(post(1, province="Guangdong"), load_region_map()).region is Region.SOUTH


def test_unmapped_province():
    with pytest.raises(UnmappedProvinceError):
        assign_region(post(1, province="X"), {"Guangdong": Region.SOUTH})


def test_assign_region_idempotent():
    m = load_region_map()
    once = assign_region(post(1, province="Hubei"), m)
    assert assign_region(once, m) == once


def test_region_map_is_a_partition():
    m = load_region_map()
    assert len(m) == 31
    assert {r for r in m.values()} == {Region.NORTH, Region.SOUTH}


@pytest.mark.parametrize("day,season", [
    (dt.date(2016, 4, 15), Season.SPRING),
    (dt.date(2016, 12, 1), Season.WINTER),
    (dt.date(2016, 6, 1), Season.SUMMER),
    (dt.date(2016, 5, 31), Season.SPRING),
])
def test_default_seasons(day, season):
    assert assign_season(day) is season


def test_packaged_season_map_equals_default():
    from flusense.corpus import DEFAULT_SEASONS
    assert load_season_map(None) == DEFAULT_SEASONS


def test_season_map_must_cover_all_months(tmp_path):
    f = tmp_path / "s.cfg"
    f.write_text("1 = Winter\n2 = Winter\n")
    with pytest.raises(ValueError):
        load_season_map(f)


# -- weeks ------------------------------------------------------------------------

def test_iso_week_parsing_and_order():
    assert IsoWeek.parse("2016-W04") == IsoWeek(2016, 4) == IsoWeek.parse("201604")
    assert IsoWeek(2016, 4).monday() == dt.date(2016, 1, 25)
    assert IsoWeek(2015, 53).next() == IsoWeek(2016, 1)
    assert len(week_range(IsoWeek(2016, 4), IsoWeek(2016, 52))) == 49


@given(st.dates(min_value=dt.date(2000, 1, 1), max_value=dt.date(2030, 12, 31)))
def test_iso_week_roundtrip(day):
    w = IsoWeek.of(day)
    assert IsoWeek.parse(str(w)) == w
    assert w.monday() <= day < w.monday() + dt.timedelta(days=7)


# -- ILI and weekly aggregation ---------------------------------------------------

def ili(weeks, region=Region.NORTH, value=1.0):
    return [IliRecord(IsoWeek(2016, w), region, value) for w in weeks]


def test_no_posts_gives_zero_series():
    s = weekly_aggregate([], ili(range(4, 8)), Region.NORTH)
    assert s.irt == (0, 0, 0, 0) and s.pirt == (0, 0, 0, 0)


def test_week_ten_counts():
    when = dt.datetime.combine(IsoWeek(2016, 10).monday(), dt.time(9), tzinfo=TZ)
    posts = [post(i, when=when, region=Region.NORTH, label=Label.INFLUENZA, text="long" if i < 2 else "short")
             for i in range(5)]
    s = weekly_aggregate(posts, ili(range(4, 53)), Region.NORTH, is_pirt=lambda p: p.text == "long")
    i = s.weeks.index(IsoWeek(2016, 10))
    assert s.irt[i] == 5 and s.pirt[i] == 2
    assert sum(s.irt) == 5


def test_aggregate_ignores_noise_and_other_region():
    posts = [post(1, region=Region.NORTH, label=Label.NOISE), post(2, region=Region.SOUTH, label=Label.INFLUENZA)]
    s = weekly_aggregate(posts, ili(range(4, 53)), Region.NORTH)
    assert sum(s.irt) == 0


def test_aggregate_rejects_posts_outside_ili_weeks():
    with pytest.raises(AlignmentError):
        weekly_aggregate([post(1, region=Region.NORTH, label=Label.INFLUENZA)], ili(range(20, 30)), Region.NORTH)


@given(st.lists(st.tuples(st.integers(4, 52), st.booleans(), st.sampled_from(list(Region))), max_size=60))
def test_aggregate_conserves_counts(items):
    posts = [post(i, when=dt.datetime.combine(IsoWeek(2016, w).monday(), dt.time(), tzinfo=TZ),
                  region=r, label=Label.INFLUENZA, text="long" if flag else "x")
             for i, (w, flag, r) in enumerate(items)]
    s = weekly_aggregate(posts, ili(range(4, 53), Region.SOUTH), Region.SOUTH, is_pirt=lambda p: p.text == "long")
    assert sum(s.irt) == sum(r is Region.SOUTH for _, _, r in items)
    assert sum(s.pirt) == sum(r is Region.SOUTH and f for _, f, r in items)
    assert all(p <= i for i, p in zip(s.irt, s.pirt))


def test_load_ili(tmp_path):
    f = tmp_path / "ili.csv"
    f.write_text("week,region,ili_pct\n2016-W04,North,3.1\n2016-W05,North,3.3\n2016-W04,South,2.0\n")
    recs = load_ili(f)
    assert [(str(r.week), r.region, r.ili_pct) for r in recs][0] == ("2016-W04", Region.NORTH, 3.1)


@pytest.mark.parametrize("body", [
    "2016-W04,North,3.1\n2016-W04,North,3.3\n",   # duplicate
    "2016-W04,North,3.1\n2016-W06,North,3.3\n",   # gap
    "2016-W04,North,-1\n",                        # negative
])
def test_load_ili_rejects(tmp_path, body):
    f = tmp_path / "ili.csv"
    f.write_text("week,region,ili_pct\n" + body)
    with pytest.raises(ValueError):
        load_ili(f)


# -- synthetic corpora ------------------------------------------------------------

def test_synth_deterministic():
    spec = SynthSpec(n_posts=50)
    a, b = synth_corpus(spec, 3), synth_corpus(spec, 3)
    assert a.posts == b.posts and a.labels == b.labels


def test_synth_zero_posts():
    assert synth_corpus(SynthSpec(n_posts=0), 0).posts == []


def test_synth_planted_pair_ranks_top_two():
    from flusense.features import fit_feature_space
    from flusense.text import segment
    spec = SynthSpec(n_posts=400, planted_pair=("token_A", "token_B"))
    c = synth_corpus(spec, 1)
    docs = [segment(p.text, c.lexicon) for p in c.posts]
    space = fit_feature_space(docs, c.labels, 2)
    assert "token_A" in space.selected
