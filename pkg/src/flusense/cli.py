"""Command-line entry point: ``flusense <subcommand> --config FILE``.

Exit codes: 0 success, 1 invalid configuration or input, 2 failure while computing.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import ConfigError, PipelineConfig, load_config
from .synth import write_fixture

log = logging.getLogger("flusense")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _settings(args) -> PipelineConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = Path(args.out)
    if args.carry_mode is not None:
        cfg.carry_mode = args.carry_mode
    return cfg


def _need_labeled(cfg: PipelineConfig) -> tuple[str, ...]:
    return ("labeled",) if cfg.labeled is not None else ("posts", "train")


def cmd_classify(cfg: PipelineConfig) -> None:
    cfg.validate(need=("posts", "train"))
    res = pipeline.load_resources(cfg)
    train = pipeline.read_posts(cfg.train, cfg, res, need_labels=True)
    posts = pipeline.read_posts(cfg.posts, cfg, res)
    result = pipeline.classify_posts(cfg, res, train, posts)
    pipeline.write_classify(cfg.out / "classify", result, len(train))


def cmd_embed(cfg: PipelineConfig) -> None:
    cfg.validate(need=_need_labeled(cfg))
    res = pipeline.load_resources(cfg)
    posts = pipeline.labeled_posts(cfg, res)
    pipeline.run_embed(cfg, res, posts, cfg.out / "embed")


def cmd_analyze(cfg: PipelineConfig) -> None:
    cfg.validate(need=_need_labeled(cfg) + ("ili",))
    res = pipeline.load_resources(cfg)
    ili = pipeline.read_ili(cfg)
    posts = pipeline.labeled_posts(cfg, res)
    series = pipeline.weekly_series(cfg, res, posts, ili)
    pipeline.run_analyze(cfg, res, posts, ili, cfg.out / "analyze", series)


def cmd_regress(cfg: PipelineConfig) -> None:
    cfg.validate(need=_need_labeled(cfg) + ("ili",))
    res = pipeline.load_resources(cfg)
    ili = pipeline.read_ili(cfg)
    posts = pipeline.labeled_posts(cfg, res)
    series = pipeline.weekly_series(cfg, res, posts, ili)
    pipeline.run_regress(cfg, res, posts, ili, cfg.out / "regress", series)


def cmd_report(cfg: PipelineConfig) -> None:
    cfg.validate(need=("posts", "train", "ili"))
    res = pipeline.load_resources(cfg)
    ili = pipeline.read_ili(cfg)
    train = pipeline.read_posts(cfg.train, cfg, res, need_labels=True)
    raw = pipeline.read_posts(cfg.posts, cfg, res)
    result = pipeline.classify_posts(cfg, res, train, raw)
    posts = result.posts
    series = pipeline.weekly_series(cfg, res, posts, ili)
    pipeline.write_classify(cfg.out / "classify", result, len(train))
    pipeline.run_embed(cfg, res, posts, cfg.out / "embed")
    pipeline.run_analyze(cfg, res, posts, ili, cfg.out / "analyze", series)
    pipeline.run_regress(cfg, res, posts, ili, cfg.out / "regress", series)


COMMANDS = {
    "classify": (cmd_classify, "train the classifier and label the corpus"),
    "embed": (cmd_embed, "train per-region embeddings and build the word network"),
    "analyze": (cmd_analyze, "incentive, chi-square, sentiment, emoticon, PIRT and correlation reports"),
    "regress": (cmd_regress, "fit the eight weekly NB-GAM models"),
    "report": (cmd_report, "run classify, embed, analyze and regress"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", type=Path, help="override the output directory")
    common.add_argument("--carry-mode", choices=("add", "move"), help="PIRT carry-forward mode")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")

    parser = argparse.ArgumentParser(prog="flusense", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_)
    synth = sub.add_parser("synth", help="write the synthetic fixture (inputs plus config) to a directory")
    synth.add_argument("directory", type=Path)
    synth.add_argument("--seed", type=int, default=7)
    synth.add_argument("--train", type=int, default=2000, help="labelled training posts")
    synth.add_argument("--posts", type=int, default=5000, help="unlabelled corpus posts")
    synth.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "synth":
            for path in write_fixture(args.directory, args.seed, args.train, args.posts).values():
                print(path)
            return EXIT_OK
        cfg = _settings(args)
        COMMANDS[args.command][0](cfg)
    except (ConfigError, pipeline.InputError) as e:
        print(f"flusense: error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:  # any failure past validation, reported with its module
        print(f"flusense: [{type(e).__module__}] {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
