"""
Chained run of every stage, optionally repeated over seeds
"""
import argparse

from pipeline.commands.common import (
    add_eval_flags,
    add_rank_flags,
    add_scoring_flags,
    add_synthetic_flags,
    add_train_flags,
)


def register(subparsers, parent: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser(
        "run-all", parents=[parent], help="Run synth through eval in one go"
    )
    add_synthetic_flags(parser)
    add_train_flags(parser, "rank_train", rank=True)
    add_rank_flags(parser)
    add_scoring_flags(parser, weights=True)
    add_eval_flags(parser)
    parser.add_argument(
        "--seeds", type=int, nargs="+", default=None,
        help="Repeat the run per seed (data, init and shuffling) and summarise mean / std",
    )
    parser.set_defaults(handler=lambda service, args: service.run_all(seeds=args.seeds))
