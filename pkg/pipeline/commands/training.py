"""
Training commands: stage-1 cross-entropy and stage-3 hybrid-loss models
"""
import argparse

from pipeline.commands.common import add_train_flags


def register(subparsers, parent: argparse.ArgumentParser) -> None:
    ce = subparsers.add_parser(
        "train-ce", parents=[parent], help="Train the cross-entropy classifier and export its logits"
    )
    add_train_flags(ce, "ce_train", rank=False)
    ce.set_defaults(handler=lambda service, args: service.train_ce())

    rank = subparsers.add_parser(
        "train-rank", parents=[parent], help="Train against the canonical rankings with the hybrid loss"
    )
    add_train_flags(rank, "rank_train", rank=True)
    rank.set_defaults(handler=lambda service, args: service.train_rank())
