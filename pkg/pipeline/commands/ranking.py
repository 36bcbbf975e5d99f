"""
Ranking commands: rank probability matrices and canonical rankings
"""
import argparse

from pipeline.commands.common import add_rank_flags


def register(subparsers, parent: argparse.ArgumentParser) -> None:
    rpm = subparsers.add_parser(
        "rpm", parents=[parent], help="Estimate per-class rank probability matrices from logits"
    )
    add_rank_flags(rpm)
    rpm.add_argument(
        "--logits", default=None,
        help="External labelled logits (.bin or .csv) instead of the train-ce output",
    )
    rpm.set_defaults(handler=lambda service, args: service.rpm(logits_path=args.logits))

    canon = subparsers.add_parser(
        "canon", parents=[parent], help="Solve the assignment problem for every class"
    )
    canon.set_defaults(handler=lambda service, args: service.canon())
