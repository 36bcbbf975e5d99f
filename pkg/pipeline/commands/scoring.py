"""
Scoring commands: threshold profile, per-sample scores and evaluation
"""
import argparse

from pipeline.commands.common import add_eval_flags, add_scoring_flags


def register(subparsers, parent: argparse.ArgumentParser) -> None:
    profile = subparsers.add_parser(
        "profile", parents=[parent], help="Build the reference threshold profile and fit rank weights"
    )
    add_scoring_flags(profile, weights=True)
    profile.set_defaults(handler=lambda service, args: service.profile())

    score = subparsers.add_parser(
        "score", parents=[parent], help="Score the test splits with every registered detector"
    )
    add_scoring_flags(score)
    score.set_defaults(handler=lambda service, args: service.score())

    evaluate = subparsers.add_parser(
        "eval", parents=[parent], help="AUROC / FPR reports, CP matrices and rank-logit summaries"
    )
    add_eval_flags(evaluate)
    evaluate.set_defaults(handler=lambda service, args: service.eval())
