"""
Data command: synthetic dataset generation
"""
import argparse

from pipeline.commands.common import add_synthetic_flags


def register(subparsers, parent: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser(
        "synth", parents=[parent], help="Draw the synthetic ID / OOD splits and their manifest"
    )
    add_synthetic_flags(parser)
    parser.set_defaults(handler=lambda service, args: service.synth())
