"""CLI sub-command registration."""
from pipeline.commands import data, ranking, run, scoring, training
from pipeline.commands.common import common_parser, resolve_config

COMMAND_GROUPS = [data, training, ranking, scoring, run]


def register_all(subparsers) -> None:
    parent = common_parser()
    for group in COMMAND_GROUPS:
        group.register(subparsers, parent)


__all__ = ["register_all", "resolve_config", "common_parser"]
