"""
Shared flag groups and config resolution for the CLI sub-commands

Override flags use the dotted PipelineConfig path as their ``dest`` and
``argparse.SUPPRESS`` as default, so only flags given on the command line
end up in the parsed namespace.
"""
import argparse
from typing import Any, Dict

from config import config
from pipeline.models.objective_models import SubsetMode
from pipeline.models.pipeline_models import PipelineConfig
from pipeline.models.train_models import Schedule

SUPPRESS = argparse.SUPPRESS

# Namespace attributes that are never config overrides
RESERVED = {"command", "handler", "config", "out", "log_level", "log_format", "logits", "seeds"}


def common_parser() -> argparse.ArgumentParser:
    """Parent parser with the flags every sub-command accepts."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", default=None, help="PipelineConfig JSON document (may be partial)")
    parser.add_argument("--out", default=None, help=f"Run directory (default: {config.output_root})")
    parser.add_argument("--log-level", default=None, help=f"Log level (default: {config.log_level})")
    parser.add_argument(
        "--log-format", default=None, choices=["console", "json"],
        help=f"Log renderer (default: {config.log_format})",
    )
    return parser


def add_synthetic_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("synthetic data")
    group.add_argument("--classes", dest="synthetic.n_classes", type=int, default=SUPPRESS)
    group.add_argument("--dim", dest="synthetic.feature_dim", type=int, default=SUPPRESS)
    group.add_argument("--samples-per-class", dest="synthetic.samples_per_class", type=int, default=SUPPRESS)
    group.add_argument("--eval-samples-per-class", dest="synthetic.eval_samples_per_class", type=int, default=SUPPRESS)
    group.add_argument("--class-similarity", dest="synthetic.class_similarity", type=float, default=SUPPRESS)
    group.add_argument("--ood-shift", dest="synthetic.ood_shift", type=float, default=SUPPRESS)
    group.add_argument("--class-separation", dest="synthetic.class_separation", type=float, default=SUPPRESS)
    group.add_argument("--cluster-std", dest="synthetic.cluster_std", type=float, default=SUPPRESS)
    group.add_argument("--ood-clusters", dest="synthetic.n_ood_clusters", type=int, default=SUPPRESS)
    group.add_argument("--seed", dest="synthetic.seed", type=int, default=SUPPRESS)


def add_train_flags(parser: argparse.ArgumentParser, section: str, rank: bool) -> None:
    """Flags mirroring TrainConfig, written into ``section`` of the config."""
    group = parser.add_argument_group("training")
    group.add_argument("--epochs", dest=f"{section}.epochs", type=int, default=SUPPRESS)
    group.add_argument("--batch-size", dest=f"{section}.batch_size", type=int, default=SUPPRESS)
    group.add_argument("--lr", dest=f"{section}.learning_rate", type=float, default=SUPPRESS)
    group.add_argument("--momentum", dest=f"{section}.momentum", type=float, default=SUPPRESS)
    group.add_argument(
        "--schedule", dest=f"{section}.schedule", choices=[s.value for s in Schedule], default=SUPPRESS
    )
    group.add_argument("--train-seed", dest=f"{section}.seed", type=int, default=SUPPRESS)
    group.add_argument("--hidden", dest="hidden_sizes", type=int, nargs="+", default=SUPPRESS)
    if rank:
        group.add_argument("--alpha", dest=f"{section}.alpha", type=float, default=SUPPRESS)
        group.add_argument(
            "--subset-mode", dest=f"{section}.subset_mode", choices=[m.value for m in SubsetMode], default=SUPPRESS
        )
        group.add_argument("--subset-count", dest=f"{section}.subset_count", type=int, default=SUPPRESS)
        group.add_argument(
            "--warm-start", dest=f"{section}.warm_start", action="store_const", const=True, default=SUPPRESS
        )


def add_rank_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rank-k", dest="rank_k", type=int, default=SUPPRESS,
                        help="Rank positions below rank 0 (default C - 1)")


def add_scoring_flags(parser: argparse.ArgumentParser, weights: bool = False) -> None:
    group = parser.add_argument_group("scoring")
    group.add_argument("--gamma", dest="penalty.gamma", type=float, default=SUPPRESS)
    if weights:
        group.add_argument("--percentile", dest="percentile", type=float, default=SUPPRESS)
        group.add_argument("--weights-file", dest="weights_file", default=SUPPRESS)


def add_eval_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("evaluation")
    group.add_argument("--tpr", dest="tpr", type=float, default=SUPPRESS)
    group.add_argument("--summary-positions", dest="summary_positions", type=int, nargs="+", default=SUPPRESS)
    group.add_argument("--bins", dest="histogram_bins", type=int, default=SUPPRESS)


def overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Config overrides given on the command line, keyed by dotted path."""
    return {k: v for k, v in vars(args).items() if k not in RESERVED}


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    """
    Config file, then command-line overrides, validated as one document.

    Raises:
        FormatError: the config file is not valid JSON
        pydantic.ValidationError / InputValidationError: an invariant fails
    """
    base = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    document = base.model_dump(mode="json")
    for dotted, value in overrides(args).items():
        target = document
        *parents, leaf = dotted.split(".")
        for key in parents:
            target = target[key]
        target[leaf] = value
    if args.out:
        document["out_dir"] = args.out
    return PipelineConfig.model_validate(document)
