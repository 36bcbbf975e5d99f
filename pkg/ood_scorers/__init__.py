"""
OOD Scorer Plugin System

This package provides the RankOOD scoring functions and a modular set of
detectors. Each detector is a plugin that inherits from BaseScorer and
is discovered by ScorerRegistry.
"""

from ood_scorers.registry import ScorerRegistry

__all__ = ['ScorerRegistry']
