"""
Scorer Registry

Auto-discovers and registers all available OOD detector implementations.
"""

import importlib
import inspect
from pathlib import Path
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional

from pipeline.core.errors import DetectorUnavailableError
from pipeline.core.logging import get_logger

if TYPE_CHECKING:
    from ood_scorers.base_scorer import BaseScorer

logger = get_logger("ood_scorers.registry")


class ScorerRegistry:
    """
    Registry for OOD detectors with auto-discovery.

    Automatically discovers and loads all detector implementations from
    the ood_scorers directory.
    """

    _scorers: Dict[str, 'BaseScorer'] = {}
    _failed: Dict[str, str] = {}
    _initialized = False

    # Modules that hold shared code rather than detectors
    _SKIPPED = ['__init__.py', 'base_scorer.py', 'registry.py', 'ood_scoring.py']

    @classmethod
    def _initialize(cls):
        """
        Discover and register all detector implementations.

        Imports every module of the package (except the shared ones) and
        registers any class that inherits from BaseScorer.
        """
        if cls._initialized:
            return

        from ood_scorers.base_scorer import BaseScorer

        scorer_dir = Path(__file__).parent

        for file_path in sorted(scorer_dir.glob("*.py")):
            filename = file_path.name
            if filename in cls._SKIPPED:
                continue

            module_name = filename[:-3]
            try:
                module = importlib.import_module(f'ood_scorers.{module_name}')

                for _, obj in inspect.getmembers(module, inspect.isclass):
                    if (issubclass(obj, BaseScorer) and
                            obj is not BaseScorer and
                            not inspect.isabstract(obj)):
                        scorer = obj()
                        cls._scorers[scorer.get_name()] = scorer

            except Exception as e:
                cls._failed[filename] = str(e)
                logger.warning(
                    "Failed to load detector",
                    module=filename,
                    error=str(e)
                )
                continue

        cls._initialized = True

    @classmethod
    def get_scorer(cls, name: str) -> Optional['BaseScorer']:
        """
        Get a detector by name.

        Args:
            name: Detector name (e.g., "rankood", "msp")

        Returns:
            Detector instance or None if not found
        """
        cls._initialize()
        return cls._scorers.get(name)

    @classmethod
    def list_scorers(cls) -> List[str]:
        """Sorted names of all registered detectors."""
        cls._initialize()
        return sorted(cls._scorers.keys())

    @classmethod
    def get_all_scorers(cls) -> Dict[str, 'BaseScorer']:
        cls._initialize()
        return cls._scorers.copy()

    @classmethod
    def require_scorers(cls, names: Iterable[str]) -> Dict[str, 'BaseScorer']:
        """
        Detectors that must be present, by name.

        Raises:
            DetectorUnavailableError: naming the missing detectors and any
                plugin modules that failed to import
        """
        cls._initialize()
        wanted = list(names)
        missing = [name for name in wanted if name not in cls._scorers]
        if missing:
            raise DetectorUnavailableError(missing, cls._failed)
        return {name: cls._scorers[name] for name in wanted}
