"""
Exception hierarchy for the pipeline

Every error carries the process exit code the CLI returns for it:
0 success, 2 validation, 3 dependency, 4 numerical failure.
"""
from typing import Dict, Iterable, List, Optional


class RankOODError(Exception):
    """Base class for all pipeline errors"""
    exit_code = 1


class InputValidationError(RankOODError):
    """An input violates a documented invariant"""
    exit_code = 2


class FormatError(InputValidationError):
    """A file does not parse under its declared format"""


class ConsistencyError(InputValidationError):
    """Two inputs that must agree do not"""


class InfeasibleAssignmentError(InputValidationError):
    """More rank positions requested than candidate classes exist"""


class BruteForceGuardError(InputValidationError):
    """Exhaustive enumeration refused for too many candidates"""


class DependencyError(RankOODError):
    """An upstream artifact is missing"""
    exit_code = 3

    def __init__(self, message: str, producer: Optional[str] = None):
        self.producer = producer
        if producer:
            message = f"{message} (run `{producer}` first)"
        super().__init__(message)


class StaleArtifactError(DependencyError):
    """An upstream artifact no longer matches its recorded checksum"""


class NumericalError(RankOODError):
    """A numeric stage could not produce a usable result"""
    exit_code = 4


class EmptySupportError(NumericalError):
    """A rank probability matrix has no supporting samples"""


class TrainingDivergenceError(NumericalError):
    """The training loss became non-finite"""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(
            f"Training diverged at epoch {epoch}"
            + (f": {message}" if message else "")
        )


class _ClassListError(NumericalError):
    """Numeric failure that names the offending classes"""
    reason = "classes failed"

    def __init__(self, classes: Iterable[int]):
        self.classes: List[int] = sorted(int(c) for c in classes)
        super().__init__(f"{self.reason}: {self.classes}")


class PipelineError(_ClassListError):
    """Stage-1 model never predicts some classes correctly"""
    reason = "classes with zero correct stage-1 predictions"


class ProfileError(_ClassListError):
    """Threshold profile cannot be built for some classes"""
    reason = "classes with zero correctly classified samples"


class ScoringError(NumericalError):
    """A sample cannot be scored with the given profile"""


class WeightFitError(NumericalError):
    """Rank weights cannot be fitted"""


class DetectorUnavailableError(DependencyError):
    """A detector the stages need is not registered"""

    def __init__(
        self,
        names: Iterable[str],
        failures: Optional[Dict[str, str]] = None,
        producer: Optional[str] = None,
    ):
        self.names: List[str] = sorted(names)
        self.failures = dict(failures or {})
        message = f"required detectors {self.names} are unavailable"
        if self.failures:
            message += "; failed plugin imports: " + ", ".join(
                f"{module}: {error}" for module, error in sorted(self.failures.items())
            )
        super().__init__(message, producer)
