"""
Artifact ledger service
Tracks which stage produced each file of a run directory and its checksum
"""
import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

from config import config
from pipeline.core.errors import DependencyError, FormatError, StaleArtifactError
from pipeline.core.logging import ArtifactLogger
from pipeline.models.pipeline_models import PipelineConfig
from utilities.tensor_io import crc32_file

artifact_logger = ArtifactLogger()

LEDGER_FILE = "artifacts.json"
CONFIG_ECHO_FILE = "config.json"


class ArtifactService:
    """Service for recording and verifying the artifacts of one run directory"""

    def __init__(self, run_dir: Union[str, Path]):
        self.run_dir = Path(run_dir)
        self.ledger_path = self.run_dir / LEDGER_FILE

    def path(self, relative: str) -> Path:
        return self.run_dir / relative

    def load_ledger(self) -> Dict[str, Dict[str, str]]:
        """Ledger entries keyed by path relative to the run directory."""
        if not self.ledger_path.exists():
            return {}
        try:
            return json.loads(self.ledger_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise FormatError(f"{self.ledger_path}: ledger is not valid JSON: {e}")

    def _save_ledger(self, ledger: Dict[str, Dict[str, str]]) -> None:
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.ledger_path.write_text(json.dumps(ledger, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def record(self, relative: str, producer: str) -> str:
        """
        Register a written file under its producing command.

        Returns:
            CRC-32 checksum of the file
        """
        checksum = crc32_file(self.path(relative))
        ledger = self.load_ledger()
        ledger[relative] = {"producer": producer, "checksum": checksum}
        self._save_ledger(ledger)
        artifact_logger.log_operation("record", relative, producer=producer, checksum=checksum)
        return checksum

    def record_tree(self, relative_dir: str, producer: str) -> Dict[str, str]:
        """Register every file below a directory."""
        root = self.path(relative_dir)
        return {
            p.relative_to(self.run_dir).as_posix(): self.record(p.relative_to(self.run_dir).as_posix(), producer)
            for p in sorted(root.rglob("*"))
            if p.is_file()
        }

    def require(self, relative: str, producer: str) -> Path:
        """
        Path of an upstream artifact after checking it against the ledger.

        Raises:
            DependencyError: the file is missing or was never recorded
            StaleArtifactError: the file changed since it was recorded
        """
        target = self.path(relative)
        entry = self.load_ledger().get(relative)
        if not target.exists() or entry is None:
            artifact_logger.log_error("require", relative, "missing artifact", producer=producer)
            raise DependencyError(f"missing artifact {target}", producer=producer)
        actual = crc32_file(target)
        if actual != entry["checksum"]:
            artifact_logger.log_error(
                "require", relative, "stale artifact", expected=entry["checksum"], actual=actual
            )
            raise StaleArtifactError(
                f"artifact {target} changed since `{entry['producer']}` wrote it", producer=entry["producer"]
            )
        return target

    def write_config_echo(self, stage_dir: str, pipeline_config: PipelineConfig, producer: str) -> Path:
        """Write the resolved configuration next to a stage's outputs."""
        relative = f"{stage_dir}/{CONFIG_ECHO_FILE}"
        target = self.path(relative)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(pipeline_config.to_json() + "\n", encoding="utf-8")
        self.record(relative, producer)
        return target

    def stage_summary(self, producer: str) -> Dict[str, Any]:
        """Files and checksums recorded for one producer."""
        return {
            path: entry["checksum"]
            for path, entry in sorted(self.load_ledger().items())
            if entry["producer"] == producer
        }


_artifact_services: Dict[str, ArtifactService] = {}


def get_artifact_service(run_dir: Optional[Union[str, Path]] = None) -> ArtifactService:
    """Get or create the artifact service of a run directory"""
    key = str(Path(run_dir or config.output_root).resolve())
    if key not in _artifact_services:
        _artifact_services[key] = ArtifactService(run_dir or config.output_root)
    return _artifact_services[key]
