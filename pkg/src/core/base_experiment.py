"""
Base experiment implementation for the half-plane Euler laboratory.

This module provides the template every subcommand experiment follows:
checks are collected in order, artifacts are registered with their
checksums, and the run report is assembled and validated against the
experiment's declared check list.
"""

import hashlib
import logging
import time
from abc import abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional

from core.interfaces import ConfigurationError, Experiment, LabError
from core.schemas import ArtifactEntry, CheckResult, ExperimentConfig, RunMetadata, RunReport
from utils.config import get_config
from utils.experiment_config import write_experiment_config

__version__ = "1.0.0"

EFFECTIVE_CONFIG_FILE = "config.cfg"


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class BaseExperiment(Experiment):
    """
    Base implementation for subcommand experiments.

    Subclasses implement _execute, which records checks with add_check and
    files with register_artifact. run() wraps it with timing, report
    assembly and manifest validation.
    """

    subcommand: str = ""

    def __init__(self, config: ExperimentConfig, output_dir: Path, config_hash: str):
        """
        Initialize base experiment.

        Args:
            config: Validated experiment configuration
            output_dir: Directory receiving the emitted files
            config_hash: SHA-256 of the canonical configuration text
        """
        self.config = config
        self.output_dir = Path(output_dir)
        self.config_hash = config_hash
        self.deterministic = config.run.deterministic
        self.logger = logging.getLogger(f"{__name__}.{self.subcommand or self.__class__.__name__}")
        self._checks: List[CheckResult] = []
        self._artifacts: List[ArtifactEntry] = []
        self._notes: Dict[str, Any] = {}
        self._performance_metrics = {
            "total_runs": 0,
            "last_run_time_ms": 0.0,
            "failed_checks": 0,
            "over_budget_runs": 0,
        }

    def run(self) -> RunReport:
        """
        Execute the experiment and assemble its report.

        Returns:
            RunReport with one entry per declared check

        Raises:
            ConfigurationError: If the output directory cannot be created
            LabError: Propagated from the experiment body
        """
        start_time = time.time()
        self._checks, self._artifacts, self._notes = [], [], {}
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigurationError(f"Failed to create output directory {self.output_dir}: {e}")

        self._execute()
        self._validate_checks()
        effective = write_experiment_config(self.config, self.output_dir / EFFECTIVE_CONFIG_FILE)
        self.register_artifact(effective, "config")

        elapsed = time.time() - start_time
        self._update_performance_metrics(elapsed * 1000.0)
        metadata = RunMetadata(
            version=__version__,
            subcommand=self.subcommand,
            config_hash=self.config_hash,
            wall_time_s=0.0 if self.deterministic else elapsed,
            deterministic=self.deterministic,
            notes=dict(self._notes),
        )
        report = RunReport(metadata=metadata, checks=list(self._checks), artifacts=list(self._artifacts))
        failed = [c.name for c in report.checks if c.failed]
        if failed:
            self.logger.warning(f"{self.subcommand}: {len(failed)} check(s) failed: {', '.join(failed)}")
        else:
            self.logger.info(f"{self.subcommand}: all {len(report.checks)} check(s) passed or not applicable")
        return report

    def add_check(self, name: str, status: str, value: Optional[float] = None,
                  bound: Optional[float] = None, margin: Optional[float] = None,
                  detail: str = "") -> CheckResult:
        """Record one check; booleans are accepted for status."""
        if isinstance(status, bool):
            status = "pass" if status else "fail"
        check = CheckResult(name=name, status=status, value=_finite_or_none(value),
                            bound=_finite_or_none(bound), margin=_finite_or_none(margin), detail=detail)
        self._checks.append(check)
        if check.failed:
            self._performance_metrics["failed_checks"] += 1
            self.logger.warning(f"Check {name} failed: value={value!r} bound={bound!r} {detail}")
        return check

    def register_artifact(self, path: Path, kind: str) -> ArtifactEntry:
        path = Path(path)
        try:
            rel = path.relative_to(self.output_dir)
        except ValueError:
            rel = path
        entry = ArtifactEntry(path=rel.as_posix(), sha256=file_sha256(path), kind=kind)
        self._artifacts.append(entry)
        return entry

    def note(self, key: str, value: Any) -> None:
        self._notes[key] = value

    def get_performance_metrics(self) -> Dict[str, Any]:
        return self._performance_metrics.copy()

    @abstractmethod
    def _execute(self) -> None:
        """
        Run the experiment body.

        This method must be implemented by subclasses; it records every
        declared check exactly once.
        """
        pass

    def _validate_checks(self) -> None:
        names = [c.name for c in self._checks]
        expected = self.check_names()
        if sorted(names) != sorted(expected) or len(set(names)) != len(names):
            missing = sorted(set(expected) - set(names))
            extra = sorted(set(names) - set(expected))
            raise LabError(f"{self.subcommand}: report checks do not match the manifest "
                           f"(missing {missing}, unexpected {extra})")

    def _update_performance_metrics(self, run_time_ms: float) -> None:
        self._performance_metrics["total_runs"] += 1
        self._performance_metrics["last_run_time_ms"] = run_time_ms
        budget = get_config("performance.max_run_time_ms", None)
        if budget is not None and run_time_ms > budget:
            self._performance_metrics["over_budget_runs"] += 1
            self.logger.warning(f"{self.subcommand} took {run_time_ms:.0f}ms (threshold: {budget}ms)")

    def __str__(self) -> str:
        return f"{self.__class__.__name__}(subcommand={self.subcommand}, runs={self._performance_metrics['total_runs']})"


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    if value != value or value in (float("inf"), float("-inf")):
        return None
    return value
