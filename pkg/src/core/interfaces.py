"""
Core interfaces and abstract base classes for the half-plane Euler laboratory.

This module defines the contracts that velocity evaluators, experiments and
configuration managers implement, together with the exception family used
throughout the package.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence

import numpy as np


class VelocityEvaluator(ABC):
    """Abstract base class for velocity evaluation of a vorticity field."""

    @abstractmethod
    def velocity(self, points: np.ndarray) -> np.ndarray:
        """
        Evaluate the velocity at a set of points.

        Args:
            points: Array of shape (M, 2) with evaluation points

        Returns:
            Array of shape (M, 2) with velocities (u1, u2)

        Raises:
            DomainError: If a point lies outside the evaluator's domain
        """
        pass


class Experiment(ABC):
    """Abstract base class for the experiment runners behind each subcommand."""

    @abstractmethod
    def run(self) -> Any:
        """
        Execute the experiment and return its run report.

        Returns:
            RunReport describing checks and emitted artifacts
        """
        pass

    @abstractmethod
    def check_names(self) -> List[str]:
        """
        Names of the checks this experiment must report, in order.

        Returns:
            List of check names
        """
        pass


class ConfigurationManager(ABC):
    """Abstract base class for system configuration management."""

    @abstractmethod
    def get_config(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value by key.

        Args:
            key: Configuration key
            default: Default value if key not found

        Returns:
            Configuration value
        """
        pass

    @abstractmethod
    def set_config(self, key: str, value: Any) -> None:
        """
        Set configuration value.

        Args:
            key: Configuration key
            value: Configuration value
        """
        pass

    @abstractmethod
    def load_config(self, config_path: str) -> None:
        """
        Load configuration from file.

        Args:
            config_path: Path to configuration file
        """
        pass


# Custom exceptions for the laboratory
class LabError(Exception):
    """Base class for all laboratory errors."""
    pass


class DomainError(LabError, ValueError):
    """Raised when an operation is called outside its mathematical domain."""
    pass


class QuadratureError(LabError):
    """Raised when adaptive quadrature does not reach the requested tolerance."""

    def __init__(self, message: str, value: float = float("nan"),
                 error_estimate: float = float("inf")):
        super().__init__(f"{message} (value={value!r}, error estimate={error_estimate!r})")
        self.value = value
        self.error_estimate = error_estimate


class BracketError(LabError):
    """Raised when a root or threshold cannot be bracketed."""
    pass


class NoAdmissibleS0Error(BracketError):
    """Raised when no grid point satisfies the s0 inequality."""
    pass


class ThresholdExceededError(LabError):
    """Raised when a smallness threshold assumed by an estimate is exceeded."""
    pass


class ConfigurationError(LabError):
    """Raised when configuration issues occur."""
    pass


class SimulationError(LabError):
    """Raised when the contour-dynamics simulation fails."""
    pass


class StepRejectedError(SimulationError):
    """Raised when a time step is rejected more times than allowed."""

    def __init__(self, message: str, reasons: Optional[Sequence[str]] = None):
        super().__init__(message)
        self.reasons = list(reasons or [])


class ResolutionFloorReached(SimulationError):
    """Raised when the contour can no longer resolve the dynamics near the axis."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = dict(details or {})


class CheckpointError(LabError):
    """Raised when a checkpoint cannot be written or read back."""
    pass
