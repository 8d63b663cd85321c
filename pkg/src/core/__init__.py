"""
Core Infrastructure Module

Interfaces, exceptions and validated records of the laboratory.
"""

from core.interfaces import (
    VelocityEvaluator,
    Experiment,
    ConfigurationManager,
    LabError,
    DomainError,
    QuadratureError,
    BracketError,
    NoAdmissibleS0Error,
    ThresholdExceededError,
    ConfigurationError,
    SimulationError,
    StepRejectedError,
    ResolutionFloorReached,
    CheckpointError
)

from core.schemas import (
    Point,
    QuadratureSpec,
    ProfileConstants,
    GrowthBoundParams,
    SimConfig,
    ExperimentConfig,
    CheckResult,
    RunReport
)

__all__ = [
    # Interfaces
    'VelocityEvaluator',
    'Experiment',
    'ConfigurationManager',

    # Records
    'Point',
    'QuadratureSpec',
    'ProfileConstants',
    'GrowthBoundParams',
    'SimConfig',
    'ExperimentConfig',
    'CheckResult',
    'RunReport',

    # Exceptions
    'LabError',
    'DomainError',
    'QuadratureError',
    'BracketError',
    'NoAdmissibleS0Error',
    'ThresholdExceededError',
    'ConfigurationError',
    'SimulationError',
    'StepRejectedError',
    'ResolutionFloorReached',
    'CheckpointError'
]
