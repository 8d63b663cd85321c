"""
Time series recorded along a contour-dynamics run.
"""

import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core.interfaces import DomainError

# Fraction of samples used for the trailing slope of ln ln proxy
TRAILING_FRACTION = 0.2


@dataclass(frozen=True)
class DiagnosticsSample:
    """One accepted step (or the initial state) of a run."""

    t: float
    d: float
    proxy: float
    area: float
    node_count: int
    alpha: float
    log_alpha: float
    eps: float
    log_eps: float
    containment_ok: bool
    rate_estimate: float
    log_inv_eps_alpha: float
    inf_u1: float = math.nan
    wall_margin: float = math.nan
    eps_bracket: float = math.nan
    barrier_collapsed: bool = False
    dt: float = 0.0
    max_axis_u2: float = 0.0
    area_drift: float = 0.0
    rejections: int = 0


SAMPLE_FIELDS = [f.name for f in fields(DiagnosticsSample)]


class DiagnosticsHistory:
    """Append-only list of samples with strictly increasing times."""

    def __init__(self, samples: Optional[Iterable[DiagnosticsSample]] = None):
        self.samples: List[DiagnosticsSample] = []
        for sample in samples or ():
            self.append(sample)

    def append(self, sample: DiagnosticsSample) -> None:
        if self.samples and not sample.t > self.samples[-1].t:
            raise DomainError(f"sample time {sample.t!r} not after {self.samples[-1].t!r}")
        if not sample.d > 0.0:
            raise DomainError(f"gradient-proxy distance must be positive, got {sample.d!r}")
        self.samples.append(sample)

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, index: int) -> DiagnosticsSample:
        return self.samples[index]

    @property
    def last(self) -> Optional[DiagnosticsSample]:
        return self.samples[-1] if self.samples else None

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples], dtype=float)

    def proxies(self) -> np.ndarray:
        return np.array([s.proxy for s in self.samples], dtype=float)

    def proxy_history(self) -> List[Tuple[float, float]]:
        """(t, proxy) pairs for the growth checks."""
        return [(s.t, s.proxy) for s in self.samples]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(s) for s in self.samples], columns=SAMPLE_FIELDS)

    def copy(self) -> "DiagnosticsHistory":
        history = DiagnosticsHistory()
        history.samples = list(self.samples)
        return history


def _pairs(history: Union[DiagnosticsHistory, Sequence[Tuple[float, float]]]) -> List[Tuple[float, float]]:
    if isinstance(history, DiagnosticsHistory):
        return history.proxy_history()
    return [(float(t), float(p)) for t, p in history]


def log_log_rate(t: float, proxy: float) -> float:
    """ln ln(proxy) / t, or nan where undefined."""
    if t <= 0.0 or proxy <= 1.0:
        return math.nan
    return math.log(math.log(proxy)) / t


def rate_estimate(history: Union[DiagnosticsHistory, Sequence[Tuple[float, float]]]) -> List[Tuple[float, float]]:
    """Pointwise ln ln(proxy) / t for samples with t > 0 and proxy > 1."""
    out = []
    for t, proxy in _pairs(history):
        value = log_log_rate(t, proxy)
        if not math.isnan(value):
            out.append((t, value))
    return out


def trailing_rate_slope(history: Union[DiagnosticsHistory, Sequence[Tuple[float, float]]],
                        fraction: float = TRAILING_FRACTION) -> Optional[float]:
    """
    Least-squares slope of ln ln(proxy) against t over the trailing fraction of samples.

    Returns:
        The slope, or None with fewer than two usable samples
    """
    pts = [(t, math.log(math.log(p))) for t, p in _pairs(history) if p > 1.0]
    if len(pts) < 2:
        return None
    count = max(2, int(math.ceil(fraction * len(pts))))
    tail = np.array(pts[-count:], dtype=float)
    if np.ptp(tail[:, 0]) == 0.0:
        return None
    slope, _ = np.polyfit(tail[:, 0], tail[:, 1], 1)
    return float(slope)


def proxy_ripple(history: Union[DiagnosticsHistory, Sequence[Tuple[float, float]]]) -> float:
    """Largest relative drop of the proxy below its running maximum."""
    values = np.array([p for _, p in _pairs(history)], dtype=float)
    if len(values) < 2:
        return 0.0
    running = np.maximum.accumulate(values)
    return float(np.max((running - values) / running))
