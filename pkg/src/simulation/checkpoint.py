"""
Plain-text checkpoints of a simulation state.

Layout (one record per line, floats written by repr so reading back is
bit-exact):

    # half-plane-lab checkpoint
    version 1
    t <t>
    step_count <n>
    strength <gamma>
    barrier <log_alpha> <log_eps> <t> <collapsed 0/1>
    initial_area <area>
    nodes <N>
    <x1> <x2> <on_axis 0/1>        (N lines)
    diagnostics <K>
    <field names>
    <values>                        (K lines)

Files are written to a temporary sibling and moved into place.
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from core.interfaces import CheckpointError
from simulation.barrier import BarrierState
from simulation.diagnostics import SAMPLE_FIELDS, DiagnosticsHistory, DiagnosticsSample

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
HEADER = "# half-plane-lab checkpoint"

_INT_FIELDS = {"node_count", "rejections"}
_BOOL_FIELDS = {"containment_ok", "barrier_collapsed"}


def _format_sample_value(name: str, value) -> str:
    if name in _BOOL_FIELDS:
        return "1" if value else "0"
    if name in _INT_FIELDS:
        return str(int(value))
    return repr(float(value))


def _parse_sample_value(name: str, token: str):
    if name in _BOOL_FIELDS:
        return token == "1"
    if name in _INT_FIELDS:
        return int(token)
    return float(token)


def format_checkpoint(t: float, step_count: int, strength: float, barrier: BarrierState,
                      initial_area: float, nodes: np.ndarray, on_axis: np.ndarray,
                      history: DiagnosticsHistory) -> str:
    lines = [
        HEADER,
        f"version {CHECKPOINT_VERSION}",
        f"t {float(t)!r}",
        f"step_count {int(step_count)}",
        f"strength {float(strength)!r}",
        f"barrier {barrier.log_alpha!r} {barrier.log_eps!r} {barrier.t!r} {int(barrier.collapsed)}",
        f"initial_area {float(initial_area)!r}",
        f"nodes {len(nodes)}",
    ]
    lines.extend(f"{float(x)!r} {float(y)!r} {int(bool(flag))}" for (x, y), flag in zip(nodes, on_axis))
    lines.append(f"diagnostics {len(history)}")
    lines.append(" ".join(SAMPLE_FIELDS))
    for sample in history.samples:
        lines.append(" ".join(_format_sample_value(name, getattr(sample, name)) for name in SAMPLE_FIELDS))
    return "\n".join(lines) + "\n"


def save_checkpoint(path: Union[str, Path], **state) -> Path:
    """
    Atomically write a checkpoint.

    Keyword arguments are those of format_checkpoint.

    Raises:
        CheckpointError: If the file cannot be written
    """
    path = Path(path)
    temp_file = path.with_suffix(path.suffix + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(temp_file, "w") as f:
            f.write(format_checkpoint(**state))
        temp_file.replace(path)
    except OSError as e:
        if temp_file.exists():
            temp_file.unlink()
        raise CheckpointError(f"Failed to write checkpoint {path}: {e}")
    logger.info(f"Checkpoint written to {path} (t={state.get('t')!r})")
    return path


def _expect(lines: List[str], pos: int, key: str, count: int, source: str) -> Tuple[List[str], int]:
    if pos >= len(lines):
        raise CheckpointError(f"{source}: missing '{key}' record")
    parts = lines[pos].split()
    if not parts or parts[0] != key or len(parts) != count + 1:
        raise CheckpointError(f"{source}: expected '{key}' with {count} value(s) at line {pos + 1}")
    return parts[1:], pos + 1


def load_checkpoint(path: Union[str, Path]) -> Dict[str, object]:
    """
    Read a checkpoint written by save_checkpoint.

    Returns:
        Dictionary with t, step_count, strength, barrier, initial_area,
        nodes, on_axis and history

    Raises:
        CheckpointError: If the file is missing, malformed or of another version
    """
    path = Path(path)
    source = str(path)
    try:
        lines = [line for line in path.read_text().splitlines() if line.strip()]
    except OSError as e:
        raise CheckpointError(f"Failed to read checkpoint {path}: {e}")
    if not lines or lines[0] != HEADER:
        raise CheckpointError(f"{source}: not a checkpoint file")

    try:
        (version,), pos = _expect(lines, 1, "version", 1, source)
        if int(version) != CHECKPOINT_VERSION:
            raise CheckpointError(f"{source}: unsupported checkpoint version {version}")
        (t,), pos = _expect(lines, pos, "t", 1, source)
        (step_count,), pos = _expect(lines, pos, "step_count", 1, source)
        (strength,), pos = _expect(lines, pos, "strength", 1, source)
        barrier_parts, pos = _expect(lines, pos, "barrier", 4, source)
        (initial_area,), pos = _expect(lines, pos, "initial_area", 1, source)
        (count,), pos = _expect(lines, pos, "nodes", 1, source)
        count = int(count)
        rows = [lines[pos + k].split() for k in range(count)]
        pos += count
        if any(len(r) != 3 for r in rows):
            raise CheckpointError(f"{source}: malformed node record")
        nodes = np.array([[float(r[0]), float(r[1])] for r in rows], dtype=float).reshape(-1, 2)
        on_axis = np.array([r[2] == "1" for r in rows], dtype=bool)

        (n_samples,), pos = _expect(lines, pos, "diagnostics", 1, source)
        names = lines[pos].split()
        pos += 1
        if names != SAMPLE_FIELDS:
            raise CheckpointError(f"{source}: diagnostics columns do not match this version")
        history = DiagnosticsHistory()
        for k in range(int(n_samples)):
            tokens = lines[pos + k].split()
            values = {name: _parse_sample_value(name, tok) for name, tok in zip(names, tokens)}
            history.append(DiagnosticsSample(**values))
    except (IndexError, ValueError, TypeError) as e:
        raise CheckpointError(f"{source}: malformed checkpoint: {e}")

    log_alpha, log_eps, barrier_t, collapsed = barrier_parts
    barrier = BarrierState(log_alpha=float(log_alpha), log_eps=float(log_eps),
                           t=float(barrier_t), collapsed=collapsed == "1")
    if not math.isfinite(float(t)):
        raise CheckpointError(f"{source}: non-finite time")
    return {
        "t": float(t),
        "step_count": int(step_count),
        "strength": float(strength),
        "barrier": barrier,
        "initial_area": float(initial_area),
        "nodes": nodes,
        "on_axis": on_axis,
        "history": history,
    }
