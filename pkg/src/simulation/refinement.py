"""
Node insertion and removal for an evolving contour.

Segments longer than the maximum spacing, or next to a vertex that turns
by more than the turning threshold, get one new node at the midpoint of
the circular arc fitted through the neighbouring nodes. Nodes whose
incoming segment is shorter than the minimum spacing and whose turning
angle is small are removed. Area changes of a pass are kept within a
relative budget; a pass that would exceed it inserts chord midpoints and
merges nothing.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core.interfaces import ResolutionFloorReached
from velocity.polygon import segment_lengths, signed_area, turning_angles

logger = logging.getLogger(__name__)

# Turning angle above which a vertex is treated as a corner (no arc fit through it)
CORNER_ANGLE = math.radians(45.0)
MIN_NODES = 8


@dataclass
class RefineSettings:
    spacing_min: float
    spacing_max: float
    turning: float
    area_budget: float
    max_nodes: int


@dataclass
class RefineReport:
    inserted: int = 0
    removed: int = 0
    area_change: float = 0.0
    chord_fallback: bool = False


def _cross(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0]


def _menger(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Signed curvature of the circle through a, b, c (positive for left turns)."""
    ab = np.hypot(*(b - a).T)
    bc = np.hypot(*(c - b).T)
    ca = np.hypot(*(a - c).T)
    denom = ab * bc * ca
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(denom > 0.0, 2.0 * _cross(b - a, c - a) / denom, 0.0)
    return k


def arc_midpoints(nodes: np.ndarray, idx: np.ndarray, turning: np.ndarray) -> np.ndarray:
    """
    Midpoints of the arcs over segments idx -> idx+1.

    The arc curvature is the mean Menger curvature of the two neighbouring
    node triples, skipping triples centred on a corner; with both ends at
    corners the chord midpoint is used.
    """
    n = len(nodes)
    a = nodes[idx]
    b = nodes[(idx + 1) % n]
    prev = nodes[(idx - 1) % n]
    nxt = nodes[(idx + 2) % n]
    k_a = _menger(prev, a, b)
    k_b = _menger(a, b, nxt)
    use_a = turning[idx] <= CORNER_ANGLE
    use_b = turning[(idx + 1) % n] <= CORNER_ANGLE
    weight = use_a.astype(float) + use_b.astype(float)
    with np.errstate(invalid="ignore"):
        kappa = np.where(weight > 0.0, (np.where(use_a, k_a, 0.0) + np.where(use_b, k_b, 0.0)) / np.maximum(weight, 1.0), 0.0)

    chord = b - a
    length = np.hypot(chord[:, 0], chord[:, 1])
    half = 0.5 * np.abs(kappa) * length
    # sagitta of the arc, capped at a half circle
    with np.errstate(divide="ignore", invalid="ignore"):
        sag = np.where(np.abs(kappa) > 0.0,
                       (1.0 - np.sqrt(np.clip(1.0 - half * half, 0.0, 1.0))) / np.abs(kappa), 0.0)
    sag = np.minimum(sag, 0.5 * length) * np.sign(kappa)
    normal_left = np.column_stack([-chord[:, 1], chord[:, 0]]) / np.maximum(length, np.finfo(float).tiny)[:, None]
    # left turns bulge to the right of the chord
    return 0.5 * (a + b) - sag[:, None] * normal_left


def _insertion_area(a: np.ndarray, m: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 0.5 * (_cross(a, m) + _cross(m, b) - _cross(a, b))


def refine_nodes(nodes: np.ndarray, on_axis: np.ndarray, settings: RefineSettings) -> Tuple[np.ndarray, np.ndarray, RefineReport]:
    """
    One refinement pass over a closed counterclockwise contour.

    Args:
        nodes: (N, 2) contour nodes
        on_axis: Boolean flags of nodes on the x1-axis
        settings: Spacing, turning and budget settings

    Returns:
        Tuple (new nodes, new axis flags, report)

    Raises:
        ResolutionFloorReached: If the pass would exceed the node budget
    """
    nodes = np.asarray(nodes, dtype=float)
    on_axis = np.asarray(on_axis, dtype=bool)
    n = len(nodes)
    report = RefineReport()
    area = abs(signed_area(nodes))
    budget = settings.area_budget * area

    spacing = segment_lengths(nodes)
    turning = turning_angles(nodes)
    nxt = (np.arange(n) + 1) % n
    sharp = (turning > settings.turning) | (turning[nxt] > settings.turning)
    insert = (spacing > settings.spacing_max) | (sharp & (spacing > 2.0 * settings.spacing_min))
    idx = np.flatnonzero(insert)

    axis_segment = on_axis[idx] & on_axis[nxt[idx]]
    mids = arc_midpoints(nodes, idx, turning) if len(idx) else np.empty((0, 2))
    if len(idx):
        chord_mids = 0.5 * (nodes[idx] + nodes[nxt[idx]])
        mids[axis_segment] = chord_mids[axis_segment]
        mids[axis_segment, 1] = 0.0
    delta = _insertion_area(nodes[idx], mids, nodes[nxt[idx]]) if len(idx) else np.empty(0)
    spent = float(np.sum(np.abs(delta)))
    if spent > budget:
        mids = 0.5 * (nodes[idx] + nodes[nxt[idx]])
        mids[axis_segment, 1] = 0.0
        spent = 0.0
        delta = np.zeros(len(idx))
        report.chord_fallback = True

    # merges: drop node i+1 after a short segment i when it barely turns
    remove = np.zeros(n, dtype=bool)
    if not report.chord_fallback:
        low_turn = turning < settings.turning / 3.0
        protected = on_axis != on_axis[(np.arange(n) - 1) % n]
        protected |= on_axis != on_axis[nxt]
        touched = np.zeros(n, dtype=bool)
        touched[idx] = True
        touched[nxt[idx]] = True
        kept = n
        for i in np.flatnonzero(spacing < settings.spacing_min):
            j = nxt[i]
            if kept <= MIN_NODES or remove[j] or remove[i] or remove[nxt[j]]:
                continue
            if not low_turn[j] or protected[j] or touched[j]:
                continue
            p, v, q = nodes[i], nodes[j], nodes[nxt[j]]
            change = abs(0.5 * float(_cross(p, v) + _cross(v, q) - _cross(p, q)))
            if spent + change > budget:
                continue
            remove[j] = True
            spent += change
            kept -= 1

    new_count = n + len(idx) - int(np.count_nonzero(remove))
    if new_count > settings.max_nodes:
        raise ResolutionFloorReached(f"node budget {settings.max_nodes} exceeded ({new_count} nodes)",
                                     {"nodes": new_count})

    out_nodes, out_axis = [], []
    inserted_at = {int(i): k for k, i in enumerate(idx)}
    for i in range(n):
        if not remove[i]:
            out_nodes.append(nodes[i])
            out_axis.append(bool(on_axis[i]))
        k = inserted_at.get(i)
        if k is not None:
            out_nodes.append(mids[k])
            out_axis.append(bool(on_axis[i] and on_axis[nxt[i]]))

    report.inserted = len(idx)
    report.removed = int(np.count_nonzero(remove))
    new_nodes = np.array(out_nodes, dtype=float)
    report.area_change = abs(signed_area(new_nodes)) - area
    if report.inserted or report.removed:
        logger.debug(f"Refinement: +{report.inserted} -{report.removed} nodes, "
                     f"area change {report.area_change:.3e}{' (chord fallback)' if report.chord_fallback else ''}")
    return new_nodes, np.array(out_axis, dtype=bool), report


def refine_until_stable(nodes: np.ndarray, on_axis: np.ndarray, settings: RefineSettings,
                        max_passes: int = 12) -> Tuple[np.ndarray, np.ndarray, int]:
    """Repeat refinement passes until nothing is inserted or max_passes is reached."""
    passes = 0
    for passes in range(1, max_passes + 1):
        nodes, on_axis, report = refine_nodes(nodes, on_axis, settings)
        if report.inserted == 0:
            break
    return nodes, on_axis, passes
