"""
Contour dynamics of the unit vortex patch with the barrier co-evolved.

The patch boundary is a closed counterclockwise polygon in the first
quadrant whose bottom nodes lie on the x1-axis; images across both axes
make the vorticity odd in x1 and x2. Nodes are advected by classical RK4
with contour-integral velocities, axis nodes slide along the axis, and
ln(alpha), ln(eps) are advanced in the same Runge-Kutta stages.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from core.interfaces import DomainError, ResolutionFloorReached, SimulationError, StepRejectedError
from core.schemas import SimConfig
from geometry.regions import omega_boundary_nodes
from simulation.barrier import BarrierRates, BarrierState, barrier_rates, containment_mask, wall_margin
from simulation.checkpoint import load_checkpoint, save_checkpoint
from simulation.diagnostics import DiagnosticsHistory, DiagnosticsSample, log_log_rate
from simulation.refinement import RefineSettings, refine_nodes, refine_until_stable
from utils.config import get_config
from velocity.contour import ContourVelocity
from velocity.field import Patch, SymmetryFlags, VorticityField
from velocity.polygon import segment_lengths

logger = logging.getLogger(__name__)

STATUS_COMPLETED = "completed"
STATUS_FLOOR = "floor_reached"


@dataclass
class SimState:
    """
    Current contour, its axis flags and the diagnostics recorded so far.

    field always holds a single patch with both odd images.
    """

    t: float
    field: VorticityField
    on_axis: np.ndarray
    diagnostics: DiagnosticsHistory
    initial_area: float
    step_count: int = 0

    @property
    def nodes(self) -> np.ndarray:
        return self.field.patches[0].contour

    @property
    def patch(self) -> Patch:
        return self.field.patches[0]

    @property
    def area(self) -> float:
        return self.patch.area

    @property
    def strength(self) -> float:
        return self.patch.strength


@dataclass
class StepInfo:
    dt: float
    rejections: int
    rates: BarrierRates
    max_axis_u2: float
    reasons: List[str] = field(default_factory=list)


@dataclass
class SimulationResult:
    state: SimState
    barrier: BarrierState
    status: str
    snapshots: List[Dict[str, object]]
    rejections: int
    floor_details: Dict[str, object] = field(default_factory=dict)


class _InvalidStage(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def refine_settings(config: SimConfig) -> RefineSettings:
    return RefineSettings(
        spacing_min=config.node_spacing_min,
        spacing_max=config.node_spacing_max,
        turning=math.radians(float(get_config("simulation.turning_degrees", 15.0))),
        area_budget=float(get_config("simulation.refine_area_budget", 1e-6)),
        max_nodes=config.max_nodes,
    )


def _make_field(nodes: np.ndarray, strength: float) -> VorticityField:
    return VorticityField.build([Patch(nodes, strength, SymmetryFlags(True, True))], check_disjoint=False)


def gradient_proxy(state: SimState, window: float) -> Tuple[float, float]:
    """
    Gradient proxy 1/d from the contour geometry near the origin.

    d is the smallest x1 over contour nodes off the x1-axis with |p| < window,
    or over all such nodes when none is inside the window.

    Returns:
        Tuple (proxy, d)

    Raises:
        DomainError: If window <= 0 or the contour has no off-axis node
    """
    if not window > 0.0:
        raise DomainError(f"window={window!r} must be positive")
    nodes = state.nodes
    free = ~state.on_axis
    if len(nodes) == 0 or not np.any(free):
        raise DomainError("contour has no off-axis nodes")
    x1 = nodes[free, 0]
    inside = np.hypot(nodes[free, 0], nodes[free, 1]) < window
    d = float(np.min(x1[inside])) if np.any(inside) else float(np.min(x1))
    if not d > 0.0:
        raise DomainError(f"contour touches the x2-axis (d={d!r})")
    return 1.0 / d, d


def check_containment(state: SimState, barrier: BarrierState) -> bool:
    """True iff no contour node or segment midpoint lies inside alpha * Omega_eps."""
    nodes = state.nodes
    mids = 0.5 * (nodes + np.roll(nodes, -1, axis=0))
    return not bool(np.any(containment_mask(np.vstack([nodes, mids]), barrier)))


def _sample(state: SimState, barrier: BarrierState, config: SimConfig, rates: Optional[BarrierRates],
            dt: float, rejections: int, max_axis_u2: float, d_log_alpha: float) -> DiagnosticsSample:
    wall = math.nan if barrier.collapsed else wall_margin(state.field, barrier.log_alpha, d_log_alpha)
    proxy, d = gradient_proxy(state, config.proxy_window)
    return DiagnosticsSample(
        t=state.t, d=d, proxy=proxy, area=state.area, node_count=len(state.nodes),
        alpha=barrier.alpha, log_alpha=barrier.log_alpha, eps=barrier.eps, log_eps=barrier.log_eps,
        containment_ok=check_containment(state, barrier),
        rate_estimate=log_log_rate(state.t, proxy),
        log_inv_eps_alpha=-barrier.log_eps_alpha,
        inf_u1=rates.inf_u1 if rates else math.nan,
        wall_margin=wall,
        eps_bracket=rates.eps_bracket if rates else math.nan,
        barrier_collapsed=barrier.collapsed,
        dt=dt, max_axis_u2=max_axis_u2,
        area_drift=(state.area - state.initial_area) / state.initial_area,
        rejections=rejections,
    )


def init_state(config: SimConfig) -> Tuple[SimState, BarrierState]:
    """
    Initial patch: the polygon circumscribing Omega_eps(0), refined to the spacing bounds.

    Returns:
        Tuple (state, barrier) at t = 0 with the first diagnostics sample
    """
    outline, _ = omega_boundary_nodes(config.initial_eps, 64, circumscribe=True)
    perimeter = float(np.sum(segment_lengths(outline)))
    n = int(min(config.max_nodes, max(64, math.ceil(perimeter / config.node_spacing_max))))
    nodes, on_axis = omega_boundary_nodes(config.initial_eps, n, circumscribe=True)
    nodes, on_axis, passes = refine_until_stable(nodes, on_axis, refine_settings(config))

    field_0 = _make_field(nodes, config.strength)
    area = field_0.patches[0].area
    state = SimState(t=0.0, field=field_0, on_axis=on_axis, diagnostics=DiagnosticsHistory(),
                     initial_area=area)
    barrier = BarrierState.initial(config.initial_eps)
    rates = barrier_rates(field_0, barrier.log_alpha, barrier.log_eps, config.constants)
    state.diagnostics.append(_sample(state, barrier, config, rates, 0.0, 0, 0.0, rates.d_log_alpha))
    logger.info(f"Initial patch: {len(nodes)} nodes after {passes} refinement pass(es), area {area:.10g}")
    return state, barrier


class _Stepper:
    """RK4 right-hand side shared by the stages of one step."""

    def __init__(self, state: SimState, config: SimConfig):
        self.on_axis = state.on_axis
        self.strength = state.strength
        self.config = config
        self.max_speed = float(get_config("simulation.max_speed", 1e6))

    def __call__(self, nodes: np.ndarray, log_alpha: float, log_eps: float,
                 collapsed: bool) -> Tuple[np.ndarray, BarrierRates, float]:
        if not np.all(np.isfinite(nodes)):
            raise _InvalidStage("non_finite_nodes")
        try:
            stage_field = _make_field(nodes, self.strength)
        except DomainError as e:
            raise _InvalidStage(f"invalid_contour: {e}")
        velocity = ContourVelocity(stage_field).velocity(nodes)
        axis_u2 = float(np.max(np.abs(velocity[self.on_axis, 1]))) if np.any(self.on_axis) else 0.0
        velocity[self.on_axis, 1] = 0.0
        if not np.all(np.isfinite(velocity)) or np.max(np.hypot(*velocity.T)) > self.max_speed:
            raise _InvalidStage("speed_overflow")
        if collapsed:
            rates = BarrierRates(0.0, 0.0, math.nan, math.nan)
        else:
            rates = barrier_rates(stage_field, log_alpha, log_eps, self.config.constants)
        return velocity, rates, axis_u2


def choose_dt(state: SimState, config: SimConfig, t_end: Optional[float] = None) -> float:
    """dt = min(dt_max, cfl * min_i spacing_i / speed_i), clipped to the remaining time."""
    nodes = state.nodes
    velocity = ContourVelocity(state.field).velocity(nodes)
    velocity[state.on_axis, 1] = 0.0
    seg = segment_lengths(nodes)
    spacing = np.minimum(seg, np.roll(seg, 1))
    speed = np.hypot(velocity[:, 0], velocity[:, 1])
    moving = speed > 0.0
    dt = config.dt_max
    if np.any(moving):
        dt = min(dt, config.cfl * float(np.min(spacing[moving] / speed[moving])))
    if t_end is not None:
        dt = min(dt, max(t_end - state.t, 0.0))
    return dt


def _rk4(state: SimState, barrier: BarrierState, dt: float, rhs: _Stepper):
    y0 = state.nodes
    a0, e0 = barrier.log_alpha, barrier.log_eps
    collapsed = barrier.collapsed

    k1, r1, axis_u2 = rhs(y0, a0, e0, collapsed)
    k2, r2, _ = rhs(y0 + 0.5 * dt * k1, a0 + 0.5 * dt * r1.d_log_alpha, e0 + 0.5 * dt * r1.d_log_eps, collapsed)
    k3, r3, _ = rhs(y0 + 0.5 * dt * k2, a0 + 0.5 * dt * r2.d_log_alpha, e0 + 0.5 * dt * r2.d_log_eps, collapsed)
    k4, r4, _ = rhs(y0 + dt * k3, a0 + dt * r3.d_log_alpha, e0 + dt * r3.d_log_eps, collapsed)

    nodes = y0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    nodes[state.on_axis, 1] = 0.0
    log_alpha = a0 + dt / 6.0 * (r1.d_log_alpha + 2.0 * r2.d_log_alpha + 2.0 * r3.d_log_alpha + r4.d_log_alpha)
    log_eps = e0 + dt / 6.0 * (r1.d_log_eps + 2.0 * r2.d_log_eps + 2.0 * r3.d_log_eps + r4.d_log_eps)
    return nodes, log_alpha, log_eps, r1, axis_u2


def step(state: SimState, barrier: BarrierState, config: SimConfig,
         dt: Optional[float] = None) -> Tuple[SimState, BarrierState, StepInfo]:
    """
    Advance nodes and barrier by one accepted RK4 step.

    A step is rejected and retried with half the time step on contour
    self-intersection, a relative area jump above simulation.area_jump or
    node speeds above simulation.max_speed.

    Raises:
        StepRejectedError: After simulation.max_retries rejections
    """
    max_retries = int(get_config("simulation.max_retries", 8))
    area_jump = float(get_config("simulation.area_jump", 1e-4))
    dt = choose_dt(state, config) if dt is None else dt
    if not dt > 0.0:
        raise SimulationError(f"non-positive time step {dt!r}")
    rhs = _Stepper(state, config)
    reasons: List[str] = []

    for attempt in range(max_retries + 1):
        try:
            nodes, log_alpha, log_eps, rates, axis_u2 = _rk4(state, barrier, dt, rhs)
            new_field = _make_field(nodes, state.strength)
        except _InvalidStage as e:
            reason = e.reason.split(":")[0]
        except DomainError:
            reason = "invalid_contour"
        else:
            jump = abs(new_field.patches[0].area - state.area) / state.area
            if jump <= area_jump:
                t_new = state.t + dt
                new_state = replace(state, t=t_new, field=new_field, step_count=state.step_count + 1)
                new_barrier = barrier.advanced(log_alpha, log_eps, t_new)
                logger.debug(f"step {new_state.step_count}: t={t_new:.6g} dt={dt:.3e} nodes={len(nodes)}")
                return new_state, new_barrier, StepInfo(dt, attempt, rates, axis_u2, reasons)
            reason = "area_jump"
        reasons.append(reason)
        logger.warning(f"Step rejected at t={state.t:.6g} with dt={dt:.3e}: {reason}")
        dt *= 0.5
    raise StepRejectedError(f"step at t={state.t!r} rejected {max_retries + 1} times", reasons)


def refine(state: SimState, config: SimConfig) -> SimState:
    """
    One refinement pass; keeps the axis flags consistent with the new nodes.

    Raises:
        ResolutionFloorReached: If the node budget is exceeded
    """
    settings = refine_settings(config)
    nodes, on_axis, report = refine_nodes(state.nodes, state.on_axis, settings)
    if not (report.inserted or report.removed):
        return state
    try:
        new_field = _make_field(nodes, state.strength)
    except DomainError:
        # arc midpoints can cross a nearby segment; chord midpoints without merges cannot make it worse
        chord = replace(settings, area_budget=0.0)
        nodes, on_axis, _ = refine_nodes(state.nodes, state.on_axis, chord)
        try:
            new_field = _make_field(nodes, state.strength)
        except DomainError as e:
            raise SimulationError(f"Failed to refine contour at t={state.t!r}: {e}")
    return replace(state, field=new_field, on_axis=on_axis)


def _checkpoint_payload(state: SimState, barrier: BarrierState) -> Dict[str, object]:
    return {
        "t": state.t, "step_count": state.step_count, "strength": state.strength,
        "barrier": barrier, "initial_area": state.initial_area,
        "nodes": state.nodes, "on_axis": state.on_axis, "history": state.diagnostics,
    }


def resume_state(path: str) -> Tuple[SimState, BarrierState]:
    """Rebuild (state, barrier) from a checkpoint file."""
    data = load_checkpoint(path)
    state = SimState(t=data["t"], field=_make_field(data["nodes"], data["strength"]),
                     on_axis=data["on_axis"], diagnostics=data["history"],
                     initial_area=data["initial_area"], step_count=data["step_count"])
    return state, data["barrier"]


def _snapshot(state: SimState, barrier: BarrierState) -> Dict[str, object]:
    return {"t": state.t, "nodes": state.nodes.copy(), "alpha": barrier.alpha, "eps": barrier.eps,
            "collapsed": barrier.collapsed}


def run_simulation(config: SimConfig, checkpoint: Optional[str] = None,
                   resume: Optional[str] = None,
                   on_step: Optional[Callable[[SimState, BarrierState], None]] = None) -> SimulationResult:
    """
    Run from the initial patch (or a checkpoint) to t_end or the resolution floor.

    Args:
        config: Run configuration
        checkpoint: Path written at the end of the run
        resume: Checkpoint to continue from
        on_step: Called after every accepted step

    Returns:
        SimulationResult with status 'completed' or 'floor_reached'
    """
    if resume:
        state, barrier = resume_state(resume)
        logger.info(f"Resuming from {resume} at t={state.t!r}")
    else:
        state, barrier = init_state(config)

    floor = float(get_config("simulation.floor_factor", 10.0)) * config.node_spacing_min
    pending = sorted(t for t in config.snapshot_times if t >= state.t)
    snapshots: List[Dict[str, object]] = []
    while pending and pending[0] <= state.t:
        snapshots.append(_snapshot(state, barrier))
        pending.pop(0)

    status, details, rejections = STATUS_COMPLETED, {}, 0
    try:
        while state.t < config.t_end:
            if state.diagnostics.last.d < floor:
                raise ResolutionFloorReached(f"proxy distance {state.diagnostics.last.d:.3e} below {floor:.3e}",
                                             {"t": state.t, "d": state.diagnostics.last.d})
            dt = choose_dt(state, config, config.t_end)
            if dt <= 0.0:
                break
            previous = barrier
            state, barrier, info = step(state, barrier, config, dt)
            rejections += info.rejections
            state = refine(state, config)
            realized = (barrier.log_alpha - previous.log_alpha) / info.dt
            state.diagnostics.append(_sample(state, barrier, config, info.rates, info.dt,
                                             info.rejections, info.max_axis_u2, realized))
            while pending and pending[0] <= state.t + 1e-12:
                snapshots.append(_snapshot(state, barrier))
                pending.pop(0)
            if on_step is not None:
                on_step(state, barrier)
    except ResolutionFloorReached as e:
        status, details = STATUS_FLOOR, dict(e.details)
        logger.info(f"Resolution floor reached at t={state.t:.6g}: {e}")

    if not snapshots or snapshots[-1]["t"] != state.t:
        snapshots.append(_snapshot(state, barrier))
    if checkpoint:
        save_checkpoint(checkpoint, **_checkpoint_payload(state, barrier))
    last = state.diagnostics.last
    logger.info(f"Simulation {status} at t={state.t:.6g} after {state.step_count} step(s): "
                f"proxy={last.proxy:.6g}, nodes={last.node_count}, rejections={rejections}")
    return SimulationResult(state=state, barrier=barrier, status=status, snapshots=snapshots,
                            rejections=rejections, floor_details=details)
