"""The time loop: trajectory stepping, interferer policies, the alternating
optimizer, and parameter sweeps.

One iteration runs, in order: connectivity gradients at the current state,
UAV location update, smart-jammer update (every tau iterations), power
allocation (skipped at P_max in smart mode), then max-flow evaluation.  The
loop stops when the flow change between consecutive iterations drops to eps
or the iteration cap is reached.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import power as power_mod
from .errors import Infeasible
from .flow import build_graph, capacity_matrix, max_flow
from .spectral import (connectivity_gradient, fiedler, jammer_gradient,
                       pencil_laplacian)


@dataclass
class MotionConfig:
    dt: float = 0.08         # step gain; typical steps land well under max_step
    dims: str = "xyz"        # subset of axes the UAVs may move along
    z_min: float = 1.0       # altitude floor, meters
    max_step: float = 5.0    # per-iteration displacement cap, meters


@dataclass
class InterfererPolicy:
    kind: str                # "naive" | "reckless-mobile" | "smart"
    tau: int = 1             # smart movers act on iterations t % tau == 0
    waypoints: np.ndarray = None
    speed: float = 5.0       # m per iteration along the scripted path


@dataclass
class IterationRecord:
    t: int
    flow_bps: float
    lambda2: float
    eta_bps: float
    node_pos: np.ndarray
    jam_pos: np.ndarray
    p: np.ndarray
    pj: np.ndarray
    cut_edges: list
    slacks: dict = None


@dataclass
class SimulationTrace:
    scenario_hash: str
    seed: int
    records: list = field(default_factory=list)
    converged: bool = False
    error: str = None


def axes_mask(dims):
    return np.array(["x" in dims, "y" in dims, "z" in dims], dtype=float)


def _clip_step(disp, max_step):
    nrm = float(np.linalg.norm(disp))
    if nrm > max_step:
        return disp * (max_step / nrm)
    return disp


def step_trajectory(state, scenario, grad, cfg):
    """Move each movable UAV along its gradient; returns a new state.

    Disabled axes stay put, per-node displacement is capped at max_step, and
    altitudes are floored at z_min.
    """
    new = state.copy()
    mask = axes_mask(cfg.dims)
    for row, i in enumerate(grad.indices):
        disp = _clip_step(cfg.dt * grad.vectors[row] * mask, cfg.max_step)
        new.node_pos[i] += disp
        if new.node_pos[i, 2] < cfg.z_min:
            new.node_pos[i, 2] = cfg.z_min
    return new


def _waypoint_position(start, waypoints, s):
    """Point at arc length s along the polyline start -> waypoints."""
    prev = start
    remaining = s
    for wp in waypoints:
        seg = wp - prev
        length = float(np.linalg.norm(seg))
        if remaining <= length or length == 0.0:
            if length == 0.0:
                prev = wp
                continue
            return prev + seg * (remaining / length)
        remaining -= length
        prev = wp
    return waypoints[-1].copy()


def jammer_step(state, scenario, t):
    """Apply every interferer's policy for iteration t; returns a new state.

    Smart interferers recompute the Fiedler pair from the true current state
    and descend the connectivity gradient; naive ones never move; scripted
    ones advance along their waypoints.
    """
    new = state.copy()
    cfg = scenario.motion
    jgrad = None
    for m, pol in enumerate(scenario.policies):
        if pol.kind == "naive":
            continue
        if pol.kind == "reckless-mobile":
            new.jam_path_s[m] += pol.speed
            new.jam_pos[m] = _waypoint_position(
                scenario.jam_pos0[m], pol.waypoints, new.jam_path_s[m])
        elif pol.kind == "smart" and t % pol.tau == 0:
            if jgrad is None:
                graph = build_graph(state, scenario)
                fp = fiedler(pencil_laplacian(graph, scenario.weights))
                jgrad = jammer_gradient(state, scenario, fp)
            disp = _clip_step(-cfg.dt * jgrad.vectors[m], cfg.max_step)
            new.jam_pos[m] += disp
        else:
            continue
        # movers share the UAV altitude floor
        if new.jam_pos[m, 2] < cfg.z_min:
            new.jam_pos[m, 2] = cfg.z_min
    return new


def _min_edge_capacity(state, scenario):
    a = capacity_matrix(state, scenario)
    return float(min(a[i, j] for i, j in scenario.edges))


def _slacks(state, scenario):
    out = {
        "power": float(scenario.p_max_w - state.p.max()),
        "interference": math.nan,
        "qos": math.nan,
    }
    if scenario.mode == "smart":
        return out
    tab = power_mod._build_tables(state, scenario)
    if scenario.n_interferers:
        load = state.p[None, :] * tab.gjn          # (M, N)
        out["interference"] = float((scenario.i_max_w[:, None] - load).min())
    if scenario.n_interferers and scenario.n_primary_ues and scenario.r_th_bps > 0:
        worst = math.inf
        for m in range(scenario.n_interferers):
            for u in range(scenario.n_primary_ues):
                for i in range(scenario.n_nodes):
                    rate = power_mod.true_primary_rate(
                        m, u, i, tab, scenario, float(state.p[i]), float(state.pj[m]))
                    worst = min(worst, rate - scenario.r_th_bps)
        out["qos"] = float(worst)
    return out


def _record(t, state, scenario, eta_bps):
    graph = build_graph(state, scenario)
    fr = max_flow(graph)
    try:
        lam2 = fiedler(pencil_laplacian(graph, scenario.weights)).lambda2
    except Exception:
        lam2 = math.nan
    cut_edges = sorted(
        (min(int(i), int(j)), max(int(i), int(j)))
        for i, j in scenario.edges
        if (int(i) in fr.cut_set) != (int(j) in fr.cut_set))
    return IterationRecord(
        t=t,
        flow_bps=fr.value,
        lambda2=lam2,
        eta_bps=eta_bps,
        node_pos=state.node_pos.copy(),
        jam_pos=state.jam_pos.copy(),
        p=state.p.copy(),
        pj=state.pj.copy(),
        cut_edges=cut_edges,
        slacks=_slacks(state, scenario),
    )


def alternating_optimize(scenario):
    """Run the alternating trajectory/power optimization to convergence.

    Infeasible power allocation aborts the run; the trace collected so far is
    returned with the error recorded.
    """
    trace = SimulationTrace(scenario_hash=scenario.scenario_hash(),
                            seed=scenario.seed)
    state = scenario.initial_state()
    smart = scenario.mode == "smart"
    try:
        if smart:
            state.p[:] = scenario.p_max_w
        else:
            init = power_mod.feasible_init(state, scenario)
            state.p = init.p
            state.pj = init.pj
        trace.records.append(_record(0, state, scenario,
                                     _min_edge_capacity(state, scenario)))
    except Infeasible as exc:
        trace.error = str(exc)
        return trace

    eps = scenario.eps_flow_bps
    for t in range(1, scenario.max_iters + 1):
        graph = build_graph(state, scenario)
        fp = fiedler(pencil_laplacian(graph, scenario.weights))
        grad = connectivity_gradient(state, scenario, fp)
        state = step_trajectory(state, scenario, grad, scenario.motion)
        state.t = t
        state = jammer_step(state, scenario, t)
        if smart:
            state.p[:] = scenario.p_max_w
            eta = _min_edge_capacity(state, scenario)
        else:
            try:
                init = power_mod.feasible_init(state, scenario, pj=state.pj)
                sca = power_mod.sca_loop(state, scenario, init=init)
            except Infeasible as exc:
                trace.error = str(exc)
                break
            state.p = sca.powers.p
            state.pj = sca.powers.pj
            eta = sca.eta_bps
        trace.records.append(_record(t, state, scenario, eta))
        if t >= 2 and abs(trace.records[-1].flow_bps
                          - trace.records[-2].flow_bps) <= eps:
            trace.converged = True
            break
    return trace


@dataclass
class SweepPoint:
    value: object
    trace: SimulationTrace = None
    error: str = None


def run_sweep(scenario, sweep_field, values):
    """Independent runs over one scenario field; continues past failures."""
    from .scenario import apply_override, build_scenario

    points = []
    for value in values:
        try:
            raw = apply_override(scenario.raw, sweep_field, value)
            trace = alternating_optimize(build_scenario(raw))
            points.append(SweepPoint(value=value, trace=trace,
                                     error=trace.error))
        except Exception as exc:
            points.append(SweepPoint(value=value, error=str(exc)))
    return points
