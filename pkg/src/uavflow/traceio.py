"""Trace export/import: plain CSV with '#' header lines.

Floats are written with 17 significant digits so a re-imported trace is
bit-identical to the original; plotting tools can consume the files directly.
"""

import math

import numpy as np

from . import __version__
from .mission import IterationRecord, SimulationTrace


def _fmt(v):
    if math.isnan(v):
        return "nan"
    return format(float(v), ".17g")


def _columns(n_nodes, n_jam):
    cols = ["t", "flow_bps", "lambda2", "eta_bps"]
    for i in range(n_nodes):
        cols += [f"node{i}_x", f"node{i}_y", f"node{i}_z", f"node{i}_p_w"]
    for m in range(n_jam):
        cols += [f"jam{m}_x", f"jam{m}_y", f"jam{m}_z", f"jam{m}_p_w"]
    cols.append("cut_edges")
    return cols


def trace_text(trace):
    lines = ["# uavflow trace v1"]
    lines.append(f"# scenario={trace.scenario_hash} seed={trace.seed} "
                 f"tool={__version__}")
    lines.append(f"# converged={trace.converged}")
    lines.append(f"# error={'' if trace.error is None else trace.error}")
    if trace.records:
        first = trace.records[0]
        n_nodes = first.node_pos.shape[0]
        n_jam = first.jam_pos.shape[0]
    else:
        n_nodes = n_jam = 0
    lines.append(f"# n_nodes={n_nodes} n_interferers={n_jam}")
    lines.append("# columns: " + ",".join(_columns(n_nodes, n_jam)))
    for rec in trace.records:
        parts = [str(rec.t), _fmt(rec.flow_bps), _fmt(rec.lambda2),
                 _fmt(rec.eta_bps)]
        for i in range(n_nodes):
            parts += [_fmt(rec.node_pos[i, 0]), _fmt(rec.node_pos[i, 1]),
                      _fmt(rec.node_pos[i, 2]), _fmt(rec.p[i])]
        for m in range(n_jam):
            parts += [_fmt(rec.jam_pos[m, 0]), _fmt(rec.jam_pos[m, 1]),
                      _fmt(rec.jam_pos[m, 2]), _fmt(rec.pj[m])]
        parts.append("|".join(f"{i}-{j}" for i, j in rec.cut_edges))
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def export_trace(trace, path):
    text = trace_text(trace)
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc
    return path


def _parse_header(line, trace, shape):
    body = line[1:].strip()
    if body.startswith("error="):
        err = body[len("error="):]
        trace.error = err if err else None
        return
    for token in body.split():
        if "=" not in token:
            continue
        key, val = token.split("=", 1)
        if key == "scenario":
            trace.scenario_hash = val
        elif key == "seed":
            trace.seed = int(val)
        elif key == "converged":
            trace.converged = val == "True"
        elif key == "n_nodes":
            shape[0] = int(val)
        elif key == "n_interferers":
            shape[1] = int(val)


def import_trace(path):
    """Parse a trace file back into a SimulationTrace (slacks are not
    exported, so they come back as None)."""
    trace = SimulationTrace(scenario_hash="", seed=0)
    shape = [0, 0]
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                _parse_header(line, trace, shape)
                continue
            n_nodes, n_jam = shape
            parts = line.split(",")
            t = int(parts[0])
            flow, lam2, eta = (float(x) for x in parts[1:4])
            vals = np.array([float(x) for x in parts[4:4 + 4 * (n_nodes + n_jam)]])
            node_block = vals[:4 * n_nodes].reshape(n_nodes, 4)
            jam_block = vals[4 * n_nodes:].reshape(n_jam, 4)
            cut_field = parts[4 + 4 * (n_nodes + n_jam)]
            cut_edges = []
            if cut_field:
                for token in cut_field.split("|"):
                    i, j = token.split("-")
                    cut_edges.append((int(i), int(j)))
            trace.records.append(IterationRecord(
                t=t, flow_bps=flow, lambda2=lam2, eta_bps=eta,
                node_pos=node_block[:, :3].copy(), p=node_block[:, 3].copy(),
                jam_pos=jam_block[:, :3].copy(), pj=jam_block[:, 3].copy(),
                cut_edges=cut_edges, slacks=None))
    return trace


def traces_equal(a, b):
    """Field-for-field equality on the exported fields."""
    if (a.scenario_hash, a.seed, a.converged, a.error or None) \
            != (b.scenario_hash, b.seed, b.converged, b.error or None):
        return False
    if len(a.records) != len(b.records):
        return False
    for ra, rb in zip(a.records, b.records):
        if ra.t != rb.t or ra.cut_edges != rb.cut_edges:
            return False
        for xa, xb in ((ra.flow_bps, rb.flow_bps), (ra.lambda2, rb.lambda2),
                       (ra.eta_bps, rb.eta_bps)):
            if not (xa == xb or (math.isnan(xa) and math.isnan(xb))):
                return False
        for arr_a, arr_b in ((ra.node_pos, rb.node_pos), (ra.p, rb.p),
                             (ra.jam_pos, rb.jam_pos), (ra.pj, rb.pj)):
            if arr_a.shape != arr_b.shape or not np.array_equal(arr_a, arr_b):
                return False
    return True
