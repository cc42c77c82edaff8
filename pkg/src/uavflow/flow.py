"""Capacity graph construction and max-flow / min-cut evaluation.

Each undirected edge with average rate a_{i,j} is treated as a pair of
opposing arcs, each of capacity a_{i,j}.  Max flow uses shortest augmenting
paths (Edmonds-Karp) so that real-valued capacities terminate; residual
capacities below eps_cap = 1e-12 * max(a) count as saturated.
"""

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateDenominator, TooLarge
from .radio import sir

BRUTEFORCE_CAP = 16


@dataclass
class CapacityGraph:
    a: np.ndarray           # (n, n) symmetric nonnegative, bits/s
    source: int
    sink: int

    @property
    def n(self):
        return self.a.shape[0]


@dataclass
class FlowResult:
    value: float            # bits/s
    flow: np.ndarray        # (n, n) antisymmetric net flow
    cut_set: frozenset      # S with source in S, sink not in S


@dataclass
class FlowValidation:
    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def edge_capacity(i, j, state, scenario):
    """Average i<->j transmission rate (B/2)(log2(1+SIR_ij)+log2(1+SIR_ji))."""
    b = scenario.channel.bandwidth_hz
    return 0.5 * b * (math.log2(1.0 + sir(i, j, state, scenario))
                      + math.log2(1.0 + sir(j, i, state, scenario)))


def capacity_matrix(state, scenario):
    """Dense symmetric capacity matrix over the scenario topology edges."""
    s, _, _, denom, _ = kernels.sir_matrix(*scenario.kernel_args(state))
    n = scenario.n_nodes
    a = np.zeros((n, n))
    bw = scenario.channel.bandwidth_hz
    for i, j in scenario.edges:
        if denom[i, j] <= 0.0 or denom[j, i] <= 0.0:
            raise DegenerateDenominator(
                f"SIR denominator is zero on edge ({i}, {j})")
        cap = 0.5 * bw * (math.log2(1.0 + s[i, j]) + math.log2(1.0 + s[j, i]))
        a[i, j] = a[j, i] = cap
    return a


def build_graph(state, scenario):
    return CapacityGraph(a=capacity_matrix(state, scenario),
                         source=scenario.source, sink=scenario.sink)


def degree_laplacian(g):
    """Generalized degree matrix and Laplacian L = D - A."""
    d = np.diag(g.a.sum(axis=1))
    return d, d - g.a


def _bfs_augmenting_path(residual, source, sink, eps):
    n = residual.shape[0]
    parent = np.full(n, -1, dtype=np.int64)
    parent[source] = source
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in range(n):
            if parent[v] < 0 and residual[u, v] > eps:
                parent[v] = u
                if v == sink:
                    return parent
                queue.append(v)
    return parent


def max_flow(g):
    """Max source->sink flow with its certifying minimum cut.

    A disconnected graph is not an error: the value is 0 and the flow empty.
    """
    n = g.n
    residual = g.a.astype(float).copy()
    cap_max = float(residual.max()) if n else 0.0
    eps = 1e-12 * cap_max
    while True:
        parent = _bfs_augmenting_path(residual, g.source, g.sink, eps)
        if parent[g.sink] < 0:
            break
        bottleneck = math.inf
        v = g.sink
        while v != g.source:
            u = parent[v]
            bottleneck = min(bottleneck, residual[u, v])
            v = u
        v = g.sink
        while v != g.source:
            u = parent[v]
            residual[u, v] -= bottleneck
            residual[v, u] += bottleneck
            v = u
    flow = g.a - residual
    reachable = _residual_reachable(residual, g.source, eps)
    value = float(flow[g.source].sum())
    return FlowResult(value=value, flow=flow, cut_set=frozenset(reachable))


def _residual_reachable(residual, source, eps):
    n = residual.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[source] = True
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in range(n):
            if not seen[v] and residual[u, v] > eps:
                seen[v] = True
                queue.append(v)
    return [int(v) for v in np.flatnonzero(seen)]


def cut_capacity(g, cut_set):
    members = np.zeros(g.n, dtype=bool)
    members[list(cut_set)] = True
    return float(g.a[members][:, ~members].sum())


def min_cut_bruteforce(g):
    """Exhaustive min source/sink cut; oracle for max_flow, n <= 16 only."""
    n = g.n
    if n > BRUTEFORCE_CAP:
        raise TooLarge(f"brute-force cut enumeration capped at n={BRUTEFORCE_CAP}")
    free = [v for v in range(n) if v not in (g.source, g.sink)]
    best = math.inf
    for mask in range(1 << len(free)):
        members = np.zeros(n, dtype=bool)
        members[g.source] = True
        for bit, v in enumerate(free):
            if mask >> bit & 1:
                members[v] = True
        best = min(best, float(g.a[members][:, ~members].sum()))
    return best


def validate_flow(g, fr, tol=1e-9):
    """Check conservation, capacity bounds, and the source balance."""
    violations = []
    scale = max(1.0, float(g.a.max()) if g.n else 1.0)
    if not np.allclose(fr.flow, -fr.flow.T, atol=tol * scale):
        violations.append("flow matrix is not antisymmetric")
    excess = fr.flow - g.a
    if excess.max() > tol * scale:
        i, j = np.unravel_index(int(excess.argmax()), excess.shape)
        violations.append(
            f"edge ({i}, {j}) exceeds capacity by {excess[i, j]:.3e}")
    net = fr.flow.sum(axis=1)
    for v in range(g.n):
        if v in (g.source, g.sink):
            continue
        if abs(net[v]) > tol * scale:
            violations.append(f"conservation violated at node {v}: {net[v]:.3e}")
    if abs(net[g.source] - fr.value) > tol * scale:
        violations.append(
            f"net out-of-source {net[g.source]:.6e} != value {fr.value:.6e}")
    return FlowValidation(ok=not violations, violations=violations)
