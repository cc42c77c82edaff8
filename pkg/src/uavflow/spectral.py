"""Weighted normalized Laplacian, algebraic connectivity, exact Cheeger
constants, and the spatial gradients that drive UAV and jammer motion.

The trajectory gradient is the frozen-coefficient surrogate: with the Fiedler
vector v and node weights w held fixed, the connectivity ascent direction is
sum over connected pairs of (v_p/sqrt(w_p) - v_q/sqrt(w_q))^2 * da_pq/dx.
Eigenvector sensitivity terms are deliberately not included.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConvergenceFailure, TooLarge, ZeroDegree
from .flow import degree_laplacian

logger = logging.getLogger("uavflow.spectral")

EIGEN_RESIDUAL_TOL = 1e-8
EIGEN_CROSSING_TOL = 1e-8
CHEEGER_CAP = 16

AXES = {"x": 0, "y": 1, "z": 2}


@dataclass
class FiedlerPair:
    lambda2: float
    vector: np.ndarray


@dataclass
class Gradient:
    indices: np.ndarray      # entity indices the rows refer to
    vectors: np.ndarray      # (len(indices), 3), units 1/m times rate scale


def weighted_laplacian(g, w):
    """W^{-1/2} D^{-1/2} (D - A) D^{-1/2} W^{-1/2}; symmetric PSD.

    Raises ZeroDegree when a node is isolated.  Invariant under uniform
    scaling of all capacities.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0.0):
        raise ValueError("node weights must be positive")
    d, lap = degree_laplacian(g)
    deg = np.diag(d)
    if np.any(deg <= 0.0):
        raise ZeroDegree(f"isolated node(s) {np.flatnonzero(deg <= 0.0).tolist()}")
    s = 1.0 / np.sqrt(deg * w)
    return np.outer(s, s) * lap


def fiedler(lap):
    """Second-smallest eigenpair via dense symmetric eigendecomposition.

    Deterministic sign: the first component above rounding noise is positive.
    """
    vals, vecs = np.linalg.eigh(lap)
    lam2 = float(vals[1])
    vec = vecs[:, 1].copy()
    nrm = np.abs(vec).max()
    for x in vec:
        if abs(x) > 1e-12 * nrm:
            if x < 0.0:
                vec = -vec
            break
    mat_norm = float(np.abs(vals).max())
    residual = float(np.linalg.norm(lap @ vec - lam2 * vec))
    if residual > EIGEN_RESIDUAL_TOL * max(mat_norm, 1e-300):
        raise ConvergenceFailure(
            f"eigen residual {residual:.3e} exceeds {EIGEN_RESIDUAL_TOL:.0e} * ||L||")
    if len(vals) > 2 and vals[2] - vals[1] < EIGEN_CROSSING_TOL * max(mat_norm, 1e-300):
        logger.warning("lambda2/lambda3 near-crossing: %.3e vs %.3e",
                       vals[1], vals[2])
    return FiedlerPair(lambda2=lam2, vector=vec)


def pencil_laplacian(g, w):
    """W^{-1/2} (D - A) W^{-1/2}: the weight-scaled unnormalized Laplacian.

    Unlike `weighted_laplacian`, its lambda2 scales with the capacities;
    this is the connectivity the weighted Cheeger inequalities bound, and
    the frozen-coefficient gradient (see `edge_coefficients`) is exactly the
    derivative of its Rayleigh quotient with the eigenvector held fixed.
    The trajectory ascent therefore runs on this matrix.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0.0):
        raise ValueError("node weights must be positive")
    _, lap = degree_laplacian(g)
    s = 1.0 / np.sqrt(w)
    return np.outer(s, s) * lap


def pencil_lambda2(g, w):
    return float(np.linalg.eigvalsh(pencil_laplacian(g, w))[1])


def _subset_iter(n):
    # node 0 pinned inside S; skip the full set so S stays proper
    full = (1 << (n - 1)) - 1
    for mask in range(full):
        members = np.zeros(n, dtype=bool)
        members[0] = True
        for bit in range(n - 1):
            if mask >> bit & 1:
                members[bit + 1] = True
        yield members


def cheeger_exact(g, w=None):
    """Exact (weighted) Cheeger constant by subset enumeration, n <= 16."""
    n = g.n
    if n > CHEEGER_CAP:
        raise TooLarge(f"Cheeger enumeration capped at n={CHEEGER_CAP}")
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    total = w.sum()
    best = math.inf
    for members in _subset_iter(n):
        cut = float(g.a[members][:, ~members].sum())
        ws = float(w[members].sum())
        best = min(best, cut / min(ws, total - ws))
    return best


def cheeger_bounds_check(g, w, tol=1e-9):
    """(lambda2/2, h_W, sqrt(2 delta_max lambda2 / w_min)); asserts the
    sandwich holds."""
    w = np.asarray(w, dtype=float)
    h = cheeger_exact(g, w)
    lam2 = pencil_lambda2(g, w)
    delta_max = float(g.a.sum(axis=1).max())
    lower = lam2 / 2.0
    upper = math.sqrt(max(2.0 * delta_max * lam2 / float(w.min()), 0.0))
    slack = tol * max(1.0, abs(h))
    assert lower <= h + slack, f"Cheeger lower bound violated: {lower} > {h}"
    assert h <= upper + slack, f"Cheeger upper bound violated: {h} > {upper}"
    return lower, h, upper


def edge_coefficients(fp, w, edges):
    """Frozen quadratic-form coefficients (v_p/sqrt(w_p) - v_q/sqrt(w_q))^2."""
    scaled = fp.vector / np.sqrt(np.asarray(w, dtype=float))
    diff = scaled[edges[:, 0]] - scaled[edges[:, 1]]
    return diff * diff


def capacity_gradient(p, q, i, axis, state, scenario):
    """d a_{p,q} / d(axis coordinate of node i); zero for p == q."""
    if p == q:
        return 0.0
    ax = AXES[axis] if isinstance(axis, str) else int(axis)
    edges = np.array([[p, q]], dtype=np.int64)
    grad_nodes, _ = kernels.capacity_gradients(
        *scenario.kernel_args(state), edges, np.ones(1),
        scenario.channel.bandwidth_hz)
    return float(grad_nodes[i, ax])


def connectivity_gradient(state, scenario, fp, w=None):
    """Frozen-coefficient connectivity gradient for every movable UAV."""
    w = scenario.weights if w is None else w
    coeffs = edge_coefficients(fp, w, scenario.edges)
    grad_nodes, _ = kernels.capacity_gradients(
        *scenario.kernel_args(state), scenario.edges, coeffs,
        scenario.channel.bandwidth_hz)
    return Gradient(indices=scenario.movable.copy(),
                    vectors=grad_nodes[scenario.movable])


def jammer_gradient(state, scenario, fp, w=None):
    """Connectivity gradient w.r.t. every interferer position.

    Rows are the true (un-negated) gradient; a smart interferer descends it.
    """
    w = scenario.weights if w is None else w
    coeffs = edge_coefficients(fp, w, scenario.edges)
    _, grad_jam = kernels.capacity_gradients(
        *scenario.kernel_args(state), scenario.edges, coeffs,
        scenario.channel.bandwidth_hz)
    return Gradient(indices=np.arange(scenario.n_interferers, dtype=np.int64),
                    vectors=grad_jam)
