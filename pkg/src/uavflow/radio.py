"""Physical-layer model: path loss, channel gains, the safety-modified SIR,
and the primary network's SINR/rate.

Entities share one global index space: UAV-network nodes 0..N-1 (0 is the BS
source, N-1 the destination UE), then interferers, then primary UEs.  A link
is air-to-ground iff exactly one endpoint is terrestrial -- classification is
by role, never by altitude.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateDenominator, DegenerateGeometry
from .kernels import smoothed_step as _smoothed_step_kernel

SPEED_OF_LIGHT = 3.0e8


class LinkKind(Enum):
    AIR_TO_AIR = "a2a"
    AIR_TO_GROUND = "a2g"


class FadingModel(Enum):
    UNIT = "unit"
    COMPLEX_GAUSSIAN = "complex-gaussian"


@dataclass(frozen=True)
class ChannelParams:
    alpha_a2a: float
    alpha_a2g: float
    eta_a2a_db: float
    eta_a2g_db: float
    carrier_hz: float
    bandwidth_hz: float
    noise_w: float


@dataclass(frozen=True)
class SafetyParams:
    chi: float      # weight of the safety term, carries watts
    zeta: float
    kappa: float
    y0: float
    r_int: float    # interference radius [m]


def reference_loss_db(carrier_hz):
    """Free-space loss at the 1 m reference distance."""
    return 10.0 * math.log10((4.0 * math.pi * carrier_hz / SPEED_OF_LIGHT) ** 2)


def path_loss_db(kind, d, params):
    if d <= 0.0:
        raise DegenerateGeometry(f"path loss undefined at distance {d}")
    if kind is LinkKind.AIR_TO_AIR:
        return params.alpha_a2a * 10.0 * math.log10(d) + params.eta_a2a_db
    return params.alpha_a2g * 10.0 * math.log10(d) + params.eta_a2g_db


def smoothed_step(y, safety):
    """Logistic safety penalty u(y); strictly decreasing, range (0, zeta)."""
    return float(_smoothed_step_kernel(y, safety.zeta, safety.kappa, safety.y0))


def smoothed_step_deriv(y, safety):
    u = smoothed_step(y, safety)
    return -safety.kappa * u * (1.0 - u / safety.zeta)


def distance(a, b, state, scenario):
    pos = scenario.entity_positions(state)
    return float(np.linalg.norm(pos[a] - pos[b]))


def gain_sq(a, b, state, scenario):
    """Squared channel gain |h_{a,b}|^2 between entities a and b.

    Symmetric in (a, b): reciprocity holds for every fading model because the
    small-scale gain is drawn once per unordered pair.
    """
    if a == b:
        raise DegenerateGeometry("gain_sq needs two distinct entities")
    d = distance(a, b, state, scenario)
    if d == 0.0:
        raise DegenerateGeometry(f"entities {a} and {b} coincide")
    return scenario.pair_coef[a, b] * d ** (-scenario.pair_alpha[a, b])


def sir(i, j, state, scenario):
    """Modified SIR of the i->j link (both in the UAV network).

    Denominator: interference from every interferer at the receiver j plus
    the safety term chi * sum_{k not in {i,j}} u(d_{j,k}/r_int).
    """
    n = scenario.n_nodes
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"sir needs two distinct UAV-network nodes, got {i}, {j}")
    saf = scenario.safety
    num = state.p[i] * gain_sq(i, j, state, scenario)
    den = 0.0
    for m in range(scenario.n_interferers):
        den += state.pj[m] * gain_sq(n + m, j, state, scenario)
    for k in range(n):
        if k == i or k == j:
            continue
        d_jk = distance(j, k, state, scenario)
        if d_jk == 0.0:
            raise DegenerateGeometry(f"nodes {j} and {k} coincide")
        den += saf.chi * smoothed_step(d_jk / saf.r_int, saf)
    if den <= 0.0:
        raise DegenerateDenominator(
            "SIR denominator is zero (no interferers and no safety term)")
    return num / den


def sinr_primary(m, u, i, state, scenario):
    """SINR at primary UE u served by interferer m while node i transmits."""
    n, nm = scenario.n_nodes, scenario.n_interferers
    ue = n + nm + u
    num = state.pj[m] * gain_sq(n + m, ue, state, scenario)
    den = state.p[i] * gain_sq(i, ue, state, scenario) + scenario.channel.noise_w
    return num / den


def primary_rate(m, u, i, state, scenario):
    """Achievable rate of the primary m->u link under node i's interference."""
    b = scenario.channel.bandwidth_hz
    return b * math.log2(1.0 + sinr_primary(m, u, i, state, scenario))
