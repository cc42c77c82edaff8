import numpy as np
import pytest

from uavflow import kernels
from uavflow.scenario import build_scenario


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # JIT compile outside any timed test body
    kernels.warmup()


def scenario_with(**over):
    """Default scenario with section-level overrides."""
    return build_scenario(over)


@pytest.fixture
def small_scenario():
    """3 relays, one interferer off the chain, one primary UE."""
    return scenario_with(
        relays={"count": 3},
        interferers=[{"pos": [60.0, 30.0, 18.0]}],
        primary_ues=[{"pos": [60.0, 70.0, 0.0]}],
    )


@pytest.fixture
def mesh_scenario():
    return scenario_with(
        topology="mesh",
        relays={"count": 2},
        interferers=[{"pos": [60.0, 30.0, 18.0]}, {"pos": [140.0, -25.0, 22.0]}],
    )


def perturbed_state(scenario, rng, pos_scale=8.0):
    state = scenario.initial_state()
    state.node_pos[1:-1] += rng.normal(0.0, pos_scale,
                                       state.node_pos[1:-1].shape)
    state.node_pos[:, 2] = np.abs(state.node_pos[:, 2]) + 1.0
    state.p = rng.uniform(0.2, 1.0, scenario.n_nodes) * scenario.p_max_w
    return state
