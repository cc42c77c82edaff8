import math

import numpy as np
import pytest

from uavflow import power
from uavflow.errors import InfeasibleExpansion
from uavflow.flow import capacity_matrix, edge_capacity
from uavflow.power import PowerVector

from conftest import scenario_with


def random_feasible_instance(rng, cooperative=False):
    k = int(rng.integers(3, 7))
    jams = [{"pos": [float(rng.uniform(30, 170)), float(rng.uniform(-60, 60)), 20.0]}
            for _ in range(int(rng.integers(1, 3)))]
    return scenario_with(
        mode="reckless-coop" if cooperative else "reckless-noncoop",
        relays={"count": k},
        interferers=jams,
        primary_ues=[{"pos": [float(rng.uniform(30, 170)),
                              float(rng.uniform(70, 110)), 0.0]}],
        constraints={"i_max_dbm": float(rng.uniform(-50, -20)),
                     "r_th_bps": 2.0e4},
    )


def apply_powers(state, pv):
    out = state.copy()
    out.p = pv.p.copy()
    out.pj = pv.pj.copy()
    return out


# -- dc_split ------------------------------------------------------------------


def test_dc_split_reproduces_edge_capacity(small_scenario):
    sc = small_scenario
    st = sc.initial_state()
    rng = np.random.default_rng(0)
    for i, j in sc.edges:
        v, r = power.dc_split(i, j, st, sc)
        for _ in range(20):
            st.p = rng.uniform(0.001, 1.0, sc.n_nodes) * sc.p_max_w
            st.pj = rng.uniform(0.01, 1.0, sc.n_interferers)
            expected = edge_capacity(i, j, st, sc)
            assert v(st.p[i], st.p[j], st.pj) - r(st.pj) \
                == pytest.approx(expected, rel=1e-12)


def test_dc_split_r_reduces_to_safety_logs(small_scenario):
    sc = small_scenario
    st = sc.initial_state()
    _, r = power.dc_split(1, 2, st, sc)
    tab = power._build_tables(st, sc)
    b = sc.channel.bandwidth_hz
    expected = 0.5 * b * (math.log2(tab.safety[1, 2]) + math.log2(tab.safety[2, 1]))
    assert r(np.zeros(sc.n_interferers)) == pytest.approx(expected, rel=1e-12)


def test_dc_split_r_concave_along_segments(small_scenario):
    sc = small_scenario
    st = sc.initial_state()
    _, r = power.dc_split(1, 2, st, sc)
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = rng.uniform(0.0, 2.0, sc.n_interferers)
        b = rng.uniform(0.0, 2.0, sc.n_interferers)
        mid = r(0.5 * (a + b))
        assert mid >= 0.5 * (r(a) + r(b)) - 1e-9 * max(1.0, abs(mid))


# -- taylor_linearize_r ----------------------------------------------------------


def test_taylor_tangency_and_overestimate(small_scenario):
    sc = small_scenario
    st = sc.initial_state()
    pj0 = st.pj.copy()
    _, r = power.dc_split(1, 2, st, sc)
    rt = power.taylor_linearize_r(1, 2, st, sc, pj0)
    assert rt(pj0) == pytest.approx(r(pj0), rel=1e-14)
    rng = np.random.default_rng(2)
    for _ in range(1000):
        pj = rng.uniform(0.0, 3.0, sc.n_interferers)
        assert rt(pj) >= r(pj) - 1e-9


def test_taylor_gradient_finite_difference(small_scenario):
    sc = small_scenario
    st = sc.initial_state()
    pj0 = st.pj.copy()
    r = power.dc_split(1, 2, st, sc)[1]
    rt = power.taylor_linearize_r(1, 2, st, sc, pj0)
    h = 1e-7
    for m in range(sc.n_interferers):
        e = np.zeros(sc.n_interferers)
        e[m] = h
        fd = (r(pj0 + e) - r(pj0 - e)) / (2.0 * h)
        an = (rt(pj0 + e) - rt(pj0 - e)) / (2.0 * h)
        assert an == pytest.approx(fd, rel=1e-5)


# -- qos_linearize ---------------------------------------------------------------


def test_qos_tangency_and_minorant(small_scenario):
    sc = small_scenario
    st = sc.initial_state()
    exp = power.feasible_init(st, sc)
    rhat = power.qos_linearize(0, 0, 1, st, sc, exp)
    tab = power._build_tables(st, sc)
    truth = lambda p_i, pj_m: power.true_primary_rate(0, 0, 1, tab, sc, p_i, pj_m)
    assert rhat(exp.p[1], exp.pj[0]) \
        == pytest.approx(truth(exp.p[1], exp.pj[0]), rel=1e-12)
    rng = np.random.default_rng(3)
    for _ in range(1000):
        p_i = float(rng.uniform(0.0, 2.0) * sc.p_max_w)
        pj_m = float(rng.uniform(0.01, 2.0))
        assert rhat(p_i, pj_m) <= truth(p_i, pj_m) + 1e-9
    # with p_i fixed at the expansion the tangent is exact for any pj
    for _ in range(50):
        pj_m = float(rng.uniform(0.01, 3.0))
        assert rhat(exp.p[1], pj_m) == pytest.approx(truth(exp.p[1], pj_m),
                                                     rel=1e-12)


def test_qos_infeasible_expansion():
    sc = scenario_with(
        relays={"count": 3},
        interferers=[{"pos": [60.0, 30.0, 18.0]}],
        primary_ues=[{"pos": [60.0, 70.0, 0.0]}],
        constraints={"r_th_bps": 1.0e9},
    )
    st = sc.initial_state()
    exp = PowerVector(p=np.full(sc.n_nodes, sc.p_max_w),
                      pj=sc.pj_nominal.copy())
    with pytest.raises(InfeasibleExpansion):
        power.qos_linearize(0, 0, 1, st, sc, exp)


# -- solve_subproblem / sca_loop -------------------------------------------------


def test_all_pmax_without_interferers():
    sc = scenario_with(relays={"count": 4}, interferers=[], primary_ues=[])
    st = sc.initial_state()
    res = power.sca_loop(st, sc)
    assert np.allclose(res.powers.p, sc.p_max_w, rtol=1e-12)
    assert len(res.history) <= 2


def test_single_relay_binding_cap_analytic():
    sc = scenario_with(
        relays={"count": 1},
        interferers=[{"pos": [100.0, 10.0, 20.0]}],
        constraints={"i_max_dbm": -55.0, "r_th_bps": 0.0},
    )
    st = sc.initial_state()
    res = power.sca_loop(st, sc)
    tab = power._build_tables(st, sc)
    expected = min(sc.p_max_w, sc.i_max_w[0] / tab.gjn[0, 1])
    assert expected < sc.p_max_w  # the cap really binds
    assert res.powers.p[1] == pytest.approx(expected, rel=1e-6)


def test_cooperative_beats_noncooperative():
    over = dict(relays={"count": 3},
                interferers=[{"pos": [80.0, 25.0, 20.0]}],
                primary_ues=[{"pos": [80.0, 65.0, 0.0]}],
                constraints={"r_th_bps": 1.0e4})
    nc = scenario_with(mode="reckless-noncoop", **over)
    co = scenario_with(mode="reckless-coop", **over)
    eta_nc = power.sca_loop(nc.initial_state(), nc).eta_bps
    eta_co = power.sca_loop(co.initial_state(), co).eta_bps
    assert eta_co > eta_nc


def test_kkt_residual_contract(small_scenario):
    sc = small_scenario
    st = sc.initial_state()
    _, _, info = power.solve_subproblem(st, sc, power.feasible_init(st, sc))
    assert info.kkt_residual <= 1e-7
    assert info.gap <= 1e-8


def test_sca_monotone_feasible_random_instances():
    rng = np.random.default_rng(17)
    for trial in range(10):
        sc = random_feasible_instance(rng, cooperative=trial % 2 == 0)
        st = sc.initial_state()
        res = power.sca_loop(st, sc)
        h = np.array(res.history)
        tol = 1e-9 * sc.channel.bandwidth_hz
        assert np.all(np.diff(h) >= -tol)
        assert len(h) <= sc.sca_max_iters
        # returned iterate satisfies the true constraints
        st2 = apply_powers(st, res.powers)
        assert np.all(st2.p <= sc.p_max_w * (1.0 + 1e-12))
        assert np.all(st2.p >= 0.0)
        tab = power._build_tables(st2, sc)
        load = st2.p[None, :] * tab.gjn
        assert np.all(load <= sc.i_max_w[:, None] * (1.0 + 1e-9))
        for m in range(sc.n_interferers):
            for u in range(sc.n_primary_ues):
                for i in range(sc.n_nodes):
                    rate = power.true_primary_rate(m, u, i, tab, sc,
                                                   float(st2.p[i]),
                                                   float(st2.pj[m]))
                    assert rate >= sc.r_th_bps * (1.0 - 1e-9)
        # eta never exceeds the worst true link rate at the returned powers
        a = capacity_matrix(st2, sc)
        min_rate = min(a[i, j] for i, j in sc.edges)
        assert res.eta_bps <= min_rate + 1e-7 * max(1.0, min_rate)
        assert res.eta_bps == pytest.approx(min_rate, rel=1e-6)


def test_sca_restart_is_fixed_point(small_scenario):
    sc = small_scenario
    st = sc.initial_state()
    res = power.sca_loop(st, sc)
    res2 = power.sca_loop(st, sc, init=res.powers)
    assert abs(res2.eta_bps - res.eta_bps) <= sc.sca_eps_bps


def test_minorant_property(small_scenario):
    sc = small_scenario
    st = sc.initial_state()
    rng = np.random.default_rng(23)
    exp = power.feasible_init(st, sc)
    for i, j in sc.edges[:2]:
        v, r = power.dc_split(i, j, st, sc)
        rt = power.taylor_linearize_r(i, j, st, sc, exp.pj)
        # equality at the expansion point
        at_exp = v(exp.p[i], exp.p[j], exp.pj) - rt(exp.pj)
        true_exp = v(exp.p[i], exp.p[j], exp.pj) - r(exp.pj)
        assert at_exp == pytest.approx(true_exp, rel=1e-12)
        for _ in range(200):
            p_i, p_j = rng.uniform(0.0, 1.0, 2) * sc.p_max_w
            pj = rng.uniform(0.0, 2.0, sc.n_interferers)
            approx = v(p_i, p_j, pj) - rt(pj)
            true = v(p_i, p_j, pj) - r(pj)
            assert approx <= true + 1e-10 * max(1.0, abs(true))
