#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the SIR-matrix and gradient kernels over a grid of network sizes and
prints per-call timings for both backends.  The numbers motivate the default
backend choice; set UAVFLOW_DISABLE_NUMBA=1 to force the numpy path at import
time in the package itself.
"""

import time

import numpy as np

from uavflow import _kernels_np as knp
from uavflow.scenario import build_scenario


def instance(n_relays, n_jam, topology):
    rng = np.random.default_rng(0)
    jams = [{"pos": [float(rng.uniform(20, 180)),
                     float(rng.uniform(-60, 60)), 20.0]}
            for _ in range(n_jam)]
    sc = build_scenario({"relays": {"count": n_relays}, "topology": topology,
                         "interferers": jams})
    st = sc.initial_state()
    st.node_pos[1:-1] += rng.normal(0, 5, st.node_pos[1:-1].shape)
    coeffs = rng.uniform(0.1, 1.0, sc.edges.shape[0])
    return sc, st, coeffs


def timeit(fn, reps):
    fn()  # warm (JIT compile / cache touch)
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def main():
    try:
        from uavflow import _kernels_nb as knb
    except ImportError:
        knb = None
        print("numba unavailable; benchmarking the numpy path only")

    print(f"{'case':<24}{'kernel':<12}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for n_relays, n_jam, topology in [(4, 1, "line"), (8, 1, "line"),
                                      (8, 2, "mesh"), (12, 2, "mesh")]:
        sc, st, coeffs = instance(n_relays, n_jam, topology)
        args = sc.kernel_args(st)
        bw = sc.channel.bandwidth_hz
        label = f"{n_relays}relays/{n_jam}jam/{topology}"
        cases = [("sir_matrix",
                  lambda k: (lambda: k.sir_matrix(*args))),
                 ("gradients",
                  lambda k: (lambda: k.capacity_gradients(*args, sc.edges,
                                                          coeffs, bw)))]
        for name, make in cases:
            t_np = timeit(make(knp), 200)
            if knb is not None:
                t_nb = timeit(make(knb), 2000)
                print(f"{label:<24}{name:<12}{t_np * 1e6:>10.1f}us"
                      f"{t_nb * 1e6:>10.1f}us{t_np / t_nb:>9.1f}x")
            else:
                print(f"{label:<24}{name:<12}{t_np * 1e6:>10.1f}us"
                      f"{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
