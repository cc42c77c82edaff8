"""Backend selection for the hot kernels.

The numba-compiled kernels are the default.  Setting the environment variable
``UAVFLOW_DISABLE_NUMBA=1`` (before import) selects the pure-numpy fallback;
it is also selected automatically when numba is unavailable.  Both backends
implement the same signatures and agree to floating-point rounding noise
(see tests/test_kernels.py and benchmarks/bench_kernels.py).
"""

import os

from . import _kernels_np

_FLAG = os.environ.get("UAVFLOW_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG in {"1", "true", "yes", "on"}

if _DISABLED:
    _impl = _kernels_np
else:
    try:
        from . import _kernels_nb as _impl
    except ImportError:
        _impl = _kernels_np

BACKEND = "numpy" if _impl is _kernels_np else "numba"

sir_matrix = _impl.sir_matrix
capacity_gradients = _impl.capacity_gradients
smoothed_step = _kernels_np.smoothed_step
smoothed_step_deriv = _kernels_np.smoothed_step_deriv


def warmup():
    """Trigger JIT compilation of the selected backend on a tiny instance."""
    import numpy as np

    node_pos = np.array([[0.0, 0.0, 1.0], [10.0, 0.0, 1.0], [20.0, 0.0, 1.0]])
    p = np.full(3, 0.1)
    jam_pos = np.array([[5.0, 5.0, 1.0]])
    pj = np.array([1.0])
    ones = np.ones((3, 3))
    coef_nn = ones * 1e-4
    alpha_nn = ones * 2.05
    coef_jn = np.ones((1, 3)) * 1e-4
    alpha_jn = np.ones((1, 3)) * 2.05
    edges = np.array([[0, 1], [1, 2]], dtype=np.int64)
    coeffs = np.ones(2)
    sir_matrix(node_pos, p, jam_pos, pj, coef_nn, alpha_nn, coef_jn, alpha_jn,
               1.0, 1.0, 10.0, 1e-3, 5.0)
    capacity_gradients(node_pos, p, jam_pos, pj, coef_nn, alpha_nn, coef_jn,
                       alpha_jn, 1.0, 1.0, 10.0, 1e-3, 5.0, edges, coeffs, 1e4)
