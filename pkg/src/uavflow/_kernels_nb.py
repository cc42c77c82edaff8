"""Numba-compiled twins of the kernels in `_kernels_np`.

Same signatures and the same arithmetic, written as fused loops.  fastmath is
off so both backends agree to rounding noise.
"""

import math

import numpy as np
from numba import njit

LN2 = math.log(2.0)


@njit(cache=True)
def _ustep(y, zeta, kappa, y0):
    t = -kappa * y - math.log(y0)
    if t < -700.0:
        return 0.0
    return zeta / (1.0 + math.exp(-t))


@njit(cache=True)
def _ustep_deriv(y, zeta, kappa, y0):
    u = _ustep(y, zeta, kappa, y0)
    return -kappa * u * (1.0 - u / zeta)


@njit(cache=True)
def sir_matrix(node_pos, p, jam_pos, pj, coef_nn, alpha_nn, coef_jn, alpha_jn,
               chi, zeta, kappa, y0, r_int):
    n = node_pos.shape[0]
    m = jam_pos.shape[0]
    gain_nn = np.zeros((n, n))
    ustep = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dx = node_pos[i, 0] - node_pos[j, 0]
            dy = node_pos[i, 1] - node_pos[j, 1]
            dz = node_pos[i, 2] - node_pos[j, 2]
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            g = coef_nn[i, j] * d ** (-alpha_nn[i, j])
            gain_nn[i, j] = g
            gain_nn[j, i] = coef_nn[j, i] * d ** (-alpha_nn[j, i])
            u = _ustep(d / r_int, zeta, kappa, y0)
            ustep[i, j] = u
            ustep[j, i] = u

    gain_jn = np.zeros((m, n))
    interf = np.zeros(n)
    for mm in range(m):
        for j in range(n):
            dx = jam_pos[mm, 0] - node_pos[j, 0]
            dy = jam_pos[mm, 1] - node_pos[j, 1]
            dz = jam_pos[mm, 2] - node_pos[j, 2]
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            gain_jn[mm, j] = coef_jn[mm, j] * d ** (-alpha_jn[mm, j])
            interf[j] += pj[mm] * gain_jn[mm, j]

    # safety exclusion sums, added term by term (no cancellation)
    swept = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(n):
                if k != i:
                    s += ustep[j, k]
            swept[i, j] = s

    sir = np.zeros((n, n))
    denom = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            den = interf[j] + chi * swept[i, j]
            denom[i, j] = den
            if i != j:
                if den > 0.0:
                    sir[i, j] = p[i] * gain_nn[i, j] / den
                else:
                    sir[i, j] = np.inf
    return sir, gain_nn, gain_jn, denom, swept


@njit(cache=True)
def capacity_gradients(node_pos, p, jam_pos, pj, coef_nn, alpha_nn,
                       coef_jn, alpha_jn, chi, zeta, kappa, y0, r_int,
                       edges, coeffs, bandwidth):
    n = node_pos.shape[0]
    m = jam_pos.shape[0]
    sir, gain_nn, gain_jn, denom, ustep = sir_matrix(
        node_pos, p, jam_pos, pj, coef_nn, alpha_nn, coef_jn, alpha_jn,
        chi, zeta, kappa, y0, r_int)

    d_nn = np.ones((n, n))
    uprime = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dx = node_pos[i, 0] - node_pos[j, 0]
            dy = node_pos[i, 1] - node_pos[j, 1]
            dz = node_pos[i, 2] - node_pos[j, 2]
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            d_nn[i, j] = d
            uprime[i, j] = _ustep_deriv(d / r_int, zeta, kappa, y0)
    d_jn = np.zeros((m, n))
    for mm in range(m):
        for j in range(n):
            dx = jam_pos[mm, 0] - node_pos[j, 0]
            dy = jam_pos[mm, 1] - node_pos[j, 1]
            dz = jam_pos[mm, 2] - node_pos[j, 2]
            d_jn[mm, j] = math.sqrt(dx * dx + dy * dy + dz * dz)

    grad_nodes = np.zeros((n, 3))
    grad_jam = np.zeros((m, 3))
    scale = bandwidth / (2.0 * LN2)
    for e in range(edges.shape[0]):
        pe = edges[e, 0]
        qe = edges[e, 1]
        c = coeffs[e] * scale
        for direction in range(2):
            if direction == 0:
                a, b = pe, qe
            else:
                a, b = qe, pe
            den = denom[a, b]
            sir_ab = sir[a, b]
            w = c / (1.0 + sir_ab)
            d2 = d_nn[a, b] * d_nn[a, b]
            for ax in range(3):
                # endpoint numerator term
                dg = -alpha_nn[a, b] * gain_nn[a, b] \
                    * (node_pos[a, ax] - node_pos[b, ax]) / d2
                grad_nodes[a, ax] += w * p[a] * dg / den
                grad_nodes[b, ax] -= w * p[a] * dg / den
                # receiver-side denominator terms
                dden_b = 0.0
                for mm in range(m):
                    e_mb = (node_pos[b, ax] - jam_pos[mm, ax]) / (d_jn[mm, b] * d_jn[mm, b])
                    dden_b += pj[mm] * -alpha_jn[mm, b] * gain_jn[mm, b] * e_mb
                    e_jb = -e_mb
                    grad_jam[mm, ax] -= w * sir_ab / den \
                        * pj[mm] * -alpha_jn[mm, b] * gain_jn[mm, b] * e_jb
                for k in range(n):
                    if k == a or k == b:
                        continue
                    e_bk = (node_pos[b, ax] - node_pos[k, ax]) / d_nn[b, k]
                    dden_b += (chi / r_int) * uprime[b, k] * e_bk
                    grad_nodes[k, ax] -= w * sir_ab / den \
                        * (chi / r_int) * uprime[b, k] * -e_bk
                grad_nodes[b, ax] -= w * sir_ab / den * dden_b
    return grad_nodes, grad_jam
