"""Vectorized numpy implementations of the hot per-iteration kernels.

These are the reference implementations; `_kernels_nb` carries numba-compiled
twins with identical signatures.  Selection happens in `kernels`.

Array conventions (shared by both backends):
  node_pos (N,3), p (N,)        UAV-network positions / transmit powers [W]
  jam_pos (M,3), pj (M,)        interferer positions / powers [W]
  coef_nn (N,N), alpha_nn (N,N) |g|^2 * 10^(-eta/10) and path-loss exponent
                                per node pair; coef_jn/alpha_jn likewise for
                                interferer->node links
  chi, zeta, kappa, y0, r_int   safety-term parameters
"""

import numpy as np

LN2 = float(np.log(2.0))


def smoothed_step(y, zeta, kappa, y0):
    """Logistic safety penalty, written in the overflow-safe sigmoid form."""
    t = -kappa * np.asarray(y, dtype=float) - np.log(y0)
    with np.errstate(over="ignore"):
        return zeta / (1.0 + np.exp(-t))


def smoothed_step_deriv(y, zeta, kappa, y0):
    u = smoothed_step(y, zeta, kappa, y0)
    return -kappa * u * (1.0 - u / zeta)


def safety_exclusion_sums(ustep):
    """swept[i, j] = sum_{k not in {i, j}} ustep[j, k], summed directly.

    Subtracting ustep[j, i] from the row sum would cancel catastrophically
    when that entry dominates the row (far-apart nodes underflow to 0).
    """
    n = ustep.shape[0]
    tens = np.broadcast_to(ustep[None, :, :], (n, n, n)).copy()
    idx = np.arange(n)
    tens[idx, :, idx] = 0.0
    return tens.sum(axis=2)


def sir_matrix(node_pos, p, jam_pos, pj, coef_nn, alpha_nn, coef_jn, alpha_jn,
               chi, zeta, kappa, y0, r_int):
    """All pairwise modified SIR values.

    Returns (sir, gain_nn, gain_jn, denom, swept) where sir[i, j] is the SIR
    of the i->j link, denom[i, j] its denominator, gain_* the |h|^2 link
    gains, and swept[i, j] the safety sum over third parties at receiver j.
    Diagonals of sir/gain_nn are zero.
    """
    n = node_pos.shape[0]
    diff = node_pos[:, None, :] - node_pos[None, :, :]
    d_nn = np.sqrt(np.sum(diff * diff, axis=2))
    d_safe = d_nn + np.eye(n)
    gain_nn = coef_nn * d_safe ** (-alpha_nn)
    np.fill_diagonal(gain_nn, 0.0)

    if jam_pos.shape[0]:
        djn = jam_pos[:, None, :] - node_pos[None, :, :]
        d_jn = np.sqrt(np.sum(djn * djn, axis=2))
        gain_jn = coef_jn * d_jn ** (-alpha_jn)
        interf = pj @ gain_jn
    else:
        gain_jn = np.zeros((0, n))
        interf = np.zeros(n)

    ustep = smoothed_step(d_nn / r_int, zeta, kappa, y0)
    np.fill_diagonal(ustep, 0.0)
    swept = safety_exclusion_sums(ustep)

    denom = interf[None, :] + chi * swept
    with np.errstate(divide="ignore", invalid="ignore"):
        sir = p[:, None] * gain_nn / denom
    np.fill_diagonal(sir, 0.0)
    return sir, gain_nn, gain_jn, denom, swept


def _direction_grads(a, b, node_pos, p, jam_pos, pj, alpha_nn, alpha_jn,
                     gain_nn, gain_jn, denom, d_nn, d_jn, uprime,
                     chi, r_int):
    """Partials of SIR_{a,b} w.r.t. every node and jammer coordinate.

    Returns (sir_ab, dnode (N,3), djam (M,3)).
    """
    n = node_pos.shape[0]
    m = jam_pos.shape[0]
    den = denom[a, b]
    sir_ab = p[a] * gain_nn[a, b] / den
    dnode = np.zeros((n, 3))

    # numerator: only the endpoints move the a->b gain
    dg = -alpha_nn[a, b] * gain_nn[a, b] \
        * (node_pos[a] - node_pos[b]) / d_nn[a, b] ** 2
    dnode[a] += p[a] * dg / den
    dnode[b] -= p[a] * dg / den

    # denominator: interference and safety sums at the receiver b
    dden_b = np.zeros(3)
    if m:
        e_mb = (node_pos[b] - jam_pos) / (d_jn[:, b] ** 2)[:, None]
        dden_b += ((pj * -alpha_jn[:, b] * gain_jn[:, b])[:, None] * e_mb).sum(axis=0)
    others = np.ones(n, dtype=bool)
    others[a] = others[b] = False
    if others.any():
        e_bk = (node_pos[b] - node_pos[others]) / d_nn[b, others][:, None]
        up = uprime[b, others][:, None]
        dden_b += (chi / r_int) * (up * e_bk).sum(axis=0)
        dnode[others] -= sir_ab / den * (chi / r_int) * up * -e_bk
    dnode[b] -= sir_ab / den * dden_b

    djam = np.zeros((m, 3))
    if m:
        e_jb = (jam_pos - node_pos[b]) / (d_jn[:, b] ** 2)[:, None]
        dden_j = (pj * -alpha_jn[:, b] * gain_jn[:, b])[:, None] * e_jb
        djam = -sir_ab / den * dden_j
    return sir_ab, dnode, djam


def capacity_gradients(node_pos, p, jam_pos, pj, coef_nn, alpha_nn,
                       coef_jn, alpha_jn, chi, zeta, kappa, y0, r_int,
                       edges, coeffs, bandwidth):
    """Weighted sums of edge-capacity partials over the topology edges.

    For each edge e = (p_e, q_e) with weight coeffs[e], accumulates
    coeffs[e] * d a_{p_e,q_e} / d(coordinate) for every node coordinate and
    every interferer coordinate.  Returns (grad_nodes (N,3), grad_jam (M,3)).
    """
    n = node_pos.shape[0]
    m = jam_pos.shape[0]
    diff = node_pos[:, None, :] - node_pos[None, :, :]
    d_nn = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(d_nn, 1.0)
    if m:
        djn = jam_pos[:, None, :] - node_pos[None, :, :]
        d_jn = np.sqrt(np.sum(djn * djn, axis=2))
    else:
        d_jn = np.zeros((0, n))
    sir, gain_nn, gain_jn, denom, _ = sir_matrix(
        node_pos, p, jam_pos, pj, coef_nn, alpha_nn, coef_jn, alpha_jn,
        chi, zeta, kappa, y0, r_int)
    uprime = smoothed_step_deriv(d_nn / r_int, zeta, kappa, y0)
    np.fill_diagonal(uprime, 0.0)

    grad_nodes = np.zeros((n, 3))
    grad_jam = np.zeros((m, 3))
    scale = bandwidth / (2.0 * LN2)
    for e in range(edges.shape[0]):
        pe, qe = edges[e, 0], edges[e, 1]
        c = coeffs[e] * scale
        for a, b in ((pe, qe), (qe, pe)):
            sir_ab, dnode, djam = _direction_grads(
                a, b, node_pos, p, jam_pos, pj, alpha_nn, alpha_jn,
                gain_nn, gain_jn, denom, d_nn, d_jn, uprime, chi, r_int)
            w = c / (1.0 + sir_ab)
            grad_nodes += w * dnode
            if m:
                grad_jam += w * djam
    return grad_nodes, grad_jam
