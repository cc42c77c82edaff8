"""Max-min power allocation by DC decomposition and successive convex
approximation.

Each link rate splits as a = v - r with v concave in all powers and r concave
in the interferer powers; r is replaced by its tangent at the previous
iterate, so every subproblem iterate stays feasible for the true constraints
(the approximation minorizes a).  Subproblems are solved with a log-barrier
interior-point method on bandwidth-normalized rates (all rate quantities
divided by B), then polished: each UAV power is pushed up to its structural
bound, which is optimal because every link rate is nondecreasing in it.

In non-cooperative mode the interferer powers are fixed parameters; in
cooperative mode they are variables boxed by [0, nominal].
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateDenominator, Infeasible, InfeasibleExpansion,
                     MaxIterations)

LN2 = math.log(2.0)

GAP_TOL = 1e-10          # duality-gap surrogate, normalized-rate units
NEWTON_CAP = 120
IPM_T0 = 1.0
IPM_MU = 10.0


@dataclass
class PowerVector:
    p: np.ndarray            # (N,) watts
    pj: np.ndarray           # (M,) watts

    def copy(self):
        return PowerVector(self.p.copy(), self.pj.copy())


@dataclass
class SubproblemInfo:
    kkt_residual: float
    gap: float
    newton_iters: int
    eta_ipm_bps: float


@dataclass
class ScaResult:
    powers: PowerVector
    eta_bps: float
    history: list
    info: SubproblemInfo = None
    converged: bool = True


# -- link/gain tables --------------------------------------------------------

def _entity_gains(state, scenario):
    pos = scenario.entity_positions(state)
    diff = pos[:, None, :] - pos[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(d, 1.0)
    gain = scenario.pair_coef * d ** (-scenario.pair_alpha)
    np.fill_diagonal(gain, 0.0)
    return gain


@dataclass
class _Tables:
    """Position-dependent constants of one power-allocation solve."""

    gnn: np.ndarray           # (N, N) node-node |h|^2
    gjn: np.ndarray           # (M, N) interferer-node
    gnu: np.ndarray           # (N, R) node-primary UE
    gju: np.ndarray           # (M, R) interferer-primary UE
    safety: np.ndarray        # (N, N) chi * sum_{k not in {i,j}} u(d_jk/r_int),
                              # indexed [i, j] = safety part of SIR_{i,j} denominator


def _build_tables(state, scenario):
    from .kernels import sir_matrix

    n, m = scenario.n_nodes, scenario.n_interferers
    gain = _entity_gains(state, scenario)
    _, _, _, _, swept = sir_matrix(*scenario.kernel_args(state))
    safety = scenario.safety.chi * swept
    return _Tables(
        gnn=gain[:n, :n],
        gjn=gain[n:n + m, :n],
        gnu=gain[:n, n + m:],
        gju=gain[n:n + m, n + m:],
        safety=safety,
    )


# -- DC decomposition of one link rate ---------------------------------------

def dc_split(i, j, state, scenario):
    """Evaluators (v, r) with v(p_i, p_j, pj) - r(pj) = edge_capacity.

    v is concave in (p_i, p_j, pj); r is concave in pj.  Both in bits/s.
    """
    tab = _build_tables(state, scenario)
    b = scenario.channel.bandwidth_hz
    g_ij, g_ji = tab.gnn[i, j], tab.gnn[j, i]
    gj_at_j, gj_at_i = tab.gjn[:, j], tab.gjn[:, i]
    s_ij, s_ji = tab.safety[i, j], tab.safety[j, i]

    def v(p_i, p_j, pj):
        pj = np.asarray(pj, dtype=float)
        return 0.5 * b * (
            math.log2(p_i * g_ij + float(pj @ gj_at_j) + s_ij)
            + math.log2(p_j * g_ji + float(pj @ gj_at_i) + s_ji))

    def r(pj):
        pj = np.asarray(pj, dtype=float)
        return 0.5 * b * (
            math.log2(float(pj @ gj_at_j) + s_ij)
            + math.log2(float(pj @ gj_at_i) + s_ji))

    return v, r


def taylor_linearize_r(i, j, state, scenario, pj0):
    """Tangent of the subtracted concave term r at pj0; overestimates r."""
    tab = _build_tables(state, scenario)
    b = scenario.channel.bandwidth_hz
    gj_at_j, gj_at_i = tab.gjn[:, j], tab.gjn[:, i]
    s_ij, s_ji = tab.safety[i, j], tab.safety[j, i]
    pj0 = np.asarray(pj0, dtype=float)
    u1 = float(pj0 @ gj_at_j) + s_ij
    u2 = float(pj0 @ gj_at_i) + s_ji
    r0 = 0.5 * b * (math.log2(u1) + math.log2(u2))
    grad = 0.5 * b * (gj_at_j / (LN2 * u1) + gj_at_i / (LN2 * u2))

    def rtilde(pj):
        pj = np.asarray(pj, dtype=float)
        return r0 + float(grad @ (pj - pj0))

    return rtilde


def primary_rate_terms(m, u, i, tables, scenario):
    """(g_mu, g_iu, sigma2) of the primary-rate expression for (m, u, i)."""
    return tables.gju[m, u], tables.gnu[i, u], scenario.channel.noise_w


def true_primary_rate(m, u, i, tables, scenario, p_i, pj_m):
    g_mu, g_iu, sig = primary_rate_terms(m, u, i, tables, scenario)
    return scenario.channel.bandwidth_hz * (
        math.log2(pj_m * g_mu + p_i * g_iu + sig) - math.log2(p_i * g_iu + sig))


def qos_linearize(m, u, i, state, scenario, expansion):
    """Conservative inner approximation of the primary QoS rate.

    Only the subtracted term (convex in p_i) is replaced by its tangent at
    the expansion power, so the returned rate never exceeds the true one.
    Raises InfeasibleExpansion if the true rate at the expansion point is
    already below the QoS floor.
    """
    tab = _build_tables(state, scenario)
    b = scenario.channel.bandwidth_hz
    g_mu, g_iu, sig = primary_rate_terms(m, u, i, tab, scenario)
    p_i0 = float(expansion.p[i])
    pj_m0 = float(expansion.pj[m])
    if true_primary_rate(m, u, i, tab, scenario, p_i0, pj_m0) \
            < scenario.r_th_bps - 1e-9 * max(1.0, scenario.r_th_bps):
        raise InfeasibleExpansion(
            f"QoS rate below threshold at expansion point for (m={m}, u={u}, i={i})",
            family="qos")
    c0 = p_i0 * g_iu + sig

    def rhat(p_i, pj_m):
        return b * (math.log2(pj_m * g_mu + p_i * g_iu + sig)
                    - math.log2(c0) - g_iu * (p_i - p_i0) / (LN2 * c0))

    return rhat


# -- feasible initialization --------------------------------------------------

def _qos_power_bound(scenario, tables, pj):
    """Per-node upper bounds on p implied by the true QoS constraints."""
    n = scenario.n_nodes
    bound = np.full(n, np.inf)
    r_th_n = scenario.r_th_bps / scenario.channel.bandwidth_hz
    if r_th_n <= 0.0 or scenario.n_primary_ues == 0 or scenario.n_interferers == 0:
        return bound
    growth = math.inf if r_th_n > 1000.0 else 2.0 ** r_th_n - 1.0
    for i in range(n):
        for m in range(scenario.n_interferers):
            for u in range(scenario.n_primary_ues):
                g_mu, g_iu, sig = primary_rate_terms(m, u, i, tables, scenario)
                # R >= R_th  <=>  pj_m g_mu >= (2^rth - 1)(p_i g_iu + sigma^2)
                ub = (pj[m] * g_mu / growth - sig) / g_iu
                if ub < 0.0:
                    raise Infeasible(
                        f"QoS floor unreachable even at zero power for node {i}",
                        family="qos")
                bound[i] = min(bound[i], ub)
    return bound


def _structural_bound(scenario, tables):
    """min(P_max, per-interferer cap bounds), elementwise over nodes."""
    n = scenario.n_nodes
    ub = np.full(n, scenario.p_max_w)
    for m in range(scenario.n_interferers):
        ub = np.minimum(ub, scenario.i_max_w[m] / tables.gjn[m, :])
    return ub


def qos_pj_floor(scenario, tables, p):
    """Per-interferer lower power bound implied by the true QoS floors.

    The primary rate R(m,u,i) is strictly increasing in pj_m, giving the
    closed form pj_m >= (2^(rth/B) - 1)(p_i g_iu + sigma^2) / g_mu.
    """
    m = scenario.n_interferers
    floors = np.zeros(m)
    r_th_n = scenario.r_th_bps / scenario.channel.bandwidth_hz
    if r_th_n <= 0.0 or m == 0 or scenario.n_primary_ues == 0:
        return floors
    growth = math.inf if r_th_n > 1000.0 else 2.0 ** r_th_n - 1.0
    sig = scenario.channel.noise_w
    for mm in range(m):
        worst = 0.0
        for u in range(scenario.n_primary_ues):
            for i in range(scenario.n_nodes):
                need = growth * (p[i] * tables.gnu[i, u] + sig) / tables.gju[mm, u]
                worst = max(worst, need)
        floors[mm] = worst
    return floors


def min_true_link_rate(scenario, tables, p, pj):
    """Smallest true (non-linearized) rate over the max-min links."""
    b = scenario.channel.bandwidth_hz
    pj = np.asarray(pj, dtype=float)
    worst = math.inf
    for i, j in scenario.edges:
        rate = 0.0
        for a, c in ((i, j), (j, i)):
            den = float(pj @ tables.gjn[:, c]) + tables.safety[a, c]
            if den <= 0.0:
                raise DegenerateDenominator(
                    f"SIR denominator is zero on edge ({a}, {c})")
            rate += 0.5 * b * math.log2(1.0 + p[a] * tables.gnn[a, c] / den)
        worst = min(worst, rate)
    return worst


def feasible_init(state, scenario, pj=None):
    """Strictly feasible starting powers per the documented construction.

    ``pj`` defaults to the configured interferer powers; passing the current
    ones warm-starts the SCA expansion across mission iterations.
    """
    tab = _build_tables(state, scenario)
    pj = scenario.pj_nominal.copy() if pj is None else np.asarray(pj, dtype=float)
    p = 0.9 * np.minimum(_structural_bound(scenario, tab),
                         _qos_power_bound(scenario, tab, pj))
    if np.any(p <= 0.0):
        raise Infeasible("no strictly positive feasible power", family="qos")
    return PowerVector(p=p, pj=pj)


# -- convex subproblem ---------------------------------------------------------

class _Subproblem:
    """One SCA subproblem in barrier form.

    Constraint values are g(z) = A z + b - Gamma @ (ln(W z + d) / ln 2) <= 0
    with Gamma >= 0, so each g is convex and the barrier Hessian is PSD plus
    the positive-definite box terms.  Rates normalized by the bandwidth.
    """

    def __init__(self, state, scenario, expansion):
        self.scenario = scenario
        self.tab = _build_tables(state, scenario)
        self.coop = scenario.cooperative and scenario.n_interferers > 0
        n = scenario.n_nodes
        m = scenario.n_interferers
        self.n, self.m = n, m
        self.nv = n + (m if self.coop else 0) + 1
        self.i_eta = self.nv - 1
        self.exp_p = np.asarray(expansion.p, dtype=float)
        self.exp_pj = np.asarray(expansion.pj, dtype=float)
        self.links = [tuple(e) for e in scenario.edges]
        self._assemble()

    def _pj_cols(self):
        return slice(self.n, self.n + self.m)

    def _assemble(self):
        sc = self.scenario
        tab = self.tab
        n, m, nv = self.n, self.m, self.nv
        pj0 = self.exp_pj
        r_th_n = sc.r_th_bps / sc.channel.bandwidth_hz
        qos_on = (r_th_n > 0.0 and m > 0 and sc.n_primary_ues > 0)

        terms_w, terms_d = [], []

        def add_term(row, const):
            terms_w.append(row)
            terms_d.append(const)
            return len(terms_d) - 1

        rows_a, rows_b, rows_g = [], [], []

        def add_con(a_row, b_val, gamma_pairs=()):
            rows_a.append(a_row)
            rows_b.append(b_val)
            rows_g.append(tuple(gamma_pairs))

        # max-min link constraints: eta - v + rtilde <= 0
        for (i, j) in self.links:
            t_ids = []
            for a, b in ((i, j), (j, i)):
                row = np.zeros(nv)
                row[a] = tab.gnn[a, b]
                const = tab.safety[a, b]
                if self.coop:
                    row[self._pj_cols()] = tab.gjn[:, b]
                else:
                    const += float(pj0 @ tab.gjn[:, b])
                t_ids.append(add_term(row, const))
            u1 = float(pj0 @ tab.gjn[:, j]) + tab.safety[i, j]
            u2 = float(pj0 @ tab.gjn[:, i]) + tab.safety[j, i]
            r0 = 0.5 * (math.log(u1) + math.log(u2)) / LN2
            a_row = np.zeros(nv)
            a_row[self.i_eta] = 1.0
            b_val = r0
            if self.coop:
                grad = 0.5 * (tab.gjn[:, j] / (LN2 * u1) + tab.gjn[:, i] / (LN2 * u2))
                a_row[self._pj_cols()] += grad
                b_val -= float(grad @ pj0)
            add_con(a_row, b_val, [(t_ids[0], 0.5), (t_ids[1], 0.5)])

        # eta >= 0
        row = np.zeros(nv)
        row[self.i_eta] = -1.0
        add_con(row, 0.0)

        # interference caps p_i |h_im|^2 <= I_max
        for mm in range(m):
            for i in range(n):
                row = np.zeros(nv)
                row[i] = tab.gjn[mm, i]
                add_con(row, -sc.i_max_w[mm])

        # power boxes
        for i in range(n):
            row = np.zeros(nv)
            row[i] = 1.0
            add_con(row, -sc.p_max_w)
            row = np.zeros(nv)
            row[i] = -1.0
            add_con(row, 0.0)

        # linearized QoS floors
        if qos_on:
            sig = sc.channel.noise_w
            for mm in range(m):
                for u in range(sc.n_primary_ues):
                    for i in range(n):
                        g_mu, g_iu = tab.gju[mm, u], tab.gnu[i, u]
                        c0 = self.exp_p[i] * g_iu + sig
                        row = np.zeros(nv)
                        row[i] = g_iu
                        const = sig
                        if self.coop:
                            row[self.n + mm] = g_mu
                        else:
                            const += pj0[mm] * g_mu
                        t_id = add_term(row, const)
                        a_row = np.zeros(nv)
                        a_row[i] = g_iu / (LN2 * c0)
                        b_val = (r_th_n + math.log(c0) / LN2
                                 - g_iu * self.exp_p[i] / (LN2 * c0))
                        add_con(a_row, b_val, [(t_id, 1.0)])

        # interferer boxes (cooperative only)
        if self.coop:
            for mm in range(m):
                row = np.zeros(nv)
                row[self.n + mm] = 1.0
                add_con(row, -sc.pj_nominal[mm])
                row = np.zeros(nv)
                row[self.n + mm] = -1.0
                add_con(row, 0.0)

        self.W = np.array(terms_w)
        self.d = np.array(terms_d)
        self.A = np.array(rows_a)
        self.b = np.array(rows_b)
        self.nc = len(rows_b)
        self.Gamma = np.zeros((self.nc, len(terms_d)))
        for c, pairs in enumerate(rows_g):
            for t_id, coeff in pairs:
                self.Gamma[c, t_id] = coeff
        self.cvec = np.zeros(nv)
        self.cvec[self.i_eta] = -1.0

    # -- evaluations ------------------------------------------------------

    def _uslack(self, z):
        u = self.W @ z + self.d
        if np.any(u <= 0.0):
            return u, None
        g = self.A @ z + self.b - self.Gamma @ (np.log(u) / LN2)
        return u, -g

    def link_values(self, z):
        """Normalized linearized rates a~ of every max-min link at z."""
        u = self.W @ z + self.d
        g = self.A @ z + self.b - self.Gamma @ (np.log(u) / LN2)
        n_links = len(self.links)
        return z[self.i_eta] - g[:n_links]

    def phi(self, z, t):
        u, s = self._uslack(z)
        if s is None or np.any(s <= 0.0):
            return np.inf, None, None
        val = t * float(self.cvec @ z) - float(np.log(s).sum())
        return val, u, s

    def grad_hess(self, z, t, u, s):
        jac = self.A - (self.Gamma / (LN2 * u)[None, :]) @ self.W
        grad = t * self.cvec + jac.T @ (1.0 / s)
        hess = jac.T @ (jac / (s * s)[:, None])
        wdiag = (self.Gamma.T @ (1.0 / s)) / (LN2 * u * u)
        hess += self.W.T @ (self.W * wdiag[:, None])
        return grad, hess, jac

    def kkt_residual(self, z):
        """Relative stationarity residual with least-squares multipliers.

        Certifies the KKT point: finds lam >= 0 minimizing |c + J^T lam| and
        reports the residual per-coordinate relative to the terms that must
        cancel.  (Central-path multipliers 1/(t s) are too noisy at tight
        gaps because active slacks are computed by cancellation.)
        """
        from scipy.optimize import nnls

        u, s = self._uslack(z)
        jac = self.A - (self.Gamma / (LN2 * u)[None, :]) @ self.W
        lam, _ = nnls(jac.T, -self.cvec)
        resid = np.abs(self.cvec + jac.T @ lam)
        scale = np.maximum(np.abs(self.cvec) + np.abs(jac).T @ lam, 1.0)
        return float((resid / scale).max())

    def newton(self, z, t):
        """Center at barrier parameter t by damped/full Newton steps.

        Inside the quadratic-convergence region (Newton decrement < 0.25)
        the full step is taken without a line search: at large t the barrier
        value's rounding noise exceeds the per-step decrease, which would
        stall an Armijo test.
        """
        iters = 0
        prev_decrement = math.inf
        for _ in range(NEWTON_CAP):
            val, u, s = self.phi(z, t)
            grad, hess, _ = self.grad_hess(z, t, u, s)
            # Jacobi scaling: slack magnitudes differ by many decades
            scale = 1.0 / np.sqrt(np.diag(hess))
            hs = hess * np.outer(scale, scale)
            try:
                step = scale * np.linalg.solve(hs, -grad * scale)
            except np.linalg.LinAlgError:
                step = scale * np.linalg.solve(
                    hs + 1e-12 * np.eye(self.nv), -grad * scale)
            decrement = -float(grad @ step)
            iters += 1
            # decrement/2 bounds the centering suboptimality; at the rounding
            # floor it stops halving, which is the second exit
            if decrement <= 1e-11 or \
                    (decrement <= 1e-3 and decrement > 0.5 * prev_decrement):
                break
            prev_decrement = decrement
            if decrement <= 0.0625:  # lambda_newton <= 0.25
                cand = z + step
                cval, _, cs = self.phi(cand, t)
                if cs is not None:
                    z = cand
                    continue
            alpha = 1.0
            while alpha > 1e-14:
                cand = z + alpha * step
                cval, _, _ = self.phi(cand, t)
                if cval <= val + 0.25 * alpha * float(grad @ step):
                    z = cand
                    break
                alpha *= 0.5
            else:
                break
        return z, iters

    def start_point(self, init):
        """Strictly interior start: pull boundary powers slightly inward."""
        sc = self.scenario
        z = np.zeros(self.nv)
        ub = np.minimum(_structural_bound(self.scenario, self.tab), sc.p_max_w)
        z[:self.n] = np.minimum(init.p, ub) * (1.0 - 1e-7)
        z[:self.n] = np.maximum(z[:self.n], 1e-12 * sc.p_max_w)
        if self.coop:
            z[self._pj_cols()] = np.clip(
                init.pj, 1e-9 * sc.pj_nominal, (1.0 - 1e-9) * sc.pj_nominal)
        low = float(self.link_values(z).min())
        if low <= 0.0:
            raise Infeasible("starting powers give a nonpositive link rate",
                             family="link")
        z[self.i_eta] = 0.5 * low
        _, s = self._uslack(z)
        if s is None or np.any(s <= 0.0):
            raise Infeasible("could not construct a strictly feasible start",
                             family="init")
        return z

    def solve(self, init):
        z = self.start_point(init)
        t = IPM_T0
        total = 0
        while True:
            z, iters = self.newton(z, t)
            total += iters
            if self.nc / t <= GAP_TOL:
                break
            t *= IPM_MU
        return z, SubproblemInfo(kkt_residual=self.kkt_residual(z),
                                 gap=self.nc / t,
                                 newton_iters=total,
                                 eta_ipm_bps=z[self.i_eta]
                                 * self.scenario.channel.bandwidth_hz)

    # -- monotone polish ----------------------------------------------------

    def _qos_rhat_bound(self, i, pj, anchor):
        """Largest p_i keeping every linearized QoS row of node i feasible.

        ``anchor`` is a power known feasible for those rows (the IPM point).
        """
        sc = self.scenario
        r_th_n = sc.r_th_bps / sc.channel.bandwidth_hz
        if r_th_n <= 0.0 or self.m == 0 or sc.n_primary_ues == 0:
            return np.inf
        sig = sc.channel.noise_w
        bound = np.inf
        for mm in range(self.m):
            for u in range(sc.n_primary_ues):
                g_mu, g_iu = self.tab.gju[mm, u], self.tab.gnu[i, u]
                c0 = self.exp_p[i] * g_iu + sig

                def rhat_n(p_i):
                    return (math.log(pj[mm] * g_mu + p_i * g_iu + sig) / LN2
                            - math.log(c0) / LN2
                            - g_iu * (p_i - self.exp_p[i]) / (LN2 * c0))

                hi = sc.p_max_w
                if rhat_n(hi) >= r_th_n:
                    continue
                lo = anchor
                if rhat_n(lo) < r_th_n:
                    bound = min(bound, lo)
                    continue
                for _ in range(100):
                    mid = 0.5 * (lo + hi)
                    if rhat_n(mid) >= r_th_n:
                        lo = mid
                    else:
                        hi = mid
                bound = min(bound, lo)
        return bound

    def polish(self, z):
        """Push each UAV power to its structural bound; rates only improve."""
        pj = z[self._pj_cols()].copy() if self.coop else self.exp_pj.copy()
        p = z[:self.n].copy()
        ub = _structural_bound(self.scenario, self.tab)
        for i in range(self.n):
            p[i] = max(p[i], min(ub[i], self._qos_rhat_bound(i, pj, p[i])))
        z2 = z.copy()
        z2[:self.n] = p
        eta_n = float(self.link_values(z2).min())
        z2[self.i_eta] = eta_n
        return PowerVector(p=p, pj=pj), eta_n * self.scenario.channel.bandwidth_hz, z2


def solve_subproblem(state, scenario, expansion):
    """Solve one convexified max-min subproblem around the expansion point.

    Returns (PowerVector, eta_bps, SubproblemInfo).
    """
    sub = _Subproblem(state, scenario, expansion)
    z, info = sub.solve(expansion)
    powers, eta_bps, _ = sub.polish(z)
    return powers, eta_bps, info


def sca_loop(state, scenario, init=None, eps=None):
    """DC-based SCA iteration until |eta[t] - eta[t-1]| <= eps.

    Every iterate is feasible for the true constraints because the
    linearized rates minorize the true ones.  In cooperative mode, each
    expansion update additionally slides the interferer powers down to their
    closed-form QoS floor: every link rate strictly increases when any
    interferer power decreases, so this is a true-objective ascent step that
    spares the tangent updates a long geometric crawl.

    eta[t] is the smallest true link rate attained by iterate t; the
    sequence is nondecreasing by the minorant/tangency argument.
    """
    if init is None:
        init = feasible_init(state, scenario)
    if eps is None:
        eps = scenario.sca_eps_bps
    tables = _build_tables(state, scenario)
    coop = scenario.cooperative and scenario.n_interferers > 0
    expansion = init
    history = []
    info = None
    for _ in range(scenario.sca_max_iters):
        powers, _, info = solve_subproblem(state, scenario, expansion)
        if coop:
            floor = qos_pj_floor(scenario, tables, powers.p)
            powers.pj = np.minimum(powers.pj, np.maximum(floor, 0.0))
        eta = min_true_link_rate(scenario, tables, powers.p, powers.pj)
        history.append(eta)
        expansion = powers
        if len(history) >= 2 and abs(history[-1] - history[-2]) <= eps:
            return ScaResult(powers=powers, eta_bps=eta, history=history,
                             info=info, converged=True)
    raise MaxIterations(
        f"SCA did not converge within {scenario.sca_max_iters} iterations "
        f"(last eta {history[-1]:.6g})")
