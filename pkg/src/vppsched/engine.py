"""Compiled numerical kernels for the scheduling pipeline.

Everything in this module is numba-jitted and operates on plain arrays.
The readable, contract-level API lives in :mod:`vppsched.network`,
:mod:`vppsched.der` and :mod:`vppsched.dispatch`; those modules either
delegate to these kernels (power flow) or are cross-checked against them
in the test suite (fleet simulation).

The power-flow solver is a conventional polar Newton-Raphson.  The linear
step exploits the radial topology: the Jacobian of a tree network only
couples adjacent buses, so the correction is obtained by eliminating 2x2
(theta, V) blocks from the leaves towards the slack bus in O(N) instead of
a dense O(N^3) factorization.  The iterates are identical to a dense NR.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# pf_solve status codes
PF_OK = 0
PF_NO_CONVERGENCE = 1
PF_SINGULAR = 2


@njit(cache=True)
def pf_solve(diag_g, diag_b, adj_ptr, adj_idx, adj_g, adj_b,
             parent, elim_order, slack,
             p_spec, q_spec, tol, max_iter, vm, va):
    """Newton-Raphson power flow on a radial network.

    p_spec/q_spec are per-unit net injections (generation positive) for every
    bus; the slack entries are ignored.  vm/va hold the initial voltage guess
    and are updated in place.  Returns (status, iterations, max_mismatch,
    p_calc, q_calc) where p_calc/q_calc are the injections at the final
    voltages (slack included).
    """
    n = diag_g.shape[0]
    p_calc = np.zeros(n)
    q_calc = np.zeros(n)

    # per-bus 2x2 diagonal blocks and the blocks coupling each bus to its
    # parent in the BFS tree (row-to-parent and parent-row)
    a_diag = np.zeros((n, 2, 2))
    a_up = np.zeros((n, 2, 2))     # rows of bus i, columns of parent(i)
    a_dn = np.zeros((n, 2, 2))     # rows of parent(i), columns of bus i
    f_inv = np.zeros((n, 2, 2))    # inverse of eliminated diagonal block
    u_blk = np.zeros((n, 2, 2))    # f_inv @ a_up, for back-substitution
    rhs = np.zeros((n, 2))
    dx = np.zeros((n, 2))

    status = PF_NO_CONVERGENCE
    iters = 0
    max_mis = 0.0

    for it in range(max_iter + 1):
        # injections at current voltages
        for i in range(n):
            pi = vm[i] * vm[i] * diag_g[i]
            qi = -vm[i] * vm[i] * diag_b[i]
            for e in range(adj_ptr[i], adj_ptr[i + 1]):
                j = adj_idx[e]
                th = va[i] - va[j]
                c = np.cos(th)
                s = np.sin(th)
                vv = vm[i] * vm[j]
                pi += vv * (adj_g[e] * c + adj_b[e] * s)
                qi += vv * (adj_g[e] * s - adj_b[e] * c)
            p_calc[i] = pi
            q_calc[i] = qi

        max_mis = 0.0
        for i in range(n):
            if i == slack:
                rhs[i, 0] = 0.0
                rhs[i, 1] = 0.0
                continue
            dp = p_spec[i] - p_calc[i]
            dq = q_spec[i] - q_calc[i]
            rhs[i, 0] = dp
            rhs[i, 1] = dq
            if abs(dp) > max_mis:
                max_mis = abs(dp)
            if abs(dq) > max_mis:
                max_mis = abs(dq)

        if max_mis < tol:
            status = PF_OK
            iters = it
            break
        if it == max_iter:
            break

        # Jacobian blocks (polar form)
        for i in range(n):
            if i == slack:
                continue
            a_diag[i, 0, 0] = -q_calc[i] - diag_b[i] * vm[i] * vm[i]
            a_diag[i, 0, 1] = p_calc[i] / vm[i] + diag_g[i] * vm[i]
            a_diag[i, 1, 0] = p_calc[i] - diag_g[i] * vm[i] * vm[i]
            a_diag[i, 1, 1] = q_calc[i] / vm[i] - diag_b[i] * vm[i]
            p = parent[i]
            # locate the admittance entry towards the parent
            ge = 0.0
            be = 0.0
            for e in range(adj_ptr[i], adj_ptr[i + 1]):
                if adj_idx[e] == p:
                    ge = adj_g[e]
                    be = adj_b[e]
                    break
            # block with rows at i, columns at p
            th = va[i] - va[p]
            c = np.cos(th)
            s = np.sin(th)
            h = vm[i] * vm[p] * (ge * s - be * c)
            nn = vm[i] * (ge * c + be * s)
            a_up[i, 0, 0] = h
            a_up[i, 0, 1] = nn
            a_up[i, 1, 0] = -vm[p] * nn
            a_up[i, 1, 1] = h / vm[p]
            # block with rows at p, columns at i (theta/V of bus i)
            th = va[p] - va[i]
            c = np.cos(th)
            s = np.sin(th)
            h = vm[p] * vm[i] * (ge * s - be * c)
            nn = vm[p] * (ge * c + be * s)
            a_dn[i, 0, 0] = h
            a_dn[i, 0, 1] = nn
            a_dn[i, 1, 0] = -vm[i] * nn
            a_dn[i, 1, 1] = h / vm[i]

        # eliminate leaves first
        singular = False
        for k in range(elim_order.shape[0]):
            i = elim_order[k]
            det = (a_diag[i, 0, 0] * a_diag[i, 1, 1]
                   - a_diag[i, 0, 1] * a_diag[i, 1, 0])
            if abs(det) < 1e-14:
                singular = True
                break
            f_inv[i, 0, 0] = a_diag[i, 1, 1] / det
            f_inv[i, 0, 1] = -a_diag[i, 0, 1] / det
            f_inv[i, 1, 0] = -a_diag[i, 1, 0] / det
            f_inv[i, 1, 1] = a_diag[i, 0, 0] / det
            p = parent[i]
            for r in range(2):
                for col in range(2):
                    u_blk[i, r, col] = (f_inv[i, r, 0] * a_up[i, 0, col]
                                        + f_inv[i, r, 1] * a_up[i, 1, col])
            if p == slack:
                continue
            # a_dn[i] @ f_inv[i]
            t00 = a_dn[i, 0, 0] * f_inv[i, 0, 0] + a_dn[i, 0, 1] * f_inv[i, 1, 0]
            t01 = a_dn[i, 0, 0] * f_inv[i, 0, 1] + a_dn[i, 0, 1] * f_inv[i, 1, 1]
            t10 = a_dn[i, 1, 0] * f_inv[i, 0, 0] + a_dn[i, 1, 1] * f_inv[i, 1, 0]
            t11 = a_dn[i, 1, 0] * f_inv[i, 0, 1] + a_dn[i, 1, 1] * f_inv[i, 1, 1]
            a_diag[p, 0, 0] -= t00 * a_up[i, 0, 0] + t01 * a_up[i, 1, 0]
            a_diag[p, 0, 1] -= t00 * a_up[i, 0, 1] + t01 * a_up[i, 1, 1]
            a_diag[p, 1, 0] -= t10 * a_up[i, 0, 0] + t11 * a_up[i, 1, 0]
            a_diag[p, 1, 1] -= t10 * a_up[i, 0, 1] + t11 * a_up[i, 1, 1]
            rhs[p, 0] -= t00 * rhs[i, 0] + t01 * rhs[i, 1]
            rhs[p, 1] -= t10 * rhs[i, 0] + t11 * rhs[i, 1]
        if singular:
            status = PF_SINGULAR
            iters = it
            break

        # back-substitution from the slack outwards
        for k in range(elim_order.shape[0] - 1, -1, -1):
            i = elim_order[k]
            p = parent[i]
            xp0 = 0.0
            xp1 = 0.0
            if p != slack:
                xp0 = dx[p, 0]
                xp1 = dx[p, 1]
            r0 = f_inv[i, 0, 0] * rhs[i, 0] + f_inv[i, 0, 1] * rhs[i, 1]
            r1 = f_inv[i, 1, 0] * rhs[i, 0] + f_inv[i, 1, 1] * rhs[i, 1]
            dx[i, 0] = r0 - (u_blk[i, 0, 0] * xp0 + u_blk[i, 0, 1] * xp1)
            dx[i, 1] = r1 - (u_blk[i, 1, 0] * xp0 + u_blk[i, 1, 1] * xp1)

        for i in range(n):
            if i == slack:
                continue
            va[i] += dx[i, 0]
            vm[i] += dx[i, 1]

    return status, iters, max_mis, p_calc, q_calc


@njit(cache=True)
def pf_solve_series(diag_g, diag_b, adj_ptr, adj_idx, adj_g, adj_b,
                    parent, elim_order, slack,
                    p_series, q_series, tol, max_iter):
    """Solve one power flow per row of p_series/q_series from a flat start.

    Returns (status (T,), iters (T,), vm (T,n), va (T,n), loss (T,),
    slack_p (T,), slack_q (T,)); losses and slack injections in per-unit.
    """
    nt = p_series.shape[0]
    n = diag_g.shape[0]
    status = np.zeros(nt, dtype=np.int64)
    iters = np.zeros(nt, dtype=np.int64)
    vm_out = np.ones((nt, n))
    va_out = np.zeros((nt, n))
    loss = np.zeros(nt)
    slack_p = np.zeros(nt)
    slack_q = np.zeros(nt)
    for t in range(nt):
        vm = np.ones(n)
        va = np.zeros(n)
        st, it, _, p_calc, q_calc = pf_solve(
            diag_g, diag_b, adj_ptr, adj_idx, adj_g, adj_b,
            parent, elim_order, slack,
            p_series[t], q_series[t], tol, max_iter, vm, va)
        status[t] = st
        iters[t] = it
        vm_out[t] = vm
        va_out[t] = va
        slack_p[t] = p_calc[slack]
        slack_q[t] = q_calc[slack]
        tot = 0.0
        for i in range(n):
            tot += p_calc[i]
        loss[t] = tot
    return status, iters, vm_out, va_out, loss, slack_p, slack_q


# ---------------------------------------------------------------------------
# fleet simulation
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _charge_cap(soc, soc_max, e_kwh, eta_chg, p_rated, dt):
    """Charging power that is feasible this interval (rated and SoC caps)."""
    cap = (soc_max - soc) * e_kwh / (eta_chg * dt)
    if cap > p_rated:
        cap = p_rated
    if cap < 0.0:
        cap = 0.0
    return cap


@njit(cache=True, inline="always")
def _discharge_cap(soc, soc_floor, e_kwh, eta_dis, p_rated, dt):
    """Discharging power magnitude feasible this interval."""
    cap = (soc - soc_floor) * e_kwh * eta_dis / dt
    if cap > p_rated:
        cap = p_rated
    if cap < 0.0:
        cap = 0.0
    return cap


@njit(cache=True, inline="always")
def _priority(soc, soc_max, e_kwh, eta_chg, p_rated, slack_h, horizon_h):
    """Priority factor: (need)^((slack - required charge time)/horizon)."""
    base = soc_max - soc
    if base <= 0.0:
        return 0.0
    t_req = base * e_kwh / (eta_chg * p_rated)
    return base ** ((slack_h - t_req) / horizon_h)


@njit(cache=True)
def build_rank_table(prices):
    """rank[t, d] = 1-based rank of prices[t] among prices[t..d] (cheapest
    first, earlier interval wins ties).

    Prices are compared at tariff resolution (0.1 cent/kWh): intervals
    quoted at the same rate tie, and the earlier one ranks ahead, so
    charging spreads from arrival instead of piling onto one interval
    whichever price carries the smallest rounding noise."""
    nt = prices.shape[0]
    cents = np.empty(nt, dtype=np.int64)
    for t in range(nt):
        cents[t] = int(np.round(prices[t] * 1000.0))
    rank = np.zeros((nt, nt), dtype=np.int64)
    for t in range(nt):
        for d in range(t, nt):
            r = 1
            for i in range(t, d + 1):
                if cents[i] < cents[t]:
                    r += 1
            rank[t, d] = r
    return rank


@njit(cache=True)
def simulate_fleet(
        n_der, t_slots, dt,
        # EVs
        ev_node, ev_e, ev_pmax, ev_soc0, ev_tarr, ev_tdep,
        # swap batteries
        b_node, b_e, b_pmax, b_soc0, b_tswap, b_swapin,
        # charger parameters
        eta_g2v, eta_v2g, eta_g2b, eta_b2g, soc_min, soc_max,
        a_d, b_d, c_b,
        # dispatch inputs
        rank_table, frac_ev, frac_b, irradiance, sigma, uncontrolled,
        solar_kw, lambda2):
    """Sequential day simulation of every EV and swap battery.

    Modes follow the priority/pricing selection tables.  The per-(node,
    interval) dispatch fraction scales the aggregate coordinated feasible
    range [-discharge_total, +charge_total]: fractions above 0.5 scale the
    charging budget (1 is full charging), fractions below 0.5 scale the
    discharging budget (0 is full discharging), 0.5 idles the node.  The
    budget is allocated to individual units by priority order (highest
    need charges first, lowest need discharges first).  A look-ahead guard
    keeps every unit able to reach soc_max by its deadline at rated power,
    which enforces the departure/swap SoC equalities constructively.
    Optional (non-guard) charging is additionally capped so that lambda2
    times the node's station demand stays below its solar output during
    daytime intervals.

    Returns (ev_power (n_der, T), b_power (n_der, T), deg_cost,
    dep_dev (sum of |SoC at departure - soc_max|),
    swap_dev (same at swap times), ev_final_soc, b_final_soc).
    """
    n_ev = ev_node.shape[0]
    n_b = b_node.shape[0]
    horizon_h = t_slots * dt

    ev_soc = ev_soc0.copy()
    b_soc = b_soc0.copy()
    ev_power = np.zeros((n_der, t_slots))
    b_power = np.zeros((n_der, t_slots))
    deg_cost = 0.0
    dep_dev = 0.0
    swap_dev = 0.0

    power = np.zeros(n_ev)
    rho = np.zeros(n_ev)
    mode = np.zeros(n_ev, dtype=np.int64)  # 0 idle, 1 uncoord, 2 cG2V, 3 cV2G
    cap_c = np.zeros(n_ev)
    cap_d = np.zeros(n_ev)
    guard = np.zeros(n_ev)

    bpower = np.zeros(n_b)
    brho = np.zeros(n_b)
    bmode = np.zeros(n_b, dtype=np.int64)
    bcap_c = np.zeros(n_b)
    bcap_d = np.zeros(n_b)
    bguard = np.zeros(n_b)

    chg_budget = np.zeros(n_der)
    dis_budget = np.zeros(n_der)
    headroom = np.zeros(n_der)

    for t in range(t_slots):
        # ---- EVs ----
        for v in range(n_ev):
            power[v] = 0.0
            mode[v] = 0
            rho[v] = 0.0
            cap_c[v] = 0.0
            cap_d[v] = 0.0
            guard[v] = 0.0
            if t < ev_tarr[v] or t >= ev_tdep[v]:
                continue
            soc = ev_soc[v]
            cap = _charge_cap(soc, soc_max, ev_e[v], eta_g2v, ev_pmax[v], dt)
            cap_c[v] = cap
            if soc >= soc_max - 1e-12:
                continue  # idle, fully charged
            # minimum charge so that rated-power charging over the remaining
            # intervals can still reach soc_max by departure
            future_h = (ev_tdep[v] - t - 1) * dt
            floor_next = soc_max - eta_g2v * ev_pmax[v] * future_h / ev_e[v]
            g = (floor_next - soc) * ev_e[v] / (eta_g2v * dt)
            if g > cap:
                g = cap
            if g < 0.0:
                g = 0.0
            guard[v] = g
            if uncontrolled:
                mode[v] = 1
                power[v] = cap
                continue
            slack_h = (ev_tdep[v] - t) * dt
            r = _priority(soc, soc_max, ev_e[v], eta_g2v, ev_pmax[v],
                          slack_h, horizon_h)
            rho[v] = r
            if r >= 1.0:
                mode[v] = 1
                power[v] = cap
            else:
                need_h = (soc_max - soc) * ev_e[v] / (eta_g2v * ev_pmax[v])
                k = int(np.ceil(need_h / dt - 1e-9))
                flag = rank_table[t, ev_tdep[v] - 1] <= k
                if flag:
                    mode[v] = 2
                else:
                    mode[v] = 3
                    floor = floor_next
                    if floor < soc_min:
                        floor = soc_min
                    cap_d[v] = _discharge_cap(soc, floor, ev_e[v], eta_v2g,
                                              ev_pmax[v], dt)

        # ---- swap batteries: swap event and mode selection ----
        for b in range(n_b):
            if b_tswap[b] == t:
                swap_dev += abs(b_soc[b] - soc_max)
                b_soc[b] = b_swapin[b]

        for b in range(n_b):
            bpower[b] = 0.0
            bmode[b] = 0
            brho[b] = 0.0
            bcap_d[b] = 0.0
            bguard[b] = 0.0
            soc = b_soc[b]
            cap = _charge_cap(soc, soc_max, b_e[b], eta_g2b, b_pmax[b], dt)
            bcap_c[b] = cap
            if soc >= soc_max - 1e-12:
                continue
            if b_tswap[b] > t:
                future_h = (b_tswap[b] - t - 1) * dt
            else:
                future_h = 0.0
            floor_next = soc_max - eta_g2b * b_pmax[b] * future_h / b_e[b]
            g = (floor_next - soc) * b_e[b] / (eta_g2b * dt)
            if g > cap:
                g = cap
            if g < 0.0:
                g = 0.0
            bguard[b] = g
            if uncontrolled:
                bmode[b] = 1
                bpower[b] = cap
                continue
            slack_h = (b_tswap[b] - t) * dt
            r = _priority(soc, soc_max, b_e[b], eta_g2b, b_pmax[b],
                          slack_h, horizon_h)
            brho[b] = r
            if r >= 1.0:
                bmode[b] = 1
                bpower[b] = cap
            elif irradiance[t] >= sigma:
                bmode[b] = 2
            else:
                bmode[b] = 3
                floor = floor_next
                if floor < soc_min:
                    floor = soc_min
                bcap_d[b] = _discharge_cap(soc, floor, b_e[b], eta_b2g,
                                           b_pmax[b], dt)

        # solar-adequacy headroom for optional charging this interval;
        # mandatory flows (uncoordinated units and battery guards) are
        # reserved up front so optional charging backs off first
        for nd in range(n_der):
            if irradiance[t] >= sigma and lambda2 > 0.0:
                headroom[nd] = solar_kw[nd, t] / lambda2
            else:
                headroom[nd] = 1e18
        if not uncontrolled:
            for v in range(n_ev):
                if mode[v] == 1:
                    headroom[ev_node[v]] -= power[v]
            for b in range(n_b):
                if bmode[b] == 1:
                    headroom[b_node[b]] -= bpower[b]
                elif bguard[b] > 0.0:
                    headroom[b_node[b]] -= bguard[b]

        if not uncontrolled:
            # net coordinated target per node from the dispatch fraction
            for nd in range(n_der):
                chg_budget[nd] = 0.0
                dis_budget[nd] = 0.0
            for v in range(n_ev):
                if mode[v] == 2:
                    chg_budget[ev_node[v]] += cap_c[v]
                elif mode[v] == 3 and guard[v] <= 0.0:
                    dis_budget[ev_node[v]] += cap_d[v]
            for nd in range(n_der):
                f = frac_ev[nd, t]
                if f >= 0.5:
                    chg_budget[nd] *= 2.0 * f - 1.0
                    dis_budget[nd] = 0.0
                else:
                    chg_budget[nd] = 0.0
                    dis_budget[nd] *= 1.0 - 2.0 * f
            order = np.argsort(-rho)
            # guards always charge (mandatory to reach soc_max in time)
            for v in range(n_ev):
                if mode[v] == 2 or (mode[v] == 3 and guard[v] > 0.0):
                    power[v] = guard[v]
                    nd = ev_node[v]
                    chg_budget[nd] -= guard[v]
                    headroom[nd] -= guard[v]
            # charge: highest priority first, inside budget and headroom
            for k in range(n_ev):
                v = order[k]
                if mode[v] != 2:
                    continue
                nd = ev_node[v]
                extra = cap_c[v] - power[v]
                if extra > chg_budget[nd]:
                    extra = chg_budget[nd]
                if extra > headroom[nd]:
                    extra = headroom[nd]
                if extra > 0.0:
                    power[v] += extra
                    chg_budget[nd] -= extra
                    headroom[nd] -= extra
            # discharge: lowest priority first; guarded units never discharge
            for k in range(n_ev - 1, -1, -1):
                v = order[k]
                if mode[v] != 3 or guard[v] > 0.0:
                    continue
                nd = ev_node[v]
                d = cap_d[v]
                if d > dis_budget[nd]:
                    d = dis_budget[nd]
                if d > 0.0:
                    power[v] = -d
                    dis_budget[nd] -= d

        # advance EV SoC, accumulate degradation on discharging intervals
        for v in range(n_ev):
            p = power[v]
            if p == 0.0:
                continue
            soc_prev = ev_soc[v]
            if p > 0.0:
                soc_new = soc_prev + eta_g2v * p * dt / ev_e[v]
            else:
                soc_new = soc_prev + p * dt / (eta_v2g * ev_e[v])
                dod_prev = 1.0 - soc_prev
                dod_new = 1.0 - soc_new
                deg_cost += ((dod_new ** (1.0 - b_d)
                              - dod_prev ** (1.0 - b_d))
                             * c_b * ev_e[v] / a_d)
            if soc_new > 1.0:
                soc_new = 1.0
            if soc_new < 0.0:
                soc_new = 0.0
            ev_soc[v] = soc_new
            ev_power[ev_node[v], t] += p

        for v in range(n_ev):
            if ev_tdep[v] == t + 1:
                dep_dev += abs(ev_soc[v] - soc_max)

        # ---- swap batteries: budget allocation ----
        if not uncontrolled:
            for nd in range(n_der):
                chg_budget[nd] = 0.0
                dis_budget[nd] = 0.0
            for b in range(n_b):
                if bmode[b] == 2:
                    chg_budget[b_node[b]] += bcap_c[b]
                elif bmode[b] == 3 and bguard[b] <= 0.0:
                    dis_budget[b_node[b]] += bcap_d[b]
            for nd in range(n_der):
                f = frac_b[nd, t]
                if f >= 0.5:
                    chg_budget[nd] *= 2.0 * f - 1.0
                    dis_budget[nd] = 0.0
                else:
                    chg_budget[nd] = 0.0
                    dis_budget[nd] *= 1.0 - 2.0 * f
            border = np.argsort(-brho)
            # battery guard headroom was already reserved up front
            for b in range(n_b):
                if bmode[b] == 2 or (bmode[b] == 3 and bguard[b] > 0.0):
                    bpower[b] = bguard[b]
                    nd = b_node[b]
                    chg_budget[nd] -= bguard[b]
            for k in range(n_b):
                b = border[k]
                if bmode[b] != 2:
                    continue
                nd = b_node[b]
                extra = bcap_c[b] - bpower[b]
                if extra > chg_budget[nd]:
                    extra = chg_budget[nd]
                if extra > headroom[nd]:
                    extra = headroom[nd]
                if extra > 0.0:
                    bpower[b] += extra
                    chg_budget[nd] -= extra
                    headroom[nd] -= extra
            for k in range(n_b - 1, -1, -1):
                b = border[k]
                if bmode[b] != 3 or bguard[b] > 0.0:
                    continue
                nd = b_node[b]
                d = bcap_d[b]
                if d > dis_budget[nd]:
                    d = dis_budget[nd]
                if d > 0.0:
                    bpower[b] = -d
                    dis_budget[nd] -= d

        for b in range(n_b):
            p = bpower[b]
            if p == 0.0:
                continue
            if p > 0.0:
                soc_new = b_soc[b] + eta_g2b * p * dt / b_e[b]
            else:
                soc_new = b_soc[b] + p * dt / (eta_b2g * b_e[b])
            if soc_new > 1.0:
                soc_new = 1.0
            if soc_new < 0.0:
                soc_new = 0.0
            b_soc[b] = soc_new
            b_power[b_node[b], t] += p

    return ev_power, b_power, deg_cost, dep_dev, swap_dev, ev_soc, b_soc
