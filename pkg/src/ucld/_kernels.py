"""Compiled repair and evaluation kernels.

Array conventions: thermal matrices are (n_thermal, hours), pump-storage
matrices (n_hydro, hours); ``u`` is int8. All kernels release the GIL.
"""
import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True)

# indices into the packed parameter tuple
NEG_INF = -np.inf
POS_INF = np.inf


@njit(**_JIT)
def roll_levels(hg, hv, hv0, eps, eta):
    n_hy, T = hg.shape
    for j in range(n_hy):
        k = eta[j] / eps[j]
        level = hv0[j]
        for t in range(T):
            level = level - k * hg[j, t]
            hv[j, t] = level


@njit(**_JIT)
def decode_genome(x, n_th, n_hy, T, hv0, eps, eta):
    u = np.zeros((n_th, T), dtype=np.int8)
    g = np.zeros((n_th, T))
    hg = np.empty((n_hy, T))
    hv = np.empty((n_hy, T))
    p = 0
    for i in range(n_th):
        for t in range(T):
            v = x[p]
            p += 1
            if v > 0:
                u[i, t] = 1
                g[i, t] = v
    for j in range(n_hy):
        for t in range(T):
            hg[j, t] = x[p]
            p += 1
    pref = x[p:p + n_th].copy()
    maxc = max(1.0, np.rint(abs(x[p + n_th])))
    roll_levels(hg, hv, hv0, eps, eta)
    return u, g, hg, hv, pref, maxc


@njit(**_JIT)
def thermal_ramp_pass(u, g, gmin, gmax, up, down):
    """Ramp window and output bounds in one ascending sweep, then shut-down caps.

    Never changes commitment. Off hours get g = 0.
    """
    n_th, T = g.shape
    for i in range(n_th):
        su = max(up[i], gmin[i])
        sd = max(down[i], gmin[i])
        for t in range(T):
            if u[i, t] == 0:
                g[i, t] = 0.0
                continue
            lo = gmin[i]
            hi = gmax[i]
            if t > 0:
                if u[i, t - 1] == 1:
                    lo = max(lo, g[i, t - 1] - down[i])
                    hi = min(hi, g[i, t - 1] + up[i])
                else:
                    hi = min(hi, su)
            v = g[i, t]
            if v < lo:
                v = lo
            if v > hi:
                v = hi
            g[i, t] = v
        # an on-block followed by an off hour must be able to ramp down to sd
        for t in range(1, T):
            if u[i, t - 1] == 1 and u[i, t] == 0:
                cap = sd
                k = t - 1
                while k >= 0 and u[i, k] == 1 and g[i, k] > cap:
                    g[i, k] = cap
                    cap += down[i]
                    k -= 1


@njit(**_JIT)
def mdt_pass(u, g, mdt):
    """Force off any restart that follows a too-short off block."""
    n_th, T = g.shape
    changed = False
    for i in range(n_th):
        off = 0
        t = 0
        while t < T:
            if u[i, t] == 0:
                off += 1
                t += 1
                continue
            if 0 < off < mdt[i]:
                stop = min(T, t + (mdt[i] - off))
                for s in range(t, stop):
                    u[i, s] = 0
                    g[i, s] = 0.0
                off += stop - t
                t = stop
                changed = True
                continue
            off = 0
            t += 1
    return changed


@njit(**_JIT)
def hydro_pass(hg, hv, hgmin, hgmax, hpmin, hpmax, rgu, rpd, hvmin, hvmax, hv0, eps, eta):
    """Pump-storage bounds, ramps and reservoir capacity, hour by hour.

    At each hour the clamps run in order (generation/pumping bounds,
    generation ramp, pumping ramp, water level) against the already
    repaired previous hour. Every clamp moves the output toward zero, and
    an output that cannot satisfy its mode's minimum becomes idle (0).
    """
    n_hy, T = hg.shape
    for j in range(n_hy):
        k = eta[j] / eps[j]
        prev = 0.0
        level = hv0[j]
        for t in range(T):
            x = hg[j, t]
            if x > 0:
                x = min(max(x, hgmin[j]), hgmax[j])
            elif x < 0:
                x = max(min(x, -hpmin[j]), -hpmax[j])
            if x > 0 and x - prev > rgu[j]:
                x = prev + rgu[j]
                if x < hgmin[j] or x <= 0:
                    x = 0.0
            if x < 0 and x - prev < -rpd[j]:
                x = prev - rpd[j]
                if x > -hpmin[j] or x >= 0:
                    x = 0.0
            new_level = level - k * x
            if new_level > hvmax[j]:
                x = (level - hvmax[j]) / k
                if x > -hpmin[j] or x > 0:
                    x = 0.0
            elif new_level < hvmin[j]:
                x = (level - hvmin[j]) / k
                if x < hgmin[j] or x < 0:
                    x = 0.0
            level = level - k * x
            hg[j, t] = x
            hv[j, t] = level
            prev = x


@njit(**_JIT)
def stage_chain(u, g, hg, hv, gmin, gmax, up, down, mdt,
                hgmin, hgmax, hpmin, hpmax, rgu, rpd, hvmin, hvmax, hv0, eps, eta):
    thermal_ramp_pass(u, g, gmin, gmax, up, down)
    if mdt_pass(u, g, mdt):
        # restarts created by the downtime repair need their start-up ramp
        thermal_ramp_pass(u, g, gmin, gmax, up, down)
    hydro_pass(hg, hv, hgmin, hgmax, hpmin, hpmax, rgu, rpd, hvmin, hvmax, hv0, eps, eta)


@njit(**_JIT)
def _next_off(u):
    n_th, T = u.shape
    nxt = np.empty((n_th, T), dtype=np.int64)
    for i in range(n_th):
        k = T
        for t in range(T - 1, -1, -1):
            nxt[i, t] = k
            if u[i, t] == 0:
                k = t
    return nxt


@njit(**_JIT)
def supply_repair(u, g, hg, net, order, maxc, max_adj, gmin, gmax, up, down, tau, resid):
    """Adaptive supply-demand repair; ``resid[t]`` = net demand minus supply left over.

    Committed plants are visited in ``order``, each moving by at most
    ``maxc`` per visit inside its output bounds, its ramp window against the
    previous hour and the ceiling from which it can still ramp down to its
    next shut-down. After an hour is settled the following hours of each
    on-block are re-clamped to the ramp window.
    """
    n_th, T = g.shape
    n_hy = hg.shape[0]
    nxt = _next_off(u)
    for t in range(T):
        supply = 0.0
        for i in range(n_th):
            if u[i, t] == 1:
                supply += g[i, t]
        for j in range(n_hy):
            supply += hg[j, t]
        diff = supply - net[t]
        if abs(diff) <= tau:
            resid[t] = 0.0
            continue
        changed = False
        for _ in range(max_adj):
            if abs(diff) <= tau:
                break
            for k in range(n_th):
                i = order[k]
                if u[i, t] == 0:
                    continue
                lo = gmin[i]
                hi = gmax[i]
                if t > 0:
                    if u[i, t - 1] == 1:
                        lo = max(lo, g[i, t - 1] - down[i])
                        hi = min(hi, g[i, t - 1] + up[i])
                    else:
                        hi = min(hi, max(up[i], gmin[i]))
                if nxt[i, t] < T:
                    hi = min(hi, max(down[i], gmin[i]) + down[i] * (nxt[i, t] - t - 1))
                cur = g[i, t]
                step = -diff
                if step > maxc:
                    step = maxc
                elif step < -maxc:
                    step = -maxc
                new = cur + step
                if new < lo:
                    new = lo
                if new > hi:
                    new = hi
                if new != cur:
                    g[i, t] = new
                    diff += new - cur
                    changed = True
                if abs(diff) <= tau:
                    break
        resid[t] = -diff if abs(diff) > tau else 0.0
        if changed:
            for i in range(n_th):
                s = t + 1
                while s < T and u[i, s] == 1 and u[i, s - 1] == 1:
                    lo = max(gmin[i], g[i, s - 1] - down[i])
                    hi = min(gmax[i], g[i, s - 1] + up[i])
                    v = min(max(g[i, s], lo), hi)
                    if v == g[i, s]:
                        break
                    g[i, s] = v
                    s += 1


@njit(**_JIT)
def _best_in(a, b, lo, hi, target, best, best_dist):
    a = max(a, lo)
    b = min(b, hi)
    if a <= b:
        c = min(max(target, a), b)
        d = abs(c - target)
        if d < best_dist:
            return c, d
    return best, best_dist


@njit(**_JIT)
def water_terminal_repair(hg, hv, hgmin, hgmax, hpmin, hpmax, rgu, rpd, hvmin, hvmax,
                          hv0, eps, eta, tau, wres, dhg):
    """Close each reservoir's end-of-horizon gap, latest hour first.

    Writes the leftover gap per plant to ``wres`` and the per-hour change in
    total pump-storage output to ``dhg``.
    """
    n_hy, T = hg.shape
    for t in range(T):
        dhg[t] = 0.0
    for j in range(n_hy):
        k = eta[j] / eps[j]
        gap = hv[j, T - 1] - hv0[j]
        if abs(gap) <= tau:
            wres[j] = 0.0
            continue
        touched = False
        for t in range(T - 1, -1, -1):
            need = gap / k
            cur = hg[j, t]
            target = cur + need
            prev = hg[j, t - 1] if t > 0 else 0.0
            lo = NEG_INF
            hi = POS_INF
            if t < T - 1:
                nx = hg[j, t + 1]
                if nx > 0:
                    lo = nx - rgu[j]
                elif nx < 0:
                    hi = nx + rpd[j]
            if need > 0:
                mn = hv[j, t]
                for s in range(t + 1, T):
                    mn = min(mn, hv[j, s])
                hi = min(hi, cur + (mn - hvmin[j]) / k, target)
                lo = max(lo, cur)
            else:
                mx = hv[j, t]
                for s in range(t + 1, T):
                    mx = max(mx, hv[j, s])
                lo = max(lo, cur - (hvmax[j] - mx) / k, target)
                hi = min(hi, cur)
            best = cur
            best_dist = abs(cur - target)
            best, best_dist = _best_in(0.0, 0.0, lo, hi, target, best, best_dist)
            best, best_dist = _best_in(hgmin[j], min(hgmax[j], prev + rgu[j]), lo, hi,
                                       target, best, best_dist)
            best, best_dist = _best_in(max(-hpmax[j], prev - rpd[j]), -hpmin[j], lo, hi,
                                       target, best, best_dist)
            if best != cur:
                delta = best - cur
                hg[j, t] = best
                for s in range(t, T):
                    hv[j, s] -= k * delta
                gap -= k * delta
                dhg[t] += delta
                touched = True
            if abs(gap) <= tau:
                break
        if touched:
            level = hv0[j]
            for t in range(T):
                level = level - k * hg[j, t]
                hv[j, t] = level
            gap = hv[j, T - 1] - hv0[j]
        wres[j] = abs(gap) if abs(gap) > tau else 0.0


@njit(**_JIT)
def full_repair(x, n_th, n_hy, T, net, gmin, gmax, up, down, mdt,
                hgmin, hgmax, hpmin, hpmax, rgu, rpd, hvmin, hvmax, hv0, eps, eta,
                max_adj, tau, rebalance):
    u, g, hg, hv, pref, maxc = decode_genome(x, n_th, n_hy, T, hv0, eps, eta)
    stage_chain(u, g, hg, hv, gmin, gmax, up, down, mdt,
                hgmin, hgmax, hpmin, hpmax, rgu, rpd, hvmin, hvmax, hv0, eps, eta)
    order = np.argsort(-pref, kind="mergesort")
    resid = np.zeros(T)
    supply_repair(u, g, hg, net, order, maxc, max_adj, gmin, gmax, up, down, tau, resid)
    wres = np.zeros(n_hy)
    dhg = np.zeros(T)
    if n_hy > 0:
        water_terminal_repair(hg, hv, hgmin, hgmax, hpmin, hpmax, rgu, rpd, hvmin, hvmax,
                              hv0, eps, eta, tau, wres, dhg)
        moved = False
        for t in range(T):
            if dhg[t] != 0.0:
                moved = True
                break
        if moved:
            if rebalance:
                supply_repair(u, g, hg, net, order, maxc, max_adj, gmin, gmax, up, down,
                              tau, resid)
            else:
                for t in range(T):
                    resid[t] -= dhg[t]
    return u, g, hg, hv, resid, wres


@njit(**_JIT)
def evaluate_schedule(u, g, hg, net, alpha, beta, gmin, gmax, up, down, sc, ca, cb, cc,
                      hgmin, hgmax, hpmin, hpmax, ramp_aware):
    """Return (fuel, startup, reserve violation sum)."""
    n_th, T = g.shape
    n_hy = hg.shape[0]
    fuel = 0.0
    startup = 0.0
    for i in range(n_th):
        for t in range(T):
            if u[i, t] == 1:
                v = g[i, t]
                fuel += ca[i] + cb[i] * v + cc[i] * v * v
                if t > 0 and u[i, t - 1] == 0:
                    startup += sc[i]
    reserve = 0.0
    for t in range(T):
        lo = 0.0
        hi = 0.0
        for i in range(n_th):
            if u[i, t] == 1:
                a = gmin[i]
                b = gmax[i]
                if ramp_aware and t > 0:
                    if u[i, t - 1] == 1:
                        a = max(a, g[i, t - 1] - down[i])
                        b = min(b, g[i, t - 1] + up[i])
                    else:
                        b = min(b, max(up[i], gmin[i]))
                    a = min(a, b)
                lo += a
                hi += b
        for j in range(n_hy):
            if hg[j, t] > 0:
                lo += hgmin[j]
                hi += hgmax[j]
            elif hg[j, t] < 0:
                lo -= hpmax[j]
                hi -= hpmin[j]
        s1 = lo - (1.0 - alpha[t]) * net[t]
        s2 = (1.0 + beta[t]) * net[t] - hi
        if s1 > 0:
            reserve += s1
        if s2 > 0:
            reserve += s2
    return fuel, startup, reserve


@njit(**_JIT)
def evaluate_population(X, out, n_th, n_hy, T, net, alpha, beta,
                        gmin, gmax, up, down, mdt, sc, ca, cb, cc,
                        hgmin, hgmax, hpmin, hpmax, rgu, rpd, hvmin, hvmax, hv0, eps, eta,
                        max_adj, tau, rebalance, ramp_aware):
    """Repair and score each row of ``X``.

    ``out`` columns: fuel, startup, sum |supply residual|, sum water residual,
    reserve violation.
    """
    for n in range(X.shape[0]):
        u, g, hg, hv, resid, wres = full_repair(
            X[n], n_th, n_hy, T, net, gmin, gmax, up, down, mdt,
            hgmin, hgmax, hpmin, hpmax, rgu, rpd, hvmin, hvmax, hv0, eps, eta,
            max_adj, tau, rebalance)
        fuel, startup, reserve = evaluate_schedule(
            u, g, hg, net, alpha, beta, gmin, gmax, up, down, sc, ca, cb, cc,
            hgmin, hgmax, hpmin, hpmax, ramp_aware)
        s = 0.0
        for t in range(T):
            s += abs(resid[t])
        w = 0.0
        for j in range(n_hy):
            w += wres[j]
        out[n, 0] = fuel
        out[n, 1] = startup
        out[n, 2] = s
        out[n, 3] = w
        out[n, 4] = reserve
