"""Compiled inner loops for the Monte Carlo experiments.

Everything here is a plain function of arrays: grids and driver increments in,
trajectories and accumulated statistics out.  The Python modules own grid
construction, seeding and all bookkeeping, so these kernels stay dumb, branch
free and bit-reproducible (no fastmath).
"""

from __future__ import annotations

import numpy as np
from numba import njit

SQRT2 = np.sqrt(2.0)


@njit(cache=True, nogil=True)
def polar_pair(grid, dB, inv_beta, c, E, xi0, rho_out, xi_out, milstein=False):
    """One (rho, xi) pair of the compactified polar SDEs.

    d rho = [1/b + (2/b - 1/2) cos 2xi + (1/b) cos 4xi] c/(1-ct) dt
            + sqrt(2/b) sin 2xi sqrt(c/(1-ct)) dB
    d xi  = -2 c E^{3/2} (1-ct)^2 dt
            - [(2/b - 1/2) sin 2xi + (1/b) sin 4xi] c/(1-ct) dt
            + (2 sqrt2 / sqrt b) cos^2 xi sqrt(c/(1-ct)) dB

    With ``milstein`` the single-noise corrections (1/2)(d b/d xi) b_xi
    (dB^2 - dt) are added, lifting the strong order to 1 for pathwise
    cross-validation runs.
    """
    e32 = E * np.sqrt(E)
    sdiff = SQRT2 * np.sqrt(inv_beta)
    rho = 0.0
    xi = xi0
    rho_out[0] = rho
    xi_out[0] = xi
    for k in range(len(grid) - 1):
        t = grid[k]
        dt = grid[k + 1] - t
        u = 1.0 - c * t
        sing = c / u
        root = np.sqrt(sing)
        c2 = np.cos(2.0 * xi)
        s2 = np.sin(2.0 * xi)
        c4 = np.cos(4.0 * xi)
        s4 = np.sin(4.0 * xi)
        drift_rho = (inv_beta + (2.0 * inv_beta - 0.5) * c2 + inv_beta * c4) * sing
        drift_xi = -2.0 * c * e32 * u * u - ((2.0 * inv_beta - 0.5) * s2 + inv_beta * s4) * sing
        diff_rho = sdiff * s2 * root
        diff_xi = sdiff * (1.0 + c2) * root  # (2 sqrt2 / sqrt b) cos^2 xi
        rho += drift_rho * dt + diff_rho * dB[k]
        xi += drift_xi * dt + diff_xi * dB[k]
        if milstein:
            cos2 = 0.5 * (1.0 + c2)
            ito2 = dB[k] * dB[k] - dt
            rho += 4.0 * inv_beta * c2 * cos2 * sing * ito2
            xi -= 4.0 * inv_beta * s2 * cos2 * sing * ito2
        rho_out[k + 1] = rho
        xi_out[k + 1] = xi


@njit(cache=True, nogil=True)
def coupled_pass(grid, dB, inv_beta, c, E, knot_idx,
                 rho_out, xi_out, bxi_re, bxi_im, bth_re, bth_im, run_re, run_im):
    """Fused sweep: the Neumann (rho, xi) pair plus the per-gap oscillatory
    Ito sums and the running integral of e^{-2 i xi} sqrt(2c/(1-cs)) dB.

    One pass, double-angle identities instead of extra trig calls; this is
    the inner loop of the coupling experiments at large E.
    """
    e32 = E * np.sqrt(E)
    sdiff = SQRT2 * np.sqrt(inv_beta)
    rho = 0.0
    xi = 0.5 * np.pi
    rho_out[0] = rho
    xi_out[0] = xi
    run_re[0] = 0.0
    run_im[0] = 0.0
    j = 0
    nj = len(knot_idx)
    axr = 0.0
    axi = 0.0
    atr = 0.0
    ati = 0.0
    tot_r = 0.0
    tot_i = 0.0
    for k in range(len(grid) - 1):
        t = grid[k]
        dt = grid[k + 1] - t
        u = 1.0 - c * t
        sing = c / u
        root = np.sqrt(sing)
        c2 = np.cos(2.0 * xi)
        s2 = np.sin(2.0 * xi)
        c4 = 2.0 * c2 * c2 - 1.0
        s4 = 2.0 * s2 * c2
        # oscillatory sums at the left point: e^{-2 i xi} = c2 - i s2
        amp = SQRT2 * root * dB[k]
        axr += c2 * amp
        axi -= s2 * amp
        theta2 = np.pi - (4.0 / 3.0) * e32 * (1.0 - u * u * u)
        atr += np.cos(theta2) * amp
        ati -= np.sin(theta2) * amp
        tot_r += c2 * amp
        tot_i -= s2 * amp
        run_re[k + 1] = tot_r
        run_im[k + 1] = tot_i
        drift_rho = (inv_beta + (2.0 * inv_beta - 0.5) * c2 + inv_beta * c4) * sing
        drift_xi = -2.0 * c * e32 * u * u - ((2.0 * inv_beta - 0.5) * s2 + inv_beta * s4) * sing
        rho += drift_rho * dt + sdiff * s2 * root * dB[k]
        xi += drift_xi * dt + sdiff * (1.0 + c2) * root * dB[k]
        rho_out[k + 1] = rho
        xi_out[k + 1] = xi
        if j < nj and k + 1 == knot_idx[j]:
            bxi_re[j] = axr
            bxi_im[j] = axi
            bth_re[j] = atr
            bth_im[j] = ati
            axr = 0.0
            axi = 0.0
            atr = 0.0
            ati = 0.0
            j += 1


@njit(cache=True, nogil=True)
def oscillatory_gap_sums(grid, dB, xi, c, E, knot_idx,
                         bxi_re, bxi_im, bth_re, bth_im, run_re, run_im):
    """Left-point Ito sums of the two oscillatory integrals.

    Accumulates per knot gap j the increments
      B^xi_j = int e^{-2i xi} sqrt(2c/(1-cs)) dB
      B^th_j = int e^{-2i theta} sqrt(2c/(1-cs)) dB
    with theta the deterministic phase, and stores the running B^xi integral
    at every grid point in (run_re, run_im).
    """
    e32 = E * np.sqrt(E)
    j = 0
    axr = 0.0
    axi = 0.0
    atr = 0.0
    ati = 0.0
    tot_r = 0.0
    tot_i = 0.0
    run_re[0] = 0.0
    run_im[0] = 0.0
    nj = len(knot_idx)
    for k in range(len(grid) - 1):
        t = grid[k]
        u = 1.0 - c * t
        amp = np.sqrt(2.0 * c / u) * dB[k]
        ph = -2.0 * xi[k]
        axr += np.cos(ph) * amp
        axi += np.sin(ph) * amp
        theta = 0.5 * np.pi - (2.0 / 3.0) * e32 * (1.0 - u * u * u)
        pht = -2.0 * theta
        atr += np.cos(pht) * amp
        ati += np.sin(pht) * amp
        tot_r += np.cos(ph) * amp
        tot_i += np.sin(ph) * amp
        run_re[k + 1] = tot_r
        run_im[k + 1] = tot_i
        if j < nj and k + 1 == knot_idx[j]:
            bxi_re[j] = axr
            bxi_im[j] = axi
            bth_re[j] = atr
            bth_im[j] = ati
            axr = 0.0
            axi = 0.0
            atr = 0.0
            ati = 0.0
            j += 1


@njit(cache=True, nogil=True)
def fundamental_pair(grid, dB, inv_beta, E, f, fp, g, gp):
    """Euler--Maruyama for the fundamental solutions of the shifted equation:
    d f = f' dt,  d f' = (t - E) f dt + (2/sqrt b) f dB, from (1,0) and (0,1).
    """
    sig = 2.0 * np.sqrt(inv_beta)
    f[0] = 1.0
    fp[0] = 0.0
    g[0] = 0.0
    gp[0] = 1.0
    for k in range(len(grid) - 1):
        t = grid[k]
        dt = grid[k + 1] - t
        a = (t - E) * dt + sig * dB[k]
        f1 = f[k] + fp[k] * dt
        fp1 = fp[k] + f[k] * a
        g1 = g[k] + gp[k] * dt
        gp1 = gp[k] + g[k] * a
        f[k + 1] = f1
        fp[k + 1] = fp1
        g[k + 1] = g1
        gp[k + 1] = gp1


@njit(cache=True, nogil=True)
def negative_axis_pair(grid, dB, inv_beta, r0, xi0, r, xi, milstein=False):
    """Polar SDEs of solutions on the negative axis, forward in t >= 1:

    d r  = (1/t)[1/(2b) + (1/4 + 1/b) cos 2xi + (1/(2b)) cos 4xi] dt
           - (1/sqrt(b t)) sin 2xi dBrev
    d xi = -sqrt(t) dt - (1/t)[(1/4 + 1/b) sin 2xi + (1/(2b)) sin 4xi] dt
           - (2/sqrt(b t)) cos^2 xi dBrev
    """
    sb = np.sqrt(inv_beta)
    r_c = r0
    x_c = xi0
    r[0] = r_c
    xi[0] = x_c
    for k in range(len(grid) - 1):
        t = grid[k]
        dt = grid[k + 1] - t
        it = 1.0 / t
        c2 = np.cos(2.0 * x_c)
        s2 = np.sin(2.0 * x_c)
        c4 = 2.0 * c2 * c2 - 1.0
        s4 = 2.0 * s2 * c2
        rt = sb / np.sqrt(t)
        r_c += it * (0.5 * inv_beta + (0.25 + inv_beta) * c2 + 0.5 * inv_beta * c4) * dt \
            - rt * s2 * dB[k]
        x_c += (-np.sqrt(t) - it * ((0.25 + inv_beta) * s2 + 0.5 * inv_beta * s4)) * dt \
            - 2.0 * rt * 0.5 * (1.0 + c2) * dB[k]
        if milstein:
            cos2 = 0.5 * (1.0 + c2)
            ito2 = dB[k] * dB[k] - dt
            r_c += 2.0 * inv_beta * it * c2 * cos2 * ito2
            x_c -= 2.0 * inv_beta * it * s2 * cos2 * ito2
        r[k + 1] = r_c
        xi[k + 1] = x_c


@njit(cache=True, nogil=True)
def backward_shooting(grid, dB, inv_beta, w_re, w_im, f0, fp0):
    """Backward Euler--Maruyama shooting for the decaying solution.

    Integrates d f = f' dt, d f' = (t - w) f dt + (2/sqrt b) f dB from the
    horizon down to 0 for a batch of spectral parameters w, starting in the
    WKB-decaying direction f = 1, f' = -sqrt(T - Re w).  Homogeneous
    renormalization keeps magnitudes bounded; only the ratio f'(0)/f(0)
    matters.  Outputs f(0), f'(0) per batch element (renormalized).
    """
    n = len(grid)
    m = len(w_re)
    sig = 2.0 * np.sqrt(inv_beta)
    T = grid[n - 1]
    for j in range(m):
        w = complex(w_re[j], w_im[j])
        arg = T - w_re[j]
        if arg < 1.0:
            arg = 1.0
        f = complex(1.0, 0.0)
        fp = complex(-np.sqrt(arg), 0.0)
        for k in range(n - 1, 0, -1):
            dt = grid[k] - grid[k - 1]
            t = grid[k]
            a = (t - w) * dt + sig * dB[k - 1]
            fnew = f - fp * dt
            fpnew = fp - f * a
            f = fnew
            fp = fpnew
            if (k & 1023) == 0:
                s = abs(f.real) + abs(f.imag) + abs(fp.real) + abs(fp.imag)
                if s > 1e120:
                    f /= s
                    fp /= s
        f0[j] = f
        fp0[j] = fp


@njit(cache=True, nogil=True)
def oscillation_count(grid, dB, inv_beta, lam):
    """Sign changes of the solution of the eigenvalue equation at height lam,
    with f(0) = 0, f'(0) = 1; equals the eigenvalue count below lam."""
    sig = 2.0 * np.sqrt(inv_beta)
    f = 0.0
    fp = 1.0
    count = 0
    for k in range(len(grid) - 1):
        t = grid[k]
        dt = grid[k + 1] - t
        a = (t - lam) * dt + sig * dB[k]
        fnew = f + fp * dt
        fpnew = fp + f * a
        if fnew * f < 0.0:
            count += 1
        f = fnew
        fp = fpnew
        s = abs(f) + abs(fp)
        if s > 1e100:
            f /= s
            fp /= s
    return count


@njit(cache=True, nogil=True)
def transfer_product_batch(grid, h11, h12, h22, z_re, z_im, out):
    """Transfer matrices of a sampled system for a batch of z, by exact
    exponentials of the frozen traceless generator on each cell."""
    nz = len(z_re)
    for j in range(nz):
        z = complex(z_re[j], z_im[j])
        t00 = complex(1.0, 0.0)
        t01 = complex(0.0, 0.0)
        t10 = complex(0.0, 0.0)
        t11 = complex(1.0, 0.0)
        for k in range(len(grid) - 1):
            dt = grid[k + 1] - grid[k]
            a = 0.5 * (h11[k] + h11[k + 1]) * dt
            b = 0.5 * (h12[k] + h12[k + 1]) * dt
            cc = 0.5 * (h22[k] + h22[k + 1]) * dt
            m00 = -z * b
            m01 = -z * cc
            m10 = z * a
            m11 = z * b
            d = m00 * m11 - m01 * m10
            w = np.sqrt(d)
            if abs(w) < 1e-6:
                cw = 1.0 - d / 2.0 + d * d / 24.0
                sw = 1.0 - d / 6.0 + d * d / 120.0
            else:
                cw = np.cos(w)
                sw = np.sin(w) / w
            e00 = cw + sw * m00
            e01 = sw * m01
            e10 = sw * m10
            e11 = cw + sw * m11
            n00 = e00 * t00 + e01 * t10
            n01 = e00 * t01 + e01 * t11
            n10 = e10 * t00 + e11 * t10
            n11 = e10 * t01 + e11 * t11
            t00 = n00
            t01 = n01
            t10 = n10
            t11 = n11
        out[j, 0, 0] = t00
        out[j, 0, 1] = t01
        out[j, 1, 0] = t10
        out[j, 1, 1] = t11


@njit(cache=True, nogil=True)
def _policy_step(t, dt_max, phase_res, kappa, floor, mode, c, E):
    dt = dt_max
    if mode == 1:  # compactified polar: phase 2cE^{3/2}(1-ct)^2, scale (1-ct)/c
        u = 1.0 - c * t
        rate = 2.0 * c * E * np.sqrt(E) * u * u
        if rate > 0.0 and phase_res / rate < dt:
            dt = phase_res / rate
        cap = kappa * u / c
        if cap < dt:
            dt = cap
    elif mode == 2:  # original time: local frequency sqrt|E - t|
        rate = np.sqrt(abs(E - t)) + 1.0
        if phase_res / rate < dt:
            dt = phase_res / rate
    elif mode == 3:  # negative axis: frequency sqrt(t)
        rate = np.sqrt(t) + 1.0
        if phase_res / rate < dt:
            dt = phase_res / rate
    if dt < floor:
        dt = floor
    return dt


@njit(cache=True, nogil=True)
def policy_grid_count(t0, t1, dt_max, phase_res, kappa, floor, mode, c, E):
    n = 0
    t = t0
    while t < t1:
        t += _policy_step(t, dt_max, phase_res, kappa, floor, mode, c, E)
        if t > t1:
            t = t1
        n += 1
    return n


@njit(cache=True, nogil=True)
def policy_grid_fill(t0, t1, dt_max, phase_res, kappa, floor, mode, c, E, out):
    t = t0
    out[0] = t
    k = 0
    while t < t1:
        t += _policy_step(t, dt_max, phase_res, kappa, floor, mode, c, E)
        if t > t1:
            t = t1
        k += 1
        out[k] = t


@njit(cache=True, nogil=True)
def bridge_scan(us, width, z2, out_re, out_im):
    """Pinned complex bridge on [0, width] sampled at interior times ``us``
    (per-component unit rate), by sequential conditioning on (prev, right).
    ``z2`` has shape (len(us), 2)."""
    prev_t = 0.0
    prev_re = 0.0
    prev_im = 0.0
    for i in range(len(us)):
        t = us[i]
        frac = (width - t) / (width - prev_t)
        var = (t - prev_t) * frac
        sd = np.sqrt(var)
        cur_re = prev_re * frac + sd * z2[i, 0]
        cur_im = prev_im * frac + sd * z2[i, 1]
        out_re[i] = cur_re
        out_im[i] = cur_im
        prev_t = t
        prev_re = cur_re
        prev_im = cur_im
