"""The probabilistic constructions and limit theorems as executable
experiments.

The centerpiece is the coupling: a geometric knot grid on the compactified
axis, the deterministic phase approximation theta, per-gap covariance
matrices of the oscillatory Gaussian increments, whitening into iid complex
steps, and bridge stitching into one complex Brownian motion W whose distance
to the running oscillatory integral is the coupling error.  On top of it sit
the convergence ladders (coefficient matrices, transfer matrices, Weyl
functions), the geometric-Brownian-motion comparison, the spectral-weights
study, and the tridiagonal matrix oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import exp1

from . import _kernels
from .airy import (AiryParams, PolarState, ShootingPolicy, airy_system, simulate_polar,
                   polar_grid, upsilon, weyl_airy_function)
from .canonical import TestFunction, stieltjes_invert
from .errors import IntegrityError, NumericError, ParameterError
from .integrate import StepPolicy
from .paths import ComplexBrownianPath, sample_on_grid, stitch_complex, subseed
from .sine import HbmPath, simulate_hbm, sine_weyl_function

__all__ = [
    "CouplingGrid", "CouplingResult", "ConvergenceReport",
    "build_grid", "deterministic_phase", "sigma_matrix", "construct_coupled_W",
    "gbm_comparison", "convergence_experiment", "spectral_weights_experiment",
    "dumitriu_edelman_oracle", "trial_seed",
]


def trial_seed(master_seed: int, command: str, trial_index: int) -> int:
    """Per-trial seed, stable under trial-count changes for prefixes."""
    return subseed(master_seed, command, trial_index)


# -- coupling grid -----------------------------------------------------------


@dataclass(frozen=True)
class CouplingGrid:
    """Geometric knot grid: c t_j = 1 - (1 + E^-p)^-j, equal spacing sigma^2
    in logarithmic time, ending at c t_N = 1 - 1/sqrt(E)."""

    E: float
    alpha: float
    c: float
    p: float
    sigma_sq: float
    N: int
    t: np.ndarray          # knot times t_0 .. t_N
    log_levels: np.ndarray  # upsilon(t_j) = j sigma^2 for j < N, exact

    @property
    def y(self) -> np.ndarray:
        """c t_j, the grid in the unscaled compactified variable."""
        return self.c * self.t

    def restricted_t(self) -> float:
        """Right end of the comparison range, c t = 1 - E^{-1/2 + alpha}."""
        return (1.0 - self.E ** (-0.5 + self.alpha)) / self.c


def build_grid(E: float, alpha: float, *, c: float = 1.0) -> CouplingGrid:
    if not E > 1:
        raise ParameterError("the coupling grid requires E > 1")
    if not 0 < alpha < 0.5:
        raise ParameterError("alpha must lie in (0, 1/2)")
    p = 2.0 * alpha
    sigma_sq = math.log1p(E ** (-p))
    N = int(math.ceil(math.log(E) / (2.0 * sigma_sq)))
    levels = sigma_sq * np.arange(N, dtype=float)
    y = -np.expm1(-levels)              # c t_j = 1 - e^{-j sigma^2}, exact
    y = np.append(y, 1.0 - E ** (-0.5))  # c t_N
    if np.any(np.diff(y) <= 0):
        raise ParameterError("degenerate coupling grid (E too small for alpha)")
    bound = 1.0 + E ** p * math.log(E) / (2.0 - E ** (-p))
    if N > bound:
        raise NumericError(f"N = {N} violates its analytic bound {bound}")
    return CouplingGrid(E=E, alpha=alpha, c=c, p=p, sigma_sq=sigma_sq, N=N,
                        t=y / c, log_levels=levels)


def deterministic_phase(E: float, t, *, c: float = 1.0):
    """theta(t) = pi/2 - (2/3) E^{3/2} (1 - (1 - c t)^3), the deterministic
    part of the Neumann phase; theta' = -2 c E^{3/2} (1 - c t)^2."""
    u = 1.0 - c * np.asarray(t, dtype=float)
    out = 0.5 * math.pi - (2.0 / 3.0) * E ** 1.5 * (1.0 - u ** 3)
    return float(out) if out.ndim == 0 else out


def _osc_integral(E: float, u_hi: float, u_lo: float) -> complex:
    """int e^{4 i theta(s)} c/(1 - c s) ds over the gap with 1 - c s running
    from u_hi down to u_lo, via the exponential-integral antiderivative.

    Substituting the phase itself as the variable turns the integrand into
    e^{-4iv} / (2 E^{3/2} - 3v), whose antiderivative is E_1 with complex
    argument; this stays accurate deep into the oscillatory regime where
    adaptive quadrature gives up.
    """
    a = 2.0 * E ** 1.5
    w_hi = a * u_hi ** 3
    w_lo = a * u_lo ** 3
    pref = np.exp(-4j * a / 3.0) / 3.0
    return complex(pref * (exp1(-1j * (4.0 / 3.0) * w_lo) - exp1(-1j * (4.0 / 3.0) * w_hi)))


def sigma_matrix(E: float, grid: CouplingGrid, j: int) -> np.ndarray:
    """Covariance of the j-th deterministic-phase Gaussian increment.

    By Ito isometry the entries are sigma^2 +/- the cosine moment and minus
    the sine moment of e^{4 i theta} against c/(1 - c s); the trace is
    2 sigma^2 exactly and sigma^4 - det equals the squared modulus of the
    oscillatory integral, bounded by (1/(4 E^{3/2}(1 - c t_j)^3))^2.
    """
    if not 1 <= j <= grid.N - 1:
        raise ParameterError(f"j must lie in [1, N-1] = [1, {grid.N - 1}]")
    u_hi = 1.0 - grid.y[j - 1]
    u_lo = 1.0 - grid.y[j]
    D = _osc_integral(E, u_hi, u_lo)
    if not np.isfinite(D):
        raise NumericError(f"oscillatory covariance integral failed at j={j}")
    s2 = grid.sigma_sq
    Sigma = np.array([[s2 + D.real, -D.imag], [-D.imag, s2 - D.real]])
    # PSD enforcement: |D| <= sigma^2 analytically; clip roundoff
    if abs(D) >= s2:
        D *= (s2 / abs(D)) * (1 - 1e-12)
        Sigma = np.array([[s2 + D.real, -D.imag], [-D.imag, s2 - D.real]])
    return Sigma


def _inv_sqrt_2x2(Sigma: np.ndarray, sigma_sq: float):
    """(sigma * Sigma^{-1/2}, fallback flag) via the closed symmetric root.

    Falls back to the identity (i.e. Sigma ~ sigma^2 I) when det Sigma drops
    below 1e-3 sigma^4, where the whitening would be ill-conditioned.
    """
    det = Sigma[0, 0] * Sigma[1, 1] - Sigma[0, 1] ** 2
    if det < 1e-3 * sigma_sq ** 2:
        return np.eye(2), True
    rd = math.sqrt(det)
    tr = Sigma[0, 0] + Sigma[1, 1]
    S = (Sigma + rd * np.eye(2)) / math.sqrt(tr + 2.0 * rd)  # Sigma^{1/2}
    det_S = rd
    S_inv = np.array([[S[1, 1], -S[0, 1]], [-S[0, 1], S[0, 0]]]) / det_S
    return math.sqrt(sigma_sq) * S_inv, False


# -- coupled construction ----------------------------------------------------


@dataclass
class CouplingResult:
    """The coupled complex Brownian motion and the coupling error functional."""

    W: ComplexBrownianPath
    error_sup: float
    polar: PolarState
    grid: CouplingGrid
    diagnostics: dict = field(default_factory=dict)


def construct_coupled_W(params: AiryParams, driver, grid: CouplingGrid,
                        policy: StepPolicy = StepPolicy(), *,
                        full_polar: bool = True, keep_fine: bool = None) -> CouplingResult:
    """Run the whole coupling for one driver.

    Simulates the polar phases on a fine grid containing the knots,
    accumulates the oscillatory increments per gap, whitens them against the
    per-gap covariances, stitches the complex Brownian motion, and evaluates
    the error functional sup |int e^{-2 i xi} sqrt(2c/(1-cs)) dB - W o
    upsilon| over the restricted range c t <= 1 - E^{-1/2+alpha}.  The
    geometric-Brownian-motion and real-part comparison suprema fall out of
    the same sweep and land in the diagnostics.
    """
    c, E = params.c, params.E
    beta = params.beta
    inv_beta = 0.0 if beta == math.inf else 1.0 / beta
    knots = grid.t
    fine = polar_grid(params, policy, t_end=float(knots[-1]), include=knots[1:])
    if keep_fine is None:
        keep_fine = len(fine) <= 2_000_000
    dB = (np.zeros(len(fine) - 1) if beta == math.inf else driver.increments(fine))

    knot_idx = np.searchsorted(fine, knots[1:])
    if np.any(np.abs(fine[knot_idx] - knots[1:]) > 1e-12):
        raise NumericError("knots are not materialized on the fine grid")
    nj = grid.N - 1  # gaps j = 1 .. N-1 feed the coupling
    rho_n = np.empty(len(fine))
    xi_n = np.empty(len(fine))
    bxi_re = np.empty(nj)
    bxi_im = np.empty(nj)
    bth_re = np.empty(nj)
    bth_im = np.empty(nj)
    run_re = np.empty(len(fine))
    run_im = np.empty(len(fine))
    _kernels.coupled_pass(fine, dB, inv_beta, c, E, knot_idx[:nj], rho_n, xi_n,
                          bxi_re, bxi_im, bth_re, bth_im, run_re, run_im)
    if full_polar:
        rho_d = np.empty(len(fine))
        xi_d = np.empty(len(fine))
        _kernels.polar_pair(fine, dB, inv_beta, c, E, 0.0, rho_d, xi_d)
    else:
        rho_d = np.zeros(len(fine))
        xi_d = np.zeros(len(fine))
    state = PolarState(params=params, grid=fine, rho_d=rho_d, xi_d=xi_d,
                       rho_n=rho_n, xi_n=xi_n, driver_increments=dB)

    sigma_sq = grid.sigma_sq
    sigma = math.sqrt(sigma_sq)
    W_steps = np.empty(nj, dtype=complex)
    fallbacks = 0
    sigma_dev = np.empty(nj)
    for j in range(1, nj + 1):
        Sig = sigma_matrix(E, grid, j)
        white, fb = _inv_sqrt_2x2(Sig, sigma_sq)
        fallbacks += fb
        sigma_dev[j - 1] = abs(sigma_sq ** 2 - (Sig[0, 0] * Sig[1, 1] - Sig[0, 1] ** 2))
        vec = white @ np.array([bth_re[j - 1], bth_im[j - 1]])
        k0 = int(knot_idx[j - 2]) if j >= 2 else 0
        dphi = xi_n[k0] - deterministic_phase(E, fine[k0], c=c)
        rot = np.exp(-2j * dphi)
        W_steps[j - 1] = rot * complex(vec[0], vec[1])

    bridge_seeds = [subseed(driver.seed if driver is not None else 0, "bridge", j)
                    for j in range(1, nj + 1)]
    W = stitch_complex(W_steps, sigma_sq, bridge_seeds,
                       tail_seed=subseed(driver.seed if driver is not None else 0, "tail"))

    # single sweep: coupling error, GBM comparison, real-part comparison
    t_restrict = grid.restricted_t()
    ups = upsilon(params, fine)
    run = run_re + 1j * run_im
    err_sup = 0.0
    gbm_sup = 0.0
    re_sup = 0.0
    sig_c = 2.0 * math.sqrt(inv_beta)
    re_hbm = 0.0  # running Re of the hyperbolic motion driven by W
    W_fine = np.empty(len(fine), dtype=complex) if keep_fine else None
    last_w = 0.0 + 0.0j
    if W_fine is not None:
        W_fine[0] = 0.0
    for j in range(1, nj + 1):
        k0 = int(knot_idx[j - 2]) if j >= 2 else 0
        k1 = int(knot_idx[j - 1])
        lo_lv = grid.log_levels[j - 1]
        hi_lv = lo_lv + sigma_sq
        inner = ups[k0 + 1:k1]
        inner = np.clip(inner, lo_lv * (1 + 1e-15), hi_lv * (1 - 1e-15)) if len(inner) else inner
        wv_inner = W.bridge_fill_grid(j - 1, inner) if len(inner) else np.empty(0, complex)
        w_knot = W.knot_values[j]
        seg_vals = np.concatenate([wv_inner, [w_knot]])
        seg_idx = np.arange(k0 + 1, k1 + 1)
        in_range = fine[seg_idx] <= t_restrict
        if np.any(in_range):
            dev = np.abs(run[seg_idx][in_range] - seg_vals[in_range])
            err_sup = max(err_sup, float(np.max(dev)))
            logG = sig_c * seg_vals[in_range].imag - sig_c ** 2 / 2.0 * ups[seg_idx][in_range]
            gdev = np.abs(2.0 * rho_n[seg_idx][in_range] + logG)
            gbm_sup = max(gbm_sup, float(np.max(gdev)))
        if full_polar:
            # Re of the hyperbolic motion: dRe = (2/sqrt b) Im B dRe W, with
            # Im B the exact geometric BM of Im W, stepped on the fine image
            seg_all = np.concatenate([[last_w], seg_vals])
            imb = np.exp(sig_c * seg_all[:-1].imag
                         - sig_c ** 2 / 2.0 * ups[np.arange(k0, k1)])
            incs = np.diff(seg_all.real)
            re_path = re_hbm + np.cumsum(sig_c * imb * incs)
            re_hbm = float(re_path[-1])
            if np.any(in_range):
                dr = rho_n[seg_idx][in_range] - rho_d[seg_idx][in_range]
                dx = xi_n[seg_idx][in_range] - xi_d[seg_idx][in_range]
                lhs = -np.exp(-dr) * np.cos(dx)
                rdev = np.abs(lhs - re_path[in_range])
                re_sup = max(re_sup, float(np.max(rdev)))
        if W_fine is not None:
            W_fine[seg_idx] = seg_vals
        last_w = w_knot
    if W_fine is not None and nj >= 1:
        W_fine[int(knot_idx[nj - 1]) + 1:] = np.nan  # beyond the stitched knots

    diagnostics = {
        "sigma_fallbacks": fallbacks,
        "sigma_det_deviation_max": float(np.max(sigma_dev)) if nj else 0.0,
        "gbm_sup": gbm_sup,
        "realpart_sup": re_sup,
        "t_restrict": t_restrict,
    }
    if keep_fine:
        diagnostics["fine_upsilon"] = ups
        diagnostics["W_fine"] = W_fine
    return CouplingResult(W=W, error_sup=err_sup, polar=state, grid=grid,
                          diagnostics=diagnostics)


def gbm_comparison(params: AiryParams, polar: PolarState, W, *, alpha: float = 0.2) -> float:
    """sup |2 rho_n(t) + log G(t)| over c t <= 1 - E^{-1/2+alpha}, with
    G = exp((2/sqrt b) Im W o upsilon - (2/b) upsilon)."""
    if params.beta == math.inf:
        sig_c = 0.0
    else:
        sig_c = 2.0 / math.sqrt(params.beta)
    t_restrict = (1.0 - params.E ** (-0.5 + alpha)) / params.c
    sel = polar.grid <= t_restrict
    ups = upsilon(params, polar.grid[sel])
    imw = W.values_at(ups).imag if sig_c > 0 else np.zeros(len(ups))
    logG = sig_c * imw - sig_c ** 2 / 2.0 * ups
    return float(np.max(np.abs(2.0 * polar.rho_n[sel] + logG)))


# -- convergence ladders -----------------------------------------------------


def _quantiles(xs) -> dict:
    xs = np.asarray(xs, dtype=float)
    p25, p50, p75 = np.percentile(xs, [25, 50, 75])
    return {"p25": float(p25), "p50": float(p50), "p75": float(p75)}


@dataclass
class ConvergenceReport:
    beta: float
    alpha: float
    ladder: list
    trials: int
    seed: int

    def to_json(self) -> str:
        payload = {
            "beta": self.beta if self.beta != math.inf else "inf",
            "alpha": self.alpha,
            "ladder": self.ladder,
            "trials": self.trials,
            "seed": self.seed,
        }
        return json.dumps(payload, sort_keys=False, separators=(", ", ": "))

    def median_d_phi(self) -> list:
        return [rung["d_phi"]["p50"] for rung in self.ladder]

    def median_weyl(self) -> list:
        return [rung["weyl_dist"]["p50"] for rung in self.ladder]

    def median_tm(self) -> list:
        return [rung["tm_dist"]["p50"] for rung in self.ladder]


def _coupled_trial_statistics(params: AiryParams, seed: int, phi_set, probes_z,
                              tm_probes_t, policy: StepPolicy, alpha: float):
    """One coupled pair and its three comparison statistics."""
    cg = build_grid(params.E, alpha, c=params.c)
    beta_inf = params.beta == math.inf
    if beta_inf:
        driver = None
    else:
        fine_probe = polar_grid(params, policy, t_end=float(cg.t[-1]), include=cg.t[1:])
        driver = sample_on_grid(seed, fine_probe)
    res = construct_coupled_W(params, driver, cg, policy, full_polar=True, keep_fine=True)
    state = res.polar
    t_restrict = res.diagnostics["t_restrict"]

    # the comparison interval: test functions live inside [0, 0.9]-ish
    t_support = max(max(phi.support[1] for phi in phi_set), max(tm_probes_t))
    t_end = max(t_support, t_restrict)
    airy = airy_system(params, driver if driver is not None else _NullDriver(seed),
                       policy, t_end=min(t_end, params.tau + 0.49 / math.sqrt(params.E)),
                       state=state if t_end <= state.grid[-1] + 1e-12 else None,
                       include=cg.t[1:])
    state = airy.meta["polar"]

    # sine side on the shared probability space: hyperbolic motion driven by W
    s_need = float(-np.log1p(-min(t_end, 1.0 - 1e-9)))
    s_img = -np.log1p(-airy.grid[airy.grid < 1.0 - 1e-12])
    s_img = s_img[s_img <= s_need * (1 + 1e-12)]
    hbm = simulate_hbm(params.beta, res.W, float(s_img[-1]), s_grid=s_img)
    ts = 1.0 - np.exp(-hbm.s_grid)
    sine_h11 = 1.0 / (2.0 * hbm.im)
    sine_h12 = -hbm.re / (2.0 * hbm.im)
    sine_h22 = (hbm.re ** 2 + hbm.im ** 2) / (2.0 * hbm.im)

    # d_phi on the fine grid (the grid resolves the oscillations by policy)
    n = len(ts)
    a11, a12, a22 = airy.h11[:n], airy.h12[:n], airy.h22[:n]
    d_vals = []
    for phi in phi_set:
        prof = phi.scalar_profile(ts)
        c1, c2 = phi.components
        quad = (abs(c1) ** 2 * (a11 - sine_h11) + 2 * np.real(np.conj(c1) * c2) * (a12 - sine_h12)
                + abs(c2) ** 2 * (a22 - sine_h22))
        d_vals.append(abs(float(np.trapezoid(prof ** 2 * quad, ts))))
    d_stat = max(d_vals)

    # transfer matrices on the common truncation, probed at (t, z)
    zs = np.asarray(probes_z, dtype=complex)
    tm_stat = 0.0
    for tp in tm_probes_t:
        if tp > min(t_restrict, ts[-1]):
            continue
        Ta = _transfer_to(airy.grid, airy.h11, airy.h12, airy.h22, tp, zs)
        Tsn = _transfer_to(ts, sine_h11, sine_h12, sine_h22, tp, zs)
        tm_stat = max(tm_stat, float(np.max(np.abs(Ta - Tsn))))

    # Weyl functions at the probes, both truncated at the same time
    t_m = min(t_restrict, ts[-1])
    m_airy = _disc_midpoint(airy.grid, airy.h11, airy.h12, airy.h22, t_m, zs)
    m_sine = _disc_midpoint(ts, sine_h11, sine_h12, sine_h22, t_m, zs)
    weyl_stat = float(np.max(np.abs(m_airy - m_sine)))
    return res, d_stat, tm_stat, weyl_stat


class _NullDriver:
    """Stands in for the driver at beta = infinity (only the seed is used)."""

    def __init__(self, seed):
        self.seed = seed

    def increments(self, grid):
        return np.zeros(len(np.asarray(grid)) - 1)


def _transfer_to(grid, h11, h12, h22, t, zs):
    k = int(np.searchsorted(grid, t * (1 + 1e-15), side="right"))
    sub = slice(0, max(k, 2))
    out = np.empty((len(zs), 2, 2), dtype=complex)
    _kernels.transfer_product_batch(np.ascontiguousarray(grid[sub]),
                                    np.ascontiguousarray(h11[sub]),
                                    np.ascontiguousarray(h12[sub]),
                                    np.ascontiguousarray(h22[sub]),
                                    np.ascontiguousarray(zs.real),
                                    np.ascontiguousarray(zs.imag), out)
    return out


def _disc_midpoint(grid, h11, h12, h22, t, zs):
    T = _transfer_to(grid, h11, h12, h22, t, zs)
    m0 = -T[:, 1, 1] / T[:, 1, 0]
    m1 = -T[:, 0, 1] / T[:, 0, 0]
    return 0.5 * (m0 + m1)


def convergence_experiment(beta: float, E_list, phi_set, trials: int, master_seed: int,
                           probes_z=(1j,), *, alpha: float = 0.2,
                           policy: StepPolicy = StepPolicy(),
                           tm_probes_t=(0.25, 0.5)) -> ConvergenceReport:
    """Monte Carlo instantiation of the operator-convergence theorems.

    Per trial: couple the Airy driver to a complex Brownian motion, build the
    hyperbolic motion from it, and record the vague distance against the test
    functions, the transfer-matrix sup distance on the probe set, and the
    Weyl distance at the probe points.  At beta = infinity everything is
    deterministic and a single pass per E suffices.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if not phi_set:
        phi_set = [TestFunction(support=(0.0, 0.9), components=(1.0, 1.0))]
    eff_trials = 1 if beta == math.inf else trials
    ladder = []
    for E in E_list:
        params = AiryParams(beta, float(E))
        d_all, tm_all, weyl_all = [], [], []
        for trial in range(eff_trials):
            seed = trial_seed(master_seed, f"converge:{float(E)}", trial)
            _, d_stat, tm_stat, weyl_stat = _coupled_trial_statistics(
                params, seed, phi_set, probes_z, tm_probes_t, policy, alpha)
            d_all.append(d_stat)
            tm_all.append(tm_stat)
            weyl_all.append(weyl_stat)
        ladder.append({
            "E": float(E),
            "d_phi": _quantiles(d_all),
            "tm_dist": _quantiles(tm_all),
            "weyl_dist": _quantiles(weyl_all),
        })
    return ConvergenceReport(beta=beta, alpha=alpha, ladder=ladder,
                             trials=eff_trials, seed=master_seed)


# -- spectral weights --------------------------------------------------------


def spectral_weights_experiment(beta: float, E: float, trials: int, window,
                                master_seed: int, *,
                                eps_schedule=None,
                                shooting: ShootingPolicy = None):
    """Pooled spectral atoms of the shifted Airy system over many drivers.

    Per trial: Weyl function by backward shooting, Stieltjes inversion on the
    window, atoms pooled across trials.  Inversion integrity failures are
    counted, not fatal.  Returns (records, failures) with records a list of
    (trial, location, weight).
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    lo, hi = window
    params = AiryParams(beta, E)
    sE = math.sqrt(E)
    if eps_schedule is None:
        eps_schedule = (0.3, 0.1, 0.025)
    if shooting is None:
        shooting = ShootingPolicy(margins=(10.0, 15.0), tol=2e-3, strict=False)
    base = E + hi / (2.0 * sE) if E > 0 else hi
    n_pts = int(math.ceil((max(base, 0.0) + shooting.margins[-1]) / shooting.dt_max))
    grid_max = np.arange(n_pts + 1, dtype=float) * shooting.dt_max
    records = []
    failures = 0
    for trial in range(trials):
        seed = trial_seed(master_seed, "weights", trial)
        driver = sample_on_grid(seed, grid_max)
        m = weyl_airy_function(params, driver, shooting)
        try:
            measure = stieltjes_invert(m, window, eps_schedule)
        except IntegrityError:
            failures += 1
            continue
        for loc, w in zip(measure.locations, measure.weights):
            records.append((trial, float(loc), float(w)))
    return records, failures


def airy_edge_atoms(beta: float, E: float, trials: int, master_seed: int, *,
                    n_atoms: int = 3, lambda_window=(-4.0, 10.0),
                    shooting: ShootingPolicy = None):
    """Lowest spectral atoms of the shifted system, in operator units.

    Scans the z-window that maps onto ``lambda_window`` for the unscaled
    operator (lambda = E + z / (2 sqrt E)), inverts, and returns per trial the
    ``n_atoms`` smallest atom locations converted back to operator units.
    These estimate the low edge of the spectrum, the quantity the tridiagonal
    matrix model reproduces as its negated edge-rescaled eigenvalues.
    """
    params = AiryParams(beta, E)
    sE = math.sqrt(E)
    w_lo, w_hi = lambda_window
    z_window = (2.0 * sE * (w_lo - E), 2.0 * sE * (w_hi - E))
    eps = tuple(0.3 * 2.0 * sE * f for f in (1.0, 1.0 / 3.0, 1.0 / 12.0))
    if shooting is None:
        shooting = ShootingPolicy(margins=(10.0, 15.0), tol=2e-3, strict=False)
    base = max(w_hi, 0.0)
    n_pts = int(math.ceil((base + shooting.margins[-1]) / shooting.dt_max))
    grid_max = np.arange(n_pts + 1, dtype=float) * shooting.dt_max
    out = []
    failures = 0
    for trial in range(trials):
        seed = trial_seed(master_seed, "edge-atoms", trial)
        driver = sample_on_grid(seed, grid_max)
        m = weyl_airy_function(params, driver, shooting)
        try:
            measure = stieltjes_invert(m, z_window, eps)
        except IntegrityError:
            failures += 1
            continue
        lam_ops = np.sort(E + measure.locations / (2.0 * sE))
        if len(lam_ops) < n_atoms:
            failures += 1
            continue
        out.append(lam_ops[:n_atoms])
    return np.array(out), failures


# -- tridiagonal oracle ------------------------------------------------------


def dumitriu_edelman_oracle(beta: float, N: int, seed: int):
    """Eigenvalues, spectral weights and edge rescaling of the tridiagonal
    beta-ensemble model.

    The (4 N beta)^{-1/2}-normalized matrix has N(0, 2) diagonal and chi
    off-diagonals with beta(N-1), ..., beta degrees of freedom; spectral
    weights are the squared first components of the orthonormal eigenvectors
    (Dirichlet(beta/2, ..., beta/2), independent of the eigenvalues), and the
    edge rescaling is 2 N^{2/3} (lambda - 1).
    """
    if N < 2:
        raise ParameterError("N must be at least 2")
    if not (0 < beta < math.inf):
        raise ParameterError("the tridiagonal model needs finite positive beta")
    rng = np.random.Generator(np.random.PCG64(subseed(seed, "dumitriu")))
    diag = rng.normal(0.0, math.sqrt(2.0), N)
    dof = beta * np.arange(N - 1, 0, -1, dtype=float)
    off = np.sqrt(rng.chisquare(dof))
    scale = 1.0 / math.sqrt(4.0 * N * beta)
    vals, vecs = eigh_tridiagonal(diag * scale, off * scale)
    weights = vecs[0, :] ** 2
    weights = weights / np.sum(weights)
    edge = 2.0 * N ** (2.0 / 3.0) * (vals - 1.0)
    return vals, weights, edge
