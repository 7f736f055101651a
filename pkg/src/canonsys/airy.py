"""The stochastic Airy operator, three ways.

The shifted and scaled operator (shift E, scale 2 sqrt(E)) is realized (i) as
the direct SDE for its fundamental solutions in original time, (ii) in polar
coordinates after the explicit time change eta compactifying [0, infinity) to
[0, 1) (or [0, 1 + 1/sqrt(E)) above the bulk-boundary beta = 2), and (iii) at
beta = infinity through Airy-function closed forms.  The module also embeds
the operator as a canonical system, computes its Weyl function by backward
shooting in the decaying WKB direction, tracks solutions along the negative
axis, and counts eigenvalues by Sturm oscillation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .canonical import LIMIT_CIRCLE, LIMIT_POINT, CoefficientMatrix, WeylFunction
from .errors import (ConvergenceError, DegeneracyError, DomainError, ParameterError)
from .integrate import StepPolicy, singular_grid
from .paths import BrownianPath, sample_on_grid, subseed
from .specfun import airy_arrays

__all__ = [
    "AiryParams", "FundamentalPair", "PolarState", "NegAxisPolar",
    "time_change", "upsilon", "simulate_fundamental_direct", "simulate_polar",
    "airy_coefficient_matrix", "beta_infinity_closed_form", "weyl_airy",
    "weyl_airy_function", "simulate_negative_axis", "count_eigenvalues_oscillation",
    "airy_system", "polar_reconstruction", "ShootingPolicy",
]

BETA_INF = math.inf


def _inv_beta(beta: float) -> float:
    return 0.0 if beta == BETA_INF else 1.0 / beta


@dataclass(frozen=True)
class AiryParams:
    """Shift E and inverse temperature beta, with the derived time-change data.

    c = 1, tau = 1 - 1/sqrt(E) when beta <= 2 (right endpoint stays limit
    point); c = 1 - 1/sqrt(E), tau = 1 when beta > 2 (the compactified system
    gains a limit-circle endpoint, approached through eps = 1/sqrt(E)).
    """

    beta: float
    E: float

    def __post_init__(self):
        if not (self.beta > 0):
            raise ParameterError("beta must be positive (inf allowed)")
        if not (self.E >= 0):
            raise ParameterError("E must be nonnegative")

    @property
    def shifted(self) -> bool:
        return self.E > 0

    def _need_time_change(self):
        if self.E <= 1:
            raise ParameterError("the time change requires E > 1")

    @property
    def c(self) -> float:
        self._need_time_change()
        return 1.0 if self.beta <= 2 else 1.0 - 1.0 / math.sqrt(self.E)

    @property
    def tau(self) -> float:
        self._need_time_change()
        return 1.0 - 1.0 / math.sqrt(self.E) if self.beta <= 2 else 1.0

    @property
    def eps(self) -> float:
        self._need_time_change()
        return 0.0 if self.beta <= 2 else 1.0 / math.sqrt(self.E)

    @property
    def t_sup(self) -> float:
        """Right end of the compactified domain, tau + 1/sqrt(E)."""
        return self.tau + 1.0 / math.sqrt(self.E)


def time_change(params: AiryParams, t):
    """(eta(t), eta'(t)): quadratic branch up to tau, logarithmic beyond.

    eta(tau) = E - 1 and eta'(tau) = 2 c sqrt(E) hold exactly by construction,
    making eta a C^1 bijection of [0, tau + 1/sqrt(E)) onto [0, infinity).
    """
    c, tau, E = params.c, params.tau, params.E
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t >= params.t_sup):
        raise DomainError("time outside [0, tau + 1/sqrt(E))")
    u = 1.0 - c * t
    eta_quad = E - E * u * u
    deta_quad = 2.0 * c * E * u
    s_log = params.t_sup - t
    with np.errstate(divide="ignore", invalid="ignore"):
        eta_log = E - 1.0 - c * np.log(E) - 2.0 * c * np.log(s_log)
        deta_log = 2.0 * c / s_log
    quad = t <= tau
    eta = np.where(quad, eta_quad, eta_log)
    deta = np.where(quad, deta_quad, deta_log)
    if eta.ndim == 0:
        return float(eta), float(deta)
    return eta, deta


def upsilon(params: AiryParams, t):
    """Logarithmic time upsilon_E(t) = -log(1 - c t)."""
    return -np.log1p(-params.c * np.asarray(t, dtype=float))


# -- direct representation ---------------------------------------------------


@dataclass
class FundamentalPair:
    """Fundamental solutions of the shifted equation in original time:
    f(0) = g'(0) = 1 and f'(0) = g(0) = 0."""

    params: AiryParams
    grid: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    g: np.ndarray
    gp: np.ndarray

    def wronskian(self) -> np.ndarray:
        return self.f * self.gp - self.fp * self.g

    def interp(self, xs):
        xs = np.asarray(xs, dtype=float)
        return tuple(np.interp(xs, self.grid, arr) for arr in (self.f, self.fp, self.g, self.gp))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,f,fp,g,gp\n")
            for row in zip(self.grid, self.f, self.fp, self.g, self.gp):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _fast_policy_grid(t0: float, t1: float, policy: StepPolicy, mode: int,
                      c: float, E: float) -> np.ndarray:
    n = _kernels.policy_grid_count(t0, t1, policy.dt_max, policy.phase_resolution,
                                   policy.singularity_factor, policy.hard_floor,
                                   mode, c, E)
    out = np.empty(n + 1)
    _kernels.policy_grid_fill(t0, t1, policy.dt_max, policy.phase_resolution,
                              policy.singularity_factor, policy.hard_floor,
                              mode, c, E, out)
    return out


def direct_grid(params: AiryParams, horizon: float, policy: StepPolicy) -> np.ndarray:
    """Policy grid in original time; the local oscillation rate is sqrt|E - t|."""
    return _fast_policy_grid(0.0, horizon, policy, 2, 1.0, params.E)


def simulate_fundamental_direct(params: AiryParams, driver: BrownianPath, horizon: float,
                                policy: StepPolicy = StepPolicy(), *, grid=None,
                                increments=None) -> FundamentalPair:
    """Joint Euler--Maruyama for (f, f', g, g') on one driver.

    Diffusion is (2/sqrt(beta)) f dB; at beta = infinity the same stepper runs
    with the noise switched off.
    """
    if grid is None:
        grid = direct_grid(params, horizon, policy)
    grid = np.asarray(grid, dtype=float)
    if increments is None:
        increments = (np.zeros(len(grid) - 1) if params.beta == BETA_INF
                      else driver.increments(grid))
    f = np.empty(len(grid))
    fp = np.empty(len(grid))
    g = np.empty(len(grid))
    gp = np.empty(len(grid))
    _kernels.fundamental_pair(grid, increments, _inv_beta(params.beta), params.E, f, fp, g, gp)
    if not np.isfinite(f[-1]) or not np.isfinite(g[-1]):
        raise FloatingPointError("fundamental pair blew up; shorten the horizon")
    return FundamentalPair(params=params, grid=grid, f=f, fp=fp, g=g, gp=gp)


def beta_infinity_closed_form(E: float, t):
    """(f, f', g, g') of the zero-temperature pair from Ai/Bi.

    f(t) = pi (Bi'(-E) Ai(t-E) - Ai'(-E) Bi(t-E)),
    g(t) = pi (Ai(-E) Bi(t-E) - Bi(-E) Ai(t-E)); the Airy Wronskian 1/pi
    makes the initial frame exact.
    """
    if E <= 0:
        raise ParameterError("E must be positive")
    t = np.asarray(t, dtype=float)
    ai0, aip0, bi0, bip0 = airy_arrays(-E)
    ai, aip, bi, bip = airy_arrays(t - E)
    f = math.pi * (bip0 * ai - aip0 * bi)
    fp = math.pi * (bip0 * aip - aip0 * bip)
    g = math.pi * (ai0 * bi - bi0 * ai)
    gp = math.pi * (ai0 * bip - bi0 * aip)
    return f, fp, g, gp


# -- polar representation ----------------------------------------------------


@dataclass
class PolarState:
    """The four polar processes on the compactified axis [0, tau].

    (rho_d, xi_d) describe the Dirichlet-type solution (phase 0 at the
    origin), (rho_n, xi_n) the Neumann-type one (phase pi/2); the conserved
    Wronskian reads exp(rho_d + rho_n) sin(xi_n - xi_d) = 1.
    """

    params: AiryParams
    grid: np.ndarray
    rho_d: np.ndarray
    xi_d: np.ndarray
    rho_n: np.ndarray
    xi_n: np.ndarray
    driver_increments: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def delta_rho(self):
        return self.rho_n - self.rho_d

    @property
    def delta_xi(self):
        return self.xi_n - self.xi_d

    @property
    def sigma_rho(self):
        return self.rho_n + self.rho_d

    @property
    def sigma_xi(self):
        return self.xi_n + self.xi_d

    def wronskian_identity(self) -> np.ndarray:
        return np.exp(self.rho_d + self.rho_n) * np.sin(self.xi_n - self.xi_d)

    def matrix_entries(self):
        """(h11, h12, h22) of the time-changed coefficient matrix, direct form:
        c * [[e^{2 rho_n} cos^2 xi_n, e^{rho_d+rho_n} cos xi_d cos xi_n],
             [..., e^{2 rho_d} cos^2 xi_d]] -- exactly rank one and PSD."""
        c = self.params.c
        cn = np.cos(self.xi_n)
        cd = np.cos(self.xi_d)
        en = np.exp(self.rho_n)
        ed = np.exp(self.rho_d)
        return c * (en * cn) ** 2, c * (en * cn) * (ed * cd), c * (ed * cd) ** 2

    def matrix_terms_at(self, idx):
        """Two-term split of the time-changed matrix: the hyperbolic-motion
        part (driven by -exp(-delta_rho - i delta_xi)) plus the oscillatory
        remainder that averages out as E grows."""
        c = self.params.c
        dr = self.delta_rho[idx]
        dx = self.delta_xi[idx]
        sr = self.sigma_rho[idx]
        sx = self.sigma_xi[idx]
        denom = 2.0 * np.exp(-dr) * np.sin(dx)
        hbm = (c / denom) * np.array([[1.0, np.exp(-dr) * np.cos(dx)],
                                      [np.exp(-dr) * np.cos(dx), np.exp(-2 * dr)]])
        osc = (c / 2.0) * np.array([
            [np.exp(2 * self.rho_n[idx]) * np.cos(2 * self.xi_n[idx]),
             np.exp(sr) * np.cos(sx)],
            [np.exp(sr) * np.cos(sx),
             np.exp(2 * self.rho_d[idx]) * np.cos(2 * self.xi_d[idx])]])
        return hbm, osc

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,rho_d,xi_d,rho_n,xi_n\n")
            for row in zip(self.grid, self.rho_d, self.xi_d, self.rho_n, self.xi_n):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def polar_grid(params: AiryParams, policy: StepPolicy, *, t_end: float = None,
               include=None) -> np.ndarray:
    """Policy grid on [0, t_end] resolving the deterministic phase drift
    2 c E^{3/2} (1 - c t)^2 and the singular 1/(1 - c t) coefficients."""
    c, E = params.c, params.E
    t_end = params.tau if t_end is None else min(t_end, params.tau)
    grid = _fast_policy_grid(0.0, t_end, policy, 1, c, E)
    if include is not None:
        grid = np.unique(np.concatenate([grid, np.asarray(include, dtype=float)]))
        grid = grid[(grid >= 0.0) & (grid <= t_end * (1 + 1e-15))]
    return grid


def simulate_polar(params: AiryParams, driver: BrownianPath,
                   policy: StepPolicy = StepPolicy(), *, t_end: float = None,
                   include=None, grid=None, milstein: bool = False) -> PolarState:
    """Coupled polar SDE paths on [0, tau] driven by one time-changed driver.

    ``milstein`` adds the single-noise Milstein corrections to both pairs,
    which matters only for strong pathwise cross-validation.
    """
    if params.beta == BETA_INF:
        # zero-temperature limit: same equations with the noise off
        dB_zero = True
    else:
        dB_zero = False
    if grid is None:
        grid = polar_grid(params, policy, t_end=t_end, include=include)
    dB = np.zeros(len(grid) - 1) if dB_zero else driver.increments(grid)
    ib = _inv_beta(params.beta)
    rho_d = np.empty(len(grid))
    xi_d = np.empty(len(grid))
    rho_n = np.empty(len(grid))
    xi_n = np.empty(len(grid))
    _kernels.polar_pair(grid, dB, ib, params.c, params.E, 0.0, rho_d, xi_d, milstein)
    _kernels.polar_pair(grid, dB, ib, params.c, params.E, 0.5 * math.pi, rho_n, xi_n, milstein)
    return PolarState(params=params, grid=grid, rho_d=rho_d, xi_d=xi_d,
                      rho_n=rho_n, xi_n=xi_n, driver_increments=dB)


def polar_reconstruction(state: PolarState):
    """(f, f', g, g') evaluated at eta(t) along the polar grid.

    f o eta = e^{rho_d} cos(xi_d) / sqrt(1 - c t),
    f' o eta = sqrt(E) sqrt(1 - c t) e^{rho_d} sin(xi_d), and the
    Neumann pair likewise with an extra 1/sqrt(E) on g.
    """
    p = state.params
    u = np.sqrt(1.0 - p.c * state.grid)
    sE = math.sqrt(p.E)
    f = np.exp(state.rho_d) * np.cos(state.xi_d) / u
    fp = sE * u * np.exp(state.rho_d) * np.sin(state.xi_d)
    g = np.exp(state.rho_n) * np.cos(state.xi_n) / (sE * u)
    gp = u * np.exp(state.rho_n) * np.sin(state.xi_n)
    return f, fp, g, gp


def airy_coefficient_matrix(params: AiryParams, source, t: float, *,
                            time_changed: bool = True) -> np.ndarray:
    """Coefficient matrix of the embedded system at one time.

    From a FundamentalPair the entries are (1/(2 sqrt E)) *
    [[sqrt(E) g^2, f g], [f g, f^2 / sqrt(E)]]; with ``time_changed`` the
    argument is compactified time and the eta' factor is included.  From a
    PolarState the two-term polar decomposition is summed.
    """
    if isinstance(source, PolarState):
        if t < source.grid[0] or t > source.grid[-1] * (1 + 1e-12):
            raise DomainError("t outside the polar grid")
        idx = int(np.argmin(np.abs(source.grid - t)))
        hbm, osc = source.matrix_terms_at(idx)
        R = hbm + osc
        if not time_changed:
            _, deta = time_change(params, source.grid[idx])
            R = R / deta
        return R
    pair: FundamentalPair = source
    if time_changed:
        x, deta = time_change(params, t)
    else:
        x, deta = float(t), 1.0
    if x < pair.grid[0] or x > pair.grid[-1] * (1 + 1e-12):
        raise DomainError("time-changed argument outside the simulated grid")
    f, _, g, _ = pair.interp(x)
    sE = math.sqrt(params.E)
    R = (1.0 / (2.0 * sE)) * np.array([[sE * g * g, f * g], [f * g, f * f / sE]])
    return deta * R


def airy_system(params: AiryParams, driver: BrownianPath,
                policy: StepPolicy = StepPolicy(), *, t_end: float = None,
                include=None, state: "PolarState" = None,
                seed_ext: int = 0) -> CoefficientMatrix:
    """Sampled time-changed coefficient matrix on [0, t_end].

    Up to tau the entries come from the polar representation; past tau (only
    reachable when t_end exceeds tau, inside the logarithmic branch) the
    fundamental pair is continued by the direct SDE in original time with a
    fresh sub-seeded driver, which matches the law because the quadratic
    branch only ever consumed the driver up to eta(tau).  Pass ``state`` to
    reuse an already simulated polar representation.
    """
    t_cap = params.tau if t_end is None else t_end
    if t_cap >= params.t_sup:
        raise DomainError("t_end must stay below tau + 1/sqrt(E)")
    if state is None:
        state = simulate_polar(params, driver, policy, t_end=min(t_cap, params.tau),
                               include=include)
    h11, h12, h22 = state.matrix_entries()
    grid = state.grid
    if t_cap > params.tau:
        if abs(state.grid[-1] - params.tau) > 1e-12:
            raise DomainError("polar state must reach tau before the log branch")
        grid_ext = singular_grid(params.tau, t_cap, policy,
                                 phase_rate=lambda t: (2.0 * params.c / (params.t_sup - t))
                                 * (math.sqrt(abs(time_change(params, t)[0] - params.E)) + 1.0),
                                 singular_scale=lambda t: params.t_sup - t)[1:]
        eta_ext, deta_ext = time_change(params, grid_ext)
        f0, fp0, g0, gp0 = (arr[-1] for arr in polar_reconstruction(state))
        x_grid = np.concatenate([[params.E - 1.0], eta_ext])
        ext_driver = sample_on_grid(subseed(driver.seed, "logbranch", seed_ext),
                                    x_grid - x_grid[0])
        dB = ext_driver.increments(x_grid - x_grid[0])
        f = np.empty(len(x_grid))
        fp = np.empty(len(x_grid))
        g = np.empty(len(x_grid))
        gp = np.empty(len(x_grid))
        _kernels.fundamental_pair(x_grid, dB, _inv_beta(params.beta), params.E, f, fp, g, gp)
        # restart from the polar endpoint frame instead of (1,0),(0,1)
        ff = f0 * f + fp0 * g
        ffp = f0 * fp + fp0 * gp
        gg = g0 * f + gp0 * g
        ggp = g0 * fp + gp0 * gp
        sE = math.sqrt(params.E)
        pref = deta_ext / (2.0 * sE)
        h11 = np.concatenate([h11, pref * sE * gg[1:] ** 2])
        h12 = np.concatenate([h12, pref * ff[1:] * gg[1:]])
        h22 = np.concatenate([h22, pref * ff[1:] ** 2 / sE])
        grid = np.concatenate([grid, grid_ext])
    classification = (LIMIT_CIRCLE, LIMIT_POINT)
    system = CoefficientMatrix.from_samples(grid, h11, h12, h22, classification=classification)
    system.meta["polar"] = state
    system.meta["params"] = params
    return system


# -- Weyl function -----------------------------------------------------------


@dataclass(frozen=True)
class ShootingPolicy:
    """Backward-shooting horizon policy: margins past the classical turning
    point, doubled until the Weyl value stabilizes."""

    margins: tuple = (10.0, 20.0, 40.0)
    dt_max: float = 1e-3
    tol: float = 1e-4
    strict: bool = True


def _shoot_grid(base: float, margin: float, dt_max: float) -> np.ndarray:
    # uniform spacing independent of the horizon, so grids for successive
    # margins are prefixes of each other and reuse the same driver knots
    T = max(base, 0.0) + margin
    n = int(math.ceil(T / dt_max))
    return np.arange(n + 1, dtype=float) * dt_max


def _shoot_batch(params: AiryParams, driver, z: np.ndarray, margin: float,
                 dt_max: float) -> np.ndarray:
    """m values for a batch of z at a fixed horizon margin."""
    if params.shifted:
        w = params.E + z / (2.0 * math.sqrt(params.E))
        scale = math.sqrt(params.E)
    else:
        w = z.astype(complex)
        scale = 1.0
    base = float(np.max(w.real))
    grid = _shoot_grid(base, margin, dt_max)
    if params.beta == BETA_INF:
        f0, fp0 = _rk4_backward(grid, w)
    else:
        dB = driver.increments(grid)
        f0 = np.empty(len(w), dtype=complex)
        fp0 = np.empty(len(w), dtype=complex)
        _kernels.backward_shooting(grid, dB, _inv_beta(params.beta),
                                   np.ascontiguousarray(w.real),
                                   np.ascontiguousarray(w.imag), f0, fp0)
    with np.errstate(divide="ignore", invalid="ignore"):
        m = fp0 / f0 / scale
    return m


def _rk4_backward(grid: np.ndarray, w: np.ndarray):
    """Vectorized RK4 backward integration of f'' = (t - w) f, noise-free."""
    f = np.ones(len(w), dtype=complex)
    fp = -np.sqrt(np.maximum(grid[-1] - w.real, 1.0)).astype(complex)
    for k in range(len(grid) - 1, 0, -1):
        h = grid[k - 1] - grid[k]  # negative
        t = grid[k]

        def deriv(tv, fv, fpv):
            return fpv, (tv - w) * fv

        k1f, k1p = deriv(t, f, fp)
        k2f, k2p = deriv(t + h / 2, f + h / 2 * k1f, fp + h / 2 * k1p)
        k3f, k3p = deriv(t + h / 2, f + h / 2 * k2f, fp + h / 2 * k2p)
        k4f, k4p = deriv(t + h, f + h * k3f, fp + h * k3p)
        f = f + h / 6 * (k1f + 2 * k2f + 2 * k3f + k4f)
        fp = fp + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        big = (np.abs(f) + np.abs(fp)) > 1e120
        if np.any(big):
            s = np.abs(f) + np.abs(fp)
            f = np.where(big, f / s, f)
            fp = np.where(big, fp / s, fp)
    return f, fp


def weyl_airy(params: AiryParams, driver, z: complex,
              policy: ShootingPolicy = ShootingPolicy()) -> complex:
    """Weyl--Titchmarsh value of the embedded (shifted) Airy system at z.

    Backward shooting in homogeneous coordinates realizes the backward
    Riccati recipe without blow-ups at zeros of f: start at the horizon in
    the decaying WKB direction f = 1, f'/f = -sqrt(T - E - Re z / 2 sqrt E),
    integrate down to 0, and read off m = (f'/f)(0) / sqrt(E) (plain
    (f'/f)(0) for the unshifted operator at E = 0).  The horizon margin
    doubles until m moves by less than the policy tolerance.
    """
    return complex(weyl_airy_function(params, driver, policy)(np.array([z]))[0])


def weyl_airy_function(params: AiryParams, driver,
                       policy: ShootingPolicy = ShootingPolicy()) -> WeylFunction:
    """Batched Weyl evaluator for one driver (see :func:`weyl_airy`)."""

    def evaluator(zs):
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        prev = _shoot_batch(params, driver, zs, policy.margins[0], policy.dt_max)
        for margin in policy.margins[1:]:
            cur = _shoot_batch(params, driver, zs, margin, policy.dt_max)
            gap = np.nanmax(np.abs(cur - prev) / (1.0 + np.abs(cur)))
            if gap < policy.tol:
                return cur
            prev = cur
        if policy.strict:
            raise ConvergenceError("Weyl shooting did not stabilize across horizons",
                                   estimates=(prev, cur))
        warnings.warn("Weyl shooting horizon budget exhausted; returning last estimate")
        return cur

    return WeylFunction(evaluator=evaluator,
                        provenance=f"limit-point shooting, beta={params.beta}, E={params.E}")


# -- negative axis -----------------------------------------------------------


@dataclass
class NegAxisPolar:
    """Log-amplitude and phase of a solution along the negative axis, t >= 1."""

    params: AiryParams
    grid: np.ndarray
    r: np.ndarray
    xi: np.ndarray
    init: tuple

    @property
    def c_f0(self) -> float:
        f0, fp0 = self.init
        return math.hypot(f0, fp0)

    def reconstruct(self):
        """f(-t) = t^{-1/4} e^r cos xi and f'(-t) = -t^{1/4} e^r sin xi."""
        quarter = self.grid ** 0.25
        f = np.exp(self.r) * np.cos(self.xi) / quarter
        fp = -quarter * np.exp(self.r) * np.sin(self.xi)
        return f, fp


def simulate_negative_axis(params: AiryParams, two_sided_driver, t_max: float,
                           init, policy: StepPolicy = StepPolicy(), *,
                           milstein: bool = False) -> NegAxisPolar:
    """Polar SDEs for a zero-energy solution on the negative real axis.

    ``init`` is (f(-1), f'(-1)); the driver's negative half supplies the
    reversed Brownian motion.  The phase equation carries the -sqrt(t) drift,
    so the grid resolves sqrt(t) oscillations.
    """
    if t_max < 1.0:
        raise ParameterError("t_max must be at least 1")
    f0, fp0 = init
    if f0 == 0.0 and fp0 == 0.0:
        raise DegeneracyError("zero initial data on the negative axis")
    r0 = 0.5 * math.log(f0 * f0 + fp0 * fp0)
    # the proof's frame is e^{r+i xi} = t^{1/4} f(-t) + i t^{-1/4} (d/dt) f(-t),
    # so the phase starts at atan2(-f'(-1), f(-1))
    xi0 = math.atan2(-fp0, f0)
    grid = _fast_policy_grid(1.0, t_max, policy, 3, 1.0, 0.0)
    rev = two_sided_driver.reversed_half() if hasattr(two_sided_driver, "reversed_half") \
        else two_sided_driver
    # the reversed path is a BM indexed from 0; our grid starts at 1
    dB = np.diff(rev.values_at(grid))
    r = np.empty(len(grid))
    xi = np.empty(len(grid))
    _kernels.negative_axis_pair(grid, dB, _inv_beta(params.beta), r0, xi0, r, xi, milstein)
    return NegAxisPolar(params=params, grid=grid, r=r, xi=xi, init=(float(f0), float(fp0)))


# -- oscillation counting ----------------------------------------------------


def count_eigenvalues_oscillation(params: AiryParams, driver, lam: float, L: float,
                                  policy: StepPolicy = StepPolicy(), *,
                                  check_stability: bool = True):
    """Sturm oscillation count: sign changes of the solution with f(0) = 0,
    f'(0) = 1 on (0, L] equal the number of eigenvalues below lam.

    Returns (count, stable) where ``stable`` compares horizons L and 2L.
    """
    if L <= lam:
        raise ParameterError("L must exceed lam so the turning point is passed")

    def run(horizon):
        grid = _fast_policy_grid(0.0, horizon, policy, 2, 1.0, lam)
        dB = (np.zeros(len(grid) - 1) if params.beta == BETA_INF
              else driver.increments(grid))
        return int(_kernels.oscillation_count(grid, dB, _inv_beta(params.beta), lam))

    count = run(L)
    stable = True
    if check_stability:
        stable = run(2.0 * L) == count
        if not stable:
            warnings.warn(f"oscillation count unstable between L={L} and 2L")
    return count, stable
