"""Pathwise SDE stepping and deterministic matrix ODE stepping.

Euler--Maruyama against a fixed :class:`~canonsys.paths.BrownianPath` gives
the strong pathwise solutions; classical RK4 handles the smooth 2x2 matrix
equations (transfer matrices, Sturm--Liouville frames).  Step control is
carried by :class:`StepPolicy`, whose caps encode the singular-in-time
coefficients of the compactified systems: a phase-resolution cap on the
deterministic phase drift and a proportional cap against the 1/(1 - c t)
factors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowUpWarning, ParameterError, StepFloorWarning

__all__ = ["StepPolicy", "SamplePath", "integrate_sde", "integrate_matrix_ode", "singular_grid"]


@dataclass(frozen=True)
class StepPolicy:
    """Step-size caps; the step taken is the minimum of all applicable caps.

    ``phase_resolution`` bounds |phase drift| * dt, ``singularity_factor``
    bounds dt / (1 - c t) when a compactified endpoint is in play.
    """

    dt_max: float = 1e-3
    phase_resolution: float = 0.1
    singularity_factor: float = 0.05
    hard_floor: float = 1e-14

    def __post_init__(self):
        if min(self.dt_max, self.phase_resolution, self.singularity_factor, self.hard_floor) <= 0:
            raise ParameterError("all StepPolicy fields must be positive")

    def with_(self, **kw) -> "StepPolicy":
        return replace(self, **kw)


@dataclass
class SamplePath:
    """A simulated trajectory: strictly increasing grid and per-time states.

    ``blowup_time`` is set (and the arrays truncated to the last finite
    state) when the integration produced a non-finite value.
    """

    grid: np.ndarray
    states: np.ndarray
    blowup_time: float | None = None
    step_floor_hits: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.states = np.asarray(self.states)

    @property
    def final(self):
        return self.states[-1]

    def to_csv(self, path) -> None:
        states = np.atleast_2d(self.states.T).T
        with open(path, "w") as fh:
            fh.write("t," + ",".join(f"x{i}" for i in range(states.shape[1])) + "\n")
            for t, row in zip(self.grid, states):
                fh.write(",".join(repr(float(v)) for v in np.concatenate([[t], np.atleast_1d(row)])) + "\n")


def singular_grid(t0: float, t1: float, policy: StepPolicy, *, phase_rate=None,
                  singular_scale=None) -> np.ndarray:
    """Build the grid the policy implies on [t0, t1].

    ``phase_rate(t)`` is the magnitude of the deterministic phase drift;
    ``singular_scale(t)`` the distance to the singular time (e.g. 1 - c t).
    The returned grid is a pure function of its arguments.
    """
    ts = [t0]
    floor_hits = 0
    t = t0
    while t < t1:
        dt = policy.dt_max
        if phase_rate is not None:
            rate = abs(phase_rate(t))
            if rate > 0:
                dt = min(dt, policy.phase_resolution / rate)
        if singular_scale is not None:
            dt = min(dt, policy.singularity_factor * abs(singular_scale(t)))
        if dt < policy.hard_floor:
            dt = policy.hard_floor
            floor_hits += 1
        t = min(t + dt, t1)
        ts.append(t)
    grid = np.array(ts)
    if floor_hits:
        warnings.warn(f"step floor hit {floor_hits} times on [{t0}, {t1}]", StepFloorWarning)
    grid.flags.writeable = False
    return grid


def integrate_sde(drift, diffusion, driver, interval, init, policy: StepPolicy,
                  *, grid=None, milstein: bool = False) -> SamplePath:
    """Euler--Maruyama for dX = drift(X,t) dt + diffusion(X,t) dB.

    The driver is queried (and refined) exactly at the grid points, so the
    result is deterministic in (driver seed, policy).  With ``milstein=True``
    and scalar state, the Milstein correction is added using a central
    difference of the diffusion coefficient in the state variable.
    """
    t0, t1 = interval
    init = np.asarray(init, dtype=float)
    if not np.all(np.isfinite(init)):
        raise ParameterError("initial state must be finite")
    if grid is None:
        grid = singular_grid(t0, t1, policy)
    else:
        grid = np.asarray(grid, dtype=float)
    dB = driver.increments(grid)
    scalar = init.ndim == 0
    x = init.copy()
    states = np.empty((len(grid),) + init.shape, dtype=float)
    states[0] = x
    blowup = None
    for k in range(len(grid) - 1):
        t, dt = grid[k], grid[k + 1] - grid[k]
        a = np.asarray(drift(x, t), dtype=float)
        b = np.asarray(diffusion(x, t), dtype=float)
        step = x + a * dt + b * dB[k]
        if milstein and scalar:
            h = 1e-6 * (1.0 + abs(float(x)))
            bprime = (float(diffusion(x + h, t)) - float(diffusion(x - h, t))) / (2 * h)
            step = step + 0.5 * float(b) * bprime * (dB[k] ** 2 - dt)
        x = step
        if not np.all(np.isfinite(x)):
            blowup = float(grid[k + 1])
            states = states[: k + 1]
            grid = grid[: k + 1]
            warnings.warn(f"integration blew up at t={blowup}", BlowUpWarning)
            break
        states[k + 1] = x
    return SamplePath(grid=np.array(grid), states=states, blowup_time=blowup)


def _expm_traceless(M: np.ndarray) -> np.ndarray:
    """exp(M) for traceless 2x2 M via Cayley--Hamilton: exact determinant 1."""
    d = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    w = np.sqrt(complex(d))
    if abs(w) < 1e-6:
        c = 1 - d / 2 + d * d / 24
        s = 1 - d / 6 + d * d / 120
    else:
        c = np.cos(w)
        s = np.sin(w) / w
    return c * np.eye(2) + s * M


def integrate_matrix_ode(rhs, interval, init, *, dt_max: float = 1e-3,
                         grid=None, keep_path: bool = False):
    """Classical RK4 for T' = M(t) T with 2x2 complex M(t) = rhs(t).

    Returns the final matrix, or a SamplePath of matrices if ``keep_path``.
    """
    t0, t1 = interval
    if grid is None:
        n = max(1, int(np.ceil((t1 - t0) / dt_max)))
        grid = np.linspace(t0, t1, n + 1)
    else:
        grid = np.asarray(grid, dtype=float)
    T = np.asarray(init, dtype=complex).copy()
    if keep_path:
        path = np.empty((len(grid), 2, 2), dtype=complex)
        path[0] = T
    for k in range(len(grid) - 1):
        t, h = grid[k], grid[k + 1] - grid[k]
        k1 = rhs(t) @ T
        k2 = rhs(t + h / 2) @ (T + h / 2 * k1)
        k3 = rhs(t + h / 2) @ (T + h / 2 * k2)
        k4 = rhs(t + h) @ (T + h * k3)
        T = T + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(T.view(float))):
            raise FloatingPointError(f"matrix ODE blew up at t={grid[k + 1]}")
        if keep_path:
            path[k + 1] = T
    if keep_path:
        return SamplePath(grid=grid, states=path)
    return T


def transfer_product(grid: np.ndarray, h11: np.ndarray, h12: np.ndarray, h22: np.ndarray,
                     z: complex, *, keep_path: bool = False):
    """Transfer matrix of a sampled coefficient matrix by frozen exponentials.

    Solves J T' = -z H T, i.e. T' = z J H T, advancing with the exact
    exponential of the (traceless) frozen generator on each cell, so
    det T = 1 to roundoff regardless of step size.  Cell coefficients are
    the trapezoidal average of the endpoint samples.
    """
    T = np.eye(2, dtype=complex)
    if keep_path:
        out = np.empty((len(grid), 2, 2), dtype=complex)
        out[0] = T
    M = np.empty((2, 2), dtype=complex)
    for k in range(len(grid) - 1):
        dt = grid[k + 1] - grid[k]
        a = 0.5 * (h11[k] + h11[k + 1]) * dt
        b = 0.5 * (h12[k] + h12[k + 1]) * dt
        c = 0.5 * (h22[k] + h22[k + 1]) * dt
        # z J H with J = [[0,-1],[1,0]]:  [[-z b, -z c], [z a, z b]]
        M[0, 0] = -z * b
        M[0, 1] = -z * c
        M[1, 0] = z * a
        M[1, 1] = z * b
        T = _expm_traceless(M) @ T
        if keep_path:
            out[k + 1] = T
    if keep_path:
        return out
    return T
