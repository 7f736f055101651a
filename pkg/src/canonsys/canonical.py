"""Canonical systems: coefficient matrices, transfer matrices, vague-topology
metrics, Weyl--Titchmarsh functions, Stieltjes inversion and the resolvent.

A canonical system is J u' = -z H u on an interval with H symmetric positive
semi-definite; everything spectral about it is read off the transfer matrix
T (the matrix solution started at the identity) and the Weyl--Titchmarsh
function m, a generalized Herglotz function whose poles sit at eigenvalues
and whose Stieltjes inversion yields the spectral measure.  The left
boundary condition is e0* J u(a) = 0 throughout.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize as sp_optimize

from .errors import (ClassificationError, ConvergenceError, DegeneracyError, DomainError,
                     IntegrityError, ParameterError)
from .integrate import integrate_matrix_ode, transfer_product

__all__ = [
    "LIMIT_CIRCLE", "LIMIT_POINT",
    "CoefficientMatrix", "TransferMatrix", "WeylFunction", "SpectralMeasure",
    "TestFunction", "hat_basis", "HorizonPolicy",
    "transfer_matrix", "d_phi", "vague_metric", "VagueMetric",
    "weyl_limit_circle", "weyl_limit_point", "stieltjes_invert",
    "apply_resolvent", "sl_to_canonical", "herglotz_probe_grid", "check_herglotz",
]

J = np.array([[0.0, -1.0], [1.0, 0.0]])
LIMIT_CIRCLE = "limit-circle"
LIMIT_POINT = "limit-point"
PSD_TOL = 1e-12
INF = complex(np.inf, 0.0)


def _e(theta: float) -> np.ndarray:
    return np.array([np.cos(theta), np.sin(theta)])


def projective(vec) -> complex:
    """P(z, w) = z/w, with the point at infinity when w vanishes."""
    z, w = complex(vec[0]), complex(vec[1])
    if w == 0 or abs(w) < 1e-300 * abs(z):
        return INF
    return z / w


@dataclass
class CoefficientMatrix:
    """Symmetric PSD 2x2 matrix-valued function of time on [a, b].

    Either evaluator-backed (``fn(t) -> 2x2``) or grid-sampled (arrays of the
    three independent entries).  ``classification`` holds the endpoint types
    at (a, b); ``trace_integrable_near_b`` records integrability of tr H near
    b, which is what the right-endpoint classification means.
    """

    a: float
    b: float
    fn: object = None
    grid: np.ndarray = None
    h11: np.ndarray = None
    h12: np.ndarray = None
    h22: np.ndarray = None
    classification: tuple = (LIMIT_CIRCLE, LIMIT_CIRCLE)
    trace_integrable_near_b: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.fn is None and self.grid is None:
            raise ParameterError("need an evaluator or samples")
        if self.grid is not None:
            self.grid = np.asarray(self.grid, dtype=float)
            self.h11 = np.asarray(self.h11, dtype=float)
            self.h12 = np.asarray(self.h12, dtype=float)
            self.h22 = np.asarray(self.h22, dtype=float)
        self.trace_integrable_near_b = (self.classification[1] == LIMIT_CIRCLE)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_callable(cls, a, b, fn, classification=(LIMIT_CIRCLE, LIMIT_CIRCLE)):
        return cls(a=a, b=b, fn=fn, classification=classification)

    @classmethod
    def constant(cls, a, b, matrix, classification=(LIMIT_CIRCLE, LIMIT_CIRCLE)):
        matrix = np.asarray(matrix, dtype=float)
        return cls(a=a, b=b, fn=lambda t: matrix, classification=classification)

    @classmethod
    def from_samples(cls, grid, h11, h12, h22, classification=(LIMIT_CIRCLE, LIMIT_POINT)):
        grid = np.asarray(grid, dtype=float)
        return cls(a=float(grid[0]), b=float(grid[-1]), grid=grid,
                   h11=h11, h12=h12, h22=h22, classification=classification)

    @property
    def sampled(self) -> bool:
        return self.grid is not None

    # -- evaluation ---------------------------------------------------------

    def entries_at(self, ts):
        """(h11, h12, h22) at the given times."""
        ts = np.asarray(ts, dtype=float)
        if self.sampled:
            h11 = np.interp(ts, self.grid, self.h11)
            h12 = np.interp(ts, self.grid, self.h12)
            h22 = np.interp(ts, self.grid, self.h22)
            return h11, h12, h22
        vals = np.array([np.asarray(self.fn(t), dtype=float) for t in np.atleast_1d(ts)])
        return vals[..., 0, 0], vals[..., 0, 1], vals[..., 1, 1]

    def matrix_at(self, t: float) -> np.ndarray:
        h11, h12, h22 = self.entries_at(np.array([t]))
        return np.array([[h11[0], h12[0]], [h12[0], h22[0]]])

    def validate(self, n_probe: int = 257, rng=None) -> None:
        """Check symmetry/PSD (eigenvalues >= -1e-12) and non-triviality."""
        b_eff = self.b if np.isfinite(self.b) else self.a + 1.0
        ts = self.grid if self.sampled else np.linspace(self.a, b_eff, n_probe)
        h11, h12, h22 = self.entries_at(ts)
        tr = h11 + h22
        det = h11 * h22 - h12 ** 2
        lam_min = 0.5 * (tr - np.sqrt(np.maximum(tr ** 2 - 4 * det, 0.0)))
        if np.any(lam_min < -PSD_TOL * np.maximum(1.0, tr)):
            raise IntegrityError("coefficient matrix is not PSD within tolerance")
        if np.all(tr == 0):
            raise IntegrityError("coefficient matrix vanishes identically on the probe grid")

    def to_csv(self, path, ts=None) -> None:
        ts = self.grid if (ts is None and self.sampled) else np.asarray(ts, dtype=float)
        h11, h12, h22 = self.entries_at(ts)
        with open(path, "w") as fh:
            fh.write("t,h11,h12,h22\n")
            for row in zip(ts, h11, h12, h22):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


@dataclass
class TransferMatrix:
    """Evaluator (t, z) -> T_H(t, z) attached to one system."""

    system: CoefficientMatrix
    dt_max: float = 1e-3

    def __call__(self, t: float, z: complex) -> np.ndarray:
        return transfer_matrix(self.system, t, z, dt_max=self.dt_max)


def _grid_for(system: CoefficientMatrix, t: float, dt_max: float) -> np.ndarray:
    if system.sampled:
        g = system.grid
        sub = g[g <= t * (1 + 1e-15)]
        if len(sub) < 2 or sub[-1] < t * (1 - 1e-12) - 1e-300:
            raise DomainError(f"t={t} outside sampled grid")
        return sub
    n = max(1, int(np.ceil((t - system.a) / dt_max)))
    return np.linspace(system.a, t, n + 1)


def transfer_matrix(system: CoefficientMatrix, t: float, z: complex, *,
                    dt_max: float = 1e-3, keep_path: bool = False):
    """T_H(t, z): solution of J T' = -z H T with T(a) = I.

    Smooth evaluator systems integrate with RK4; grid-sampled systems use the
    frozen-exponential product, which keeps det T = 1 to roundoff.
    """
    if t < system.a or (np.isfinite(system.b) and t > system.b * (1 + 1e-12) + 1e-300):
        raise DomainError(f"t={t} outside [{system.a}, {system.b}]")
    if t == system.a:
        return np.eye(2, dtype=complex)
    if system.sampled:
        grid = _grid_for(system, t, dt_max)
        return transfer_product(grid, system.h11, system.h12, system.h22, z, keep_path=keep_path)

    def rhs(s):
        H = system.fn(s)
        return z * (J @ H)

    return integrate_matrix_ode(rhs, (system.a, t), np.eye(2, dtype=complex),
                                dt_max=dt_max, keep_path=keep_path)


# -- vague topology ---------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """Compactly supported continuous C^2-valued test function.

    ``components`` scales a scalar profile into the two vector entries; the
    profile is the triangular hat min(t - s0, s1 - t) on the support.
    """

    support: tuple
    components: tuple = (1.0, 0.0)
    index: int = 1

    def __call__(self, ts):
        ts = np.asarray(ts, dtype=float)
        s0, s1 = self.support
        prof = np.maximum(np.minimum(ts - s0, s1 - ts), 0.0)
        return np.multiply.outer(prof, np.asarray(self.components, dtype=complex))

    def scalar_profile(self, ts):
        s0, s1 = self.support
        return np.maximum(np.minimum(np.asarray(ts, dtype=float) - s0, s1 - ts), 0.0)


def hat_basis(interval, count: int) -> list[TestFunction]:
    """A concrete countable dense family: dyadically scaled/translated hats
    in each coordinate direction (and the diagonal), enumerated level by
    level.  Any fixed truncation of it drives the vague metric.
    """
    a, b = interval
    comps = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
    out = []
    level = 0
    while len(out) < count:
        n_cells = 2 ** level
        width = (b - a) / n_cells
        for cell in range(n_cells):
            for comp in comps:
                if len(out) >= count:
                    return out
                s0 = a + cell * width
                out.append(TestFunction(support=(s0, s0 + width), components=comp,
                                        index=len(out) + 1))
        level += 1
    return out


def d_phi(H1: CoefficientMatrix, H2: CoefficientMatrix, phi: TestFunction,
          *, quad_tol: float = 1e-9, grid=None) -> float:
    """|integral of phi*(t) (H1 - H2)(t) phi(t) dt| over the common interval."""
    if abs(H1.a - H2.a) > 1e-12:
        raise ParameterError("systems must share their interval")
    s0, s1 = phi.support
    lo = max(s0, H1.a)
    hi = min(s1, min(H1.b, H2.b) if np.isfinite(min(H1.b, H2.b)) else s1)
    if hi <= lo:
        return 0.0

    def integrand(ts):
        ts = np.asarray(ts, dtype=float)
        a11, a12, a22 = H1.entries_at(ts)
        b11, b12, b22 = H2.entries_at(ts)
        prof = phi.scalar_profile(ts)
        c1, c2 = phi.components
        quad = (abs(c1) ** 2 * (a11 - b11) + 2 * np.real(np.conj(c1) * c2) * (a12 - b12)
                + abs(c2) ** 2 * (a22 - b22))
        return prof ** 2 * quad

    if grid is None and not (H1.sampled or H2.sampled):
        val, _ = sp_integrate.quad(lambda t: float(integrand(t)), lo, hi,
                                   epsabs=quad_tol, epsrel=quad_tol, limit=400)
        return abs(val)
    if grid is None:
        pieces = [g.grid for g in (H1, H2) if g.sampled]
        grid = np.unique(np.concatenate(pieces))
        grid = grid[(grid >= lo) & (grid <= hi)]
        grid = np.unique(np.concatenate([[lo], grid, [hi]]))
    vals = integrand(grid)
    return abs(float(np.trapezoid(vals, grid)))


@dataclass(frozen=True)
class VagueMetric:
    value: float
    tail_bound: float

    def __float__(self):
        return self.value


def vague_metric(H1: CoefficientMatrix, H2: CoefficientMatrix, basis) -> VagueMetric:
    """Truncated metric sum_k 2^-k d_k/(1 + d_k) with its tail bound 2^-K."""
    if not basis:
        raise ParameterError("basis must be nonempty")
    total = 0.0
    for k, phi in enumerate(basis, start=1):
        d = d_phi(H1, H2, phi)
        total += 2.0 ** (-k) * d / (1.0 + d)
    return VagueMetric(value=total, tail_bound=2.0 ** (-len(basis)))


# -- Weyl--Titchmarsh -------------------------------------------------------


@dataclass
class WeylFunction:
    """An evaluable generalized Herglotz function attached to one system.

    ``evaluator`` maps an array of points of the upper half-plane to complex
    values (vectorized).  ``provenance`` records how it was built.
    """

    evaluator: object
    provenance: str = ""
    meta: dict = field(default_factory=dict)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        vals = np.asarray(self.evaluator(np.atleast_1d(z)), dtype=complex)
        return complex(vals[0]) if scalar else vals

    def check_herglotz(self, tol: float = 1e-6) -> float:
        """Smallest Im m over the standard probe grid (must be >= -tol)."""
        worst = check_herglotz(self, tol=tol)
        return worst


def herglotz_probe_grid() -> np.ndarray:
    xs = np.arange(-5, 6, dtype=float)
    ys = np.array([0.1, 1.0, 10.0])
    return (xs[:, None] + 1j * ys[None, :]).ravel()


def check_herglotz(m, tol: float = 1e-6) -> float:
    vals = m(herglotz_probe_grid())
    vals = np.asarray(vals, dtype=complex)
    finite = np.isfinite(vals)
    worst = float(np.min(vals.imag[finite])) if np.any(finite) else 0.0
    if worst < -tol:
        raise IntegrityError(f"Herglotz violation: min Im m = {worst}")
    return worst


def weyl_limit_circle(system: CoefficientMatrix, theta: float, z: complex, *,
                      dt_max: float = 1e-3) -> complex:
    """m^theta(z) = P T(b, z)^{-1} e_theta for a limit-circle right endpoint."""
    if system.classification[1] != LIMIT_CIRCLE:
        raise ClassificationError("right endpoint is limit point; no boundary condition")
    T = transfer_matrix(system, system.b, z, dt_max=dt_max)
    Tinv = np.array([[T[1, 1], -T[0, 1]], [-T[1, 0], T[0, 0]]])  # det T = 1
    return projective(Tinv @ _e(theta))


@dataclass(frozen=True)
class HorizonPolicy:
    """Truncation-growth policy for limit-point Weyl computations."""

    initial: float = 10.0
    growth: float = 2.0
    max_rounds: int = 6
    tol: float = 1e-6


def _disc_points(T: np.ndarray) -> tuple[complex, complex]:
    Tinv = np.array([[T[1, 1], -T[0, 1]], [-T[1, 0], T[0, 0]]])
    return projective(Tinv @ _e(0.0)), projective(Tinv @ _e(np.pi / 2))


def weyl_limit_point(system: CoefficientMatrix, z: complex,
                     policy: HorizonPolicy = HorizonPolicy(), *,
                     dt_max: float = 1e-3, full_output: bool = False):
    """Limit-point Weyl value by truncation with the disc-shrinking midpoint.

    The two candidate boundary values P T(T,z)^{-1} e_0 and e_{pi/2} lie on
    the Weyl circle at the truncation time; their midpoint estimates m with
    error at most the circle diameter, which the horizon schedule drives
    down.  Raises ConvergenceError (carrying both estimates) if the budget
    runs out before stabilization.
    """
    if system.classification[1] != LIMIT_POINT:
        raise ClassificationError("right endpoint is limit circle; use weyl_limit_circle")
    if system.sampled:
        horizons = [system.grid[-1] * f for f in (0.25, 0.5, 1.0)]
        ms = []
        for h in horizons:
            idx = np.searchsorted(system.grid, h, side="right")
            grid = system.grid[:max(idx, 2)]
            T = transfer_product(grid, system.h11, system.h12, system.h22, z)
            m0, m1 = _disc_points(T)
            ms.append(0.5 * (m0 + m1))
        diag = {"horizons": horizons, "estimates": ms, "uncertainty": abs(ms[-1] - ms[-2])}
        return (ms[-1], diag) if full_output else ms[-1]

    horizon = policy.initial
    T = np.eye(2, dtype=complex)
    reached = system.a
    last = None
    history = []
    for _ in range(policy.max_rounds):
        def rhs(s):
            return z * (J @ system.fn(s))
        T = integrate_matrix_ode(rhs, (reached, horizon), T, dt_max=dt_max)
        reached = horizon
        scale = np.max(np.abs(T))
        if scale > 1e120:  # projective quantities are scale-invariant
            T = T / scale
        m0, m1 = _disc_points(T)
        est = 0.5 * (m0 + m1)
        history.append((horizon, est, abs(m0 - m1)))
        if last is not None and abs(est - last) < policy.tol and abs(m0 - m1) < policy.tol:
            diag = {"horizons": [h for h, _, _ in history],
                    "estimates": [e for _, e, _ in history],
                    "uncertainty": abs(m0 - m1)}
            return (est, diag) if full_output else est
        last = est
        horizon *= policy.growth
    raise ConvergenceError("Weyl limit-point truncation did not stabilize",
                           estimates=history[-2:])


# -- spectral measure -------------------------------------------------------


@dataclass
class SpectralMeasure:
    """Finite list of (location, positive weight) atoms inside a window."""

    locations: np.ndarray
    weights: np.ndarray
    window: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.locations = np.asarray(self.locations, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        order = np.argsort(self.locations)
        self.locations = self.locations[order]
        self.weights = self.weights[order]
        if np.any(self.weights <= 0):
            raise IntegrityError("spectral weights must be positive")
        lo, hi = self.window
        if np.any((self.locations < lo) | (self.locations > hi)):
            raise IntegrityError("atom outside the scanned window")

    def __len__(self):
        return len(self.locations)

    def to_json(self) -> str:
        return json.dumps([{"lambda": float(l), "weight": float(w)}
                           for l, w in zip(self.locations, self.weights)])


def stieltjes_invert(m, window, eps_schedule, *, n_grid: int = None,
                     weight_floor: float = 1e-4, herglotz_tol: float = 1e-6,
                     location_tol: float = 1e-7) -> SpectralMeasure:
    """Recover atoms of the measure behind a Herglotz function.

    Scans eps*|m(lambda + i eps)| for interior peaks at the coarsest eps,
    refines each by bounded local maximization at the finest eps, and takes
    the weight as the eps -> 0 limit of -i eps m along the schedule
    (Richardson in eps^2 from the last two levels; the imaginary residue is
    discarded as noise).  Atoms closer than 10x the final eps are merged.
    """
    lo, hi = window
    eps = [float(e) for e in eps_schedule]
    if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ParameterError("eps_schedule must be positive and strictly decreasing")
    if not isinstance(m, WeylFunction):
        fn = m
        if _vectorized(fn):
            m = WeylFunction(evaluator=fn)
        else:
            m = WeylFunction(evaluator=lambda zs: np.array([fn(z) for z in np.atleast_1d(zs)],
                                                           dtype=complex))
    e0, ef = eps[0], eps[-1]
    if n_grid is None:
        n_grid = int(min(20001, max(257, np.ceil((hi - lo) / (e0 / 2.0)))))
    lam = np.linspace(lo, hi, n_grid)
    vals = m(lam + 1j * e0)
    bad = vals.imag < -herglotz_tol * (1.0 + np.abs(vals))
    if np.any(bad):
        raise IntegrityError(f"Im m < 0 at {int(np.sum(bad))} scan points; not Herglotz")
    height = e0 * np.abs(vals)
    peaks = [k for k in range(1, n_grid - 1)
             if height[k] >= height[k - 1] and height[k] > height[k + 1]
             and height[k] > weight_floor / 4]
    atoms = []
    merged_warn = 0
    spacing = lam[1] - lam[0]
    for k in peaks:
        # the smoothed peak can sit a good fraction of eps0 away from the
        # pole, so rescan at the final eps before the local maximization
        half = max(e0, 3.0 * spacing)
        b_lo, b_hi = max(lo, lam[k] - half), min(hi, lam[k] + half)
        xs = np.linspace(b_lo, b_hi, 81)
        dens = np.abs(m(xs + 1j * ef))
        kk = int(np.argmax(dens))
        a_lo = xs[max(kk - 1, 0)]
        a_hi = xs[min(kk + 1, len(xs) - 1)]
        res = sp_optimize.minimize_scalar(lambda x: -abs(complex(m(np.array([x + 1j * ef]))[0])),
                                          bounds=(a_lo, a_hi), method="bounded",
                                          options={"xatol": min(ef / 50.0, location_tol)})
        loc = float(res.x)
        w_last = [-1j * e * complex(m(np.array([loc + 1j * e]))[0]) for e in eps[-2:]]
        if len(w_last) == 2:
            e1, e2 = eps[-2], eps[-1]
            w_extrap = (w_last[1] * e1 ** 2 - w_last[0] * e2 ** 2) / (e1 ** 2 - e2 ** 2)
        else:
            w_extrap = w_last[-1]
        w = float(np.real(w_extrap))
        if w > weight_floor:
            atoms.append((loc, w))
    # merge below the smoothing resolution
    atoms.sort()
    merged = []
    for loc, w in atoms:
        if merged and loc - merged[-1][0] < 10 * ef:
            l0, w0 = merged[-1]
            merged[-1] = ((l0 * w0 + loc * w) / (w0 + w), w0 + w)
            merged_warn += 1
        else:
            merged.append((loc, w))
    if merged_warn:
        warnings.warn(f"merged {merged_warn} atom pairs below resolution {10 * ef}")
    locs = np.array([l for l, _ in merged])
    ws = np.array([w for _, w in merged])
    return SpectralMeasure(locations=locs, weights=ws, window=(lo, hi),
                           meta={"eps_schedule": eps, "merged": merged_warn})


def _vectorized(fn) -> bool:
    try:
        out = fn(np.array([1j, 2j]))
        return np.asarray(out).shape == (2,)
    except Exception:
        return False


# -- resolvent --------------------------------------------------------------


def apply_resolvent(system: CoefficientMatrix, z: complex, v, *, grid=None,
                    theta: float = 0.0, m_value: complex = None, dt_max: float = 1e-3):
    """(S_H - z)^{-1} v sampled on a grid, via the two-solution kernel.

    u_a = T e_0 satisfies the left boundary condition, u_b = T (m, 1) the
    right one; their Wronskian u_a^T J u_b is -1 by construction, and
    G(t,s) = u_b(t) u_a(s)^T for s < t, u_a(t) u_b(s)^T for s >= t.
    Returns (grid, u values, details).
    """
    if abs(z.imag) == 0:
        raise ParameterError("resolvent requires z off the real axis")
    if m_value is None:
        if system.classification[1] == LIMIT_CIRCLE:
            m_value = weyl_limit_circle(system, theta, z, dt_max=dt_max)
        else:
            m_value = weyl_limit_point(system, z, dt_max=dt_max)
    if not np.isfinite(m_value) or abs(m_value) > 1e8:
        raise DegeneracyError("Weyl value degenerate: z too close to an eigenvalue")
    if grid is None:
        if system.sampled:
            grid = system.grid
        else:
            grid = np.linspace(system.a, system.b, max(513, int((system.b - system.a) / dt_max) + 1))
    grid = np.asarray(grid, dtype=float)
    Ts = transfer_matrix(system, grid[-1], z, dt_max=dt_max, keep_path=True)
    Tpath = Ts.states if hasattr(Ts, "states") else Ts
    if system.sampled and len(Tpath) != len(grid):
        raise ParameterError("grid must equal the sampled grid for sampled systems")
    ua = Tpath @ _e(0.0).astype(complex)
    ub = Tpath @ np.array([m_value, 1.0], dtype=complex)
    h11, h12, h22 = system.entries_at(grid)
    vv = np.array([np.asarray(v(t), dtype=complex) for t in grid]) if callable(v) else np.asarray(v, dtype=complex)
    Hv = np.stack([h11 * vv[:, 0] + h12 * vv[:, 1], h12 * vv[:, 0] + h22 * vv[:, 1]], axis=1)
    fa = np.einsum("ti,ti->t", ua, Hv)
    fb = np.einsum("ti,ti->t", ub, Hv)
    Ia = sp_integrate.cumulative_trapezoid(fa, grid, initial=0.0)
    Ib_rev = sp_integrate.cumulative_trapezoid(fb[::-1], grid[::-1], initial=0.0)
    Ib = -Ib_rev[::-1]
    u = ub * Ia[:, None] + ua * Ib[:, None]
    details = {"u_a": ua, "u_b": ub, "m": m_value, "wronskian": complex(ua[0] @ (J @ ub[0]))}
    return grid, u, details


# -- Sturm--Liouville to canonical system -----------------------------------


def sl_to_canonical(p, q, s, w, A0, t0: float, interval, *, dt_max: float = 1e-3,
                    classification=(LIMIT_CIRCLE, LIMIT_CIRCLE)):
    """Coefficient matrix of the canonical system equivalent to a generalized
    Sturm--Liouville operator (1/w)(-(f^[1])' + s f^[1] + q f), f^[1] = p(f'+sf).

    Integrates the frame A' = [[s, q], [1/p, -s]] A from A(t0) = A0 and
    assembles H = w * [[g^2, g h], [g h, h^2]] from the second row of A.
    """
    A0 = np.asarray(A0, dtype=float)
    if abs(np.linalg.det(A0) - 1.0) > 1e-10:
        raise ParameterError("det A0 must be 1")
    a, b = interval
    if not (a <= t0 <= b):
        raise ParameterError("t0 must lie inside the interval")

    def rhs(t):
        return np.array([[s(t), q(t)], [1.0 / p(t), -s(t)]], dtype=complex)

    n = max(2, int(np.ceil((b - a) / dt_max)))
    grid = np.linspace(a, b, n + 1)
    i0 = int(np.argmin(np.abs(grid - t0)))
    grid[i0] = t0
    Apath = np.empty((len(grid), 2, 2))
    Apath[i0] = A0
    if i0 < len(grid) - 1:
        fwd = integrate_matrix_ode(rhs, (t0, b), A0.astype(complex),
                                   grid=grid[i0:], keep_path=True)
        Apath[i0:] = fwd.states.real
    if i0 > 0:
        bwd = integrate_matrix_ode(rhs, (t0, a), A0.astype(complex),
                                   grid=grid[i0::-1], keep_path=True)
        Apath[i0::-1] = bwd.states.real
    g = Apath[:, 1, 0]
    h = Apath[:, 1, 1]
    wv = np.array([w(t) for t in grid])
    system = CoefficientMatrix.from_samples(grid, wv * g ** 2, wv * g * h, wv * h ** 2,
                                            classification=classification)
    system.meta["frame"] = Apath
    system.meta["frame_grid"] = grid
    return system
