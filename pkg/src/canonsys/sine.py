"""The stochastic sine canonical system.

A hyperbolic Brownian motion with variance 4/beta started at i drives the
system: its coefficient matrix in the compactified time t = 1 - e^{-s} is
(1/(2 Im B)) [[1, -Re B], [-Re B, |B|^2]] evaluated in logarithmic time, a
determinant-1/4 Dirac-type matrix.  Above beta = 2 the right endpoint turns
limit circle and carries the boundary vector (Re B(infinity), 1); at or below
beta = 2 the Weyl function comes from truncation inside [0, 1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sp_optimize

from . import _kernels
from .canonical import (LIMIT_CIRCLE, LIMIT_POINT, CoefficientMatrix, SpectralMeasure,
                        WeylFunction, stieltjes_invert)
from .errors import ClassificationError, HorizonError, ParameterError
from .paths import ComplexBrownianPath

__all__ = [
    "HbmPath", "simulate_hbm", "sine_coefficient_matrix", "sine_system",
    "sine_boundary", "sine_eigenvalues", "sine_weyl_function",
]

BETA_INF = math.inf


@dataclass
class HbmPath:
    """Hyperbolic Brownian motion in logarithmic time s >= 0, started at i.

    The imaginary part is the exact geometric Brownian motion
    exp((2/sqrt b) Im W(s) - (2/b) s); only the real part needs stepping,
    dRe B = (2/sqrt b) Im B dRe W on the same driver.
    """

    beta: float
    s_grid: np.ndarray
    re: np.ndarray
    im: np.ndarray
    driver: ComplexBrownianPath = None
    meta: dict = field(default_factory=dict)

    @property
    def s_max(self) -> float:
        return float(self.s_grid[-1])

    def at(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s > self.s_max * (1 + 1e-12)):
            raise HorizonError("hyperbolic path queried beyond its horizon")
        return np.interp(s, self.s_grid, self.re), np.interp(s, self.s_grid, self.im)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("s,re,im\n")
            for row in zip(self.s_grid, self.re, self.im):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def simulate_hbm(beta: float, driver: ComplexBrownianPath, s_max: float,
                 *, ds_max: float = 2e-3, s_grid=None) -> HbmPath:
    """Hyperbolic Brownian motion up to log-time s_max on the given driver.

    At beta = infinity the variance vanishes and the path is stuck at i.
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    if s_grid is None:
        n = max(2, int(math.ceil(s_max / ds_max)))
        s_grid = np.linspace(0.0, s_max, n + 1)
    else:
        s_grid = np.asarray(s_grid, dtype=float)
    if beta == BETA_INF:
        return HbmPath(beta=beta, s_grid=s_grid, re=np.zeros(len(s_grid)),
                       im=np.ones(len(s_grid)), driver=driver)
    sig = 2.0 / math.sqrt(beta)
    w = driver.values_at(s_grid)
    im = np.exp(sig * w.imag - (sig ** 2 / 2.0) * s_grid)
    dre_w = np.diff(w.real)
    re = np.concatenate([[0.0], np.cumsum(sig * im[:-1] * dre_w)])
    return HbmPath(beta=beta, s_grid=s_grid, re=re, im=im, driver=driver)


def sine_coefficient_matrix(hbm: HbmPath, t: float) -> np.ndarray:
    """Coefficient matrix at compactified time t in [0, 1)."""
    if not (0.0 <= t < 1.0):
        raise ParameterError("t must lie in [0, 1)")
    s = -math.log1p(-t)
    re, im = hbm.at(s)
    re, im = float(re), float(im)
    return (1.0 / (2.0 * im)) * np.array([[1.0, -re], [-re, re * re + im * im]])


def sine_system(hbm: HbmPath, *, t_max: float = None) -> CoefficientMatrix:
    """Sampled coefficient matrix on the image of the simulated s-grid."""
    ts = 1.0 - np.exp(-hbm.s_grid)
    if t_max is not None:
        keep = ts <= t_max
        ts = ts[keep]
        re, im = hbm.re[keep], hbm.im[keep]
    else:
        re, im = hbm.re, hbm.im
    h11 = 1.0 / (2.0 * im)
    h12 = -re / (2.0 * im)
    h22 = (re ** 2 + im ** 2) / (2.0 * im)
    classification = (LIMIT_CIRCLE, LIMIT_CIRCLE if hbm.beta > 2 else LIMIT_POINT)
    system = CoefficientMatrix.from_samples(ts, h11, h12, h22, classification=classification)
    system.meta["hbm"] = hbm
    return system


def sine_boundary(beta: float, hbm: HbmPath) -> tuple[np.ndarray, float]:
    """Right boundary vector (Re B(infinity), 1) for beta > 2, with the
    stabilization estimate |Re B(s_max) - Re B(s_max/2)| attached."""
    if beta <= 2:
        raise ClassificationError("beta <= 2 is limit point at 1; no boundary condition")
    re_end, _ = hbm.at(hbm.s_max)
    re_half, _ = hbm.at(hbm.s_max / 2.0)
    vec = np.array([float(re_end), 1.0])
    return vec, abs(float(re_end) - float(re_half))


def _transfer_batch(system: CoefficientMatrix, zs: np.ndarray, *, upto=None) -> np.ndarray:
    grid = system.grid
    if upto is not None:
        k = int(np.searchsorted(grid, upto, side="right"))
        grid = grid[:max(k, 2)]
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    out = np.empty((len(zs), 2, 2), dtype=complex)
    _kernels.transfer_product_batch(grid, system.h11, system.h12, system.h22,
                                    np.ascontiguousarray(zs.real),
                                    np.ascontiguousarray(zs.imag), out)
    return out


def sine_weyl_function(hbm: HbmPath, *, t_trunc: float = None) -> WeylFunction:
    """Weyl function of the (possibly truncated) sine system.

    beta > 2: m(z) = P T(1, z)^{-1} v with the natural boundary vector v.
    beta <= 2: truncation at t_trunc with the disc-midpoint estimate
    (average of the e_0 and e_{pi/2} images), the truncation living inside
    [0, 1) since no convergence rate toward the endpoint is available.
    """
    system = sine_system(hbm)
    if hbm.beta > 2:
        v, _ = sine_boundary(hbm.beta, hbm)

        def evaluator(zs):
            Ts = _transfer_batch(system, zs)
            num = Ts[:, 1, 1] * v[0] - Ts[:, 0, 1] * v[1]
            den = -Ts[:, 1, 0] * v[0] + Ts[:, 0, 0] * v[1]
            return num / den

        return WeylFunction(evaluator=evaluator, provenance=f"sine lc, beta={hbm.beta}")

    t_end = system.grid[-1] if t_trunc is None else t_trunc

    def evaluator(zs):
        Ts = _transfer_batch(system, zs, upto=t_end)
        # disc midpoint: average the theta = 0 and theta = pi/2 images
        m0 = -Ts[:, 1, 1] / Ts[:, 1, 0]
        m1 = -Ts[:, 0, 1] / Ts[:, 0, 0]
        return 0.5 * (m0 + m1)

    return WeylFunction(evaluator=evaluator,
                        provenance=f"sine lp truncation t={t_end}, beta={hbm.beta}")


def sine_eigenvalues(beta: float, hbm: HbmPath, window, *, boundary=None,
                     resolution: float = 1e-6, eps_schedule=(0.5, 0.1, 0.05)) -> np.ndarray:
    """Eigenvalues of the sine system inside a window, sorted and deduplicated.

    For a limit-circle right endpoint (beta > 2, or an explicit ``boundary``
    vector) the eigenvalues are the z where the solution from the left
    boundary aligns with the boundary vector at 1: sign changes of the real
    alignment determinant are bracketed on a pi/4 grid and bisected.  For
    beta <= 2 the atoms of the truncated Weyl function are used instead.
    """
    lo, hi = window
    if lo >= hi:
        raise ParameterError("empty window")
    if boundary is None and beta <= 2:
        m = sine_weyl_function(hbm)
        measure = stieltjes_invert(m, window, eps_schedule)
        return measure.locations
    if boundary is None:
        boundary, stab = sine_boundary(beta, hbm)
        if stab > 0.05:
            warnings.warn(f"sine boundary vector stabilization {stab:.3g} is weak")
    system = sine_system(hbm)
    v = np.asarray(boundary, dtype=float)

    def align(zs):
        Ts = _transfer_batch(system, np.asarray(zs, dtype=complex))
        u = Ts[:, :, 0]  # T e0
        return (u[:, 0] * v[1] - u[:, 1] * v[0]).real

    zs = np.arange(lo, hi + 1e-12, math.pi / 4.0)
    if zs[-1] < hi:
        zs = np.append(zs, hi)
    vals = align(zs)
    roots = []
    for k in range(len(zs) - 1):
        a, b = zs[k], zs[k + 1]
        fa, fb = vals[k], vals[k + 1]
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0:
            r = sp_optimize.brentq(lambda z: float(align([z])[0]), a, b, xtol=resolution / 4)
            roots.append(r)
    if vals[-1] == 0.0:
        roots.append(zs[-1])
    roots = sorted(roots)
    out = []
    for r in roots:
        if not out or r - out[-1] > resolution:
            out.append(r)
    return np.array(out)
