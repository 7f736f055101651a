"""Seed-deterministic Brownian path infrastructure.

A :class:`BrownianPath` is a lazily refinable record of one Brownian
trajectory: values exist only at materialized knots, and new knots are filled
in by conditioning on their neighbours (Brownian bridge).  Every random draw
is keyed by a 64-bit sub-seed derived from the path seed and the quantity
being drawn, so repeated queries return bit-identical values and dyadic
refinement is order-independent.

The module also houses the complex path built by stitching whitened discrete
increments together with pinned bridges, which is how the coupling
construction extends a Gaussian random walk to a complex Brownian motion.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import HorizonError, ParameterError, StructuralError

__all__ = [
    "subseed",
    "BrownianPath",
    "TwoSidedBrownianPath",
    "ComplexBrownianPath",
    "sample_path",
    "sample_on_grid",
    "refine",
    "stitch_complex",
]


def subseed(*parts) -> int:
    """Derive a 64-bit sub-seed from a tuple of ints, floats and strings.

    Floats are hashed by bit pattern so nearby times never collide through a
    rounded textual representation.
    """
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        if isinstance(p, str):
            h.update(b"s")
            h.update(p.encode())
        elif isinstance(p, (bool, np.bool_)):
            h.update(b"b" + (b"\x01" if p else b"\x00"))
        elif isinstance(p, (int, np.integer)):
            h.update(b"i")
            h.update(int(p).to_bytes(16, "little", signed=True))
        elif isinstance(p, (float, np.floating)):
            h.update(b"f")
            h.update(struct.pack("<d", float(p)))
        else:
            raise ParameterError(f"cannot hash {type(p)} into a sub-seed")
    return int.from_bytes(h.digest(), "little")


def _gen(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _normal_for(seed: int, *parts) -> float:
    return float(_gen(subseed(seed, *parts)).standard_normal())


_MIX1 = np.uint64(0x9E3779B97F4A7C15)
_MIX2 = np.uint64(0xBF58476D1CE4E5B9)
_MIX3 = np.uint64(0x94D049BB133111EB)


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; avalanche quality is ample for bridge noise
    x = (x + _MIX1).astype(np.uint64)
    x ^= x >> np.uint64(30)
    x *= _MIX2
    x ^= x >> np.uint64(27)
    x *= _MIX3
    x ^= x >> np.uint64(31)
    return x


def _normals_for_times(seed: int, salt: int, ts: np.ndarray) -> np.ndarray:
    """One standard normal per time, keyed by (seed, salt, bit pattern of t).

    Vectorized Box--Muller on two independent mixes; repeated queries of the
    same time under the same salt reproduce the same value exactly.
    """
    with np.errstate(over="ignore"):
        bits = ts.view(np.uint64) if ts.dtype == np.float64 else np.asarray(ts, float).view(np.uint64)
        base = _mix64(bits ^ _mix64(np.uint64((seed ^ salt) & 0xFFFFFFFFFFFFFFFF)
                                    * np.ones(1, dtype=np.uint64))[0])
        u1 = (_mix64(base) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
        u2 = (_mix64(base ^ _MIX3) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
    u1 = np.maximum(u1, 1e-300)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@dataclass
class BrownianPath:
    """One-sided standard Brownian motion materialized at a knot set.

    Invariants: ``times[0] == 0`` with value exactly 0, times strictly
    increasing, and refining a gap never changes existing knot values
    (bridge conditioning only looks at the two neighbours).
    """

    seed: int
    horizon: float
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times[0] != 0.0 or self.values[0] != 0.0:
            raise StructuralError("path must start at (0, 0)")
        if np.any(np.diff(self.times) <= 0):
            raise StructuralError("knot times must be strictly increasing")

    def value(self, t: float) -> float:
        return float(self.values_at([t])[0])

    def values_at(self, ts) -> np.ndarray:
        """Values at arbitrary times, materializing new knots as needed.

        Interior times are filled by bridge conditioning on the current
        neighbours (sorted order within the batch), times past the last knot
        by fresh increments.  Draws are keyed by ``(seed, bits(t))``.
        """
        ts = np.asarray(ts, dtype=float)
        if ts.ndim == 0:
            ts = ts[None]
        if len(ts) == len(self.times) and ts[0] == self.times[0] and ts[-1] == self.times[-1] \
                and np.array_equal(ts, self.times):
            return self.values
        if np.any(ts < 0):
            raise HorizonError("one-sided path queried at negative time")
        if np.any(ts > self.horizon * (1 + 1e-12)):
            raise HorizonError(f"query beyond horizon {self.horizon}")
        pos = np.searchsorted(self.times, ts)
        hit = (pos < len(self.times)) & (self.times[np.minimum(pos, len(self.times) - 1)] == ts)
        if not np.all(hit):
            self._materialize_batch(np.setdiff1d(ts, self.times))
            pos = np.searchsorted(self.times, ts)
        return self.values[pos]

    def increments(self, grid) -> np.ndarray:
        """Increments of the path over consecutive cells of ``grid``."""
        return np.diff(self.values_at(grid))

    def _materialize_batch(self, new_sorted: np.ndarray) -> None:
        # single merge pass: walk gaps left to right, conditioning each new
        # time on its (possibly just created) left neighbour and the fixed
        # right knot of the enclosing gap; normals are keyed by the time's
        # bit pattern so query order within a batch cannot matter
        times = self.times
        values = self.values
        if new_sorted[0] > times[-1]:
            # pure extension: fresh increments, one vectorized cumulative sum
            z = _normals_for_times(self.seed, 0x65787421, new_sorted)
            sd = np.sqrt(np.diff(np.concatenate([[times[-1]], new_sorted])))
            self.times = np.concatenate([times, new_sorted])
            self.values = np.concatenate([values, values[-1] + np.cumsum(sd * z)])
            return
        z_at = _normals_for_times(self.seed, 0x61742121, new_sorted)
        z_ext = None
        merged_t = [times[0]]
        merged_v = [values[0]]
        k = 1
        for i, t in enumerate(new_sorted):
            while k < len(times) and times[k] <= t:
                merged_t.append(times[k])
                merged_v.append(values[k])
                k += 1
            if merged_t[-1] == t:
                continue
            cur_t, cur_v = merged_t[-1], merged_v[-1]
            if k < len(times):
                b, vb = times[k], values[k]
                mean = cur_v + (t - cur_t) / (b - cur_t) * (vb - cur_v)
                var = (t - cur_t) * (b - t) / (b - cur_t)
                v = mean + np.sqrt(var) * z_at[i]
            else:
                if z_ext is None:
                    z_ext = _normals_for_times(self.seed, 0x65787421, new_sorted)
                v = cur_v + np.sqrt(t - cur_t) * z_ext[i]
            merged_t.append(t)
            merged_v.append(v)
        while k < len(times):
            merged_t.append(times[k])
            merged_v.append(values[k])
            k += 1
        self.times = np.array(merged_t)
        self.values = np.array(merged_v)

    def to_csv(self, path) -> None:
        """Dump knots as CSV in full hexadecimal float round-trip form."""
        with open(path, "w") as fh:
            fh.write("t,value\n")
            for t, v in zip(self.times, self.values):
                fh.write(f"{float(t).hex()},{float(v).hex()}\n")


def sample_path(seed: int, horizon: float, base_step: float) -> BrownianPath:
    """Materialize a path at multiples of ``base_step`` up to ``horizon``."""
    if horizon <= 0 or base_step <= 0:
        raise ParameterError("horizon and base_step must be positive")
    m = int(np.floor(horizon / base_step + 1e-9))
    times = np.arange(m + 1, dtype=float) * base_step
    if times[-1] < horizon * (1 - 1e-12):
        times = np.append(times, horizon)
    rng = _gen(subseed(seed, "base"))
    incs = rng.standard_normal(len(times) - 1) * np.sqrt(np.diff(times))
    values = np.concatenate([[0.0], np.cumsum(incs)])
    return BrownianPath(seed=seed, horizon=float(times[-1]), times=times, values=values)


def sample_on_grid(seed: int, times) -> BrownianPath:
    """Materialize a path at a prescribed strictly increasing grid from 0.

    Fast constructor for the Monte Carlo kernels: one generator draws all
    increments in one call.
    """
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0:
        raise ParameterError("grid must start at 0")
    rng = _gen(subseed(seed, "base"))
    incs = rng.standard_normal(len(times) - 1) * np.sqrt(np.diff(times))
    values = np.concatenate([[0.0], np.cumsum(incs)])
    return BrownianPath(seed=seed, horizon=float(times[-1]), times=times, values=values)


def refine(path: BrownianPath, a: float, b: float) -> BrownianPath:
    """Insert the midpoint of knot gap ``[a, b]`` by bridge conditioning.

    The midpoint draw is keyed by the gap endpoints, so refinement order
    never affects values.  Returns the extended path; existing knot values
    are untouched.
    """
    i = int(np.searchsorted(path.times, a))
    if i >= len(path.times) - 1 or path.times[i] != a or path.times[i + 1] != b:
        raise StructuralError(f"[{a}, {b}] is not a knot gap of this path")
    m = 0.5 * (a + b)
    va, vb = path.values[i], path.values[i + 1]
    v = 0.5 * (va + vb) + 0.5 * np.sqrt(b - a) * _normal_for(path.seed, "mid", a, b)
    path.times = np.insert(path.times, i + 1, m)
    path.values = np.insert(path.values, i + 1, v)
    return path


@dataclass
class TwoSidedBrownianPath:
    """Two independent one-sided paths glued at 0, giving B on all of R.

    Both halves start with the single knot at the origin and materialize on
    demand, so a first bulk query takes the vectorized extension path.
    """

    seed: int
    horizon: float
    positive: BrownianPath = field(init=False)
    negative: BrownianPath = field(init=False)

    def __post_init__(self):
        self.positive = BrownianPath(seed=subseed(self.seed, "pos"), horizon=self.horizon,
                                     times=np.zeros(1), values=np.zeros(1))
        self.negative = BrownianPath(seed=subseed(self.seed, "neg"), horizon=self.horizon,
                                     times=np.zeros(1), values=np.zeros(1))

    def value(self, t: float) -> float:
        return self.positive.value(t) if t >= 0 else self.negative.value(-t)

    def reversed_half(self) -> BrownianPath:
        """The path t -> B(-t) for t >= 0, itself a standard BM."""
        return self.negative


class ComplexBrownianPath:
    """Complex Brownian motion with E|W(t)|^2 = 2t: knots plus bridge fill.

    Knot values are prescribed (running sums of stitched increments); values
    strictly between knots come from independent pinned complex bridges, one
    child generator per gap.  Gap generators are keyed by the per-gap bridge
    seeds handed to :func:`stitch_complex`, so the coupling construction can
    key them by (trial, gap) as its determinism contract requires.  Queries
    past the last knot extend the path with a fresh complex Brownian motion.
    """

    def __init__(self, knot_times, knot_values, gap_seeds, tail_seed: int):
        self.knot_times = np.asarray(knot_times, dtype=float)
        self.knot_values = np.asarray(knot_values, dtype=complex)
        if self.knot_times[0] != 0.0 or self.knot_values[0] != 0.0:
            raise StructuralError("complex path must start at (0, 0)")
        if np.any(np.diff(self.knot_times) <= 0):
            raise StructuralError("knot times must be strictly increasing")
        if len(gap_seeds) != len(self.knot_times) - 1:
            raise ParameterError("need one bridge seed per knot gap")
        self.gap_seeds = [int(s) for s in gap_seeds]
        self.tail_seed = int(tail_seed)
        # per-gap materialized pinned-bridge samples (times, bridge values)
        self._gaps: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._tail_t = np.array([self.knot_times[-1]])
        self._tail_v = np.array([self.knot_values[-1]], dtype=complex)

    @property
    def horizon(self) -> float:
        return float(self.knot_times[-1])

    def value(self, t: float) -> complex:
        return complex(self.values_at([t])[0])

    def values_at(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if ts.ndim == 0:
            ts = ts[None]
        order = np.argsort(ts, kind="stable")
        sorted_ts = ts[order]
        out_sorted = np.empty(len(ts), dtype=complex)
        idx = np.searchsorted(self.knot_times, sorted_ts, side="right") - 1
        idx = np.clip(idx, 0, None)
        for gap in np.unique(idx):
            sel = idx == gap
            out_sorted[sel] = self._values_in_gap(int(gap), sorted_ts[sel])
        out = np.empty_like(out_sorted)
        out[order] = out_sorted
        return out

    def _values_in_gap(self, gap: int, ts: np.ndarray) -> np.ndarray:
        if ts[0] < 0:
            raise HorizonError("complex path queried at negative time")
        if gap >= len(self.knot_times) - 1:
            return self._tail_values(ts)
        a, b = self.knot_times[gap], self.knot_times[gap + 1]
        wa, wb = self.knot_values[gap], self.knot_values[gap + 1]
        out = np.empty(len(ts), dtype=complex)
        at_knot = ts == a
        out[at_knot] = wa
        inner = ~at_knot
        if np.any(inner):
            t_in = np.clip(ts[inner], np.nextafter(a, b), np.nextafter(b, a))
            if gap not in self._gaps:
                # fresh gap: one vectorized conditional sweep materializes it
                self.bridge_fill_grid(gap, np.unique(t_in))
            bt, bv = self._gaps[gap]
            new = np.setdiff1d(t_in, bt)
            if new.size:
                rng = _gen(subseed(self.gap_seeds[gap], "late"))
                for t in new:
                    i = np.searchsorted(bt, t)
                    ta, va = bt[i - 1], bv[i - 1]
                    tb, vb = bt[i], bv[i]
                    mean = va + (t - ta) / (tb - ta) * (vb - va)
                    var = (t - ta) * (tb - t) / (tb - ta)
                    z = rng.standard_normal(2)
                    bt = np.insert(bt, i, t)
                    bv = np.insert(bv, i, mean + np.sqrt(var) * (z[0] + 1j * z[1]))
                self._gaps[gap] = (bt, bv)
            pos = np.searchsorted(bt, t_in)
            u = (t_in - a) / (b - a)
            out[inner] = wa + bv[pos] + u * (wb - wa)
        return out

    def _tail_values(self, ts: np.ndarray) -> np.ndarray:
        bt, bv = self._tail_t, self._tail_v
        new = np.setdiff1d(ts, bt)
        if new.size and len(bt) == 1 and new[0] > bt[-1]:
            # fresh tail queried at increasing times: vectorized extension
            rng = _gen(self.tail_seed)
            z = rng.standard_normal((len(new), 2))
            sd = np.sqrt(np.diff(np.concatenate([[bt[-1]], new])))
            incs = sd * (z[:, 0] + 1j * z[:, 1])
            bt = np.concatenate([bt, new])
            bv = np.concatenate([bv, bv[-1] + np.cumsum(incs)])
            self._tail_t, self._tail_v = bt, bv
            new = np.empty(0)
        if new.size:
            rng = _gen(subseed(self.tail_seed, "late"))
            for t in new:
                i = np.searchsorted(bt, t)
                if i == len(bt):
                    z = rng.standard_normal(2)
                    v = bv[-1] + np.sqrt(t - bt[-1]) * (z[0] + 1j * z[1])
                else:
                    ta, va = bt[i - 1], bv[i - 1]
                    tb, vb = bt[i], bv[i]
                    mean = va + (t - ta) / (tb - ta) * (vb - va)
                    var = (t - ta) * (tb - t) / (tb - ta)
                    z = rng.standard_normal(2)
                    v = mean + np.sqrt(var) * (z[0] + 1j * z[1])
                bt = np.insert(bt, i, t)
                bv = np.insert(bv, i, v)
            self._tail_t, self._tail_v = bt, bv
        pos = np.searchsorted(bt, ts)
        return bv[pos]

    def bridge_fill_grid(self, gap: int, ts: np.ndarray) -> np.ndarray:
        """Vectorized bridge fill of one whole gap at sorted interior times.

        Only valid while the gap has no materialized interior point; used by
        the coupling kernels, which sweep each gap exactly once.  The result
        is cached so later scalar queries reproduce the same values.
        """
        from ._kernels import bridge_scan

        a, b = self.knot_times[gap], self.knot_times[gap + 1]
        if gap in self._gaps and len(self._gaps[gap][0]) > 2:
            return self._values_in_gap(gap, ts)
        rng = _gen(self.gap_seeds[gap])
        m = len(ts)
        z = rng.standard_normal((m, 2))
        out_re = np.empty(m)
        out_im = np.empty(m)
        bridge_scan(ts - a, b - a, z, out_re, out_im)
        vals = np.concatenate([[0.0], out_re + 1j * out_im, [0.0]])
        self._gaps[gap] = (np.concatenate([[a], ts, [b]]), vals)
        wa, wb = self.knot_values[gap], self.knot_values[gap + 1]
        u = (ts - a) / (b - a)
        return wa + vals[1:-1] + u * (wb - wa)


def stitch_complex(knot_increments, sigma_sq: float, bridge_seeds=None, *,
                   knot_times=None, tail_seed: int = 0) -> ComplexBrownianPath:
    """Stitch discrete complex increments into a continuous Brownian path.

    The n-th knot value is exactly the running sum of the first n increments;
    gaps are filled by independent pinned bridges with one seed per gap.  By
    default knots sit at multiples of ``sigma_sq`` (the geometric grid of the
    coupling construction is equally spaced in logarithmic time); pass
    ``knot_times`` to override.
    """
    incs = np.asarray(knot_increments, dtype=complex)
    if incs.size == 0:
        raise ParameterError("empty increment list")
    if sigma_sq <= 0:
        raise ParameterError("sigma_sq must be positive")
    if knot_times is None:
        knot_times = sigma_sq * np.arange(len(incs) + 1, dtype=float)
    else:
        knot_times = np.asarray(knot_times, dtype=float)
        if len(knot_times) != len(incs) + 1:
            raise ParameterError("knot_times must have one more entry than increments")
    if bridge_seeds is None:
        bridge_seeds = [subseed(tail_seed, "gap", j) for j in range(len(incs))]
    values = np.concatenate([[0.0 + 0.0j], np.cumsum(incs)])
    return ComplexBrownianPath(knot_times, values, bridge_seeds, tail_seed)
