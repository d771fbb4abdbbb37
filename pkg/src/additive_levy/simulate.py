"""Monte Carlo path simulation for additive stable processes.

Used to cross-check the analytic side: the Fourier transform of the killed
occupation measure, range volumes on a voxel grid, and box counting.

All randomness is drawn from per-(replicate, component) child streams of a
single integer seed, with separate streams for the uniform, exponential and
normal variates. A longer path therefore extends a shorter one, so results
for nested parameter boxes are coupled.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .exponent import AdditiveProcess, LevyExponent, UsageError, re_resolvent

__all__ = [
    "ResourceError",
    "SimulationConfig",
    "OccupationSample",
    "RangeVolume",
    "BoxDimension",
    "positive_stable",
    "sample_increments",
    "component_path",
    "occupation_fourier",
    "occupation_target",
    "range_volume",
    "box_counting_dimension",
]

MAX_LATTICE_POINTS = 1 << 24
MAX_BOX_POINTS = 1 << 30
CHUNK = 1 << 22
BOX_WINDOW = 6

_TAG_OCC, _TAG_RANGE, _TAG_BOX, _TAG_INC = 0x0CC, 0x4A9, 0xB0C, 0x1AC


class ResourceError(RuntimeError):
    """The requested simulation would exceed the point budget."""


def _divides(step: float, length: float) -> int:
    n = length / step
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-9 * max(1.0, n):
        raise UsageError(f"mesh {step} does not divide {length}")
    return k


@dataclass
class SimulationConfig:
    """Simulation parameters. ``h`` defaults to t_kill / 128."""

    process: AdditiveProcess
    r: float = 1.0
    h: Optional[float] = None
    replicates: int = 200
    seed: int = 0
    voxel_delta: float = 0.05
    t_kill: float = 8.0

    def __post_init__(self):
        if self.h is None:
            self.h = self.t_kill / 128.0
        if not (self.h > 0 and self.r > 0 and self.t_kill > 0):
            raise UsageError("r, h and t_kill must be positive")
        if self.voxel_delta <= 0:
            raise UsageError("voxel_delta must be positive")
        if self.replicates < 1:
            raise UsageError("need at least one replicate")
        self.replicates = int(self.replicates)
        self.seed = int(self.seed)
        for c in self.process.components:
            _family(c)

    @property
    def range_steps(self) -> int:
        return _divides(self.h, self.r)

    @property
    def kill_steps(self) -> int:
        return _divides(self.h, self.t_kill)

    def describe(self) -> dict:
        return {"r": self.r, "h": self.h, "replicates": self.replicates, "seed": self.seed,
                "voxel_delta": self.voxel_delta, "t_kill": self.t_kill}


# samplers -------------------------------------------------------------------

def _family(exp: LevyExponent) -> str:
    if exp.family == "isotropic_stable":
        return "brownian" if exp.alpha == 2.0 else "isotropic_stable"
    if exp.family == "stable_subordinator":
        return "stable_subordinator"
    if exp.family == "custom" and exp.label in ("zero", "drift"):
        return exp.label
    raise UsageError(f"no path sampler for exponent family {exp.family!r}"
                     f"{' (' + exp.label + ')' if exp.label else ''}")


def positive_stable(a: float, u: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Kanter's representation of a positive a-stable variable, E exp(-lS) = exp(-l^a).

    ``u`` are uniforms on [0, 1) and ``e`` standard exponentials.
    """
    theta = np.pi * u
    theta = np.where(theta <= 0.0, np.finfo(float).tiny, theta)
    log_a = (a * np.log(np.sin(a * theta)) + (1 - a) * np.log(np.sin((1 - a) * theta))
             - np.log(np.sin(theta))) / (1 - a)
    return np.exp((1 - a) / a * (log_a - np.log(e)))


class _Streams:
    """Three independent generators: uniform, exponential, normal."""

    def __init__(self, seed: int, *key: int):
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
        self.u, self.e, self.z = (np.random.default_rng(c) for c in ss.spawn(3))

    def increments(self, exp: LevyExponent, t_step: float, count: int) -> np.ndarray:
        fam = _family(exp)
        d = exp.ambient_dim
        if fam == "zero":
            return np.zeros((count, d))
        if fam == "drift":
            v = np.asarray(exp.params["velocity"], dtype=float)
            return np.broadcast_to(v * t_step, (count, d)).copy()
        if fam == "brownian":
            return math.sqrt(2.0 * t_step) * self.z.standard_normal((count, d))
        a = float(exp.alpha)
        if fam == "stable_subordinator":
            s = positive_stable(a, self.u.random(count), self.e.standard_exponential(count))
            return (t_step ** (1.0 / a) * s).reshape(count, 1)
        s = positive_stable(a / 2.0, self.u.random(count), self.e.standard_exponential(count))
        s *= t_step ** (2.0 / a)
        return np.sqrt(2.0 * s)[:, None] * self.z.standard_normal((count, d))


def sample_increments(exp: LevyExponent, t_step: float, count: int, seed: int = 0) -> np.ndarray:
    """``count`` i.i.d. increments X_{t_step}, shape (count, d)."""
    if t_step <= 0 or count < 0:
        raise UsageError("t_step must be positive and count non-negative")
    return _Streams(seed, _TAG_INC).increments(exp, float(t_step), int(count))


def component_path(exp: LevyExponent, h: float, steps: int, seed: int,
                   *key: int) -> np.ndarray:
    """X at times 0, h, ..., steps*h, shape (steps + 1, d)."""
    st = _Streams(seed, *key)
    out = np.zeros((steps + 1, exp.ambient_dim))
    np.cumsum(st.increments(exp, h, steps), axis=0, out=out[1:])
    return out


# occupation measure ---------------------------------------------------------

@dataclass
class OccupationSample:
    xi: np.ndarray
    estimate: float
    stderr: float
    target: float
    values: np.ndarray = field(repr=False)
    h: float = 0.0

    @property
    def z_score(self) -> float:
        return (self.estimate - self.target) / self.stderr if self.stderr > 0 else math.inf

    def to_dict(self) -> dict:
        return {"xi": self.xi.tolist(), "estimate": self.estimate, "stderr": self.stderr,
                "target": self.target, "h": self.h, "replicates": int(self.values.size)}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replicate", "abs_O_squared"])
            for i, v in enumerate(self.values):
                w.writerow([i, repr(float(v))])


def occupation_target(process: AdditiveProcess, xi) -> float:
    """prod_j Re(1/(1 + Psi_j(xi))), the exact value of E|O(xi)|^2."""
    return float(np.prod([re_resolvent(c, xi) for c in process.components]))


def occupation_fourier(config: SimulationConfig, xi) -> OccupationSample:
    """Estimate E|O(xi)|^2 for the occupation measure killed at independent Exp(1) times.

    The path is frozen on each cell [t_i, t_i + h) and the killing weight
    is integrated exactly over the cell, so the total mass is exactly
    (1 - e^-t_kill)^N and every replicate lies in [0, 1]. The lattice sum
    then factorises per component. Expect a bias of order h.
    """
    proc = config.process
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if xi.size != proc.d:
        raise UsageError(f"xi has dimension {xi.size}, expected {proc.d}")
    h, m = config.h, config.kill_steps
    t = h * np.arange(m)
    weights = np.exp(-t) * -math.expm1(-h)
    vals = np.empty(config.replicates)
    for rep in range(config.replicates):
        ohat = 1.0 + 0j
        for j, c in enumerate(proc.components):
            path = component_path(c, h, m - 1, config.seed, _TAG_OCC, rep, j)
            ohat *= np.sum(np.exp(1j * (path @ xi)) * weights)
        vals[rep] = abs(ohat) ** 2
    se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.inf
    return OccupationSample(xi=xi, estimate=float(vals.mean()), stderr=se,
                            target=occupation_target(proc, xi), values=vals, h=h)


# range volume ---------------------------------------------------------------

@dataclass
class RangeVolume:
    volume: float
    stderr: float
    values: np.ndarray = field(repr=False)
    voxel_delta: float = 0.0

    def to_dict(self) -> dict:
        return {"volume": self.volume, "stderr": self.stderr,
                "voxel_delta": self.voxel_delta, "replicates": int(self.values.size)}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replicate", "volume"])
            for i, v in enumerate(self.values):
                w.writerow([i, repr(float(v))])


def _check_dim(proc: AdditiveProcess) -> None:
    if proc.d > 3:
        raise UsageError("simulation supports d <= 3")


def _lattice_chunks(paths: Sequence[np.ndarray], chunk: int = CHUNK) -> Iterator[np.ndarray]:
    """Yield the points sum_j X^j(t_j) over the full lattice in blocks."""
    first, rest = paths[0], paths[1:]
    tail = np.zeros((1, first.shape[1]))
    for p in rest:
        tail = (tail[:, None, :] + p[None, :, :]).reshape(-1, first.shape[1])
    rows = max(1, chunk // tail.shape[0])
    for s in range(0, first.shape[0], rows):
        block = first[s:s + rows]
        yield (block[:, None, :] + tail[None, :, :]).reshape(-1, first.shape[1])


def _voxel_count(paths: Sequence[np.ndarray], delta: float) -> int:
    keys = [np.unique(np.floor(pts / delta).astype(np.int64), axis=0)
            for pts in _lattice_chunks(paths)]
    return int(np.unique(np.concatenate(keys), axis=0).shape[0])


def range_volume(config: SimulationConfig) -> RangeVolume:
    """Voxel estimate of E lambda_d(X([0, r]^N)) on the lattice (hZ)^N.

    Each replicate counts the distinct voxels of side ``voxel_delta`` hit by
    the lattice points, times delta^d. The estimate is biased by both the
    mesh and the voxel size; it is a sanity check, not a measurement.
    """
    proc = config.process
    _check_dim(proc)
    steps = config.range_steps
    total = (steps + 1) ** proc.N
    if total > MAX_LATTICE_POINTS:
        raise ResourceError(f"{total} lattice points exceeds the budget of {MAX_LATTICE_POINTS}")
    delta = config.voxel_delta
    vals = np.empty(config.replicates)
    for rep in range(config.replicates):
        paths = [component_path(c, config.h, steps, config.seed, _TAG_RANGE, rep, j)
                 for j, c in enumerate(proc.components)]
        vals[rep] = _voxel_count(paths, delta) * delta ** proc.d
    se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.inf
    return RangeVolume(volume=float(vals.mean()), stderr=se, values=vals, voxel_delta=delta)


# box counting ---------------------------------------------------------------

@dataclass
class BoxDimension:
    """Box-counting estimate. Unpacks as ``(dim, residual)``."""

    dim: float
    residual: float
    levels: np.ndarray
    counts: np.ndarray
    fit_levels: np.ndarray
    points: int

    def __iter__(self):
        yield self.dim
        yield self.residual

    def to_dict(self) -> dict:
        return {"dim": self.dim, "residual": self.residual,
                "levels": self.levels.tolist(), "counts": self.counts.tolist(),
                "fit_levels": self.fit_levels.tolist(), "points": self.points}


def _step_scale(exp: LevyExponent, h: float) -> float:
    fam = _family(exp)
    if fam == "zero":
        return 0.0
    if fam == "drift":
        return float(np.abs(exp.params["velocity"]).max()) * h
    if fam == "brownian":
        return math.sqrt(2.0 * h)
    return h ** (1.0 / exp.alpha)


def _unique_rows(keys: np.ndarray) -> np.ndarray:
    if keys.shape[1] == 1:
        return np.unique(keys[:, 0])[:, None]
    return np.unique(keys, axis=0)


def _pack_bits(d: int) -> int:
    return 62 // d


def _pack(idx: np.ndarray) -> Optional[np.ndarray]:
    """Pack integer rows into single int64 keys, or None if they do not fit."""
    d = idx.shape[1]
    if d == 1:
        return idx[:, 0]
    bits = _pack_bits(d)
    half = 1 << (bits - 1)
    if idx.size and (idx.min() < -half or idx.max() >= half):
        return None
    key = np.zeros(idx.shape[0], dtype=np.int64)
    for c in range(d):
        key = (key << bits) | (idx[:, c] + half)
    return key


def _unpack(key: np.ndarray, d: int) -> np.ndarray:
    if d == 1:
        return key[:, None]
    bits = _pack_bits(d)
    half, mask = 1 << (bits - 1), (1 << bits) - 1
    out = np.empty((key.size, d), dtype=np.int64)
    for c in range(d - 1, -1, -1):
        out[:, c] = (key & mask) - half
        key = key >> bits
    return out


def _fine_boxes(streams, comps, h, steps, level, chunk) -> tuple[np.ndarray, int]:
    """Distinct finest-level boxes hit, streaming the path(s) in chunks."""
    d = comps[0].ambient_dim
    scale = 2.0 ** level
    if len(comps) == 1:
        blocks = _stream_single(streams[0], comps[0], h, steps, chunk)
    else:
        paths = [np.vstack([np.zeros((1, d)), np.cumsum(st.increments(c, h, steps), axis=0)])
                 for st, c in zip(streams, comps)]
        blocks = _lattice_chunks(paths, chunk)
    packed, rows, npts = [], [], 0
    for pts in blocks:
        npts += pts.shape[0]
        idx = np.floor(pts * scale)
        if np.abs(idx).max() > 2.0 ** 62:
            raise ResourceError("box indices overflow; use a coarser mesh")
        idx = idx.astype(np.int64)
        # consecutive path points usually share a box
        keep = np.ones(idx.shape[0], dtype=bool)
        keep[1:] = np.any(idx[1:] != idx[:-1], axis=1)
        idx = idx[keep]
        key = _pack(idx)
        if key is None:
            rows.append(_unique_rows(idx))
        else:
            packed.append(np.unique(key))
        if len(packed) >= 8:
            packed = [np.unique(np.concatenate(packed))]
    if packed:
        rows.append(_unpack(np.unique(np.concatenate(packed)), d))
    return _unique_rows(np.concatenate(rows)), npts


def _shift_unique(boxes: np.ndarray) -> np.ndarray:
    coarse = boxes >> 1
    key = _pack(coarse)
    if key is None:
        return _unique_rows(coarse)
    return _unpack(np.unique(key), boxes.shape[1])


def _stream_single(st: _Streams, c: LevyExponent, h: float, steps: int, chunk: int):
    pos = np.zeros(c.ambient_dim)
    yield pos[None, :].copy()
    done = 0
    while done < steps:
        n = min(chunk, steps - done)
        block = np.cumsum(st.increments(c, h, n), axis=0) + pos
        pos = block[-1].copy()
        done += n
        yield block


def box_counting_dimension(config: SimulationConfig, window: int = BOX_WINDOW,
                           chunk: int = CHUNK) -> BoxDimension:
    """Box-counting dimension of the simulated range X([0, r]^N).

    Dyadic box counts are taken on levels 2^-j from the coarsest level that
    sees more than 2^d boxes down to a finest level set by the path step. Levels
    within two of the coarse end, and levels where the count exceeds 1/16 of
    the points (mesh saturation), are dropped; the slope of log2 count
    against j is fitted over the finest ``window`` remaining levels.

    Planar Brownian motion converges slowly: the local slope behaves like
    2 - 2/log(t/delta^2), so expect under-estimates unless the mesh is very
    fine.
    """
    proc = config.process
    _check_dim(proc)
    steps = config.range_steps
    total = (steps + 1) ** proc.N
    if total > MAX_BOX_POINTS:
        raise ResourceError(f"{total} points exceeds the budget of {MAX_BOX_POINTS}")
    step = max(_step_scale(c, config.h) for c in proc.components)
    fine = 24 if step == 0.0 else int(math.floor(-math.log2(2.0 * step)))
    fine = min(fine, 60)

    all_counts = []
    npts = 0
    for rep in range(config.replicates):
        streams = [_Streams(config.seed, _TAG_BOX, rep, j) for j in range(proc.N)]
        boxes, npts = _fine_boxes(streams, proc.components, config.h, steps, fine, chunk)
        counts = []
        cur = boxes
        for _ in range(64):
            counts.append(cur.shape[0])
            # a grid straddling the origin never drops below 2^d boxes
            if len(counts) >= 8 and len(set(counts[-8:])) == 1:
                break
            cur = _shift_unique(cur)
        all_counts.append(counts)
    depth = min(len(c) for c in all_counts)
    levels = fine - np.arange(depth)
    counts = np.array([c[:depth] for c in all_counts], dtype=float)
    mean_log = np.log2(counts).mean(axis=0)

    order = np.argsort(levels)
    levels, mean_log = levels[order], mean_log[order]
    geo_counts = np.exp2(mean_log)
    multi = np.nonzero(geo_counts > 2 ** proc.d + 0.5)[0]
    start = levels[multi[0]] + 2 if multi.size else levels[0]
    usable = (levels >= start) & (geo_counts <= npts / 16.0)
    if not multi.size:
        if step > 0.0:
            raise UsageError("the path never spreads past 2^d boxes; refine the mesh or enlarge r")
        usable = np.ones_like(usable)
    idx = np.nonzero(usable)[0][-window:]
    if idx.size < 4:
        raise UsageError(f"only {idx.size} usable box-count levels; refine the mesh or enlarge r")
    x, y = levels[idx].astype(float), mean_log[idx]
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    return BoxDimension(dim=float(max(0.0, slope)), residual=resid, levels=levels,
                        counts=geo_counts, fit_levels=levels[idx], points=npts)
