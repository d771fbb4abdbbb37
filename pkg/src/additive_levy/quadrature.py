"""Convergence tests for improper integrals over R^n via dyadic shells.

The mass of an integrand on each shell 2^m <= |x| < 2^(m+1) is estimated by
Monte Carlo, and the slope of log2(mass) against m decides convergence: a
negative tail slope means the shell masses are summable.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .exponent import UsageError
from .integrand import Integrand, MultipointChain, MultipointDimension

__all__ = [
    "QuadratureOptions",
    "ShellTable",
    "DecayEstimate",
    "ConvergenceVerdict",
    "CONVERGES",
    "DIVERGES",
    "CRITICAL",
    "shell_mass",
    "shell_table",
    "fit_decay",
    "decide_convergence",
    "classify",
]

CONVERGES = "Converges"
DIVERGES = "Diverges"
CRITICAL = "Critical"

MAX_RESAMPLE = 16
_SHELL_TAG = 0x5E11


@dataclass(frozen=True)
class QuadratureOptions:
    m_min: int = -20
    m_max: int = 40
    samples: int = 4096
    seed: int = 0
    window: int = 10
    margin: float = 0.05
    residual_max: float = 0.1
    residual_flag: float = 0.5
    workers: int = 1

    def __post_init__(self):
        if self.m_max - self.m_min + 1 < 2 * self.window:
            raise UsageError("shell range must hold two fit windows")
        if self.window < 4:
            raise UsageError("fit window needs at least 4 shells")
        if self.samples < 64:
            raise UsageError("at least 64 samples per shell")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ShellTable:
    m: np.ndarray
    mass: np.ndarray
    stderr: np.ndarray
    samples: np.ndarray
    seed: int

    def partial_sum(self) -> float:
        return float(self.mass.sum())

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "mass", "stderr", "samples"])
        for row in zip(self.m, self.mass, self.stderr, self.samples):
            w.writerow([int(row[0]), repr(float(row[1])), repr(float(row[2])), int(row[3])])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


@dataclass
class DecayEstimate:
    slope: float
    residual: float
    window: tuple[int, int]

    def to_dict(self) -> dict:
        return {"slope": self.slope, "residual": self.residual, "window": list(self.window)}


@dataclass
class ConvergenceVerdict:
    verdict: str
    tail: DecayEstimate
    origin: Optional[DecayEstimate]
    value: Optional[float]
    shell_table: ShellTable
    flags: list = field(default_factory=list)
    value_stderr: Optional[float] = None
    assumptions: list = field(default_factory=list)

    @property
    def converges(self) -> bool:
        return self.verdict == CONVERGES

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "tail": self.tail.to_dict(),
            "origin": None if self.origin is None else self.origin.to_dict(),
            "value": self.value,
            "value_stderr": self.value_stderr,
            "flags": list(self.flags),
            "assumptions": list(self.assumptions),
        }


# sampling -------------------------------------------------------------------

def _shell_rng(seed: int, m: int) -> np.random.Generator:
    # per-shell stream keyed on (seed, m): order- and worker-independent
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_SHELL_TAG, int(m) + (1 << 20)))
    return np.random.default_rng(ss)


def _unit_sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def _radial_points(rng, m: int, count: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Points log-uniform in radius on shell m, uniform in direction; returns (x, r)."""
    u = rng.random(count)
    r = np.exp2(m + u)
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * r[:, None], r


def _radial_weights(spec: Integrand, rng, m: int, count: int) -> np.ndarray:
    n = spec.domain_dim
    area = _unit_sphere_area(n)
    x, r = _radial_points(rng, m, count, n)
    vals, bad = spec.values(x)
    tries = 0
    while np.any(bad):
        tries += 1
        if tries > MAX_RESAMPLE:
            raise ArithmeticError("singular locus hit repeatedly while sampling a shell")
        idx = np.flatnonzero(bad)
        x2, r2 = _radial_points(rng, m, idx.size, n)
        v2, b2 = spec.values(x2)
        r[idx], vals[idx], bad[idx] = r2, v2, b2
    # density of x is 1 / (area r^n ln 2)
    return vals * area * r ** n * math.log(2.0)


def _inner_range(opts: QuadratureOptions) -> tuple[float, float]:
    lo = min(opts.m_min, -8) - 4
    hi = max(opts.m_max, 8) + 8
    return float(lo), float(hi)


def _multipoint_weights(spec: MultipointDimension, rng, m: int, count: int,
                        opts: QuadratureOptions) -> np.ndarray:
    """Shell m in u = sum_j xi_j; the other coordinates by importance sampling.

    Given u, one increment (chosen uniformly) is eliminated by the constraint
    and the remaining k - 1 are drawn log-uniform in radius over [2^lo, 2^hi]
    about the origin. The proposal density is the mixture over which
    increment was eliminated, so every large-increment configuration is covered.
    """
    d, k = spec.d, spec.k
    lo, hi = _inner_range(opts)
    area = _unit_sphere_area(d)
    span = (hi - lo) * math.log(2.0)

    def q(eta):
        r = np.sqrt(np.einsum("ij,ij->i", eta, eta))
        inside = (r >= 2.0 ** lo) & (r < 2.0 ** hi)
        with np.errstate(divide="ignore"):
            dens = 1.0 / (area * span * np.where(inside, r, 1.0) ** d)
        return np.where(inside, dens, 0.0)

    u, ru = _radial_points(rng, m, count, d)
    choice = rng.integers(0, k, size=count)
    eta = np.empty((count, k, d))
    for j in range(k):
        v = rng.random(count)
        rad = np.exp2(lo + (hi - lo) * v)
        g = rng.standard_normal((count, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        eta[:, j] = g * rad[:, None]
    rows = np.arange(count)
    eta[rows, choice] = 0.0
    eta[rows, choice] = u - eta.sum(axis=1)

    qs = np.stack([q(eta[:, j]) for j in range(k)], axis=1)
    dens = np.zeros(count)
    for i in range(k):
        term = np.ones(count)
        for j in range(k):
            if j != i:
                term = term * qs[:, j]
        dens += term / k

    vals, bad = spec.values_with_sum([eta[:, j] for j in range(k)], u)
    # the shell in u never contains u = 0, so bad stays empty
    if np.any(bad):
        raise ArithmeticError("singular locus hit in multipoint sampling")
    outer = area * ru ** d * math.log(2.0)
    return vals * outer / dens


def _chain_weights(spec: MultipointChain, rng, m: int, count: int,
                   opts: QuadratureOptions) -> np.ndarray:
    """Shell m of the chain integrand in the norm max_j |increment_j|.

    The chain point is parametrised by its k increments (summing to zero).
    Each mixture component eliminates one increment i, puts another one b on
    the shell and draws the rest log-uniform in radius below the shell's
    outer edge. Points whose largest increment falls off the shell get
    weight zero.
    """
    d, k = spec.d, spec.k
    lo = _inner_range(opts)[0]
    area = _unit_sphere_area(d)
    ln2 = math.log(2.0)

    def radii(eta):
        return np.sqrt(np.einsum("...j,...j->...", eta, eta))

    elim = rng.integers(0, k, size=count)
    big = (elim + 1 + rng.integers(0, k - 1, size=count)) % k
    eta = np.empty((count, k, d))
    for j in range(k):
        v = rng.random(count)
        g = rng.standard_normal((count, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        eta[:, j] = g * np.exp2(lo + (m + 1 - lo) * v)[:, None]
    rows = np.arange(count)
    v = rng.random(count)
    g = rng.standard_normal((count, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    eta[rows, big] = g * np.exp2(m + v)[:, None]
    eta[rows, elim] = 0.0
    eta[rows, elim] = -eta.sum(axis=1)

    r = radii(eta)
    top = r.max(axis=1)
    in_shell = (top >= 2.0 ** m) & (top < 2.0 ** (m + 1))
    with np.errstate(divide="ignore"):
        rd = np.where(r > 0, r, 1.0) ** d
    q_small = np.where((r >= 2.0 ** lo) & (r < 2.0 ** (m + 1)),
                       1.0 / (area * (m + 1 - lo) * ln2 * rd), 0.0)
    q_big = np.where((r >= 2.0 ** m) & (r < 2.0 ** (m + 1)), 1.0 / (area * ln2 * rd), 0.0)
    dens = np.zeros(count)
    for i in range(k):
        for b in range(k):
            if b == i:
                continue
            term = q_big[:, b].copy()
            for j in range(k):
                if j != i and j != b:
                    term *= q_small[:, j]
            dens += term
    dens /= k * (k - 1)

    vals = spec.values_from_increments(eta)
    return np.where(in_shell, vals / np.where(dens > 0, dens, 1.0), 0.0)


def shell_mass(spec: Integrand, m: int, samples: int = 4096, seed: int = 0,
               opts: Optional[QuadratureOptions] = None) -> tuple[float, float]:
    """Monte Carlo mass of ``spec`` on shell m, with its standard error."""
    if samples < 64:
        raise UsageError("at least 64 samples per shell")
    opts = opts or QuadratureOptions()
    rng = _shell_rng(seed, m)
    if isinstance(spec, MultipointDimension):
        w = _multipoint_weights(spec, rng, m, samples, opts)
    elif isinstance(spec, MultipointChain):
        w = _chain_weights(spec, rng, m, samples, opts)
    else:
        w = _radial_weights(spec, rng, m, samples)
    mean = float(w.mean())
    se = float(w.std(ddof=1) / math.sqrt(samples))
    return mean, se


def shell_table(spec: Integrand, opts: Optional[QuadratureOptions] = None) -> ShellTable:
    opts = opts or QuadratureOptions()
    ms = list(range(opts.m_min, opts.m_max + 1))

    def job(m):
        return shell_mass(spec, m, opts.samples, opts.seed, opts)

    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as ex:
            results = list(ex.map(job, ms))
    else:
        results = [job(m) for m in ms]
    # results come back in shell order whatever the scheduling
    return ShellTable(
        m=np.array(ms),
        mass=np.array([r[0] for r in results]),
        stderr=np.array([r[1] for r in results]),
        samples=np.full(len(ms), opts.samples),
        seed=opts.seed,
    )


# decisions ------------------------------------------------------------------

def fit_decay(m: np.ndarray, mass: np.ndarray) -> DecayEstimate:
    """Least-squares slope of log2(mass) against m, with RMS residual."""
    m = np.asarray(m, dtype=float)
    mass = np.asarray(mass, dtype=float)
    window = (int(m[0]), int(m[-1]))
    if np.all(mass == 0):
        return DecayEstimate(-math.inf, 0.0, window)
    if np.any(mass <= 0):
        # partial underflow: shells vanish faster than any power
        return DecayEstimate(-math.inf, 0.0, window)
    y = np.log2(mass)
    slope, icpt = np.polyfit(m, y, 1)
    resid = y - (slope * m + icpt)
    return DecayEstimate(float(slope), float(np.sqrt(np.mean(resid ** 2))), window)


def classify(tail: DecayEstimate, origin: Optional[DecayEstimate],
             opts: QuadratureOptions) -> tuple[str, list]:
    """The fixed margin rule mapping fitted slopes to a verdict."""
    eps = opts.margin
    flags = []
    fits = [tail] + ([origin] if origin is not None else [])
    if any(f.residual > opts.residual_flag and math.isfinite(f.slope) for f in fits):
        flags.append("non_power_law")
        return CRITICAL, flags
    if tail.slope >= eps:
        return DIVERGES, flags
    if origin is not None and origin.slope <= -eps:
        flags.append("origin_divergent")
        return DIVERGES, flags
    tail_ok = tail.slope <= -eps and tail.residual < opts.residual_max
    origin_ok = origin is None or (origin.slope >= eps and origin.residual < opts.residual_max)
    if tail_ok and origin_ok:
        return CONVERGES, flags
    if tail_ok:
        flags.append("origin_boundary")
    return CRITICAL, flags


def _geometric_tail(edge_mass: float, slope: float) -> float:
    ratio = 2.0 ** slope
    return edge_mass * ratio / (1.0 - ratio)


def decide_convergence(spec: Integrand, opts: Optional[QuadratureOptions] = None,
                       table: Optional[ShellTable] = None) -> ConvergenceVerdict:
    """Decide whether the integral of ``spec`` over R^n is finite.

    The tail slope is fitted on the outermost ``window`` shells and, for
    integrands singular at the origin, the origin slope on the innermost
    ones. When the integral converges, ``value`` adds geometric
    extrapolations beyond both ends of the table to the shell sum.
    """
    opts = opts or QuadratureOptions()
    if table is None:
        table = shell_table(spec, opts)
    W = opts.window
    tail = fit_decay(table.m[-W:], table.mass[-W:])
    origin_fit = fit_decay(table.m[:W], table.mass[:W])
    origin = origin_fit if spec.origin_singular else None
    verdict, flags = classify(tail, origin, opts)
    value = value_se = None
    if verdict == CONVERGES:
        value = table.partial_sum()
        if math.isfinite(tail.slope):
            value += _geometric_tail(float(table.mass[-1]), tail.slope)
        if math.isfinite(origin_fit.slope) and origin_fit.slope > 0:
            value += _geometric_tail(float(table.mass[0]), -origin_fit.slope)
        value_se = float(np.sqrt(np.sum(table.stderr ** 2)))
    return ConvergenceVerdict(verdict, tail, origin, value, table, flags, value_se)
