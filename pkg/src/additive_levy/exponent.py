"""Lévy exponents and additive processes built from them.

A Lévy exponent is the function ``Psi`` with ``E exp(i xi.X_t) = exp(-t Psi(xi))``.
Every evaluator in this package is vectorised: it takes an array of shape
``(M, d)`` and returns ``M`` complex values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "UsageError",
    "InvalidExponentError",
    "LevyExponent",
    "AdditiveProcess",
    "isotropic_stable",
    "brownian",
    "stable_subordinator",
    "drift",
    "zero_exponent",
    "custom",
    "eval_exponent",
    "conjugate",
    "pair_difference",
    "re_resolvent",
]

ALPHA_TOL = 1e-9
CHECK_POINTS = 256


class UsageError(ValueError):
    """Bad arguments or malformed input supplied by the caller."""


class InvalidExponentError(ValueError):
    """A sampled invariant of a Lévy exponent failed at construction."""


Evaluator = Callable[[np.ndarray], np.ndarray]


def _as_points(xi, dim: int) -> tuple[np.ndarray, bool]:
    """Coerce ``xi`` to shape (M, dim). Returns (points, was_single)."""
    arr = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise UsageError("points must be finite")
    if arr.ndim == 0:
        if dim != 1:
            raise UsageError(f"scalar point given for ambient dimension {dim}")
        return arr.reshape(1, 1), True
    if dim == 1 and arr.ndim == 1 and arr.shape[0] != 1:
        # a flat vector of 1-D points
        return arr.reshape(-1, 1), False
    if arr.ndim == 1:
        if arr.shape[0] != dim:
            raise UsageError(f"point has dimension {arr.shape[0]}, expected {dim}")
        return arr.reshape(1, dim), True
    if arr.shape[-1] != dim:
        raise UsageError(f"points have dimension {arr.shape[-1]}, expected {dim}")
    return arr.reshape(-1, dim), False


@dataclass(frozen=True, eq=False)
class LevyExponent:
    """An immutable Lévy exponent on R^d.

    ``family`` is one of ``"isotropic_stable"``, ``"stable_subordinator"``,
    ``"conjugated"`` or ``"custom"``. ``alpha`` is set for the two stable
    families and ``inner`` for conjugated exponents.
    """

    ambient_dim: int
    family: str
    evaluator: Evaluator = field(repr=False)
    alpha: Optional[float] = None
    subordinator: bool = False
    inner: Optional["LevyExponent"] = field(default=None, repr=False)
    label: str = ""
    hermitian: bool = True
    params: Optional[dict] = field(default=None, compare=False)

    def __call__(self, xi) -> np.ndarray | complex:
        pts, single = _as_points(xi, self.ambient_dim)
        vals = np.asarray(self.evaluator(pts), dtype=complex).reshape(-1)
        return complex(vals[0]) if single else vals

    def is_real(self) -> bool:
        return self.family == "isotropic_stable"

    def describe(self) -> dict:
        out = {"family": self.family, "d": self.ambient_dim}
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.label:
            out["label"] = self.label
        if self.params:
            out.update(self.params)
        return out


def _check_invariants(exp: LevyExponent, n: int = CHECK_POINTS, seed: int = 20240101) -> None:
    rng = np.random.default_rng(seed)
    d = exp.ambient_dim
    scales = 10.0 ** rng.uniform(-3, 3, size=(n, 1))
    pts = rng.standard_normal((n, d)) * scales
    psi0 = exp(np.zeros(d))
    if abs(psi0) > 1e-12:
        raise InvalidExponentError(f"Psi(0) = {psi0}, expected 0")
    vals = exp(pts)
    if not np.all(np.isfinite(vals)):
        raise InvalidExponentError("evaluator returned non-finite values")
    if np.any(vals.real < -1e-12 * (1.0 + np.abs(vals))):
        raise InvalidExponentError("Re Psi < 0 at a sampled point")
    if exp.hermitian:
        mirror = exp(-pts)
        if not np.allclose(mirror, np.conj(vals), rtol=1e-9, atol=1e-12):
            raise InvalidExponentError("Psi(-xi) != conj(Psi(xi)) at a sampled point")


@dataclass(frozen=True)
class AdditiveProcess:
    """N independent Lévy processes in R^d summed into an N-parameter field."""

    components: tuple[LevyExponent, ...]

    def __init__(self, components: Sequence[LevyExponent]):
        comps = tuple(components)
        if not comps:
            raise UsageError("an additive process needs at least one component")
        dims = {c.ambient_dim for c in comps}
        if len(dims) != 1:
            raise UsageError(f"components disagree on ambient dimension: {sorted(dims)}")
        object.__setattr__(self, "components", comps)

    @property
    def N(self) -> int:
        return len(self.components)

    @property
    def d(self) -> int:
        return self.components[0].ambient_dim

    def describe(self) -> dict:
        return {"d": self.d, "N": self.N, "components": [c.describe() for c in self.components]}


# constructors ---------------------------------------------------------------

def isotropic_stable(alpha: float, d: int = 1) -> LevyExponent:
    """Psi(xi) = |xi|^alpha, alpha in (0, 2]."""
    alpha = float(alpha)
    if not (0.0 < alpha <= 2.0):
        raise UsageError(f"isotropic stable index must lie in (0, 2], got {alpha}")
    if d < 1:
        raise UsageError("ambient dimension must be positive")

    def ev(pts):
        # scale rows before squaring so tiny or huge |xi| neither underflow nor overflow
        big = np.abs(pts).max(axis=1)
        safe = np.where(big > 0, big, 1.0)
        u = pts / safe[:, None]
        r = big * np.sqrt(np.einsum("ij,ij->i", u, u))
        return (r ** alpha).astype(complex)

    return LevyExponent(ambient_dim=d, family="isotropic_stable", evaluator=ev, alpha=alpha)


def brownian(d: int = 1) -> LevyExponent:
    """Brownian motion with exponent |xi|^2 (variance 2t per coordinate)."""
    return isotropic_stable(2.0, d)


def stable_subordinator(alpha: float) -> LevyExponent:
    """Strictly alpha-stable subordinator with Laplace exponent lambda^alpha.

    Its Lévy exponent is |x|^alpha (cos(pi alpha/2) - i sgn(x) sin(pi alpha/2)).
    """
    alpha = float(alpha)
    if not (ALPHA_TOL < alpha < 1.0 - ALPHA_TOL):
        raise UsageError(f"subordinator index must lie in (0, 1), got {alpha}")
    c, s = math.cos(math.pi * alpha / 2.0), math.sin(math.pi * alpha / 2.0)

    def ev(pts):
        x = pts[:, 0]
        return np.abs(x) ** alpha * (c - 1j * np.sign(x) * s)

    return LevyExponent(ambient_dim=1, family="stable_subordinator", evaluator=ev,
                        alpha=alpha, subordinator=True)


def custom(evaluator: Evaluator, d: int, *, hermitian: bool = True, label: str = "custom",
           check: bool = True, subordinator: bool = False,
           params: Optional[dict] = None) -> LevyExponent:
    """Wrap a black-box vectorised evaluator. Invariants are spot-checked."""
    exp = LevyExponent(ambient_dim=d, family="custom", evaluator=evaluator, label=label,
                       hermitian=hermitian, subordinator=subordinator, params=params)
    if check:
        _check_invariants(exp)
    return exp


def drift(velocity: Sequence[float]) -> LevyExponent:
    """Deterministic motion X_t = b t, exponent -i b.xi."""
    b = np.asarray(velocity, dtype=float).reshape(-1)
    return custom(lambda pts: -1j * (pts @ b), d=b.size, label="drift",
                  params={"velocity": b.tolist()})


def zero_exponent(d: int = 1) -> LevyExponent:
    """The constant path X_t = 0."""
    return custom(lambda pts: np.zeros(pts.shape[0], dtype=complex), d=d, label="zero")


# operations -----------------------------------------------------------------

def eval_exponent(exp: LevyExponent, xi):
    """Psi(xi) for a single point or a batch of points."""
    return exp(xi)


def conjugate(exp: LevyExponent) -> LevyExponent:
    """Exponent of -X, i.e. the complex conjugate of ``exp``."""
    if exp.family == "conjugated" and exp.inner is not None:
        return exp.inner
    if exp.is_real():
        return exp
    inner_ev = exp.evaluator
    return LevyExponent(ambient_dim=exp.ambient_dim, family="conjugated",
                        evaluator=lambda pts: np.conj(inner_ev(pts)), alpha=exp.alpha,
                        inner=exp, label=f"conj({exp.label or exp.family})",
                        hermitian=exp.hermitian)


def pair_difference(exp: LevyExponent) -> LevyExponent:
    """Exponent of (X, -X) on R^{2d}: (xi1, xi2) -> Psi(xi1 - xi2)."""
    d = exp.ambient_dim
    inner_ev = exp.evaluator

    def ev(pts):
        return inner_ev(pts[:, :d] - pts[:, d:])

    return LevyExponent(ambient_dim=2 * d, family="custom", evaluator=ev,
                        label=f"pair({exp.label or exp.family})", hermitian=exp.hermitian)


def resolvent_real(psi: np.ndarray) -> np.ndarray:
    """Re(1/(1+psi)) as (1 + Re psi)/|1 + psi|^2, elementwise."""
    psi = np.asarray(psi, dtype=complex)
    one = 1.0 + psi.real
    return one / (one * one + psi.imag * psi.imag)


def re_resolvent(exp: LevyExponent, xi):
    """Re(1/(1 + Psi(xi))), a value in (0, 1]."""
    vals = exp(xi)
    out = resolvent_real(vals)
    return float(out) if np.ndim(out) == 0 else out
