"""Decision integrands and the complex identities behind them.

Each integrand is a nonnegative function on R^n with a declared ``domain_dim``.
Integrands are called on batches of shape (M, n); a point on the singular
locus raises :class:`SingularPointError` rather than returning infinity.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exponent import AdditiveProcess, LevyExponent, UsageError, resolvent_real

__all__ = [
    "SingularPointError",
    "Integrand",
    "RangeProduct",
    "RieszWeighted",
    "MultipointChain",
    "MultipointDimension",
    "SubordinatorIntersection",
    "QLambdaR",
    "evaluate",
    "sector_ratio",
    "signed_family_sum",
    "conjugate_permutation_sum",
    "cyclic_transform",
    "inverse_cyclic_transform",
    "q_lambda_r",
    "q_factor",
    "INTEGRAND_KINDS",
]


class SingularPointError(ArithmeticError):
    """Raised when an integrand is evaluated exactly on its singular locus."""


def _batch(points, n: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim == 1:
        if n == 1 and arr.shape[0] != 1:
            return arr.reshape(-1, 1), False
        if arr.shape[0] != n:
            raise UsageError(f"point has dimension {arr.shape[0]}, expected {n}")
        return arr.reshape(1, n), True
    if arr.shape[-1] != n:
        raise UsageError(f"points have dimension {arr.shape[-1]}, expected {n}")
    return arr.reshape(-1, n), False


def _product_resolvent(exps: Sequence[LevyExponent], pts: np.ndarray) -> np.ndarray:
    out = np.ones(pts.shape[0])
    for e in exps:
        out *= resolvent_real(e.evaluator(pts))
    return out


class Integrand:
    """Base class: subclasses implement ``values`` returning (f, singular_mask)."""

    kind: str = ""
    domain_dim: int
    origin_singular: bool = False

    def values(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def __call__(self, points):
        pts, single = _batch(points, self.domain_dim)
        vals, bad = self.values(pts)
        if np.any(bad):
            raise SingularPointError(f"{self.kind} evaluated on its singular locus")
        return float(vals[0]) if single else vals

    def describe(self) -> dict:
        return {"kind": self.kind, "domain_dim": self.domain_dim}


@dataclass(frozen=True, eq=False)
class RangeProduct(Integrand):
    """prod_j Re(1/(1 + Psi_j(xi))) on R^d."""

    process: AdditiveProcess
    kind = "range"

    @property
    def domain_dim(self) -> int:
        return self.process.d

    def values(self, pts):
        return _product_resolvent(self.process.components, pts), np.zeros(len(pts), bool)


@dataclass(frozen=True, eq=False)
class RieszWeighted(Integrand):
    """|xi|^(beta - d) times the range product."""

    process: AdditiveProcess
    beta: float
    kind = "riesz"
    origin_singular = True

    def __post_init__(self):
        if not (0.0 < self.beta < self.process.d):
            raise UsageError(f"beta must lie in (0, {self.process.d}), got {self.beta}")

    @property
    def domain_dim(self) -> int:
        return self.process.d

    def values(self, pts):
        r = np.sqrt(np.einsum("ij,ij->i", pts, pts))
        bad = r == 0.0
        with np.errstate(divide="ignore"):
            w = np.where(bad, 0.0, r) ** (self.beta - self.process.d)
        w[bad] = 0.0
        return w * _product_resolvent(self.process.components, pts), bad

    def describe(self):
        return {**super().describe(), "beta": self.beta}


def _check_exponent_list(exponents, k_min=2) -> tuple[LevyExponent, ...]:
    exps = tuple(exponents)
    if len(exps) < k_min:
        raise UsageError(f"need at least {k_min} exponents, got {len(exps)}")
    dims = {e.ambient_dim for e in exps}
    if len(dims) != 1:
        raise UsageError(f"exponents disagree on ambient dimension: {sorted(dims)}")
    return exps


@dataclass(frozen=True, eq=False)
class MultipointChain(Integrand):
    """prod_{j=1..k} Re(1/(1 + Psi_j(xi_j - xi_{j-1}))) with xi_0 = xi_k = 0.

    The point is (xi_1, ..., xi_{k-1}) in R^{d(k-1)}.
    """

    exponents: tuple
    kind = "multipoints"

    def __post_init__(self):
        object.__setattr__(self, "exponents", _check_exponent_list(self.exponents))

    @property
    def k(self) -> int:
        return len(self.exponents)

    @property
    def d(self) -> int:
        return self.exponents[0].ambient_dim

    @property
    def domain_dim(self) -> int:
        return self.d * (self.k - 1)

    def values(self, pts):
        d, k = self.d, self.k
        out = np.ones(len(pts))
        prev = np.zeros((len(pts), d))
        for j in range(k):
            cur = pts[:, j * d:(j + 1) * d] if j < k - 1 else np.zeros((len(pts), d))
            out *= resolvent_real(self.exponents[j].evaluator(cur - prev))
            prev = cur
        return out, np.zeros(len(pts), bool)

    def values_from_increments(self, eta: np.ndarray) -> np.ndarray:
        """Values at the chain whose k increments (shape (M, k, d), summing to zero) are given."""
        out = np.ones(eta.shape[0])
        for j, e in enumerate(self.exponents):
            out *= resolvent_real(e.evaluator(eta[:, j]))
        return out

    def describe(self):
        return {**super().describe(), "k": self.k}


@dataclass(frozen=True, eq=False)
class MultipointDimension(Integrand):
    """|sum_j xi_j|^(beta - d) prod_j Re(1/(1 + Psi_j(xi_j))) on R^{dk}.

    ``beta == d`` is accepted and drops the weight; the dimension solver uses
    that form to read off the decay of the k-fold convolution directly.
    """

    exponents: tuple
    beta: float
    kind = "multipoint_dimension"
    origin_singular = True

    def __post_init__(self):
        exps = _check_exponent_list(self.exponents)
        object.__setattr__(self, "exponents", exps)
        d = exps[0].ambient_dim
        if not (0.0 < self.beta <= d):
            raise UsageError(f"beta must lie in (0, {d}], got {self.beta}")

    @property
    def k(self) -> int:
        return len(self.exponents)

    @property
    def d(self) -> int:
        return self.exponents[0].ambient_dim

    @property
    def domain_dim(self) -> int:
        return self.d * self.k

    def weight(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        r = np.sqrt(np.einsum("ij,ij->i", u, u))
        if self.beta == self.d:
            return np.ones(len(u)), np.zeros(len(u), bool)
        bad = r == 0.0
        with np.errstate(divide="ignore"):
            w = np.where(bad, 1.0, r) ** (self.beta - self.d)
        w[bad] = 0.0
        return w, bad

    def values(self, pts):
        d = self.d
        blocks = [pts[:, j * d:(j + 1) * d] for j in range(self.k)]
        return self.values_with_sum(blocks, sum(blocks))

    def values_with_sum(self, blocks, u):
        """Values when the sum of the blocks is already known exactly.

        Re-summing large blocks loses a small sum to rounding, so samplers
        that construct the blocks from u pass it in here.
        """
        w, bad = self.weight(u)
        out = w.copy()
        for e, b in zip(self.exponents, blocks):
            out *= resolvent_real(e.evaluator(b))
        return out, bad

    def describe(self):
        return {**super().describe(), "k": self.k, "beta": self.beta}


@dataclass(frozen=True, eq=False)
class SubordinatorIntersection(Integrand):
    """Re(1/Psi_1(x)) Re(1/(1 + Psi_2(x))) on R."""

    psi1: LevyExponent
    psi2: LevyExponent
    kind = "subintersect"
    origin_singular = True
    domain_dim = 1

    def __post_init__(self):
        if self.psi1.ambient_dim != 1 or self.psi2.ambient_dim != 1:
            raise UsageError("subordinator intersection needs one-dimensional exponents")

    def values(self, pts):
        p1 = self.psi1.evaluator(pts)
        bad = p1 == 0
        safe = np.where(bad, 1.0, p1)
        inv = (safe.real / (safe.real ** 2 + safe.imag ** 2))
        inv[bad] = 0.0
        return inv * resolvent_real(self.psi2.evaluator(pts)), bad


@dataclass(frozen=True, eq=False)
class QLambdaR(Integrand):
    """xi -> Q_{lambda^r}(xi), integrated by the range-scale estimate."""

    process: AdditiveProcess
    r: float
    kind = "q_lambda_r"

    def __post_init__(self):
        if not self.r > 0:
            raise UsageError("r must be positive")

    @property
    def domain_dim(self) -> int:
        return self.process.d

    def values(self, pts):
        out = np.ones(len(pts))
        for e in self.process.components:
            out *= q_factor(e.evaluator(pts), self.r)
        return out, np.zeros(len(pts), bool)

    def describe(self):
        return {**super().describe(), "r": self.r}


INTEGRAND_KINDS = {
    "range": RangeProduct,
    "riesz": RieszWeighted,
    "multipoints": MultipointChain,
    "multipoint_dimension": MultipointDimension,
    "subintersect": SubordinatorIntersection,
}


def evaluate(spec: Integrand, point):
    """Value of ``spec`` at one point (float) or a batch (array)."""
    return spec(point)


# identities -----------------------------------------------------------------

def sector_ratio(process: AdditiveProcess, xi):
    """Re(prod 1/(1+Psi_j)) / prod Re(1/(1+Psi_j)); negative values break the sector condition."""
    pts, single = _batch(xi, process.d)
    num = np.ones(len(pts), dtype=complex)
    den = np.ones(len(pts))
    for e in process.components:
        psi = e.evaluator(pts)
        num *= 1.0 / (1.0 + psi)
        den *= resolvent_real(psi)
    out = num.real / den
    return float(out[0]) if single else out


def _check_z(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z.real < 0):
        raise UsageError("all z_j need Re z_j >= 0")
    return z


def signed_family_sum(z) -> float:
    """Sum over the 2^(N-1) sign patterns (first entry fixed) of Re prod 1/(1 + z_j^{+-})."""
    z = _check_z(z)
    inv = 1.0 / (1.0 + z)
    total = 0.0
    for flips in itertools.product((False, True), repeat=len(z) - 1):
        prod = inv[0]
        for w, f in zip(inv[1:], flips):
            prod *= np.conj(w) if f else w
        total += prod.real
    return float(total)


def conjugate_permutation_sum(z) -> complex:
    """Sum over all 2^N conjugation patterns of prod 1/(1 + z_j^{+-})."""
    z = _check_z(z)
    inv = 1.0 / (1.0 + z)
    total = 0j
    for flips in itertools.product((False, True), repeat=len(z)):
        prod = 1.0 + 0j
        for w, f in zip(inv, flips):
            prod *= np.conj(w) if f else w
        total += prod
    return complex(total)


def cyclic_transform(points, k: int, d: int = 1) -> np.ndarray:
    """(xi_0, ..., xi_{k-1}) -> (xi_1 - xi_0, ..., xi_{k-1} - xi_{k-2}, -xi_{k-1}).

    The image coordinates are the chain increments closed by xi_k = 0, so they
    sum to -xi_0 and the Jacobian is one.
    """
    if k < 2:
        raise UsageError("cyclic transform needs k >= 2")
    pts = np.asarray(points, dtype=float)
    flat = pts.ndim == 1
    pts = pts.reshape(-1, k, d)
    out = np.empty_like(pts)
    out[:, :-1] = pts[:, 1:] - pts[:, :-1]
    out[:, -1] = -pts[:, -1]
    out = out.reshape(-1, k * d)
    return out[0] if flat else out


def inverse_cyclic_transform(points, k: int, d: int = 1) -> np.ndarray:
    if k < 2:
        raise UsageError("cyclic transform needs k >= 2")
    pts = np.asarray(points, dtype=float)
    flat = pts.ndim == 1
    pts = pts.reshape(-1, k, d)
    out = np.empty_like(pts)
    out[:, -1] = -pts[:, -1]
    for j in range(k - 2, -1, -1):
        out[:, j] = out[:, j + 1] - pts[:, j]
    out = out.reshape(-1, k * d)
    return out[0] if flat else out


# Q_{lambda^r} ---------------------------------------------------------------

_SERIES_TERMS = 10
_SERIES_CUTOFF = 0.05
_SERIES_COEF = np.array([1.0 / math.factorial(n + 2) for n in range(_SERIES_TERMS)])


def _expm1_complex(z: np.ndarray) -> np.ndarray:
    a, b = z.real, z.imag
    s = np.sin(0.5 * b)
    re = np.expm1(a) * np.cos(b) - 2.0 * s * s
    return re + 1j * np.exp(a) * np.sin(b)


def q_factor(psi, r: float) -> np.ndarray:
    """int_0^r int_0^r exp(-|t-s| Psi(sgn(t-s) xi)) ds dt for each value of Psi(xi).

    Closed form 2 Re(r/Psi - (1 - exp(-r Psi))/Psi^2), limit r^2 at Psi = 0.
    """
    psi = np.asarray(psi, dtype=complex)
    x = r * psi
    # the closed form cancels like eps/|x|; the series is exact to ~1e-22 here
    small = np.abs(x) < _SERIES_CUTOFF
    g = np.empty_like(x)
    xs = x[small]
    acc = np.zeros_like(xs)
    for c in _SERIES_COEF[::-1]:
        acc = acc * (-xs) + c
    g[small] = acc
    xl = x[~small]
    g[~small] = (xl + _expm1_complex(-xl)) / (xl * xl)
    return 2.0 * r * r * g.real


def q_lambda_r(process: AdditiveProcess, r: float, xi):
    """Q for the Lebesgue measure on [0, r]^N: a product over components."""
    if not r > 0:
        raise UsageError("r must be positive")
    pts, single = _batch(xi, process.d)
    out = np.ones(len(pts))
    for e in process.components:
        out *= q_factor(e.evaluator(pts), r)
    return float(out[0]) if single else out
