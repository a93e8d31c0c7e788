"""Orthonormal function families used as projection spaces.

Four families are supported, each orthonormal in L2 of its support:

* ``trig``          -- [0,1] trigonometric basis including the constant:
                       1, sqrt(2)cos(2*pi*x), sqrt(2)sin(2*pi*x),
                       sqrt(2)cos(4*pi*x), sqrt(2)sin(4*pi*x), ...
* ``trig-noconst``  -- same frequencies without the constant function, so
                       every element integrates to zero over [0,1].
* ``laguerre``      -- Laguerre functions on [0, inf):
                       l_k(x) = sqrt(2) L_k(2x) exp(-x), with L_k the
                       Laguerre polynomials.
* ``hermite``       -- Hermite functions on the whole line:
                       h_k(x) = (2^k k! sqrt(pi))^{-1/2} H_k(x) exp(-x^2/2).

Outside its support a family evaluates to zero (indicator convention).
Evaluation uses stable normalized recurrences throughout; the classical
polynomial definitions overflow long before k = 200.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quadrature import simpson_grid

SQRT2 = math.sqrt(2.0)


class BasisKind(enum.Enum):
    TRIG = "trig"
    TRIG_NO_CONST = "trig-noconst"
    LAGUERRE = "laguerre"
    HERMITE = "hermite"


@dataclass(frozen=True)
class BasisFamily:
    """An orthonormal family identified by kind, with its support interval."""

    kind: BasisKind

    @property
    def support(self) -> tuple[float, float]:
        if self.kind in (BasisKind.TRIG, BasisKind.TRIG_NO_CONST):
            return (0.0, 1.0)
        if self.kind is BasisKind.LAGUERRE:
            return (0.0, math.inf)
        return (-math.inf, math.inf)

    @property
    def name(self) -> str:
        return self.kind.value


TRIG = BasisFamily(BasisKind.TRIG)
TRIG_NO_CONST = BasisFamily(BasisKind.TRIG_NO_CONST)
LAGUERRE = BasisFamily(BasisKind.LAGUERRE)
HERMITE = BasisFamily(BasisKind.HERMITE)

_BY_NAME = {f.name: f for f in (TRIG, TRIG_NO_CONST, LAGUERRE, HERMITE)}


def family_by_name(name: str) -> BasisFamily:
    """Look up a family by its CLI identifier."""
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(
            f"unknown basis {name!r}; choose from {sorted(_BY_NAME)}"
        ) from None


def _check_m(m: int) -> int:
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError(f"dimension m must be a positive integer, got {m!r}")
    return int(m)


def _trig_columns(x: np.ndarray, m: int, with_const: bool) -> np.ndarray:
    out = np.zeros(x.shape + (m,))
    inside = (x >= 0.0) & (x <= 1.0)
    xi = x[inside]
    two_pi_x = 2.0 * math.pi * xi
    for c in range(m):
        if with_const:
            if c == 0:
                col = np.ones_like(xi)
            elif c % 2 == 1:  # sqrt(2) cos(2 pi j x), j = (c+1)//2
                col = SQRT2 * np.cos(((c + 1) // 2) * two_pi_x)
            else:  # sqrt(2) sin(2 pi j x), j = c//2
                col = SQRT2 * np.sin((c // 2) * two_pi_x)
        else:
            if c % 2 == 0:  # sqrt(2) cos(2 pi j x), j = c//2 + 1
                col = SQRT2 * np.cos((c // 2 + 1) * two_pi_x)
            else:  # sqrt(2) sin(2 pi j x), j = (c+1)//2
                col = SQRT2 * np.sin(((c + 1) // 2) * two_pi_x)
        out[inside, c] = col
    return out


def _laguerre_columns(x: np.ndarray, m: int) -> np.ndarray:
    # Recurrence on u_k = L_k(2x) exp(-x); |u_k| <= 1, so no overflow even
    # for very large x where L_k(2x) itself would.
    out = np.zeros(x.shape + (m,))
    inside = x >= 0.0
    xi = x[inside]
    z = 2.0 * xi
    u_prev = np.exp(-xi)
    out[inside, 0] = SQRT2 * u_prev
    if m == 1:
        return out
    u = (1.0 - z) * u_prev
    out[inside, 1] = SQRT2 * u
    for k in range(1, m - 1):
        u, u_prev = ((2 * k + 1 - z) * u - k * u_prev) / (k + 1), u
        out[inside, k + 1] = SQRT2 * u
    return out


def _hermite_columns(x: np.ndarray, m: int) -> np.ndarray:
    out = np.empty(x.shape + (m,))
    h_prev = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    out[..., 0] = h_prev
    if m == 1:
        return out
    h = SQRT2 * x * h_prev
    out[..., 1] = h
    for k in range(1, m - 1):
        h, h_prev = x * math.sqrt(2.0 / (k + 1)) * h - math.sqrt(k / (k + 1)) * h_prev, h
        out[..., k + 1] = h
    return out


def eval_matrix(family: BasisFamily, m: int, x: np.ndarray) -> np.ndarray:
    """Evaluate the first ``m`` family members at every point of ``x``.

    Returns an array of shape ``x.shape + (m,)``; points outside the support
    contribute zero rows. ``m = 0`` yields an empty trailing axis.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("basis evaluation requires finite arguments")
    if m == 0:
        return np.zeros(x.shape + (0,))
    m = _check_m(m)
    if family.kind is BasisKind.TRIG:
        return _trig_columns(x, m, with_const=True)
    if family.kind is BasisKind.TRIG_NO_CONST:
        return _trig_columns(x, m, with_const=False)
    if family.kind is BasisKind.LAGUERRE:
        return _laguerre_columns(x, m)
    return _hermite_columns(x, m)


def eval_vector(family: BasisFamily, m: int, x: float) -> np.ndarray:
    """Evaluate (phi_1(x), ..., phi_m(x)) at a single point."""
    m = _check_m(m)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    return eval_matrix(family, m, np.asarray(x))


def delta_vector(family: BasisFamily, m: int) -> np.ndarray:
    """Integrals of the first ``m`` family members over the support.

    Closed forms per family:

    * trig:          (1, 0, ..., 0)
    * trig-noconst:  all zeros
    * laguerre:      entry k (1-based) is sqrt(2) * (-1)^(k-1)
    * hermite:       odd-degree functions integrate to zero; degree 2k gives
                     sqrt(2) pi^{1/4} sqrt((2k)!) / (2^k k!)
    """
    m = _check_m(m)
    if family.kind is BasisKind.TRIG:
        out = np.zeros(m)
        out[0] = 1.0
        return out
    if family.kind is BasisKind.TRIG_NO_CONST:
        return np.zeros(m)
    if family.kind is BasisKind.LAGUERRE:
        signs = np.where(np.arange(m) % 2 == 0, 1.0, -1.0)
        return SQRT2 * signs
    out = np.zeros(m)
    for idx in range(m):
        deg = idx  # family entry idx is the Hermite function of degree idx
        if deg % 2 == 0:
            k = deg // 2
            log_ratio = 0.5 * math.lgamma(2 * k + 1) - k * math.log(2.0) - math.lgamma(k + 1)
            out[idx] = SQRT2 * math.pi ** 0.25 * math.exp(log_ratio)
    return out


def _hermite_sup_grid(m: int) -> float:
    # Grid maximum of sum_k h_k^2 on a symmetric interval wide enough to
    # contain the oscillatory region of every member; step 1e-3. The small
    # relative margin covers the off-grid remainder (second-order in the
    # step, observed < 2e-7).
    half = max(10.0, math.sqrt(2.0 * m + 1.0) + 2.0)
    n = int(round(2 * half / 1e-3)) + 1
    x = np.linspace(-half, half, n)
    total = np.zeros_like(x)
    h_prev = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    total += h_prev * h_prev
    if m > 1:
        h = SQRT2 * x * h_prev
        total += h * h
        for k in range(1, m - 1):
            h, h_prev = x * math.sqrt(2.0 / (k + 1)) * h - math.sqrt(k / (k + 1)) * h_prev, h
            total += h * h
    return float(total.max()) * (1.0 + 1e-6)


@lru_cache(maxsize=None)
def _sup_norm_bound_cached(kind: BasisKind, m: int) -> float:
    if kind is BasisKind.HERMITE:
        return _hermite_sup_grid(m)
    # Laguerre: each member is bounded by sqrt(2), and the bound 2m is tight.
    # Trigonometric: 2m is a valid upper bound for both variants.
    return 2.0 * m


def sup_norm_bound(family: BasisFamily, m: int) -> float:
    """Upper bound (Hermite: dense-grid estimate) of sup_x sum_{j<=m} phi_j(x)^2."""
    m = _check_m(m)
    return _sup_norm_bound_cached(family.kind, m)


# Truncation of unbounded supports: wide enough that every member up to
# m = 30 has negligible mass outside (the Laguerre oscillatory region ends
# near x = 2k + 1, so 60 would clip the top members).
_QUAD_DOMAIN = {
    BasisKind.TRIG: (0.0, 1.0, 20001),
    BasisKind.TRIG_NO_CONST: (0.0, 1.0, 20001),
    BasisKind.LAGUERRE: (0.0, 100.0, 200001),
    BasisKind.HERMITE: (-20.0, 20.0, 40001),
}


def quadrature_gram(family: BasisFamily, m: int, n_nodes: int | None = None) -> np.ndarray:
    """Simpson-quadrature Gram matrix of the first ``m`` members.

    Unbounded supports are truncated where the members are numerically
    negligible; for an orthonormal family the result is the identity up to
    quadrature error.
    """
    m = _check_m(m)
    lo, hi, default_nodes = _QUAD_DOMAIN[family.kind]
    x, w = simpson_grid(lo, hi, n_nodes or default_nodes)
    vals = eval_matrix(family, m, x)
    return (vals * w[:, None]).T @ vals


def orthonormality_residual(family: BasisFamily, m: int, n_nodes: int | None = None) -> float:
    """Max absolute deviation of the quadrature Gram from the identity."""
    gram = quadrature_gram(family, m, n_nodes)
    return float(np.abs(gram - np.eye(_check_m(m))).max())
