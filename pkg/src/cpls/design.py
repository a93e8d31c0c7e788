"""Empirical design assembly: Gram matrix, observation vector, norms.

For a dimension pair (m1, m2), the stacked basis evaluations
``v = (phi_1(X), ..., phi_m1(X), psi_1(Y), ..., psi_m2(Y))`` drive three
objects, all averaged over paths and integrated over the retained time
window [t0, T] with left-point Riemann sums:

* the Gram matrix      ``gram[p,q] = (1/(N T0)) sum_i sum_l v_p v_q dt``
* the observation part ``zvec[p]  = (1/(N T0)) sum_i sum_l v_p dX``
  (left-point Ito discretization of the stochastic integral), and
* the constraint vector ``dvec = (0, ..., 0, delta_{m2})``.

``T0`` defaults to the window length T - t0; the experiment protocol
normalizes by the full horizon T instead, which callers select via
``t_norm``. The quadrature rule for the ds-integrals is configurable
("left" or "trapezoid"); the dX-sums are always left-point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bases import BasisFamily, delta_vector, eval_matrix
from .simulate import PathSample

_PATH_BLOCK = 64  # fixed block size => fixed summation order


@dataclass(frozen=True)
class DimPair:
    """Projection-space dimensions for the two drift components."""

    m1: int
    m2: int

    def __post_init__(self):
        if self.m1 < 0 or self.m2 < 0 or self.m1 + self.m2 < 1:
            raise ValueError(f"need m1, m2 >= 0 with m1 + m2 >= 1, got {self}")

    @property
    def total(self) -> int:
        return self.m1 + self.m2

    def __iter__(self):
        return iter((self.m1, self.m2))


@dataclass
class DesignSystem:
    """Assembled (gram, zvec, dvec) at a dimension pair, plus the window."""

    dims: DimPair
    gram: np.ndarray
    zvec: np.ndarray
    dvec: np.ndarray
    t0: float
    T: float
    t_norm: float

    @property
    def size(self) -> int:
        return self.dims.total


def _check_dims(sample: PathSample, dims: DimPair) -> None:
    if dims.m1 > sample.n_paths or dims.m2 > sample.n_paths:
        raise ValueError(
            f"dimensions {dims} exceed the number of paths {sample.n_paths}"
        )


def _time_weights(sample: PathSample, rule: str) -> np.ndarray:
    n_window = sample.grid.n_steps - sample.grid.drop_first
    w = np.full(n_window, sample.grid.dt)
    if rule == "trapezoid":
        w[0] *= 0.5
        w[-1] *= 0.5
    elif rule != "left":
        raise ValueError(f"unknown quadrature rule {rule!r}")
    return w


def _resolve_t_norm(sample: PathSample, t_norm: float | None) -> float:
    if t_norm is None:
        return sample.grid.total_time - sample.grid.t0
    if not (t_norm > 0):
        raise ValueError(f"t_norm must be positive, got {t_norm!r}")
    return float(t_norm)


def _stacked_eval(
    sample: PathSample, phi: BasisFamily, psi: BasisFamily, dims: DimPair, rows: slice
) -> np.ndarray:
    """Basis evaluations on the window's left points, flattened over (path, time)."""
    lo = sample.grid.drop_first
    hi = sample.grid.n_steps
    xs = sample.x[rows, lo:hi].ravel()
    ys = sample.y[rows, lo:hi].ravel()
    cols = []
    if dims.m1 > 0:
        cols.append(eval_matrix(phi, dims.m1, xs))
    if dims.m2 > 0:
        cols.append(eval_matrix(psi, dims.m2, ys))
    return cols[0] if len(cols) == 1 else np.hstack(cols)


def assemble_gram(
    sample: PathSample,
    phi: BasisFamily,
    psi: BasisFamily,
    dims: DimPair,
    t_norm: float | None = None,
    rule: str = "left",
) -> np.ndarray:
    """Empirical Gram matrix of the stacked basis at ``dims``."""
    _check_dims(sample, dims)
    t0_norm = _resolve_t_norm(sample, t_norm)
    w = _time_weights(sample, rule)
    k = dims.total
    gram = np.zeros((k, k))
    sqrt_w = np.sqrt(w)
    for start in range(0, sample.n_paths, _PATH_BLOCK):
        rows = slice(start, min(start + _PATH_BLOCK, sample.n_paths))
        v = _stacked_eval(sample, phi, psi, dims, rows)
        v *= np.tile(sqrt_w, rows.stop - rows.start)[:, None]
        gram += v.T @ v
    gram /= sample.n_paths * t0_norm
    return 0.5 * (gram + gram.T)


def assemble_z(
    sample: PathSample,
    phi: BasisFamily,
    psi: BasisFamily,
    dims: DimPair,
    t_norm: float | None = None,
) -> np.ndarray:
    """Observation vector: basis values against the X-increments."""
    _check_dims(sample, dims)
    t0_norm = _resolve_t_norm(sample, t_norm)
    lo = sample.grid.drop_first
    hi = sample.grid.n_steps
    z = np.zeros(dims.total)
    for start in range(0, sample.n_paths, _PATH_BLOCK):
        rows = slice(start, min(start + _PATH_BLOCK, sample.n_paths))
        v = _stacked_eval(sample, phi, psi, dims, rows)
        dx = (sample.x[rows, lo + 1 : hi + 1] - sample.x[rows, lo:hi]).ravel()
        z += v.T @ dx
    return z / (sample.n_paths * t0_norm)


def empirical_norm_sq(
    sample: PathSample,
    phi: BasisFamily,
    psi: BasisFamily,
    coeffs: np.ndarray,
    dims: DimPair,
    t_norm: float | None = None,
    rule: str = "left",
) -> float:
    """Squared empirical norm of the expansion with the given coefficients.

    Computed by direct pointwise summation of (tau(X) + nu(Y))^2, not through
    the Gram quadratic form, so it can serve as an independent cross-check.
    """
    _check_dims(sample, dims)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (dims.total,):
        raise ValueError(f"coeffs must have length {dims.total}, got {coeffs.shape}")
    t0_norm = _resolve_t_norm(sample, t_norm)
    lo = sample.grid.drop_first
    hi = sample.grid.n_steps
    w = _time_weights(sample, rule)
    total = 0.0
    for start in range(0, sample.n_paths, _PATH_BLOCK):
        rows = slice(start, min(start + _PATH_BLOCK, sample.n_paths))
        n_rows = rows.stop - rows.start
        vals = _stacked_eval(sample, phi, psi, dims, rows) @ coeffs
        vals = vals.reshape(n_rows, hi - lo)
        total += float(np.sum((vals * vals) @ w))
    return total / (sample.n_paths * t0_norm)


#: Scale factor for the singularity threshold on the smallest eigenvalue.
EIG_THRESHOLD_PER_DIM = 1e-12


def inv_opnorm(gram: np.ndarray) -> float:
    """Operator norm of the Gram inverse, or +inf when numerically singular.

    The matrix counts as singular when its smallest eigenvalue falls below
    ``1e-12 * size``, a scale-aware cutoff far tighter than any stability
    event bound used downstream.
    """
    gram = np.asarray(gram, dtype=float)
    lam_min = float(np.linalg.eigvalsh(gram)[0])
    if lam_min <= EIG_THRESHOLD_PER_DIM * gram.shape[0]:
        return float("inf")
    return 1.0 / lam_min


def build_design(
    sample: PathSample,
    phi: BasisFamily,
    psi: BasisFamily,
    dims: DimPair,
    t_norm: float | None = None,
    rule: str = "left",
) -> DesignSystem:
    """Assemble the complete design system at ``dims`` in one pass."""
    gram = assemble_gram(sample, phi, psi, dims, t_norm, rule)
    zvec = assemble_z(sample, phi, psi, dims, t_norm)
    dvec = np.concatenate([np.zeros(dims.m1), delta_vector(psi, dims.m2) if dims.m2 else np.zeros(0)])
    return DesignSystem(
        dims=dims,
        gram=gram,
        zvec=zvec,
        dvec=dvec,
        t0=sample.grid.t0,
        T=sample.grid.total_time,
        t_norm=_resolve_t_norm(sample, t_norm),
    )


def subsystem(system: DesignSystem, dims: DimPair) -> DesignSystem:
    """Extract the nested design at smaller dimensions from a larger one.

    Valid because the projection spaces are nested: the Gram and observation
    entries at (m1, m2) are exactly the corresponding sub-blocks at any
    (M1, M2) >= (m1, m2) assembled from the same sample.
    """
    big = system.dims
    if dims.m1 > big.m1 or dims.m2 > big.m2:
        raise ValueError(f"{dims} is not nested in {big}")
    idx = np.concatenate([np.arange(dims.m1), big.m1 + np.arange(dims.m2)])
    return DesignSystem(
        dims=dims,
        gram=system.gram[np.ix_(idx, idx)],
        zvec=system.zvec[idx],
        dvec=system.dvec[idx],
        t0=system.t0,
        T=system.T,
        t_norm=system.t_norm,
    )
