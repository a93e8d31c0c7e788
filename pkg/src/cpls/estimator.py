"""Constrained least-squares solve, stability events, and fit evaluation.

The coefficient vector minimizes the quadratic contrast
``J(theta) = theta' G theta - 2 theta' z`` over the hyperplane
``<theta, d> = 0``. Solving the Lagrangian stationarity conditions gives the
closed form

    theta = G^{-1} z - (d' G^{-1} z) / (d' G^{-1} d) * G^{-1} d,

with multiplier ``lambda = -2 (d' G^{-1} z) / (d' G^{-1} d)``. When d = 0 the
constraint is vacuous and theta = G^{-1} z. Solves use a Cholesky
factorization with one step of iterative refinement, falling back to a
symmetric indefinite solve when the Gram is nearly singular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bases import BasisFamily, eval_matrix, sup_norm_bound
from .design import DesignSystem, DimPair, inv_opnorm


class SingularDesignError(RuntimeError):
    """The Gram matrix is numerically singular; callers decide truncation."""


@dataclass
class FitResult:
    """Solved coefficients for one dimension pair.

    The first ``m1`` entries of ``theta`` are the coefficients of the
    x-drift expansion, the remaining ``m2`` those of the y-drift.
    ``gamma_value`` stores the empirical contrast at the minimizer,
    ``-theta' G theta``.
    """

    dims: DimPair
    theta: np.ndarray
    truncated: bool = False
    lambda_multiplier: float = 0.0
    gamma_value: float = 0.0

    @classmethod
    def zero(cls, dims: DimPair) -> "FitResult":
        return cls(dims=dims, theta=np.zeros(dims.total), truncated=True)


def _solver(gram: np.ndarray):
    """Return a refine-once linear solver for the symmetric matrix ``gram``."""
    try:
        cho = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)

        def solve(rhs: np.ndarray) -> np.ndarray:
            sol = scipy.linalg.cho_solve(cho, rhs, check_finite=False)
            sol += scipy.linalg.cho_solve(cho, rhs - gram @ sol, check_finite=False)
            return sol

    except scipy.linalg.LinAlgError:
        # Marginal smallest eigenvalue: pivoted symmetric indefinite solve.
        def solve(rhs: np.ndarray) -> np.ndarray:
            sol = scipy.linalg.solve(gram, rhs, assume_a="sym", check_finite=False)
            sol += scipy.linalg.solve(gram, rhs - gram @ sol, assume_a="sym", check_finite=False)
            return sol

    return solve


def solve_constrained(system: DesignSystem) -> FitResult:
    """Closed-form constrained minimizer of the empirical contrast.

    Raises :class:`SingularDesignError` when the Gram fails the scale-aware
    eigenvalue threshold; no explicit matrix inversion is performed.
    """
    if not math.isfinite(inv_opnorm(system.gram)):
        raise SingularDesignError(
            f"Gram matrix at dims {system.dims} is numerically singular"
        )
    solve = _solver(system.gram)
    u = solve(system.zvec)
    d = system.dvec
    if not np.any(d):
        theta = u
        lam = 0.0
    else:
        v = solve(d)
        ratio = float(d @ u) / float(d @ v)
        theta = u - ratio * v
        lam = -2.0 * ratio
    gamma = -float(theta @ (system.gram @ theta))
    return FitResult(
        dims=system.dims,
        theta=theta,
        truncated=False,
        lambda_multiplier=lam,
        gamma_value=gamma,
    )


def quadratic_objective(system: DesignSystem, theta: np.ndarray) -> float:
    """The empirical contrast J(theta) = theta' G theta - 2 theta' z."""
    theta = np.asarray(theta, dtype=float)
    return float(theta @ (system.gram @ theta) - 2.0 * (theta @ system.zvec))


def fit_residuals(system: DesignSystem, fit: FitResult) -> dict[str, float]:
    """Relative residuals of the constraint, optimality, and KKT identities.

    * ``constraint``: |<theta, d>| / (|theta| |d|)
    * ``optimality``: |theta'(G theta - z)| / max(|theta' G theta|, |theta' z|)
    * ``kkt``:        |2(G theta - z) - lambda d| / max(|2 G theta|, |2 z|, |lambda d|)

    All scales are floored to avoid division by zero for the zero fit.
    """
    theta = fit.theta
    d = system.dvec
    tiny = 1e-300
    g_theta = system.gram @ theta
    constraint = abs(float(theta @ d)) / max(
        float(np.linalg.norm(theta)) * float(np.linalg.norm(d)), tiny
    )
    r = g_theta - system.zvec
    optimality = abs(float(theta @ r)) / max(
        abs(float(theta @ g_theta)), abs(float(theta @ system.zvec)), tiny
    )
    kkt_vec = 2.0 * r - fit.lambda_multiplier * d
    kkt = float(np.linalg.norm(kkt_vec)) / max(
        2.0 * float(np.linalg.norm(g_theta)),
        2.0 * float(np.linalg.norm(system.zvec)),
        abs(fit.lambda_multiplier) * float(np.linalg.norm(d)),
        tiny,
    )
    return {"constraint": constraint, "optimality": optimality, "kkt": kkt}


@dataclass(frozen=True)
class StabilityRule:
    """Well-conditioning test applied to each candidate dimension pair.

    ``practical`` mode requires ``(m1 + m2) * |G^{-1}|_op <= cutoff * N / log N``
    (default cutoff 1e14). ``theoretical`` mode requires
    ``(L_phi(m1) + L_psi(m2)) * (|G^{-1}|_op v 1) <= c_r * N / log N`` with
    ``c_r = (1 - log 2) / (1 + r)``.
    """

    mode: str = "practical"
    cutoff: float = 1e14
    r: float = 7.0

    def __post_init__(self):
        if self.mode not in ("practical", "theoretical"):
            raise ValueError(f"unknown stability mode {self.mode!r}")
        if self.cutoff <= 0 or self.r <= 0:
            raise ValueError("cutoff and r must be positive")

    @property
    def c_r(self) -> float:
        return (1.0 - math.log(2.0)) / (1.0 + self.r)


def stability_event(
    system: DesignSystem,
    n_paths: int,
    rule: StabilityRule = StabilityRule(),
    phi: BasisFamily | None = None,
    psi: BasisFamily | None = None,
) -> bool:
    """Whether the empirical design passes the conditioning event at ``rule``.

    The theoretical mode needs the two basis families to evaluate their
    sup-norm bounds. A singular Gram (infinite inverse norm) always fails.
    """
    if n_paths < 2:
        raise ValueError("stability event requires n_paths >= 2")
    op = inv_opnorm(system.gram)
    if not math.isfinite(op):
        return False
    budget = n_paths / math.log(n_paths)
    if rule.mode == "practical":
        return system.dims.total * op <= rule.cutoff * budget
    if phi is None or psi is None:
        raise ValueError("theoretical stability mode requires phi and psi")
    lsum = 0.0
    if system.dims.m1 > 0:
        lsum += sup_norm_bound(phi, system.dims.m1)
    if system.dims.m2 > 0:
        lsum += sup_norm_bound(psi, system.dims.m2)
    return lsum * max(op, 1.0) <= rule.c_r * budget


def evaluate_fit(
    fit: FitResult,
    phi: BasisFamily,
    psi: BasisFamily,
    x: np.ndarray | float,
    y: np.ndarray | float,
) -> tuple[np.ndarray | float, np.ndarray | float]:
    """Evaluate the fitted drift pair (a_hat(x), b_hat(y)).

    Accepts scalars or arrays; a truncated fit evaluates to zero everywhere.
    """
    m1, m2 = fit.dims.m1, fit.dims.m2
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if fit.truncated or m1 == 0:
        a_hat = np.zeros(x_arr.shape)
    else:
        a_hat = eval_matrix(phi, m1, x_arr) @ fit.theta[:m1]
    if fit.truncated or m2 == 0:
        b_hat = np.zeros(y_arr.shape)
    else:
        b_hat = eval_matrix(psi, m2, y_arr) @ fit.theta[m1:]
    if np.isscalar(x) or x_arr.ndim == 0:
        a_hat = float(a_hat)
    if np.isscalar(y) or y_arr.ndim == 0:
        b_hat = float(b_hat)
    return a_hat, b_hat
