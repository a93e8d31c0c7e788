"""Independent reference implementations used only by the test suite."""

import numpy as np


def constrained_qp_nullspace(gram: np.ndarray, zvec: np.ndarray, dvec: np.ndarray) -> np.ndarray:
    """Minimize theta' G theta - 2 theta' z subject to <theta, d> = 0.

    Null-space elimination: parameterize the constraint hyperplane by an
    orthonormal basis Q of null(d') from the SVD, solve the reduced
    unconstrained problem, and map back. Deliberately avoids the Lagrangian
    closed form so it can certify it.
    """
    gram = np.asarray(gram, dtype=float)
    zvec = np.asarray(zvec, dtype=float)
    dvec = np.asarray(dvec, dtype=float)
    k = gram.shape[0]
    if not np.any(dvec):
        return np.linalg.solve(gram, zvec)
    _, _, vt = np.linalg.svd(dvec[None, :])
    q = vt[1:].T  # columns span null(d')
    reduced = q.T @ gram @ q
    w = np.linalg.solve(reduced, q.T @ zvec)
    return q @ w


def riemann_gram_entry(x_paths, y_paths, f, g, dt, t_norm):
    """Brute-force left-point design entry: mean over paths of sum f*g*dt / t_norm."""
    total = 0.0
    for xs, ys in zip(x_paths, y_paths):
        for xv, yv in zip(xs, ys):
            total += f(xv, yv) * g(xv, yv) * dt
    return total / (len(x_paths) * t_norm)
