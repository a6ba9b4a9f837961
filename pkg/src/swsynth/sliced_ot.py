"""Monte-Carlo sliced Wasserstein distances and their gradients.

Everything reduces to 1-d closed forms after projecting onto random unit
directions: squared W2 between equal-size particle clouds is a sorted
mean-square difference, and W1 between (possibly signed) atom sets is the
L1 norm of the CDF difference integrated between the first and last atom.
The per-projection work is delegated to the kernel backend.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class ProjectionSet:
    """Unit directions drawn uniformly on the sphere."""

    directions: np.ndarray  # (n_mc, p), unit rows
    seed: int

    @property
    def n_mc(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.directions.shape[1]


def sample_projections(p: int, n_mc: int, seed: int) -> ProjectionSet:
    """iid standard normal rows normalized to unit length."""
    if p < 1 or n_mc < 1:
        raise ConfigError("sample_projections needs p >= 1 and n_mc >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    dirs = rng.standard_normal((n_mc, p))
    norms = np.linalg.norm(dirs, axis=1)
    while np.any(norms < 1e-12):  # essentially unreachable
        bad = norms < 1e-12
        dirs[bad] = rng.standard_normal((int(bad.sum()), p))
        norms = np.linalg.norm(dirs, axis=1)
    return ProjectionSet(directions=dirs / norms[:, None], seed=seed)


def _check_pair(a, b):
    if a.shape != b.shape:
        raise DataError(f"shape mismatch: {a.shape} vs {b.shape}")


def w2_squared_1d(y, y_prime) -> float:
    """Squared 2-Wasserstein between two same-size 1-d empirical measures."""
    y = np.asarray(y, dtype=float).reshape(1, -1)
    y_prime = np.asarray(y_prime, dtype=float).reshape(1, -1)
    _check_pair(y, y_prime)
    return float(kernels.w2sq_rows(np.ascontiguousarray(y), np.ascontiguousarray(y_prime))[0])


def w2_squared_1d_grad(y, y_prime) -> np.ndarray:
    """Gradient of ``w2_squared_1d`` with respect to ``y`` (y' fixed)."""
    y = np.asarray(y, dtype=float).reshape(1, -1)
    y_prime = np.asarray(y_prime, dtype=float).reshape(1, -1)
    _check_pair(y, y_prime)
    _, grad = kernels.w2sq_grad_rows(
        np.ascontiguousarray(y), np.ascontiguousarray(y_prime)
    )
    return grad[0]


def _project_clouds(cloud_a, cloud_b, proj: ProjectionSet):
    a = np.asarray(cloud_a, dtype=float)
    b = np.asarray(cloud_b, dtype=float)
    if a.shape != b.shape:
        raise DataError(f"cloud shape mismatch: {a.shape} vs {b.shape}")
    if a.shape[1] != proj.dim:
        raise DataError(
            f"cloud dimension {a.shape[1]} != projection dimension {proj.dim}"
        )
    ya = np.ascontiguousarray(proj.directions @ a.T)  # (n_mc, m)
    yb = np.ascontiguousarray(proj.directions @ b.T)
    return ya, yb


def sw2_sq(cloud_a, cloud_b, proj: ProjectionSet) -> float:
    """Monte-Carlo squared sliced 2-Wasserstein between particle clouds."""
    ya, yb = _project_clouds(cloud_a, cloud_b, proj)
    return float(np.mean(kernels.w2sq_rows(ya, yb)))


def sw2_sq_value_grad(cloud_a, cloud_b, proj: ProjectionSet):
    """(value, gradient wrt cloud_a) of the Monte-Carlo squared SW2."""
    ya, yb = _project_clouds(cloud_a, cloud_b, proj)
    vals, g = kernels.w2sq_grad_rows(ya, yb)
    grad = g.T @ proj.directions / proj.n_mc  # (m, p)
    return float(np.mean(vals)), grad


def sw2_sq_grad(cloud_a, cloud_b, proj: ProjectionSet) -> np.ndarray:
    """Gradient of ``sw2_sq`` with respect to cloud_a positions."""
    return sw2_sq_value_grad(cloud_a, cloud_b, proj)[1]


def w1_signed_1d(locations_a, weights_a, locations_b, weights_b) -> float:
    """1-d W1 between signed atom sets via the CDF-difference integral.

    Exact for atomic measures; total-mass mismatch beyond the last merged
    atom does not contribute (the integral stops at the last breakpoint).
    """
    la = np.ascontiguousarray(np.asarray(locations_a, dtype=float).reshape(1, -1))
    lb = np.ascontiguousarray(np.asarray(locations_b, dtype=float).reshape(1, -1))
    wa = np.ascontiguousarray(np.asarray(weights_a, dtype=float).reshape(-1))
    wb = np.ascontiguousarray(np.asarray(weights_b, dtype=float).reshape(-1))
    if la.shape[1] != wa.size or lb.shape[1] != wb.size:
        raise DataError("locations and weights must have matching lengths")
    return float(kernels.w1_rows(la, wa, lb, wb)[0])


def sw1_signed(locations_a, weights_a, locations_b, weights_b,
               proj: ProjectionSet) -> float:
    """Monte-Carlo sliced W1 between signed atom sets in R^p."""
    la = np.asarray(locations_a, dtype=float)
    lb = np.asarray(locations_b, dtype=float)
    pa = np.ascontiguousarray(proj.directions @ la.T)  # (n_mc, ka)
    pb = np.ascontiguousarray(proj.directions @ lb.T)
    wa = np.ascontiguousarray(np.asarray(weights_a, dtype=float).reshape(-1))
    wb = np.ascontiguousarray(np.asarray(weights_b, dtype=float).reshape(-1))
    return float(np.mean(kernels.w1_rows(pa, wa, pb, wb)))


def grid_projection_tables(locations, proj: ProjectionSet):
    """Precompute per-projection sort order and gaps for a fixed atom set.

    Returns (order, gaps) with order (n_mc, k) int64 and gaps (n_mc, k-1);
    feed these to ``sw1_signed_weight_grad_tables`` for repeated evaluations
    against the same atom grid.
    """
    pts = np.asarray(locations, dtype=float) @ proj.directions.T  # (k, n_mc)
    pts = np.ascontiguousarray(pts.T)  # (n_mc, k)
    order = np.argsort(pts, axis=1, kind="stable").astype(np.int64)
    sorted_pts = np.take_along_axis(pts, order, axis=1)
    gaps = np.ascontiguousarray(np.diff(sorted_pts, axis=1))
    return np.ascontiguousarray(order), gaps


def sw1_signed_weight_grad_tables(weights, target_weights, order, gaps):
    """(value, subgradient wrt weights) of sliced W1 on one shared atom grid."""
    wdiff = np.ascontiguousarray(
        np.asarray(weights, dtype=float) - np.asarray(target_weights, dtype=float)
    )
    return kernels.sw1_grid_value_grad(wdiff, order, gaps)


def sw1_signed_grad_weights(locations, weights, target_weights,
                            proj: ProjectionSet):
    """(value, subgradient wrt weights) of the Monte-Carlo sliced W1 between
    two signed measures sharing the atom set ``locations``."""
    order, gaps = grid_projection_tables(locations, proj)
    return sw1_signed_weight_grad_tables(weights, target_weights, order, gaps)
