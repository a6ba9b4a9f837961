"""Turn noisy signed marginals into quantized probability measures.

Each signed marginal is mapped to the closest probability measure on its
embedded grid under the Monte-Carlo sliced W1, by adaptive-moment descent
with an exact Euclidean simplex projection after every step (the iterate
must stay a probability vector for the CDF-difference objective to make
sense). The best evaluated iterate is returned, so the result is never
worse than the clip-and-normalize initialization. The measure is then
quantized to m equally weighted particles by largest-remainder rounding.
"""

from dataclasses import dataclass

import numpy as np

from . import sliced_ot
from .data_model import DiscreteSchema
from .errors import ConfigError
from .privacy import SignedMarginal


@dataclass(frozen=True)
class ProjectionConfig:
    iterations: int = 1750
    n_mc: int = 200
    lr: float = 0.1
    scheduler_step: int = 100
    scheduler_factor: float = 0.8
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass(frozen=True)
class ProbabilityAtoms:
    """Probability measure on the embedded grid cells of one marginal."""

    subset: tuple
    locations: np.ndarray  # (cells, |S|) grid centers
    weights: np.ndarray  # (cells,) nonnegative, sums to 1


@dataclass(frozen=True)
class QuantizedMeasure:
    """m uniform particles at grid centers approximating a ProbabilityAtoms."""

    subset: tuple
    particle_coords: np.ndarray  # (m, |S|)


def clip_normalize_init(weights) -> np.ndarray:
    """Zero out negative weights and renormalize; uniform if nothing is left."""
    w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
    total = w.sum()
    if total <= 0.0:
        return np.full(w.shape, 1.0 / w.size)
    return w / total


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    cond = u + (1.0 - css) / idx > 0
    rho = idx[cond][-1]
    tau = (css[rho - 1] - 1.0) / rho
    return np.clip(v - tau, 0.0, None)


def project_weights(locations, target_weights, config: ProjectionConfig, seed: int):
    """Minimize sliced W1 to the signed target over the probability simplex.

    Projection directions are sampled once per call and held fixed, making
    this a deterministic convex program. Returns (weights, info) where info
    records the initial loss, the best loss and the iteration count.
    """
    locations = np.asarray(locations, dtype=float)
    target = np.asarray(target_weights, dtype=float).reshape(-1)
    proj = sliced_ot.sample_projections(locations.shape[1], config.n_mc, seed)
    order, gaps = sliced_ot.grid_projection_tables(locations, proj)

    w = clip_normalize_init(target)
    init_loss, _ = sliced_ot.sw1_signed_weight_grad_tables(w, target, order, gaps)
    best_w, best_loss = w.copy(), init_loss

    m1 = np.zeros_like(w)
    m2 = np.zeros_like(w)
    lr = config.lr
    for t in range(1, config.iterations + 1):
        loss, g = sliced_ot.sw1_signed_weight_grad_tables(w, target, order, gaps)
        if loss < best_loss:
            best_loss, best_w = loss, w.copy()
        # descend along the affine hull of the simplex: the common-mode
        # gradient component is discarded by the feasibility projection
        # anyway, and keeping it out of the moments stops the per-entry
        # normalization from turning it into step noise
        g = g - g.mean()
        m1 = config.beta1 * m1 + (1.0 - config.beta1) * g
        m2 = config.beta2 * m2 + (1.0 - config.beta2) * g * g
        m1_hat = m1 / (1.0 - config.beta1 ** t)
        m2_hat = m2 / (1.0 - config.beta2 ** t)
        w = project_simplex(w - lr * m1_hat / (np.sqrt(m2_hat) + config.eps))
        if t % config.scheduler_step == 0:
            lr *= config.scheduler_factor
    final_loss, _ = sliced_ot.sw1_signed_weight_grad_tables(w, target, order, gaps)
    if final_loss < best_loss:
        best_loss, best_w = final_loss, w
    return best_w, {
        "init_loss": float(init_loss),
        "final_loss": float(best_loss),
        "iterations": config.iterations,
    }


def project_to_probability(
    signed: SignedMarginal, schema: DiscreteSchema,
    config: ProjectionConfig = ProjectionConfig(), seed: int = 0,
):
    """Projection step for one privatized marginal.

    Returns (ProbabilityAtoms, info dict).
    """
    locations, target = signed.atoms(schema)
    weights, info = project_weights(locations, target, config, seed)
    return ProbabilityAtoms(
        subset=tuple(signed.subset), locations=locations, weights=weights
    ), info


def largest_remainder_counts(weights, m: int) -> np.ndarray:
    """Apportion m particles to cells: floor(m*w) each, remainders by
    descending fractional part (ties to the lower cell index)."""
    if m < 1:
        raise ConfigError("particle count must be >= 1")
    w = np.asarray(weights, dtype=float)
    scaled = m * w
    counts = np.floor(scaled).astype(np.int64)
    remainder = m - int(counts.sum())
    if remainder < 0:
        raise ConfigError("weights must sum to (at most) 1 for apportionment")
    if remainder > 0:
        fractional = scaled - counts
        # stable sort on -frac keeps ties in cell-index order
        take = np.argsort(-fractional, kind="stable")[:remainder]
        counts[take] += 1
    return counts


def quantize(atoms: ProbabilityAtoms, m: int) -> QuantizedMeasure:
    """Represent the measure by m uniform particles at its grid centers."""
    counts = largest_remainder_counts(atoms.weights, m)
    coords = np.repeat(atoms.locations, counts, axis=0)
    return QuantizedMeasure(subset=atoms.subset, particle_coords=coords)
