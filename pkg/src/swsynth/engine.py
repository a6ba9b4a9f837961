"""Mini-batch particle gradient descent over quantized marginal targets.

Each step sums, over the marginals in the batch, the sliced-W2^2 gradient
of the particle projection against its quantized target (scattered into the
full coordinate block), optionally adds a constraint-penalty gradient, masks
a random share of the entries, and applies a sparse adaptive-moment update.
Positions are clamped to the unit cube after every step; at the end each
particle snaps to its nearest grid point.
"""

import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import constraints as constraints_mod
from . import sliced_ot
from .data_model import DiscreteDataset, DiscreteSchema, nearest_grid
from .errors import ConfigError, DataError
from .seeds import subseed

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CHECKPOINT_MAGIC = b"PPGD"
CHECKPOINT_VERSION = 1


@dataclass
class EngineConfig:
    epochs: int = 1000
    batch_size: int = 5
    initial_lr: float = 0.1
    scheduler_step: int = 50
    scheduler_factor: float = 0.75
    n_mc: int = 10
    keep_fraction: float = 0.2
    lambda_reg: float = 0.0
    seed: int = 0
    fixed_projections: bool = False
    mask_per_epoch: bool = False
    reg_every_batch: bool = True
    checkpoint_interval: int = 0
    checkpoint_dir: Optional[str] = None

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.n_mc < 1:
            raise ConfigError("epochs >= 0, batch_size >= 1 and n_mc >= 1 required")
        if not (0.0 < self.keep_fraction <= 1.0):
            raise ConfigError("keep_fraction must lie in (0, 1]")
        if self.initial_lr <= 0:
            raise ConfigError("learning rate must be positive")


@dataclass
class ParticleSet:
    positions: np.ndarray  # (m, d) in [0,1]^d
    step_count: int = 0
    m1: np.ndarray = field(default=None, repr=False)
    m2: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.m1 is None:
            self.m1 = np.zeros_like(self.positions)
        if self.m2 is None:
            self.m2 = np.zeros_like(self.positions)

    @property
    def m(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


def init_particles(m: int, d: int, seed: int) -> ParticleSet:
    """iid uniform initialization on the unit cube."""
    if m < 1 or d < 1:
        raise ConfigError("init_particles needs m >= 1 and d >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return ParticleSet(positions=rng.random((m, d)))


def epoch_schedule(workload, batch_size: int, epoch_index: int, seed: int):
    """Seeded permutation of the workload cut into consecutive batches.

    Every workload item appears exactly once per epoch; the final batch may
    be smaller.
    """
    items = list(workload)
    if not items:
        raise ConfigError("empty workload")
    if batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    rng = np.random.default_rng(
        np.random.SeedSequence(subseed(seed, f"epoch:{epoch_index}"))
    )
    perm = rng.permutation(len(items))
    ordered = [items[i] for i in perm]
    return [
        ordered[i : i + batch_size] for i in range(0, len(ordered), batch_size)
    ]


def batch_gradient(
    particles: ParticleSet,
    batch,
    reg: Optional[constraints_mod.ThresholdConstraint],
    lambda_reg: float,
    n_mc: int,
    seed: int,
    fixed_projections: Optional[dict] = None,
):
    """Summed sliced-W2^2 gradient over a batch of quantized marginals.

    ``batch`` holds (index, QuantizedMeasure) pairs; fresh projections are
    drawn per marginal from ``seed`` unless ``fixed_projections`` maps the
    marginal index to a pre-sampled ProjectionSet. Returns (gradient, loss).
    """
    z = particles.positions
    grad = np.zeros_like(z)
    loss = 0.0
    for slot, (index, measure) in enumerate(batch):
        coords = measure.particle_coords
        if coords.shape[0] != particles.m:
            raise DataError(
                f"marginal {index}: particle count {coords.shape[0]} != {particles.m}"
            )
        cols = list(measure.subset)
        if fixed_projections is not None:
            proj = fixed_projections[index]
        else:
            proj = sliced_ot.sample_projections(
                len(cols), n_mc, subseed(seed, f"slot:{slot}:{index}")
            )
        value, g = sliced_ot.sw2_sq_value_grad(z[:, cols], coords, proj)
        loss += value
        grad[:, cols] += g
    if reg is not None and lambda_reg != 0.0:
        loss += lambda_reg * constraints_mod.penalty(z, reg)
        grad += lambda_reg * constraints_mod.penalty_grad(z, reg)
    return grad, loss


def sparse_mask(gradient: np.ndarray, keep_fraction: float, seed: int) -> np.ndarray:
    """Zero each entry independently with probability 1 - keep_fraction."""
    if not (0.0 < keep_fraction <= 1.0):
        raise ConfigError("keep_fraction must lie in (0, 1]")
    if keep_fraction == 1.0:
        return gradient
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    keep = rng.random(gradient.shape) < keep_fraction
    return np.where(keep, gradient, 0.0)


def optimizer_step(particles: ParticleSet, masked_gradient: np.ndarray, lr: float) -> ParticleSet:
    """Sparse adaptive-moment update at the nonzero gradient entries.

    Moments of untouched entries are left undecayed; bias correction uses
    the global step count. Positions are clamped to [0,1] afterwards.
    """
    particles.step_count += 1
    visited = masked_gradient != 0.0
    if np.any(visited):
        g = masked_gradient[visited]
        particles.m1[visited] = ADAM_BETA1 * particles.m1[visited] + (1 - ADAM_BETA1) * g
        particles.m2[visited] = ADAM_BETA2 * particles.m2[visited] + (1 - ADAM_BETA2) * g * g
        t = particles.step_count
        m1_hat = particles.m1[visited] / (1 - ADAM_BETA1 ** t)
        m2_hat = particles.m2[visited] / (1 - ADAM_BETA2 ** t)
        update = lr * m1_hat / (np.sqrt(m2_hat) + ADAM_EPS)
        particles.positions[visited] -= update
        np.clip(particles.positions, 0.0, 1.0, out=particles.positions)
    return particles


def _objective(particles, indexed_measures, diag_projections, reg, lambda_reg):
    total = 0.0
    for index, measure in indexed_measures:
        cols = list(measure.subset)
        total += sliced_ot.sw2_sq(
            particles.positions[:, cols], measure.particle_coords,
            diag_projections[index],
        )
    if reg is not None and lambda_reg != 0.0:
        total += lambda_reg * constraints_mod.penalty(particles.positions, reg)
    return total


def save_checkpoint(particles: ParticleSet, path) -> None:
    """Positions as little-endian float64 after a 16-byte header."""
    m, d = particles.positions.shape
    header = struct.pack("<4sIII", CHECKPOINT_MAGIC, CHECKPOINT_VERSION, m, d)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(particles.positions, dtype="<f8").tobytes())


def load_checkpoint(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        magic, version, m, d = struct.unpack("<4sIII", header)
        if magic != CHECKPOINT_MAGIC:
            raise DataError(f"{path}: not a particle checkpoint")
        if version != CHECKPOINT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        data = np.frombuffer(fh.read(m * d * 8), dtype="<f8")
    return data.reshape(m, d).astype(float)


def run(
    measures,
    reg: Optional[constraints_mod.ThresholdConstraint],
    config: EngineConfig,
    dims: Optional[int] = None,
    particles: Optional[ParticleSet] = None,
):
    """Full optimization: returns (ParticleSet, trace).

    ``trace`` is a list of (epoch, objective_estimate, lr) rows evaluated
    with a fixed diagnostic projection set; row 0 is the initialization.
    """
    measures = list(measures)
    if not measures:
        raise ConfigError("no marginal measures given")
    m = measures[0].particle_coords.shape[0]
    for q in measures:
        if q.particle_coords.shape[0] != m:
            raise DataError("quantized measures disagree on particle count")
    if dims is None:
        dims = max(max(q.subset) for q in measures) + 1
    if particles is None:
        particles = init_particles(m, dims, subseed(config.seed, "init"))
    indexed = list(enumerate(measures))

    diag = {
        i: sliced_ot.sample_projections(
            len(q.subset), config.n_mc, subseed(config.seed, f"diag:{i}")
        )
        for i, q in indexed
    }
    fixed = None
    if config.fixed_projections:
        fixed = {
            i: sliced_ot.sample_projections(
                len(q.subset), config.n_mc, subseed(config.seed, f"fixed:{i}")
            )
            for i, q in indexed
        }

    lam = config.lambda_reg
    trace = [(0, _objective(particles, indexed, diag, reg, lam), config.initial_lr)]
    step = 0
    for epoch in range(config.epochs):
        lr = config.initial_lr * config.scheduler_factor ** (
            epoch // config.scheduler_step
        )
        batches = epoch_schedule(
            indexed, config.batch_size, epoch, subseed(config.seed, "schedule")
        )
        for batch_i, batch in enumerate(batches):
            step += 1
            use_reg = reg if (config.reg_every_batch or batch_i == 0) else None
            grad, _ = batch_gradient(
                particles, batch, use_reg, lam, config.n_mc,
                subseed(config.seed, f"proj:{step}"), fixed_projections=fixed,
            )
            mask_seed = (
                subseed(config.seed, f"mask-epoch:{epoch}")
                if config.mask_per_epoch
                else subseed(config.seed, f"mask:{step}")
            )
            masked = sparse_mask(grad, config.keep_fraction, mask_seed)
            optimizer_step(particles, masked, lr)
        trace.append((epoch + 1, _objective(particles, indexed, diag, reg, lam), lr))
        if (
            config.checkpoint_interval > 0
            and config.checkpoint_dir is not None
            and (epoch + 1) % config.checkpoint_interval == 0
        ):
            save_checkpoint(
                particles,
                f"{config.checkpoint_dir}/checkpoint_{epoch + 1:06d}.bin",
            )
    return particles, trace


def finalize(particles: ParticleSet, schema: DiscreteSchema) -> DiscreteDataset:
    """Snap every particle to its nearest grid point and decode."""
    rows = nearest_grid(particles.positions, schema)
    return DiscreteDataset(schema, rows)
