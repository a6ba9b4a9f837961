"""Correlated discrete test fixtures from a one-factor Gaussian copula.

Latent vectors are g_i = sqrt(rho) * f + sqrt(1 - rho) * e_i with a shared
factor f, so every pair of columns has latent correlation rho. Pushing each
coordinate through the normal CDF gives uniform marginals, and cutting
[0,1] into k equal slices yields uniform discrete columns with controlled
pairwise dependence.
"""

import numpy as np
from scipy.special import ndtr

from .data_model import Column, DiscreteDataset, DiscreteSchema
from .errors import ConfigError


def generate(d: int, cardinality: int, n: int, correlation: float, seed: int,
             names=None) -> DiscreteDataset:
    if d < 1 or cardinality < 1 or n < 1:
        raise ConfigError("fixture needs d, cardinality, n >= 1")
    if not (0.0 <= correlation < 1.0):
        raise ConfigError("correlation must lie in [0, 1)")
    if names is None:
        names = [f"x{i}" for i in range(d)]
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    shared = rng.standard_normal((n, 1))
    own = rng.standard_normal((n, d))
    latent = np.sqrt(correlation) * shared + np.sqrt(1.0 - correlation) * own
    u = ndtr(latent)
    codes = np.clip(np.ceil(u * cardinality).astype(np.int64), 1, cardinality)
    schema = DiscreteSchema(
        tuple(Column(name, cardinality, None, "discrete") for name in names)
    )
    return DiscreteDataset(schema, codes)


def ingest_spec(dataset: DiscreteDataset) -> dict:
    """Categorical ingest declaration matching the fixture exactly, so a
    round trip through CSV ingestion preserves every cardinality."""
    return {
        "columns": [
            {
                "name": c.name,
                "kind": "categorical",
                "categories": [str(v) for v in range(1, c.cardinality + 1)],
            }
            for c in dataset.schema.columns
        ]
    }
