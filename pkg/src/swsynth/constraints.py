"""Differentiable domain-constraint penalty for the particle optimizer.

The protected statistic is a smoothed linear thresholding query: the mean
logistic sigmoid of the signed margin to a hyperplane in embedding space.
The penalty c1 / (c2 + (stat - dp_target)^2) peaks when the synthetic
statistic matches the DP estimate of the original one, so *minimizing*
loss + lambda * penalty drives the statistic away from the original value
while the marginal terms keep everything else in place.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError


@dataclass
class ThresholdConstraint:
    theta: np.ndarray  # (d,) direction in embedding space
    b: float  # hyperplane offset
    slope: float = 5.0
    dp_target: Optional[float] = None
    scale: float = 0.01  # numerator c1
    floor: float = 0.0001  # denominator offset c2; max penalty = c1/c2

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.slope <= 0 or self.floor <= 0:
            raise ConfigError("constraint needs slope > 0 and floor > 0")


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def smooth_threshold(points, c: ThresholdConstraint) -> float:
    """Mean sigmoid of slope * (<theta, z> - b) over the point rows."""
    z = np.asarray(points, dtype=float)
    if z.shape[1] != c.theta.size:
        raise ConfigError("constraint direction does not match point dimension")
    return float(np.mean(_sigmoid(c.slope * (z @ c.theta - c.b))))


def penalty(points, c: ThresholdConstraint) -> float:
    """scale / (floor + delta^2) with delta the gap to the DP target."""
    if c.dp_target is None:
        raise ConfigError("constraint has no DP target set")
    delta = smooth_threshold(points, c) - c.dp_target
    return c.scale / (c.floor + delta * delta)


def penalty_grad(points, c: ThresholdConstraint) -> np.ndarray:
    """Gradient of ``penalty`` with respect to the point positions."""
    if c.dp_target is None:
        raise ConfigError("constraint has no DP target set")
    z = np.asarray(points, dtype=float)
    m = z.shape[0]
    s = _sigmoid(c.slope * (z @ c.theta - c.b))
    delta = float(np.mean(s)) - c.dp_target
    outer = -2.0 * c.scale * delta / (c.floor + delta * delta) ** 2
    per_point = outer * (c.slope / m) * s * (1.0 - s)
    return per_point[:, None] * c.theta[None, :]
