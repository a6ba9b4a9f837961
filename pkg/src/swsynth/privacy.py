"""Gaussian-mechanism calibration, workload privatization and budget ledger.

Noise scale comes from the analytic Gaussian mechanism condition

    Phi(D/(2s) - e*s/D) - exp(e) * Phi(-D/(2s) - e*s/D) <= delta

solved for the minimal s by bisection; this is tighter than the classical
scale D*sqrt(2*ln(1.25/delta))/e for the epsilon range used here, and the
classical value is kept as an upper-bound sanity check.

The ledger does its additions in decimal (entries are normalized through
their shortest decimal representation), so simple composition of budget
splits like 0.5 + 2.0 = 2.5 and 2e-6 + 8e-6 = 1e-5 is exact rather than
accurate to an ulp.
"""

import math
from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from .data_model import MarginalTable, DiscreteSchema
from .errors import BudgetError, ConfigError

_SQRT2 = math.sqrt(2.0)


def _phi(t: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-t / _SQRT2)


def gaussian_privacy_profile(sigma: float, epsilon: float, sensitivity: float) -> float:
    """Smallest delta for which noise scale ``sigma`` gives (epsilon, delta)-DP."""
    a = sensitivity / (2.0 * sigma)
    b = epsilon * sigma / sensitivity
    return _phi(a - b) - math.exp(epsilon) * _phi(-a - b)


def classical_sigma(epsilon: float, delta: float, sensitivity: float) -> float:
    """Classical Gaussian-mechanism scale, used as an upper-bound oracle."""
    return sensitivity * math.sqrt(2.0 * math.log(1.25 / delta)) / epsilon


def calibrate_sigma(epsilon: float, delta: float, l2_sensitivity: float) -> float:
    """Minimal Gaussian scale meeting the analytic condition, by bisection."""
    if not (epsilon > 0 and 0 < delta < 1 and l2_sensitivity > 0):
        raise ConfigError("calibrate_sigma needs epsilon > 0, 0 < delta < 1, sensitivity > 0")
    hi = classical_sigma(epsilon, delta, l2_sensitivity)
    while gaussian_privacy_profile(hi, epsilon, l2_sensitivity) > delta:
        hi *= 2.0  # classical bound is loose only in exotic corners
    lo = hi / 2.0
    while gaussian_privacy_profile(lo, epsilon, l2_sensitivity) <= delta:
        hi = lo
        lo /= 2.0
        if lo < 1e-300:
            return hi
    while (hi - lo) / hi > 1e-6:
        mid = 0.5 * (lo + hi)
        if gaussian_privacy_profile(mid, epsilon, l2_sensitivity) <= delta:
            hi = mid
        else:
            lo = mid
    return hi


def _as_decimal(x) -> Decimal:
    if isinstance(x, Decimal):
        return x
    if isinstance(x, float):
        if math.isinf(x):
            return Decimal("Infinity")
        return Decimal(repr(x))
    return Decimal(x)


@dataclass(frozen=True)
class PrivacyBudget:
    """(epsilon, delta) pair with its derived noise scale for one release."""

    epsilon: float
    delta: float
    sensitivity: float
    sigma: float

    @classmethod
    def calibrate(cls, epsilon, delta, sensitivity) -> "PrivacyBudget":
        epsilon = float(epsilon)
        delta = float(delta)
        if math.isinf(epsilon):
            return cls(epsilon, delta, float(sensitivity), 0.0)
        return cls(
            epsilon, delta, float(sensitivity),
            calibrate_sigma(epsilon, delta, float(sensitivity)),
        )


class BudgetLedger:
    """Additive (epsilon, delta) accounting against a global budget."""

    def __init__(self, global_epsilon, global_delta):
        self.global_epsilon = _as_decimal(global_epsilon)
        self.global_delta = _as_decimal(global_delta)
        self.entries: list = []

    def append(self, label: str, epsilon, delta) -> None:
        eps = _as_decimal(epsilon)
        dlt = _as_decimal(delta)
        eps_tot, dlt_tot = self._totals()
        if eps_tot + eps > self.global_epsilon or dlt_tot + dlt > self.global_delta:
            raise BudgetError(
                f"release {label!r} would exceed the global budget "
                f"({self.global_epsilon}, {self.global_delta})"
            )
        self.entries.append((label, eps, dlt))

    def _totals(self):
        eps = sum((e for _, e, _ in self.entries), Decimal(0))
        dlt = sum((d for _, _, d in self.entries), Decimal(0))
        return eps, dlt

    def compose(self):
        """Coordinate-wise sums over entries as floats."""
        eps, dlt = self._totals()
        return float(eps), float(dlt)

    def to_dict(self) -> dict:
        eps, dlt = self.compose()
        return {
            "entries": [
                {"label": label, "epsilon": float(e), "delta": float(d)}
                for label, e, d in self.entries
            ],
            "epsilon_total": eps,
            "delta_total": dlt,
        }


@dataclass(frozen=True)
class SignedMarginal:
    """Gaussian-noised marginal: a signed measure on one embedded 2-d grid."""

    subset: tuple
    mass: np.ndarray
    cardinalities: tuple

    def atoms(self, schema: DiscreteSchema):
        """Embedded atom locations (cells x 2) and signed weights."""
        i, j = self.subset
        ci, cj = schema.centers(i), schema.centers(j)
        locations = np.stack([np.repeat(ci, cj.size), np.tile(cj, ci.size)], axis=1)
        return locations, self.mass.reshape(-1).astype(float)


def _child_rngs(seed: int, count: int):
    root = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in root.spawn(count)]


def privatize_workload(
    marginals, budget: PrivacyBudget, seed: int, ledger: BudgetLedger = None,
    label: str = "marginal-workload",
):
    """Add iid N(0, sigma^2) to every cell of every marginal.

    One ledger entry covers the whole release (single global sigma). Noise
    streams are split per marginal from the seed, so results do not depend
    on evaluation order.
    """
    marginals = list(marginals)
    if not marginals:
        raise ConfigError("privatize_workload: empty workload")
    if ledger is not None:
        ledger.append(label, budget.epsilon, budget.delta)
    rngs = _child_rngs(seed, len(marginals))
    out = []
    for table, rng in zip(marginals, rngs):
        mass = np.asarray(table.mass, dtype=float)
        if budget.sigma > 0:
            mass = mass + rng.normal(0.0, budget.sigma, size=mass.shape)
        else:
            mass = mass.copy()
        out.append(
            SignedMarginal(
                subset=tuple(table.subset), mass=mass, cardinalities=mass.shape
            )
        )
    return out


def privatize_scalar(
    value: float, budget: PrivacyBudget, seed: int, ledger: BudgetLedger = None,
    label: str = "scalar",
) -> float:
    """Gaussian-noised scalar statistic with its own ledger entry."""
    if ledger is not None:
        ledger.append(label, budget.epsilon, budget.delta)
    if budget.sigma == 0:
        return float(value)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return float(value + rng.normal(0.0, budget.sigma))


def compose(ledger: BudgetLedger):
    """Total (epsilon, delta) spent across all ledger entries."""
    return ledger.compose()


def workload_l2_sensitivity(n_records: int, n_marginals: int) -> float:
    """L2 sensitivity of the concatenated marginal workload under
    replace-one neighboring: sqrt(2 * n_marginals) / n."""
    return math.sqrt(2.0 * n_marginals) / n_records
