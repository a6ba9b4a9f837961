"""Statistical comparison metrics between an original and a synthetic table.

Covers the relative covariance error in embedding space, relative errors of
random 3-sparse counting and thresholding queries, and average sliced-W1 /
total-variation distances over all 2-way marginals. Total variation is half
the L1 distance between probability vectors.
"""

import logging
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from . import sliced_ot
from .data_model import (
    DiscreteDataset,
    all_pairs_workload,
    embed,
    marginal,
    marginal_atoms,
)
from .errors import ConfigError, DataError, MetricError
from .seeds import subseed

logger = logging.getLogger(__name__)

MAX_REJECTIONS = 10_000


@dataclass(frozen=True)
class QuerySpec:
    kind: str  # "counting" or "thresholding"
    columns: tuple  # three distinct column indices
    lows: Optional[tuple] = None  # counting: per-column interval bounds
    highs: Optional[tuple] = None
    theta: Optional[tuple] = None  # thresholding: weights on the columns
    offset: Optional[float] = None


def _check_same_schema(d_a: DiscreteDataset, d_b: DiscreteDataset) -> None:
    if d_a.schema != d_b.schema:
        raise DataError("datasets must share one schema")


def covariance_error(original: DiscreteDataset, synthetic: DiscreteDataset) -> float:
    """Relative Frobenius gap of the embedded centered covariance matrices,
    normalized by the synthetic covariance norm."""
    _check_same_schema(original, synthetic)

    def centered_cov(ds):
        z = embed(ds.rows, ds.schema)
        z = z - z.mean(axis=0, keepdims=True)
        return z.T @ z / ds.n

    c_orig = centered_cov(original)
    c_syn = centered_cov(synthetic)
    denom = np.linalg.norm(c_syn)
    if denom == 0.0:
        raise MetricError("synthetic covariance is zero (constant data)")
    return float(np.linalg.norm(c_orig - c_syn) / denom)


def evaluate_query(query: QuerySpec, dataset: DiscreteDataset) -> float:
    """Fraction of rows satisfying the query predicate.

    Counting: all three coordinates inside their intervals. Thresholding:
    <x, theta> + offset > 0 on the raw integer codes (strict inequality).
    """
    rows = dataset.rows
    cols = list(query.columns)
    if query.kind == "counting":
        sel = np.ones(dataset.n, dtype=bool)
        for c, lo, hi in zip(cols, query.lows, query.highs):
            sel &= (rows[:, c] >= lo) & (rows[:, c] <= hi)
        return float(np.mean(sel))
    if query.kind == "thresholding":
        margin = rows[:, cols] @ np.asarray(query.theta, dtype=float)
        return float(np.mean(margin + query.offset > 0))
    raise ConfigError(f"unknown query kind {query.kind!r}")


def sample_counting_queries(dataset: DiscreteDataset, count: int, seed: int):
    """Random 3-sparse box queries accepted only when they capture between
    5% and 95% of the original rows."""
    if dataset.dim < 3:
        raise ConfigError("counting queries need at least 3 columns")
    if count < 1:
        raise ConfigError("need count >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    cards = dataset.schema.cardinalities
    queries = []
    rejections = 0
    while len(queries) < count:
        cols = tuple(int(c) for c in rng.choice(dataset.dim, size=3, replace=False))
        lows, highs = [], []
        for c in cols:
            lo = int(rng.integers(1, cards[c] + 1))
            hi = int(rng.integers(lo, cards[c] + 1))
            lows.append(lo)
            highs.append(hi)
        q = QuerySpec("counting", cols, lows=tuple(lows), highs=tuple(highs))
        mass = evaluate_query(q, dataset)
        if 0.05 <= mass <= 0.95:
            queries.append(q)
            rejections = 0
        else:
            rejections += 1
            if rejections >= MAX_REJECTIONS:
                raise DataError(
                    "counting-query sampling rejected 10000 times in a row; "
                    "data too degenerate for the 5%/95% mass window"
                )
    return queries


def sample_thresholding_queries(dataset: DiscreteDataset, count: int, seed: int):
    """Random 3-sparse linear thresholding queries; the offset is uniform on
    the observed margin range of the original rows."""
    if dataset.dim < 3:
        raise ConfigError("thresholding queries need at least 3 columns")
    if count < 1:
        raise ConfigError("need count >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    queries = []
    for _ in range(count):
        cols = tuple(int(c) for c in rng.choice(dataset.dim, size=3, replace=False))
        theta = rng.standard_normal(3)
        margin = dataset.rows[:, list(cols)] @ theta
        offset = float(rng.uniform(float(margin.min()), float(margin.max())))
        queries.append(QuerySpec("thresholding", cols, theta=tuple(theta), offset=offset))
    return queries


def relative_query_error(queries, original: DiscreteDataset, synthetic: DiscreteDataset):
    """(relative, absolute) query error between the two tables.

    relative = sum_j |q_j(synthetic) - q_j(original)| / sum_j q_j(original);
    absolute = the numerator averaged over queries.
    """
    if not queries:
        raise ConfigError("empty query list")
    diffs = 0.0
    denom = 0.0
    for q in queries:
        v_orig = evaluate_query(q, original)
        diffs += abs(evaluate_query(q, synthetic) - v_orig)
        denom += v_orig
    if denom == 0.0:
        raise MetricError("all queries evaluate to zero on the original data")
    return diffs / denom, diffs / len(queries)


def avg_sw1_distance(
    original: DiscreteDataset, synthetic: DiscreteDataset,
    n_mc: int = 200, seed: int = 0,
) -> float:
    """Mean Monte-Carlo sliced W1 over all 2-way embedded marginals."""
    _check_same_schema(original, synthetic)
    proj = sliced_ot.sample_projections(2, n_mc, seed)
    schema = original.schema
    total = 0.0
    pairs = all_pairs_workload(original.dim)
    for pair in pairs:
        loc, w_orig = marginal_atoms(marginal(original, pair).mass, schema, pair)
        _, w_syn = marginal_atoms(marginal(synthetic, pair).mass, schema, pair)
        total += sliced_ot.sw1_signed(loc, w_orig, loc, w_syn, proj)
    return total / len(pairs)


def avg_tv_distance(original: DiscreteDataset, synthetic: DiscreteDataset) -> float:
    """Mean total-variation distance (half-L1) over all 2-way marginals."""
    _check_same_schema(original, synthetic)
    pairs = all_pairs_workload(original.dim)
    total = 0.0
    for pair in pairs:
        m_orig = marginal(original, pair).mass
        m_syn = marginal(synthetic, pair).mass
        total += 0.5 * float(np.abs(m_orig - m_syn).sum())
    return total / len(pairs)


@dataclass(frozen=True)
class MetricsReport:
    covariance_error: float
    counting_error: Optional[float]
    thresholding_error: Optional[float]
    avg_sw1: float
    avg_tv: float
    query_count: int
    seeds: dict

    def to_dict(self) -> dict:
        return asdict(self)


def compute_report(
    original: DiscreteDataset, synthetic: DiscreteDataset,
    query_count: int = 200, n_mc: int = 200, seed: int = 0,
) -> MetricsReport:
    """Run the whole metric suite with labeled sub-seeds."""
    seeds = {
        "master": seed,
        "counting_queries": subseed(seed, "queries:counting"),
        "thresholding_queries": subseed(seed, "queries:thresholding"),
        "sw1_projections": subseed(seed, "sw1-projections"),
    }
    if original.dim >= 3:
        counting = sample_counting_queries(
            original, query_count, seeds["counting_queries"]
        )
        thresholding = sample_thresholding_queries(
            original, query_count, seeds["thresholding_queries"]
        )
        counting_error = relative_query_error(counting, original, synthetic)[0]
        thresholding_error = relative_query_error(thresholding, original, synthetic)[0]
    else:
        logger.warning("fewer than 3 columns: skipping query metrics")
        counting_error = None
        thresholding_error = None
    return MetricsReport(
        covariance_error=covariance_error(original, synthetic),
        counting_error=counting_error,
        thresholding_error=thresholding_error,
        avg_sw1=avg_sw1_distance(original, synthetic, n_mc, seeds["sw1_projections"]),
        avg_tv=avg_tv_distance(original, synthetic),
        query_count=query_count,
        seeds=seeds,
    )
