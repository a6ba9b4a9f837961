"""Dataset ingestion, discretization, grid embedding and marginals.

A discretized table takes values in the product domain {1..k_1} x ... x
{1..k_d}. Value x in column i embeds to the grid center (2x - 1) / (2 k_i),
so every column lives on an equally spaced grid inside (0, 1) and order is
preserved. ``nearest_grid`` inverts the embedding by snapping to the closest
center.
"""

import csv
import json
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DataError, DatasetError, SchemaError

DEFAULT_BINS = 32


@dataclass(frozen=True)
class Column:
    name: str
    cardinality: int
    bin_edges: Optional[tuple] = None
    kind: str = "discrete"  # "discrete" or "binned-continuous"

    def __post_init__(self):
        if self.cardinality < 1:
            raise SchemaError(f"column {self.name!r}: cardinality must be >= 1")
        if self.kind not in ("discrete", "binned-continuous"):
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.bin_edges is not None:
            edges = np.asarray(self.bin_edges, dtype=float)
            if edges.shape != (self.cardinality + 1,):
                raise SchemaError(
                    f"column {self.name!r}: need {self.cardinality + 1} bin edges"
                )
            if not np.all(np.diff(edges) > 0):
                raise SchemaError(f"column {self.name!r}: bin edges must ascend")


@dataclass(frozen=True)
class DiscreteSchema:
    columns: tuple

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")

    @property
    def dim(self) -> int:
        return len(self.columns)

    @property
    def cardinalities(self) -> np.ndarray:
        return np.array([c.cardinality for c in self.columns], dtype=np.int64)

    def centers(self, i: int) -> np.ndarray:
        """Embedded grid centers of column i: (2x - 1) / (2k) for x = 1..k."""
        k = self.columns[i].cardinality
        return (2.0 * np.arange(1, k + 1) - 1.0) / (2.0 * k)

    def to_json(self) -> str:
        cols = [
            {
                "name": c.name,
                "cardinality": c.cardinality,
                "kind": c.kind,
                "bin_edges": list(c.bin_edges) if c.bin_edges is not None else None,
            }
            for c in self.columns
        ]
        return json.dumps({"columns": cols}, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DiscreteSchema":
        doc = json.loads(text)
        cols = tuple(
            Column(
                name=c["name"],
                cardinality=int(c["cardinality"]),
                bin_edges=tuple(c["bin_edges"]) if c.get("bin_edges") else None,
                kind=c.get("kind", "discrete"),
            )
            for c in doc["columns"]
        )
        return cls(cols)


class DiscreteDataset:
    """Immutable n x d integer table with entries in {1..k_j} per column."""

    def __init__(self, schema: DiscreteSchema, rows: np.ndarray):
        rows = np.asarray(rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] != schema.dim:
            raise DatasetError(
                f"rows must be n x {schema.dim}, got shape {rows.shape}"
            )
        if rows.shape[0] == 0:
            raise DatasetError("dataset has no rows")
        cards = schema.cardinalities
        if np.any(rows < 1) or np.any(rows > cards[None, :]):
            bad = np.argwhere((rows < 1) | (rows > cards[None, :]))[0]
            raise DataError(
                f"row {bad[0]}: value {rows[bad[0], bad[1]]} out of range for "
                f"column {schema.columns[bad[1]].name!r}"
            )
        self.schema = schema
        self.rows = rows
        self.rows.setflags(write=False)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.schema.dim


@dataclass(frozen=True)
class MarginalTable:
    """Empirical 2-way marginal: nonnegative mass table summing to one."""

    subset: tuple
    mass: np.ndarray

    def __post_init__(self):
        if np.any(self.mass < 0):
            raise DataError("marginal mass must be nonnegative")
        if abs(float(self.mass.sum()) - 1.0) > 1e-12:
            raise DataError("marginal mass must sum to 1")
        self.mass.setflags(write=False)


def equal_width_edges(values: np.ndarray, bins: int) -> np.ndarray:
    """Equally spaced edges between min(values) and max(values)."""
    lo, hi = float(np.min(values)), float(np.max(values))
    return np.linspace(lo, hi, bins + 1)


def discretize(values, bins: int) -> np.ndarray:
    """Map reals to equal-width bins 1..bins over their observed range.

    Value v goes to ceil((v - min) / width) clamped to [1, bins]; the
    minimum lands in bin 1 and the maximum in bin ``bins``. A constant
    sequence collapses to a single bin.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DatasetError("cannot discretize an empty sequence")
    if bins < 1:
        raise ConfigError("bins must be >= 1")
    if np.any(np.isnan(values)):
        raise DataError("NaN value in column to discretize")
    lo, hi = float(np.min(values)), float(np.max(values))
    if lo == hi:
        return np.ones(values.shape, dtype=np.int64)
    width = (hi - lo) / bins
    codes = np.ceil((values - lo) / width).astype(np.int64)
    return np.clip(codes, 1, bins)


def embed(x, schema: DiscreteSchema) -> np.ndarray:
    """Embed discrete rows into [0,1]^d via per-column grid centers."""
    x = np.asarray(x, dtype=np.int64)
    cards = schema.cardinalities
    if np.any(x < 1) or np.any(x > cards):
        raise DataError("value out of range for schema in embed")
    return (2.0 * x - 1.0) / (2.0 * cards)


def nearest_grid(coords, schema: DiscreteSchema) -> np.ndarray:
    """Snap coordinates in [0,1]^d to the nearest grid values.

    Per coordinate this is ceil(coord * k) clamped to [1, k]; midpoints
    between two centers resolve to the smaller index.
    """
    coords = np.asarray(coords, dtype=float)
    if np.any(coords < 0) or np.any(coords > 1):
        raise DataError("coordinates must lie in [0,1]")
    cards = schema.cardinalities
    codes = np.ceil(coords * cards).astype(np.int64)
    return np.clip(codes, 1, cards)


def marginal(dataset: DiscreteDataset, subset) -> MarginalTable:
    """Empirical 2-way marginal over the ordered column pair ``subset``."""
    i, j = subset
    ki = dataset.schema.columns[i].cardinality
    kj = dataset.schema.columns[j].cardinality
    flat = (dataset.rows[:, i] - 1) * kj + (dataset.rows[:, j] - 1)
    counts = np.bincount(flat, minlength=ki * kj).reshape(ki, kj)
    return MarginalTable(subset=(i, j), mass=counts / dataset.n)


def all_pairs_workload(d: int):
    """All C(d,2) unordered column pairs in lexicographic order."""
    if d < 2:
        raise ConfigError("workload needs at least 2 columns")
    return list(combinations(range(d), 2))


def marginal_atoms(table_mass: np.ndarray, schema: DiscreteSchema, subset):
    """Flatten a marginal table to embedded atoms (locations, weights)."""
    i, j = subset
    ci = schema.centers(i)
    cj = schema.centers(j)
    locations = np.stack(
        [np.repeat(ci, cj.size), np.tile(cj, ci.size)], axis=1
    )
    return locations, np.asarray(table_mass, dtype=float).reshape(-1)


# ---------------------------------------------------------------------------
# CSV ingestion under a declared column spec
# ---------------------------------------------------------------------------


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        data = [row for row in reader]
    if not data:
        raise DatasetError(f"{path}: no data rows")
    for r, row in enumerate(data):
        if len(row) != len(header):
            raise DataError(f"row {r}: expected {len(header)} cells, got {len(row)}")
    return header, data


def ingest_csv(path, schema_spec: dict) -> DiscreteDataset:
    """Read a CSV and discretize it under the declared column spec.

    ``schema_spec`` is {"columns": [...]} where each entry has a ``name``
    and a ``kind``:

    * ``categorical`` with ``categories``: values map to 1..k by declared
      order;
    * ``integer``: kept verbatim (shifted to 1..range) while the observed
      range is at most 32, binned into ``bins`` (default 32) otherwise;
    * ``continuous``: always binned into ``bins`` equal-width bins.

    Bin edges come from the data without DP noise; treat them as public.
    """
    header, data = _read_csv(path)
    declared = schema_spec["columns"]
    col_index = {name: i for i, name in enumerate(header)}
    for spec in declared:
        if spec["name"] not in col_index:
            raise SchemaError(f"declared column {spec['name']!r} not in CSV header")
    declared_names = {spec["name"] for spec in declared}
    for name in header:
        if name not in declared_names:
            raise SchemaError(f"CSV column {name!r} not declared in schema spec")

    n = len(data)
    codes = np.empty((n, len(declared)), dtype=np.int64)
    columns = []
    for out_i, spec in enumerate(declared):
        name = spec["name"]
        kind = spec["kind"]
        raw = [row[col_index[name]] for row in data]
        if kind == "categorical":
            cats = {c: i + 1 for i, c in enumerate(spec["categories"])}
            for r, cell in enumerate(raw):
                code = cats.get(cell)
                if code is None:
                    raise DataError(
                        f"row {r}: value {cell!r} not among declared "
                        f"categories of column {name!r}"
                    )
                codes[r, out_i] = code
            columns.append(Column(name, len(cats), None, "discrete"))
        elif kind in ("integer", "continuous"):
            vals = np.empty(n)
            for r, cell in enumerate(raw):
                try:
                    vals[r] = float(cell)
                except ValueError:
                    raise DataError(
                        f"row {r}: cannot parse {cell!r} in column {name!r}"
                    ) from None
            if np.any(np.isnan(vals)):
                r = int(np.argwhere(np.isnan(vals))[0][0])
                raise DataError(f"row {r}: NaN in column {name!r}")
            if kind == "integer" and np.any(vals != np.round(vals)):
                r = int(np.argwhere(vals != np.round(vals))[0][0])
                raise DataError(f"row {r}: non-integer value in column {name!r}")
            bins = int(spec.get("bins", DEFAULT_BINS))
            lo, hi = float(np.min(vals)), float(np.max(vals))
            int_range = int(round(hi - lo)) + 1
            if kind == "integer" and int_range <= 32:
                codes[:, out_i] = (vals - lo).astype(np.int64) + 1
                columns.append(Column(name, int_range, None, "discrete"))
            elif lo == hi:
                codes[:, out_i] = 1
                columns.append(Column(name, 1, None, "discrete"))
            else:
                codes[:, out_i] = discretize(vals, bins)
                edges = tuple(equal_width_edges(vals, bins))
                columns.append(Column(name, bins, edges, "binned-continuous"))
        else:
            raise SchemaError(f"column {name!r}: unknown kind {kind!r}")

    return DiscreteDataset(DiscreteSchema(tuple(columns)), codes)


def write_discrete_csv(dataset: DiscreteDataset, path) -> None:
    """Write the integer-coded table with its header row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([c.name for c in dataset.schema.columns])
        writer.writerows(dataset.rows.tolist())


def load_discrete_csv(path, schema: DiscreteSchema) -> DiscreteDataset:
    """Read an integer-coded table previously written under ``schema``."""
    header, data = _read_csv(path)
    expected = [c.name for c in schema.columns]
    if header != expected:
        raise SchemaError(
            f"{path}: header {header} does not match schema columns {expected}"
        )
    try:
        rows = np.array(data, dtype=np.int64)
    except ValueError:
        raise DataError(f"{path}: non-integer cell in discrete table") from None
    return DiscreteDataset(schema, rows)
