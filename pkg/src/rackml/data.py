"""Dataset container, CSV ingestion, cleaning and the synthetic generator."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    AllMissingColumn,
    EmptyAfterFilter,
    EmptyDataset,
    MissingColumn,
    ParseError,
)
from .rng import stream
from .schema import RACK_SCHEMA, FeatureSchema


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix plus target vector.

    ``X`` holds NaN where ``missing_mask`` is set; after cleaning the mask is
    all false and every value is finite.
    """

    schema: FeatureSchema
    X: np.ndarray
    y: np.ndarray
    row_ids: tuple[str, ...]
    missing_mask: np.ndarray

    def __post_init__(self):
        n = self.X.shape[0]
        if self.y.shape != (n,) or len(self.row_ids) != n or self.missing_mask.shape != self.X.shape:
            raise ValueError("dataset arrays disagree on row count")
        if self.X.shape[1] != self.schema.n_features:
            raise ValueError("feature count does not match schema")
        for a in (self.X, self.y, self.missing_mask):
            a.flags.writeable = False

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def take(self, indices) -> "Dataset":
        """New dataset with the given rows, in the given order."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(
            schema=self.schema,
            X=self.X[idx].copy(),
            y=self.y[idx].copy(),
            row_ids=tuple(self.row_ids[i] for i in idx),
            missing_mask=self.missing_mask[idx].copy(),
        )

    def columns(self) -> np.ndarray:
        """All 11 columns (features then target) as one matrix."""
        return np.column_stack([self.X, self.y])


def _make_dataset(schema, X, y, row_ids, mask=None) -> Dataset:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if mask is None:
        mask = np.zeros(X.shape, dtype=bool)
    return Dataset(schema=schema, X=X, y=y, row_ids=tuple(row_ids), missing_mask=np.asarray(mask, dtype=bool))


def load_csv(source, schema: FeatureSchema = RACK_SCHEMA, require_target: bool = True) -> Dataset:
    """Read a dataset from a CSV text stream (or string).

    Header names must match the schema exactly (case-sensitive); extra
    columns are ignored.  Empty cells become missing values; any other
    non-numeric cell raises ParseError.  The target column may be declared
    optional for prediction-only inputs.
    """
    if isinstance(source, (str, bytes)):
        if isinstance(source, bytes):
            source = source.decode("utf-8")
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDataset("no header row")
    header = [h.strip() for h in header]
    col_of = {}
    for name in schema.names:
        if name not in header:
            raise MissingColumn(name)
        col_of[name] = header.index(name)
    target_name = schema.target.name
    has_target = target_name in header
    if require_target and not has_target:
        raise MissingColumn(target_name)
    target_col = header.index(target_name) if has_target else None

    rows_X, rows_y, mask_rows = [], [], []
    for r, row in enumerate(reader):
        if not row or all(c.strip() == "" for c in row):
            continue
        xs, ms = [], []
        for name in schema.names:
            j = col_of[name]
            cell = row[j].strip() if j < len(row) else ""
            if cell == "":
                xs.append(math.nan)
                ms.append(True)
            else:
                try:
                    xs.append(float(cell))
                except ValueError:
                    raise ParseError(r, name, cell)
                ms.append(False)
        if has_target:
            cell = row[target_col].strip() if target_col < len(row) else ""
            try:
                rows_y.append(float(cell))
            except ValueError:
                raise ParseError(r, target_name, cell)
        else:
            rows_y.append(math.nan)
        rows_X.append(xs)
        mask_rows.append(ms)
    if not rows_X:
        raise EmptyDataset("no data rows")
    n = len(rows_X)
    ids = [f"row-{i:06d}" for i in range(n)]
    return _make_dataset(schema, np.array(rows_X), np.array(rows_y), ids, np.array(mask_rows))


def write_csv(d: Dataset, sink) -> None:
    """Write features plus target in canonical column order.

    Numbers are rendered with ``repr`` (shortest text that round-trips to the
    identical float64), so load_csv(write_csv(d)) reproduces d bit-exactly.
    Missing cells are written empty.
    """
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(list(d.schema.names) + [d.schema.target.name])
    for i in range(d.n):
        cells = []
        for j in range(d.schema.n_features):
            cells.append("" if d.missing_mask[i, j] else repr(float(d.X[i, j])))
        cells.append(repr(float(d.y[i])))
        writer.writerow(cells)


def impute_missing(d: Dataset) -> Dataset:
    """Replace missing cells with the column median of observed values."""
    if not d.missing_mask.any():
        return d
    X = d.X.copy()
    for j, name in enumerate(d.schema.names):
        miss = d.missing_mask[:, j]
        if not miss.any():
            continue
        observed = X[~miss, j]
        if observed.size == 0:
            raise AllMissingColumn(name)
        X[miss, j] = np.median(observed)
    return _make_dataset(d.schema, X, d.y.copy(), d.row_ids)


def remove_outliers_iqr(d: Dataset, k: float = 1.5) -> tuple[Dataset, list[str]]:
    """Drop rows with any value outside the Tukey fences.

    Fences are [Q1 - k*IQR, Q3 + k*IQR] per column (all 10 features plus the
    target), with quartiles computed on the pre-removal data by linear
    interpolation between order statistics.  Surviving rows keep their
    original order.
    """
    if d.missing_mask.any():
        raise ValueError("remove_outliers_iqr requires a dataset without missing values")
    if k <= 0:
        raise ValueError("k must be positive")
    cols = d.columns()
    q1 = np.quantile(cols, 0.25, axis=0)
    q3 = np.quantile(cols, 0.75, axis=0)
    iqr = q3 - q1
    lo, hi = q1 - k * iqr, q3 + k * iqr
    keep = ((cols >= lo) & (cols <= hi)).all(axis=1)
    if not keep.any():
        raise EmptyAfterFilter(f"IQR filter with k={k} removed every row")
    removed = [d.row_ids[i] for i in np.nonzero(~keep)[0]]
    return d.take(np.nonzero(keep)[0]), removed


def train_test_split(d: Dataset, test_fraction: float = 0.2, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle split; test set holds ceil(n * test_fraction) rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    if d.n < 2:
        raise ValueError("need at least two rows to split")
    n_test = math.ceil(d.n * test_fraction)
    perm = stream(seed).permutation(d.n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return d.take(train_idx), d.take(test_idx)


# Synthetic surrogate: an Ayrton-Perry-like capacity reduction driven by
# slenderness.  This is a desk-scale stand-in that produces a smooth,
# nonlinear regression target at realistic magnitudes; it is not a physical
# buckling model.
_E_STEEL = 210_000.0  # MPa


def _surrogate_capacity(w, h, b, d_, t, length, fy):
    area = t * (w + 2.0 * h + 2.0 * b + 2.0 * d_)
    r = 0.4 * h
    slender = (length / r) * np.sqrt(fy / (math.pi ** 2 * _E_STEEL))
    chi = 1.0 / (1.0 + slender ** 2)
    return area, r, chi * area * fy / 1000.0


def generate_synthetic(n: int, seed: int = 0, noise_sigma: float = 0.05,
                       schema: FeatureSchema = RACK_SCHEMA) -> Dataset:
    """Generate n synthetic rack-column rows.

    Geometry and material features are sampled uniformly (in canonical
    order: w, h, b, d, t, L, then fy), section properties are derived, and
    the capacity target is the slenderness surrogate times lognormal noise
    exp(N(0, noise_sigma^2)).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = stream(seed)
    w = rng.uniform(60.0, 120.0, n)
    h = rng.uniform(60.0, 140.0, n)
    b = rng.uniform(10.0, 30.0, n)
    d_ = rng.uniform(10.0, 25.0, n)
    t = rng.uniform(1.5, 3.0, n)
    length = rng.uniform(500.0, 3000.0, n)
    fy = rng.uniform(250.0, 550.0, n)

    area, r, p0 = _surrogate_capacity(w, h, b, d_, t, length, fy)
    ix = area * r ** 2
    iy = 0.35 * area * (0.4 * w) ** 2
    noise = np.exp(rng.normal(0.0, noise_sigma, n)) if noise_sigma > 0 else np.ones(n)
    y = p0 * noise

    X = np.column_stack([w, h, b, d_, t, length, area, ix, iy, fy])
    ids = [f"syn-{i:06d}" for i in range(n)]
    return _make_dataset(schema, X, y, ids)
