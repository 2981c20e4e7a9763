"""Per-CU feature vectors, the labelled sample pool, and dataset analysis.

Nine features are harvested right after the cheap merge/skip and whole-CU
tests, before any recursive split testing: SF, CBF, RDC, Bits, AND, QP,
Lambda, QPO and PM.  The ground-truth label (was the CU split by full RDO?)
is attached afterwards, so a dataset row is one (features, depth, label)
observation plus provenance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

# Canonical feature order, matching the correlation-table layout.
FEATURE_NAMES = ("sf", "cbf", "rdc", "bits", "and", "qp", "lambda", "qpo", "pm")

# Spelling used in human-facing files (criteria rules, correlation tables).
DISPLAY_NAMES = {
    "sf": "SF",
    "cbf": "CBF",
    "rdc": "RDC",
    "bits": "Bits",
    "and": "AND",
    "qp": "QP",
    "lambda": "Lambda",
    "qpo": "QPO",
    "pm": "PM",
}
_NAME_FROM_DISPLAY = {v.lower(): k for k, v in DISPLAY_NAMES.items()}

# Features with a small closed integer domain; used to simplify rule
# predicates (e.g. "pm < 1" prints as "PM = 0").  Continuous features are
# absent from this table.
INTEGER_DOMAINS = {
    "sf": (0, 1),
    "cbf": (0, 1),
    "qpo": (1, 4),
    "pm": (0, 2),
}

CU_DECISION_DEPTHS = (0, 1, 2)  # 8x8 CUs carry no split decision


def canonical_feature_name(name: str) -> str:
    """Map a display spelling ("Bits", "PM") to the canonical id."""
    key = name.strip().lower()
    if key in _NAME_FROM_DISPLAY:
        return _NAME_FROM_DISPLAY[key]
    raise ValueError(f"unknown feature name: {name!r}")


@dataclass(frozen=True)
class FeatureVector:
    """The nine per-CU features, in the units the encoder produces them."""

    sf: bool
    cbf: bool
    rdc: float
    bits: float
    and_depth: float
    qp: int
    lam: float
    qpo: int
    pm: int

    _BY_NAME = {
        "sf": "sf", "cbf": "cbf", "rdc": "rdc", "bits": "bits",
        "and": "and_depth", "qp": "qp", "lambda": "lam", "qpo": "qpo",
        "pm": "pm",
    }

    def value(self, name: str) -> float:
        """Numeric value of a feature by canonical name (booleans as 0/1)."""
        return float(getattr(self, self._BY_NAME[name]))

    def as_row(self) -> tuple[float, ...]:
        return tuple(self.value(n) for n in FEATURE_NAMES)

    def validate(self) -> None:
        if self.sf and self.cbf:
            raise ValueError("sf=true implies cbf=false")
        if not 0.0 <= self.and_depth <= 3.0:
            raise ValueError(f"and_depth out of [0, 3]: {self.and_depth}")
        if self.qpo not in (1, 2, 3, 4):
            raise ValueError(f"qpo out of [1, 4]: {self.qpo}")
        if self.pm not in (0, 1, 2):
            raise ValueError(f"pm out of {{0, 1, 2}}: {self.pm}")
        if self.rdc < 0 or self.bits < 0:
            raise ValueError("rdc and bits must be non-negative")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")


@dataclass(frozen=True)
class Sample:
    """One labelled observation: features at a CU plus its split outcome."""

    features: FeatureVector
    depth: int
    label: bool  # True = the CU was split by full RDO
    sequence_id: str
    frame_index: int
    cu_x: int
    cu_y: int

    def validate(self) -> None:
        if self.depth not in CU_DECISION_DEPTHS:
            raise ValueError(f"sample depth must be 0..2, got {self.depth}")
        self.features.validate()


def average_neighbour_depth(above: int | None, left: int | None,
                            default: float) -> float:
    """Mean leaf depth of the above/left neighbours; `default` if both absent.

    The caller supplies the depth of the already-coded leaf CU touching the
    current CU's top-left sample on each side.  The conventional default is
    the current CU's own depth (a neutral prior).
    """
    present = [d for d in (above, left) if d is not None]
    for d in present:
        if not 0 <= d <= 3:
            raise ValueError(f"neighbour depth out of [0, 3]: {d}")
    if not present:
        return float(default)
    return sum(present) / len(present)


def extract_sample(probe, label: bool, *, sequence_id: str,
                   frame_index: int) -> Sample:
    """Assemble a Sample from a CU probe captured during a full-RDO encode.

    The probe is the encoder's post-merge-test record (see codec.CuProbe);
    both the merge/skip test and the whole-CU test must have run.
    """
    if probe.merge is None or probe.whole is None:
        raise RuntimeError(
            "extract_sample called before both CU tests completed")
    fv = FeatureVector(
        sf=probe.merge.skip_flag,
        cbf=probe.merge.cbf,
        rdc=probe.merge.rd_cost,
        bits=float(probe.merge.bits),
        and_depth=average_neighbour_depth(
            probe.above_depth, probe.left_depth, default=probe.depth),
        qp=probe.qp,
        lam=probe.lam,
        qpo=probe.qpo,
        pm=probe.whole.pm,
    )
    sample = Sample(
        features=fv,
        depth=probe.depth,
        label=bool(label),
        sequence_id=sequence_id,
        frame_index=frame_index,
        cu_x=probe.x,
        cu_y=probe.y,
    )
    sample.validate()
    return sample


# ---------------------------------------------------------------------------
# Dataset container and CSV round trip
# ---------------------------------------------------------------------------

_CSV_COLUMNS = FEATURE_NAMES + (
    "depth", "label", "sequence_id", "frame_index", "cu_x", "cu_y")


class DatasetFormatError(ValueError):
    """Raised for malformed dataset files; carries the offending line."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class Dataset:
    samples: list[Sample] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def append(self, sample: Sample) -> None:
        self.samples.append(sample)

    def extend(self, samples: Iterable[Sample]) -> None:
        self.samples.extend(samples)

    def merge(self, other: "Dataset") -> "Dataset":
        """Order-independent merge: rows sorted by provenance."""
        merged = Dataset(self.samples + other.samples)
        merged.sort()
        return merged

    def sort(self) -> None:
        self.samples.sort(key=lambda s: (
            s.sequence_id, s.features.qp, s.frame_index, s.cu_y, s.cu_x,
            s.depth))

    def at_depth(self, depth: int) -> "Dataset":
        return Dataset([s for s in self.samples if s.depth == depth])

    def sequence_ids(self) -> list[str]:
        return sorted({s.sequence_id for s in self.samples})

    def feature_matrix(self, depth: int | None = None
                       ) -> tuple[np.ndarray, np.ndarray]:
        """(X, y) with columns in canonical feature order; y is bool."""
        rows = self.samples if depth is None else self.at_depth(depth).samples
        if not rows:
            return (np.empty((0, len(FEATURE_NAMES))),
                    np.empty((0,), dtype=bool))
        X = np.array([s.features.as_row() for s in rows], dtype=np.float64)
        y = np.array([s.label for s in rows], dtype=bool)
        return X, y

    def __eq__(self, other) -> bool:
        return isinstance(other, Dataset) and self.samples == other.samples


def export_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for s in dataset:
            writer.writerow([
                int(s.features.sf), int(s.features.cbf),
                repr(s.features.rdc), repr(float(s.features.bits)),
                repr(s.features.and_depth), s.features.qp,
                repr(s.features.lam), s.features.qpo, s.features.pm,
                s.depth, int(s.label), s.sequence_id, s.frame_index,
                s.cu_x, s.cu_y,
            ])


def import_dataset(path) -> Dataset:
    dataset = Dataset()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError("empty file, expected header", 1)
        if tuple(header) != _CSV_COLUMNS:
            raise DatasetFormatError(
                f"bad header, expected {','.join(_CSV_COLUMNS)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(_CSV_COLUMNS):
                raise DatasetFormatError(
                    f"expected {len(_CSV_COLUMNS)} columns, got {len(row)}",
                    lineno)
            try:
                fv = FeatureVector(
                    sf=bool(int(row[0])), cbf=bool(int(row[1])),
                    rdc=float(row[2]), bits=float(row[3]),
                    and_depth=float(row[4]), qp=int(row[5]),
                    lam=float(row[6]), qpo=int(row[7]), pm=int(row[8]))
                sample = Sample(
                    features=fv, depth=int(row[9]), label=bool(int(row[10])),
                    sequence_id=row[11], frame_index=int(row[12]),
                    cu_x=int(row[13]), cu_y=int(row[14]))
                sample.validate()
            except DatasetFormatError:
                raise
            except ValueError as exc:
                raise DatasetFormatError(str(exc), lineno) from exc
            dataset.append(sample)
    return dataset


# ---------------------------------------------------------------------------
# Correlation analysis
# ---------------------------------------------------------------------------


class UndefinedCorrelationError(ValueError):
    """Pearson r is undefined when either column is constant."""


def pearson_correlation(values: Sequence[float],
                        labels: Sequence[float]) -> float:
    """Pearson product-moment r; booleans are expected encoded as 0/1."""
    x = np.asarray(values, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("columns must be 1-D and of equal length")
    if x.size < 2:
        raise ValueError("need at least two observations")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedCorrelationError(
            "correlation undefined for a constant column")
    return float(np.corrcoef(x, y)[0, 1])


def correlation_table(dataset: Dataset, signed: bool = False
                      ) -> list[list[float | None]]:
    """Per-depth feature/label correlations, rows = depths 0..2.

    Cells are |r| (or signed r), None where the correlation is undefined
    (constant column).  The layout is fixed at 3 rows x 9 columns.
    """
    table: list[list[float | None]] = []
    for depth in CU_DECISION_DEPTHS:
        X, y = dataset.feature_matrix(depth)
        if X.shape[0] == 0:
            raise ValueError(f"dataset has no samples at depth {depth}")
        row: list[float | None] = []
        for j in range(len(FEATURE_NAMES)):
            try:
                r = pearson_correlation(X[:, j], y.astype(np.float64))
            except UndefinedCorrelationError:
                row.append(None)
                continue
            row.append(r if signed else abs(r))
        table.append(row)
    return table


def render_correlation_table(table: list[list[float | None]]) -> str:
    """Aligned text rendering; undefined cells print as n/a."""
    headers = ["Depth"] + [DISPLAY_NAMES[n] for n in FEATURE_NAMES]
    lines = ["  ".join(f"{h:>6}" for h in headers)]
    for depth, row in enumerate(table):
        cells = [f"{depth:>6}"]
        for cell in row:
            cells.append(f"{'n/a':>6}" if cell is None else f"{cell:>6.3f}")
        lines.append("  ".join(cells))
    return "\n".join(lines) + "\n"


def write_correlation_csv(table: list[list[float | None]], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["depth"] + list(FEATURE_NAMES))
        for depth, row in enumerate(table):
            writer.writerow(
                [depth] + ["n/a" if c is None else repr(c) for c in row])


# ---------------------------------------------------------------------------
# Equal-frequency binning
# ---------------------------------------------------------------------------


def quantile_bin_edges(values: np.ndarray, bin_count: int) -> np.ndarray:
    """Interior edges of `bin_count` equal-frequency bins.

    Edges are the 1/B .. (B-1)/B quantiles (linear interpolation).  When the
    data has fewer distinct values than requested bins the edge list degrades
    so the bin count matches the distinct-value count.
    """
    if bin_count < 2:
        raise ValueError("bin_count must be >= 2")
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot bin an empty column")
    distinct = np.unique(values)
    bins = min(bin_count, distinct.size)
    if bins <= 1:
        return np.empty(0)
    edges = np.quantile(values, np.arange(1, bins) / bins)
    return np.unique(edges)


def bin_representatives(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Representative value per bin: the smallest raw value in the bin.

    Bin membership: values <= edges[j] fall below edge j, so a boundary
    value stays in the lower bin.  Using the bin minimum keeps binned
    columns inside the raw value domain, so a threshold placed at a
    representative separates raw values exactly like bin indices do.
    """
    values = np.asarray(values, dtype=np.float64)
    idx = np.searchsorted(edges, values, side="left")
    reps = np.empty(edges.size + 1)
    for b in range(reps.size):
        mask = idx == b
        # Quantile edges come from this data, so every bin is populated.
        reps[b] = values[mask].min() if mask.any() else np.nan
    return reps


def apply_bins(values: np.ndarray, edges: np.ndarray,
               representatives: np.ndarray) -> np.ndarray:
    """Replace each value by the representative of the bin it falls in."""
    values = np.asarray(values, dtype=np.float64)
    idx = np.searchsorted(edges, values, side="left")
    return representatives[idx]


def bin_continuous(values: Sequence[float], bin_count: int
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Quantile-bin a column: (binned values, interior edges).

    Order-preserving, and the binned column has at most `bin_count` distinct
    values.  Edges are returned for reuse on unseen data.
    """
    arr = np.asarray(values, dtype=np.float64)
    edges = quantile_bin_edges(arr, bin_count)
    return apply_bins(arr, edges, bin_representatives(arr, edges)), edges


class QuantileBinner(BaseEstimator, TransformerMixin):
    """Equal-frequency binner over selected columns of a feature matrix.

    Fits interior quantile edges and per-bin representatives (bin minima)
    per column; transform snaps values to the fitted representatives.
    Columns not listed pass through unchanged.
    """

    def __init__(self, bin_count: int = 32, columns: tuple = ()):
        self.bin_count = bin_count
        self.columns = columns

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        self.edges_ = {}
        self.representatives_ = {}
        for col in self.columns:
            edges = quantile_bin_edges(X[:, col], self.bin_count)
            self.edges_[col] = edges
            self.representatives_[col] = bin_representatives(X[:, col], edges)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64).copy()
        for col, edges in self.edges_.items():
            X[:, col] = apply_bins(X[:, col], edges,
                                   self.representatives_[col])
        return X
