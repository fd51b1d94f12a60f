"""Clustered regression data: container, file ingestion, and panel transforms.

A dataset stores the stacked outcome vector, the stacked regressor matrix,
and the cluster partition as an offsets array.  Cluster order is the order
of first appearance in the source, and two loads of the same file produce
identical objects.  Arrays are frozen after construction so datasets can be
shared freely across threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import ParseError, SchemaError, ValidationError


def _frozen(a: np.ndarray, dtype=np.float64) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ClusterBlock:
    """One cluster's outcomes and regressors."""

    label: str
    y: np.ndarray  # (N_g,)
    x: np.ndarray  # (N_g, k)

    @property
    def n(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class Hypothesis:
    """Two-sided test of lambda' beta = c0 at level alpha."""

    lam: np.ndarray  # (k,)
    c0: float = 0.0
    alpha: float = 0.05

    def __post_init__(self):
        lam = _frozen(np.atleast_1d(self.lam))
        object.__setattr__(self, "lam", lam)
        if lam.ndim != 1 or not np.any(lam != 0.0):
            raise ValidationError("hypothesis weight vector must be nonzero")
        if not np.all(np.isfinite(lam)):
            raise ValidationError("hypothesis weight vector must be finite")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0,1), got {self.alpha}")


@dataclass(frozen=True)
class ClusteredDataset:
    """Outcomes, regressors, and the cluster partition.

    ``offsets`` has length G+1; cluster g occupies rows
    ``offsets[g]:offsets[g+1]`` of ``y`` and ``x``.
    """

    y: np.ndarray  # (N,)
    x: np.ndarray  # (N, k)
    offsets: np.ndarray  # (G+1,) int64
    labels: tuple[str, ...]
    _skip_checks: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        y = _frozen(self.y)
        x = _frozen(np.atleast_2d(self.x))
        offsets = _frozen(self.offsets, dtype=np.int64)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if self._skip_checks:
            return
        if y.ndim != 1 or x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise ValidationError("y must be (N,) and x must be (N,k)")
        if offsets.ndim != 1 or offsets[0] != 0 or offsets[-1] != y.shape[0]:
            raise ValidationError("offsets must run from 0 to N")
        sizes = np.diff(offsets)
        if np.any(sizes < 1):
            raise ValidationError("every cluster needs at least one row")
        if len(self.labels) != sizes.shape[0]:
            raise ValidationError("one label per cluster required")
        if sizes.shape[0] < 2:
            raise ValidationError(f"need at least 2 clusters, got {sizes.shape[0]}")
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
            raise ValidationError("non-finite value in data (NaN or infinity)")

    @property
    def G(self) -> int:
        return len(self.labels)

    @property
    def N(self) -> int:
        return int(self.y.shape[0])

    @property
    def k(self) -> int:
        return int(self.x.shape[1])

    @property
    def cluster_sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def block(self, g: int) -> ClusterBlock:
        lo, hi = int(self.offsets[g]), int(self.offsets[g + 1])
        return ClusterBlock(self.labels[g], self.y[lo:hi], self.x[lo:hi])

    def blocks(self) -> Iterator[ClusterBlock]:
        for g in range(self.G):
            yield self.block(g)

    def equals(self, other: "ClusteredDataset") -> bool:
        return (
            self.labels == other.labels
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.x, other.x)
        )

    @classmethod
    def from_blocks(cls, blocks: Sequence[ClusterBlock]) -> "ClusteredDataset":
        ys = [np.atleast_1d(np.asarray(b.y, dtype=np.float64)) for b in blocks]
        xs = [np.atleast_2d(np.asarray(b.x, dtype=np.float64)) for b in blocks]
        offsets = np.concatenate([[0], np.cumsum([y.shape[0] for y in ys])])
        return cls(
            y=np.concatenate(ys) if ys else np.empty(0),
            x=np.vstack(xs) if xs else np.empty((0, 0)),
            offsets=offsets,
            labels=tuple(b.label for b in blocks),
        )


class PanelSchema(NamedTuple):
    """Column mapping for `load_panel`."""

    cluster: str
    y: str
    x: tuple[str, ...]


def read_table(path, delimiter: str = ",") -> tuple[list[str], list[list[str]]]:
    """Read a delimited UTF-8 text file with a header row."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    header = [h.strip() for h in header]
    return header, rows


def _column_index(header: list[str], name: str, path) -> int:
    try:
        return header.index(name)
    except ValueError:
        raise SchemaError(f"{path}: column {name!r} not found (have {header})") from None


def load_panel(path, schema: PanelSchema, delimiter: str = ",") -> ClusteredDataset:
    """Load a delimited file into a ClusteredDataset.

    Rows are grouped by the cluster column in first-appearance order.
    Row numbers in error messages count data rows from 1.
    """
    header, rows = read_table(path, delimiter)
    ci = _column_index(header, schema.cluster, path)
    yi = _column_index(header, schema.y, path)
    xi = [_column_index(header, name, path) for name in schema.x]

    groups: dict[str, list[tuple[float, list[float]]]] = {}
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
        label = row[ci].strip()
        if not label:
            raise ParseError(f"{path}: row {r} has a blank cluster cell")
        try:
            yval = float(row[yi])
            xvals = [float(row[j]) for j in xi]
        except ValueError as exc:
            raise ParseError(f"{path}: row {r}: non-numeric cell ({exc})") from None
        groups.setdefault(label, []).append((yval, xvals))

    if len(groups) < 2:
        raise ValidationError(f"{path}: need at least 2 clusters, found {len(groups)}")
    blocks = [
        ClusterBlock(label, np.array([t[0] for t in rows_]), np.array([t[1] for t in rows_]))
        for label, rows_ in groups.items()
    ]
    return ClusteredDataset.from_blocks(blocks)


def write_panel(d: ClusteredDataset, path, schema: PanelSchema | None = None, delimiter: str = ",") -> None:
    """Serialize a dataset so `load_panel` round-trips it exactly."""
    if schema is None:
        schema = PanelSchema("cluster", "y", tuple(f"x{j+1}" for j in range(d.k)))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow([schema.cluster, schema.y, *schema.x])
        for b in d.blocks():
            for i in range(b.n):
                writer.writerow([b.label, repr(float(b.y[i])), *(repr(float(v)) for v in b.x[i])])


def within_transform(d: ClusteredDataset) -> ClusteredDataset:
    """Demean y and every x column within each cluster.

    Removes cluster fixed effects; requires every cluster to have at least
    two rows (a demeaned singleton would be an all-zero row).
    """
    sizes = d.cluster_sizes
    if np.any(sizes < 2):
        g = int(np.argmax(sizes < 2))
        raise ValidationError(
            f"within transform needs N_g >= 2; cluster {d.labels[g]!r} has {int(sizes[g])} row"
        )
    starts = d.offsets[:-1]
    ym = np.add.reduceat(d.y, starts) / sizes
    xm = np.add.reduceat(d.x, starts, axis=0) / sizes[:, None]
    rep = np.repeat(np.arange(d.G), sizes)
    return ClusteredDataset(d.y - ym[rep], d.x - xm[rep], d.offsets, d.labels)


class DummyExpansion(NamedTuple):
    """Metadata returned by `add_dummies`."""

    dataset: ClusteredDataset
    levels: tuple[str, ...]
    base_level: str
    added: int
    single_level: bool


def add_dummies(d: ClusteredDataset, values: Sequence[object]) -> DummyExpansion:
    """Append one 0/1 indicator column per level of `values`, dropping the base.

    `values` is aligned with the stacked row order.  Levels are ordered by
    first appearance and the first level is the dropped base.  A
    single-level factor is a no-op with a warning flag.
    """
    vals = [str(v) for v in values]
    if len(vals) != d.N:
        raise ValidationError(f"factor has {len(vals)} values, dataset has {d.N} rows")
    levels: list[str] = []
    seen: dict[str, int] = {}
    for v in vals:
        if v not in seen:
            seen[v] = len(levels)
            levels.append(v)
    if len(levels) < 2:
        return DummyExpansion(d, tuple(levels), levels[0], 0, True)
    codes = np.array([seen[v] for v in vals])
    cols = np.zeros((d.N, len(levels) - 1))
    nonbase = codes > 0
    cols[np.nonzero(nonbase)[0], codes[nonbase] - 1] = 1.0
    out = ClusteredDataset(d.y, np.hstack([d.x, cols]), d.offsets, d.labels)
    return DummyExpansion(out, tuple(levels), levels[0], len(levels) - 1, False)
