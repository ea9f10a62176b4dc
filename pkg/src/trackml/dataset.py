"""Tracker records: CSV ingest, cleaning, feature extraction and synthetic data.

A record holds two condition labels (light intensity in lux, transmitter to
receiver distance in cm) and the six head-pose coordinates reported by the
optical tracker.  Features are always laid out as ``FEATURE_NAMES``.
"""
from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import DataError

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("light_intensity", "distance", "yaw", "pitch", "roll", "x", "y", "z")

#: Column order of every feature matrix produced by this package.
FEATURE_NAMES = ("x", "y", "z", "roll", "yaw", "pitch")


class Target(str, enum.Enum):
    """Condition variable a model is asked to predict."""

    LIGHT_INTENSITY = "light"
    DISTANCE = "distance"

    @property
    def column(self) -> str:
        return "light_intensity" if self is Target.LIGHT_INTENSITY else "distance"

    @classmethod
    def parse(cls, value) -> "Target":
        if isinstance(value, Target):
            return value
        key = str(value).strip().lower()
        aliases = {"light": cls.LIGHT_INTENSITY, "li": cls.LIGHT_INTENSITY,
                   "light_intensity": cls.LIGHT_INTENSITY,
                   "distance": cls.DISTANCE, "d": cls.DISTANCE}
        if key not in aliases:
            raise ValueError(f"unknown target {value!r}")
        return aliases[key]


BOTH_TARGETS = (Target.LIGHT_INTENSITY, Target.DISTANCE)


@dataclass(frozen=True)
class TrackingRecord:
    """One tracker observation.  ``None`` marks a missing or unusable field."""

    light_intensity: Optional[float]
    distance: Optional[float]
    yaw: Optional[float]
    pitch: Optional[float]
    roll: Optional[float]
    x: Optional[float]
    y: Optional[float]
    z: Optional[float]

    @property
    def is_complete(self) -> bool:
        return all(getattr(self, name) is not None for name in CSV_COLUMNS)

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, name) for name in CSV_COLUMNS)


@dataclass(frozen=True)
class CleanReport:
    n_read: int
    n_missing: int
    n_duplicates: int

    @property
    def n_kept(self) -> int:
        return self.n_read - self.n_missing - self.n_duplicates

    def summary(self) -> str:
        dup = "duplicate" if self.n_duplicates == 1 else "duplicates"
        return (f"{self.n_read} rows read, {self.n_kept} kept, "
                f"{self.n_duplicates} {dup} removed, {self.n_missing} missing removed")


@dataclass(frozen=True)
class Dataset:
    records: tuple
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    @property
    def is_clean(self) -> bool:
        return (all(r.is_complete for r in self.records)
                and len({r.as_tuple() for r in self.records}) == len(self.records))

    def features(self) -> np.ndarray:
        """Feature matrix of shape (n, 6) in ``FEATURE_NAMES`` order."""
        self._require_clean()
        return np.array([[getattr(r, name) for name in FEATURE_NAMES]
                         for r in self.records], dtype=float).reshape(-1, 6)

    def labels(self, target) -> np.ndarray:
        self._require_clean()
        column = Target.parse(target).column
        return np.array([getattr(r, column) for r in self.records], dtype=float)

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(tuple(self.records[i] for i in indices), self.provenance)

    def _require_clean(self):
        if not all(r.is_complete for r in self.records):
            raise DataError("dataset contains records with missing fields; run clean() first")


# Table 2 sample rows: (lux, cm, yaw, pitch, roll, x, y, z), printed order kept.
TABLE2_ROWS = (
    (3, 25, -18.2, 3.8, -17.8, -4.5, 4.1, 13.47),
    (3, 50, -20.5, -1.7, -7.8, 0.2, 0.7, -10.3),
    (3, 75, -23.5, -12.78, -2.67, -13.6, -0.2, 3.97),
    (3, 100, 5.1, -14.44, -2.9, 6, 0.7, -5.13),
    (75, 25, -54.3, 1.1, -0.6, -2.8, 0.51, 6.05),
    (75, 50, -49, -1.4, -1.8, -1.2, 1.4, 2.95),
    (75, 75, -8.8, 2, -4.5, -1.9, 1.3, -0.16),
    (75, 100, -11.6, 1, -3.8, 0.3, -1.9, -12.36),
    (111, 25, -13.1, -2.8, 0.1, -7.6, 3.2, 5.66),
    (111, 50, -7.4, -3, 0, -6.2, 3.3, 5.38),
    (111, 75, -2, -2.8, -0.4, -1.1, 3, 6.46),
    (111, 25, -16, -2.8, -0.4, 2, 2.9, -2.15),
    (165, 50, 9.3, -6.6, 2.4, 0.6, 2.5, -9.43),
    (165, 25, 9.7, -6.1, 2, 1, 2, -11.21),
    (165, 75, 9.43, -6.67, 2.4, 0.6, 2.5, -9.43),
    (165, 100, -10.22, -7.99, -1.8, 5, 2, -7.76),
)


def table2_dataset() -> Dataset:
    """The sixteen published sample rows as a clean dataset."""
    return Dataset(tuple(TrackingRecord(*map(float, row)) for row in TABLE2_ROWS),
                   provenance="table2")


def _parse_field(text: Optional[str], positive: bool) -> Optional[float]:
    if text is None:
        return None
    text = text.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    if not math.isfinite(value) or (positive and value <= 0):
        return None
    return value


def ingest(path, format: str = "csv") -> Dataset:
    """Read tracker records from a CSV file.

    Rows with empty, unparseable or non-finite fields are kept, with those
    fields set to ``None``, so that :func:`clean` can account for them.
    """
    if format.lower() != "csv":
        raise ValueError(f"unsupported format {format!r}")
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise DataError(f"malformed header in {path}; expected {','.join(CSV_COLUMNS)}")
        records = []
        for row in reader:
            if not row:
                continue
            padded = list(row) + [None] * (len(CSV_COLUMNS) - len(row))
            values = [_parse_field(padded[i], positive=i < 2)
                      for i in range(len(CSV_COLUMNS))]
            records.append(TrackingRecord(*values))
    if not records:
        raise DataError(f"no data rows in {path}")
    return Dataset(tuple(records), provenance=str(path))


def _format_value(value: Optional[float]) -> str:
    if value is None:
        return ""
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def write_csv(dataset: Dataset, path) -> None:
    """Serialize records with round-trip exact float formatting."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in dataset.records:
            writer.writerow([_format_value(v) for v in record.as_tuple()])


def clean(dataset: Dataset) -> tuple[Dataset, CleanReport]:
    """Drop records with missing fields, then exact duplicates (first kept)."""
    if len(dataset) == 0:
        raise DataError("cannot clean an empty dataset")
    complete = [r for r in dataset.records if r.is_complete]
    n_missing = len(dataset) - len(complete)
    seen = set()
    kept = []
    for record in complete:
        key = record.as_tuple()
        if key in seen:
            continue
        seen.add(key)
        kept.append(record)
    report = CleanReport(len(dataset), n_missing, len(complete) - len(kept))
    if not kept:
        raise DataError("no records left after removing missing and duplicate entries")
    logger.info("clean: %s", report.summary())
    return Dataset(tuple(kept), dataset.provenance), report


def extract(record: TrackingRecord, target) -> tuple[np.ndarray, float]:
    """Feature vector (``FEATURE_NAMES`` order) and the requested condition label."""
    features = np.array([getattr(record, name) for name in FEATURE_NAMES], dtype=float)
    return features, float(getattr(record, Target.parse(target).column))


def class_levels(dataset: Dataset, target) -> np.ndarray:
    """Distinct condition levels present in the data, ascending."""
    return np.unique(dataset.labels(target))


def rotation_matrix(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """Head orientation as ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``, angles in degrees.

    Yaw turns about Z, pitch about Y and roll about X (intrinsic Z-Y-X).
    """
    angles = (yaw, pitch, roll)
    if not all(math.isfinite(a) for a in angles):
        raise ValueError("rotation angles must be finite")
    yr, pr, rr = (math.radians(a) for a in angles)
    cz, sz = math.cos(yr), math.sin(yr)
    cy, sy = math.cos(pr), math.sin(pr)
    cx, sx = math.cos(rr), math.sin(rr)
    return np.array([
        [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
        [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
        [-sy, cy * sx, cy * cx],
    ])


def table2_spread() -> np.ndarray:
    """Per-coordinate standard deviation of the Table 2 rows (yaw, pitch, roll, x, y, z)."""
    return np.array(TABLE2_ROWS, dtype=float)[:, 2:].std(axis=0)


def synthesize(conditions: Optional[Sequence[tuple]] = None, n_per_condition: int = 10,
               noise_scale=1.0, seed: int = 0, noise: str = "gaussian",
               df: float = 2.0) -> Dataset:
    """Generate labelled records around per-condition mean poses.

    Each ``(lux, cm)`` condition takes its mean pose from the matching Table 2
    row (the k-th repeat of a pair uses the k-th matching row); conditions
    absent from Table 2 draw a mean uniformly within Table 2's coordinate
    ranges.  ``noise_scale`` is a scalar or one standard deviation per
    coordinate in ``yaw, pitch, roll, x, y, z`` order.  ``noise`` selects
    Gaussian draws or heavy-tailed Student-t draws with ``df`` degrees of
    freedom (tracker glitches).  This is stand-in data, not measurements.
    """
    if conditions is None:
        conditions = [row[:2] for row in TABLE2_ROWS]
    conditions = [(float(lux), float(cm)) for lux, cm in conditions]
    if not conditions:
        raise ValueError("conditions must not be empty")
    if n_per_condition < 1:
        raise ValueError("n_per_condition must be >= 1")
    if any(lux <= 0 or cm <= 0 for lux, cm in conditions):
        raise ValueError("condition levels must be positive")
    scale = np.broadcast_to(np.asarray(noise_scale, dtype=float), (6,))
    if np.any(scale < 0):
        raise ValueError("noise_scale must be non-negative")
    if noise not in ("gaussian", "student_t"):
        raise ValueError(f"unknown noise model {noise!r}")
    if noise == "student_t" and df <= 0:
        raise ValueError("df must be > 0")

    rng = np.random.default_rng(seed)
    table = np.array(TABLE2_ROWS, dtype=float)
    lo, hi = table[:, 2:].min(axis=0), table[:, 2:].max(axis=0)
    used: dict = {}
    records = []
    for lux, cm in conditions:
        matches = np.flatnonzero((table[:, 0] == lux) & (table[:, 1] == cm))
        k = used.get((lux, cm), 0)
        used[(lux, cm)] = k + 1
        if k < len(matches):
            mean = table[matches[k], 2:]
        else:
            mean = rng.uniform(lo, hi)
        if noise == "gaussian":
            unit = rng.standard_normal((n_per_condition, 6))
        else:
            unit = rng.standard_t(df, (n_per_condition, 6))
        draws = mean + unit * scale
        for pose in np.round(draws, 6):
            records.append(TrackingRecord(lux, cm, *map(float, pose)))
    return Dataset(tuple(records), provenance=f"synthetic(seed={seed})")
