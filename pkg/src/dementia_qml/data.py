"""Datasets: CSV ingestion, stratified splitting and synthetic cohorts.

The synthetic cohort matches target demographic moments for an elderly
dementia cohort (166 patients, 76% female, age 78.90 +- 7.7939, schooling
3.46 +- 3.8767 years, 2.96 +- 1.3242 chronic diseases, ages 65-90). No other
properties of the real data are known, so the remaining columns are uniform
noise and the label is drawn from a declared logistic rule.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, stats

from . import kvfile
from .errors import DataLoadError


@dataclass(frozen=True)
class LoadReport:
    rows_read: int
    rows_kept: int
    dropped_lines: tuple = ()

    @property
    def drop_count(self) -> int:
        return self.rows_read - self.rows_kept


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple
    provenance: str = ""
    load_report: LoadReport | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.array(self.y, dtype=int).reshape(-1)
        names = tuple(str(n) for n in self.feature_names)
        if X.ndim != 2:
            raise ValueError(f"feature matrix must be 2-D, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} rows but {y.shape[0]} labels")
        if X.shape[1] != len(names):
            raise ValueError(f"{X.shape[1]} columns but {len(names)} feature names")
        if not np.all(np.isin(y, (-1, 1))):
            raise ValueError("labels must be +1 or -1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def rows(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(self.X[indices], self.y[indices], self.feature_names, self.provenance)

    def columns(self, indices) -> "Dataset":
        indices = [int(i) for i in indices]
        names = tuple(self.feature_names[i] for i in indices)
        return Dataset(self.X[:, indices], self.y, names, self.provenance)

    def with_features(self, X) -> "Dataset":
        return Dataset(X, self.y, self.feature_names, self.provenance)

    def to_csv(self, path, label_column: str = "label") -> None:
        """Write atomically; labels are written as 1 (+1) and 0 (-1)."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*self.feature_names, label_column])
        for row, label in zip(self.X, self.y):
            writer.writerow([repr(float(v)) for v in row] + [1 if label == 1 else 0])
        kvfile.write_atomic(path, buf.getvalue())


def load_csv(path, label_column: str, positive_token: str = "1") -> Dataset:
    """Read a header-first CSV. ``positive_token`` in the label column maps to +1.

    Any other non-empty label maps to -1. Rows with an empty or non-numeric
    feature cell (or an empty label) are dropped and listed in the load report.
    """
    path = Path(path)
    if not path.is_file():
        raise DataLoadError(f"{path}: no such file")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataLoadError(f"{path}: empty file (header row required)")
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DataLoadError(f"{path}: label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)
        feature_idx = [i for i in range(len(header)) if i != label_idx]
        rows, labels, dropped = [], [], []
        rows_read = 0
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            rows_read += 1
            try:
                if len(record) != len(header):
                    raise ValueError("wrong column count")
                token = record[label_idx].strip()
                if not token:
                    raise ValueError("empty label")
                values = [float(record[i]) for i in feature_idx]
                if not all(math.isfinite(v) for v in values):
                    raise ValueError("non-finite value")
            except ValueError:
                dropped.append(lineno)
                continue
            rows.append(values)
            labels.append(1 if token == positive_token else -1)
    report = LoadReport(rows_read, len(rows), tuple(dropped))
    if not rows:
        raise DataLoadError(
            f"{path}: no usable rows ({rows_read} read, dropped lines {list(dropped)})"
        )
    names = tuple(header[i] for i in feature_idx)
    return Dataset(np.array(rows), np.array(labels), names, f"csv:{path}", report)


def split_indices(y, test_fraction: float, seed: int) -> tuple:
    """Stratified train/test row indices, each sorted ascending."""
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label in (-1, 1):
        idx = np.flatnonzero(y == label)
        if idx.size < 2:
            raise ValueError(f"class {label:+d} has {idx.size} sample(s); need >= 2 to stratify")
        idx = rng.permutation(idx)
        n_test = min(max(int(round(test_fraction * idx.size)), 1), idx.size - 1)
        test.extend(idx[:n_test])
        train.extend(idx[n_test:])
    return np.sort(np.array(train, dtype=int)), np.sort(np.array(test, dtype=int))


def split(dataset: Dataset, test_fraction: float, seed: int) -> tuple:
    train_idx, test_idx = split_indices(dataset.y, test_fraction, seed)
    return dataset.rows(train_idx), dataset.rows(test_idx)


@dataclass(frozen=True)
class SynthSpec:
    n_samples: int = 166
    fraction_female: float = 0.76
    age_mean: float = 78.90
    age_sd: float = 7.7939
    age_range: tuple = (65.0, 90.0)
    schooling_mean: float = 3.46
    schooling_sd: float = 3.8767
    chronic_mean: float = 2.96
    chronic_sd: float = 1.3242
    n_noise_features: int = 95
    # logistic label rule over standardized (age, schooling, chronic)
    coefficients: tuple = (0.0, 1.5, -1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 4:
            raise ValueError(f"n_samples must be >= 4, got {self.n_samples}")
        if not 0 <= self.fraction_female <= 1:
            raise ValueError("fraction_female must be in [0, 1]")
        if min(self.age_sd, self.schooling_sd, self.chronic_sd) < 0:
            raise ValueError("standard deviations must be >= 0")
        if self.n_noise_features < 0:
            raise ValueError("n_noise_features must be >= 0")
        if len(self.coefficients) != 4:
            raise ValueError("coefficients are (intercept, age, schooling, chronic)")
        lo, hi = self.age_range
        if not lo < hi:
            raise ValueError("age_range must satisfy lo < hi")


def truncated_location(mean: float, sd: float, lo: float, hi: float) -> float:
    """Location of a normal(loc, sd) whose restriction to [lo, hi] has the given mean.

    Truncation shifts the mean (strongly so for schooling, whose sd exceeds
    its mean), so the untruncated location is solved for rather than reused.
    """
    if sd == 0:
        return mean

    def gap(loc):
        a, b = (lo - loc) / sd, (hi - loc) / sd
        return stats.truncnorm.mean(a, b, loc=loc, scale=sd) - mean

    span = 50.0 * sd + abs(mean)
    return float(optimize.brentq(gap, mean - span, mean + span, xtol=1e-12))


def _truncated_normal(rng, size, mean, sd, lo, hi):
    """Rejection sampling from normal(loc, sd) restricted to [lo, hi], mean-matched."""
    if sd == 0:
        return np.full(size, float(np.clip(mean, lo, hi)))
    loc = truncated_location(mean, sd, lo, hi)
    out = np.empty(0)
    while out.size < size:
        draw = rng.normal(loc, sd, size=2 * (size - out.size) + 16)
        out = np.concatenate([out, draw[(draw >= lo) & (draw <= hi)]])
    return out[:size]


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def generate_synthetic(spec: SynthSpec = SynthSpec()) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    m = spec.n_samples
    female = (rng.random(m) < spec.fraction_female).astype(float)
    age = _truncated_normal(rng, m, spec.age_mean, spec.age_sd, *spec.age_range)
    schooling = _truncated_normal(rng, m, spec.schooling_mean, spec.schooling_sd, 0.0, math.inf)
    chronic = np.rint(
        _truncated_normal(rng, m, spec.chronic_mean, spec.chronic_sd, 0.0, math.inf)
    )
    noise = rng.random((m, spec.n_noise_features))

    def z(v, mean, sd):
        return (v - mean) / sd if sd > 0 else np.zeros_like(v)

    b0, b_age, b_sch, b_chr = spec.coefficients
    logits = (
        b0
        + b_age * z(age, spec.age_mean, spec.age_sd)
        + b_sch * z(schooling, spec.schooling_mean, spec.schooling_sd)
        + b_chr * z(chronic, spec.chronic_mean, spec.chronic_sd)
    )
    y = np.where(rng.random(m) < _sigmoid(logits), 1, -1)

    X = np.column_stack([female, age, schooling, chronic, noise])
    width = max(2, len(str(spec.n_noise_features - 1)))
    names = ("female", "age", "schooling", "chronic_diseases") + tuple(
        f"noise_{i:0{width}d}" for i in range(spec.n_noise_features)
    )
    return Dataset(X, y, names, f"synthetic:seed={spec.seed}")


def make_separable(
    n_samples: int = 40, n_features: int = 2, margin: float = 0.5, seed: int = 0
) -> Dataset:
    """Balanced, linearly separable points in the unit cube.

    Opposite-class points are at least ``margin`` apart. Min-max rescaling to
    any target range of width >= 1 only stretches the axes, so the gap
    survives scaling.
    """
    if n_samples < 4 or n_samples % 2:
        raise ValueError("n_samples must be an even number >= 4")
    rng = np.random.default_rng(seed)
    normal = rng.normal(size=n_features)
    normal /= np.linalg.norm(normal)
    center = np.full(n_features, 0.5)
    per_class = n_samples // 2
    pos, neg = [], []
    while len(pos) < per_class or len(neg) < per_class:
        x = rng.uniform(0.0, 1.0, size=n_features)
        s = float(normal @ (x - center))
        if abs(s) < margin / 2:
            continue
        bucket = pos if s > 0 else neg
        if len(bucket) < per_class:
            bucket.append(x)
    X = np.empty((n_samples, n_features))
    X[0::2], X[1::2] = pos, neg
    y = np.tile([1, -1], per_class)
    names = tuple(f"x{i}" for i in range(n_features))
    return Dataset(X, y, names, f"separable:seed={seed},margin={margin}")
