"""Min-max scaling and variable-ranking feature selection.

Scaler parameters are fitted on the training split only and then applied to
any split; values outside the training range are clamped.

The default target range is [0, 1]. The feature map's single-qubit phase
gate exp(i x Z) puts a relative phase of 2x between |0> and |1>, and the pair
terms see 2 x_i x_j. On [0, 1] both stay below pi, so the encoding never wraps.
"""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .data import Dataset
from .errors import DataLoadError

DEFAULT_RANGE = (0.0, 1.0)
SCORERS = ("f_score", "permutation_importance")
# Stand-in for an infinite F statistic (zero within-class variance).
SENTINEL_SCORE = sys.float_info.max


@dataclass(frozen=True)
class ScalerParams:
    mins: np.ndarray
    maxs: np.ndarray
    lo: float = DEFAULT_RANGE[0]
    hi: float = DEFAULT_RANGE[1]

    def __post_init__(self):
        mins = np.array(self.mins, dtype=float).reshape(-1)
        maxs = np.array(self.maxs, dtype=float).reshape(-1)
        if mins.shape != maxs.shape:
            raise ValueError("mins and maxs must have the same length")
        if np.any(mins > maxs):
            raise ValueError("every column needs min <= max")
        if not self.lo < self.hi:
            raise ValueError(f"target range needs lo < hi, got [{self.lo}, {self.hi}]")
        mins.setflags(write=False)
        maxs.setflags(write=False)
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @property
    def n_features(self) -> int:
        return self.mins.size

    @property
    def degenerate(self) -> np.ndarray:
        """Columns that were constant on the training split."""
        return self.maxs == self.mins


def fit_scaler(train_matrix, feature_range=DEFAULT_RANGE) -> ScalerParams:
    X = np.asarray(train_matrix, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[0] == 0:
        raise ValueError("cannot fit a scaler on an empty matrix")
    lo, hi = (float(v) for v in feature_range)
    return ScalerParams(X.min(axis=0), X.max(axis=0), lo, hi)


def _check_columns(X, params: ScalerParams) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[1] != params.n_features:
        raise ValueError(f"matrix has {X.shape[1]} columns, scaler was fit on {params.n_features}")
    return X


def transform(X, params: ScalerParams) -> np.ndarray:
    X = _check_columns(X, params)
    span = params.maxs - params.mins
    safe = np.where(span > 0, span, 1.0)
    scaled = params.lo + (X - params.mins) * (params.hi - params.lo) / safe
    scaled = np.where(span > 0, scaled, params.lo)
    return np.clip(scaled, params.lo, params.hi)


def inverse_transform(X, params: ScalerParams) -> np.ndarray:
    """Undo ``transform``; degenerate columns come back as their training value."""
    X = _check_columns(X, params)
    span = params.maxs - params.mins
    return params.mins + (X - params.lo) * span / (params.hi - params.lo)


def scale_split(train: Dataset, test: Dataset, feature_range=DEFAULT_RANGE) -> tuple:
    """Fit on ``train`` and scale both splits."""
    params = fit_scaler(train.X, feature_range)
    return train.with_features(transform(train.X, params)), test.with_features(
        transform(test.X, params)
    ), params


@dataclass(frozen=True)
class FeatureRanking:
    entries: tuple  # ((feature index, score), ...) best first
    scorer: str
    feature_names: tuple = ()
    degenerate: tuple = ()  # indices whose score is a sentinel or undefined

    def __post_init__(self):
        entries = tuple((int(i), float(s)) for i, s in self.entries)
        indices = [i for i, _ in entries]
        if len(set(indices)) != len(indices):
            raise ValueError("ranking indices must be unique")
        if any(i < 0 for i in indices):
            raise ValueError("ranking indices must be non-negative")
        if self.feature_names and any(i >= len(self.feature_names) for i in indices):
            raise ValueError("ranking index out of range")
        scores = [s for _, s in entries]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("ranking scores must be non-increasing")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "degenerate", tuple(sorted(int(i) for i in self.degenerate)))

    @property
    def indices(self) -> list:
        return [i for i, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def _order(scores) -> tuple:
    """Sort by descending score, ties to the lower index."""
    return tuple(sorted(enumerate(scores), key=lambda p: (-p[1], p[0])))


def f_scores(X, y) -> tuple:
    """One-way ANOVA F statistic per column, plus the indices that are degenerate.

    Zero within-class variance gives ``SENTINEL_SCORE``; a column that is also
    constant overall (no between-class variance either) scores 0.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    groups = [X[y == c] for c in (-1, 1)]
    if any(g.shape[0] < 2 for g in groups):
        raise ValueError("f_score needs at least 2 samples per class")
    n, k = X.shape[0], len(groups)
    grand = X.mean(axis=0)
    ss_between = sum(g.shape[0] * (g.mean(axis=0) - grand) ** 2 for g in groups)
    ss_within = sum(((g - g.mean(axis=0)) ** 2).sum(axis=0) for g in groups)
    # Sums of squares below rounding noise are treated as exact zeros.
    scale = (X**2).sum(axis=0) + 1.0
    ss_within = np.where(ss_within <= 1e-14 * scale, 0.0, ss_within)
    ss_between = np.where(ss_between <= 1e-14 * scale, 0.0, ss_between)
    scores = np.empty(X.shape[1])
    degenerate = []
    for j in range(X.shape[1]):
        if ss_within[j] == 0:
            degenerate.append(j)
            scores[j] = SENTINEL_SCORE if ss_between[j] > 0 else 0.0
        else:
            scores[j] = (ss_between[j] / (k - 1)) / (ss_within[j] / (n - k))
    return scores, tuple(degenerate)


def permutation_importances(
    X, y, predict: Callable[[np.ndarray], np.ndarray], seed: int = 0, repeats: int = 10
) -> np.ndarray:
    """Mean accuracy drop when one column is shuffled, over ``repeats`` seeded shuffles."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    base = float(np.mean(predict(X) == y))
    drops = np.zeros(X.shape[1])
    for j in range(X.shape[1]):
        for _ in range(repeats):
            Xp = X.copy()
            Xp[:, j] = rng.permutation(Xp[:, j])
            drops[j] += base - float(np.mean(predict(Xp) == y))
    return drops / repeats


def rank_features(
    dataset: Dataset,
    scorer: str = "f_score",
    predict: Callable[[np.ndarray], np.ndarray] | None = None,
    seed: int = 0,
    repeats: int = 10,
) -> FeatureRanking:
    """Rank columns of ``dataset`` best first.

    ``permutation_importance`` needs a fitted ``predict`` callable; when none is
    given, a linear SVM (C = 1) is trained on ``dataset`` as the baseline.
    """
    if scorer == "f_score":
        scores, degenerate = f_scores(dataset.X, dataset.y)
    elif scorer == "permutation_importance":
        if predict is None:
            from .svm import classify_svm_batch, train_svm

            baseline = train_svm(dataset)

            def predict(X):
                return classify_svm_batch(baseline, X)

        scores = permutation_importances(dataset.X, dataset.y, predict, seed, repeats)
        degenerate = ()
    else:
        raise ValueError(f"scorer must be one of {SCORERS}, got {scorer!r}")
    return FeatureRanking(_order(scores), scorer, dataset.feature_names, degenerate)


def select_top_k(ranking: FeatureRanking, k: int) -> list:
    if not 1 <= k <= len(ranking):
        raise ValueError(f"k must be in [1, {len(ranking)}], got {k}")
    return ranking.indices[:k]


def read_ranking(path, feature_names) -> FeatureRanking:
    """Load an external ``feature_name,score`` CSV (header optional) as a ranking."""
    path = Path(path)
    if not path.is_file():
        raise DataLoadError(f"{path}: no such file")
    names = list(feature_names)
    scores = {}
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise DataLoadError(f"{path}:{lineno}: expected feature_name,score")
            name, raw = row[0].strip(), row[1].strip()
            try:
                score = float(raw)
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise DataLoadError(f"{path}:{lineno}: score {raw!r} is not a number") from None
            if name not in names:
                raise DataLoadError(f"{path}:{lineno}: unknown feature {name!r}")
            if name in scores:
                raise DataLoadError(f"{path}:{lineno}: duplicate feature {name!r}")
            scores[name] = score
    if not scores:
        raise DataLoadError(f"{path}: no ranking rows")
    pairs = sorted(((names.index(n), s) for n, s in scores.items()), key=lambda p: (-p[1], p[0]))
    return FeatureRanking(tuple(pairs), "external", tuple(names))


def write_ranking(ranking: FeatureRanking, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_name", "score"])
        for i, s in ranking.entries:
            writer.writerow([ranking.feature_names[i], repr(s)])
