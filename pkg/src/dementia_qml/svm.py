"""Linear soft-margin SVM trained by sequential minimal optimization.

The dual problem is

    max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j <x_i, x_j>
    s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0

Each SMO step optimizes two coefficients analytically while the equality
constraint is kept exact. Write ``E_i = w.x_i - y_i`` (no bias) and

    I_up  = {a_i < C, y_i = +1} u {a_i > 0, y_i = -1}
    I_low = {a_i < C, y_i = -1} u {a_i > 0, y_i = +1}.

A bias ``b`` consistent with the KKT conditions exists iff
``max_{I_up} -E_i <= min_{I_low} -E_i``; the difference is the optimality
gap used as the stopping rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kvfile
from .data import Dataset
from .errors import TrainingError

ALPHA_TOL = 1e-8
KKT_TOL = 1e-3


@dataclass(frozen=True)
class SvmModel:
    w: np.ndarray
    b: float
    C: float
    alphas: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        alphas = np.array(self.alphas, dtype=float).reshape(-1)
        w.setflags(write=False)
        alphas.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "b", float(self.b))

    @property
    def support_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alphas > ALPHA_TOL)

    @property
    def n_features(self) -> int:
        return self.w.size


def linear_kernel(A, B) -> np.ndarray:
    return np.asarray(A, dtype=float) @ np.asarray(B, dtype=float).T


def dual_objective(alphas, X, y, kernel=linear_kernel) -> float:
    a = np.asarray(alphas, dtype=float)
    ay = a * np.asarray(y, dtype=float)
    return float(a.sum() - 0.5 * ay @ kernel(X, X) @ ay)


class _Smo:
    def __init__(self, X, y, C, tol):
        self.X, self.y, self.C, self.tol = X, y.astype(float), C, tol
        self.K = linear_kernel(X, X)
        self.n = len(y)
        self.alpha = np.zeros(self.n)
        self.E = -self.y.copy()  # w = 0 initially
        self.steps = 0

    def _up_low(self):
        a, y, C = self.alpha, self.y, self.C
        up = ((y > 0) & (a < C)) | ((y < 0) & (a > 0))
        low = ((y < 0) & (a < C)) | ((y > 0) & (a > 0))
        return up, low

    def gap(self) -> float:
        up, low = self._up_low()
        if not up.any() or not low.any():
            return 0.0
        return float(np.max(-self.E[up]) - np.min(-self.E[low]))

    def examine(self, i: int) -> bool:
        up, low = self._up_low()
        g = -self.E
        best, partner = self.tol, None
        if up[i] and low.any():
            j = int(np.argmin(np.where(low, g, np.inf)))
            if g[i] - g[j] > best:
                best, partner = g[i] - g[j], (i, j)
        if low[i] and up.any():
            j = int(np.argmax(np.where(up, g, -np.inf)))
            if g[j] - g[i] > best:
                best, partner = g[j] - g[i], (j, i)
        if partner is None:
            return False
        return self.take_step(*partner)

    def take_step(self, i: int, j: int) -> bool:
        """Optimize (alpha_i, alpha_j); i in I_up, j in I_low."""
        if i == j:
            return False
        a, y, C, K, E = self.alpha, self.y, self.C, self.K, self.E
        s = y[i] * y[j]
        if s < 0:
            lo, hi = max(0.0, a[j] - a[i]), min(C, C + a[j] - a[i])
        else:
            lo, hi = max(0.0, a[i] + a[j] - C), min(C, a[i] + a[j])
        if hi - lo <= 0:
            return False
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta > 1e-12:
            aj = np.clip(a[j] + y[j] * (E[i] - E[j]) / eta, lo, hi)
        else:
            # flat curvature: the dual is linear along the pair, go to the better end
            aj = hi if y[j] * (E[i] - E[j]) > 0 else lo
        dj = aj - a[j]
        if abs(dj) < 1e-15 * (1.0 + abs(aj)):
            return False
        ai = a[i] - s * dj
        di = ai - a[i]
        a[i], a[j] = ai, aj
        # snap to the box so bound membership is exact
        for k in (i, j):
            if a[k] < 1e-12 * C:
                a[k] = 0.0
            elif a[k] > C * (1 - 1e-12):
                a[k] = C
        E += di * y[i] * K[:, i] + dj * y[j] * K[:, j]
        self.steps += 1
        return True

    def solve(self, max_passes: int) -> int:
        """Platt's outer loop: full passes alternate with passes over non-bound samples."""
        examine_all, passes = True, 0
        while True:
            if examine_all:
                order = range(self.n)
            else:
                order = np.flatnonzero((self.alpha > 0) & (self.alpha < self.C))
            changed = sum(self.examine(int(i)) for i in order)
            passes += 1
            if examine_all and changed == 0:
                return passes
            if examine_all:
                examine_all = False
            elif changed == 0:
                examine_all = True
            if passes >= max_passes:
                raise TrainingError(
                    f"SMO did not converge in {max_passes} passes (gap {self.gap():.3g})",
                    best=None,
                    diagnostics={"passes": passes, "gap": self.gap(), "steps": self.steps},
                )


def _bias(alpha, E, y, C) -> float:
    sv = alpha > ALPHA_TOL
    free = sv & (alpha < C - ALPHA_TOL)
    if free.any():
        b = float(np.mean(-E[free]))
    elif sv.any():
        b = float(np.mean(-E[sv]))
    else:
        b = 0.0
    # keep b inside the KKT-feasible interval [max_up(-E), min_low(-E)]
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
    lo = np.max(-E[up]) if up.any() else -np.inf
    hi = np.min(-E[low]) if low.any() else np.inf
    if lo <= hi:
        b = float(np.clip(b, lo, hi))
    return b


def train_svm(dataset: Dataset, C: float = 1.0, tol: float = 1e-9, max_passes: int = 10_000) -> SvmModel:
    """Solve the dual by SMO; ``tol`` bounds the final optimality gap."""
    if not C > 0:
        raise ValueError(f"C must be > 0, got {C}")
    y = dataset.y
    if np.unique(y).size < 2:
        raise ValueError("SVM training needs both classes present")
    X = dataset.X
    smo = _Smo(X, y, float(C), tol)
    smo.solve(max_passes)
    alpha = smo.alpha
    w = (alpha * y) @ X
    b = _bias(alpha, smo.E, smo.y, float(C))
    return SvmModel(w, b, float(C), alpha)


def _vector(model: SvmModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {x.shape[-1]}")
    return x


def decision_function(model: SvmModel, x) -> float:
    x = _vector(model, x)
    if x.ndim != 1:
        raise ValueError("decision_function takes a single feature vector")
    return float(model.w @ x + model.b)


def decision_batch(model: SvmModel, X) -> np.ndarray:
    X = _vector(model, np.atleast_2d(X))
    return X @ model.w + model.b


def classify_svm(model: SvmModel, x) -> int:
    """Sign of the decision function; exactly 0 maps to +1."""
    return 1 if decision_function(model, x) >= 0 else -1


def classify_svm_batch(model: SvmModel, X) -> np.ndarray:
    return np.where(decision_batch(model, X) >= 0, 1, -1)


def kkt_violations(model: SvmModel, X, y, tol: float = KKT_TOL) -> list:
    """Indices whose margin violates the KKT condition for its alpha."""
    margins = np.asarray(y) * decision_batch(model, X)
    a, C = model.alphas, model.C
    bad = []
    for i, (ai, m) in enumerate(zip(a, margins)):
        if ai <= ALPHA_TOL:
            ok = m >= 1 - tol
        elif ai >= C - ALPHA_TOL:
            ok = m <= 1 + tol
        else:
            ok = abs(m - 1) <= tol
        if not ok:
            bad.append(i)
    return bad


def model_to_dict(model: SvmModel) -> dict:
    items = {"model": "svm", "n_features": model.n_features, "C": repr(model.C), "b": repr(model.b)}
    items.update({f"w.{i}": repr(float(v)) for i, v in enumerate(model.w)})
    items.update({f"alpha.{i}": repr(float(v)) for i, v in enumerate(model.alphas)})
    return items


def model_from_dict(items: dict) -> SvmModel:
    if items.get("model") != "svm":
        raise ValueError(f"not an SVM model file (model = {items.get('model')})")
    w = kvfile.float_list(items, "w")
    if len(w) != int(items["n_features"]):
        raise ValueError("w length does not match n_features")
    return SvmModel(w, float(items["b"]), float(items["C"]), kvfile.float_list(items, "alpha"))


def save_model(model: SvmModel, path) -> None:
    kvfile.write(path, model_to_dict(model))


def load_model(path) -> SvmModel:
    return model_from_dict(kvfile.read(path))
