"""Variational quantum classifier.

A sample ``x`` is encoded with the feature-map circuit, evolved by the
trainable ansatz, and measured in the computational basis. Outcomes with
even bit parity vote for class +1, odd parity for -1, so

    p(+1 | x) = sum over even-parity b of |<b| U(theta) U_phi(x) |0...0>|^2

estimated from ``shots`` samples (or computed exactly when ``shots == 0``).
Training minimizes a cross-entropy or error-rate loss over ``theta`` with a
derivative-free optimizer.

Shot sampling for sample ``i`` is seeded with ``(model.seed, i)``, which
makes predictions reproducible and independent of evaluation order. During
training the same seeds are reused at every evaluation, so the optimizer
sees a deterministic (if noisy) objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kvfile
from .circuits import AnsatzSpec, FeatureMapSpec, build_ansatz, encode_batch, unitary
from .data import Dataset
from .errors import ConfigurationError, TrainingError
from .optimizer import OptimizationResult, OptimizerConfig, minimize
from .statevector import sample_indices

LABEL_RULES = ("parity", "qubit0")
LOSSES = ("cross_entropy", "error_rate")
EPS = 1e-9


def positive_mask(num_qubits: int, rule: str = "parity") -> np.ndarray:
    """Boolean mask over basis states that count as a +1 outcome."""
    idx = np.arange(2**num_qubits)
    if rule == "parity":
        parity = np.zeros_like(idx)
        for q in range(num_qubits):
            parity ^= (idx >> q) & 1
        return parity == 0
    if rule == "qubit0":
        return (idx & 1) == 0
    raise ConfigurationError(f"label rule must be one of {LABEL_RULES}, got {rule!r}")


@dataclass(frozen=True)
class VqcModel:
    feature_map: FeatureMapSpec
    ansatz: AnsatzSpec
    theta: np.ndarray
    shots: int = 1024
    decision_threshold: float = 0.5
    seed: int = 0
    label_rule: str = "parity"

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if theta.size != self.ansatz.parameter_count:
            raise ValueError(
                f"theta has {theta.size} entries, ansatz needs {self.ansatz.parameter_count}"
            )
        if self.feature_map.num_qubits != self.ansatz.num_qubits:
            raise ValueError("feature map and ansatz must act on the same number of qubits")
        if self.shots < 0:
            raise ValueError(f"shots must be >= 0, got {self.shots}")
        if not 0 < self.decision_threshold < 1:
            raise ValueError("decision_threshold must be in (0, 1)")
        positive_mask(1, self.label_rule)
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def num_qubits(self) -> int:
        return self.ansatz.num_qubits


@dataclass
class TrainConfig:
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    initial_theta: str = "zeros"  # or "uniform": seeded draws in [-pi, pi]
    loss: str = "cross_entropy"
    shots: int = 1024
    seed: int = 0
    decision_threshold: float = 0.5
    label_rule: str = "parity"

    def __post_init__(self):
        if self.shots < 0:
            raise ConfigurationError(f"shots must be >= 0, got {self.shots}")
        if self.loss not in LOSSES:
            raise ConfigurationError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.initial_theta not in ("zeros", "uniform"):
            raise ConfigurationError(f"unknown initial_theta policy {self.initial_theta!r}")


def _check_matrix(X, num_qubits: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != num_qubits:
        raise ValueError(f"expected {num_qubits} features per sample, got shape {X.shape}")
    return X


def positive_probabilities(
    states: np.ndarray, mask: np.ndarray, shots: int, seed: int, offset: int = 0
) -> np.ndarray:
    """p(+1) per row of ``states`` (final amplitudes), exact or shot-estimated."""
    probs = states.real**2 + states.imag**2
    if shots == 0:
        return np.clip(probs[:, mask].sum(axis=1), 0.0, 1.0)
    out = np.empty(probs.shape[0])
    for i, p in enumerate(probs):
        outcomes = sample_indices(p, shots, (seed, offset + i))
        out[i] = np.count_nonzero(mask[outcomes]) / shots
    return out


class _Evaluator:
    """Caches feature-map states so repeated evaluations only rebuild the ansatz."""

    def __init__(self, X, feature_map: FeatureMapSpec, ansatz: AnsatzSpec, label_rule: str):
        self.ansatz = ansatz
        self.encoded = encode_batch(_check_matrix(X, feature_map.num_qubits), feature_map)
        self.mask = positive_mask(feature_map.num_qubits, label_rule)

    def final_states(self, theta) -> np.ndarray:
        return self.encoded @ unitary(build_ansatz(theta, self.ansatz)).T

    def proba(self, theta, shots: int, seed: int) -> np.ndarray:
        return positive_probabilities(self.final_states(theta), self.mask, shots, seed)


def predict_proba_batch(model: VqcModel, X) -> np.ndarray:
    """p(+1 | x) for every row; row ``i`` uses shot seed ``(model.seed, i)``."""
    ev = _Evaluator(X, model.feature_map, model.ansatz, model.label_rule)
    return ev.proba(model.theta, model.shots, model.seed)


def predict_proba(model: VqcModel, x, index: int = 0) -> float:
    """p(+1 | x) for one sample; ``index`` selects its shot seed ``(model.seed, index)``."""
    x = _check_matrix(x, model.num_qubits)
    if x.shape[0] != 1:
        raise ValueError("predict_proba takes a single feature vector")
    ev = _Evaluator(x, model.feature_map, model.ansatz, model.label_rule)
    states = ev.final_states(model.theta)
    return float(positive_probabilities(states, ev.mask, model.shots, model.seed, index)[0])


def classify_batch(model: VqcModel, X) -> np.ndarray:
    return np.where(predict_proba_batch(model, X) >= model.decision_threshold, 1, -1)


def classify(model: VqcModel, x, index: int = 0) -> int:
    """+1 iff p(+1 | x) >= threshold."""
    return 1 if predict_proba(model, x, index) >= model.decision_threshold else -1


def loss_from_proba(p: np.ndarray, y: np.ndarray, kind: str, threshold: float = 0.5) -> float:
    if y.size == 0:
        raise ValueError("loss needs at least one sample")
    if kind == "cross_entropy":
        pc = np.clip(p, EPS, 1.0 - EPS)
        return float(-np.mean(np.where(y == 1, np.log(pc), np.log(1.0 - pc))))
    if kind == "error_rate":
        pred = np.where(p >= threshold, 1, -1)
        return float(np.mean(pred != y))
    raise ConfigurationError(f"loss must be one of {LOSSES}, got {kind!r}")


def loss(theta, dataset: Dataset, model: VqcModel, config: TrainConfig) -> float:
    """Training loss of ``theta`` on ``dataset``, using ``model`` for the circuit layout."""
    if dataset.n_samples == 0:
        raise ValueError("loss needs a non-empty dataset")
    ev = _Evaluator(dataset.X, model.feature_map, model.ansatz, model.label_rule)
    p = ev.proba(theta, config.shots, config.seed)
    return loss_from_proba(p, dataset.y, config.loss, config.decision_threshold)


def initial_theta(ansatz: AnsatzSpec, config: TrainConfig) -> np.ndarray:
    if config.initial_theta == "zeros":
        return np.zeros(ansatz.parameter_count)
    rng = np.random.default_rng(config.seed)
    return rng.uniform(-math.pi, math.pi, ansatz.parameter_count)


@dataclass
class TrainingRun:
    model: VqcModel
    initial_loss: float
    final_loss: float
    optimization: OptimizationResult


def train_run(
    dataset: Dataset,
    feature_map: FeatureMapSpec,
    ansatz: AnsatzSpec,
    config: TrainConfig | None = None,
    callback=None,
) -> TrainingRun:
    """Train and return the model together with loss and optimizer diagnostics."""
    config = config or TrainConfig()
    if dataset.n_samples == 0:
        raise ValueError("cannot train on an empty dataset")
    if dataset.n_features != feature_map.num_qubits:
        raise ValueError(
            f"dataset has {dataset.n_features} features but the feature map has "
            f"{feature_map.num_qubits} qubits"
        )
    ev = _Evaluator(dataset.X, feature_map, ansatz, config.label_rule)
    y = dataset.y

    def objective(theta):
        p = ev.proba(theta, config.shots, config.seed)
        return loss_from_proba(p, y, config.loss, config.decision_threshold)

    theta0 = initial_theta(ansatz, config)
    result = minimize(objective, theta0, config.optimizer, callback=callback)
    model = VqcModel(
        feature_map,
        ansatz,
        result.best_point,
        shots=config.shots,
        decision_threshold=config.decision_threshold,
        seed=config.seed,
        label_rule=config.label_rule,
    )
    initial = result.incumbent_trace[0] if result.incumbent_trace else math.nan
    if not result.converged:
        raise TrainingError(
            f"optimizer aborted: {result.message}",
            best=model,
            diagnostics={"evaluations": result.evaluations_used, "best_value": result.best_value},
        )
    return TrainingRun(model, initial, result.best_value, result)


def train(
    dataset: Dataset,
    feature_map: FeatureMapSpec,
    ansatz: AnsatzSpec,
    config: TrainConfig | None = None,
) -> VqcModel:
    return train_run(dataset, feature_map, ansatz, config).model


def model_to_dict(model: VqcModel) -> dict:
    items = {
        "model": "vqc",
        "num_qubits": model.num_qubits,
        "layers": model.ansatz.layers,
        "data_map": model.feature_map.data_map,
        "repetitions": model.feature_map.repetitions,
        "pairs": " ".join(f"{i}-{j}" for i, j in model.feature_map.pairs),
        "label_rule": model.label_rule,
        "threshold": repr(model.decision_threshold),
        "shots": model.shots,
        "seed": model.seed,
    }
    items.update({f"theta.{i}": repr(float(t)) for i, t in enumerate(model.theta)})
    return items


def model_from_dict(items: dict) -> VqcModel:
    if items.get("model", "vqc") != "vqc":
        raise ValueError(f"not a VQC model file (model = {items.get('model')})")
    n = int(items["num_qubits"])
    pairs_text = items.get("pairs", "").strip()
    pairs = (
        tuple(tuple(int(v) for v in p.split("-")) for p in pairs_text.split()) if pairs_text else ()
    )
    fmap = FeatureMapSpec(
        n,
        repetitions=int(items.get("repetitions", 2)),
        data_map=items.get("data_map", "product"),
        pairs=pairs if "pairs" in items else None,
    )
    ansatz = AnsatzSpec(n, int(items["layers"]))
    return VqcModel(
        fmap,
        ansatz,
        kvfile.float_list(items, "theta"),
        shots=int(items.get("shots", 0)),
        decision_threshold=float(items.get("threshold", 0.5)),
        seed=int(items.get("seed", 0)),
        label_rule=items.get("label_rule", "parity"),
    )


def save_model(model: VqcModel, path) -> None:
    kvfile.write(path, model_to_dict(model))


def load_model(path) -> VqcModel:
    return model_from_dict(kvfile.read(path))


def with_shots(model: VqcModel, shots: int) -> VqcModel:
    return replace(model, shots=shots)
