"""Feature-map and ansatz circuit construction.

A feature-map repetition is ``H`` on every qubit followed by the diagonal
phase block ``exp(i * sum_S phi_S(x) * prod_{k in S} Z_k)`` over singletons
and the configured qubit pairs. Two repetitions give the classic
``U_phi H U_phi H`` encoding.

The ansatz is an initial RY/RZ rotation layer followed by ``layers`` blocks
of (linear CX chain, RY/RZ rotation layer).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .statevector import (
    GateOp,
    Statevector,
    _check_num_qubits,
    apply_gate_batch,
    cx,
    h,
    phase_z,
    ry,
    rz,
    zero_state,
    zz_phase,
)

DATA_MAPS = ("product", "havlicek")


@dataclass(frozen=True)
class FeatureMapSpec:
    num_qubits: int
    repetitions: int = 2
    data_map: str = "product"
    pairs: tuple | None = None

    def __post_init__(self):
        _check_num_qubits(self.num_qubits)
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.data_map not in DATA_MAPS:
            raise ValueError(f"data_map must be one of {DATA_MAPS}, got {self.data_map!r}")
        if self.pairs is None:
            pairs = tuple(itertools.combinations(range(self.num_qubits), 2))
        else:
            pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        for i, j in pairs:
            if i == j or not (0 <= i < self.num_qubits and 0 <= j < self.num_qubits):
                raise ValueError(f"invalid entangling pair ({i}, {j}) for {self.num_qubits} qubits")
        object.__setattr__(self, "pairs", pairs)

    def single_phase(self, x: np.ndarray, i: int) -> float:
        return float(x[i])

    def pair_phase(self, x: np.ndarray, i: int, j: int) -> float:
        if self.data_map == "product":
            return float(x[i] * x[j])
        return float((math.pi - x[i]) * (math.pi - x[j]))


@dataclass(frozen=True)
class AnsatzSpec:
    num_qubits: int
    layers: int = 2

    def __post_init__(self):
        _check_num_qubits(self.num_qubits)
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")

    @property
    def parameter_count(self) -> int:
        return 2 * self.num_qubits * (self.layers + 1)


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple = field(default_factory=tuple)

    def __post_init__(self):
        _check_num_qubits(self.num_qubits)
        gates = tuple(self.gates)
        for g in gates:
            if any(q >= self.num_qubits for q in g.qubits):
                raise IndexError(f"gate {g} out of range for {self.num_qubits} qubits")
        object.__setattr__(self, "gates", gates)

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.num_qubits != self.num_qubits:
            raise ValueError("cannot compose circuits of different widths")
        return Circuit(self.num_qubits, self.gates + other.gates)

    def to_text(self) -> str:
        """One gate per line: ``KIND q0 [q1] [angle]``."""
        return "".join(f"{g}\n" for g in self.gates)

    @classmethod
    def from_text(cls, num_qubits: int, text: str) -> "Circuit":
        gates = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            kind, *rest = line.split()
            kind = kind.upper()
            arity = 2 if kind in ("ZZPHASE", "CX") else 1
            try:
                qubits = tuple(int(t) for t in rest[:arity])
                angle = float(rest[arity]) if len(rest) > arity else None
            except (ValueError, IndexError) as exc:
                raise ValueError(f"line {lineno}: cannot parse {line!r}") from exc
            gates.append(GateOp(kind, qubits, angle))
        return cls(num_qubits, tuple(gates))


def _phase_gates(x: np.ndarray, spec: FeatureMapSpec) -> list:
    gates = [phase_z(i, spec.single_phase(x, i)) for i in range(spec.num_qubits)]
    gates += [zz_phase(i, j, spec.pair_phase(x, i, j)) for i, j in spec.pairs]
    return gates


def _check_features(x, num_qubits: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != num_qubits:
        raise ValueError(f"expected {num_qubits} features, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature vector contains non-finite values")
    return x


def build_phase_block(x, spec: FeatureMapSpec) -> Circuit:
    """The diagonal block U_phi(x) alone (PhaseZ + ZZPhase gates)."""
    x = _check_features(x, spec.num_qubits)
    return Circuit(spec.num_qubits, tuple(_phase_gates(x, spec)))


def build_feature_map(x, spec: FeatureMapSpec) -> Circuit:
    x = _check_features(x, spec.num_qubits)
    block = [h(q) for q in range(spec.num_qubits)] + _phase_gates(x, spec)
    return Circuit(spec.num_qubits, tuple(block * spec.repetitions))


def build_ansatz(theta, spec: AnsatzSpec) -> Circuit:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != spec.parameter_count:
        raise ValueError(
            f"ansatz with {spec.num_qubits} qubits and {spec.layers} layers needs "
            f"{spec.parameter_count} parameters, got {theta.shape[0]}"
        )
    n = spec.num_qubits
    params = iter(theta)
    gates = []

    def rotation_layer():
        for q in range(n):
            gates.append(ry(q, next(params)))
            gates.append(rz(q, next(params)))

    rotation_layer()
    for _ in range(spec.layers):
        gates.extend(cx(q, q + 1) for q in range(n - 1))
        rotation_layer()
    return Circuit(n, tuple(gates))


def zz_phase_decomposed(q1: int, q2: int, lam: float) -> list:
    """CX . PhaseZ(target) . CX, equal to ZZPhase(q1, q2, lam)."""
    return [cx(q1, q2), phase_z(q2, lam), cx(q1, q2)]


def run_batch(circuit: Circuit, amps: np.ndarray) -> np.ndarray:
    amps = np.asarray(amps, dtype=complex)
    if amps.ndim != 2 or amps.shape[1] != 2**circuit.num_qubits:
        raise ValueError(
            f"batch shape {amps.shape} does not match a {circuit.num_qubits}-qubit circuit"
        )
    for gate in circuit.gates:
        amps = apply_gate_batch(amps, gate, circuit.num_qubits)
    return amps


def run(circuit: Circuit, initial: Statevector | None = None) -> Statevector:
    if initial is None:
        initial = zero_state(circuit.num_qubits)
    if initial.num_qubits != circuit.num_qubits:
        raise ValueError(
            f"circuit has {circuit.num_qubits} qubits but state has {initial.num_qubits}"
        )
    out = run_batch(circuit, initial.amplitudes[None, :])
    return Statevector(circuit.num_qubits, out[0])


def unitary(circuit: Circuit) -> np.ndarray:
    """Dense matrix of the circuit, built by evolving every basis state."""
    dim = 2**circuit.num_qubits
    columns = run_batch(circuit, np.eye(dim, dtype=complex))
    return columns.T


def encode_batch(X: Iterable[Sequence[float]], spec: FeatureMapSpec) -> np.ndarray:
    """Feature-map states |Psi(x)> for every row of ``X``, shape ``(m, 2**n)``."""
    rows = [run(build_feature_map(x, spec)).amplitudes for x in X]
    if not rows:
        return np.zeros((0, 2**spec.num_qubits), dtype=complex)
    return np.vstack(rows)
