"""Dense pure-state simulator.

Basis index ``b`` encodes qubit ``k`` as bit ``k`` of ``b`` (qubit 0 is the
least significant bit). States are immutable; every operation returns a new
:class:`Statevector`.

The gate kernels operate on arrays of shape ``(batch, 2**n)`` so that the
classifier can push many states (or the columns of an identity matrix)
through a circuit in one sweep. Single states go through the same kernels
with ``batch == 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ConfigurationError

MAX_QUBITS = 10

Seed = Union[int, Sequence[int]]

_SQRT_HALF = 1.0 / math.sqrt(2.0)
_HADAMARD = np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]], dtype=complex)

GATE_KINDS = ("H", "PHASEZ", "ZZPHASE", "RY", "RZ", "CX")
_ARITY = {"H": 1, "PHASEZ": 1, "ZZPHASE": 2, "RY": 1, "RZ": 1, "CX": 2}
_HAS_ANGLE = {"PHASEZ", "ZZPHASE", "RY", "RZ"}


def _check_num_qubits(num_qubits: int) -> None:
    if not isinstance(num_qubits, (int, np.integer)) or not 1 <= num_qubits <= MAX_QUBITS:
        raise ConfigurationError(
            f"num_qubits must be an integer in [1, {MAX_QUBITS}], got {num_qubits!r}"
        )


@dataclass(frozen=True)
class Statevector:
    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_num_qubits(self.num_qubits)
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 2**self.num_qubits:
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes for {self.num_qubits} qubits, "
                f"got {amps.shape[0]}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "Statevector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = int(round(math.log2(amps.shape[0]))) if amps.shape[0] > 0 else 0
        if 2**n != amps.shape[0]:
            raise ValueError(f"amplitude count {amps.shape[0]} is not a power of two")
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(n, amps)

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class GateOp:
    """One primitive instruction: ``kind`` plus target qubits and an optional angle (radians)."""

    kind: str
    qubits: tuple
    angle: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in _ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qubits = tuple(int(q) for q in self.qubits)
        if len(qubits) != _ARITY[kind]:
            raise ValueError(f"{kind} acts on {_ARITY[kind]} qubit(s), got {qubits}")
        if any(q < 0 for q in qubits):
            raise IndexError(f"negative qubit index in {qubits}")
        if len(qubits) == 2 and qubits[0] == qubits[1]:
            raise IndexError(f"{kind} needs two distinct qubits, got {qubits}")
        if kind in _HAS_ANGLE:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{kind} needs a finite angle, got {self.angle!r}")
            angle = float(self.angle)
        else:
            angle = None
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "angle", angle)

    def inverse(self) -> "GateOp":
        if self.angle is None:
            return self
        return GateOp(self.kind, self.qubits, -self.angle)

    def __str__(self) -> str:
        parts = [self.kind, *map(str, self.qubits)]
        if self.angle is not None:
            parts.append(repr(self.angle))
        return " ".join(parts)


def h(q: int) -> GateOp:
    return GateOp("H", (q,))


def phase_z(q: int, lam: float) -> GateOp:
    """exp(i*lam*Z) = diag(e^{i lam}, e^{-i lam})."""
    return GateOp("PHASEZ", (q,), lam)


def zz_phase(q1: int, q2: int, lam: float) -> GateOp:
    """exp(i*lam*Z_q1 Z_q2), diagonal in the computational basis."""
    return GateOp("ZZPHASE", (q1, q2), lam)


def ry(q: int, theta: float) -> GateOp:
    return GateOp("RY", (q,), theta)


def rz(q: int, theta: float) -> GateOp:
    """diag(e^{-i theta/2}, e^{i theta/2})."""
    return GateOp("RZ", (q,), theta)


def cx(control: int, target: int) -> GateOp:
    return GateOp("CX", (control, target))


def zero_state(num_qubits: int) -> Statevector:
    _check_num_qubits(num_qubits)
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[0] = 1.0
    return Statevector(num_qubits, amps)


def _z_signs(num_qubits: int, q: int) -> np.ndarray:
    """+1 where bit q of the basis index is 0, -1 otherwise."""
    bits = (np.arange(2**num_qubits) >> q) & 1
    return 1 - 2 * bits


def _apply_single(amps: np.ndarray, matrix: np.ndarray, q: int, n: int) -> np.ndarray:
    batch = amps.shape[0]
    view = amps.reshape(batch, 2 ** (n - q - 1), 2, 2**q)
    out = np.einsum("ij,bajc->baic", matrix, view)
    return out.reshape(batch, 2**n)


def apply_gate_batch(amps: np.ndarray, gate: GateOp, num_qubits: int) -> np.ndarray:
    """Apply ``gate`` to every row of ``amps`` (shape ``(batch, 2**num_qubits)``)."""
    n = num_qubits
    for q in gate.qubits:
        if q >= n:
            raise IndexError(f"qubit {q} out of range for a {n}-qubit state ({gate})")
    kind = gate.kind
    if kind == "H":
        return _apply_single(amps, _HADAMARD, gate.qubits[0], n)
    if kind == "RY":
        c, s = math.cos(gate.angle / 2), math.sin(gate.angle / 2)
        return _apply_single(amps, np.array([[c, -s], [s, c]], dtype=complex), gate.qubits[0], n)
    if kind == "RZ":
        phases = np.exp(-0.5j * gate.angle * _z_signs(n, gate.qubits[0]))
        return amps * phases
    if kind == "PHASEZ":
        phases = np.exp(1j * gate.angle * _z_signs(n, gate.qubits[0]))
        return amps * phases
    if kind == "ZZPHASE":
        q1, q2 = gate.qubits
        phases = np.exp(1j * gate.angle * _z_signs(n, q1) * _z_signs(n, q2))
        return amps * phases
    # CX: permutation of basis indices, an involution
    control, target = gate.qubits
    idx = np.arange(2**n)
    perm = np.where((idx >> control) & 1, idx ^ (1 << target), idx)
    return amps[:, perm]


def apply_gate(state: Statevector, gate: GateOp) -> Statevector:
    out = apply_gate_batch(state.amplitudes[None, :], gate, state.num_qubits)
    return Statevector(state.num_qubits, out[0])


def probabilities(state: Statevector) -> np.ndarray:
    amps = state.amplitudes
    return amps.real**2 + amps.imag**2


@dataclass(frozen=True)
class CountsHistogram:
    counts: dict
    shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("histogram counts do not sum to shots")
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("negative count in histogram")

    def frequencies(self) -> dict:
        return {b: c / self.shots for b, c in self.counts.items()}


def sample_indices(probs: np.ndarray, shots: int, seed: Seed) -> np.ndarray:
    """Inverse-CDF sampling of basis indices from a probability vector.

    Draws ``shots`` uniforms from a PCG64 generator seeded with ``seed`` and
    maps each to the first cumulative bin exceeding it.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    u = rng.random(shots)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(probs) - 1)


def sample_counts(state: Statevector, shots: int, seed: Seed) -> CountsHistogram:
    idx = sample_indices(probabilities(state), shots, seed)
    values, counts = np.unique(idx, return_counts=True)
    return CountsHistogram({int(b): int(c) for b, c in zip(values, counts)}, int(shots))
