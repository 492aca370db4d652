import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_gate_list
from dementia_qml.errors import ConfigurationError
from dementia_qml.statevector import (
    GateOp,
    Statevector,
    apply_gate,
    cx,
    h,
    phase_z,
    probabilities,
    rz,
    sample_counts,
    sample_indices,
    zero_state,
    zz_phase,
)
from oracles import gate_matrix


def _random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return Statevector(n, v / np.linalg.norm(v))


def _apply_all(state, gates):
    for kind, qubits, angle in gates:
        state = apply_gate(state, GateOp(kind, qubits, angle))
    return state


class TestZeroState:
    def test_one_qubit(self):
        np.testing.assert_array_equal(zero_state(1).amplitudes, [1, 0])

    def test_three_qubits(self):
        amps = zero_state(3).amplitudes
        assert amps[0] == 1 and np.count_nonzero(amps) == 1 and amps.size == 8

    @pytest.mark.parametrize("n", [0, 11, -1])
    def test_out_of_range(self, n):
        with pytest.raises(ConfigurationError):
            zero_state(n)

    def test_amplitudes_read_only(self):
        with pytest.raises(ValueError):
            zero_state(2).amplitudes[0] = 0


class TestApplyGate:
    def test_hadamard(self):
        out = apply_gate(zero_state(1), h(0)).amplitudes
        np.testing.assert_allclose(out, [1 / math.sqrt(2)] * 2, atol=1e-15)

    def test_zz_phase_on_00(self):
        phi = 0.73
        out = apply_gate(zero_state(2), zz_phase(0, 1, phi))
        assert out.amplitudes[0] == pytest.approx(np.exp(1j * phi), abs=1e-15)
        np.testing.assert_allclose(probabilities(out), [1, 0, 0, 0], atol=1e-15)

    def test_cx_truth_table(self):
        # |01> in little-endian: qubit 0 set -> index 1
        s = Statevector(2, [0, 1, 0, 0])
        out = apply_gate(s, cx(0, 1))
        np.testing.assert_array_equal(out.amplitudes, [0, 0, 0, 1])

    def test_phase_z_convention(self):
        lam = 0.4
        s = Statevector(1, [1 / math.sqrt(2), 1 / math.sqrt(2)])
        out = apply_gate(s, phase_z(0, lam)).amplitudes
        np.testing.assert_allclose(out, np.array([np.exp(1j * lam), np.exp(-1j * lam)]) / math.sqrt(2))

    def test_rz_matches_dense_oracle(self, rng):
        for _ in range(20):
            s = _random_state(rng, 2)
            q, theta = int(rng.integers(2)), float(rng.uniform(-4, 4))
            expect = gate_matrix("RZ", (q,), theta, 2) @ s.amplitudes
            np.testing.assert_allclose(apply_gate(s, rz(q, theta)).amplitudes, expect, atol=1e-12)

    @pytest.mark.parametrize("kind", ["H", "PHASEZ", "RY", "RZ", "ZZPHASE", "CX"])
    def test_two_qubit_oracle_every_kind(self, kind, rng):
        for _ in range(10):
            s = _random_state(rng, 2)
            qubits = tuple(int(q) for q in rng.permutation(2)) if kind in ("ZZPHASE", "CX") else (int(rng.integers(2)),)
            angle = None if kind in ("H", "CX") else float(rng.uniform(-4, 4))
            expect = gate_matrix(kind, qubits, angle, 2) @ s.amplitudes
            got = apply_gate(s, GateOp(kind, qubits, angle)).amplitudes
            np.testing.assert_allclose(got, expect, atol=1e-12)

    def test_qubit_out_of_range(self):
        with pytest.raises(IndexError):
            apply_gate(zero_state(2), h(2))
        with pytest.raises(IndexError):
            apply_gate(zero_state(2), cx(0, 3))

    def test_repeated_qubit_rejected(self):
        with pytest.raises(IndexError):
            cx(1, 1)
        with pytest.raises(IndexError):
            zz_phase(0, 0, 1.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            GateOp("T", (0,))

    def test_angle_required(self):
        with pytest.raises(ValueError):
            GateOp("RY", (0,))


class TestProbabilities:
    def test_plus_state(self):
        s = Statevector(1, [1 / math.sqrt(2), 1 / math.sqrt(2)])
        np.testing.assert_allclose(probabilities(s), [0.5, 0.5])

    def test_basis_state(self):
        np.testing.assert_array_equal(probabilities(zero_state(1)), [1, 0])

    def test_random_three_qubit(self, rng):
        s = _random_state(rng, 3)
        np.testing.assert_allclose(probabilities(s), np.abs(s.amplitudes) ** 2, atol=1e-15)
        assert probabilities(s).sum() == pytest.approx(1.0, abs=1e-10)


class TestSampling:
    def test_degenerate(self):
        assert sample_counts(zero_state(1), 1024, seed=3).counts == {0: 1024}

    def test_binomial_band(self):
        # 512 +- 4*sqrt(1024*0.25) = 512 +- 64
        s = apply_gate(zero_state(1), h(0))
        for seed in range(20):
            c = sample_counts(s, 1024, seed).counts.get(0, 0)
            assert 448 <= c <= 576

    def test_same_seed_same_histogram(self):
        s = apply_gate(zero_state(2), h(1))
        assert sample_counts(s, 500, 9) == sample_counts(s, 500, 9)

    def test_tuple_seed(self):
        p = np.array([0.25, 0.25, 0.25, 0.25])
        np.testing.assert_array_equal(sample_indices(p, 50, (4, 2)), sample_indices(p, 50, (4, 2)))

    def test_zero_shots(self):
        with pytest.raises(ValueError):
            sample_counts(zero_state(1), 0, 0)

    def test_counts_sum(self, rng):
        s = _random_state(rng, 3)
        hist = sample_counts(s, 777, 1)
        assert sum(hist.counts.values()) == 777 == hist.shots

    def test_multinomial_5_sigma(self, rng):
        s = _random_state(rng, 3)
        p = probabilities(s)
        shots = 100_000
        hist = sample_counts(s, shots, 2024)
        for b in range(8):
            observed = hist.counts.get(b, 0) / shots
            sigma = math.sqrt(p[b] * (1 - p[b]) / shots)
            assert abs(observed - p[b]) <= 5 * sigma + 1e-12


class TestInvariants:
    def test_norm_preserved_long_sequences(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 6))
            s = _apply_all(zero_state(n), random_gate_list(rng, n, 100))
            assert abs(s.norm() - 1) < 1e-9

    @given(
        kind=st.sampled_from(["H", "PHASEZ", "RY", "RZ", "ZZPHASE", "CX"]),
        angle=st.floats(-10, 10, allow_nan=False),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_gate_then_inverse(self, kind, angle, seed):
        rng = np.random.default_rng(seed)
        s = _random_state(rng, 3)
        qubits = (0, 2) if kind in ("ZZPHASE", "CX") else (1,)
        gate = GateOp(kind, qubits, None if kind in ("H", "CX") else angle)
        back = apply_gate(apply_gate(s, gate), gate.inverse())
        np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-10)
