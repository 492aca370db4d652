import sys

import numpy as np
import pytest

from oracles import circuit_state


def random_gate_list(rng, n, length):
    """Random (kind, qubits, angle) triples over every gate kind valid for ``n`` qubits."""
    kinds = ["H", "PHASEZ", "RY", "RZ"] + (["ZZPHASE", "CX"] if n >= 2 else [])
    gates = []
    for _ in range(length):
        kind = kinds[rng.integers(len(kinds))]
        if kind in ("ZZPHASE", "CX"):
            qubits = tuple(int(q) for q in rng.choice(n, size=2, replace=False))
        else:
            qubits = (int(rng.integers(n)),)
        angle = None if kind in ("H", "CX") else float(rng.uniform(-2 * np.pi, 2 * np.pi))
        gates.append((kind, qubits, angle))
    return gates


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


__all__ = ["random_gate_list", "circuit_state"]


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
