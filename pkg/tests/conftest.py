# tests/conftest.py
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core.hamiltonians import exciton_hamiltonian, spectrum_oracle  # noqa: E402
from core.pauli_algebra import PauliSum  # noqa: E402
from core.statevector import StateVector  # noqa: E402


@pytest.fixture(scope="session")
def qt_app():
    """批量运行的工作线程需要 QCoreApplication 实例"""
    from PySide6.QtCore import QCoreApplication
    app = QCoreApplication.instance() or QCoreApplication(["waves-tests"])
    yield app


@pytest.fixture
def exciton():
    return exciton_hamiltonian()


@pytest.fixture
def exciton_oracle(exciton):
    return spectrum_oracle(exciton)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def log_messages():
    """收集信号总线上的日志 (level, message, detail)"""
    from PySide6.QtCore import Qt
    from core.signal_bus import signal_bus

    messages = []

    def collect(level, message, detail):
        messages.append((level, message, detail))

    signal_bus.log_message.connect(collect, Qt.DirectConnection)
    yield messages
    signal_bus.log_message.disconnect(collect)


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    amplitudes = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
    return StateVector.from_amplitudes(amplitudes)


def random_pauli_sum(num_qubits: int, num_terms: int, rng: np.random.Generator) -> PauliSum:
    terms = []
    for _ in range(num_terms):
        factors = [(q, "XYZ"[rng.integers(3)]) for q in range(num_qubits) if rng.random() < 0.6]
        terms.append((float(rng.normal()), factors))
    return PauliSum.from_terms(num_qubits, terms)
