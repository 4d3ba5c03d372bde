# core/hamiltonians.py
"""
内置模型哈密顿量、文件加载、随机实例与穷举对角化的谱参照
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np

from core.eigen_cache import eigen_cache
from core.file_tool import file_tool
from core.pauli_algebra import AXES, MAX_DENSE_QUBITS, DenseCapError, HermitianEigensystem, PauliSum, \
    parse_pauli_sum
from core.signal_bus import signal_bus
from core.statevector import DEGENERACY_TOLERANCE, EigenSubspace, StateVector

# 激子模型默认参数 (eV)
EXCITON_ALPHA = 1.46
EXCITON_BETA = 0.037
EXCITON_SHIFT = 1.24


@dataclass(frozen=True, eq=False)
class SpectrumOracle:
    eigensystem: HermitianEigensystem
    subspaces: Tuple[EigenSubspace, ...]
    degeneracy_tolerance: float = DEGENERACY_TOLERANCE

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigensystem.eigenvalues

    @property
    def ground(self) -> EigenSubspace:
        return self.subspaces[0]

    def summary(self) -> Dict[str, Any]:
        eigenvalues = self.eigenvalues
        return {
            "dimension": self.eigensystem.dimension,
            "eigenvalues": [float(v) for v in eigenvalues],
            "subspaces": [{"eigenvalue": s.eigenvalue, "dimension": s.dimension} for s in self.subspaces],
            "spectral_width": float(eigenvalues[-1] - eigenvalues[0]),
            "min_gap": min_gap(self)
        }


def min_gap(oracle: SpectrumOracle) -> float:
    """相邻子空间之间的最小能隙，单一子空间时为 0"""
    values = [s.eigenvalue for s in oracle.subspaces]
    if len(values) < 2:
        return 0.0
    return float(np.min(np.diff(values)))


def exciton_hamiltonian(alpha: float = EXCITON_ALPHA, beta: float = EXCITON_BETA,
                        shift: float = EXCITON_SHIFT) -> PauliSum:
    """(α-ℓ)·I + β·X₀"""
    return PauliSum.from_terms(1, [(alpha - shift, []), (beta, [(0, "X")])])


def load_hamiltonian(path: str) -> PauliSum:
    try:
        text = file_tool.read_text_file(path)
    except OSError as e:
        signal_bus.log_message.emit("ERROR", f"无法读取哈密顿量文件: {path}", {"error": str(e)})
        raise
    try:
        hamiltonian = parse_pauli_sum(text)
    except ValueError as e:
        signal_bus.log_message.emit("ERROR", f"哈密顿量文件格式错误: {path}", {"error": str(e)})
        raise
    signal_bus.log_message.emit("DEBUG", f"已加载哈密顿量: {path}", {
        "qubits": hamiltonian.num_qubits,
        "terms": len(hamiltonian)
    })
    return hamiltonian


def random_hamiltonian(num_qubits: int, num_terms: int, coefficient_scale: float, seed: int) -> PauliSum:
    """num_terms 个互不相同的非单位 Pauli 串，系数均匀分布于 [-scale, scale]"""
    if num_qubits > MAX_DENSE_QUBITS:
        raise DenseCapError(f"{num_qubits} 个量子比特超出稠密矩阵上限 {MAX_DENSE_QUBITS}")
    if num_qubits < 1:
        raise ValueError(f"量子比特数必须为正: {num_qubits}")
    available = 4 ** num_qubits - 1
    if not 0 <= num_terms <= available:
        raise ValueError(f"项数 {num_terms} 超出可用 Pauli 串数 {available}")
    if coefficient_scale < 0:
        raise ValueError(f"系数尺度必须 ≥ 0: {coefficient_scale}")

    rng = np.random.default_rng(seed)
    codes = rng.choice(available, size=num_terms, replace=False) + 1
    coefficients = rng.uniform(-coefficient_scale, coefficient_scale, size=num_terms)
    terms = []
    for code, coefficient in zip(codes, coefficients):
        factors = []
        # 以 4 为基的每一位: 0=I, 1=X, 2=Y, 3=Z
        for q in range(num_qubits):
            digit = (int(code) >> (2 * q)) & 3
            if digit:
                factors.append((q, AXES[digit - 1]))
        terms.append((float(coefficient), factors))
    return PauliSum.from_terms(num_qubits, terms)


def group_subspaces(eigensystem: HermitianEigensystem, tolerance: float = DEGENERACY_TOLERANCE) -> List[EigenSubspace]:
    """按升序贪心分组: 与当前组代表值 (组内最低值) 之差超过容差时开始新组"""
    groups: List[List[int]] = []
    representative = None
    for index, value in enumerate(eigensystem.eigenvalues):
        if representative is None or value - representative > tolerance:
            groups.append([])
            representative = value
        groups[-1].append(index)

    num_qubits = eigensystem.dimension.bit_length() - 1
    subspaces = []
    for group in groups:
        basis = tuple(StateVector(num_qubits, eigensystem.eigenvectors[:, i]) for i in group)
        subspaces.append(EigenSubspace(float(eigensystem.eigenvalues[group[0]]), basis))
    return subspaces


def spectrum_oracle(hamiltonian: PauliSum, tolerance: float = DEGENERACY_TOLERANCE) -> SpectrumOracle:
    if tolerance < 0:
        raise ValueError(f"简并容差必须 ≥ 0: {tolerance}")
    eigensystem = eigen_cache.get_eigensystem(hamiltonian)
    return SpectrumOracle(eigensystem, tuple(group_subspaces(eigensystem, tolerance)), tolerance)
