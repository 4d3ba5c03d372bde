# core/statevector.py
"""
纯态表示: 演化、保真度与简并子空间保真度
"""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from core.pauli_algebra import DimensionMismatchError, HermitianEigensystem

NORM_TOLERANCE = 1e-10
# 能量差小于该值的本征态视为简并
DEGENERACY_TOLERANCE = 1e-9


class NotNormalizedError(ValueError):
    """态矢量未归一化"""


@dataclass(frozen=True, eq=False)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex)
        if amplitudes.shape != (1 << self.num_qubits,):
            raise DimensionMismatchError(f"振幅长度 {amplitudes.shape} 与 {self.num_qubits} 个量子比特不符")
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise NotNormalizedError(f"态矢量模方为 {norm}")
        amplitudes.flags.writeable = False
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def from_amplitudes(cls, amplitudes: np.ndarray, normalize: bool = True) -> "StateVector":
        amplitudes = np.asarray(amplitudes, dtype=complex)
        dimension = len(amplitudes)
        num_qubits = dimension.bit_length() - 1
        if dimension < 2 or (1 << num_qubits) != dimension:
            raise DimensionMismatchError(f"振幅长度 {dimension} 不是 2 的幂")
        if normalize:
            norm = np.linalg.norm(amplitudes)
            if norm == 0.0:
                raise NotNormalizedError("零向量无法归一化")
            amplitudes = amplitudes / norm
        return cls(num_qubits, amplitudes)

    @property
    def dimension(self) -> int:
        return len(self.amplitudes)


@dataclass(frozen=True, eq=False)
class EigenSubspace:
    eigenvalue: float
    basis: Tuple[StateVector, ...]

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def basis_matrix(self) -> np.ndarray:
        """基矢量按列排列"""
        return np.column_stack([v.amplitudes for v in self.basis])

    def projector(self) -> np.ndarray:
        basis = self.basis_matrix()
        return basis @ basis.conj().T


def _check_same_dimension(a: np.ndarray, b_dimension: int):
    if len(a) != b_dimension:
        raise DimensionMismatchError(f"维度不匹配: {len(a)} != {b_dimension}")


def basis_state(num_qubits: int, bits: str) -> StateVector:
    """计算基态 |bits>，量子比特 0 为最高位"""
    if len(bits) != num_qubits or any(c not in "01" for c in bits):
        raise DimensionMismatchError(f"比特串 '{bits}' 与 {num_qubits} 个量子比特不符")
    amplitudes = np.zeros(1 << num_qubits, dtype=complex)
    amplitudes[int(bits, 2)] = 1.0
    return StateVector(num_qubits, amplitudes)


def evolve(state: StateVector, eigensystem: HermitianEigensystem, t: float) -> StateVector:
    """e^{-iHt}|ψ>，在本征基中逐相位相乘"""
    _check_same_dimension(state.amplitudes, eigensystem.dimension)
    v = eigensystem.eigenvectors
    alphas = v.conj().T @ state.amplitudes
    evolved = v @ (np.exp(-1j * eigensystem.eigenvalues * t) * alphas)
    return StateVector.from_amplitudes(evolved)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|²"""
    _check_same_dimension(a.amplitudes, b.dimension)
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def subspace_fidelity(state: StateVector, subspace: EigenSubspace) -> float:
    """Σ_k |<Ψ_τk|Ψ>|²"""
    if not subspace.basis:
        raise ValueError("子空间基为空")
    _check_same_dimension(state.amplitudes, subspace.basis[0].dimension)
    overlaps = subspace.basis_matrix().conj().T @ state.amplitudes
    return float(min(1.0, np.sum(np.abs(overlaps) ** 2)))


def eigenbasis_amplitudes(state: StateVector, eigensystem: HermitianEigensystem) -> np.ndarray:
    """α_j = <λ_j|ψ>"""
    _check_same_dimension(state.amplitudes, eigensystem.dimension)
    return eigensystem.eigenvectors.conj().T @ state.amplitudes


def from_eigenbasis(alphas: Sequence[complex], eigensystem: HermitianEigensystem) -> StateVector:
    """由本征基系数重建态矢量"""
    alphas = np.asarray(alphas, dtype=complex)
    _check_same_dimension(alphas, eigensystem.dimension)
    return StateVector.from_amplitudes(eigensystem.eigenvectors @ alphas)
