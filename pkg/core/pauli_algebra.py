# core/pauli_algebra.py
"""
Pauli 串求和的表示与运算
解析/序列化、稠密矩阵构造、特征分解与精确酉指数
"""
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from scipy import linalg

# 稠密矩阵上限: 12 个量子比特 (4096 维)
MAX_DENSE_QUBITS = 12
AXES = ("X", "Y", "Z")

_TOKEN_PATTERN = re.compile(r"^([XYZ])(\d+)$")


class PauliFormatError(ValueError):
    """哈密顿量文本格式错误"""

    def __init__(self, message: str, line_number: int = 0):
        self.line_number = line_number
        prefix = f"第 {line_number} 行: " if line_number else ""
        super().__init__(f"{prefix}{message}")


class DenseCapError(ValueError):
    """超出稠密矩阵的量子比特上限"""


class DimensionMismatchError(ValueError):
    """维度不匹配"""


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    factors: Tuple[Tuple[int, str], ...] = ()

    def __post_init__(self):
        indices = [q for q, _ in self.factors]
        if any(a >= b for a, b in zip(indices, indices[1:])):
            raise ValueError(f"量子比特序号必须严格递增: {indices}")
        for q, axis in self.factors:
            if q < 0 or axis not in AXES:
                raise ValueError(f"非法的 Pauli 因子: {axis}{q}")

    @property
    def is_identity(self) -> bool:
        return not self.factors

    def label(self) -> str:
        """因子的文本标签，如 'X0 Z1'；单位项为空串"""
        return " ".join(f"{axis}{q}" for q, axis in self.factors)


@dataclass(frozen=True)
class PauliSum:
    num_qubits: int
    terms: Tuple[PauliTerm, ...]

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError(f"量子比特数必须为正: {self.num_qubits}")
        keys = set()
        for term in self.terms:
            if term.factors and term.factors[-1][0] >= self.num_qubits:
                raise ValueError(f"项 {term.label()} 超出量子比特数 {self.num_qubits}")
            if term.factors in keys:
                raise ValueError(f"重复的 Pauli 串: {term.label() or 'I'}")
            keys.add(term.factors)

    @classmethod
    def from_terms(cls, num_qubits: int, terms: Iterable[Tuple[float, Sequence[Tuple[int, str]]]]) -> "PauliSum":
        """按首次出现顺序合并相同的 Pauli 串，系数相加"""
        merged: Dict[Tuple[Tuple[int, str], ...], float] = {}
        for coefficient, factors in terms:
            key = tuple(sorted((int(q), str(axis)) for q, axis in factors))
            merged[key] = merged.get(key, 0.0) + float(coefficient)
        return cls(num_qubits, tuple(PauliTerm(c, k) for k, c in merged.items()))

    def scaled(self, factor: float) -> "PauliSum":
        return PauliSum(self.num_qubits, tuple(PauliTerm(t.coefficient * factor, t.factors) for t in self.terms))

    def __len__(self):
        return len(self.terms)


@dataclass(frozen=True, eq=False)
class HermitianEigensystem:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _parse_factor_tokens(tokens: Sequence[str], num_qubits: int, line_number: int) -> List[Tuple[int, str]]:
    factors = []
    seen = set()
    for token in tokens:
        match = _TOKEN_PATTERN.match(token)
        if not match:
            raise PauliFormatError(f"无法识别的 Pauli 因子 '{token}'", line_number)
        axis, index = match.group(1), int(match.group(2))
        if index in seen:
            raise PauliFormatError(f"同一项中量子比特 {index} 重复", line_number)
        if index >= num_qubits:
            raise PauliFormatError(f"量子比特序号 {index} 超出声明的数量 {num_qubits}", line_number)
        seen.add(index)
        factors.append((index, axis))
    return factors


def parse_term_line(line: str, num_qubits: int, line_number: int) -> Tuple[float, List[Tuple[int, str]]]:
    """解析一行 '<系数> <轴><序号> ...'"""
    tokens = line.split()
    try:
        coefficient = float(tokens[0])
    except ValueError:
        raise PauliFormatError(f"系数无法解析: '{tokens[0]}'", line_number)
    if not np.isfinite(coefficient):
        raise PauliFormatError(f"系数必须是有限实数: '{tokens[0]}'", line_number)
    return coefficient, _parse_factor_tokens(tokens[1:], num_qubits, line_number)


def parse_qubits_header(line: str, line_number: int) -> int:
    tokens = line.split()
    if len(tokens) != 2 or tokens[0] != "qubits":
        raise PauliFormatError("首个非注释行必须是 'qubits <n>'", line_number)
    try:
        num_qubits = int(tokens[1])
    except ValueError:
        raise PauliFormatError(f"量子比特数无法解析: '{tokens[1]}'", line_number)
    if num_qubits < 1:
        raise PauliFormatError(f"量子比特数必须为正: {num_qubits}", line_number)
    return num_qubits


def content_lines(text: str) -> List[Tuple[int, str]]:
    """返回 (行号, 内容)，跳过空行与 '#' 注释行"""
    result = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            result.append((number, line))
    return result


def parse_pauli_sum(text: str) -> PauliSum:
    """解析哈密顿量文本"""
    lines = content_lines(text)
    if not lines:
        raise PauliFormatError("文本为空，缺少 'qubits <n>' 行")
    header_number, header = lines[0]
    num_qubits = parse_qubits_header(header, header_number)
    terms = [parse_term_line(line, num_qubits, number) for number, line in lines[1:]]
    return PauliSum.from_terms(num_qubits, terms)


def format_pauli_sum(pauli_sum: PauliSum) -> str:
    """序列化为可回读的文本，系数使用 repr 保证精确往返"""
    lines = [f"qubits {pauli_sum.num_qubits}"]
    for term in pauli_sum.terms:
        label = term.label()
        lines.append(f"{term.coefficient!r} {label}".rstrip())
    return "\n".join(lines) + "\n"


def _check_dense_cap(num_qubits: int):
    if num_qubits > MAX_DENSE_QUBITS:
        raise DenseCapError(f"{num_qubits} 个量子比特超出稠密矩阵上限 {MAX_DENSE_QUBITS}")


def pauli_string_action(factors: Sequence[Tuple[int, str]], num_qubits: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pauli 串在计算基上的作用: P|b> = phase[b] |flipped[b]>
    量子比特 0 为振幅下标的最高位
    """
    dimension = 1 << num_qubits
    indices = np.arange(dimension, dtype=np.int64)
    x_mask = 0
    num_y = 0
    parity = np.zeros(dimension, dtype=np.int64)
    for q, axis in factors:
        bit = num_qubits - 1 - q
        if axis in ("X", "Y"):
            x_mask |= 1 << bit
        if axis in ("Y", "Z"):
            parity ^= (indices >> bit) & 1
        if axis == "Y":
            num_y += 1
    phase = (1j ** num_y) * (1 - 2 * parity)
    return indices ^ x_mask, phase


def to_dense(pauli_sum: PauliSum) -> np.ndarray:
    """构造 2^n × 2^n 的稠密厄米矩阵"""
    _check_dense_cap(pauli_sum.num_qubits)
    dimension = 1 << pauli_sum.num_qubits
    matrix = np.zeros((dimension, dimension), dtype=complex)
    columns = np.arange(dimension)
    for term in pauli_sum.terms:
        rows, phase = pauli_string_action(term.factors, pauli_sum.num_qubits)
        # 单个 Pauli 串是置换矩阵，(row, column) 两两不同
        matrix[rows, columns] += term.coefficient * phase
    return matrix


def apply_pauli_sum(pauli_sum: PauliSum, amplitudes: np.ndarray) -> np.ndarray:
    """不构造矩阵直接计算 H|ψ>"""
    result = np.zeros_like(amplitudes, dtype=complex)
    for term in pauli_sum.terms:
        rows, phase = pauli_string_action(term.factors, pauli_sum.num_qubits)
        result[rows] += term.coefficient * phase * amplitudes
    return result


def eigendecompose_matrix(matrix: np.ndarray) -> HermitianEigensystem:
    try:
        eigenvalues, eigenvectors = linalg.eigh(matrix)
    except linalg.LinAlgError as e:
        raise ArithmeticError(f"特征分解未收敛: {e}") from e
    return HermitianEigensystem(eigenvalues, eigenvectors)


def eigendecompose(pauli_sum: PauliSum) -> HermitianEigensystem:
    """特征值升序排列"""
    return eigendecompose_matrix(to_dense(pauli_sum))


def unitary_exponential(eigensystem: HermitianEigensystem, t: float) -> np.ndarray:
    """V diag(e^{-iλt}) V†"""
    v = eigensystem.eigenvectors
    return (v * np.exp(-1j * eigensystem.eigenvalues * t)) @ v.conj().T


def generator_matrix(generators: Sequence[PauliSum], weights: Sequence[float]) -> np.ndarray:
    """Σ_i θ_i G_i (厄米)"""
    if not generators:
        raise ValueError("生成元列表为空")
    num_qubits = generators[0].num_qubits
    if any(g.num_qubits != num_qubits for g in generators):
        raise DimensionMismatchError("生成元的量子比特数不一致")
    if len(weights) != len(generators):
        raise DimensionMismatchError(f"参数个数 {len(weights)} 与生成元个数 {len(generators)} 不符")
    _check_dense_cap(num_qubits)
    dimension = 1 << num_qubits
    matrix = np.zeros((dimension, dimension), dtype=complex)
    columns = np.arange(dimension)
    for generator, weight in zip(generators, weights):
        if weight == 0.0:
            continue
        for term in generator.terms:
            rows, phase = pauli_string_action(term.factors, num_qubits)
            matrix[rows, columns] += weight * term.coefficient * phase
    return matrix


def antihermitian_exponential(generators: Sequence[PauliSum], weights: Sequence[float]) -> np.ndarray:
    """
    exp(Σ_i θ_i A_i)，其中 A_i = i·G_i 为反厄米生成元
    等价于厄米矩阵 Σ θ_i G_i 的特征分解指数 exp(i Σ θ_i G_i)
    """
    hermitian = generator_matrix(generators, weights)
    eigensystem = eigendecompose_matrix(hermitian)
    return unitary_exponential(eigensystem, -1.0)
