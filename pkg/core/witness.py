# core/witness.py
"""
Hadamard 测试中控制比特的约化态与本征态判据
纯度、熵、能量估计量、目标函数及其层析噪声估计
"""
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from core.pauli_algebra import HermitianEigensystem
from core.statevector import NotNormalizedError, StateVector, eigenbasis_amplitudes

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

# 非对角元模长低于该值时相位无定义
PHASE_EPSILON = 1e-12
DEFAULT_SHOTS_PER_BASIS = 1500
DEFAULT_PEAK_COUNTS = 200


class PhaseUndefinedError(ValueError):
    """能量估计量的相位无定义"""


@dataclass(frozen=True, eq=False)
class ControlQubitState:
    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.shape != (2, 2):
            raise ValueError(f"控制比特密度矩阵必须是 2×2: {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise ValueError("密度矩阵不是厄米矩阵")
        if abs(np.trace(rho).real - 1.0) > 1e-10:
            raise ValueError(f"密度矩阵迹不为 1: {np.trace(rho).real}")
        if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
            raise ValueError("密度矩阵不是半正定的")
        rho.flags.writeable = False
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float) -> "ControlQubitState":
        return cls((IDENTITY + x * PAULI_X + y * PAULI_Y + z * PAULI_Z) / 2)

    @property
    def bloch_vector(self) -> np.ndarray:
        """(<X>, <Y>, <Z>)"""
        rho = self.rho
        return np.array([2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real])


@dataclass(frozen=True)
class NoisyTomography:
    """控制比特单比特层析的计数噪声模型"""
    shots_per_basis: int = DEFAULT_SHOTS_PER_BASIS
    model: str = "binomial"  # binomial | poisson
    peak_counts: int = DEFAULT_PEAK_COUNTS

    def __post_init__(self):
        if self.shots_per_basis < 1:
            raise ValueError(f"每个基的测量次数必须 ≥ 1: {self.shots_per_basis}")
        if self.model not in ("binomial", "poisson"):
            raise ValueError(f"未知的层析噪声模型: {self.model}")
        if self.peak_counts < 1:
            raise ValueError(f"峰值计数必须 ≥ 1: {self.peak_counts}")


@dataclass(frozen=True)
class WitnessReadout:
    energy: Optional[float]
    purity: float
    von_neumann_entropy: float
    linear_entropy: float
    shots_used: Union[int, str] = "exact"


@dataclass(frozen=True)
class ObjectiveValue:
    """单个粒子的目标函数值及其组成部分"""
    value: float
    purity: Optional[float] = None
    energy: Optional[float] = None


def control_density(state: StateVector, eigensystem: HermitianEigensystem, t: float) -> ControlQubitState:
    """ρ_C = Tr_T(ρ)，非对角元 (1/2)Σ_j|α_j|² e^{iλ_j t}"""
    if not np.isfinite(t):
        raise ValueError(f"演化时间必须有限: {t}")
    weights = np.abs(eigenbasis_amplitudes(state, eigensystem)) ** 2
    off_diagonal = 0.5 * np.sum(weights * np.exp(1j * eigensystem.eigenvalues * t))
    rho = np.array([[0.5, off_diagonal], [np.conj(off_diagonal), 0.5]], dtype=complex)
    return ControlQubitState(rho)


def arm_density(reference: StateVector, evolved: StateVector, eigensystem: HermitianEigensystem, t: float,
                phase: float = 0.0) -> ControlQubitState:
    """
    两条路径上的目标态各自制备时的控制比特约化态
    2ρ_10 = e^{iφ}<ψ_a|e^{-iHt}|ψ_b>，ψ_a 为参照臂，ψ_b 为演化臂，φ 为两臂间的额外相位
    """
    if not np.isfinite(t):
        raise ValueError(f"演化时间必须有限: {t}")
    a = eigenbasis_amplitudes(reference, eigensystem)
    b = eigenbasis_amplitudes(evolved, eigensystem)
    expectation = np.sum(np.conj(a) * np.exp(-1j * eigensystem.eigenvalues * t) * b) * np.exp(1j * phase)
    rho = np.array([[0.5, np.conj(expectation) / 2], [expectation / 2, 0.5]], dtype=complex)
    return ControlQubitState(rho)


def purity(rho: ControlQubitState) -> float:
    """Tr(ρ²)"""
    return float(np.real(np.trace(rho.rho @ rho.rho)))


def von_neumann_entropy(rho: ControlQubitState) -> float:
    """S = -Σ p ln p，取自然对数"""
    probabilities = np.clip(np.linalg.eigvalsh(rho.rho), 0.0, 1.0)
    probabilities = probabilities[probabilities > 1e-15]
    return float(-np.sum(probabilities * np.log(probabilities)))


def linear_entropy(rho: ControlQubitState) -> float:
    return 1.0 - purity(rho)


def energy_estimator(rho: ControlQubitState, t: float) -> float:
    """E = -Arg[<Ψ|e^{-iHt}|Ψ>]/t，取值于 (-π/t, π/t]"""
    if t == 0:
        raise PhaseUndefinedError("演化时间为 0，能量估计量无定义")
    # <e^{-iHt}> = 2ρ_10 = conj(2ρ_01)
    expectation = 2 * rho.rho[1, 0]
    if abs(expectation) <= 2 * PHASE_EPSILON:
        raise PhaseUndefinedError(f"非对角元消失 (|<U>|={abs(expectation):.3e})，相位无定义")
    # np.angle ∈ (-π, π]，取负后 -π 端点归到 +π
    phase = -float(np.angle(expectation))
    if phase <= -np.pi:
        phase = np.pi
    return phase / t


def witness_readout(rho: ControlQubitState, t: float, shots_used: Union[int, str] = "exact") -> WitnessReadout:
    """汇总一次层析得到的全部判据"""
    try:
        energy = energy_estimator(rho, t)
    except PhaseUndefinedError:
        energy = None
    p = purity(rho)
    return WitnessReadout(
        energy=energy,
        purity=p,
        von_neumann_entropy=von_neumann_entropy(rho),
        linear_entropy=1.0 - p,
        shots_used=shots_used
    )


def _estimate_expectation(expectation: float, tomography: NoisyTomography, rng: np.random.Generator) -> float:
    """由计数估计 <P>"""
    p_plus = float(np.clip((1.0 + expectation) / 2.0, 0.0, 1.0))
    if tomography.model == "binomial":
        n = tomography.shots_per_basis
        plus = rng.binomial(n, p_plus)
        return 2.0 * plus / n - 1.0
    # 泊松符合计数: 两个输出端口各自独立计数
    plus = rng.poisson(p_plus * tomography.peak_counts)
    minus = rng.poisson((1.0 - p_plus) * tomography.peak_counts)
    total = plus + minus
    if total == 0:
        return 0.0
    return (plus - minus) / total


def tomography_sample(rho: ControlQubitState, shots_per_basis: int, rng: np.random.Generator,
                      model: str = "binomial", peak_counts: int = DEFAULT_PEAK_COUNTS) -> ControlQubitState:
    """
    单比特层析: 分别估计 <X>, <Y>, <Z> 后重建 ρ̂ = (I + Σ<P>P)/2
    重建结果非物理时，将 Bloch 矢量径向缩放到单位长度
    """
    tomography = NoisyTomography(shots_per_basis, model, peak_counts)
    estimate = np.array([_estimate_expectation(e, tomography, rng) for e in rho.bloch_vector])
    length = np.linalg.norm(estimate)
    if length > 1.0:
        estimate = estimate / length
    return ControlQubitState.from_bloch(*estimate)


def time_averaged_purity(alphas: np.ndarray) -> float:
    """无穷长时间平均纯度 (1 + Σ|α_j|⁴)/2"""
    weights = np.abs(np.asarray(alphas)) ** 2
    total = float(np.sum(weights))
    if abs(total - 1.0) > 1e-9:
        raise NotNormalizedError(f"系数未归一化: Σ|α|² = {total}")
    return 0.5 * (1.0 + float(np.sum(weights ** 2)))


def choose_evolution_time(eigensystem: HermitianEigensystem, strategy: str = "spectral_bound",
                          spectral_width: Optional[float] = None) -> float:
    """
    按 Λ t ≤ π/2 选取演化时间
    spectral_bound: Λ 取谱宽 λ_max - λ_min
    caller_bound: Λ 由调用方提供 (如平均场估计)
    """
    if strategy == "spectral_bound":
        width = float(eigensystem.eigenvalues[-1] - eigensystem.eigenvalues[0])
    elif strategy == "caller_bound":
        if spectral_width is None:
            raise ValueError("caller_bound 策略需要提供 spectral_width")
        width = float(spectral_width)
    else:
        raise ValueError(f"未知的演化时间策略: {strategy}")
    if width <= 0:
        raise ValueError("谱完全简并，无法选取演化时间")
    return (np.pi / 2) / width


def objective(state: StateVector, eigensystem: HermitianEigensystem, t: float,
              weight_a: float, weight_b: float,
              tomography: Optional[NoisyTomography] = None,
              rng: Optional[np.random.Generator] = None,
              record_components: bool = False) -> ObjectiveValue:
    """
    F_obj = b·E - a·P
    提供 tomography 时 E 与 P 来自同一次层析估计
    record_components 为 True 时即使权重为 0 也给出 P 与 E (自适应权重需要)
    """
    return density_objective(control_density(state, eigensystem, t), t, weight_a, weight_b, tomography, rng,
                             record_components)


def density_objective(rho: ControlQubitState, t: float, weight_a: float, weight_b: float,
                      tomography: Optional[NoisyTomography] = None,
                      rng: Optional[np.random.Generator] = None,
                      record_components: bool = False) -> ObjectiveValue:
    """
    由控制比特约化态计算 F_obj
    层析估计的相位无定义时 (X 与 Y 的估计同时为 0)，能量项按区间上端 π/t 计入，该粒子自然排在后面
    """
    if weight_a < 0 or weight_b < 0 or (weight_a == 0 and weight_b == 0):
        raise ValueError(f"目标函数权重非法: a={weight_a}, b={weight_b}")
    if weight_b > 0 and t == 0:
        raise PhaseUndefinedError("演化时间为 0，能量项无定义")
    if tomography is not None:
        if rng is None:
            raise ValueError("噪声层析需要随机数生成器")
        rho = tomography_sample(rho, tomography.shots_per_basis, rng, tomography.model, tomography.peak_counts)

    value = 0.0
    p = None
    energy = None
    if weight_a > 0 or record_components:
        p = purity(rho)
        value -= weight_a * p
    if weight_b > 0 or record_components:
        try:
            energy = energy_estimator(rho, t)
        except PhaseUndefinedError:
            energy = None
        if weight_b > 0:
            value += weight_b * (energy if energy is not None else np.pi / t)
    return ObjectiveValue(value=value, purity=p, energy=energy)
