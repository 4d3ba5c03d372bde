# core/phase_estimation.py
"""
迭代相位估计 (IPEA，含测量坍缩) 与拒绝滤波相位估计 (RFPE，无坍缩贝叶斯推断)
相位约定: U = e^{-iHt} 的本征相位为 e^{2πiφ_j}，φ_j = frac(-λ_j t / 2π)
"""
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from core.pauli_algebra import HermitianEigensystem
from core.signal_bus import signal_bus
from core.statevector import StateVector, eigenbasis_amplitudes, from_eigenbasis

MAX_IPEA_BITS = 64
# mod 2π 约化所用的十进制精度
EXTENDED_DPS = 80

RFPE_DEFAULT_POINTS = 512
RFPE_DEFAULT_HALF_WIDTH = 3.0
RFPE_MAX_TIME = 1e6
# t = RFPE_TIME_SCALE / σ
RFPE_TIME_SCALE = 1.25
# 每次重新拟合后 σ 乘以该系数
RFPE_POSTERIOR_SHRINK = 0.99
RFPE_COLLAPSE_TOTAL = 1e-300

# mpmath 的精度设置是进程级全局状态，批量运行的工作线程需串行进入
_extended_precision_lock = threading.RLock()


class FilterCollapseError(ArithmeticError):
    """后验权重全部被排除"""


def phase_fractions(eigenvalues: np.ndarray, t: float) -> List[mpmath.mpf]:
    """φ_j = frac(-λ_j t / 2π)，扩展精度"""
    with _extended_precision_lock, mpmath.workdps(EXTENDED_DPS):
        two_pi = 2 * mpmath.pi
        return [mpmath.frac(-mpmath.mpf(float(lam)) * mpmath.mpf(float(t)) / two_pi) for lam in eigenvalues]


def controlled_power_phase(eigensystem: HermitianEigensystem, t: float, k: int) -> np.ndarray:
    """e^{-iλ_j t 2^k}，先在扩展精度下把 λ_j t 2^k 约化到 [0, 2π)"""
    if k < 0:
        raise ValueError(f"幂次必须 ≥ 0: {k}")
    with _extended_precision_lock, mpmath.workdps(EXTENDED_DPS):
        two_pi = 2 * mpmath.pi
        scale = mpmath.mpf(2) ** k * mpmath.mpf(float(t))
        angles = [float(mpmath.fmod(mpmath.mpf(float(lam)) * scale, two_pi)) for lam in eigensystem.eigenvalues]
    return np.exp(-1j * np.array(angles))


def reduce_eigenvalue(phase_fraction: float, t: float) -> float:
    """-2πφ/t 在 (-π/t, π/t] 中的代表"""
    value = -2 * np.pi * float(phase_fraction) / t
    if value <= -np.pi / t:
        value += 2 * np.pi / t
    return value


def alias_distance(estimate: float, eigenvalue: float, t: float) -> float:
    """两个能量在模 2π/t 意义下的距离"""
    period = 2 * np.pi / t
    difference = (estimate - eigenvalue) % period
    return float(min(difference, period - difference))


def rounded_bits(phase_fraction, m_bits: int) -> Tuple[int, ...]:
    """φ 的 m 位二进制就近舍入 (模 1)，最高位在前"""
    with _extended_precision_lock, mpmath.workdps(EXTENDED_DPS):
        scaled = int(mpmath.floor(mpmath.mpf(phase_fraction) * 2 ** m_bits + mpmath.mpf(0.5))) % (1 << m_bits)
    return tuple((scaled >> (m_bits - 1 - i)) & 1 for i in range(m_bits))


@dataclass
class IpeaResult:
    bits: Tuple[int, ...]
    phase_fraction: Fraction
    eigenvalue_estimate: float
    per_bit_counts: Optional[List[Tuple[int, int]]] = None
    final_state: Optional[StateVector] = None
    bit_records: List[Dict] = field(default_factory=list)

    @property
    def bit_string(self) -> str:
        return "".join(str(b) for b in self.bits)


def bits_to_fraction(bits: Sequence[int]) -> Fraction:
    return sum((Fraction(b, 2 ** (i + 1)) for i, b in enumerate(bits)), Fraction(0))


def ipea(state: StateVector, eigensystem: HermitianEigensystem, t: float, m_bits: int,
         shots_per_bit: int = 1, rng: Optional[np.random.Generator] = None,
         exact_readout: bool = False, statistics_mode: bool = False) -> IpeaResult:
    """
    从最低位到最高位逐位读出相位
    exact_readout: 每一位取概率较大的结果 (无穷次测量的多数表决)
    statistics_mode: 每次测量都从输入态重新开始，只记录计数，不坍缩
    """
    if not 1 <= m_bits <= MAX_IPEA_BITS:
        raise ValueError(f"比特数必须位于 [1, {MAX_IPEA_BITS}]: {m_bits}")
    if shots_per_bit < 1:
        raise ValueError(f"每位测量次数必须 ≥ 1: {shots_per_bit}")
    if rng is None and not exact_readout:
        raise ValueError("随机读出需要随机数生成器")

    alphas = eigenbasis_amplitudes(state, eigensystem)
    bits = [0] * m_bits
    counts: List[Tuple[int, int]] = [(0, 0)] * m_bits
    records = []

    for k in range(m_bits, 0, -1):
        # 反馈旋转 ω_k = -2π·(0.0 b_{k+1} … b_m)
        feedback = bits_to_fraction(bits[k:]) / 2
        thetas = np.angle(controlled_power_phase(eigensystem, t, k - 1)) - 2 * np.pi * float(feedback)
        weights = np.abs(alphas) ** 2
        p_zero = float(np.clip(np.sum(weights * np.cos(thetas / 2) ** 2) / np.sum(weights), 0.0, 1.0))

        if exact_readout:
            bit = 1 if (1.0 - p_zero) > p_zero else 0
            zeros, ones = (0, 0)
        else:
            zeros = int(rng.binomial(shots_per_bit, p_zero))
            ones = shots_per_bit - zeros
            bit = 1 if ones > zeros else 0
        bits[k - 1] = bit
        counts[k - 1] = (zeros, ones)

        if not statistics_mode:
            # 控制比特测得 bit 后目标寄存器的联合坍缩
            collapse = (1 + (-1) ** bit * np.exp(1j * thetas)) / 2
            collapsed = alphas * collapse
            norm = np.linalg.norm(collapsed)
            if norm > 0:
                alphas = collapsed / norm

        record = {"bit_index": k, "bit": bit, "zeros": zeros, "ones": ones, "p_zero": p_zero}
        records.append(record)
        signal_bus.ipea_bit_recorded.emit(record)

    fraction = bits_to_fraction(bits)
    final_state = state if statistics_mode else from_eigenbasis(alphas, eigensystem)
    result = IpeaResult(
        bits=tuple(bits),
        phase_fraction=fraction,
        eigenvalue_estimate=reduce_eigenvalue(float(fraction), t),
        per_bit_counts=None if exact_readout else counts,
        final_state=final_state,
        bit_records=records
    )
    signal_bus.log_message.emit("INFO", f"IPEA 读出 {m_bits} 位: {result.bit_string}", {
        "eigenvalue_estimate": result.eigenvalue_estimate
    })
    return result


@dataclass(frozen=True, eq=False)
class RfpePrior:
    """
    P 点离散高斯先验，支撑区间 [μ - wσ, μ + wσ]
    网格按比例缩放，使离散分布的均值与标准差正好等于 (μ, σ)
    """
    mean: float
    std: float
    num_points: int = RFPE_DEFAULT_POINTS
    half_width: float = RFPE_DEFAULT_HALF_WIDTH
    support: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.std > 0 or not np.isfinite(self.std):
            raise ValueError(f"先验标准差必须为正: {self.std}")
        if self.num_points < 2:
            raise ValueError(f"网格点数必须 ≥ 2: {self.num_points}")
        if self.half_width <= 0:
            raise ValueError(f"窗口半宽必须为正: {self.half_width}")
        offsets = np.linspace(-1.0, 1.0, self.num_points) * self.half_width
        weights = np.exp(-0.5 * offsets ** 2)
        weights /= np.sum(weights)
        discrete_std = np.sqrt(np.sum(weights * offsets ** 2))
        support = self.mean + offsets * (self.std / discrete_std)
        support.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @property
    def resolution(self) -> float:
        return float(self.support[1] - self.support[0])

    def refit(self, mean: float, std: float) -> "RfpePrior":
        return RfpePrior(mean, std, self.num_points, self.half_width)


@dataclass(frozen=True)
class RfpeExperiment:
    t: float
    phi: float
    # 目标本征态在输入态中的权重 w = |α|²
    weight: float = 1.0

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"演化时间必须为正: {self.t}")
        if not 0.0 < self.weight <= 1.0:
            raise ValueError(f"权重 w 必须位于 (0, 1]: {self.weight}")


@dataclass
class RfpeTrace:
    errors: List[float]
    records: List[Dict]
    final_prior: RfpePrior
    reinitializations: int = 0

    @property
    def final_mean(self) -> float:
        return self.final_prior.mean


def rfpe_likelihood(experiment: RfpeExperiment, hypothesis, datum: int):
    """P(0|λ) = w cos²((λ-φ)t/2) + (1-w)/2，P(1) = 1 - P(0)"""
    if datum not in (0, 1):
        raise ValueError(f"测量结果必须为 0 或 1: {datum}")
    w = experiment.weight
    p_zero = w * np.cos((np.asarray(hypothesis) - experiment.phi) * experiment.t / 2) ** 2 + (1 - w) / 2
    return p_zero if datum == 0 else 1.0 - p_zero


def _refit(prior: RfpePrior, likelihood: np.ndarray, shrink: float = RFPE_POSTERIOR_SHRINK) -> RfpePrior:
    posterior = prior.weights * likelihood
    total = float(np.sum(posterior))
    if total < RFPE_COLLAPSE_TOTAL:
        raise FilterCollapseError(f"后验总权重 {total:.3e} 过小，全部假设被排除")
    posterior = posterior / total
    mean = float(np.sum(posterior * prior.support))
    std = float(np.sqrt(max(np.sum(posterior * (prior.support - mean) ** 2), 0.0)))
    return prior.refit(mean, max(shrink * std, prior.resolution))


def rfpe_update(prior: RfpePrior, experiment: RfpeExperiment, datum: int,
                shrink: float = RFPE_POSTERIOR_SHRINK) -> RfpePrior:
    """
    单个测量结果的贝叶斯更新，后验以同均值的高斯重新离散化
    新的标准差为 shrink·σ_post，下限为旧网格的间距
    """
    if not 0.0 < shrink <= 1.0:
        raise ValueError(f"收缩系数必须位于 (0, 1]: {shrink}")
    return _refit(prior, rfpe_likelihood(experiment, prior.support, datum), shrink)


def choose_experiment(prior: RfpePrior, weight: float, rng: np.random.Generator,
                      phi_strategy: str = "sample", max_time: float = RFPE_MAX_TIME,
                      time_scale: float = RFPE_TIME_SCALE) -> RfpeExperiment:
    """
    t = time_scale/σ (上限 max_time)
    sample: φ 取自当前高斯信念；mean: φ = μ
    """
    if time_scale <= 0:
        raise ValueError(f"时间尺度必须为正: {time_scale}")
    t = min(time_scale / prior.std, max_time)
    if phi_strategy == "sample":
        phi = float(rng.normal(prior.mean, prior.std))
    elif phi_strategy == "mean":
        phi = prior.mean
    else:
        raise ValueError(f"未知的 φ 选取策略: {phi_strategy}")
    return RfpeExperiment(t=t, phi=phi, weight=weight)


def sample_datum(experiment: RfpeExperiment, eigenvalues: Sequence[float], probabilities: Sequence[float],
                 rng: np.random.Generator) -> int:
    """按真实的多本征值混合分布采样 Hadamard 测试结果"""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    p_zero = float(np.sum(np.asarray(probabilities) * np.cos((eigenvalues - experiment.phi) * experiment.t / 2) ** 2))
    return 0 if rng.random() < p_zero else 1


def rfpe_run(eigenvalues: Sequence[float], probabilities: Sequence[float], weight: float, epochs: int,
             prior: RfpePrior, rng: np.random.Generator, phi_strategy: str = "sample",
             max_time: float = RFPE_MAX_TIME, label: str = "rfpe", time_scale: float = RFPE_TIME_SCALE,
             posterior_shrink: float = RFPE_POSTERIOR_SHRINK) -> RfpeTrace:
    """逐轮选取实验、采样结果、更新后验，记录与最近本征值的误差"""
    probabilities = np.asarray(probabilities, dtype=float)
    if len(probabilities) != len(eigenvalues) or not len(eigenvalues):
        raise ValueError("本征值与采样概率长度不一致")
    if abs(float(np.sum(probabilities)) - 1.0) > 1e-9 or np.any(probabilities < 0):
        raise ValueError(f"采样概率之和必须为 1: {probabilities}")
    if epochs < 0:
        raise ValueError(f"轮数必须 ≥ 0: {epochs}")

    errors = []
    records = []
    reinitializations = 0
    for epoch in range(1, epochs + 1):
        experiment = choose_experiment(prior, weight, rng, phi_strategy, max_time, time_scale)
        datum = sample_datum(experiment, eigenvalues, probabilities, rng)
        try:
            prior = rfpe_update(prior, experiment, datum, posterior_shrink)
        except FilterCollapseError:
            reinitializations += 1
            prior = prior.refit(prior.mean, 2 * prior.std)
            signal_bus.log_message.emit("WARNING", "RFPE 后验坍缩，以两倍标准差重新初始化", {
                "epoch": epoch,
                "std": prior.std
            })
        error = float(min(abs(prior.mean - lam) for lam in eigenvalues))
        errors.append(error)
        record = {
            "epoch": epoch,
            "t": experiment.t,
            "phi": experiment.phi,
            "datum": datum,
            "posterior_mean": prior.mean,
            "posterior_std": prior.std,
            "error": error
        }
        records.append(record)
        signal_bus.rfpe_epoch_recorded.emit(dict(record, label=label))

    return RfpeTrace(errors=errors, records=records, final_prior=prior, reinitializations=reinitializations)
