# core/optimizer.py
"""
粒子群变分搜索
每步评估全部粒子 → 保留目标函数最低的 S 个 → 按名次加权的均值/方差 → 重新采样 N-S 个粒子
群的离散度大于 purity_onset 时只按能量排序，收缩之后纯度项才加入目标函数
"""
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.ansatz import AnsatzSpec, ExcitationOp, ParameterNoise, apply_excitation, prepare, prepare_arms
from core.eigen_cache import eigen_cache
from core.pauli_algebra import DimensionMismatchError, HermitianEigensystem, PauliSum
from core.signal_bus import signal_bus
from core.statevector import EigenSubspace, StateVector, subspace_fidelity
from core.witness import NoisyTomography, ObjectiveValue, WitnessReadout, arm_density, control_density, \
    density_objective, witness_readout

CONVERGED_DISPERSION = "Dispersion"
CONVERGED_PLATEAU = "Plateau"
CONVERGED_MAX_STEPS = "MaxSteps"

ADAPTIVE_WEIGHT_FLOOR = 0.05
DEFAULT_PURITY_ONSET = 0.6

# 粒子随机流的阶段分量
STREAM_GROUND = 0
STREAM_EXCITED = 1
STREAM_FOLDED = 2
STREAM_ENERGY_ONLY = 3


class ObjectiveEvaluationError(RuntimeError):
    """某个粒子的目标函数评估失败"""

    def __init__(self, particle_index: int, step: int, cause: Exception):
        self.particle_index = particle_index
        self.step = step
        super().__init__(f"第 {step} 步粒子 {particle_index} 的目标函数评估失败: {cause}")


@dataclass(frozen=True)
class UniformInit:
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise DimensionMismatchError("均匀初始化的上下界长度不一致")
        bad = [i for i, (lo, hi) in enumerate(zip(self.lower, self.upper)) if lo > hi]
        if bad:
            raise ValueError(f"均匀初始化的下界大于上界: 坐标 {bad}")

    @classmethod
    def box(cls, dim: int, lower: float = 0.0, upper: float = 2 * np.pi) -> "UniformInit":
        return cls(tuple([lower] * dim), tuple([upper] * dim))


@dataclass(frozen=True)
class GaussianInit:
    mean: Tuple[float, ...]
    std: Tuple[float, ...]

    def __post_init__(self):
        if len(self.mean) != len(self.std):
            raise DimensionMismatchError("高斯初始化的均值与标准差长度不一致")
        if any(s < 0 for s in self.std):
            raise ValueError("高斯初始化的标准差必须 ≥ 0")


@dataclass(frozen=True)
class SwarmConfig:
    num_particles: int = 8
    survivors: Optional[int] = None
    weight_a: float = 1.25
    weight_b: float = 1.0
    adaptive: bool = False
    greedy: bool = False
    fobj_plateau_threshold: float = 1e-4
    # 连续多少步满足平台判据才停止
    plateau_window: int = 3
    dispersion_threshold: float = 1e-2
    max_steps: int = 100
    init: Optional[Union[UniformInit, GaussianInit]] = None
    # 激发态搜索: 初始高斯群围绕 θ_g 的标准差
    excited_spread: float = 0.2
    # 最大坐标标准差高于此值时纯度权重视为 0；None 表示全程使用 (a, b)
    purity_onset: Optional[float] = DEFAULT_PURITY_ONSET
    seed: int = 0
    stream: int = STREAM_GROUND

    def __post_init__(self):
        if self.num_particles < 1:
            raise ValueError(f"粒子数必须为正: {self.num_particles}")
        if self.survivors is None:
            object.__setattr__(self, "survivors", math.ceil(math.sqrt(self.num_particles)))
        if not 1 <= self.survivors <= self.num_particles:
            raise ValueError(f"幸存粒子数必须位于 [1, N]: S={self.survivors}, N={self.num_particles}")
        if self.weight_a < 0 or self.weight_b < 0 or self.weight_a + self.weight_b == 0:
            raise ValueError(f"目标函数权重非法: a={self.weight_a}, b={self.weight_b}")
        if self.fobj_plateau_threshold <= 0 or self.dispersion_threshold <= 0:
            raise ValueError("收敛阈值必须为正")
        if self.plateau_window < 1 or self.max_steps < 1:
            raise ValueError("plateau_window 与 max_steps 必须为正")
        if self.excited_spread < 0:
            raise ValueError(f"excited_spread 必须 ≥ 0: {self.excited_spread}")
        if self.purity_onset is not None and self.purity_onset <= 0:
            raise ValueError(f"purity_onset 必须为正或 None: {self.purity_onset}")
        if self.stream < 0:
            raise ValueError(f"随机流分量必须 ≥ 0: {self.stream}")


@dataclass(frozen=True)
class SearchNoise:
    tomography: Optional[NoisyTomography] = None
    parameter: Optional[ParameterNoise] = None

    @property
    def is_noiseless(self) -> bool:
        return self.tomography is None and (self.parameter is None or self.parameter.sigma == 0.0)


@dataclass(frozen=True, eq=False)
class SwarmState:
    step: int
    particles: np.ndarray
    values: Optional[np.ndarray]
    posterior_mean: np.ndarray
    posterior_std: np.ndarray
    last_mean_fobj: Optional[float]
    weight_a: float
    weight_b: float
    converged: Optional[str] = None
    plateau_count: int = 0
    best_value: Optional[float] = None
    purity_evaluations: int = 0
    energy_evaluations: int = 0
    # 本步评估是否带纯度项
    purity_active: bool = True


@dataclass
class SearchResult:
    theta_best: np.ndarray
    theta_uncertainty: np.ndarray
    fobj_trace: List[float]
    fidelity_trace: Optional[List[float]]
    steps: int
    convergence_reason: str
    trial_states: int = 0
    purity_evaluations: int = 0
    energy_evaluations: int = 0
    step_records: List[Dict] = field(default_factory=list)
    subspace_fidelities: Optional[List[float]] = None
    final_readout: Optional[WitnessReadout] = None


# (θ, a, b, rng) → 目标函数值
SwarmObjective = Callable[[np.ndarray, float, float, np.random.Generator], Union[ObjectiveValue, float]]


def particle_rng(seed: int, step: int, index: int, stream: int = STREAM_GROUND) -> np.random.Generator:
    """每个粒子独立的随机流，只由 (seed, stream, step, index) 决定"""
    return np.random.default_rng([seed, stream, step, index])


def latin_hypercube(lower: np.ndarray, upper: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """每个坐标把区间等分为 n 格，各格恰好落入一个粒子"""
    dim = len(lower)
    strata = np.stack([rng.permutation(n) for _ in range(dim)], axis=1)
    unit = (strata + rng.random((n, dim))) / n
    return lower + (upper - lower) * unit


def init_swarm(config: SwarmConfig, dim: int, rng: np.random.Generator) -> SwarmState:
    if dim < 1:
        raise ValueError(f"参数维度必须 ≥ 1: {dim}")
    init = config.init or UniformInit.box(dim)
    n = config.num_particles
    if isinstance(init, UniformInit):
        if len(init.lower) != dim:
            raise DimensionMismatchError(f"初始化维度 {len(init.lower)} 与参数维度 {dim} 不符")
        lower, upper = np.array(init.lower), np.array(init.upper)
        particles = latin_hypercube(lower, upper, n, rng)
        mean, std = (lower + upper) / 2, (upper - lower) / np.sqrt(12)
    else:
        if len(init.mean) != dim:
            raise DimensionMismatchError(f"初始化维度 {len(init.mean)} 与参数维度 {dim} 不符")
        mean, std = np.array(init.mean, dtype=float), np.array(init.std, dtype=float)
        particles = mean + std * rng.standard_normal((n, dim))
    return SwarmState(
        step=0,
        particles=particles,
        values=None,
        posterior_mean=mean,
        posterior_std=std,
        last_mean_fobj=None,
        weight_a=config.weight_a,
        weight_b=config.weight_b
    )


def purity_active(state: SwarmState, config: SwarmConfig) -> bool:
    """离散度仍大于 purity_onset 时只用能量排序 (仅当 b > 0)"""
    if config.purity_onset is None or state.weight_b == 0 or state.weight_a == 0:
        return True
    return float(np.max(state.posterior_std)) <= config.purity_onset


def _evaluate_particles(state: SwarmState, evaluate: SwarmObjective, config: SwarmConfig, step: int,
                        weight_a: float) -> List[ObjectiveValue]:
    results = []
    for index, theta in enumerate(state.particles):
        rng = particle_rng(config.seed, step, index, config.stream)
        try:
            value = evaluate(theta.copy(), weight_a, state.weight_b, rng)
        except Exception as e:
            raise ObjectiveEvaluationError(index, step, e) from e
        if not isinstance(value, ObjectiveValue):
            value = ObjectiveValue(value=float(value))
        if not np.isfinite(value.value):
            raise ObjectiveEvaluationError(index, step, ValueError(f"目标函数值非有限: {value.value}"))
        results.append(value)
    return results


def survivor_weights(count: int) -> np.ndarray:
    """按名次线性递减: 第 r 名 (r = 0 为最优) 的权重 ∝ S - r"""
    if count < 1:
        raise ValueError(f"幸存粒子数必须 ≥ 1: {count}")
    raw = np.arange(count, 0, -1, dtype=float)
    return raw / np.sum(raw)


def refit_posterior(survivors: np.ndarray, weights: np.ndarray,
                    previous_mean: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """加权均值；方差取幸存粒子的加权离散度加上均值的漂移量"""
    mean = weights @ survivors
    variance = weights @ (survivors - mean) ** 2 + (mean - previous_mean) ** 2
    return mean, np.sqrt(np.maximum(variance, 0.0))


def adapted_weights(evaluations: List[ObjectiveValue], survivor_indices: Sequence[int],
                    weight_a: float, weight_b: float) -> Tuple[float, float]:
    """a ∝ |<P>_Ξ' - <P>_Ξ|，b ∝ |<E>_Ξ' - <E>_Ξ|，归一化到 a+b=1 并设下限"""

    def shift(component: str) -> Optional[float]:
        population = [getattr(v, component) for v in evaluations if getattr(v, component) is not None]
        survivors = [getattr(evaluations[i], component) for i in survivor_indices
                     if getattr(evaluations[i], component) is not None]
        if not population or not survivors:
            return None
        return abs(float(np.mean(survivors)) - float(np.mean(population)))

    delta_p, delta_e = shift("purity"), shift("energy")
    if delta_p is None or delta_e is None or delta_p + delta_e == 0.0:
        return weight_a, weight_b
    a = delta_p / (delta_p + delta_e)
    a = min(max(a, ADAPTIVE_WEIGHT_FLOOR), 1.0 - ADAPTIVE_WEIGHT_FLOOR)
    return a, 1.0 - a


def swarm_step(state: SwarmState, evaluate: SwarmObjective, config: SwarmConfig,
               rng: np.random.Generator) -> SwarmState:
    """执行一步群搜索并返回新的群状态"""
    if state.converged:
        raise ValueError(f"群搜索已收敛 ({state.converged})，不能继续迭代")
    step = state.step + 1
    active = purity_active(state, config)
    evaluations = _evaluate_particles(state, evaluate, config, step, state.weight_a if active else 0.0)
    values = np.array([v.value for v in evaluations])

    # 目标函数平台判据；纯度项加入的那一步重新计数
    mean_fobj = float(np.mean(values))
    plateau_count = 0
    if (state.last_mean_fobj is not None and active == state.purity_active
            and abs(mean_fobj - state.last_mean_fobj) < config.fobj_plateau_threshold):
        plateau_count = state.plateau_count + 1

    # 稳定排序: 目标值相同时按粒子序号
    order = np.argsort(values, kind="stable")
    survivor_indices = order[:config.survivors]
    survivors = state.particles[survivor_indices]

    weight_a, weight_b = state.weight_a, state.weight_b
    if config.adaptive:
        weight_a, weight_b = adapted_weights(evaluations, survivor_indices, weight_a, weight_b)

    mean, std = refit_posterior(survivors, survivor_weights(config.survivors), state.posterior_mean)
    if config.greedy:
        mean = state.particles[order[0]].copy()

    converged = None
    if float(np.max(std)) < config.dispersion_threshold:
        converged = CONVERGED_DISPERSION
    elif plateau_count >= config.plateau_window:
        converged = CONVERGED_PLATEAU
    elif step >= config.max_steps:
        converged = CONVERGED_MAX_STEPS

    fresh_count = config.num_particles - config.survivors
    fresh = mean + std * rng.standard_normal((fresh_count, len(mean)))
    particles = np.vstack([survivors, fresh]) if fresh_count else survivors.copy()

    return SwarmState(
        step=step,
        particles=particles,
        values=values,
        posterior_mean=mean,
        posterior_std=std,
        last_mean_fobj=mean_fobj,
        weight_a=weight_a,
        weight_b=weight_b,
        converged=converged,
        plateau_count=plateau_count,
        best_value=float(values[order[0]]),
        purity_evaluations=state.purity_evaluations + sum(v.purity is not None for v in evaluations),
        energy_evaluations=state.energy_evaluations + sum(v.energy is not None for v in evaluations),
        purity_active=active
    )


def run_swarm(evaluate: SwarmObjective, config: SwarmConfig, dim: int, rng: np.random.Generator,
              fidelity_of: Optional[Callable[[np.ndarray], float]] = None,
              label: str = "search") -> SearchResult:
    """迭代 swarm_step 直到收敛，记录逐步轨迹"""
    state = init_swarm(config, dim, rng)
    fobj_trace: List[float] = []
    fidelity_trace: Optional[List[float]] = [] if fidelity_of else None
    records: List[Dict] = []

    while not state.converged:
        state = swarm_step(state, evaluate, config, rng)
        fobj_trace.append(state.last_mean_fobj)
        record = {
            "step": state.step,
            "mean_fobj": state.last_mean_fobj,
            "best_fobj": state.best_value,
            "sigma_max": float(np.max(state.posterior_std)),
            "weight_a": state.weight_a if state.purity_active else 0.0,
            "weight_b": state.weight_b,
            "fidelity": None
        }
        if fidelity_of:
            record["fidelity"] = fidelity_of(state.posterior_mean)
            fidelity_trace.append(record["fidelity"])
        records.append(record)
        signal_bus.swarm_step_recorded.emit(dict(record, label=label))

    signal_bus.log_message.emit("INFO", f"{label} 收敛: {state.converged}，共 {state.step} 步", {
        "mean_fobj": round(state.last_mean_fobj, 6),
        "sigma_max": float(np.max(state.posterior_std))
    })
    return SearchResult(
        theta_best=state.posterior_mean.copy(),
        theta_uncertainty=state.posterior_std.copy(),
        fobj_trace=fobj_trace,
        fidelity_trace=fidelity_trace,
        steps=state.step,
        convergence_reason=state.converged,
        trial_states=config.num_particles * state.step,
        purity_evaluations=state.purity_evaluations,
        energy_evaluations=state.energy_evaluations,
        step_records=records
    )


def subspace_fidelities(state: StateVector, subspaces: Sequence[EigenSubspace]) -> List[float]:
    return [subspace_fidelity(state, s) for s in subspaces]


def _finish(result: SearchResult, final_state: StateVector, eigensystem: HermitianEigensystem, t: float,
            subspaces: Optional[Sequence[EigenSubspace]]) -> SearchResult:
    """补充终态的判据读数与各子空间保真度"""
    result.final_readout = witness_readout(control_density(final_state, eigensystem, t), t)
    if subspaces:
        result.subspace_fidelities = subspace_fidelities(final_state, subspaces)
    return result


def _witness_evaluator(spec: AnsatzSpec, eigensystem: HermitianEigensystem, t: float, noise: SearchNoise,
                       record_components: bool,
                       excitation: Optional[ExcitationOp] = None) -> SwarmObjective:
    parameter = noise.parameter
    two_arms = parameter is not None and parameter.independent_arms and parameter.sigma > 0

    def evaluate(theta: np.ndarray, weight_a: float, weight_b: float, rng: np.random.Generator) -> ObjectiveValue:
        if two_arms:
            arms = prepare_arms(spec, theta, parameter, rng, excitation)
            rho = arm_density(arms.reference, arms.evolved, eigensystem, t, arms.phase)
        else:
            trial = prepare(spec, theta, parameter, rng)
            if excitation is not None:
                trial = apply_excitation(trial, excitation)
            rho = control_density(trial, eigensystem, t)
        return density_objective(rho, t, weight_a, weight_b, noise.tomography, rng,
                                 record_components=record_components)

    return evaluate


def run_ground_search(hamiltonian: PauliSum, spec: AnsatzSpec, t: float, config: SwarmConfig,
                      noise: Optional[SearchNoise] = None, rng: Optional[np.random.Generator] = None,
                      oracle=None) -> SearchResult:
    """
    基态搜索: 最小化 F_obj = b·E - a·P
    提供 oracle (SpectrumOracle) 时记录与基态子空间的保真度轨迹
    """
    if hamiltonian.num_qubits != spec.num_qubits:
        raise DimensionMismatchError("哈密顿量与拟设的量子比特数不一致")
    noise = noise or SearchNoise()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    eigensystem = eigen_cache.get_eigensystem(hamiltonian)
    evaluate = _witness_evaluator(spec, eigensystem, t, noise, record_components=config.adaptive)

    fidelity_of = None
    if oracle is not None:
        ground = oracle.subspaces[0]
        fidelity_of = lambda theta: subspace_fidelity(prepare(spec, theta), ground)

    result = run_swarm(evaluate, config, spec.num_parameters, rng, fidelity_of, label="ground")
    return _finish(result, prepare(spec, result.theta_best), eigensystem, t,
                   oracle.subspaces if oracle is not None else None)


def run_excited_search(hamiltonian: PauliSum, spec: AnsatzSpec, theta_g: Sequence[float],
                       excitation: ExcitationOp, t: float, config: SwarmConfig,
                       noise: Optional[SearchNoise] = None, rng: Optional[np.random.Generator] = None,
                       oracle=None, target_index: Optional[int] = None) -> SearchResult:
    """
    激发态搜索: 目标函数固定为 -P，试探态为 Ê_p Â(θ)|Φ>，初始群为围绕 θ_g 的高斯分布
    target_index 为空时保真度轨迹取各子空间中的最大值
    """
    theta_g = np.asarray(theta_g, dtype=float)
    if len(theta_g) != spec.num_parameters:
        raise DimensionMismatchError(f"θ_g 长度 {len(theta_g)} 与生成元个数 {spec.num_parameters} 不符")
    if hamiltonian.num_qubits != spec.num_qubits:
        raise DimensionMismatchError("哈密顿量与拟设的量子比特数不一致")
    noise = noise or SearchNoise()
    excited_config = replace(
        config,
        weight_a=1.0,
        weight_b=0.0,
        adaptive=False,
        init=GaussianInit(tuple(theta_g), tuple([config.excited_spread] * len(theta_g))),
        stream=STREAM_EXCITED
    )
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    eigensystem = eigen_cache.get_eigensystem(hamiltonian)
    evaluate = _witness_evaluator(spec, eigensystem, t, noise, record_components=False, excitation=excitation)

    def trial_state(theta: np.ndarray) -> StateVector:
        return apply_excitation(prepare(spec, theta), excitation)

    fidelity_of = None
    if oracle is not None:
        if target_index is not None:
            target = oracle.subspaces[target_index]
            fidelity_of = lambda theta: subspace_fidelity(trial_state(theta), target)
        else:
            fidelity_of = lambda theta: max(subspace_fidelities(trial_state(theta), oracle.subspaces))

    result = run_swarm(evaluate, excited_config, spec.num_parameters, rng, fidelity_of, label="excited")
    return _finish(result, trial_state(result.theta_best), eigensystem, t,
                   oracle.subspaces if oracle is not None else None)
