# core/baselines.py
"""
对照方法: 折叠谱变分搜索与只看能量的 VQE 搜索，均复用粒子群优化器
"""
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from core.ansatz import AnsatzSpec, ExcitationOp, apply_excitation, prepare
from core.eigen_cache import eigen_cache
from core.optimizer import STREAM_ENERGY_ONLY, STREAM_FOLDED, GaussianInit, SearchNoise, SearchResult, SwarmConfig, \
    run_ground_search, run_swarm, subspace_fidelities
from core.pauli_algebra import DimensionMismatchError, HermitianEigensystem, PauliSum, apply_pauli_sum
from core.statevector import StateVector, eigenbasis_amplitudes, subspace_fidelity
from core.witness import ObjectiveValue


@dataclass(frozen=True)
class FoldedConfig:
    epsilon_shift: float
    swarm: SwarmConfig = field(default_factory=SwarmConfig)

    def __post_init__(self):
        if not np.isfinite(self.epsilon_shift):
            raise ValueError(f"能量平移 ε 必须有限: {self.epsilon_shift}")


def folded_objective(state: StateVector, hamiltonian: Union[np.ndarray, PauliSum], epsilon_shift: float) -> float:
    """<Ψ|(H-ε)²|Ψ> = ||(H-ε)|Ψ>||²，不对哈密顿量求平方"""
    amplitudes = state.amplitudes
    if isinstance(hamiltonian, PauliSum):
        if hamiltonian.num_qubits != state.num_qubits:
            raise DimensionMismatchError("哈密顿量与态矢量的量子比特数不一致")
        applied = apply_pauli_sum(hamiltonian, amplitudes)
    else:
        matrix = np.asarray(hamiltonian)
        if matrix.shape != (state.dimension, state.dimension):
            raise DimensionMismatchError(f"矩阵形状 {matrix.shape} 与态矢量维度 {state.dimension} 不符")
        applied = matrix @ amplitudes
    shifted = applied - epsilon_shift * amplitudes
    return float(np.vdot(shifted, shifted).real)


def sampled_folded_objective(state: StateVector, eigensystem: HermitianEigensystem, epsilon_shift: float,
                             shots: int, rng: np.random.Generator) -> float:
    """
    有限次测量下的 <(H-ε)²> 估计: 每次测量坍缩到某个本征态，
    计数 k_j ~ Multinomial(shots, |α_j|²)，估计值 Σ_j k_j (λ_j-ε)² / shots
    """
    if shots < 1:
        raise ValueError(f"测量次数必须 ≥ 1: {shots}")
    weights = np.abs(eigenbasis_amplitudes(state, eigensystem)) ** 2
    counts = rng.multinomial(shots, weights / np.sum(weights))
    return float(counts @ (eigensystem.eigenvalues - epsilon_shift) ** 2) / shots


def run_folded_search(hamiltonian: PauliSum, spec: AnsatzSpec, theta_init: Sequence[float],
                      excitation: Optional[ExcitationOp], config: FoldedConfig,
                      noise: Optional[SearchNoise] = None, rng: Optional[np.random.Generator] = None,
                      oracle=None, target_index: Optional[int] = None) -> SearchResult:
    """以折叠谱为目标函数的群搜索，初始群围绕 θ_init，试探态与激发态搜索相同"""
    theta_init = np.asarray(theta_init, dtype=float)
    if len(theta_init) != spec.num_parameters:
        raise DimensionMismatchError(f"θ_init 长度 {len(theta_init)} 与生成元个数 {spec.num_parameters} 不符")
    if hamiltonian.num_qubits != spec.num_qubits:
        raise DimensionMismatchError("哈密顿量与拟设的量子比特数不一致")
    noise = noise or SearchNoise()
    swarm = replace(
        config.swarm,
        adaptive=False,
        init=GaussianInit(tuple(theta_init), tuple([config.swarm.excited_spread] * len(theta_init))),
        purity_onset=None,
        stream=STREAM_FOLDED
    )
    rng = rng if rng is not None else np.random.default_rng(swarm.seed)
    eigensystem = eigen_cache.get_eigensystem(hamiltonian)

    def trial_state(theta: np.ndarray, rng_: Optional[np.random.Generator] = None) -> StateVector:
        trial = prepare(spec, theta, noise.parameter if rng_ is not None else None, rng_)
        return apply_excitation(trial, excitation) if excitation is not None else trial

    def evaluate(theta: np.ndarray, weight_a: float, weight_b: float, rng_: np.random.Generator) -> ObjectiveValue:
        trial = trial_state(theta, rng_)
        if noise.tomography is not None:
            value = sampled_folded_objective(trial, eigensystem, config.epsilon_shift,
                                             noise.tomography.shots_per_basis, rng_)
        else:
            value = folded_objective(trial, hamiltonian, config.epsilon_shift)
        return ObjectiveValue(value=value)

    fidelity_of = None
    if oracle is not None:
        if target_index is not None:
            target = oracle.subspaces[target_index]
            fidelity_of = lambda theta: subspace_fidelity(trial_state(theta), target)
        else:
            fidelity_of = lambda theta: max(subspace_fidelities(trial_state(theta), oracle.subspaces))

    result = run_swarm(evaluate, swarm, spec.num_parameters, rng, fidelity_of, label="folded")
    if oracle is not None:
        result.subspace_fidelities = subspace_fidelities(trial_state(result.theta_best), oracle.subspaces)
    return result


def run_energy_only_search(hamiltonian: PauliSum, spec: AnsatzSpec, t: float, config: SwarmConfig,
                           noise: Optional[SearchNoise] = None, rng: Optional[np.random.Generator] = None,
                           oracle=None) -> SearchResult:
    """F'_obj = E，即 (a=0, b=1) 的基态搜索，不消耗纯度评估"""
    energy_only = replace(config, weight_a=0.0, weight_b=1.0, adaptive=False, stream=STREAM_ENERGY_ONLY)
    return run_ground_search(hamiltonian, spec, t, energy_only, noise, rng, oracle)
