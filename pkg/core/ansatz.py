# core/ansatz.py
"""
参数化态制备 Â(θ)|Φ>、激发算符 Ê_p、参数噪声以及拟设截断
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.eigen_cache import eigen_cache
from core.pauli_algebra import (DimensionMismatchError, PauliFormatError, PauliSum, content_lines,
                                eigendecompose_matrix, generator_matrix, parse_qubits_header,
                                parse_term_line)
from core.signal_bus import signal_bus
from core.statevector import EigenSubspace, StateVector, basis_state, evolve, subspace_fidelity


@dataclass(frozen=True)
class AnsatzSpec:
    num_qubits: int
    generators: Tuple[PauliSum, ...]
    reference_bits: str
    name: str = "ansatz"
    # True: 按列表顺序依次作用 exp(iθ_j G_j)；False: 单个 exp(iΣθ_j G_j)
    product_form: bool = False

    def __post_init__(self):
        if not self.generators:
            raise ValueError("拟设的生成元列表不能为空")
        if any(g.num_qubits != self.num_qubits for g in self.generators):
            raise DimensionMismatchError("生成元的量子比特数与拟设不一致")
        if len(self.reference_bits) != self.num_qubits:
            raise DimensionMismatchError(f"参考态 '{self.reference_bits}' 与 {self.num_qubits} 个量子比特不符")

    @property
    def num_parameters(self) -> int:
        return len(self.generators)

    def subset(self, indices: Sequence[int], name: Optional[str] = None) -> "AnsatzSpec":
        return AnsatzSpec(
            num_qubits=self.num_qubits,
            generators=tuple(self.generators[i] for i in indices),
            reference_bits=self.reference_bits,
            name=name or self.name,
            product_form=self.product_form
        )


@dataclass(frozen=True)
class ExcitationOp:
    generator: PauliSum
    angle: float = np.pi / 2

    def __post_init__(self):
        if not np.isfinite(self.angle):
            raise ValueError(f"激发角必须有限: {self.angle}")


@dataclass(frozen=True)
class ParameterNoise:
    """
    每个相移器上的高斯相位噪声 (弧度)
    independent_arms: 参照臂与演化臂分别制备目标态，两臂的噪声相互独立
    evolution_shifters: 演化臂中实现受控演化的相移器个数，各带一份 N(0, σ²) 相位
    """
    sigma: float = 0.0
    independent_arms: bool = False
    evolution_shifters: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"参数噪声标准差必须 ≥ 0: {self.sigma}")
        if self.evolution_shifters < 0:
            raise ValueError(f"演化相移器个数必须 ≥ 0: {self.evolution_shifters}")


@dataclass(frozen=True, eq=False)
class NoisyArms:
    reference: StateVector
    evolved: StateVector
    # 两臂之间不被试探态吸收的相位
    phase: float


@dataclass(frozen=True)
class TruncationResult:
    spec: AnsatzSpec
    theta: np.ndarray
    kept_indices: Tuple[int, ...]
    removed_indices: Tuple[int, ...]
    guess_fidelity: float
    blocked: bool = False
    history: List[Tuple[int, float]] = field(default_factory=list)


def bloch_rotation_spec() -> AnsatzSpec:
    """单比特乘积形式 e^{iθ_1 σz/2} e^{iθ_0 σy/2}|0>"""
    half_y = PauliSum.from_terms(1, [(0.5, [(0, "Y")])])
    half_z = PauliSum.from_terms(1, [(0.5, [(0, "Z")])])
    return AnsatzSpec(1, (half_y, half_z), "0", name="bloch_rotation", product_form=True)


def perturbed_theta(theta: Sequence[float], noise: Optional[ParameterNoise],
                    rng: Optional[np.random.Generator]) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if noise is None or noise.sigma == 0.0:
        return theta
    if rng is None:
        raise ValueError("参数噪声需要随机数生成器")
    return theta + rng.normal(0.0, noise.sigma, size=theta.shape)


def prepare(spec: AnsatzSpec, theta: Sequence[float], noise: Optional[ParameterNoise] = None,
            rng: Optional[np.random.Generator] = None) -> StateVector:
    """制备 exp(iΣ_j θ̃_j G_j)|Φ>"""
    if len(theta) != spec.num_parameters:
        raise DimensionMismatchError(f"参数个数 {len(theta)} 与生成元个数 {spec.num_parameters} 不符")
    theta = perturbed_theta(theta, noise, rng)
    reference = basis_state(spec.num_qubits, spec.reference_bits)

    if spec.product_form:
        state = reference
        for generator, angle in zip(spec.generators, theta):
            state = evolve(state, eigen_cache.get_eigensystem(generator), -angle)
        return state

    eigensystem = eigendecompose_matrix(generator_matrix(spec.generators, theta))
    reference_index = int(spec.reference_bits, 2)
    v = eigensystem.eigenvectors
    amplitudes = v @ (np.exp(1j * eigensystem.eigenvalues) * v[reference_index, :].conj())
    return StateVector.from_amplitudes(amplitudes)


def shifter_offsets(spec: AnsatzSpec) -> np.ndarray:
    """相移器实现 exp(iθ(G - λ_min)) 时相对 exp(iθG) 多出的全局相位系数 -λ_min(G)"""
    return np.array([-float(eigen_cache.get_eigensystem(g).eigenvalues[0]) for g in spec.generators])


def prepare_arms(spec: AnsatzSpec, theta: Sequence[float], noise: ParameterNoise, rng: np.random.Generator,
                 excitation: Optional[ExcitationOp] = None) -> NoisyArms:
    """
    两条路径各自抽取参数噪声 η_a, η_b
    全局相位在两臂间不再抵消: φ = Σ_j (η_b,j - η_a,j)·(-λ_min(G_j)) + 演化臂相移器的相位噪声
    """
    theta = np.asarray(theta, dtype=float)
    if len(theta) != spec.num_parameters:
        raise DimensionMismatchError(f"参数个数 {len(theta)} 与生成元个数 {spec.num_parameters} 不符")
    eta_a = rng.normal(0.0, noise.sigma, size=theta.shape)
    eta_b = rng.normal(0.0, noise.sigma, size=theta.shape)
    reference = prepare(spec, theta + eta_a)
    evolved = prepare(spec, theta + eta_b)
    if excitation is not None:
        reference, evolved = apply_excitation(reference, excitation), apply_excitation(evolved, excitation)
    phase = float((eta_b - eta_a) @ shifter_offsets(spec))
    if noise.evolution_shifters:
        phase += float(np.sum(rng.normal(0.0, noise.sigma, size=noise.evolution_shifters)))
    return NoisyArms(reference, evolved, phase)


def apply_excitation(state: StateVector, op: ExcitationOp) -> StateVector:
    """作用 exp(i·angle·G)"""
    if op.generator.num_qubits != state.num_qubits:
        raise DimensionMismatchError("激发算符与态矢量的量子比特数不一致")
    return evolve(state, eigen_cache.get_eigensystem(op.generator), -op.angle)


def excited_guess(spec: AnsatzSpec, theta: Sequence[float], excitation: ExcitationOp) -> StateVector:
    """初始猜测 Ê_p Â(θ)|Φ>"""
    return apply_excitation(prepare(spec, theta), excitation)


def truncate_ansatz(spec: AnsatzSpec, theta_g: Sequence[float], excitation: ExcitationOp,
                    target: EigenSubspace, threshold: float) -> TruncationResult:
    """
    拟设的合成截断: 反复移除 |θ_g| 最小的生成元，
    直到初始猜测的子空间保真度将低于阈值；至少保留一个生成元
    """
    theta_g = np.asarray(theta_g, dtype=float)
    if len(theta_g) != spec.num_parameters:
        raise DimensionMismatchError(f"θ_g 长度 {len(theta_g)} 与生成元个数 {spec.num_parameters} 不符")
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"截断阈值必须位于 (0, 1]: {threshold}")

    kept = list(range(spec.num_parameters))
    fidelity = subspace_fidelity(excited_guess(spec, theta_g, excitation), target)
    if fidelity < threshold:
        signal_bus.log_message.emit("WARNING", "初始猜测保真度已低于截断阈值，拟设保持不变", {
            "fidelity": round(fidelity, 6),
            "threshold": threshold
        })
        return TruncationResult(spec, theta_g, tuple(kept), (), fidelity, blocked=True)

    removed = []
    history = []
    while len(kept) > 1:
        # |θ| 相同时先移除序号较小的生成元
        candidate = min(kept, key=lambda i: (abs(theta_g[i]), i))
        trial = [i for i in kept if i != candidate]
        trial_fidelity = subspace_fidelity(
            excited_guess(spec.subset(trial), theta_g[trial], excitation), target)
        if trial_fidelity < threshold:
            break
        kept = trial
        removed.append(candidate)
        fidelity = trial_fidelity
        history.append((candidate, trial_fidelity))

    signal_bus.log_message.emit("INFO", f"拟设截断完成: {spec.num_parameters} → {len(kept)} 个生成元", {
        "removed": removed,
        "fidelity": round(fidelity, 6)
    })
    return TruncationResult(
        spec=spec.subset(kept, name=f"{spec.name}_truncated"),
        theta=theta_g[kept],
        kept_indices=tuple(kept),
        removed_indices=tuple(removed),
        guess_fidelity=fidelity,
        history=history
    )


def parse_ansatz(text: str) -> AnsatzSpec:
    """
    解析拟设文本:
      qubits <n>
      reference <bits>
      [name <label>] [form sum|product]
      generator
      <系数> <轴><序号> ...
    """
    lines = content_lines(text)
    if not lines:
        raise PauliFormatError("文本为空，缺少 'qubits <n>' 行")
    header_number, header = lines[0]
    num_qubits = parse_qubits_header(header, header_number)

    reference = None
    name = "ansatz"
    product_form = False
    blocks: List[list] = []
    for number, line in lines[1:]:
        keyword = line.split()[0]
        if keyword == "reference":
            parts = line.split()
            if len(parts) != 2 or len(parts[1]) != num_qubits or set(parts[1]) - {"0", "1"}:
                raise PauliFormatError(f"参考态必须是长度为 {num_qubits} 的比特串", number)
            reference = parts[1]
        elif keyword == "name":
            name = line[len("name"):].strip() or name
        elif keyword == "form":
            form = line[len("form"):].strip()
            if form not in ("sum", "product"):
                raise PauliFormatError(f"未知的拟设形式 '{form}'", number)
            product_form = form == "product"
        elif keyword == "generator":
            blocks.append([])
        else:
            if not blocks:
                raise PauliFormatError("系数行出现在首个 'generator' 之前", number)
            blocks[-1].append(parse_term_line(line, num_qubits, number))

    if reference is None:
        raise PauliFormatError("缺少 'reference <bits>' 行")
    if not blocks or any(not block for block in blocks):
        raise PauliFormatError("每个 'generator' 块至少需要一项")
    generators = tuple(PauliSum.from_terms(num_qubits, block) for block in blocks)
    return AnsatzSpec(num_qubits, generators, reference, name=name, product_form=product_form)
