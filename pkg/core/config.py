# core/config.py
import copy
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from packaging.version import InvalidVersion, Version

from core.file_tool import file_tool
from core.signal_bus import signal_bus
from version import VERSION

MODES = ("ground", "excited", "ipea", "rfpe", "folded", "spectrum", "bench-noise")


def get_resource_path(relative_path) -> Path:
    """获取资源文件的绝对路径 (相对仓库根目录)"""
    base_path = Path(__file__).resolve().parent.parent
    return base_path / relative_path


class ConfigError(ValueError):
    """配置校验失败，列出全部违规项"""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("配置校验失败:\n  - " + "\n  - ".join(self.violations))


class Config:
    """应用级配置"""

    def __init__(self):
        self.version = VERSION
        self.app_name = "WAVES 本征态见证模拟台"
        self.default_config_path = get_resource_path("resources/default_config.hjson")

    def load_defaults(self) -> Dict[str, Any]:
        return file_tool.read_config_file(str(self.default_config_path))


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    seed: int
    output_dir: str
    runs: int
    workers: int
    evolution_time: Union[float, str]
    time_strategy: str
    spectral_width: Optional[float]
    hamiltonian: Dict[str, Any]
    ansatz: Dict[str, Any]
    swarm: Dict[str, Any]
    noise: Dict[str, Any]
    excitation: Dict[str, Any]
    excited: Dict[str, Any]
    ipea: Dict[str, Any]
    rfpe: Dict[str, Any]
    folded: Dict[str, Any]
    bench_noise: Dict[str, Any]
    tool_version: str = VERSION
    source_path: Optional[str] = None
    raw: Dict[str, Any] = field(default_factory=dict, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        """完整配置回显 (写入每个输出文件)"""
        echo = copy.deepcopy(self.raw)
        echo["mode"] = self.mode
        return echo


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """递归合并，override 中的值优先；列表整体替换"""
    result = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = deep_merge(result[key], value)
        else:
            result[key] = copy.deepcopy(value)
    return result


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_number_or_list(value, name: str, violations: List[str], non_negative: bool = False):
    values = value if isinstance(value, list) else [value]
    if not values or not all(_is_number(v) for v in values):
        violations.append(f"{name} 必须是数值或数值列表: {value!r}")
    elif non_negative and any(v < 0 for v in values):
        violations.append(f"{name} 必须 ≥ 0: {value!r}")


def validate(data: Dict[str, Any], mode: str) -> List[str]:
    """收集全部违规项，不在第一个错误处停止"""
    violations = []

    if mode not in MODES:
        violations.append(f"未知模式 '{mode}'，可选: {', '.join(MODES)}")
    seed = data.get("seed")
    if seed is None:
        violations.append("seed 缺失 (必须显式给出，不使用系统时间)")
    elif not _is_int(seed) or seed < 0:
        violations.append(f"seed 必须是非负整数: {seed!r}")
    for key in ("runs", "workers"):
        if not _is_int(data.get(key)) or data.get(key) < 1:
            violations.append(f"{key} 必须是正整数: {data.get(key)!r}")
    if not isinstance(data.get("output_dir"), str) or not data.get("output_dir"):
        violations.append("output_dir 不能为空")

    tool_version = data.get("tool_version", VERSION)
    try:
        Version(str(tool_version))
    except InvalidVersion:
        violations.append(f"tool_version 不是合法版本号: {tool_version!r}")

    hamiltonian = data.get("hamiltonian", {})
    source = hamiltonian.get("source")
    if source not in ("exciton", "file", "random"):
        violations.append(f"hamiltonian.source 必须是 exciton/file/random: {source!r}")
    elif source == "exciton":
        for key in ("alpha", "beta", "shift"):
            if not _is_number(hamiltonian.get("exciton", {}).get(key)):
                violations.append(f"hamiltonian.exciton.{key} 必须是有限实数")
    elif source == "file" and not hamiltonian.get("file"):
        violations.append("hamiltonian.file 不能为空")
    elif source == "random":
        random_spec = hamiltonian.get("random", {})
        qubits = random_spec.get("qubits")
        if not _is_int(qubits) or not 1 <= qubits <= 12:
            violations.append(f"hamiltonian.random.qubits 必须位于 [1, 12]: {qubits!r}")
        if not _is_int(random_spec.get("terms")) or random_spec.get("terms") < 0:
            violations.append("hamiltonian.random.terms 必须是非负整数")
        if not _is_number(random_spec.get("scale")) or random_spec.get("scale") < 0:
            violations.append("hamiltonian.random.scale 必须 ≥ 0")
        if not _is_int(random_spec.get("seed")):
            violations.append("hamiltonian.random.seed 必须是整数")
    tolerance = hamiltonian.get("degeneracy_tolerance")
    if not _is_number(tolerance) or tolerance < 0:
        violations.append(f"hamiltonian.degeneracy_tolerance 必须 ≥ 0: {tolerance!r}")

    ansatz = data.get("ansatz", {})
    if ansatz.get("source") not in ("bloch_rotation", "file"):
        violations.append(f"ansatz.source 必须是 bloch_rotation/file: {ansatz.get('source')!r}")
    elif ansatz.get("source") == "file" and not ansatz.get("file"):
        violations.append("ansatz.file 不能为空")

    evolution_time = data.get("evolution_time")
    if evolution_time != "auto" and (not _is_number(evolution_time) or evolution_time <= 0):
        violations.append(f"evolution_time 必须是正数或 'auto': {evolution_time!r}")
    strategy = data.get("time_strategy")
    if strategy not in ("spectral_bound", "caller_bound"):
        violations.append(f"time_strategy 必须是 spectral_bound/caller_bound: {strategy!r}")
    elif strategy == "caller_bound" and evolution_time == "auto":
        width = data.get("spectral_width")
        if not _is_number(width) or width <= 0:
            violations.append("caller_bound 策略需要正的 spectral_width")

    swarm = data.get("swarm", {})
    n = swarm.get("num_particles")
    if not _is_int(n) or n < 1:
        violations.append(f"swarm.num_particles 必须是正整数: {n!r}")
    survivors = swarm.get("survivors")
    if survivors is not None and (not _is_int(survivors) or survivors < 1 or (_is_int(n) and survivors > n)):
        violations.append(f"swarm.survivors 必须位于 [1, num_particles]: {survivors!r}")
    a, b = swarm.get("weight_a"), swarm.get("weight_b")
    if not (_is_number(a) and _is_number(b)) or a < 0 or b < 0 or a + b == 0:
        violations.append(f"swarm.weight_a/weight_b 必须 ≥ 0 且不同时为 0: a={a!r}, b={b!r}")
    for key in ("fobj_plateau_threshold", "dispersion_threshold"):
        if not _is_number(swarm.get(key)) or swarm.get(key) <= 0:
            violations.append(f"swarm.{key} 必须为正: {swarm.get(key)!r}")
    for key in ("max_steps", "plateau_window"):
        if not _is_int(swarm.get(key)) or swarm.get(key) < 1:
            violations.append(f"swarm.{key} 必须是正整数: {swarm.get(key)!r}")
    if not _is_number(swarm.get("excited_spread")) or swarm.get("excited_spread") < 0:
        violations.append("swarm.excited_spread 必须 ≥ 0")
    onset = swarm.get("purity_onset")
    if onset is not None and (not _is_number(onset) or onset <= 0):
        violations.append(f"swarm.purity_onset 必须为正或 null: {onset!r}")
    init = swarm.get("init", {})
    if init.get("kind") == "uniform":
        _check_number_or_list(init.get("lower"), "swarm.init.lower", violations)
        _check_number_or_list(init.get("upper"), "swarm.init.upper", violations)
    elif init.get("kind") == "gaussian":
        _check_number_or_list(init.get("mean"), "swarm.init.mean", violations)
        _check_number_or_list(init.get("std"), "swarm.init.std", violations, non_negative=True)
    else:
        violations.append(f"swarm.init.kind 必须是 uniform/gaussian: {init.get('kind')!r}")

    noise = data.get("noise", {})
    tomography = noise.get("tomography", {})
    if tomography.get("model") not in ("binomial", "poisson"):
        violations.append(f"noise.tomography.model 必须是 binomial/poisson: {tomography.get('model')!r}")
    for key in ("shots_per_basis", "peak_counts"):
        if not _is_int(tomography.get(key)) or tomography.get(key) < 1:
            violations.append(f"noise.tomography.{key} 必须是正整数")
    if not _is_number(noise.get("parameter_sigma")) or noise.get("parameter_sigma") < 0:
        violations.append(f"noise.parameter_sigma 必须 ≥ 0: {noise.get('parameter_sigma')!r}")
    if noise.get("parameter_arms") not in ("independent", "shared"):
        violations.append(f"noise.parameter_arms 必须是 independent/shared: {noise.get('parameter_arms')!r}")
    if not _is_int(noise.get("evolution_shifters")) or noise.get("evolution_shifters") < 0:
        violations.append(f"noise.evolution_shifters 必须是非负整数: {noise.get('evolution_shifters')!r}")

    if mode in ("excited", "folded"):
        excitation = data.get("excitation", {})
        if not excitation.get("terms") and not excitation.get("file"):
            violations.append("excitation 需要 terms 或 file")
        if not _is_number(excitation.get("angle")):
            violations.append(f"excitation.angle 必须是有限实数: {excitation.get('angle')!r}")
        excited = data.get("excited", {})
        threshold = excited.get("truncation_threshold")
        if not _is_number(threshold) or not 0 < threshold <= 1:
            violations.append(f"excited.truncation_threshold 必须位于 (0, 1]: {threshold!r}")
        folded = data.get("folded", {})
        if folded.get("epsilon_strategy") not in ("gap", "guess_energy"):
            violations.append(f"folded.epsilon_strategy 必须是 gap/guess_energy: {folded.get('epsilon_strategy')!r}")
        if folded.get("epsilon_shift") is not None and not _is_number(folded.get("epsilon_shift")):
            violations.append("folded.epsilon_shift 必须是有限实数或 null")
        if not _is_number(folded.get("gap_fraction")):
            violations.append("folded.gap_fraction 必须是有限实数")
        if not _is_int(folded.get("target_subspace")) or folded.get("target_subspace") < 0:
            violations.append("folded.target_subspace 必须是非负整数")

    if mode == "ipea":
        ipea = data.get("ipea", {})
        if not _is_int(ipea.get("m_bits")) or not 1 <= ipea.get("m_bits") <= 64:
            violations.append(f"ipea.m_bits 必须位于 [1, 64]: {ipea.get('m_bits')!r}")
        if not _is_int(ipea.get("shots_per_bit")) or ipea.get("shots_per_bit") < 1:
            violations.append("ipea.shots_per_bit 必须是正整数")
        if ipea.get("state_source") not in ("oracle", "search"):
            violations.append(f"ipea.state_source 必须是 oracle/search: {ipea.get('state_source')!r}")
        if not _is_int(ipea.get("eigenstate_index")) or ipea.get("eigenstate_index") < 0:
            violations.append("ipea.eigenstate_index 必须是非负整数")

    if mode == "rfpe":
        rfpe = data.get("rfpe", {})
        weight = rfpe.get("weight")
        if not _is_number(weight) or not 0 < weight <= 1:
            violations.append(f"rfpe.weight 必须位于 (0, 1]: {weight!r}")
        if not _is_int(rfpe.get("epochs")) or rfpe.get("epochs") < 0:
            violations.append("rfpe.epochs 必须是非负整数")
        if not _is_int(rfpe.get("num_points")) or rfpe.get("num_points") < 2:
            violations.append("rfpe.num_points 必须 ≥ 2")
        for key in ("prior_std", "half_width", "max_time", "time_scale"):
            if not _is_number(rfpe.get(key)) or rfpe.get(key) <= 0:
                violations.append(f"rfpe.{key} 必须为正")
        shrink = rfpe.get("posterior_shrink")
        if not _is_number(shrink) or not 0 < shrink <= 1:
            violations.append(f"rfpe.posterior_shrink 必须位于 (0, 1]: {shrink!r}")
        if not _is_number(rfpe.get("prior_mean")):
            violations.append("rfpe.prior_mean 必须是有限实数")
        if rfpe.get("phi_strategy") not in ("sample", "mean"):
            violations.append(f"rfpe.phi_strategy 必须是 sample/mean: {rfpe.get('phi_strategy')!r}")
        eigenvalues, probabilities = rfpe.get("eigenvalues") or [], rfpe.get("probabilities") or []
        if len(eigenvalues) != len(probabilities):
            violations.append("rfpe.eigenvalues 与 rfpe.probabilities 长度不一致")
        elif probabilities and (not all(_is_number(p) and p >= 0 for p in probabilities)
                                or abs(sum(probabilities) - 1.0) > 1e-9):
            violations.append(f"rfpe.probabilities 必须非负且和为 1: {probabilities!r}")

    if mode == "bench-noise":
        sigmas = data.get("bench_noise", {}).get("sigmas")
        if not isinstance(sigmas, list) or not sigmas or not all(_is_number(s) and s >= 0 for s in sigmas):
            violations.append(f"bench_noise.sigmas 必须是非空的非负数列表: {sigmas!r}")

    return violations


def build_experiment_config(mode: str, data: Dict[str, Any], source_path: Optional[str] = None) -> ExperimentConfig:
    violations = validate(data, mode)
    if violations:
        raise ConfigError(violations)

    tool_version = str(data.get("tool_version", VERSION))
    if Version(tool_version) > Version(VERSION):
        signal_bus.log_message.emit("WARNING", f"配置文件要求的版本 {tool_version} 高于当前版本 {VERSION}", {
            "config": source_path
        })
    return ExperimentConfig(
        mode=mode,
        seed=data["seed"],
        output_dir=data["output_dir"],
        runs=data["runs"],
        workers=data["workers"],
        evolution_time=data["evolution_time"],
        time_strategy=data["time_strategy"],
        spectral_width=data.get("spectral_width"),
        hamiltonian=data["hamiltonian"],
        ansatz=data["ansatz"],
        swarm=data["swarm"],
        noise=data["noise"],
        excitation=data["excitation"],
        excited=data["excited"],
        ipea=data["ipea"],
        rfpe=data["rfpe"],
        folded=data["folded"],
        bench_noise=data["bench_noise"],
        tool_version=tool_version,
        source_path=source_path,
        raw=data
    )


def load_experiment_config(mode: str, path: Optional[str] = None,
                           overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """默认配置 ← 用户配置文件 ← 命令行覆盖项"""
    data = config.load_defaults()
    if path:
        data = deep_merge(data, file_tool.read_config_file(path))
    if overrides:
        data = deep_merge(data, {k: v for k, v in overrides.items() if v is not None})
    return build_experiment_config(mode, data, path)


# 全局配置实例
config = Config()
