# core/experiment_executor.py
import time
import traceback
from collections import Counter
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from PySide6.QtCore import QThread

from core.ansatz import AnsatzSpec, ExcitationOp, ParameterNoise, bloch_rotation_spec, excited_guess, \
    parse_ansatz, prepare, truncate_ansatz
from core.baselines import FoldedConfig, run_energy_only_search, run_folded_search
from core.config import ConfigError, ExperimentConfig, get_resource_path
from core.file_tool import file_tool
from core.hamiltonians import SpectrumOracle, exciton_hamiltonian, load_hamiltonian, random_hamiltonian, \
    spectrum_oracle
from core.optimizer import GaussianInit, SearchNoise, SearchResult, SwarmConfig, UniformInit, run_excited_search, \
    run_ground_search
from core.output_manager import OutputManager, TraceTable
from core.pauli_algebra import PauliSum, parse_pauli_sum, parse_term_line
from core.phase_estimation import RfpePrior, alias_distance, ipea, phase_fractions, rfpe_run, rounded_bits
from core.self_checker import self_checker
from core.signal_bus import signal_bus
from core.statevector import StateVector, eigenbasis_amplitudes, subspace_fidelity
from core.witness import NoisyTomography, choose_evolution_time

# 67.5% 置信带
BAND_LOWER = 16.25
BAND_UPPER = 83.75


@dataclass
class RunOutcome:
    run_index: Optional[int]
    seed: int
    success: bool = False
    result: Dict[str, Any] = field(default_factory=dict)
    traces: Dict[str, TraceTable] = field(default_factory=dict)
    issues: List[Dict] = field(default_factory=list)
    # 批量聚合所需的数据，不写入单次汇总
    metrics: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None
    wall_time: float = 0.0


@dataclass
class ExperimentContext:
    hamiltonian: PauliSum
    oracle: SpectrumOracle
    t: float


def derive_run_seed(master_seed: int, run_index: int) -> int:
    """主种子 + 运行序号 → 单次运行种子 (SeedSequence 计数器混合)"""
    return int(np.random.SeedSequence([master_seed, run_index]).generate_state(1, dtype=np.uint64)[0])


def to_jsonable(value: Any) -> Any:
    if is_dataclass(value):
        return to_jsonable(asdict(value))
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else None
    return value


def resolve_input_path(path: str, experiment: ExperimentConfig) -> str:
    """依次尝试: 原路径、配置文件所在目录、resources 目录"""
    candidates = [Path(path)]
    if experiment.source_path:
        candidates.append(Path(experiment.source_path).parent / path)
    candidates.append(get_resource_path("resources") / path)
    for candidate in candidates:
        if candidate.exists():
            return str(candidate)
    return path


def build_hamiltonian(experiment: ExperimentConfig) -> PauliSum:
    section = experiment.hamiltonian
    source = section["source"]
    if source == "exciton":
        exciton = section["exciton"]
        return exciton_hamiltonian(exciton["alpha"], exciton["beta"], exciton["shift"])
    if source == "file":
        return load_hamiltonian(resolve_input_path(section["file"], experiment))
    spec = section["random"]
    return random_hamiltonian(spec["qubits"], spec["terms"], spec["scale"], spec["seed"])


def build_ansatz(experiment: ExperimentConfig) -> AnsatzSpec:
    if experiment.ansatz["source"] == "bloch_rotation":
        return bloch_rotation_spec()
    return parse_ansatz(file_tool.read_text_file(resolve_input_path(experiment.ansatz["file"], experiment)))


def build_excitation(experiment: ExperimentConfig, num_qubits: int) -> ExcitationOp:
    section = experiment.excitation
    if section.get("file"):
        generator = parse_pauli_sum(file_tool.read_text_file(resolve_input_path(section["file"], experiment)))
    else:
        generator = PauliSum.from_terms(
            num_qubits, [parse_term_line(line, num_qubits, i + 1) for i, line in enumerate(section["terms"])])
    return ExcitationOp(generator, float(section["angle"]))


def _broadcast(value, dim: int, name: str) -> Tuple[float, ...]:
    if isinstance(value, list):
        if len(value) != dim:
            raise ConfigError([f"{name} 长度 {len(value)} 与参数维度 {dim} 不符"])
        return tuple(float(v) for v in value)
    return tuple([float(value)] * dim)


def build_swarm_config(experiment: ExperimentConfig, dim: int, seed: int, with_init: bool = True) -> SwarmConfig:
    section = experiment.swarm
    init = None
    if with_init:
        spec = section["init"]
        if spec["kind"] == "uniform":
            init = UniformInit(_broadcast(spec["lower"], dim, "swarm.init.lower"),
                               _broadcast(spec["upper"], dim, "swarm.init.upper"))
        else:
            init = GaussianInit(_broadcast(spec["mean"], dim, "swarm.init.mean"),
                                _broadcast(spec["std"], dim, "swarm.init.std"))
    return SwarmConfig(
        num_particles=section["num_particles"],
        survivors=section["survivors"],
        weight_a=float(section["weight_a"]),
        weight_b=float(section["weight_b"]),
        adaptive=bool(section["adaptive"]),
        greedy=bool(section["greedy"]),
        fobj_plateau_threshold=float(section["fobj_plateau_threshold"]),
        plateau_window=section["plateau_window"],
        dispersion_threshold=float(section["dispersion_threshold"]),
        max_steps=section["max_steps"],
        init=init,
        excited_spread=float(section["excited_spread"]),
        purity_onset=None if section.get("purity_onset") is None else float(section["purity_onset"]),
        seed=seed
    )


def build_noise(experiment: ExperimentConfig, parameter_sigma: Optional[float] = None) -> SearchNoise:
    section = experiment.noise
    tomography = None
    if section["tomography"].get("enabled"):
        spec = section["tomography"]
        tomography = NoisyTomography(spec["shots_per_basis"], spec["model"], spec["peak_counts"])
    sigma = section["parameter_sigma"] if parameter_sigma is None else parameter_sigma
    parameter = None
    if sigma > 0:
        parameter = ParameterNoise(float(sigma), independent_arms=section["parameter_arms"] == "independent",
                                   evolution_shifters=section["evolution_shifters"])
    return SearchNoise(tomography=tomography, parameter=parameter)


def build_context(experiment: ExperimentConfig) -> ExperimentContext:
    hamiltonian = build_hamiltonian(experiment)
    oracle = spectrum_oracle(hamiltonian, experiment.hamiltonian["degeneracy_tolerance"])
    if experiment.evolution_time == "auto":
        t = choose_evolution_time(oracle.eigensystem, experiment.time_strategy, experiment.spectral_width)
    else:
        t = float(experiment.evolution_time)
    return ExperimentContext(hamiltonian, oracle, t)


def swarm_table(name: str, result: SearchResult) -> TraceTable:
    table = TraceTable(name, [])
    table.rows = [[record[c] for c in table.columns] for record in result.step_records]
    return table


def search_summary(result: SearchResult) -> Dict[str, Any]:
    summary = {
        "theta_best": result.theta_best,
        "theta_uncertainty": result.theta_uncertainty,
        "steps": result.steps,
        "convergence_reason": result.convergence_reason,
        "trial_states": result.trial_states,
        "purity_evaluations": result.purity_evaluations,
        "energy_evaluations": result.energy_evaluations,
        "final_mean_fobj": result.fobj_trace[-1] if result.fobj_trace else None,
        "subspace_fidelities": result.subspace_fidelities,
        "final_readout": result.final_readout
    }
    if result.subspace_fidelities:
        summary["collapsed_subspace"] = int(np.argmax(result.subspace_fidelities))
    return summary


def search_metrics(result: SearchResult, oracle: SpectrumOracle, target: Optional[int]) -> Dict[str, Any]:
    fidelities = result.subspace_fidelities or []
    collapsed = int(np.argmax(fidelities)) if fidelities else None
    final = fidelities[target] if target is not None else (fidelities[collapsed] if fidelities else None)
    return {
        "fidelity_trace": result.fidelity_trace or [],
        "final_fidelity": final,
        "collapsed_subspace": collapsed,
        "collapsed_fidelity": fidelities[collapsed] if fidelities else None,
        "subspace_eigenvalues": [s.eigenvalue for s in oracle.subspaces],
        "steps": result.steps,
        "trial_states": result.trial_states
    }


def band(values: np.ndarray, axis: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    return np.percentile(values, BAND_LOWER, axis=axis), np.percentile(values, BAND_UPPER, axis=axis)


def pad_traces(traces: List[List[float]]) -> np.ndarray:
    """不同长度的轨迹用最后一个值补齐"""
    length = max(len(t) for t in traces)
    return np.array([list(t) + [t[-1]] * (length - len(t)) for t in traces], dtype=float)


class RunWorker(QThread):
    """单次运行工作线程"""

    def __init__(self, executor, run_index: int, seed: int):
        super().__init__()
        self.executor = executor
        self.run_index = run_index
        self.seed = seed
        self.outcome: Optional[RunOutcome] = None

    def run(self):
        try:
            self.outcome = self.executor.execute_single(self.seed, self.run_index)
        except Exception as e:
            self.outcome = RunOutcome(self.run_index, self.seed, success=False, error=f"任务执行失败: {e}")


class ExperimentExecutor:
    """统一的实验执行器 - 模式分发、单次/批量运行与输出"""

    def __init__(self, experiment: ExperimentConfig):
        self.experiment = experiment
        self.output = OutputManager(experiment.output_dir)
        self.mode_handlers = {
            "spectrum": self._execute_spectrum,
            "ground": self._execute_ground,
            "excited": self._execute_excited,
            "ipea": self._execute_ipea,
            "rfpe": self._execute_rfpe,
            "folded": self._execute_folded,
            "bench-noise": self._execute_bench_noise,
        }

    def execute_task(self, task_type: str, params: Optional[Dict] = None) -> Dict[str, Any]:
        """执行任务: run | run_batch"""
        params = params or {}
        task_handlers = {
            "run": lambda: self.run(),
            "run_batch": lambda: self.run_batch(params.get("runs", self.experiment.runs)),
        }
        handler = task_handlers.get(task_type)
        if not handler:
            return {'success': False, 'message': f'未知任务类型: {task_type}', 'exit_code': 2}
        return handler()

    # ==================== 单次运行 ====================

    def execute_single(self, seed: int, run_index: Optional[int] = None) -> RunOutcome:
        """执行一次实验，不写文件；异常在此记录为失败"""
        outcome = RunOutcome(run_index, seed)
        started = time.perf_counter()
        label = f"run {run_index}" if run_index is not None else self.experiment.mode
        signal_bus.run_started.emit(-1 if run_index is None else run_index, self.experiment.mode)
        try:
            self.mode_handlers[self.experiment.mode](outcome, seed)
            outcome.success = True
        except Exception as e:
            outcome.error = f"{type(e).__name__}: {e}"
            signal_bus.log_message.emit("ERROR", f"{label} 执行失败: {e}", {"seed": seed})
            signal_bus.log_message.emit("DEBUG", traceback.format_exc(), {})
        outcome.wall_time = time.perf_counter() - started
        signal_bus.run_completed.emit(-1 if run_index is None else run_index, outcome.success, outcome.error or "")
        return outcome

    def run(self) -> Dict[str, Any]:
        """单次运行: 写入轨迹与 summary.json"""
        experiment = self.experiment
        self.output.create_structure()
        outcome = self.execute_single(experiment.seed)
        echo = experiment.to_dict()
        for table in outcome.traces.values():
            self.output.write_trace(table, experiment.seed, echo)

        check = self_checker.summarize(outcome.issues, experiment.mode)
        summary = {
            "mode": experiment.mode,
            "seed": experiment.seed,
            "config": echo,
            "success": outcome.success,
            "error": outcome.error,
            "wall_time_seconds": outcome.wall_time,
            "self_check": check,
            "result": outcome.result
        }
        self.output.write_summary(to_jsonable(summary))
        exit_code = 0 if outcome.success and check['passed'] else 1
        if exit_code == 0:
            signal_bus.log_message.emit("SUCCESS", f"{experiment.mode} 完成", {"seed": experiment.seed})
        return {'success': exit_code == 0, 'exit_code': exit_code, 'summary': summary}

    # ==================== 批量运行 ====================

    def _run_all(self, seeds: List[int]) -> List[RunOutcome]:
        workers = self.experiment.workers
        if workers <= 1:
            return [self.execute_single(seed, index) for index, seed in enumerate(seeds)]

        outcomes: List[Optional[RunOutcome]] = [None] * len(seeds)
        for start in range(0, len(seeds), workers):
            chunk = [RunWorker(self, index, seeds[index]) for index in range(start, min(start + workers, len(seeds)))]
            for worker in chunk:
                worker.start()
            for worker in chunk:
                worker.wait()
                outcomes[worker.run_index] = worker.outcome
        return outcomes

    def run_batch(self, num_runs: int) -> Dict[str, Any]:
        """批量运行: 每次运行的种子由主种子确定性导出，输出按运行序号合并"""
        if num_runs < 1:
            raise ConfigError([f"runs 必须 ≥ 1: {num_runs}"])
        experiment = self.experiment
        self.output.create_structure(batch=True)
        started = time.perf_counter()
        seeds = [derive_run_seed(experiment.seed, index) for index in range(num_runs)]
        signal_bus.log_message.emit("INFO", f"批量运行 {num_runs} 次 ({experiment.mode})，并行 {experiment.workers}", {
            "master_seed": experiment.seed
        })

        outcomes = self._run_all(seeds)
        echo = experiment.to_dict()
        issues = []
        for outcome in outcomes:
            for table in outcome.traces.values():
                self.output.write_trace(table, outcome.seed, echo, outcome.run_index)
            run_check = self_checker.summarize(outcome.issues, f"run {outcome.run_index}")
            issues.extend(dict(issue, run=outcome.run_index) for issue in outcome.issues)
            self.output.write_summary(to_jsonable({
                "mode": experiment.mode,
                "seed": outcome.seed,
                "run": outcome.run_index,
                "success": outcome.success,
                "error": outcome.error,
                "wall_time_seconds": outcome.wall_time,
                "self_check": run_check,
                "result": outcome.result
            }), outcome.run_index)

        trace_names = sorted({name for outcome in outcomes for name in outcome.traces})
        for name in trace_names:
            self.output.merge_run_traces(name, [o.traces.get(name) for o in outcomes], experiment.seed, echo)

        successes = [o for o in outcomes if o.success]
        failures = [{"run": o.run_index, "seed": o.seed, "error": o.error} for o in outcomes if not o.success]
        aggregate, tables = self.aggregate(successes) if successes else ({}, [])
        for table in tables:
            self.output.write_trace(table, experiment.seed, echo)

        check = self_checker.summarize(issues, "batch")
        summary = {
            "mode": experiment.mode,
            "seed": experiment.seed,
            "config": echo,
            "runs": num_runs,
            "successes": len(successes),
            "failures": failures,
            "run_seeds": seeds,
            "success": not failures,
            "wall_time_seconds": time.perf_counter() - started,
            "self_check": check,
            "aggregate": aggregate
        }
        self.output.write_summary(to_jsonable(summary))
        exit_code = 0 if not failures and check['passed'] else 1
        level = "SUCCESS" if exit_code == 0 else "WARNING"
        signal_bus.log_message.emit(level, f"批量运行完成: 成功 {len(successes)}/{num_runs}", aggregate.get("headline", {}))
        return {'success': exit_code == 0, 'exit_code': exit_code, 'summary': summary}

    def aggregate(self, outcomes: List[RunOutcome]) -> Tuple[Dict[str, Any], List[TraceTable]]:
        """聚合统计: 保真度轨迹均值/中位数与 67.5% 置信带、坍缩频率表等"""
        mode = self.experiment.mode
        if mode in ("ground", "excited", "folded"):
            return self._aggregate_search(outcomes)
        if mode == "rfpe":
            return self._aggregate_rfpe(outcomes)
        if mode == "ipea":
            return self._aggregate_ipea(outcomes)
        if mode == "bench-noise":
            return self._aggregate_bench_noise(outcomes)
        return {"runs": len(outcomes)}, []

    @staticmethod
    def _aggregate_search(outcomes: List[RunOutcome]) -> Tuple[Dict[str, Any], List[TraceTable]]:
        tables = []
        metrics = [o.metrics for o in outcomes]
        finals = np.array([m["final_fidelity"] for m in metrics if m.get("final_fidelity") is not None])
        aggregate: Dict[str, Any] = {
            "runs": len(outcomes),
            "median_steps": float(np.median([m["steps"] for m in metrics])),
            "mean_trial_states": float(np.mean([m["trial_states"] for m in metrics]))
        }
        if len(finals):
            lower, upper = band(finals)
            aggregate.update({
                "mean_final_fidelity": float(np.mean(finals)),
                "median_final_fidelity": float(np.median(finals)),
                "final_fidelity_band": [float(lower), float(upper)]
            })

        traces = [m["fidelity_trace"] for m in metrics if m.get("fidelity_trace")]
        if traces:
            padded = pad_traces(traces)
            lower, upper = band(padded)
            table = TraceTable("aggregate_fidelity", [])
            for step in range(padded.shape[1]):
                table.rows.append([step + 1, padded.shape[0], float(np.mean(padded[:, step])),
                                   float(np.median(padded[:, step])), float(lower[step]), float(upper[step])])
            tables.append(table)

        collapsed = [m for m in metrics if m.get("collapsed_subspace") is not None]
        if collapsed:
            eigenvalues = collapsed[0]["subspace_eigenvalues"]
            counts = Counter(m["collapsed_subspace"] for m in collapsed)
            table = TraceTable("collapse", [])
            for index in sorted(counts):
                fidelities = [m["collapsed_fidelity"] for m in collapsed if m["collapsed_subspace"] == index]
                table.rows.append([index, eigenvalues[index], counts[index], counts[index] / len(collapsed),
                                   float(np.mean(fidelities))])
            tables.append(table)
            aggregate["collapse_frequencies"] = {str(k): v / len(collapsed) for k, v in sorted(counts.items())}
        aggregate["headline"] = {k: aggregate[k] for k in ("mean_final_fidelity", "median_steps") if k in aggregate}
        return aggregate, tables

    @staticmethod
    def _aggregate_rfpe(outcomes: List[RunOutcome]) -> Tuple[Dict[str, Any], List[TraceTable]]:
        errors = np.array([o.metrics["errors"] for o in outcomes], dtype=float)
        aggregate: Dict[str, Any] = {"runs": len(outcomes)}
        tables = []
        if errors.size:
            medians = np.median(errors, axis=0)
            lower, upper = band(errors)
            table = TraceTable("aggregate_rfpe", [])
            for epoch in range(errors.shape[1]):
                table.rows.append([epoch + 1, errors.shape[0], float(medians[epoch]),
                                   float(lower[epoch]), float(upper[epoch])])
            tables.append(table)
            initial = float(np.median([o.metrics["initial_error"] for o in outcomes]))
            aggregate.update({
                "median_initial_error": initial,
                "median_final_error": float(medians[-1]),
                "error_reduction": initial / float(medians[-1]) if medians[-1] > 0 else None
            })
        counts = Counter(o.metrics["selected"] for o in outcomes)
        aggregate["selection_frequencies"] = {str(k): v / len(outcomes) for k, v in sorted(counts.items())}
        aggregate["headline"] = {k: aggregate[k] for k in ("median_final_error",) if k in aggregate}
        return aggregate, tables

    @staticmethod
    def _aggregate_ipea(outcomes: List[RunOutcome]) -> Tuple[Dict[str, Any], List[TraceTable]]:
        counts = Counter((o.metrics["bit_string"], o.metrics["eigenvalue_estimate"]) for o in outcomes)
        table = TraceTable("estimates", [])
        for (bit_string, estimate), count in sorted(counts.items(), key=lambda item: (-item[1], item[0][0])):
            table.rows.append([bit_string, estimate, count, count / len(outcomes)])
        matched = [o.metrics["bits_match"] for o in outcomes if o.metrics.get("bits_match") is not None]
        aggregate = {
            "runs": len(outcomes),
            "distinct_estimates": len(counts),
            "most_common_fraction": table.rows[0][3],
            "oracle_match_fraction": float(np.mean(matched)) if matched else None
        }
        aggregate["headline"] = {"most_common_fraction": aggregate["most_common_fraction"]}
        return aggregate, [table]

    @staticmethod
    def _aggregate_bench_noise(outcomes: List[RunOutcome]) -> Tuple[Dict[str, Any], List[TraceTable]]:
        grouped: Dict[Tuple[float, str], List[float]] = {}
        for outcome in outcomes:
            for sigma, method, fidelity in outcome.metrics["bench"]:
                grouped.setdefault((sigma, method), []).append(fidelity)
        table = TraceTable("aggregate_bench_noise", [])
        means = {}
        for (sigma, method), values in sorted(grouped.items()):
            values = np.array(values)
            lower, upper = band(values)
            means[f"{method}@{sigma}"] = float(np.mean(values))
            table.rows.append([sigma, method, len(values), float(np.mean(values)), float(np.median(values)),
                               float(lower), float(upper)])
        return {"runs": len(outcomes), "mean_final_fidelity": means, "headline": {}}, [table]

    # ==================== 模式 ====================

    def _ground_stage(self, outcome: RunOutcome, context: ExperimentContext, spec: AnsatzSpec, seed: int,
                      rng: np.random.Generator, trace_name: str) -> SearchResult:
        swarm = build_swarm_config(self.experiment, spec.num_parameters, seed)
        result = run_ground_search(context.hamiltonian, spec, context.t, swarm, build_noise(self.experiment), rng,
                                   context.oracle)
        outcome.traces[trace_name] = swarm_table(trace_name, result)
        outcome.issues.extend(self_checker.check_search(result, swarm.num_particles, trace_name))
        return result

    def _execute_spectrum(self, outcome: RunOutcome, seed: int):
        context = build_context(self.experiment)
        oracle = context.oracle
        table = TraceTable("spectrum", [])
        for subspace_index, subspace in enumerate(oracle.subspaces):
            start = sum(s.dimension for s in oracle.subspaces[:subspace_index])
            for offset in range(subspace.dimension):
                index = start + offset
                table.rows.append([index, float(oracle.eigenvalues[index]), subspace_index, subspace.dimension])
        outcome.traces["spectrum"] = table
        outcome.result = dict(oracle.summary(), qubits=context.hamiltonian.num_qubits,
                              terms=len(context.hamiltonian), evolution_time=context.t)

    def _execute_ground(self, outcome: RunOutcome, seed: int):
        context = build_context(self.experiment)
        spec = build_ansatz(self.experiment)
        result = self._ground_stage(outcome, context, spec, seed, np.random.default_rng(seed), "swarm")
        outcome.result = dict(search_summary(result), evolution_time=context.t,
                              ground_fidelity=result.subspace_fidelities[0])
        outcome.metrics = search_metrics(result, context.oracle, 0)

    def _theta_ground(self, outcome: RunOutcome, context: ExperimentContext, spec: AnsatzSpec, configured,
                      seed: int, rng: np.random.Generator) -> np.ndarray:
        if configured is not None:
            return np.array(_broadcast(configured, spec.num_parameters, "theta_ground"))
        result = self._ground_stage(outcome, context, spec, seed, rng, "ground_swarm")
        outcome.result["ground_stage"] = search_summary(result)
        return result.theta_best

    def _execute_excited(self, outcome: RunOutcome, seed: int):
        experiment = self.experiment
        context = build_context(experiment)
        spec = build_ansatz(experiment)
        excitation = build_excitation(experiment, spec.num_qubits)
        rng = np.random.default_rng(seed)
        theta_g = self._theta_ground(outcome, context, spec, experiment.excited["theta_ground"], seed, rng)
        target = experiment.excited["target_subspace"]

        if experiment.excited["truncate"]:
            truncation_target = target if target is not None else min(1, len(context.oracle.subspaces) - 1)
            truncation = truncate_ansatz(spec, theta_g, excitation, context.oracle.subspaces[truncation_target],
                                         experiment.excited["truncation_threshold"])
            spec, theta_g = truncation.spec, truncation.theta
            outcome.result["truncation"] = {
                "kept_indices": truncation.kept_indices,
                "removed_indices": truncation.removed_indices,
                "guess_fidelity": truncation.guess_fidelity,
                "blocked": truncation.blocked
            }

        swarm = build_swarm_config(experiment, spec.num_parameters, seed, with_init=False)
        result = run_excited_search(context.hamiltonian, spec, theta_g, excitation, context.t, swarm,
                                    build_noise(experiment), rng, context.oracle, target)
        outcome.traces["swarm"] = swarm_table("swarm", result)
        outcome.issues.extend(self_checker.check_search(result, swarm.num_particles, "excited"))
        outcome.result.update(search_summary(result), evolution_time=context.t, theta_ground=theta_g)
        outcome.metrics = search_metrics(result, context.oracle, target)

    def _execute_ipea(self, outcome: RunOutcome, seed: int):
        experiment = self.experiment
        section = experiment.ipea
        context = build_context(experiment)
        rng = np.random.default_rng(seed)
        oracle = context.oracle
        if section["state_source"] == "oracle":
            index = section["eigenstate_index"]
            if index >= oracle.eigensystem.dimension:
                raise ValueError(f"本征态序号 {index} 超出维度 {oracle.eigensystem.dimension}")
            state = prepare_eigenstate(oracle, index)
        else:
            spec = build_ansatz(experiment)
            ground = self._ground_stage(outcome, context, spec, seed, rng, "ground_swarm")
            outcome.result["ground_stage"] = search_summary(ground)
            state = prepare(spec, ground.theta_best)

        result = ipea(state, oracle.eigensystem, context.t, section["m_bits"], section["shots_per_bit"], rng,
                      exact_readout=section["exact_readout"], statistics_mode=section["statistics_mode"])
        table = TraceTable("ipea", [])
        table.rows = [[record[c] for c in table.columns] for record in result.bit_records]
        outcome.traces["ipea"] = table
        outcome.issues.extend(self_checker.check_ipea(result, section["m_bits"]))

        distances = [alias_distance(result.eigenvalue_estimate, value, context.t) for value in oracle.eigenvalues]
        nearest = int(np.argmin(distances))
        outcome.result.update({
            "bits": result.bit_string,
            "phase_fraction": float(result.phase_fraction),
            "eigenvalue_estimate": result.eigenvalue_estimate,
            "evolution_time": context.t,
            "nearest_eigenvalue": float(oracle.eigenvalues[nearest]),
            "alias_distance": distances[nearest],
            "final_subspace_fidelities": [subspace_fidelity(result.final_state, s) for s in oracle.subspaces]
        })
        bits_match = None
        if section["state_source"] == "oracle":
            fraction = phase_fractions([oracle.eigenvalues[section["eigenstate_index"]]], context.t)[0]
            expected = "".join(str(b) for b in rounded_bits(fraction, section["m_bits"]))
            bits_match = expected == result.bit_string
            outcome.result.update(expected_bits=expected, bits_match=bits_match)
        outcome.metrics = {"bit_string": result.bit_string, "eigenvalue_estimate": result.eigenvalue_estimate,
                           "bits_match": bits_match}

    def _execute_rfpe(self, outcome: RunOutcome, seed: int):
        section = self.experiment.rfpe
        eigenvalues = [float(v) for v in section["eigenvalues"] or []]
        probabilities = [float(p) for p in section["probabilities"] or []]
        if not eigenvalues:
            context = build_context(self.experiment)
            eigenvalues, probabilities = [float(context.oracle.ground.eigenvalue)], [1.0]
        prior = RfpePrior(float(section["prior_mean"]), float(section["prior_std"]), section["num_points"],
                          float(section["half_width"]))
        rng = np.random.default_rng(seed)
        trace = rfpe_run(eigenvalues, probabilities, float(section["weight"]), section["epochs"], prior, rng,
                         section["phi_strategy"], float(section["max_time"]), time_scale=float(section["time_scale"]),
                         posterior_shrink=float(section["posterior_shrink"]))
        table = TraceTable("rfpe", [])
        table.rows = [[record[c] for c in table.columns] for record in trace.records]
        outcome.traces["rfpe"] = table
        outcome.issues.extend(self_checker.check_rfpe(trace, section["epochs"]))

        selected = int(np.argmin([abs(trace.final_mean - v) for v in eigenvalues]))
        initial_error = float(min(abs(prior.mean - v) for v in eigenvalues))
        outcome.result = {
            "eigenvalues": eigenvalues,
            "probabilities": probabilities,
            "final_mean": trace.final_mean,
            "final_std": trace.final_prior.std,
            "initial_error": initial_error,
            "final_error": trace.errors[-1] if trace.errors else initial_error,
            "selected_eigenvalue": selected,
            "reinitializations": trace.reinitializations
        }
        outcome.metrics = {"errors": trace.errors, "initial_error": initial_error, "selected": selected}

    def _execute_folded(self, outcome: RunOutcome, seed: int):
        experiment = self.experiment
        section = experiment.folded
        context = build_context(experiment)
        oracle = context.oracle
        spec = build_ansatz(experiment)
        excitation = build_excitation(experiment, spec.num_qubits)
        rng = np.random.default_rng(seed)
        target = section["target_subspace"]
        if target >= len(oracle.subspaces):
            raise ValueError(f"目标子空间 {target} 超出子空间个数 {len(oracle.subspaces)}")

        theta_init = self._theta_ground(outcome, context, spec, section["theta_init"], seed, rng)
        epsilon = section["epsilon_shift"]
        strategy = "fixed"
        if epsilon is None:
            strategy = section["epsilon_strategy"]
            if strategy == "guess_energy":
                epsilon = guess_energy(oracle, excited_guess(spec, theta_init, excitation))
            else:
                epsilon = folded_shift(oracle, target, float(section["gap_fraction"]))
        swarm = build_swarm_config(experiment, spec.num_parameters, seed, with_init=False)
        result = run_folded_search(context.hamiltonian, spec, theta_init, excitation, FoldedConfig(epsilon, swarm),
                                   build_noise(experiment), rng, oracle, target)
        outcome.traces["swarm"] = swarm_table("swarm", result)
        outcome.issues.extend(self_checker.check_search(result, swarm.num_particles, "folded"))
        outcome.result.update(search_summary(result), epsilon_shift=epsilon, epsilon_strategy=strategy,
                              target_subspace=target)
        outcome.metrics = search_metrics(result, oracle, target)

    def _execute_bench_noise(self, outcome: RunOutcome, seed: int):
        experiment = self.experiment
        context = build_context(experiment)
        spec = build_ansatz(experiment)
        table = TraceTable("bench_noise", [])
        bench = []
        for index, sigma in enumerate(experiment.bench_noise["sigmas"]):
            noise = build_noise(experiment, float(sigma))
            # 同一噪声强度下两种方法共用初始化种子，目标函数的随机流由 stream 区分
            swarm = build_swarm_config(experiment, spec.num_parameters, derive_run_seed(seed, index))
            searches = (
                ("witness", run_ground_search),
                ("energy_only", run_energy_only_search),
            )
            for method_index, (method, search) in enumerate(searches):
                rng = np.random.default_rng([seed, index, method_index])
                result = search(context.hamiltonian, spec, context.t, swarm, noise, rng, context.oracle)
                outcome.issues.extend(self_checker.check_search(result, swarm.num_particles, f"{method}@{sigma}"))
                fidelity = result.subspace_fidelities[0]
                table.rows.append([float(sigma), method, fidelity, result.steps, result.trial_states])
                bench.append((float(sigma), method, fidelity))
        outcome.traces["bench_noise"] = table
        outcome.result = {"evolution_time": context.t,
                          "final_fidelities": [{"sigma": s, "method": m, "fidelity": f} for s, m, f in bench]}
        outcome.metrics = {"bench": bench}


def prepare_eigenstate(oracle: SpectrumOracle, index: int) -> StateVector:
    """参照本征态 (按特征值升序的第 index 个本征向量)"""
    return StateVector(oracle.eigensystem.dimension.bit_length() - 1, oracle.eigensystem.eigenvectors[:, index])


def folded_shift(oracle: SpectrumOracle, target: int, gap_fraction: float) -> float:
    """
    ε = λ_k + f·(λ_{k+1} - λ_k)
    k 为最高子空间时取 λ_k + f·(λ_k - λ_{k-1})，ε 仍位于 λ_k 上方且离 λ_{k-1} 更远
    """
    values = [s.eigenvalue for s in oracle.subspaces]
    if target + 1 < len(values):
        return values[target] + gap_fraction * (values[target + 1] - values[target])
    if target > 0:
        return values[target] + gap_fraction * (values[target] - values[target - 1])
    return values[target]


def guess_energy(oracle: SpectrumOracle, guess: StateVector) -> float:
    """初始猜测的能量期望 Σ_j |α_j|² λ_j"""
    weights = np.abs(eigenbasis_amplitudes(guess, oracle.eigensystem)) ** 2
    return float(weights @ oracle.eigensystem.eigenvalues)


def validate_hamiltonian(path: str) -> Dict[str, Any]:
    """validate 子命令: 量子比特数、项数与谱概要"""
    hamiltonian = load_hamiltonian(path)
    report: Dict[str, Any] = {"path": path, "qubits": hamiltonian.num_qubits, "terms": len(hamiltonian)}
    report["spectrum"] = spectrum_oracle(hamiltonian).summary()
    signal_bus.log_message.emit("SUCCESS", f"哈密顿量文件有效: {hamiltonian.num_qubits} 个量子比特，{len(hamiltonian)} 项", {
        "subspaces": len(report["spectrum"]["subspaces"])
    })
    return report
