"""各模式的端到端运行、批量聚合与可复现性"""
import json

import numpy as np
import pytest

from core.config import build_experiment_config, config, deep_merge, get_resource_path
from core.experiment_executor import (ExperimentExecutor, band, derive_run_seed, folded_shift, guess_energy,
                                      pad_traces, resolve_input_path, validate_hamiltonian)
from core.file_tool import file_tool
from core.hamiltonians import exciton_hamiltonian, load_hamiltonian, spectrum_oracle
from core.statevector import basis_state


def make_experiment(mode, tmp_path, **overrides):
    data = deep_merge(config.load_defaults(), {
        "seed": 7,
        "output_dir": str(tmp_path / "out"),
        "workers": 1,
        "noise": {"tomography": {"enabled": False}},
    })
    data = deep_merge(data, overrides)
    return build_experiment_config(mode, data)


def read_summary(tmp_path, run_index=None):
    path = tmp_path / "out" / "summary.json"
    if run_index is not None:
        path = tmp_path / "out" / "runs" / f"run_{run_index:04d}" / "summary.json"
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def trace_rows(tmp_path, name):
    return file_tool.read_csv_rows(str(tmp_path / "out" / "traces" / f"{name}.csv"))


def test_derive_run_seed():
    assert derive_run_seed(7, 0) == derive_run_seed(7, 0)
    seeds = {derive_run_seed(7, i) for i in range(50)}
    assert len(seeds) == 50
    assert derive_run_seed(7, 0) != derive_run_seed(8, 0)


def test_band_and_padding():
    padded = pad_traces([[0.1, 0.5], [0.2, 0.4, 0.9]])
    assert padded.tolist() == [[0.1, 0.5, 0.5], [0.2, 0.4, 0.9]]
    lower, upper = band(np.arange(101.0))
    assert np.isclose(lower, 16.25) and np.isclose(upper, 83.75)


def test_folded_shift():
    oracle = spectrum_oracle(exciton_hamiltonian())
    assert np.isclose(folded_shift(oracle, 0, 0.01), 0.183 + 0.01 * 0.074)
    assert np.isclose(folded_shift(oracle, 1, 0.01), 0.257 + 0.01 * 0.074)


def test_folded_shift_above_top_subspace():
    oracle = spectrum_oracle(load_hamiltonian(str(get_resource_path("resources/hamiltonians/two_subspace.txt"))))
    assert np.isclose(folded_shift(oracle, 1, 0.01), 1.02)
    assert np.isclose(folded_shift(oracle, 0, 0.5), 0.0)


def test_guess_energy():
    oracle = spectrum_oracle(exciton_hamiltonian())
    assert np.isclose(guess_energy(oracle, basis_state(1, "0")), 0.22)
    assert np.isclose(guess_energy(oracle, oracle.subspaces[1].basis[0]), 0.257)


def test_resolve_input_path_falls_back_to_resources(tmp_path):
    experiment = make_experiment("spectrum", tmp_path)
    resolved = resolve_input_path("hamiltonians/exciton.txt", experiment)
    assert resolved == str(get_resource_path("resources") / "hamiltonians/exciton.txt")


def test_validate_hamiltonian():
    report = validate_hamiltonian(str(get_resource_path("resources/hamiltonians/two_level_pair.txt")))
    assert report["qubits"] == 2
    assert report["terms"] == 3
    assert len(report["spectrum"]["eigenvalues"]) == 4


def test_unknown_task(tmp_path):
    result = ExperimentExecutor(make_experiment("spectrum", tmp_path)).execute_task("explode")
    assert result["exit_code"] == 2


class TestSingleRun:

    def test_spectrum(self, tmp_path):
        result = ExperimentExecutor(make_experiment("spectrum", tmp_path)).execute_task("run")
        assert result["exit_code"] == 0
        rows = trace_rows(tmp_path, "spectrum")
        assert [float(row["eigenvalue"]) for row in rows] == pytest.approx([0.183, 0.257])
        summary = read_summary(tmp_path)
        assert summary["schema_version"] == 1
        assert summary["result"]["eigenvalues"] == pytest.approx([0.183, 0.257])
        assert summary["self_check"]["passed"] is True

    def test_ipea_exact_readout(self, tmp_path):
        experiment = make_experiment("ipea", tmp_path, hamiltonian={"source": "file", "file": "hamiltonians/exciton.txt"})
        assert ExperimentExecutor(experiment).execute_task("run")["exit_code"] == 0
        assert len(trace_rows(tmp_path, "ipea")) == 32
        result = read_summary(tmp_path)["result"]
        assert result["bits_match"] is True
        assert len(result["bits"]) == 32
        assert result["alias_distance"] <= 2 * np.pi / (26 * 2 ** 32) + 1e-9

    def test_ground(self, tmp_path):
        experiment = make_experiment("ground", tmp_path)
        assert ExperimentExecutor(experiment).execute_task("run")["exit_code"] == 0
        result = read_summary(tmp_path)["result"]
        assert len(trace_rows(tmp_path, "swarm")) == result["steps"]
        assert result["trial_states"] == 8 * result["steps"]
        assert 0.0 <= result["ground_fidelity"] <= 1.0
        assert result["evolution_time"] == 26.0

    def test_excited_with_given_theta(self, tmp_path):
        experiment = make_experiment("excited", tmp_path, excited={
            "theta_ground": [1.5707963267948966, 0.0], "target_subspace": 1})
        assert ExperimentExecutor(experiment).execute_task("run")["exit_code"] == 0
        result = read_summary(tmp_path)["result"]
        assert result["energy_evaluations"] == 0
        assert result["theta_ground"] == pytest.approx([np.pi / 2, 0.0])

    def test_excited_runs_ground_stage_first(self, tmp_path):
        experiment = make_experiment("excited", tmp_path, swarm={"max_steps": 15})
        assert ExperimentExecutor(experiment).execute_task("run")["exit_code"] == 0
        assert (tmp_path / "out" / "traces" / "ground_swarm.csv").exists()
        assert "ground_stage" in read_summary(tmp_path)["result"]

    def test_rfpe_defaults_to_ground_energy(self, tmp_path):
        experiment = make_experiment("rfpe", tmp_path, rfpe={"epochs": 50})
        assert ExperimentExecutor(experiment).execute_task("run")["exit_code"] == 0
        result = read_summary(tmp_path)["result"]
        assert result["eigenvalues"] == pytest.approx([0.183])
        assert len(trace_rows(tmp_path, "rfpe")) == 50

    def test_folded(self, tmp_path):
        experiment = make_experiment("folded", tmp_path, swarm={"max_steps": 20})
        assert ExperimentExecutor(experiment).execute_task("run")["exit_code"] == 0
        result = read_summary(tmp_path)["result"]
        assert np.isclose(result["epsilon_shift"], 0.257 + 0.01 * 0.074)
        assert result["epsilon_strategy"] == "gap"
        assert result["target_subspace"] == 1

    def test_folded_guess_energy_strategy(self, tmp_path):
        experiment = make_experiment("folded", tmp_path, swarm={"max_steps": 5},
                                     folded={"epsilon_strategy": "guess_energy"})
        assert ExperimentExecutor(experiment).execute_task("run")["exit_code"] == 0
        result = read_summary(tmp_path)["result"]
        assert result["epsilon_strategy"] == "guess_energy"
        assert 0.183 - 1e-9 <= result["epsilon_shift"] <= 0.257 + 1e-9

    def test_bench_noise(self, tmp_path):
        experiment = make_experiment("bench-noise", tmp_path, bench_noise={"sigmas": [0.0, 0.05]},
                                     swarm={"max_steps": 10})
        assert ExperimentExecutor(experiment).execute_task("run")["exit_code"] == 0
        rows = trace_rows(tmp_path, "bench_noise")
        assert [(row["sigma"], row["method"]) for row in rows] == [
            ("0.0", "witness"), ("0.0", "energy_only"), ("0.05", "witness"), ("0.05", "energy_only")]

    def test_failure_is_recorded(self, tmp_path, log_messages):
        experiment = make_experiment("ipea", tmp_path, ipea={"eigenstate_index": 5})
        result = ExperimentExecutor(experiment).execute_task("run")
        assert result["exit_code"] == 1
        summary = read_summary(tmp_path)
        assert summary["success"] is False
        assert "ValueError" in summary["error"]
        assert any(level == "ERROR" for level, _, _ in log_messages)


class TestBatch:

    def test_rfpe_batch_outputs(self, tmp_path):
        experiment = make_experiment("rfpe", tmp_path, rfpe={
            "epochs": 40, "eigenvalues": [-0.5, 0.5], "probabilities": [0.5, 0.5]})
        result = ExperimentExecutor(experiment).execute_task("run_batch", {"runs": 4})
        assert result["exit_code"] == 0
        summary = read_summary(tmp_path)
        assert summary["runs"] == 4 and summary["successes"] == 4
        assert summary["run_seeds"] == [derive_run_seed(7, i) for i in range(4)]
        assert sum(summary["aggregate"]["selection_frequencies"].values()) == pytest.approx(1.0)
        assert len(trace_rows(tmp_path, "aggregate_rfpe")) == 40
        merged = trace_rows(tmp_path, "rfpe")
        assert len(merged) == 160
        assert read_summary(tmp_path, 2)["seed"] == derive_run_seed(7, 2)

    def test_parallel_matches_sequential(self, tmp_path, qt_app):
        rows = []
        for workers in (1, 3):
            out = tmp_path / f"w{workers}"
            experiment = make_experiment("ground", out, workers=workers, swarm={"max_steps": 10})
            assert ExperimentExecutor(experiment).execute_task("run_batch", {"runs": 4})["exit_code"] == 0
            rows.append(trace_rows(out, "swarm"))
        assert rows[0] == rows[1]

    def test_search_aggregate_tables(self, tmp_path):
        experiment = make_experiment("excited", tmp_path, excited={
            "theta_ground": [1.5707963267948966, 0.0], "target_subspace": 1}, swarm={"max_steps": 20})
        assert ExperimentExecutor(experiment).execute_task("run_batch", {"runs": 3})["exit_code"] == 0
        aggregate = read_summary(tmp_path)["aggregate"]
        assert aggregate["runs"] == 3
        assert 0.0 <= aggregate["mean_final_fidelity"] <= 1.0
        collapse = trace_rows(tmp_path, "collapse")
        assert sum(int(row["count"]) for row in collapse) == 3
        assert trace_rows(tmp_path, "aggregate_fidelity")[0]["runs"] == "3"

    def test_ipea_estimates_table(self, tmp_path):
        experiment = make_experiment("ipea", tmp_path, ipea={"m_bits": 8})
        assert ExperimentExecutor(experiment).execute_task("run_batch", {"runs": 2})["exit_code"] == 0
        estimates = trace_rows(tmp_path, "estimates")
        assert len(estimates) == 1
        assert estimates[0]["count"] == "2"

    def test_failed_runs_reported(self, tmp_path):
        experiment = make_experiment("ipea", tmp_path, ipea={"eigenstate_index": 5})
        result = ExperimentExecutor(experiment).execute_task("run_batch", {"runs": 2})
        assert result["exit_code"] == 1
        failures = read_summary(tmp_path)["failures"]
        assert [f["run"] for f in failures] == [0, 1]
