"""输出文件格式与运行后自检"""
import json
from fractions import Fraction

import numpy as np

from core.file_tool import file_tool
from core.optimizer import SearchResult
from core.output_manager import SCHEMA_VERSION, TRACE_COLUMNS, OutputManager, TraceTable
from core.phase_estimation import IpeaResult, RfpePrior, RfpeTrace
from core.self_checker import SelfChecker
from core.witness import WitnessReadout

ECHO = {"mode": "ground", "seed": 5}


def make_result(**overrides) -> SearchResult:
    fields = dict(theta_best=np.zeros(2), theta_uncertainty=np.zeros(2), fobj_trace=[-1.0, -1.1],
                  fidelity_trace=[0.9, 0.95], steps=2, convergence_reason="Dispersion", trial_states=16,
                  subspace_fidelities=[0.95, 0.05])
    fields.update(overrides)
    return SearchResult(**fields)


class TestOutputManager:

    def test_trace_has_header_and_fixed_columns(self, tmp_path):
        manager = OutputManager(str(tmp_path))
        manager.create_structure()
        path = manager.write_trace(TraceTable("ipea", [[2, 1, 0, 1, 0.1], [1, 0, 1, 0, 0.9]]), 5, ECHO)
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
        assert lines[0].startswith("# tool waves-workbench")
        assert lines[1] == "# seed 5"
        assert json.loads(lines[2][len("# config "):]) == ECHO
        assert lines[3] == ",".join(TRACE_COLUMNS["ipea"])
        rows = file_tool.read_csv_rows(path)
        assert [row["bit"] for row in rows] == ["1", "0"]

    def test_none_written_as_empty(self, tmp_path):
        manager = OutputManager(str(tmp_path))
        path = manager.write_trace(TraceTable("swarm", [[1, -1.0, -1.0, 0.5, 1.25, 1.0, None]]), 5, ECHO)
        assert file_tool.read_csv_rows(path)[0]["fidelity"] == ""

    def test_batch_layout_and_merge(self, tmp_path):
        manager = OutputManager(str(tmp_path))
        manager.create_structure(batch=True)
        tables = [TraceTable("rfpe", [[1, 1.0, 0.0, 0, 0.1, 0.9, 0.4]]), None,
                  TraceTable("rfpe", [[1, 1.0, 0.2, 1, -0.1, 0.9, 0.4]])]
        for index, table in enumerate(tables):
            if table is not None:
                manager.write_trace(table, 5, ECHO, run_index=index)
        assert (tmp_path / "runs" / "run_0002" / "rfpe.csv").exists()
        merged = manager.merge_run_traces("rfpe", tables, 5, ECHO)
        rows = file_tool.read_csv_rows(merged)
        assert [row["run"] for row in rows] == ["0", "2"]
        assert list(rows[0].keys()) == ["run"] + TRACE_COLUMNS["rfpe"]

    def test_merge_without_rows(self, tmp_path):
        assert OutputManager(str(tmp_path)).merge_run_traces("rfpe", [None, None], 5, ECHO) is None

    def test_summary_is_versioned(self, tmp_path):
        manager = OutputManager(str(tmp_path))
        path = manager.write_summary({"mode": "ground", "success": True})
        with open(path, encoding="utf-8") as f:
            document = json.load(f)
        assert document["schema_version"] == SCHEMA_VERSION
        assert document["success"] is True
        run_path = manager.write_summary({"mode": "ground"}, run_index=3)
        assert run_path.endswith("run_0003/summary.json") or run_path.endswith("run_0003\\summary.json")


class TestSelfChecker:

    def test_consistent_result_passes(self):
        checker = SelfChecker()
        assert checker.check_search(make_result(), 8) == []

    def test_resource_and_trace_mismatch(self):
        checker = SelfChecker()
        issues = checker.check_search(make_result(trial_states=10, fobj_trace=[-1.0]), 8)
        assert {issue["type"] for issue in issues} == {"资源计数不符", "轨迹长度不符"}

    def test_fidelity_out_of_range(self):
        issues = SelfChecker().check_search(make_result(subspace_fidelities=[0.9, 0.4]), 8)
        assert any(issue["type"] == "子空间保真度之和大于 1" for issue in issues)

    def test_entropy_inequality(self):
        readout = WitnessReadout(energy=0.1, purity=0.6, von_neumann_entropy=0.1, linear_entropy=0.4)
        assert SelfChecker().check_readout(readout)
        checker = SelfChecker()
        checker.enable_entropy_check = False
        assert checker.check_readout(readout) == []

    def test_ipea_reconstruction(self):
        good = IpeaResult(bits=(1, 0, 1), phase_fraction=Fraction(5, 8), eigenvalue_estimate=0.0)
        bad = IpeaResult(bits=(1, 0, 1), phase_fraction=Fraction(1, 2), eigenvalue_estimate=0.0)
        assert SelfChecker().check_ipea(good, 3) == []
        assert SelfChecker().check_ipea(bad, 4)

    def test_rfpe_length(self):
        trace = RfpeTrace(errors=[0.1, 0.05], records=[], final_prior=RfpePrior(0.0, 0.1))
        assert SelfChecker().check_rfpe(trace, 2) == []
        assert SelfChecker().check_rfpe(trace, 3)

    def test_summarize(self, log_messages):
        summary = SelfChecker.summarize([{"stage": "s", "type": "t", "detail": "d"}] * 2, label="run 0")
        assert summary["passed"] is False
        assert summary["stats"] == {"t": 2}
        assert any(level == "WARNING" for level, _, _ in log_messages)
        assert SelfChecker.summarize([])["passed"] is True
