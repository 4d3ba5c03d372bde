# core/output_manager.py
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from core.file_tool import file_tool
from core.signal_bus import signal_bus
from version import VERSION

SCHEMA_VERSION = 1
TOOL_NAME = "waves-workbench"

# 各类轨迹文件的固定列顺序
TRACE_COLUMNS: Dict[str, List[str]] = {
    "swarm": ["step", "mean_fobj", "best_fobj", "sigma_max", "weight_a", "weight_b", "fidelity"],
    "ground_swarm": ["step", "mean_fobj", "best_fobj", "sigma_max", "weight_a", "weight_b", "fidelity"],
    "ipea": ["bit_index", "bit", "zeros", "ones", "p_zero"],
    "rfpe": ["epoch", "t", "phi", "datum", "posterior_mean", "posterior_std", "error"],
    "spectrum": ["index", "eigenvalue", "subspace", "subspace_dimension"],
    "bench_noise": ["sigma", "method", "final_fidelity", "steps", "trial_states"],
    "aggregate_fidelity": ["step", "runs", "mean", "median", "lower", "upper"],
    "aggregate_rfpe": ["epoch", "runs", "median_error", "lower", "upper"],
    "aggregate_bench_noise": ["sigma", "method", "runs", "mean", "median", "lower", "upper"],
    "collapse": ["subspace", "eigenvalue", "count", "fraction", "mean_fidelity"],
    "estimates": ["bit_string", "eigenvalue_estimate", "count", "fraction"],
}


@dataclass
class TraceTable:
    name: str
    rows: List[List[Any]]

    @property
    def columns(self) -> List[str]:
        return TRACE_COLUMNS[self.name]


class OutputManager:
    """实验输出目录管理: 轨迹 CSV、单次运行文件与汇总 JSON"""

    def __init__(self, output_dir: str):
        self.output_dir = Path(output_dir)
        self.output_structure = {
            'traces': '轨迹 CSV (批量运行时为按序号合并后的结果)',
            'runs': '批量运行的单次输出',
        }

    def create_structure(self, batch: bool = False) -> str:
        """创建输出目录结构"""
        try:
            os.makedirs(self.output_dir, exist_ok=True)
            for folder in self.output_structure.keys():
                if folder == 'runs' and not batch:
                    continue
                (self.output_dir / folder).mkdir(parents=True, exist_ok=True)
            signal_bus.log_message.emit("DEBUG", "输出目录已就绪", {"output_dir": str(self.output_dir)})
            return str(self.output_dir)
        except Exception as e:
            signal_bus.log_message.emit("ERROR", "创建输出目录失败", {
                "error": str(e),
                "output_dir": str(self.output_dir)
            })
            raise

    def get_folder_path(self, folder_type: str, run_index: Optional[int] = None) -> Path:
        if folder_type == 'runs' and run_index is not None:
            return self.output_dir / 'runs' / f"run_{run_index:04d}"
        return self.output_dir / folder_type

    @staticmethod
    def header_lines(seed: int, config_echo: Dict[str, Any], run_index: Optional[int] = None) -> List[str]:
        """可复现性头: 工具版本、种子与完整配置回显"""
        lines = [f"tool {TOOL_NAME} {VERSION}", f"seed {seed}"]
        if run_index is not None:
            lines.append(f"run {run_index}")
        lines.append("config " + json.dumps(config_echo, sort_keys=True, ensure_ascii=False))
        return lines

    def write_trace(self, table: TraceTable, seed: int, config_echo: Dict[str, Any],
                    run_index: Optional[int] = None) -> str:
        folder = self.get_folder_path('runs' if run_index is not None else 'traces', run_index)
        path = folder / f"{table.name}.csv"
        count = file_tool.write_csv_file(str(path), self.header_lines(seed, config_echo, run_index),
                                         table.columns, table.rows)
        signal_bus.log_message.emit("DEBUG", f"轨迹已写入: {path.name}", {"rows": count})
        return str(path)

    def merge_run_traces(self, name: str, tables_by_run: Sequence[Optional[TraceTable]], seed: int,
                         config_echo: Dict[str, Any]) -> Optional[str]:
        """按运行序号合并单次轨迹，首列为 run"""
        rows = []
        for run_index, table in enumerate(tables_by_run):
            if table is None:
                continue
            rows.extend([run_index] + list(row) for row in table.rows)
        if not rows:
            return None
        path = self.get_folder_path('traces') / f"{name}.csv"
        file_tool.write_csv_file(str(path), self.header_lines(seed, config_echo),
                                 ["run"] + TRACE_COLUMNS[name], rows)
        return str(path)

    def write_summary(self, summary: Dict[str, Any], run_index: Optional[int] = None) -> str:
        document = {"schema_version": SCHEMA_VERSION, "tool": TOOL_NAME, "version": VERSION}
        document.update(summary)
        if run_index is not None:
            path = self.get_folder_path('runs', run_index) / "summary.json"
        else:
            path = self.output_dir / "summary.json"
        file_tool.save_json_file(document, str(path))
        signal_bus.log_message.emit("SUCCESS", f"汇总已保存: {path}", {})
        return str(path)
