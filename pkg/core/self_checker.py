# core/self_checker.py
from collections import Counter
from typing import Dict, List, Optional

from core.optimizer import SearchResult
from core.phase_estimation import IpeaResult, RfpeTrace, bits_to_fraction
from core.signal_bus import signal_bus
from core.witness import WitnessReadout

ENTROPY_TOLERANCE = 1e-9
FIDELITY_TOLERANCE = 1e-9


class SelfChecker:
    """运行结束后的不变量自检"""

    def __init__(self):
        self.enable_resource_check = True
        self.enable_trace_check = True
        self.enable_entropy_check = True

    @staticmethod
    def _build_issue(stage: str, issue_type: str, detail: str) -> Dict[str, str]:
        return {'stage': stage, 'type': issue_type, 'detail': detail}

    def check_search(self, result: SearchResult, num_particles: int, stage: str = "search") -> List[Dict]:
        issues = []
        if self.enable_resource_check and result.trial_states != num_particles * result.steps:
            issues.append(self._build_issue(stage, '资源计数不符',
                                            f"trial_states={result.trial_states} ≠ N×steps={num_particles * result.steps}"))
        if self.enable_trace_check:
            if len(result.fobj_trace) != result.steps:
                issues.append(self._build_issue(stage, '轨迹长度不符',
                                                f"fobj_trace={len(result.fobj_trace)}, steps={result.steps}"))
            if result.fidelity_trace is not None and len(result.fidelity_trace) != result.steps:
                issues.append(self._build_issue(stage, '轨迹长度不符',
                                                f"fidelity_trace={len(result.fidelity_trace)}, steps={result.steps}"))
        fidelities = list(result.fidelity_trace or []) + list(result.subspace_fidelities or [])
        bad = [f for f in fidelities if not -FIDELITY_TOLERANCE <= f <= 1 + FIDELITY_TOLERANCE]
        if bad:
            issues.append(self._build_issue(stage, '保真度越界', f"{bad[:3]}"))
        if result.subspace_fidelities is not None and sum(result.subspace_fidelities) > 1 + 1e-6:
            issues.append(self._build_issue(stage, '子空间保真度之和大于 1', f"{sum(result.subspace_fidelities)}"))
        if result.final_readout is not None:
            issues.extend(self.check_readout(result.final_readout, stage))
        return issues

    def check_readout(self, readout: WitnessReadout, stage: str = "readout") -> List[Dict]:
        if not self.enable_entropy_check:
            return []
        if readout.von_neumann_entropy < readout.linear_entropy - ENTROPY_TOLERANCE:
            return [self._build_issue(stage, '熵不等式不成立',
                                      f"S={readout.von_neumann_entropy} < S_L={readout.linear_entropy}")]
        return []

    def check_ipea(self, result: IpeaResult, m_bits: int, stage: str = "ipea") -> List[Dict]:
        issues = []
        if len(result.bits) != m_bits:
            issues.append(self._build_issue(stage, '比特数不符', f"{len(result.bits)} ≠ {m_bits}"))
        if bits_to_fraction(result.bits) != result.phase_fraction:
            issues.append(self._build_issue(stage, '相位分数无法由比特重建', result.bit_string))
        return issues

    def check_rfpe(self, trace: RfpeTrace, epochs: int, stage: str = "rfpe") -> List[Dict]:
        issues = []
        if len(trace.errors) != epochs:
            issues.append(self._build_issue(stage, '轨迹长度不符', f"{len(trace.errors)} ≠ {epochs}"))
        if not trace.final_prior.std > 0:
            issues.append(self._build_issue(stage, '后验标准差非正', f"{trace.final_prior.std}"))
        return issues

    @staticmethod
    def summarize(issues: List[Dict], label: Optional[str] = None) -> Dict:
        """统计问题并输出日志"""
        stats = Counter(issue['type'] for issue in issues)
        if issues:
            signal_bus.log_message.emit("WARNING", f"自检发现 {len(issues)} 个问题", {
                "run": label,
                "types": dict(stats)
            })
        return {'passed': not issues, 'issues': issues, 'stats': dict(stats)}


self_checker = SelfChecker()
