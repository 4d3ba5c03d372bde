# main.py
import argparse
import json
import sys

from version import VERSION

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG_ERROR = 2

LOG_ICONS = {
    "INFO": "🔵",
    "SUCCESS": "✅",
    "WARNING": "⚠️",
    "ERROR": "❌",
    "DEBUG": "🔍"
}


def check_dependencies():
    """检查依赖项"""
    try:
        import PySide6
        import hjson
        import mpmath
        import numpy
        import scipy
        return True
    except ImportError as e:
        print(f"缺少依赖项: {e}\n\n请安装所需的依赖包：\npip install -r requirements.txt", file=sys.stderr)
        return False


class ConsolePrinter:
    """把信号总线上的日志打印到终端 (与日志视图相同的图标)"""

    def __init__(self, quiet: bool = False, verbose: bool = False):
        self.quiet = quiet
        self.verbose = verbose

    def on_log_message(self, level: str, message: str, details: dict):
        if level == "DEBUG" and not self.verbose:
            return
        if level == "INFO" and self.quiet:
            return
        icon = LOG_ICONS.get(level, "⚪")
        detail_text = ""
        if details:
            detail_text = f" ({', '.join(f'{k}={v}' for k, v in details.items())})"
        stream = sys.stderr if level in ("WARNING", "ERROR") else sys.stdout
        print(f"{icon} {message}{detail_text}", file=stream, flush=True)


def build_parser() -> argparse.ArgumentParser:
    from core.config import MODES

    parser = argparse.ArgumentParser(prog="waves", description="WAVES 本征态见证模拟台")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for mode in MODES:
        sub = subparsers.add_parser(mode, help=f"运行 {mode} 实验")
        sub.add_argument("--config", help="hjson 实验配置文件")
        sub.add_argument("--seed", type=int, help="主种子 (u64)")
        sub.add_argument("--runs", type=int, help="运行次数，>1 时为批量运行")
        sub.add_argument("--out", help="输出目录")
        sub.add_argument("--workers", type=int, help="批量运行的并行数")
        sub.add_argument("--quiet", action="store_true", help="只显示警告与错误")
        sub.add_argument("--verbose", action="store_true", help="显示调试信息")

    validate = subparsers.add_parser("validate", help="校验哈密顿量文件或实验配置")
    validate.add_argument("--hamiltonian", help="Pauli 和文件")
    validate.add_argument("--config", help="hjson 实验配置文件")
    validate.add_argument("--mode", choices=MODES, default="ground", help="按此模式校验配置")
    validate.add_argument("--seed", type=int, help="主种子 (u64)")
    validate.add_argument("--quiet", action="store_true", help="只显示警告与错误")
    validate.add_argument("--verbose", action="store_true", help="显示调试信息")
    return parser


def run_validate(args) -> int:
    from core.config import ConfigError, load_experiment_config
    from core.experiment_executor import to_jsonable, validate_hamiltonian
    from core.pauli_algebra import DenseCapError, PauliFormatError
    from core.signal_bus import signal_bus

    if not args.hamiltonian and not args.config:
        signal_bus.log_message.emit("ERROR", "validate 需要 --hamiltonian 或 --config", {})
        return EXIT_CONFIG_ERROR

    report = {}
    try:
        if args.hamiltonian:
            report["hamiltonian"] = validate_hamiltonian(args.hamiltonian)
        if args.config:
            experiment = load_experiment_config(args.mode, args.config, {"seed": args.seed})
            report["config"] = {"mode": experiment.mode, "seed": experiment.seed, "valid": True}
            signal_bus.log_message.emit("SUCCESS", "配置有效", {"mode": experiment.mode})
    except ConfigError as e:
        signal_bus.log_message.emit("ERROR", str(e), {"violations": len(e.violations)})
        return EXIT_CONFIG_ERROR
    except (PauliFormatError, DenseCapError, OSError) as e:
        signal_bus.log_message.emit("ERROR", f"哈密顿量文件无效: {e}", {})
        return EXIT_CONFIG_ERROR

    print(json.dumps(to_jsonable(report), ensure_ascii=False, indent=2))
    return EXIT_OK


def run_mode(args) -> int:
    from core.config import ConfigError, load_experiment_config
    from core.experiment_executor import ExperimentExecutor
    from core.signal_bus import signal_bus

    overrides = {"seed": args.seed, "runs": args.runs, "output_dir": args.out, "workers": args.workers}
    try:
        experiment = load_experiment_config(args.command, args.config, overrides)
    except ConfigError as e:
        signal_bus.log_message.emit("ERROR", str(e), {"violations": len(e.violations)})
        return EXIT_CONFIG_ERROR
    except OSError as e:
        signal_bus.log_message.emit("ERROR", f"无法读取配置文件: {e}", {"config": args.config})
        return EXIT_CONFIG_ERROR

    executor = ExperimentExecutor(experiment)
    try:
        if experiment.runs > 1:
            result = executor.execute_task("run_batch", {"runs": experiment.runs})
        else:
            result = executor.execute_task("run")
    except ConfigError as e:
        signal_bus.log_message.emit("ERROR", str(e), {"violations": len(e.violations)})
        return EXIT_CONFIG_ERROR
    return result.get('exit_code', EXIT_FAILED)


def main(argv=None) -> int:
    """主函数"""
    if not check_dependencies():
        return EXIT_FAILED

    from PySide6.QtCore import QCoreApplication, Qt
    from core.signal_bus import signal_bus

    args = build_parser().parse_args(argv)

    # 无事件循环: 工作线程发出的日志直接在发出线程中打印
    app = QCoreApplication.instance() or QCoreApplication(["waves"])
    app.setApplicationName("waves")
    app.setApplicationVersion(VERSION)

    printer = ConsolePrinter(quiet=args.quiet, verbose=args.verbose)
    signal_bus.log_message.connect(printer.on_log_message, Qt.DirectConnection)
    try:
        if args.command == "validate":
            return run_validate(args)
        return run_mode(args)
    finally:
        signal_bus.log_message.disconnect(printer.on_log_message)


if __name__ == "__main__":
    sys.exit(main())
