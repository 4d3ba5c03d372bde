# core/signal_bus.py
from PySide6.QtCore import QObject, Signal


class SignalBus(QObject):
    """全局信号总线"""
    # 所有模块共用的日志通道
    log_message = Signal(str, str, dict)   # 级别('INFO', 'SUCCESS', 'WARNING', 'ERROR', 'DEBUG'), 消息, 详情

    # optimizer
    swarm_step_recorded = Signal(dict)  # 每步记录: step, mean_fobj, best_fobj, sigma_max, fidelity
    # phase_estimation
    ipea_bit_recorded = Signal(dict)  # 每比特记录: bit_index, bit, zeros, ones
    rfpe_epoch_recorded = Signal(dict)  # 每轮记录: epoch, t, phi, posterior_mean, posterior_std, error

    # experiment_executor
    run_started = Signal(int, str)  # 运行开始: 运行序号, 模式
    run_completed = Signal(int, bool, str)  # 运行完成: 运行序号, 是否成功, 消息


# 所有模块共享同一个实例
signal_bus = SignalBus()
