# core/eigen_cache.py
import hashlib
import threading
from collections import OrderedDict
from typing import Any, Dict

from core.pauli_algebra import HermitianEigensystem, PauliSum, eigendecompose, format_pauli_sum
from core.signal_bus import signal_bus


class EigensystemCache:
    """特征分解缓存，按哈密顿量文本的哈希值索引"""

    def __init__(self, max_entries: int = 64):
        self.max_entries = max_entries
        self.cache: "OrderedDict[str, HermitianEigensystem]" = OrderedDict()
        self.hits = 0
        self.misses = 0
        # 单写多读: 构造在锁内完成
        self._lock = threading.Lock()

    def __repr__(self):
        return f"<EigensystemCache entries={len(self.cache)}>"

    @staticmethod
    def _get_key(pauli_sum: PauliSum) -> str:
        """生成哈密顿量的哈希值"""
        return hashlib.md5(format_pauli_sum(pauli_sum).encode('utf-8')).hexdigest()

    def get_eigensystem(self, pauli_sum: PauliSum) -> HermitianEigensystem:
        """获取缓存的特征分解，未命中时计算并缓存"""
        key = self._get_key(pauli_sum)
        with self._lock:
            cached = self.cache.get(key)
            if cached is not None:
                self.hits += 1
                self.cache.move_to_end(key)
                return cached

            self.misses += 1
            eigensystem = eigendecompose(pauli_sum)
            self.cache[key] = eigensystem
            if len(self.cache) > self.max_entries:
                self.cache.popitem(last=False)
            signal_bus.log_message.emit("DEBUG", "特征分解已缓存", {
                "qubits": pauli_sum.num_qubits,
                "terms": len(pauli_sum)
            })
            return eigensystem

    def clear(self):
        with self._lock:
            self.cache.clear()
            self.hits = 0
            self.misses = 0

    def get_cache_stats(self) -> Dict[str, Any]:
        """获取缓存统计信息"""
        return {
            'entries': len(self.cache),
            'hits': self.hits,
            'misses': self.misses
        }


# 全局缓存实例
eigen_cache = EigensystemCache()
