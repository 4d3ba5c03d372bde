# core/file_tool.py
import csv
import json
import re
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import hjson
from PySide6.QtCore import QObject

from core.signal_bus import signal_bus


class FileTool(QObject):

    def __init__(self, parent=None):
        super().__init__(parent)

    @staticmethod
    def read_text_file(file_path: str) -> str:
        with open(file_path, 'r', encoding='utf-8-sig') as f:
            return f.read()

    def read_config_file(self, file_path: str) -> Dict[str, Any]:
        """读取 hjson 配置文件，自动处理注释，尾随逗号，BOM格式问题"""
        content = self.read_text_file(file_path)
        try:
            data = hjson.loads(content)
        except Exception as e:
            signal_bus.log_message.emit("WARNING", f"hjson 解析失败，尝试清理控制字符: {file_path}", {'错误': str(e)})
            # 制表符以外的控制字符
            cleaned = re.sub(r'[\x00-\x08\x0B\x0C\x0E-\x1F\x7F]', '', content.replace('\t', '  '))
            try:
                data = hjson.loads(cleaned)
            except Exception as e2:
                signal_bus.log_message.emit("ERROR", f"配置文件解析失败: {file_path}", {'错误': str(e2)})
                raise ValueError(f"配置文件解析失败 {file_path}: {e2}") from e2
        if not isinstance(data, dict):
            raise ValueError(f"配置文件顶层必须是对象: {file_path}")
        return to_plain(data)

    @staticmethod
    def save_json_file(data: Dict, target_path: str) -> bool:
        path = Path(target_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(json.dumps(data, ensure_ascii=False, indent=2))
            f.write('\n')
        return True

    @staticmethod
    def save_text_file(content: str, target_path: str) -> bool:
        path = Path(target_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(content)
        return True

    @staticmethod
    def write_csv_file(target_path: str, header_lines: Sequence[str], columns: Sequence[str],
                       rows: Iterable[Sequence[Any]]) -> int:
        """
        写入带注释头的 CSV: 每个 header_lines 元素一行 '# ...'，随后是列名与数据行
        浮点数按 repr 输出，None 写为空串
        """
        path = Path(target_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        count = 0
        with open(path, 'w', encoding='utf-8', newline='') as f:
            for line in header_lines:
                f.write(f"# {line}\n")
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(columns)
            for row in rows:
                writer.writerow(['' if value is None else value for value in row])
                count += 1
        return count

    @staticmethod
    def read_csv_rows(file_path: str) -> List[Dict[str, str]]:
        """读取 CSV 数据行，跳过 '#' 注释头"""
        with open(file_path, 'r', encoding='utf-8') as f:
            lines = [line for line in f if not line.startswith('#')]
        return list(csv.DictReader(lines))


def to_plain(value: Any) -> Any:
    """hjson 的 OrderedDict 转成普通 dict/list"""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, list):
        return [to_plain(v) for v in value]
    return value


# 创建全局实例
file_tool = FileTool()
