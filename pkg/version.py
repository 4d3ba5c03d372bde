"""
WAVES 模拟台 - 版本配置文件
统一管理版本号 (写入每个输出文件的可复现性头)
"""

VERSION = "1.0.0"
