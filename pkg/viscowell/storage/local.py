# coding=utf-8
"""
本地文件存储

轨迹 CSV、汇总 JSON、相图 CSV、包络 CSV 的读写，以及初值场与表格核的导入。
所有写入都落在 base_dir 下，目录按需创建。
"""

import csv
import json
import logging
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from viscowell.core.errors import DataFileError
from viscowell.physics.models import CSV_COLUMNS, Trajectory
from viscowell.physics.weighted_space import Grid, check_field, derivative

logger = logging.getLogger(__name__)

TRAJECTORY_FILE = "trajectory.csv"
SUMMARY_FILE = "summary.json"
PHASE_FILE = "phase.csv"
ENVELOPE_FILE = "envelope.csv"
FIELD_FILE = "field.csv"

PHASE_COLUMNS = [
    "amplitude", "E0", "I0", "classification", "outcome", "detected_time", "Tstar_bound", "error",
]


def to_jsonable(value: Any) -> Any:
    """
    转换为可 JSON 序列化的对象

    numpy 标量/数组转为 Python 类型，带 to_dict 的对象调用 to_dict，
    NaN/Inf 写为 null。
    """
    if hasattr(value, "to_dict") and callable(value.to_dict):
        return to_jsonable(value.to_dict())
    if is_dataclass(value) and not isinstance(value, type):
        return to_jsonable(asdict(value))
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def _load_table(path: Path, min_columns: int) -> np.ndarray:
    """
    读取逗号分隔的数值表（首行表头，# 开头为注释）

    Raises:
        DataFileError: 文件不存在、无法解析、为空或列数不足
    """
    if not path.exists():
        raise DataFileError(str(path), "文件不存在")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, comments="#")
    except (ValueError, OSError) as e:
        raise DataFileError(str(path), str(e)) from e
    if data.size == 0:
        raise DataFileError(str(path), "没有数据行")
    if data.shape[1] < min_columns:
        raise DataFileError(str(path), f"至少需要 {min_columns} 列，实际 {data.shape[1]} 列")
    return data


class LocalStorage:
    """
    本地存储

    使用示例:
        storage = LocalStorage("output/2025-01-02/03-04-05")
        storage.write_trajectory(trajectory)
        storage.write_json(summary)
    """

    def __init__(self, base_dir: str = "output"):
        """
        Args:
            base_dir: 输出目录
        """
        self.base_dir = Path(base_dir)

    def _path(self, name: str) -> Path:
        self.base_dir.mkdir(parents=True, exist_ok=True)
        return self.base_dir / name

    # ========================================
    # 写入
    # ========================================

    def write_trajectory(self, trajectory: Trajectory, name: str = TRAJECTORY_FILE) -> Path:
        """轨迹 CSV，列顺序 t,E,I,J,kinetic,gcirc,norm_H2,norm_ux_H2,norm_p_p"""
        path = self._path(name)
        rows = np.array([r.to_row() for r in trajectory.records], dtype=float).reshape(-1, len(CSV_COLUMNS))
        np.savetxt(path, rows, fmt="%.17g", delimiter=",", header=",".join(CSV_COLUMNS), comments="")
        logger.info("轨迹已写入 %s（%d 行）", path, rows.shape[0])
        return path

    def write_json(self, data: Any, name: str = SUMMARY_FILE) -> Path:
        path = self._path(name)
        text = json.dumps(to_jsonable(data), ensure_ascii=False, indent=2, allow_nan=False)
        path.write_text(text + "\n", encoding="utf-8")
        return path

    def write_phase_csv(self, rows: Sequence[Dict[str, Any]], name: str = PHASE_FILE) -> Path:
        """相图 CSV，每个振幅一行，按输入顺序"""
        path = self._path(name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=PHASE_COLUMNS, extrasaction="ignore")
            writer.writeheader()
            for row in rows:
                clean = {}
                for key in PHASE_COLUMNS:
                    value = to_jsonable(row.get(key))
                    clean[key] = "" if value is None else (repr(value) if isinstance(value, float) else value)
                writer.writerow(clean)
        return path

    def write_envelope_csv(self, times, energies, envelope_values, name: str = ENVELOPE_FILE) -> Path:
        """包络 CSV (t, E, envelope)"""
        path = self._path(name)
        table = np.column_stack([
            np.asarray(times, dtype=float),
            np.asarray(energies, dtype=float),
            np.asarray(envelope_values, dtype=float),
        ])
        np.savetxt(path, table, fmt="%.17g", delimiter=",", header="t,E,envelope", comments="")
        return path

    def write_field_csv(self, grid: Grid, u, name: str = FIELD_FILE) -> Path:
        """场导出 (x, u, u_x)，read_field 只读取前两列"""
        path = self._path(name)
        values = check_field(grid, u)
        table = np.column_stack([grid.nodes, values, derivative(grid, values)])
        np.savetxt(path, table, fmt="%.17g", delimiter=",", header="x,u,u_x", comments="")
        return path

    # ========================================
    # 读取
    # ========================================

    @staticmethod
    def read_trajectory(path: str) -> Dict[str, np.ndarray]:
        """
        读取轨迹 CSV

        Returns:
            列名 -> 数组

        Raises:
            DataFileError: 文件不存在、为空或缺少 t/E 列
        """
        file_path = Path(path)
        if not file_path.exists():
            raise DataFileError(path, "文件不存在")
        with open(file_path, encoding="utf-8") as f:
            header = f.readline().strip()
        columns = [c.strip() for c in header.split(",")] if header else []
        if "t" not in columns or "E" not in columns:
            raise DataFileError(path, "缺少 t 或 E 列")
        data = _load_table(file_path, len(columns))
        return {name: data[:, i] for i, name in enumerate(columns)}

    @staticmethod
    def read_field(path: str, grid: Grid) -> np.ndarray:
        """
        读取初值场

        两列 (x, u) 时线性插值到网格节点；单列时按节点值读取（长度须为 n+1）。
        """
        data = _load_table(Path(path), 1)
        if data.shape[1] >= 2:
            x, u = data[:, 0], data[:, 1]
            if np.any(np.diff(x) <= 0):
                raise DataFileError(path, "x 列必须严格递增")
            return np.interp(grid.nodes, x, u)
        return check_field(grid, data[:, 0])

    @staticmethod
    def read_kernel_table(path: str) -> Tuple[np.ndarray, np.ndarray]:
        """读取表格核 (t, g)"""
        data = _load_table(Path(path), 2)
        return data[:, 0].copy(), data[:, 1].copy()


def read_phase_csv(path: str) -> List[Dict[str, str]]:
    """读取相图 CSV（原始字符串）"""
    file_path = Path(path)
    if not file_path.exists():
        raise DataFileError(path, "文件不存在")
    with open(file_path, encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))
