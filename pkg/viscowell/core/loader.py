# coding=utf-8
"""
配置加载模块

负责从 YAML / 平面 key=value 配置文件和环境变量加载实验配置。
返回的字典使用大写 section / key，例如 config["KERNEL"]["TYPE"]。
所有取值范围在加载时检查，越界时抛出带键名（平面格式还带行号）的 ConfigurationError。
"""

import math
import os
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import yaml

from .config import parse_flat_config
from .errors import ConfigurationError, DataFileError, InvalidParameterError
from .validators import (
    parse_bool,
    parse_float,
    parse_int,
    parse_str,
    require_non_negative,
    require_open_interval,
    require_positive,
    validate_choice,
    validate_delta,
    validate_exponent_r,
    validate_source_exponent,
    validate_threshold_ratio,
)


DEFAULT_CONFIG_PATH = "config/config.yaml"
DEFAULT_SEED = 20240601
# 显式格式在 dt ≈ 0.86h 处失稳，留出余量
MAX_CFL = 0.85

KERNEL_TYPES = ["exponential", "polynomial", "logmixed", "power_xi", "tabulated", "zero"]
INIT_FAMILIES = ["quadratic", "smooth", "custom"]
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

KNOWN_KEYS = {
    "app": {"timezone", "debug", "log_level"},
    "problem": {"p", "a", "source_enabled"},
    "kernel": {"type", "g0", "eta", "c0", "q", "r", "m", "scale", "table_path"},
    "grid": {"ell", "n"},
    "time": {"dt", "cfl", "t", "record_every"},
    "init": {"family", "amplitude", "velocity_scale", "custom_path"},
    "analysis": {
        "delta", "blowup_threshold_ratio", "fit_t0", "seed", "cstar_starts",
        "certify_blowup", "envelope_slack",
    },
    "output": {"dir"},
}


def _get_env_bool(key: str) -> Optional[bool]:
    """从环境变量获取布尔值，如果未设置返回 None"""
    value = os.environ.get(key, "").strip().lower()
    if not value:
        return None
    return value in ("true", "1")


def _get_env_int_or_none(key: str) -> Optional[int]:
    """从环境变量获取整数值，未设置或无法解析时返回 None"""
    value = os.environ.get(key, "").strip()
    if not value:
        return None
    try:
        return int(value)
    except ValueError:
        return None


def _get_env_str(key: str, default: str = "") -> str:
    """从环境变量获取字符串值"""
    return os.environ.get(key, "").strip() or default


class _SectionReader:
    """
    读取单个配置段并把解析/范围错误转换为 ConfigurationError

    错误消息包含 section.key、原始值和约束；平面格式附带行号。
    """

    def __init__(self, raw: Dict[str, Any], name: str, line_map: Dict[str, int]):
        section = raw.get(name) or {}
        if not isinstance(section, dict):
            raise ConfigurationError(f"配置段 {name} 必须是映射")
        self.name = name
        self.section = {str(k).lower(): v for k, v in section.items()}
        self.line_map = line_map

    def line_of(self, key: str) -> Optional[int]:
        return self.line_map.get(f"{self.name}.{key}")

    def fail(self, key: str, message: str, suggestion: Optional[str] = None) -> ConfigurationError:
        return ConfigurationError(
            f"{self.name}.{key}: {message}",
            suggestion=suggestion,
            line=self.line_of(key),
        )

    def get(self, key: str, default: Any, parse: Callable[[Any, str], Any],
            check: Optional[Callable[[Any], Any]] = None) -> Any:
        """取值、转换并检查；缺省时使用 default（default 不再检查）"""
        if key not in self.section or self.section[key] is None:
            if default is None:
                return None
            value = default
        else:
            try:
                value = parse(self.section[key], f"{self.name}.{key}")
            except InvalidParameterError as e:
                raise self.fail(key, e.message, e.suggestion)
        if check is not None:
            try:
                check(value)
            except InvalidParameterError as e:
                raise self.fail(key, e.message, e.suggestion)
        return value


def _text(value: Any, _name: str = "") -> str:
    return parse_str(value)


def _check_unknown_keys(raw: Dict[str, Any], line_map: Dict[str, int]) -> None:
    """拒绝未知的配置段和配置键（拼写错误不会被静默忽略）"""
    for section, values in raw.items():
        section_name = str(section).lower()
        if section_name not in KNOWN_KEYS:
            raise ConfigurationError(
                f"未知配置段 {section_name}",
                suggestion=f"可用配置段: {', '.join(sorted(KNOWN_KEYS))}",
            )
        if values is not None and not isinstance(values, dict):
            raise ConfigurationError(f"配置段 {section_name} 必须是映射")
        for key in (values or {}):
            key_name = str(key).lower()
            if key_name not in KNOWN_KEYS[section_name]:
                raise ConfigurationError(
                    f"未知配置键 {section_name}.{key_name}",
                    suggestion=f"{section_name} 段可用键: {', '.join(sorted(KNOWN_KEYS[section_name]))}",
                    line=line_map.get(f"{section_name}.{key_name}"),
                )


def _load_app_config(raw: Dict, line_map: Dict[str, int]) -> Dict:
    """加载应用配置"""
    reader = _SectionReader(raw, "app", line_map)
    debug_env = _get_env_bool("DEBUG")
    level = _get_env_str("LOG_LEVEL") or reader.get("log_level", "INFO", _text)
    level = level.upper()
    if level not in LOG_LEVELS:
        raise reader.fail("log_level", f"不支持的日志级别 {level}", f"可选值: {', '.join(LOG_LEVELS)}")
    return {
        "TIMEZONE": _get_env_str("TIMEZONE") or reader.get("timezone", "Asia/Shanghai", _text),
        "DEBUG": debug_env if debug_env is not None else reader.get("debug", False, parse_bool),
        "LOG_LEVEL": level,
    }


def _load_problem_config(raw: Dict, line_map: Dict[str, int]) -> Dict:
    """加载方程参数配置"""
    reader = _SectionReader(raw, "problem", line_map)
    return {
        "P": reader.get("p", 2.5, parse_float, validate_source_exponent),
        "A": reader.get("a", 0.0, parse_float, lambda v: require_non_negative(v, "a")),
        "SOURCE_ENABLED": reader.get("source_enabled", True, parse_bool),
    }


def _load_kernel_config(raw: Dict, line_map: Dict[str, int]) -> Dict:
    """
    加载松弛核配置

    所有参数键都会被标准化保存（便于往返输出），
    但只对当前 kernel.type 用到的参数做范围检查。
    """
    reader = _SectionReader(raw, "kernel", line_map)
    kind = reader.get(
        "type", "exponential", lambda v, n: parse_str(v).lower(),
        lambda v: validate_choice(v, KERNEL_TYPES, "kernel.type"),
    )

    def checked(key: str, default: Any, parse: Callable, check: Callable, used_by: tuple) -> Any:
        return reader.get(key, default, parse, check if kind in used_by else None)

    config = {
        "TYPE": kind,
        "G0": checked("g0", 0.4, parse_float, lambda v: require_positive(v, "g0"), ("exponential",)),
        "ETA": checked("eta", 1.0, parse_float, lambda v: require_positive(v, "eta"), ("exponential",)),
        "C0": checked("c0", 0.3, parse_float, lambda v: require_positive(v, "c0"), ("polynomial",)),
        "Q": checked("q", 3.0, parse_float, _check_polynomial_q, ("polynomial",)),
        "R": checked(
            "r", 4.0 / 3.0, parse_float,
            lambda v: validate_exponent_r(v, allow_one=(kind == "power_xi")),
            ("logmixed", "power_xi"),
        ),
        "M": checked("m", 0.2, parse_float, lambda v: require_open_interval(v, 0.0, 1.0, "m"), ("power_xi",)),
        "SCALE": checked("scale", 0.2, parse_float, lambda v: require_positive(v, "scale"), ("logmixed", "power_xi")),
        "TABLE_PATH": reader.get("table_path", "", _text),
    }
    if kind == "tabulated" and not config["TABLE_PATH"]:
        raise reader.fail("table_path", "kernel.type=tabulated 时必须提供 kernel.table_path")
    if kind == "power_xi" and config["R"] > 1.0:
        # 核的尾部指数 (1-m)/(r-1) 必须大于 1，否则质量发散
        tail = (1.0 - config["M"]) / (config["R"] - 1.0)
        if tail <= 1.0:
            raise reader.fail("m", f"(1-m)/(r-1)={tail:.4g} ≤ 1，核的质量发散")
    return config


def _check_polynomial_q(q: float) -> None:
    if not q > 2.0:
        raise InvalidParameterError(f"q={q} 不满足 q > 2（(G2) 要求 r=(q+1)/q < 3/2）")


def _load_grid_config(raw: Dict, line_map: Dict[str, int]) -> Dict:
    """加载空间网格配置"""
    reader = _SectionReader(raw, "grid", line_map)

    def check_n(n: int) -> None:
        if n < 8:
            raise InvalidParameterError(f"n={n} 不满足 n ≥ 8")

    return {
        "ELL": reader.get("ell", 1.0, parse_float, lambda v: require_positive(v, "ell")),
        "N": reader.get("n", 128, parse_int, check_n),
    }


def _load_time_config(raw: Dict, line_map: Dict[str, int], grid: Dict) -> Dict:
    """加载时间推进配置（dt=0 表示按 cfl·h 自动选取）"""
    reader = _SectionReader(raw, "time", line_map)
    h = grid["ELL"] / grid["N"]

    def check_cfl(cfl: float) -> None:
        if not 0.0 < cfl <= MAX_CFL:
            raise InvalidParameterError(f"cfl={cfl} 不满足 0 < cfl ≤ {MAX_CFL}")

    def check_dt(dt: float) -> None:
        require_non_negative(dt, "dt")
        if dt > MAX_CFL * h:
            raise InvalidParameterError(
                f"dt={dt} 超过稳定性上限 {MAX_CFL}·h = {MAX_CFL * h:.6g}",
                suggestion="请减小 time.dt，或设为 0 以按 time.cfl 自动选取",
            )

    def check_record_every(value: int) -> None:
        if value < 1:
            raise InvalidParameterError(f"record_every={value} 不满足 record_every ≥ 1")

    return {
        "DT": reader.get("dt", 0.0, parse_float, check_dt),
        "CFL": reader.get("cfl", 0.5, parse_float, check_cfl),
        "T": reader.get("t", 20.0, parse_float, lambda v: require_positive(v, "T")),
        "RECORD_EVERY": reader.get("record_every", 8, parse_int, check_record_every),
    }


def _check_table_horizon(config: Dict[str, Dict[str, Any]], line_map: Dict[str, int]) -> None:
    """
    表格核必须覆盖整个模拟时长 ceil(T/dt)·dt

    Raises:
        ConfigurationError: 表格无法读取或采样范围不足
    """
    kernel_cfg = config["KERNEL"]
    if kernel_cfg["TYPE"] != "tabulated":
        return
    # storage 依赖 physics，physics 又依赖本模块，只能在此处导入
    from viscowell.storage.local import LocalStorage

    try:
        times, _ = LocalStorage.read_kernel_table(kernel_cfg["TABLE_PATH"])
    except DataFileError as e:
        raise ConfigurationError(f"kernel.table_path: {e.message}", line=line_map.get("kernel.table_path"))

    time_cfg = config["TIME"]
    h = config["GRID"]["ELL"] / config["GRID"]["N"]
    dt = time_cfg["DT"] if time_cfg["DT"] > 0 else time_cfg["CFL"] * h
    horizon = math.ceil(time_cfg["T"] / dt - 1e-9) * dt
    t_max = float(times[-1])
    if horizon > t_max * (1.0 + 1e-12):
        raise ConfigurationError(
            f"time.T: 模拟需要 t ∈ [0, {horizon:.6g}] 的核值，超出表格核采样范围 [0, {t_max:.6g}]",
            suggestion="请延长 kernel.table_path 中的表格或减小 time.T",
            line=line_map.get("time.t"),
        )


def _load_init_config(raw: Dict, line_map: Dict[str, int]) -> Dict:
    """加载初值配置"""
    reader = _SectionReader(raw, "init", line_map)
    config = {
        "FAMILY": reader.get(
            "family", "quadratic", lambda v, n: parse_str(v).lower(),
            lambda v: validate_choice(v, INIT_FAMILIES, "init.family"),
        ),
        "AMPLITUDE": reader.get("amplitude", 1.0, parse_float),
        "VELOCITY_SCALE": reader.get("velocity_scale", 0.0, parse_float),
        "CUSTOM_PATH": reader.get("custom_path", "", _text),
    }
    if config["FAMILY"] == "custom" and not config["CUSTOM_PATH"]:
        raise reader.fail("custom_path", "init.family=custom 时必须提供 init.custom_path")
    return config


def _load_analysis_config(raw: Dict, line_map: Dict[str, int]) -> Dict:
    """加载分析配置"""
    reader = _SectionReader(raw, "analysis", line_map)
    seed_env = _get_env_int_or_none("VISCOWELL_SEED")

    def check_slack(value: float) -> None:
        if value < 1.0:
            raise InvalidParameterError(f"envelope_slack={value} 不满足 slack ≥ 1")

    def check_starts(value: int) -> None:
        if value < 1:
            raise InvalidParameterError(f"cstar_starts={value} 不满足 ≥ 1")

    return {
        "DELTA": reader.get("delta", None, parse_float, validate_delta),
        "BLOWUP_THRESHOLD_RATIO": reader.get(
            "blowup_threshold_ratio", 1e8, parse_float, validate_threshold_ratio
        ),
        "FIT_T0": reader.get("fit_t0", 1.0, parse_float, lambda v: require_non_negative(v, "fit_t0")),
        "SEED": seed_env if seed_env is not None else reader.get("seed", DEFAULT_SEED, parse_int),
        "CSTAR_STARTS": reader.get("cstar_starts", 16, parse_int, check_starts),
        "CERTIFY_BLOWUP": reader.get("certify_blowup", True, parse_bool),
        "ENVELOPE_SLACK": reader.get("envelope_slack", 1.0, parse_float, check_slack),
    }


def _load_output_config(raw: Dict, line_map: Dict[str, int]) -> Dict:
    """加载输出配置（空目录表示 output/<日期>/<时间>）"""
    reader = _SectionReader(raw, "output", line_map)
    return {"DIR": reader.get("dir", "", _text)}


def normalize_config(raw: Optional[Dict[str, Any]], line_map: Optional[Dict[str, int]] = None) -> Dict[str, Dict[str, Any]]:
    """
    把原始（小写、嵌套）配置标准化为大写配置字典并检查取值范围

    Args:
        raw: yaml.safe_load 或 parse_flat_config 的结果；None 视为空配置
        line_map: 平面格式的行号表，用于错误定位

    Returns:
        标准化配置字典

    Raises:
        ConfigurationError: 未知键或取值越界
    """
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigurationError("配置文件顶层必须是映射")
    raw = {str(k).lower(): v for k, v in raw.items()}
    line_map = line_map or {}

    _check_unknown_keys(raw, line_map)

    config: Dict[str, Dict[str, Any]] = {}

    # 应用配置
    config["APP"] = _load_app_config(raw, line_map)

    # 方程参数
    config["PROBLEM"] = _load_problem_config(raw, line_map)

    # 松弛核
    config["KERNEL"] = _load_kernel_config(raw, line_map)

    # 网格与时间推进
    config["GRID"] = _load_grid_config(raw, line_map)
    config["TIME"] = _load_time_config(raw, line_map, config["GRID"])
    _check_table_horizon(config, line_map)

    # 初值
    config["INIT"] = _load_init_config(raw, line_map)

    # 分析与输出
    config["ANALYSIS"] = _load_analysis_config(raw, line_map)
    config["OUTPUT"] = _load_output_config(raw, line_map)

    return config


def parse_config_text(content: str, flat: bool) -> Dict[str, Dict[str, Any]]:
    """
    解析配置文本

    Args:
        content: 文件内容
        flat: True 为平面 key=value 格式，False 为 YAML

    Returns:
        标准化配置字典
    """
    if flat:
        raw, line_map = parse_flat_config(content)
        return normalize_config(raw, line_map)

    try:
        raw = yaml.safe_load(content)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigurationError(f"YAML 解析失败: {getattr(e, 'problem', e)}", line=line)
    return normalize_config(raw)


def load_config(config_path: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
    """
    加载配置文件

    Args:
        config_path: 配置文件路径，默认从环境变量 CONFIG_PATH 获取或使用 config/config.yaml。
                     .yaml/.yml 按 YAML 解析，其他后缀按平面 key=value 解析。

    Returns:
        标准化配置字典

    Raises:
        FileNotFoundError: 配置文件不存在
        ConfigurationError: 解析失败或取值越界
    """
    if config_path is None:
        config_path = _get_env_str("CONFIG_PATH", DEFAULT_CONFIG_PATH)

    path = Path(config_path)
    if not path.exists():
        raise FileNotFoundError(f"配置文件 {config_path} 不存在")

    content = path.read_text(encoding="utf-8")
    flat = path.suffix.lower() not in (".yaml", ".yml")
    return parse_config_text(content, flat=flat)
