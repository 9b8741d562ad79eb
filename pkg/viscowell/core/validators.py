# coding=utf-8
"""
参数验证工具

提供统一的参数解析与范围验证功能。
配置文件里的值可能是字符串（平面 key=value 格式），也可能已经是 YAML 标量，
这里统一转换为 Python 类型并在越界时抛出 InvalidParameterError。
"""

import ast
import json
import math
from typing import Any, List, Optional

from .errors import InvalidParameterError


# ==================== 辅助函数：处理字符串序列化 ====================

def _parse_string_to_list(value: str) -> List[str]:
    """
    将字符串解析为列表

    支持格式：
    - JSON 数组: '[0.5, 1, 2]'
    - Python 列表字符串: "[0.5, 1, 2]"
    - 逗号分隔: "0.5, 1, 2" 或 "0.5,1,2"

    Args:
        value: 字符串值

    Returns:
        解析后的列表
    """
    value = value.strip()

    if not value:
        return []

    # 尝试 JSON 解析
    try:
        parsed = json.loads(value)
        if isinstance(parsed, list):
            return [str(item) for item in parsed]
    except json.JSONDecodeError:
        pass

    # 尝试 Python 字面量解析
    try:
        parsed = ast.literal_eval(value)
        if isinstance(parsed, (list, tuple)):
            return [str(item) for item in parsed]
    except (ValueError, SyntaxError):
        pass

    if ',' in value:
        items = [item.strip() for item in value.split(',')]
        return [item for item in items if item]

    return [value]


def parse_float(value: Any, param_name: str = "参数") -> float:
    """
    解析为有限浮点数

    Args:
        value: 原始值（数字或字符串，如 "1e8"）
        param_name: 参数名（用于错误消息）

    Returns:
        浮点数

    Raises:
        InvalidParameterError: 解析失败或不是有限值
    """
    if isinstance(value, bool):
        raise InvalidParameterError(f"{param_name} 必须是数字，实际为布尔值: {value}")
    try:
        result = float(str(value).strip()) if isinstance(value, str) else float(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(
            f"{param_name} 必须是数字，无法解析: {value}",
            suggestion="请提供有效的数字值，如: 0.4, 2.5, 1e8"
        )
    if not math.isfinite(result):
        raise InvalidParameterError(f"{param_name} 必须是有限值，实际为 {value}")
    return result


def parse_int(value: Any, param_name: str = "参数") -> int:
    """
    解析为整数，允许 "128" 或 128.0 这类无小数部分的写法

    Raises:
        InvalidParameterError: 解析失败或带小数部分
    """
    if isinstance(value, bool):
        raise InvalidParameterError(f"{param_name} 必须是整数，实际为布尔值: {value}")
    if isinstance(value, int):
        return value
    number = parse_float(value, param_name)
    if not number.is_integer():
        raise InvalidParameterError(
            f"{param_name} 必须是整数，实际为 {value}",
            suggestion="请提供有效的整数值，如: 8, 64, 128"
        )
    return int(number)


def parse_bool(value: Any, param_name: str = "参数") -> bool:
    """解析布尔值（true/false/1/0/yes/no/on/off）"""
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "1", "yes", "on"):
        return True
    if text in ("false", "0", "no", "off", ""):
        return False
    raise InvalidParameterError(f"{param_name} 必须是布尔值，无法解析: {value}")


def parse_str(value: Any) -> str:
    """解析字符串，None 视为空串"""
    if value is None:
        return ""
    return str(value).strip()


def parse_float_list(value: Any, param_name: str = "参数") -> List[float]:
    """
    解析浮点数列表

    Examples:
        >>> parse_float_list("0,0.5,1")
        [0.0, 0.5, 1.0]
        >>> parse_float_list([1, 2])
        [1.0, 2.0]
    """
    if value is None:
        return []
    if isinstance(value, str):
        items: List[Any] = _parse_string_to_list(value)
    elif isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [value]
    return [parse_float(item, param_name) for item in items]


# ==================== 范围验证 ====================

def require_positive(value: float, param_name: str) -> float:
    """要求 value > 0"""
    if not value > 0:
        raise InvalidParameterError(f"{param_name}={value} 不满足 {param_name} > 0")
    return value


def require_non_negative(value: float, param_name: str) -> float:
    """要求 value ≥ 0"""
    if not value >= 0:
        raise InvalidParameterError(f"{param_name}={value} 不满足 {param_name} ≥ 0")
    return value


def require_open_interval(value: float, low: float, high: float, param_name: str) -> float:
    """要求 low < value < high"""
    if not (low < value < high):
        raise InvalidParameterError(
            f"{param_name}={value} 不满足 {low:g} < {param_name} < {high:g}"
        )
    return value


def validate_source_exponent(p: float, upper: float = 3.0) -> float:
    """
    验证源项指数 p

    模拟与势阱分析要求 2 < p < 3，嵌入常数估计允许到 p < 4。

    Raises:
        InvalidParameterError: p 越界，消息中包含 "2 < p < 3"
    """
    if not (2.0 < p < upper):
        raise InvalidParameterError(
            f"p={p} 超出允许范围，需满足 2 < p < {upper:g}",
            suggestion=f"请把 problem.p 设在 (2, {upper:g}) 内"
        )
    return p


def validate_delta(delta: float) -> float:
    """验证能量比例 δ < 1"""
    if not delta < 1.0:
        raise InvalidParameterError(f"delta={delta} 不满足 δ < 1")
    return delta


def validate_exponent_r(r: float, allow_one: bool = True) -> float:
    """
    验证 (G2) 中的指数 r

    Args:
        r: 指数
        allow_one: 是否允许 r = 1（指数型衰减）

    Raises:
        InvalidParameterError: r 不在 [1, 3/2)（或 (1, 3/2)）内
    """
    low_ok = r >= 1.0 if allow_one else r > 1.0
    if not (low_ok and r < 1.5):
        interval = "[1, 3/2)" if allow_one else "(1, 3/2)"
        raise InvalidParameterError(f"r={r} 不在 {interval} 内")
    return r


def validate_choice(value: str, choices: List[str], param_name: str) -> str:
    """验证取值属于给定选项"""
    if value not in choices:
        raise InvalidParameterError(
            f"{param_name}={value!r} 不受支持",
            suggestion=f"可选值: {', '.join(choices)}"
        )
    return value


def validate_threshold_ratio(ratio: Optional[float]) -> float:
    """验证爆破阈值倍数 > 1"""
    if ratio is None or not ratio > 1.0:
        raise InvalidParameterError(f"blowup_threshold_ratio={ratio} 必须大于 1")
    return ratio
