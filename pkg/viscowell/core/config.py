# coding=utf-8
"""
配置工具模块 - 平面 key=value 配置的解析与输出

平面格式示例::

    # 注释行
    kernel.type=exponential
    kernel.g0=0.4
    problem.p=2.5

值使用 yaml.safe_load 转换标量类型，因此 true / null / 2.5 与 YAML 文件中含义一致。
"""

import math
from typing import Any, Dict, Tuple

import yaml

from .errors import ConfigurationError


def _parse_scalar(text: str) -> Any:
    """按 YAML 标量规则转换平面配置的值，空值返回空串"""
    text = text.strip()
    if not text:
        return ""
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def parse_flat_config(content: str) -> Tuple[Dict[str, Dict[str, Any]], Dict[str, int]]:
    """
    解析平面 key=value 配置文本

    Args:
        content: 配置文本

    Returns:
        (嵌套字典 {section: {key: value}}, 行号表 {"section.key": 行号})

    Raises:
        ConfigurationError: 行格式错误或键重复，消息带行号

    Examples:
        >>> raw, lines = parse_flat_config("grid.n=64\\n# c\\nproblem.p=2.5")
        >>> raw["grid"]["n"], lines["problem.p"]
        (64, 3)
    """
    raw: Dict[str, Dict[str, Any]] = {}
    line_map: Dict[str, int] = {}

    for lineno, line in enumerate(content.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue

        if "=" not in stripped:
            raise ConfigurationError(
                f"无法解析的配置行 {stripped!r}，应为 section.key=value",
                line=lineno,
            )

        dotted, value = stripped.split("=", 1)
        dotted = dotted.strip().lower()
        if dotted.count(".") != 1 or not all(dotted.split(".")):
            raise ConfigurationError(
                f"配置键 {dotted!r} 必须是 section.key 形式",
                line=lineno,
            )
        if dotted in line_map:
            raise ConfigurationError(
                f"配置键 {dotted} 重复（首次出现在第 {line_map[dotted]} 行）",
                line=lineno,
            )

        section, key = dotted.split(".")
        raw.setdefault(section, {})[key] = _parse_scalar(value)
        line_map[dotted] = lineno

    return raw, line_map


def _format_value(value: Any) -> str:
    """把标准化后的配置值写成平面格式文本"""
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return ".inf" if value > 0 else "-.inf"
        # repr 是最短的精确往返表示
        text = repr(value)
        if "e" in text and "." not in text.split("e")[0]:
            mantissa, exponent = text.split("e")
            text = f"{mantissa}.0e{exponent}"
        return text
    return str(value)


def dump_config(config: Dict[str, Dict[str, Any]]) -> str:
    """
    输出标准化配置的平面文本（按 section.key 排序）

    Args:
        config: load_config 返回的标准化配置（大写 section / key）

    Returns:
        平面配置文本，parse 后与原配置一致
    """
    lines = []
    for section in sorted(config):
        values = config[section]
        if not isinstance(values, dict):
            continue
        for key in sorted(values):
            lines.append(f"{section.lower()}.{key.lower()}={_format_value(values[key])}")
    return "\n".join(lines) + "\n"
