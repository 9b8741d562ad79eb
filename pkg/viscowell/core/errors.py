# coding=utf-8
"""
自定义错误类

定义 viscowell 使用的所有自定义异常类型。
每个异常带有固定的错误码和可选的修改建议，CLI 据此映射退出码。
"""

from typing import List, Optional


class ViscoWellError(Exception):
    """viscowell 错误基类"""

    def __init__(self, message: str, code: str = "VISCOWELL_ERROR", suggestion: Optional[str] = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.suggestion = suggestion

    def to_dict(self) -> dict:
        """转换为字典格式"""
        error_dict = {
            "code": self.code,
            "message": self.message
        }
        if self.suggestion:
            error_dict["suggestion"] = self.suggestion
        return error_dict


class ConfigurationError(ViscoWellError):
    """配置错误（解析失败或取值越界）"""

    def __init__(self, message: str, suggestion: Optional[str] = None, line: Optional[int] = None):
        if line is not None:
            message = f"第 {line} 行: {message}"
        super().__init__(
            message=message,
            code="CONFIGURATION_ERROR",
            suggestion=suggestion or "请检查配置文件是否正确"
        )
        self.line = line


class InvalidParameterError(ViscoWellError):
    """参数无效错误（前置条件、定义域）"""

    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(
            message=message,
            code="INVALID_PARAMETER",
            suggestion=suggestion or "请检查参数取值范围"
        )


class PreconditionError(ViscoWellError):
    """调用前置条件不满足"""

    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(message=message, code="PRECONDITION", suggestion=suggestion)


class InvalidKernelError(ViscoWellError):
    """松弛核不满足假设（质量发散、指数越界）"""

    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(
            message=message,
            code="INVALID_KERNEL",
            suggestion=suggestion or "请检查 kernel.* 参数"
        )


class KernelRangeError(ViscoWellError):
    """求值时间超出表格核的采样范围"""

    def __init__(self, t: float, t_max: float):
        super().__init__(
            message=f"t={t} 超出表格核采样范围 [0, {t_max}]",
            code="KERNEL_RANGE",
            suggestion="请延长表格或缩短模拟时长"
        )


class UnsupportedOperationError(ViscoWellError):
    """当前核类型不支持该操作"""

    def __init__(self, message: str):
        super().__init__(message=message, code="UNSUPPORTED")


class GridMismatchError(ViscoWellError):
    """场向量与网格不匹配"""

    def __init__(self, expected: int, actual: int):
        super().__init__(
            message=f"场向量长度 {actual} 与网格节点数 {expected} 不一致",
            code="GRID_MISMATCH"
        )


class HistoryError(ViscoWellError):
    """记忆项历史不完整"""

    def __init__(self, message: str):
        super().__init__(message=message, code="HISTORY_GAP")


class NumericError(ViscoWellError):
    """迭代不收敛等数值错误"""

    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(
            message=message,
            code="NUMERIC_ERROR",
            suggestion=suggestion or "请加密网格或增加最大迭代次数"
        )


class NumericInstabilityError(ViscoWellError):
    """时间推进中出现 NaN/Inf"""

    def __init__(self, t: float):
        super().__init__(
            message=f"t={t:.6g} 时出现 NaN/Inf",
            code="NUMERIC_INSTABILITY",
            suggestion="请减小 time.dt 或 time.cfl"
        )
        self.t = t


class FitError(ViscoWellError):
    """衰减拟合失败"""

    def __init__(self, message: str, indices: Optional[List[int]] = None):
        super().__init__(
            message=message,
            code="FIT_ERROR",
            suggestion="请调整 analysis.fit_t0 或延长模拟时长"
        )
        self.indices = list(indices or [])


class DataFileError(ViscoWellError):
    """数据文件无法读取或为空"""

    def __init__(self, file_path: str, reason: str):
        super().__init__(
            message=f"读取文件 {file_path} 失败: {reason}",
            code="DATA_FILE",
            suggestion="请检查文件路径与格式是否正确"
        )
