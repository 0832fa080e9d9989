"""异常定义 — 所有模块错误均继承 RbdiagError，可携带所属流水线阶段"""


class RbdiagError(Exception):
    """rbdiag 错误基类"""

    stage: str = ""

    def __init__(self, message: str = "", *, stage: str | None = None):
        super().__init__(message)
        if stage is not None:
            self.stage = stage


# ------------------------------------------------------------------
# imaging
# ------------------------------------------------------------------


class ImagingError(RbdiagError):
    stage = "imaging"


class MalformedHeaderError(ImagingError):
    pass


class UnsupportedMaxvalError(ImagingError):
    pass


class TruncatedPayloadError(ImagingError):
    pass


class DimMismatchError(RbdiagError, ValueError):
    pass


class ZeroDepthError(ImagingError, ValueError):
    pass


class MalformedMaskFileError(ImagingError):
    pass


class MalformedVolumeFileError(ImagingError):
    pass


class ArtifactIOError(RbdiagError, OSError):
    """读写产物文件失败"""


# ------------------------------------------------------------------
# lpdmf
# ------------------------------------------------------------------


class EmptySetError(RbdiagError, ValueError):
    stage = "denoise"


# ------------------------------------------------------------------
# patcher / micronet
# ------------------------------------------------------------------


class MalformedPatchArchiveError(RbdiagError):
    stage = "extract"


class NetworkError(RbdiagError):
    stage = "train"


class ShapeMismatchError(NetworkError, ValueError):
    pass


class OddSpatialDimError(NetworkError, ValueError):
    pass


class ShapeUnderflowError(NetworkError, ValueError):
    pass


class UnlabeledPatchError(NetworkError, ValueError):
    pass


class SingleClassDatasetError(NetworkError, ValueError):
    pass


class MalformedModelFileError(NetworkError):
    pass


# ------------------------------------------------------------------
# aggregation / metrics / grading / phantom
# ------------------------------------------------------------------


class EmptyVotesError(RbdiagError, ValueError):
    stage = "aggregate"


class DegenerateDenominatorError(RbdiagError, ZeroDivisionError):
    stage = "aggregate"


class UndefinedMetricError(RbdiagError, ZeroDivisionError):
    stage = "evaluate"


class SingleClassTruthError(RbdiagError, ValueError):
    stage = "evaluate"


class InconsistentFindingsError(RbdiagError, ValueError):
    stage = "grade"


class UnplaceableTumorError(RbdiagError):
    stage = "phantom"


class InsufficientClassVoxelsError(RbdiagError, ValueError):
    stage = "phantom"


# ------------------------------------------------------------------
# 配置
# ------------------------------------------------------------------


class UnknownKeyError(RbdiagError, KeyError):
    stage = "config"

    def __str__(self) -> str:
        # KeyError 默认会给消息加引号
        return str(self.args[0]) if self.args else ""


class ConfigTypeError(RbdiagError, TypeError):
    """值无法转换为配置项声明的类型，消息即配置项名称"""

    stage = "config"

    def __init__(self, key: str):
        super().__init__(key)
        self.key = key


class InvalidConfigError(RbdiagError, ValueError):
    stage = "config"


# ------------------------------------------------------------------
# 流水线
# ------------------------------------------------------------------


class StageError(RbdiagError):
    """流水线某阶段失败，消息为单行 "<stage>: <原因>" """

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}", stage=stage)
        self.cause = cause
