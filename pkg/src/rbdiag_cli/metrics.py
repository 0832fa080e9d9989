"""逐体素评估 — 混淆计数、敏感度/特异度/准确率与 ROC/AUC"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from rbdiag_cli.errors import DimMismatchError, SingleClassTruthError, UndefinedMetricError
from rbdiag_cli.imaging import Mask, Volume

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError(f"混淆计数不能为负: {self}")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class RocCurve:
    """(fpr, tpr) 点列，按 fpr 非降排列，首尾为 (0,0) 与 (1,1)"""

    points: tuple[tuple[float, float], ...]
    thresholds: tuple[float, ...]
    auc: float


def confusion(g: Mask, y: Mask) -> ConfusionCounts:
    """g 为真值，y 为预测；FN 为漏检的肿瘤体素，FP 为误报的背景体素"""
    if g.dims != y.dims:
        raise DimMismatchError(f"掩膜尺寸不一致: {g.dims} vs {y.dims}")
    truth = g.labels.astype(bool)
    pred = y.labels.astype(bool)
    return ConfusionCounts(
        tp=int(np.count_nonzero(truth & pred)),
        tn=int(np.count_nonzero(~truth & ~pred)),
        fp=int(np.count_nonzero(~truth & pred)),
        fn=int(np.count_nonzero(truth & ~pred)),
    )


def _ratio(num: int, den: int, name: str) -> float:
    if den == 0:
        raise UndefinedMetricError(f"{name} 分母为 0")
    return num / den


def sensitivity(c: ConfusionCounts) -> float:
    """TP / (TP + FN)"""
    return _ratio(c.tp, c.tp + c.fn, "sensitivity")


def specificity(c: ConfusionCounts) -> float:
    """TN / (TN + FP)"""
    return _ratio(c.tn, c.tn + c.fp, "specificity")


def accuracy(c: ConfusionCounts) -> float:
    """(TP + TN) / (TP + FN + TN + FP)"""
    return _ratio(c.tp + c.tn, c.total, "accuracy")


def roc_curve(scores: np.ndarray | Volume, truth: Mask) -> RocCurve:
    """在所有不同分数上（降序，外加 ±∞ 端点）扫阈值，梯形法积分 AUC。

    分数 ≥ 阈值判为阳性；并列分数在曲线上形成一段斜线。
    """
    values = np.asarray(scores.voxels if isinstance(scores, Volume) else scores, dtype=np.float64)
    if values.shape != truth.labels.shape:
        raise DimMismatchError(f"分数形状 {values.shape} 与真值 {truth.dims} 不符")
    positive = truth.labels.ravel().astype(bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassTruthError("真值只包含一个类别，ROC 无定义")

    flat = values.ravel()
    order = np.argsort(-flat, kind="stable")
    ranked = flat[order]
    hits = positive[order]
    tps = np.cumsum(hits)
    fps = np.cumsum(~hits)
    # 每组并列分数的最后一个位置
    ends = np.r_[np.nonzero(np.diff(ranked))[0], ranked.size - 1]

    tpr = np.r_[0.0, tps[ends] / n_pos]
    fpr = np.r_[0.0, fps[ends] / n_neg]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    points = tuple(zip(fpr.tolist(), tpr.tolist()))
    thresholds = (math.inf, *ranked[ends].tolist())
    logger.debug("📈 ROC: %d 个阈值, AUC=%.6f", len(thresholds), auc)
    return RocCurve(points=points, thresholds=thresholds, auc=auc)


def metric_values(c: ConfusionCounts) -> dict[str, float | None]:
    """三项比率，分母为 0 时为 None"""
    result: dict[str, float | None] = {}
    for name, fn in (("sensitivity", sensitivity), ("specificity", specificity), ("accuracy", accuracy)):
        try:
            result[name] = fn(c)
        except UndefinedMetricError:
            result[name] = None
    return result
