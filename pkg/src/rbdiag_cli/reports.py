"""报告渲染 — 把评估、分级与体模真值转换为 key=value 纯文本"""

import math
from enum import Enum
from typing import Any

from rbdiag_cli.config import REPORT_DECIMALS
from rbdiag_cli.grading import GradeReport, LesionSummary
from rbdiag_cli.metrics import ConfusionCounts, RocCurve, metric_values
from rbdiag_cli.phantom import PhantomTruth


def format_value(value: Any) -> str:
    """格式化单个值: 浮点保留 6 位，None 为 undefined，无穷为 inf"""
    if value is None:
        return "undefined"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.{REPORT_DECIMALS}f}"
    if isinstance(value, (tuple, list, frozenset, set)):
        items = sorted(value, key=format_value) if isinstance(value, (frozenset, set)) else value
        return ",".join(format_value(v) for v in items)
    return str(value)


def render(pairs: list[tuple[str, Any]]) -> str:
    """每行一个 key=value，以换行结尾"""
    return "".join(f"{key}={format_value(value)}\n" for key, value in pairs)


def parse_report(text: str) -> dict[str, str]:
    """读回 key=value 报告；重复 key 只保留最后一个"""
    result = {}
    for line in text.splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            result[key.strip()] = value.strip()
    return result


def metrics_report(counts: ConfusionCounts, roc: RocCurve | None = None) -> str:
    """评估报告: 四个计数、三项比率与可选 AUC"""
    pairs: list[tuple[str, Any]] = [
        ("tp", counts.tp),
        ("tn", counts.tn),
        ("fp", counts.fp),
        ("fn", counts.fn),
        ("total", counts.total),
    ]
    pairs += list(metric_values(counts).items())
    if roc is not None:
        pairs.append(("auc", roc.auc))
    return render(pairs)


def summary_pairs(summary: LesionSummary) -> list[tuple[str, Any]]:
    return [
        ("components", summary.component_count),
        ("max_diameter_mm", summary.max_diameter_mm),
        ("quadrant_counts", summary.quadrant_counts),
        ("subretinal_seeding", summary.subretinal_seeding),
        ("vitreous_seeding", summary.vitreous_seeding),
        ("dist_to_disc_mm", summary.dist_to_disc_mm),
        ("dist_to_fovea_mm", summary.dist_to_fovea_mm),
        ("advanced_flags", summary.advanced_flags),
    ]


def grade_report(report: GradeReport) -> str:
    """分级报告: group / stage / treatment / risk、病灶特征，以及逐行的 rule"""
    pairs: list[tuple[str, Any]] = [
        ("group", report.group.value if report.group else "none"),
        ("stage", report.stage),
        ("treatment", report.treatment.value if report.treatment else "none"),
        ("risk", report.risk.value if report.risk else "none"),
    ]
    pairs += summary_pairs(report.summary)
    pairs += [("rule", rule) for rule in report.rationale]
    return render(pairs)


def truth_report(truth: PhantomTruth) -> str:
    """体模真值报告（肿瘤中心、半轴与强度）"""
    pairs: list[tuple[str, Any]] = [
        ("dims", truth.mask.dims),
        ("spacing_mm", truth.volume.spacing_mm[0]),
        ("tumor_voxels", truth.mask.count),
        ("disc", truth.disc),
        ("fovea", truth.fovea),
    ]
    pairs += summary_pairs(truth.summary)
    for index, tumor in enumerate(truth.tumors):
        pairs += [
            (f"tumor.{index}.center", tumor.center),
            (f"tumor.{index}.radii", tumor.radii),
            (f"tumor.{index}.intensity", tumor.intensity),
        ]
    return render(pairs)
