"""分组 / 分期规则引擎 — 病灶特征 → Group A–E，手术发现 → Stage 0–IV，分组 → 治疗"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import ndimage

from rbdiag_cli.config import (
    DEFAULT_DISC_CLEARANCE_MM,
    DEFAULT_FOVEA_CLEARANCE_MM,
    DEFAULT_SMALL_TUMOR_MM,
)
from rbdiag_cli.errors import InconsistentFindingsError
from rbdiag_cli.imaging import Mask

logger = logging.getLogger(__name__)

Coord = tuple[float, float, float]

# 6 邻接结构元
_SIX_CONNECTED = ndimage.generate_binary_structure(3, 1)


class Seeding(str, Enum):
    NONE = "none"
    FOCAL = "focal"
    DIFFUSE = "diffuse"


class AdvancedFlag(str, Enum):
    TOUCHES_LENS = "touches_lens"
    NEOVASCULAR_GLAUCOMA = "neovascular_glaucoma"
    ORBITAL_CELLULITIS = "orbital_cellulitis"
    INTRAOCULAR_HEMORRHAGE = "intraocular_hemorrhage"
    DIFFUSE_INFILTRATING = "diffuse_infiltrating"


class Group(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"

    @property
    def severity(self) -> int:
        return "ABCDE".index(self.value)


class Stage(str, Enum):
    ZERO = "0"
    I = "I"  # noqa: E741
    II = "II"
    III = "III"
    IV = "IV"


class Treatment(str, Enum):
    FOCAL_THERAPY = "FocalTherapy"
    CHEMOTHERAPY = "Chemotherapy"
    ENUCLEATION = "Enucleation"


class SalvageRisk(str, Enum):
    VERY_LOW = "very_low"
    LOW = "low"
    MILD = "mild"
    HIGH = "high"
    VERY_HIGH = "very_high"


_TREATMENTS = {
    Group.A: Treatment.FOCAL_THERAPY,
    Group.B: Treatment.CHEMOTHERAPY,
    Group.C: Treatment.CHEMOTHERAPY,
    Group.D: Treatment.CHEMOTHERAPY,
    Group.E: Treatment.ENUCLEATION,
}

_RISKS = {
    Group.A: SalvageRisk.VERY_LOW,
    Group.B: SalvageRisk.LOW,
    Group.C: SalvageRisk.MILD,
    Group.D: SalvageRisk.HIGH,
    Group.E: SalvageRisk.VERY_HIGH,
}


# ========================================================================
# 数据类型
# ========================================================================


@dataclass(frozen=True)
class LesionSummary:
    """分组所需的病灶特征；距离在地标未知时为 +inf"""

    max_diameter_mm: float = 0.0
    quadrant_counts: tuple[int, int, int, int] = (0, 0, 0, 0)
    subretinal_seeding: Seeding = Seeding.NONE
    vitreous_seeding: Seeding = Seeding.NONE
    dist_to_disc_mm: float = math.inf
    dist_to_fovea_mm: float = math.inf
    advanced_flags: frozenset[AdvancedFlag] = field(default_factory=frozenset)
    component_count: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "subretinal_seeding", Seeding(self.subretinal_seeding))
        object.__setattr__(self, "vitreous_seeding", Seeding(self.vitreous_seeding))
        object.__setattr__(self, "advanced_flags", frozenset(AdvancedFlag(f) for f in self.advanced_flags))
        object.__setattr__(self, "quadrant_counts", tuple(int(c) for c in self.quadrant_counts))
        if len(self.quadrant_counts) != 4 or min(self.quadrant_counts) < 0:
            raise ValueError(f"象限计数必须为 4 个非负整数: {self.quadrant_counts}")
        if self.max_diameter_mm < 0 or self.dist_to_disc_mm < 0 or self.dist_to_fovea_mm < 0:
            raise ValueError("直径与距离不能为负")
        if self.component_count < 0:
            raise ValueError("component_count 不能为负")

    @property
    def is_empty(self) -> bool:
        """没有检测到任何病灶"""
        return self.component_count == 0 and self.max_diameter_mm == 0.0


@dataclass(frozen=True)
class SurgicalFindings:
    enucleated: bool = False
    completely_resected: bool = False
    microscopic_remnants: bool = False
    regional_extension: bool = False
    metastasis: bool = False


@dataclass(frozen=True)
class GradingThresholds:
    small_tumor_mm: float = DEFAULT_SMALL_TUMOR_MM
    disc_clearance_mm: float = DEFAULT_DISC_CLEARANCE_MM
    fovea_clearance_mm: float = DEFAULT_FOVEA_CLEARANCE_MM

    def __post_init__(self) -> None:
        if min(self.small_tumor_mm, self.disc_clearance_mm, self.fovea_clearance_mm) < 0:
            raise ValueError(f"分级阈值不能为负: {self}")


@dataclass(frozen=True)
class GradeReport:
    """group 为 None 表示没有病灶可分级"""

    group: Group | None
    stage: Stage
    treatment: Treatment | None
    risk: SalvageRisk | None
    rationale: tuple[str, ...]
    summary: LesionSummary = field(default_factory=LesionSummary)

    def __post_init__(self) -> None:
        expected = None if self.group is None else recommend_treatment(self.group)
        if self.treatment is not expected:
            raise ValueError(f"治疗 {self.treatment} 与分组 {self.group} 不一致")


# ========================================================================
# 特征测量
# ========================================================================


def _spacing3(spacing_mm: float | tuple[float, float, float]) -> np.ndarray:
    spacing = np.broadcast_to(np.asarray(spacing_mm, dtype=np.float64), (3,))
    if spacing.min() <= 0:
        raise ValueError(f"spacing_mm 必须 > 0: {spacing_mm}")
    return spacing


def lesion_features(
    mask: Mask,
    spacing_mm: float | tuple[float, float, float],
    disc: Coord | None = None,
    fovea: Coord | None = None,
) -> LesionSummary:
    """6 邻接连通域标记后测量病灶特征。

    - 直径: 最大连通域包围盒各轴长度 × 间距的最大值
    - 象限: 各连通域质心相对体中心在 (x, y) 平面上的位置，坐标恰在中心时归入正向一侧
    - 距离: 地标到最近肿瘤体素的欧氏距离
    播散与晚期标志不从图像推断，保持默认值。
    """
    if min(mask.dims) < 1:
        raise ValueError(f"掩膜尺寸必须非空: {mask.dims}")
    spacing = _spacing3(spacing_mm)
    labelled, count = ndimage.label(mask.labels, structure=_SIX_CONNECTED)
    if count == 0:
        return LesionSummary()

    diameter = 0.0
    for box in ndimage.find_objects(labelled):
        extents = np.array([s.stop - s.start for s in box]) * spacing
        diameter = max(diameter, float(extents.max()))

    center = (np.asarray(mask.dims, dtype=np.float64) - 1.0) / 2.0
    quadrants = [0, 0, 0, 0]
    centroids = ndimage.center_of_mass(mask.labels, labelled, range(1, count + 1))
    for cx, cy, _ in centroids:
        right = cx >= center[0]
        upper = cy >= center[1]
        quadrants[_quadrant_index(right, upper)] += 1

    tumor = np.argwhere(mask.labels == 1).astype(np.float64)
    return LesionSummary(
        max_diameter_mm=diameter,
        quadrant_counts=tuple(quadrants),
        dist_to_disc_mm=_nearest_distance(tumor, disc, spacing),
        dist_to_fovea_mm=_nearest_distance(tumor, fovea, spacing),
        component_count=count,
    )


def _quadrant_index(right: bool, upper: bool) -> int:
    # 0: +x+y, 1: −x+y, 2: −x−y, 3: +x−y
    if upper:
        return 0 if right else 1
    return 3 if right else 2


def _nearest_distance(tumor: np.ndarray, landmark: Coord | None, spacing: np.ndarray) -> float:
    if landmark is None or tumor.size == 0:
        return math.inf
    delta = (tumor - np.asarray(landmark, dtype=np.float64)) * spacing
    return float(np.sqrt((delta**2).sum(axis=1)).min())


# ========================================================================
# 规则
# ========================================================================


def _group_rules(s: LesionSummary, t: GradingThresholds) -> tuple[Group, list[str]]:
    if s.advanced_flags:
        flags = ",".join(sorted(f.value for f in s.advanced_flags))
        return Group.E, [f"group.E.advanced({flags})"]
    seedings = (s.subretinal_seeding, s.vitreous_seeding)
    if Seeding.DIFFUSE in seedings:
        return Group.D, ["group.D.diffuse_seeding"]
    if Seeding.FOCAL in seedings:
        return Group.C, ["group.C.focal_seeding"]
    if (
        s.max_diameter_mm < t.small_tumor_mm
        and s.dist_to_disc_mm >= t.disc_clearance_mm
        and s.dist_to_fovea_mm >= t.fovea_clearance_mm
    ):
        return Group.A, [
            f"group.A.small_isolated(diameter<{t.small_tumor_mm:g}mm,"
            f"disc>={t.disc_clearance_mm:g}mm,fovea>={t.fovea_clearance_mm:g}mm)"
        ]
    return Group.B, ["group.B.no_seeding"]


def assign_group(s: LesionSummary, thresholds: GradingThresholds = GradingThresholds()) -> Group:
    """按 E → A 顺序取第一条命中的规则"""
    return _group_rules(s, thresholds)[0]


def _stage_rules(f: SurgicalFindings) -> tuple[Stage, list[str]]:
    if f.completely_resected and f.microscopic_remnants:
        raise InconsistentFindingsError("completely_resected 与 microscopic_remnants 不能同时为真")
    if (f.completely_resected or f.microscopic_remnants) and not f.enucleated:
        raise InconsistentFindingsError("切除相关标志要求 enucleated 为真")
    if f.metastasis:
        return Stage.IV, ["stage.IV.metastasis"]
    if f.regional_extension:
        return Stage.III, ["stage.III.regional_extension"]
    if f.enucleated and f.microscopic_remnants:
        return Stage.II, ["stage.II.microscopic_remnants"]
    if f.enucleated and f.completely_resected:
        return Stage.I, ["stage.I.completely_resected"]
    return Stage.ZERO, ["stage.0.not_enucleated"]


def assign_stage(f: SurgicalFindings) -> Stage:
    return _stage_rules(f)[0]


def recommend_treatment(group: Group) -> Treatment:
    return _TREATMENTS[Group(group)]


def salvage_risk(group: Group) -> SalvageRisk:
    """分组对应的保眼风险等级"""
    return _RISKS[Group(group)]


def grade(
    summary: LesionSummary,
    findings: SurgicalFindings = SurgicalFindings(),
    thresholds: GradingThresholds = GradingThresholds(),
) -> GradeReport:
    """组合分组、分期与治疗规则，rationale 按评估顺序记录命中的规则"""
    stage, stage_rules = _stage_rules(findings)
    if summary.is_empty:
        rationale = ("group.none.no_lesion", *stage_rules)
        logger.info("🩺 未检测到病灶，group=none")
        return GradeReport(None, stage, None, None, rationale, summary)

    group, group_rules = _group_rules(summary, thresholds)
    treatment = recommend_treatment(group)
    rationale = (*group_rules, *stage_rules, f"treatment.{group.value}.{treatment.value}")
    logger.info("🩺 group=%s stage=%s treatment=%s", group.value, stage.value, treatment.value)
    return GradeReport(group, stage, treatment, salvage_risk(group), rationale, summary)
