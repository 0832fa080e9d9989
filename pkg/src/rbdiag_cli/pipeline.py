"""诊断流水线 — 去噪 → 多视角分割 → 融合 → 分级 → 评估，各阶段产物可落盘"""

import contextlib
import dataclasses
import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import map_coordinates

from rbdiag_cli.aggregation import AggregationConfig, FusionMode, VoterStats, aggregate_scores
from rbdiag_cli.artifacts import ArtifactStore
from rbdiag_cli.config import PREDICT_BATCH_SIZE
from rbdiag_cli.errors import ArtifactIOError, InvalidConfigError, RbdiagError, ShapeMismatchError, StageError
from rbdiag_cli.grading import (
    AdvancedFlag,
    GradeReport,
    GradingThresholds,
    Seeding,
    SurgicalFindings,
    grade,
    lesion_features,
)
from rbdiag_cli.imaging import Mask, Volume, save_mask, save_volume
from rbdiag_cli.lpdmf import denoise_volume
from rbdiag_cli.metrics import confusion, roc_curve
from rbdiag_cli.micronet import Model, load_model, predict_batch
from rbdiag_cli.patcher import build_grids, center_axis, sample_patch
from rbdiag_cli.reports import grade_report, metrics_report
from rbdiag_cli.settings import GridConfig, RunConfig

logger = logging.getLogger(__name__)

Coord = tuple[float, float, float]


# ========================================================================
# 分割
# ========================================================================


@dataclass(frozen=True, eq=False)
class Segmentation:
    mask: Mask
    scores: np.ndarray
    per_grid: list[np.ndarray]


def _upsample(lattice: np.ndarray, dims: tuple[int, int, int], stride: int, margin: int) -> np.ndarray:
    """把中心点格点上的概率线性插值回整幅体素网格，格点外侧取最近值"""
    axes = [(np.arange(d, dtype=np.float64) - margin) / stride for d in dims]
    coords = np.stack(np.meshgrid(*axes, indexing="ij"))
    values = map_coordinates(lattice, coords.reshape(3, -1), order=1, mode="nearest")
    return np.clip(values.reshape(dims), 0.0, 1.0)


def segment_volume(
    volume: Volume,
    model: Model,
    grid: GridConfig = GridConfig(),
    agg: AggregationConfig = AggregationConfig(),
    stats: Sequence[VoterStats] | None = None,
) -> Segmentation:
    """对每个中心点按视角模式取 1 / 3 / 9 个网格的 patch，批量推理肿瘤概率后融合。

    Raises:
        ShapeMismatchError: 模型输入与网格尺寸不符
        InvalidConfigError: margin 过大导致没有任何中心点
    """
    expected = (grid.size, grid.size, grid.slices)
    if tuple(model.input_shape) != expected:
        raise ShapeMismatchError(f"模型输入 {tuple(model.input_shape)} 与网格 {expected} 不符")
    axes = [center_axis(d, grid.stride, grid.margin) for d in volume.dims]
    if any(len(a) == 0 for a in axes):
        raise InvalidConfigError(f"grid.margin={grid.margin} 过大，体数据 {volume.dims} 中没有中心点")
    centers = [(float(x), float(y), float(z)) for x in axes[0] for y in axes[1] for z in axes[2]]
    count = grid.grid_count
    logger.info("🔍 分割: %d 个中心点 × %d 个网格 (%s)", len(centers), count, grid.views)

    probs = np.empty((count, len(centers)))
    for start in range(0, len(centers), PREDICT_BATCH_SIZE):
        chunk = centers[start:start + PREDICT_BATCH_SIZE]
        grids = [build_grids(c, grid.size, grid.spacing)[:count] for c in chunk]
        for g in range(count):
            batch = np.stack([sample_patch(volume, gs[g], grid.slices, grid.slice_step).data for gs in grids])
            probs[g, start:start + len(chunk)] = predict_batch(model, batch)[:, 1]

    lattice_shape = tuple(len(a) for a in axes)
    per_grid = [
        _upsample(probs[g].reshape(lattice_shape), volume.dims, grid.stride, grid.margin)
        for g in range(count)
    ]
    if agg.mode is FusionMode.BAYES and stats is None:
        stats = [agg.default_stats] * count
    scores = aggregate_scores(per_grid, stats, agg.mode)
    mask = Mask(volume.dims, (scores > 0.5).astype(np.uint8))
    logger.info("✅ 分割完成: %d 个肿瘤体素", mask.count)
    return Segmentation(mask, scores, per_grid)


# ========================================================================
# 完整流水线
# ========================================================================


@dataclass(frozen=True)
class ClinicalInputs:
    """图像无法推断、需外部提供的分级输入"""

    disc: Coord | None = None
    fovea: Coord | None = None
    subretinal_seeding: Seeding = Seeding.NONE
    vitreous_seeding: Seeding = Seeding.NONE
    advanced_flags: frozenset[AdvancedFlag] = field(default_factory=frozenset)
    findings: SurgicalFindings = field(default_factory=SurgicalFindings)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    mask: Mask
    grade: GradeReport
    grade_text: str
    metrics_text: str | None
    scores: np.ndarray
    denoised: Volume


@contextlib.contextmanager
def _stage(name: str) -> Iterator[None]:
    logger.info("▶️  %s", name)
    try:
        yield
    except StageError:
        raise
    except (RbdiagError, ValueError, ZeroDivisionError, OSError) as e:
        raise StageError(name, e) from e
    logger.debug("✓ %s", name)


def grade_mask(
    mask: Mask,
    spacing_mm: float | tuple[float, float, float],
    clinical: ClinicalInputs = ClinicalInputs(),
    thresholds: GradingThresholds = GradingThresholds(),
) -> GradeReport:
    """测量病灶特征并叠加外部输入后分级"""
    summary = lesion_features(mask, spacing_mm, clinical.disc, clinical.fovea)
    summary = dataclasses.replace(
        summary,
        subretinal_seeding=clinical.subretinal_seeding,
        vitreous_seeding=clinical.vitreous_seeding,
        advanced_flags=clinical.advanced_flags,
    )
    return grade(summary, clinical.findings, thresholds)


def run_pipeline(
    config: RunConfig,
    volume: Volume,
    model_path: Path,
    out_dir: Path | None = None,
    truth: Mask | None = None,
    clinical: ClinicalInputs = ClinicalInputs(),
    stats: Sequence[VoterStats] | None = None,
) -> PipelineResult:
    """端到端运行；任一阶段失败抛出以阶段名开头的 StageError。

    模型文件在任何阶段开始前检查，缺失时不写出任何产物。
    """
    model_path = Path(model_path)
    if not model_path.is_file():
        raise StageError("segment", ArtifactIOError(f"模型文件不存在: {model_path}"))
    with _stage("segment"):
        model = load_model(model_path)

    with _stage("denoise"):
        denoised = denoise_volume(volume, config.lpdmf)

    with _stage("segment"):
        segmentation = segment_volume(denoised, model, config.grid, config.aggregate, stats)
    mask = segmentation.mask

    with _stage("grade"):
        report = grade_mask(mask, volume.spacing_mm, clinical, config.grading)
        grade_text = grade_report(report)

    metrics_text = None
    if truth is not None:
        with _stage("evaluate"):
            counts = confusion(truth, mask)
            roc = None
            if 0 < truth.count < truth.labels.size:
                roc = roc_curve(segmentation.scores, truth)
            metrics_text = metrics_report(counts, roc)

    if out_dir is not None:
        with _stage("persist"):
            _persist(Path(out_dir), denoised, segmentation, grade_text, metrics_text)

    return PipelineResult(mask, report, grade_text, metrics_text, segmentation.scores, denoised)


def _persist(
    out_dir: Path,
    denoised: Volume,
    segmentation: Segmentation,
    grade_text: str,
    metrics_text: str | None,
) -> None:
    store = ArtifactStore(out_dir)
    save_volume(denoised, store.path_for("denoised.rbvol"))
    store.record("denoise", store.path_for("denoised.rbvol"))
    scores = Volume(denoised.dims, segmentation.scores, denoised.spacing_mm)
    save_volume(scores, store.path_for("scores.rbvol"))
    store.record("segment.scores", store.path_for("scores.rbvol"))
    save_mask(segmentation.mask, store.path_for("mask.rbmask"))
    store.record("segment", store.path_for("mask.rbmask"))
    _write_text(store.path_for("grade.txt"), grade_text)
    store.record("grade", store.path_for("grade.txt"))
    if metrics_text is not None:
        _write_text(store.path_for("metrics.txt"), metrics_text)
        store.record("evaluate", store.path_for("metrics.txt"))
    store.save()
    logger.info("💾 产物已写入 %s (%d 项)", out_dir, store.count)


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"无法写入 {path}: {e}") from e
