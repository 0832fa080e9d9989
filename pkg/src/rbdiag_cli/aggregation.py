"""多网格投票融合 — 多数投票与按敏感度/特异度加权的贝叶斯融合"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from rbdiag_cli.config import DEFAULT_FUSION_MODE, DEFAULT_VOTER_ALPHA, DEFAULT_VOTER_BETA
from rbdiag_cli.errors import DegenerateDenominatorError, DimMismatchError, EmptyVotesError
from rbdiag_cli.imaging import Mask, Volume

logger = logging.getLogger(__name__)


class FusionMode(str, Enum):
    VOTE = "vote"
    BAYES = "bayes"


@dataclass(frozen=True)
class VoterStats:
    """单个投票者的敏感度 alpha 与特异度 beta"""

    alpha: float = DEFAULT_VOTER_ALPHA
    beta: float = DEFAULT_VOTER_BETA

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError(f"alpha/beta 必须位于 [0, 1]，实际 {self.alpha}/{self.beta}")


@dataclass(frozen=True)
class VoxelVotes:
    x: tuple[float, ...]
    stats: tuple[VoterStats, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        if not self.x:
            raise EmptyVotesError("投票集合为空")
        if any(not 0.0 <= v <= 1.0 for v in self.x):
            raise ValueError(f"投票值必须位于 [0, 1]: {self.x}")
        if self.stats is not None and len(self.stats) != len(self.x):
            raise DimMismatchError(f"stats 数量 {len(self.stats)} ≠ 投票数 {len(self.x)}")


@dataclass(frozen=True)
class AggregationConfig:
    mode: FusionMode = FusionMode(DEFAULT_FUSION_MODE)
    alpha: float = DEFAULT_VOTER_ALPHA
    beta: float = DEFAULT_VOTER_BETA

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", FusionMode(self.mode))
        VoterStats(self.alpha, self.beta)

    @property
    def default_stats(self) -> VoterStats:
        return VoterStats(self.alpha, self.beta)


def mean_vote(v: VoxelVotes | Sequence[float]) -> float:
    """α = Σ x^i / |N|"""
    values = v.x if isinstance(v, VoxelVotes) else tuple(v)
    if not values:
        raise EmptyVotesError("投票集合为空")
    return float(np.sum(np.sort(np.asarray(values, dtype=np.float64)))) / len(values)


def majority_label(alpha: float) -> int:
    """α > 0.5 为 1；恰为 0.5 时判为背景"""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha 必须位于 [0, 1]，实际 {alpha}")
    return 1 if alpha > 0.5 else 0


def bayes_fuse(stats: VoterStats, x: float | np.ndarray) -> float | np.ndarray:
    """μ = αx / (αx + β(1 − x))，对数组逐元素计算"""
    arr = np.asarray(x, dtype=np.float64)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("x 必须位于 [0, 1]")
    if stats.alpha == stats.beta and stats.alpha > 0.0:
        fused = arr.copy()
    else:
        numerator = stats.alpha * arr
        denominator = numerator + stats.beta * (1.0 - arr)
        if np.any(denominator == 0.0):
            raise DegenerateDenominatorError(
                f"αx + β(1−x) = 0 (alpha={stats.alpha}, beta={stats.beta})"
            )
        fused = numerator / denominator
    return float(fused) if fused.ndim == 0 else fused


def fuse_votes(v: VoxelVotes) -> float:
    """逐投票者贝叶斯融合后取平均；未给 stats 时使用默认值"""
    stats = v.stats or (VoterStats(),) * len(v.x)
    return mean_vote([bayes_fuse(s, x) for s, x in zip(stats, v.x)])


def _stack(per_grid_probs: Sequence[np.ndarray | Volume]) -> np.ndarray:
    if len(per_grid_probs) == 0:
        raise EmptyVotesError("没有任何网格的概率体")
    arrays = [np.asarray(p.voxels if isinstance(p, Volume) else p, dtype=np.float64) for p in per_grid_probs]
    shape = arrays[0].shape
    if len(shape) != 3:
        raise DimMismatchError(f"概率体必须为三维，实际 {shape}")
    for a in arrays[1:]:
        if a.shape != shape:
            raise DimMismatchError(f"概率体尺寸不一致: {shape} vs {a.shape}")
    stacked = np.stack(arrays)
    if stacked.size and (stacked.min() < 0.0 or stacked.max() > 1.0):
        raise ValueError("概率值必须位于 [0, 1]")
    return stacked


def aggregate_scores(
    per_grid_probs: Sequence[np.ndarray | Volume],
    stats: Sequence[VoterStats] | None = None,
    mode: FusionMode | str = FusionMode.BAYES,
) -> np.ndarray:
    """逐体素的连续融合分数 (vote 模式为平均概率，bayes 模式为融合值的平均)"""
    mode = FusionMode(mode)
    stacked = _stack(per_grid_probs)
    if mode is FusionMode.BAYES:
        stats = list(stats) if stats is not None else [VoterStats()] * len(stacked)
        if len(stats) != len(stacked):
            raise DimMismatchError(f"stats 数量 {len(stats)} ≠ 网格数 {len(stacked)}")
        stacked = np.stack([bayes_fuse(s, p) for s, p in zip(stats, stacked)])
    # 先沿投票者轴排序再求和，保证与网格顺序无关
    return np.sort(stacked, axis=0).sum(axis=0) / len(stacked)


def aggregate_segmentation(
    per_grid_probs: Sequence[np.ndarray | Volume],
    stats: Sequence[VoterStats] | None = None,
    mode: FusionMode | str = FusionMode.BAYES,
) -> Mask:
    """把每个网格的肿瘤概率体融合为一个二值掩膜"""
    scores = aggregate_scores(per_grid_probs, stats, mode)
    labels = (scores > 0.5).astype(np.uint8)
    logger.debug("🗳️ 融合 %d 个网格 (%s): %d 个肿瘤体素", len(per_grid_probs), FusionMode(mode).value, int(labels.sum()))
    return Mask(tuple(int(d) for d in scores.shape), labels)


def calibrate_voter_stats(
    per_grid_probs: Sequence[np.ndarray | Volume],
    truth: Mask,
    fallback: VoterStats = VoterStats(),
) -> list[VoterStats]:
    """在带标注的留出体数据上测量每个网格的敏感度/特异度（阈值 0.5）。

    无法测量的比率（分母为 0）回退到 fallback。
    """
    stacked = _stack(per_grid_probs)
    if stacked.shape[1:] != truth.dims:
        raise DimMismatchError(f"概率体 {stacked.shape[1:]} 与真值 {truth.dims} 尺寸不一致")
    positive = truth.labels == 1
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    result = []
    for probs in stacked:
        predicted = probs > 0.5
        alpha = int((predicted & positive).sum()) / n_pos if n_pos else fallback.alpha
        beta = int((~predicted & ~positive).sum()) / n_neg if n_neg else fallback.beta
        result.append(VoterStats(alpha, beta))
    logger.info("📏 已标定 %d 个投票者", len(result))
    return result
