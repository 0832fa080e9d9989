"""LPDMF 线性预测决策中值滤波 — 只替换脉冲像素，优先使用已去噪的邻域值"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from rbdiag_cli.config import (
    DEFAULT_DENSITY_SWITCH,
    DEFAULT_HIGH_CLIP,
    DEFAULT_LOW_CLIP,
    DEFAULT_MAX_RADIUS,
    DEFAULT_WINDOW_RADIUS,
    FALLBACK_INTENSITY,
    MAX_ALLOWED_RADIUS,
)
from rbdiag_cli.errors import DimMismatchError, EmptySetError
from rbdiag_cli.imaging import Plane, Volume

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilterParams:
    """窗口几何、脉冲判定阈值与噪声密度切换点"""

    window_radius: int = DEFAULT_WINDOW_RADIUS
    max_radius: int = DEFAULT_MAX_RADIUS
    low_clip: float = DEFAULT_LOW_CLIP
    high_clip: float = DEFAULT_HIGH_CLIP
    density_switch: float = DEFAULT_DENSITY_SWITCH

    def __post_init__(self) -> None:
        if not 1 <= self.window_radius <= self.max_radius <= MAX_ALLOWED_RADIUS:
            raise ValueError(
                f"需满足 1 ≤ window_radius ≤ max_radius ≤ {MAX_ALLOWED_RADIUS}，"
                f"实际 {self.window_radius}/{self.max_radius}"
            )
        if not 0.0 <= self.low_clip < self.high_clip <= 1.0:
            raise ValueError(f"需满足 0 ≤ low_clip < high_clip ≤ 1，实际 {self.low_clip}/{self.high_clip}")
        if not 0.0 < self.density_switch <= 1.0:
            raise ValueError(f"density_switch 必须位于 (0, 1]，实际 {self.density_switch}")


def detect_impulse(v: float, params: FilterParams = FilterParams()) -> bool:
    """椒盐极值判定: v ≤ low_clip 或 v ≥ high_clip"""
    return bool(v <= params.low_clip or v >= params.high_clip)


def median_of(values: Sequence[float] | np.ndarray) -> float:
    """下中位数 — 排序后下标 ⌊(k−1)/2⌋ 的元素，保证是集合中真实存在的值"""
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptySetError("中位数集合为空")
    k = arr.size
    return float(np.partition(arr, (k - 1) // 2)[(k - 1) // 2])


def denoise(plane: Plane, params: FilterParams = FilterParams()) -> Plane:
    """按行优先顺序做一次因果扫描。

    非脉冲像素原样保留；脉冲像素取窗口内 "干净值 ∪ 已去噪输出" 的下中位数。
    窗口内仍为噪声的比例超过 density_switch 时逐步扩大窗口；
    最大窗口内仍无可用值时，取扫描顺序上的前一个输出像素（没有则取 0.5）。
    """
    src = plane.pixels
    out = np.array(src, dtype=np.float64)
    # pending: 尚未处理的脉冲像素；处理后其输出值即并入替代集合 z
    pending = (src <= params.low_clip) | (src >= params.high_clip)
    height, width = out.shape
    replaced = 0

    for y, x in zip(*np.nonzero(pending)):
        value = None
        for radius in range(params.window_radius, params.max_radius + 1):
            rows = slice(max(0, y - radius), min(height, y + radius + 1))
            cols = slice(max(0, x - radius), min(width, x + radius + 1))
            noisy = pending[rows, cols]
            candidates = out[rows, cols][~noisy]
            if candidates.size == 0:
                continue
            if noisy.mean() <= params.density_switch or radius == params.max_radius:
                value = median_of(candidates)
                break
        if value is None:
            value = _previous_output(out, y, x)
        out[y, x] = value
        pending[y, x] = False
        replaced += 1

    logger.debug("🧹 LPDMF: %d×%d 图像替换 %d 个脉冲像素", width, height, replaced)
    return Plane(width, height, out, plane.spacing_mm)


def _previous_output(out: np.ndarray, y: int, x: int) -> float:
    if x > 0:
        return float(out[y, x - 1])
    if y > 0:
        return float(out[y - 1, -1])
    return FALLBACK_INTENSITY


def denoise_volume(volume: Volume, params: FilterParams = FilterParams()) -> Volume:
    """逐 z 层独立去噪"""
    voxels = np.empty_like(volume.voxels)
    for z in range(volume.dims[2]):
        voxels[:, :, z] = denoise(volume.slice_plane(z), params).pixels.T
    return Volume(volume.dims, voxels, volume.spacing_mm)


def psnr(a: Plane, b: Plane) -> float:
    """峰值信噪比 10·log10(1/MSE)，MSE 为 0 时返回 +inf"""
    if a.shape != b.shape:
        raise DimMismatchError(f"图像尺寸不一致: {a.shape} vs {b.shape}")
    mse = float(np.mean((a.pixels - b.pixels) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)
