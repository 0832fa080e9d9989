"""2.75D patch 提取 — 球面螺旋采样点、每个中心九个定向采样网格、三线性插值切片栈"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.ndimage import map_coordinates

from rbdiag_cli.config import (
    DEFAULT_GRID_SIZE,
    DEFAULT_GRID_SPACING,
    DEFAULT_SLICE_STEP,
    DEFAULT_SLICES,
    GRID_TILTS_DEG,
    PATCH_MAGIC,
    UNLABELED,
)
from rbdiag_cli.errors import ArtifactIOError, MalformedPatchArchiveError
from rbdiag_cli.imaging import Volume

logger = logging.getLogger(__name__)

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

_UNIT_TOL = 1e-9


# ========================================================================
# 球面采样点
# ========================================================================


@dataclass(frozen=True)
class SpherePoint:
    """球面点: latitude ∈ [0, 2π) 为绕极轴角，longitude ∈ [0, π] 为自北极的角"""

    latitude: float
    longitude: float
    position: tuple[float, float, float]

    def __post_init__(self) -> None:
        norm = math.sqrt(sum(c * c for c in self.position))
        if abs(norm - 1.0) > _UNIT_TOL:
            raise ValueError(f"球面点必须为单位向量，|p| = {norm}")


def sphere_point_count(scale: int, circles: int) -> float:
    """离散求和 Σ_{α=0..n} 2N·|sin(απ/n)|"""
    if scale < 1 or circles < 1:
        raise ValueError("N 与 n 必须 ≥ 1")
    alpha = np.arange(circles + 1)
    return float(np.sum(2.0 * scale * np.abs(np.sin(alpha * math.pi / circles))))


def sphere_point_closed_form(scale: int) -> float:
    """n → ∞ 且 N = n 时的闭式 4N²/π"""
    return 4.0 * scale * scale / math.pi


def spiral_points(scale: int) -> list[SpherePoint]:
    """沿球面螺旋放置采样点。

    第 α 个水平圆（α = 0..N）位于 longitude απ/N，放置 round(2N·|sin(απ/N)|) 个等距点，
    每个圆的起始 latitude 按黄金角旋转。
    """
    if scale < 1:
        raise ValueError("N 必须 ≥ 1")
    points: list[SpherePoint] = []
    for alpha in range(scale + 1):
        longitude = alpha * math.pi / scale
        count = int(math.floor(2.0 * scale * abs(math.sin(longitude)) + 0.5))
        if count == 0:
            continue
        start = alpha * GOLDEN_ANGLE
        for j in range(count):
            latitude = (start + 2.0 * math.pi * j / count) % (2.0 * math.pi)
            s = math.sin(longitude)
            position = (s * math.cos(latitude), s * math.sin(latitude), math.cos(longitude))
            norm = math.sqrt(sum(c * c for c in position))
            points.append(SpherePoint(latitude, longitude, tuple(c / norm for c in position)))
    return points


# ========================================================================
# 采样网格
# ========================================================================


class PlaneId(str, Enum):
    XY = "XY"
    YZ = "YZ"
    XZ = "XZ"


# 各基准平面的 (u, v)：XY 垂直于 Z，YZ 垂直于 X，XZ 垂直于 Y
_BASE_AXES = {
    PlaneId.XY: ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
    PlaneId.YZ: ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
    PlaneId.XZ: ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
}


@dataclass(frozen=True)
class SamplingGrid:
    """以 center 为中心、由 (u_axis, v_axis) 张成的 n×n 平面采样网格"""

    center: tuple[float, float, float]
    u_axis: tuple[float, float, float]
    v_axis: tuple[float, float, float]
    n: int
    spacing: float
    plane_id: PlaneId
    tilt_deg: float

    def __post_init__(self) -> None:
        u = np.asarray(self.u_axis)
        v = np.asarray(self.v_axis)
        if abs(float(u @ v)) > _UNIT_TOL:
            raise ValueError("u_axis 与 v_axis 必须正交")
        if abs(np.linalg.norm(u) - 1.0) > _UNIT_TOL or abs(np.linalg.norm(v) - 1.0) > _UNIT_TOL:
            raise ValueError("u_axis 与 v_axis 必须为单位向量")
        if self.n < 1 or self.spacing <= 0:
            raise ValueError(f"需满足 n ≥ 1 且 spacing > 0，实际 n={self.n} spacing={self.spacing}")

    @property
    def normal(self) -> np.ndarray:
        return np.cross(self.u_axis, self.v_axis)

    def points(self, offset: float = 0.0) -> np.ndarray:
        """网格采样点坐标，形状 (n, n, 3)；offset 为沿法向的位移"""
        steps = (np.arange(self.n) - (self.n - 1) / 2.0) * self.spacing
        u = np.asarray(self.u_axis)
        v = np.asarray(self.v_axis)
        base = np.asarray(self.center) + offset * self.normal
        return base + steps[:, None, None] * u + steps[None, :, None] * v


def build_grids(
    center: tuple[float, float, float],
    n: int = DEFAULT_GRID_SIZE,
    spacing: float = DEFAULT_GRID_SPACING,
) -> list[SamplingGrid]:
    """生成九个共享中心的网格。

    顺序为倾斜角优先: 先是 0° 的 XY、YZ、XZ 三个基准网格，
    再是 −45°、+45° 各三个（绕各自法向旋转）。
    前 1 / 3 / 9 个分别对应 2D / 2.5D / 2.75D 视角模式。
    """
    if n < 1:
        raise ValueError(f"网格边长 n 必须 ≥ 1，实际 {n}")
    center = tuple(float(c) for c in center)
    grids = []
    for tilt in GRID_TILTS_DEG:
        theta = math.radians(tilt)
        c, s = math.cos(theta), math.sin(theta)
        for plane_id in PlaneId:
            u0, v0 = (np.asarray(a) for a in _BASE_AXES[plane_id])
            u = c * u0 + s * v0
            v = -s * u0 + c * v0
            grids.append(
                SamplingGrid(
                    center=center,
                    u_axis=tuple(float(a) for a in u),
                    v_axis=tuple(float(a) for a in v),
                    n=n,
                    spacing=spacing,
                    plane_id=plane_id,
                    tilt_deg=tilt,
                )
            )
    return grids


# ========================================================================
# Patch
# ========================================================================


@dataclass(frozen=True, eq=False)
class Patch:
    """n×n×s 强度栈，附带来源网格与可选训练标签"""

    data: np.ndarray
    provenance: tuple[SamplingGrid, ...] = field(default_factory=tuple)
    label: int | None = None

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[0] != data.shape[1]:
            raise ValueError(f"patch 形状必须为 n×n×s，实际 {data.shape}")
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise ValueError("patch 强度必须位于 [0, 1]")
        if self.label is not None and self.label not in (0, 1):
            raise ValueError(f"标签只能为 0/1/None，实际 {self.label}")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def slices(self) -> int:
        return self.data.shape[2]


def _slice_offsets(slices: int, slice_step: float) -> np.ndarray:
    return (np.arange(slices) - (slices - 1) / 2.0) * slice_step


def sample_patch(
    volume: Volume,
    grid: SamplingGrid,
    slices: int = DEFAULT_SLICES,
    slice_step: float = DEFAULT_SLICE_STEP,
    label: int | None = None,
) -> Patch:
    """在网格平面及其法向平移层上做三线性插值；体外采样点读 0"""
    if slices < 1:
        raise ValueError(f"slices 必须 ≥ 1，实际 {slices}")
    coords = np.stack([grid.points(offset) for offset in _slice_offsets(slices, slice_step)], axis=2)
    # coords: (n, n, slices, 3) -> (3, n*n*slices)
    flat = coords.reshape(-1, 3).T
    values = map_coordinates(volume.voxels, flat, order=1, mode="constant", cval=0.0)
    data = np.clip(values.reshape(grid.n, grid.n, slices), 0.0, 1.0)
    return Patch(data=data, provenance=(grid,) * slices, label=label)


def enumerate_centers(
    volume: Volume,
    stride: int,
    margin: int = 0,
) -> list[tuple[float, float, float]]:
    """以 stride 为步长、距每个面至少 margin 的中心点格点"""
    if stride < 1:
        raise ValueError(f"stride 必须 ≥ 1，实际 {stride}")
    axes = [center_axis(dim, stride, margin) for dim in volume.dims]
    return [
        (float(x), float(y), float(z))
        for x in axes[0]
        for y in axes[1]
        for z in axes[2]
    ]


def center_axis(dim: int, stride: int, margin: int) -> np.ndarray:
    """单个轴上的中心坐标"""
    return np.arange(margin, dim - margin, stride)


# ========================================================================
# Patch 归档
# ========================================================================


def save_patches(patches: list[Patch], path: Path) -> None:
    """写出 RBPATCH1 归档: 头 + float32 数据 + 每个 patch 一个标签字节"""
    if not patches:
        raise MalformedPatchArchiveError("拒绝写出空 patch 归档")
    n, slices = patches[0].n, patches[0].slices
    if any(p.data.shape != (n, n, slices) for p in patches):
        raise MalformedPatchArchiveError("归档内 patch 形状必须一致")
    body = np.stack([p.data for p in patches]).astype("<f4").tobytes()
    labels = bytes(UNLABELED if p.label is None else p.label for p in patches)
    header = PATCH_MAGIC + f"{len(patches)} {n} {slices}\n".encode("ascii")
    try:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(header + body + labels)
    except OSError as e:
        raise ArtifactIOError(f"无法写入 {path}: {e}") from e
    logger.debug("💾 已写入 %d 个 patch -> %s", len(patches), path)


def load_patches(path: Path) -> list[Patch]:
    """读取 RBPATCH1 归档（不恢复来源网格）"""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOError(f"无法读取 {path}: {e}") from e
    if not data.startswith(PATCH_MAGIC):
        raise MalformedPatchArchiveError(f"文件 magic 不匹配，期望 {PATCH_MAGIC!r}")
    end = data.find(b"\n", len(PATCH_MAGIC))
    try:
        count, n, slices = (int(f) for f in data[len(PATCH_MAGIC):end].split())
    except ValueError as e:
        raise MalformedPatchArchiveError("头部字段非法") from e
    body_len = count * n * n * slices * 4
    payload = data[end + 1:]
    if count < 1 or len(payload) != body_len + count:
        raise MalformedPatchArchiveError(f"归档长度 {len(payload)} 与头部 {count}×{n}×{n}×{slices} 不符")
    arrays = np.frombuffer(payload[:body_len], dtype="<f4").astype(np.float64)
    arrays = np.clip(arrays.reshape(count, n, n, slices), 0.0, 1.0)
    patches = []
    for array, raw_label in zip(arrays, payload[body_len:]):
        if raw_label not in (0, 1, UNLABELED):
            raise MalformedPatchArchiveError(f"非法标签字节 {raw_label}")
        patches.append(Patch(array, label=None if raw_label == UNLABELED else raw_label))
    return patches
