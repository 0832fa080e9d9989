"""图像与体数据容器 — PGM/PPM 读写、绿色通道、2D→3D 提升、掩膜与体数据文件"""

import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rbdiag_cli.config import (
    DEFAULT_SPACING_MM,
    MASK_MAGIC,
    PNM_MAXVAL,
    VOLUME_MAGIC,
)
from rbdiag_cli.errors import (
    ArtifactIOError,
    DimMismatchError,
    MalformedHeaderError,
    MalformedMaskFileError,
    MalformedVolumeFileError,
    TruncatedPayloadError,
    UnsupportedMaxvalError,
    ZeroDepthError,
)

logger = logging.getLogger(__name__)


# ========================================================================
# 数据类型
# ========================================================================


@dataclass(frozen=True, eq=False)
class Plane:
    """单通道 2D 图像，pixels[y, x] ∈ [0, 1]"""

    width: int
    height: int
    pixels: np.ndarray
    spacing_mm: float = DEFAULT_SPACING_MM

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"图像尺寸必须 ≥ 1，实际 {self.width}×{self.height}")
        if self.spacing_mm <= 0:
            raise ValueError(f"spacing_mm 必须 > 0，实际 {self.spacing_mm}")
        pixels = np.array(self.pixels, dtype=np.float64)
        if pixels.size != self.width * self.height:
            raise DimMismatchError(
                f"像素数 {pixels.size} 与 {self.width}×{self.height} 不符"
            )
        pixels = pixels.reshape(self.height, self.width)
        _check_unit_range(pixels)
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


@dataclass(frozen=True, eq=False)
class Volume:
    """3D 标量体数据，voxels[x, y, z] ∈ [0, 1]"""

    dims: tuple[int, int, int]
    voxels: np.ndarray
    spacing_mm: tuple[float, float, float] = (
        DEFAULT_SPACING_MM,
        DEFAULT_SPACING_MM,
        DEFAULT_SPACING_MM,
    )

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError(f"体数据尺寸非法: {self.dims}")
        spacing = tuple(float(s) for s in self.spacing_mm)
        if len(spacing) != 3 or min(spacing) <= 0:
            raise ValueError(f"体素间距必须全部 > 0: {self.spacing_mm}")
        voxels = np.array(self.voxels, dtype=np.float64)
        if voxels.size != dims[0] * dims[1] * dims[2]:
            raise DimMismatchError(f"体素数 {voxels.size} 与尺寸 {dims} 不符")
        voxels = voxels.reshape(dims)
        _check_unit_range(voxels)
        voxels.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing_mm", spacing)
        object.__setattr__(self, "voxels", voxels)

    def slice_plane(self, z: int) -> Plane:
        """取出第 z 层为 Plane（x 为列，y 为行）"""
        return Plane(
            width=self.dims[0],
            height=self.dims[1],
            pixels=self.voxels[:, :, z].T,
            spacing_mm=self.spacing_mm[0],
        )


@dataclass(frozen=True, eq=False)
class Mask:
    """二值掩膜，labels[x, y, z] ∈ {0, 1}，1 为肿瘤"""

    dims: tuple[int, int, int]
    labels: np.ndarray

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) < 0:
            raise ValueError(f"掩膜尺寸非法: {self.dims}")
        labels = np.asarray(self.labels)
        if labels.size != dims[0] * dims[1] * dims[2]:
            raise DimMismatchError(f"标签数 {labels.size} 与尺寸 {dims} 不符")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise ValueError("掩膜标签只能为 0 或 1")
        labels = labels.astype(np.uint8).reshape(dims)
        labels.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def empty(cls, dims: tuple[int, int, int]) -> "Mask":
        return cls(dims, np.zeros(dims, dtype=np.uint8))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mask):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.labels, other.labels)

    @property
    def count(self) -> int:
        return int(self.labels.sum())


def _check_unit_range(values: np.ndarray) -> None:
    if values.size and (not np.isfinite(values).all() or values.min() < 0.0 or values.max() > 1.0):
        raise ValueError("强度值必须位于 [0, 1]")


# ========================================================================
# PGM / PPM
# ========================================================================

_TOKEN_RE = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_header(data: bytes) -> tuple[bytes, list[int], int]:
    """解析 PNM 头，返回 (magic, [width, height, maxval], 负载起始偏移)"""
    values: list[bytes] = []
    pos = 0
    for _ in range(4):
        match = _TOKEN_RE.match(data, pos)
        if not match:
            raise MalformedHeaderError("PNM 文件头不完整")
        values.append(match.group(1))
        pos = match.end()
    # 头部与负载之间恰好一个空白字符
    if pos >= len(data) or data[pos:pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise MalformedHeaderError("PNM 文件头后缺少空白分隔符")
    magic = values[0]
    if magic not in (b"P5", b"P6"):
        raise MalformedHeaderError(f"不支持的 PNM 类型: {magic!r}（仅支持 P5/P6）")
    try:
        numbers = [int(v) for v in values[1:]]
    except ValueError as e:
        raise MalformedHeaderError(f"PNM 文件头数值非法: {e}") from e
    if numbers[0] < 1 or numbers[1] < 1:
        raise MalformedHeaderError(f"PNM 尺寸非法: {numbers[0]}×{numbers[1]}")
    return magic, numbers, pos + 1


def load_plane(path: Path, spacing_mm: float = DEFAULT_SPACING_MM) -> Plane:
    """读取 8-bit 二进制 PGM (P5) / PPM (P6)。

    PPM 取绿色通道；强度除以 255 归一化到 [0, 1]。

    Raises:
        MalformedHeaderError: 文件头格式错误
        UnsupportedMaxvalError: maxval 不是 255
        TruncatedPayloadError: 像素数据不足
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOError(f"无法读取图像 {path}: {e}") from e

    magic, (width, height, maxval), offset = _read_header(data)
    if maxval != PNM_MAXVAL:
        raise UnsupportedMaxvalError(f"仅支持 maxval={PNM_MAXVAL}，实际 {maxval}")

    channels = 3 if magic == b"P6" else 1
    expected = width * height * channels
    payload = data[offset:offset + expected]
    if len(payload) < expected:
        raise TruncatedPayloadError(f"像素数据不足: 需要 {expected} 字节，实际 {len(payload)}")

    raw = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    if channels == 3:
        r, g, b = (_plane_from_bytes(raw[:, :, c], spacing_mm) for c in range(3))
        return extract_green_channel(r, g, b)
    return _plane_from_bytes(raw[:, :, 0], spacing_mm)


def _plane_from_bytes(raw: np.ndarray, spacing_mm: float) -> Plane:
    height, width = raw.shape
    return Plane(width, height, raw.astype(np.float64) / PNM_MAXVAL, spacing_mm)


def save_plane(plane: Plane, path: Path) -> None:
    """写出 8-bit P5 PGM（四舍五入到最近灰度级）"""
    raw = np.rint(plane.pixels * PNM_MAXVAL).astype(np.uint8)
    header = f"P5\n{plane.width} {plane.height}\n{PNM_MAXVAL}\n".encode("ascii")
    _write_bytes(Path(path), header + raw.tobytes())


def extract_green_channel(r: Plane, g: Plane, b: Plane) -> Plane:
    """选择绿色通道（显式流水线阶段，返回 g 本身）"""
    if not (r.shape == g.shape == b.shape):
        raise DimMismatchError(f"通道尺寸不一致: R{r.shape} G{g.shape} B{b.shape}")
    return g


# ========================================================================
# 2D → 3D
# ========================================================================


def lift_to_volume(plane: Plane, depth: int) -> Volume:
    """将 2D 图像沿 z 复制 depth 层，z 间距默认等于面内间距"""
    if depth < 1:
        raise ZeroDepthError(f"depth 必须 ≥ 1，实际 {depth}")
    voxels = np.repeat(plane.pixels.T[:, :, np.newaxis], depth, axis=2)
    spacing = plane.spacing_mm
    return Volume((plane.width, plane.height, depth), voxels, (spacing, spacing, spacing))


# ========================================================================
# 掩膜 / 体数据文件
# ========================================================================


def _write_bytes(path: Path, payload: bytes) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    except OSError as e:
        raise ArtifactIOError(f"无法写入 {path}: {e}") from e
    logger.debug("💾 已写入 %s (%d 字节)", path, len(payload))


def _read_bytes(path: Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOError(f"无法读取 {path}: {e}") from e


def _split_header(data: bytes, magic: bytes, error: type[Exception]) -> tuple[list[str], bytes]:
    if not data.startswith(magic):
        raise error(f"文件 magic 不匹配，期望 {magic!r}")
    end = data.find(b"\n", len(magic))
    if end < 0:
        raise error("缺少尺寸行")
    return data[len(magic):end].decode("ascii", errors="replace").split(), data[end + 1:]


def save_mask(mask: Mask, path: Path) -> None:
    """写出 RBMASK1 掩膜文件（x 最快顺序）"""
    nx, ny, nz = mask.dims
    if nx * ny * nz == 0:
        raise MalformedMaskFileError("拒绝写出 0 体素掩膜")
    header = MASK_MAGIC + f"{nx} {ny} {nz}\n".encode("ascii")
    _write_bytes(Path(path), header + mask.labels.tobytes(order="F"))


def load_mask(path: Path) -> Mask:
    """读取 RBMASK1 掩膜文件"""
    fields, payload = _split_header(_read_bytes(path), MASK_MAGIC, MalformedMaskFileError)
    try:
        nx, ny, nz = (int(f) for f in fields)
    except ValueError as e:
        raise MalformedMaskFileError(f"尺寸行非法: {fields}") from e
    if min(nx, ny, nz) < 1:
        raise MalformedMaskFileError(f"尺寸必须全部 ≥ 1，实际 {nx}×{ny}×{nz}")
    count = nx * ny * nz
    if len(payload) != count:
        raise MalformedMaskFileError(f"标签字节数 {len(payload)} 与尺寸 {nx}×{ny}×{nz} 不符")
    labels = np.frombuffer(payload, dtype=np.uint8)
    if labels.max() > 1:
        raise MalformedMaskFileError(f"非法标签字节 {int(labels.max())}")
    return Mask((nx, ny, nz), labels.reshape((nx, ny, nz), order="F"))


def save_volume(volume: Volume, path: Path) -> None:
    """写出 RBVOL1 体数据文件（little-endian float32，x 最快）"""
    nx, ny, nz = volume.dims
    sx, sy, sz = volume.spacing_mm
    header = VOLUME_MAGIC + f"{nx} {ny} {nz} {sx!r} {sy!r} {sz!r}\n".encode("ascii")
    _write_bytes(Path(path), header + volume.voxels.astype("<f4").tobytes(order="F"))


def load_volume(path: Path) -> Volume:
    """读取 RBVOL1 体数据文件"""
    fields, payload = _split_header(_read_bytes(path), VOLUME_MAGIC, MalformedVolumeFileError)
    if len(fields) != 6:
        raise MalformedVolumeFileError(f"尺寸行应有 6 个字段，实际 {len(fields)}")
    try:
        nx, ny, nz = (int(f) for f in fields[:3])
        spacing = tuple(float(f) for f in fields[3:6])
    except ValueError as e:
        raise MalformedVolumeFileError(f"尺寸行非法: {fields}") from e
    if min(nx, ny, nz) < 1:
        raise MalformedVolumeFileError(f"尺寸必须全部 ≥ 1，实际 {nx}×{ny}×{nz}")
    expected = nx * ny * nz * 4
    if len(payload) != expected:
        raise MalformedVolumeFileError(f"数据字节数 {len(payload)} ≠ {expected}")
    voxels = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    bad = ~((voxels >= 0.0) & (voxels <= 1.0))
    if bad.any():
        raise MalformedVolumeFileError(f"{int(bad.sum())} 个体素不在 [0, 1] 内（含 NaN）")
    return Volume((nx, ny, nz), voxels.reshape((nx, ny, nz), order="F"), spacing)
