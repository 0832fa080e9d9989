"""合成体模 — 带已知肿瘤掩膜、地标与播散标签的体数据，以及椒盐噪声注入"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.ndimage import map_coordinates

from rbdiag_cli.config import (
    DEFAULT_GRID_SIZE,
    DEFAULT_GRID_SPACING,
    DEFAULT_PHANTOM_DIAMETER_MM,
    DEFAULT_PHANTOM_DIMS,
    DEFAULT_SLICE_STEP,
    DEFAULT_SLICES,
    DEFAULT_SPACING_MM,
    PLACEMENT_ATTEMPTS,
)
from rbdiag_cli.errors import InsufficientClassVoxelsError, UnplaceableTumorError
from rbdiag_cli.grading import AdvancedFlag, LesionSummary, Seeding, lesion_features
from rbdiag_cli.imaging import Mask, Plane, Volume
from rbdiag_cli.patcher import Patch, build_grids, sample_patch

logger = logging.getLogger(__name__)

BACKGROUND_RANGE = (0.2, 0.6)
TUMOR_INTENSITY_RANGE = (0.8, 0.98)
VALUE_NOISE_CELL = 8


class Texture(str, Enum):
    FLAT = "flat"
    GRADIENT = "gradient"
    VALUE_NOISE = "value_noise"


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int] = DEFAULT_PHANTOM_DIMS
    spacing_mm: float = DEFAULT_SPACING_MM
    tumor_count: int = 2
    diameter_range_mm: tuple[float, float] = DEFAULT_PHANTOM_DIAMETER_MM
    background: Texture = Texture.VALUE_NOISE
    noise_density: float = 0.0
    seed: int = 7
    subretinal_seeding: Seeding = Seeding.NONE
    vitreous_seeding: Seeding = Seeding.NONE
    advanced_flags: frozenset[AdvancedFlag] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "background", Texture(self.background))
        lo, hi = self.diameter_range_mm
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise ValueError(f"体模尺寸非法: {self.dims}")
        if self.spacing_mm <= 0:
            raise ValueError(f"spacing_mm 必须 > 0，实际 {self.spacing_mm}")
        if not 0 < lo <= hi:
            raise ValueError(f"直径范围非法: {self.diameter_range_mm}")
        if not 0.0 <= self.noise_density < 1.0:
            raise ValueError(f"噪声密度必须位于 [0, 1)，实际 {self.noise_density}")
        if self.tumor_count < 0:
            raise ValueError(f"tumor_count 不能为负，实际 {self.tumor_count}")


@dataclass(frozen=True)
class Tumor:
    center: tuple[int, int, int]
    radii: tuple[float, float, float]
    intensity: float

    @property
    def diameter_vox(self) -> float:
        return 2.0 * max(self.radii)


@dataclass(frozen=True, eq=False)
class PhantomTruth:
    volume: Volume
    mask: Mask
    summary: LesionSummary
    clean_volume: Volume
    disc: tuple[int, int, int]
    fovea: tuple[int, int, int]
    tumors: tuple[Tumor, ...] = ()


def landmarks(dims: tuple[int, int, int]) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
    """视盘与黄斑中心凹的固定相对位置"""
    nx, ny, nz = dims
    disc = (round(0.8 * (nx - 1)), round(0.5 * (ny - 1)), nz // 2)
    fovea = (round(0.5 * (nx - 1)), round(0.5 * (ny - 1)), nz // 2)
    return disc, fovea


def _background(spec: PhantomSpec, rng: np.random.Generator) -> np.ndarray:
    lo, hi = BACKGROUND_RANGE
    if spec.background is Texture.FLAT:
        return np.full(spec.dims, (lo + hi) / 2.0)
    if spec.background is Texture.GRADIENT:
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        coords = np.indices(spec.dims, dtype=np.float64)
        ramp = np.tensordot(direction, coords, axes=1)
        span = ramp.max() - ramp.min()
        unit = (ramp - ramp.min()) / span if span > 0 else np.zeros(spec.dims)
        return lo + (hi - lo) * unit
    lattice_shape = tuple(math.ceil(d / VALUE_NOISE_CELL) + 1 for d in spec.dims)
    lattice = rng.random(lattice_shape)
    coords = np.indices(spec.dims, dtype=np.float64) / VALUE_NOISE_CELL
    noise = map_coordinates(lattice, coords.reshape(3, -1), order=1, mode="nearest").reshape(spec.dims)
    return lo + (hi - lo) * noise


def _place_tumors(spec: PhantomSpec, rng: np.random.Generator) -> list[Tumor]:
    tumors: list[Tumor] = []
    lo, hi = spec.diameter_range_mm
    for index in range(spec.tumor_count):
        diameter_vox = rng.uniform(lo, hi) / spec.spacing_mm
        radius = diameter_vox / 2.0
        radii = radius * np.r_[1.0, rng.uniform(0.7, 1.0, size=2)]
        radii = tuple(float(r) for r in rng.permutation(radii))
        intensity = float(rng.uniform(*TUMOR_INTENSITY_RANGE))
        reach = math.ceil(radius) + 1
        bounds = [(reach, d - 1 - reach) for d in spec.dims]
        if any(b_lo > b_hi for b_lo, b_hi in bounds):
            raise UnplaceableTumorError(f"第 {index + 1} 个肿瘤 (直径 {diameter_vox:.1f} 体素) 放不进 {spec.dims}")
        for _ in range(PLACEMENT_ATTEMPTS):
            center = tuple(int(rng.integers(b_lo, b_hi + 1)) for b_lo, b_hi in bounds)
            if all(
                math.dist(center, t.center) > radius + max(t.radii) + 2.0
                for t in tumors
            ):
                tumors.append(Tumor(center, radii, intensity))
                break
        else:
            raise UnplaceableTumorError(f"第 {index + 1} 个肿瘤在 {PLACEMENT_ATTEMPTS} 次尝试后仍无法放置")
    return tumors


def _paint(tumors: list[Tumor], dims: tuple[int, int, int], background: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    voxels = background.copy()
    labels = np.zeros(dims, dtype=np.uint8)
    grid = np.indices(dims, dtype=np.float64)
    for t in tumors:
        inside = sum(((grid[a] - t.center[a]) / t.radii[a]) ** 2 for a in range(3)) <= 1.0
        voxels[inside] = t.intensity
        labels[inside] = 1
    return voxels, labels


def generate_phantom(spec: PhantomSpec = PhantomSpec()) -> PhantomTruth:
    """按种子确定性地生成体模。

    纹理背景位于 [0.2, 0.6]，椭球肿瘤强度位于 [0.8, 0.98]，互不重叠；
    掩膜与被涂成肿瘤的体素完全一致。
    """
    rng = np.random.default_rng(spec.seed)
    background = _background(spec, rng)
    tumors = _place_tumors(spec, rng)
    voxels, labels = _paint(tumors, spec.dims, background)

    spacing = (spec.spacing_mm,) * 3
    clean = Volume(spec.dims, voxels, spacing)
    mask = Mask(spec.dims, labels)
    disc, fovea = landmarks(spec.dims)

    measured = lesion_features(mask, spec.spacing_mm, disc, fovea)
    summary = dataclasses.replace(
        measured,
        max_diameter_mm=max((t.diameter_vox for t in tumors), default=0.0) * spec.spacing_mm,
        component_count=len(tumors),
        subretinal_seeding=spec.subretinal_seeding,
        vitreous_seeding=spec.vitreous_seeding,
        advanced_flags=spec.advanced_flags,
    )
    noisy = add_impulse_noise(clean, spec.noise_density, spec.seed + 1) if spec.noise_density > 0 else clean
    logger.debug("🧪 体模 %s: %d 个肿瘤, %d 个肿瘤体素", spec.dims, len(tumors), mask.count)
    return PhantomTruth(noisy, mask, summary, clean, disc, fovea, tuple(tumors))


def add_impulse_noise(p: Plane | Volume, density: float, seed: int) -> Plane | Volume:
    """按种子选出约 density 比例的像素，各以 1/2 概率置为 0 或 1，其余不变"""
    if not 0.0 <= density < 1.0:
        raise ValueError(f"噪声密度必须位于 [0, 1)，实际 {density}")
    rng = np.random.default_rng(seed)
    values = np.array(p.pixels if isinstance(p, Plane) else p.voxels, dtype=np.float64)
    selected = rng.random(values.shape) < density
    values[selected] = rng.integers(0, 2, size=int(selected.sum())).astype(np.float64)
    if isinstance(p, Plane):
        return Plane(p.width, p.height, values, p.spacing_mm)
    return Volume(p.dims, values, p.spacing_mm)


def make_patch_dataset(
    truths: list[PhantomTruth],
    per_volume: int,
    seed: int,
    n: int = DEFAULT_GRID_SIZE,
    slices: int = DEFAULT_SLICES,
    slice_step: float = DEFAULT_SLICE_STEP,
    spacing: float = DEFAULT_GRID_SPACING,
) -> list[Patch]:
    """每个体模取 per_volume 个基准 XY 网格 patch，一半中心在肿瘤内（标签 1），一半在背景（标签 0）"""
    if per_volume < 2:
        raise ValueError(f"per_volume 必须 ≥ 2，实际 {per_volume}")
    rng = np.random.default_rng(seed)
    n_tumor = per_volume // 2
    n_background = per_volume - n_tumor
    patches: list[Patch] = []
    for index, truth in enumerate(truths):
        for label, wanted in ((1, n_tumor), (0, n_background)):
            candidates = np.argwhere(truth.mask.labels == label)
            if len(candidates) < wanted:
                raise InsufficientClassVoxelsError(
                    f"第 {index} 个体模只有 {len(candidates)} 个类别 {label} 体素，需要 {wanted}"
                )
            chosen = candidates[rng.choice(len(candidates), size=wanted, replace=False)]
            for center in chosen:
                grid = build_grids(tuple(float(c) for c in center), n, spacing)[0]
                patches.append(sample_patch(truth.volume, grid, slices, slice_step, label=label))
    logger.info("🧩 已生成 %d 个带标签 patch", len(patches))
    return patches
