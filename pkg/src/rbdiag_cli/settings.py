"""运行配置 — key = value 配置文件解析，以及保存到 ~/.rbdiag-cli/config.json 的用户默认值"""

import dataclasses
import json
import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from rbdiag_cli.aggregation import AggregationConfig, FusionMode
from rbdiag_cli.config import (
    CONFIG_DIR,
    DEFAULT_CENTER_MARGIN,
    DEFAULT_CENTER_STRIDE,
    DEFAULT_GRID_SIZE,
    DEFAULT_GRID_SPACING,
    DEFAULT_LIFT_DEPTH,
    DEFAULT_SLICE_STEP,
    DEFAULT_SLICES,
    DEFAULT_SPACING_MM,
    DEFAULT_VIEWS,
    USER_CONFIG_FILE,
    VIEW_GRID_COUNTS,
)
from rbdiag_cli.errors import ArtifactIOError, ConfigTypeError, InvalidConfigError, UnknownKeyError
from rbdiag_cli.grading import GradingThresholds
from rbdiag_cli.lpdmf import FilterParams
from rbdiag_cli.micronet import NetworkConfig, TrainConfig

logger = logging.getLogger(__name__)

CONFIG_FILE = USER_CONFIG_FILE


# ========================================================================
# 配置分节
# ========================================================================


@dataclass(frozen=True)
class ImagingConfig:
    spacing_mm: float = DEFAULT_SPACING_MM
    depth: int = DEFAULT_LIFT_DEPTH

    def __post_init__(self) -> None:
        if self.spacing_mm <= 0 or self.depth < 1:
            raise ValueError(f"成像配置非法: {self}")


@dataclass(frozen=True)
class GridConfig:
    """采样网格几何与中心点格点"""

    size: int = DEFAULT_GRID_SIZE
    spacing: float = DEFAULT_GRID_SPACING
    slices: int = DEFAULT_SLICES
    slice_step: float = DEFAULT_SLICE_STEP
    stride: int = DEFAULT_CENTER_STRIDE
    margin: int = DEFAULT_CENTER_MARGIN
    views: str = DEFAULT_VIEWS

    def __post_init__(self) -> None:
        if self.size < 1 or self.slices < 1 or self.stride < 1 or self.margin < 0:
            raise ValueError(f"网格配置非法: {self}")
        if self.spacing <= 0 or self.slice_step <= 0:
            raise ValueError(f"spacing 与 slice_step 必须 > 0: {self}")
        if self.views not in VIEW_GRID_COUNTS:
            raise ValueError(f"views 必须为 {', '.join(VIEW_GRID_COUNTS)} 之一，实际 {self.views}")

    @property
    def grid_count(self) -> int:
        return VIEW_GRID_COUNTS[self.views]


@dataclass(frozen=True)
class RunConfig:
    """一次运行的全部可调参数。net 的输入尺寸始终与 grid 保持一致"""

    imaging: ImagingConfig = field(default_factory=ImagingConfig)
    lpdmf: FilterParams = field(default_factory=FilterParams)
    grid: GridConfig = field(default_factory=GridConfig)
    net: NetworkConfig = field(default_factory=NetworkConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    aggregate: AggregationConfig = field(default_factory=AggregationConfig)
    grading: GradingThresholds = field(default_factory=GradingThresholds)
    seed: int | None = None

    def __post_init__(self) -> None:
        net = dataclasses.replace(self.net, input_size=self.grid.size, slices=self.grid.slices)
        train = self.train
        if self.seed is not None:
            net = dataclasses.replace(net, seed=self.seed)
            train = dataclasses.replace(train, seed=self.seed)
        object.__setattr__(self, "net", net)
        object.__setattr__(self, "train", train)


# ========================================================================
# 类型转换
# ========================================================================


def _to_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError(value)
    if isinstance(value, int):
        return value
    return int(str(value).strip())


def _to_float(value: Any) -> float:
    if isinstance(value, bool):
        raise ValueError(value)
    return float(str(value).strip()) if isinstance(value, str) else float(value)


def _to_int_tuple(value: Any) -> tuple[int, ...]:
    parts = value if isinstance(value, (list, tuple)) else str(value).split(",")
    result = tuple(_to_int(p) for p in parts)
    if not result:
        raise ValueError(value)
    return result


def _to_views(value: Any) -> str:
    text = str(value).strip().lower()
    if text not in VIEW_GRID_COUNTS:
        raise ValueError(value)
    return text


def _to_mode(value: Any) -> FusionMode:
    return FusionMode(str(value).strip().lower())


# 允许的配置项: key -> (分节, 字段, 类型转换)
ALLOWED_KEYS: dict[str, tuple[str, str, Callable[[Any], Any]]] = {
    "imaging.spacing_mm": ("imaging", "spacing_mm", _to_float),
    "imaging.depth": ("imaging", "depth", _to_int),
    "lpdmf.radius": ("lpdmf", "window_radius", _to_int),
    "lpdmf.max_radius": ("lpdmf", "max_radius", _to_int),
    "lpdmf.low_clip": ("lpdmf", "low_clip", _to_float),
    "lpdmf.high_clip": ("lpdmf", "high_clip", _to_float),
    "lpdmf.density_switch": ("lpdmf", "density_switch", _to_float),
    "grid.size": ("grid", "size", _to_int),
    "grid.spacing": ("grid", "spacing", _to_float),
    "grid.slices": ("grid", "slices", _to_int),
    "grid.slice_step": ("grid", "slice_step", _to_float),
    "grid.stride": ("grid", "stride", _to_int),
    "grid.margin": ("grid", "margin", _to_int),
    "grid.views": ("grid", "views", _to_views),
    "net.conv_channels": ("net", "conv_channels", _to_int_tuple),
    "net.kernel_sizes": ("net", "kernel_sizes", _to_int_tuple),
    "net.hidden_units": ("net", "hidden_units", _to_int),
    "net.classes": ("net", "classes", _to_int),
    "net.seed": ("net", "seed", _to_int),
    "train.learning_rate": ("train", "learning_rate", _to_float),
    "train.epochs": ("train", "epochs", _to_int),
    "train.batch_size": ("train", "batch_size", _to_int),
    "train.seed": ("train", "seed", _to_int),
    "aggregate.mode": ("aggregate", "mode", _to_mode),
    "aggregate.alpha": ("aggregate", "alpha", _to_float),
    "aggregate.beta": ("aggregate", "beta", _to_float),
    "grading.small_tumor_mm": ("grading", "small_tumor_mm", _to_float),
    "grading.disc_clearance_mm": ("grading", "disc_clearance_mm", _to_float),
    "grading.fovea_clearance_mm": ("grading", "fovea_clearance_mm", _to_float),
    "seed": ("", "seed", _to_int),
}

# 长度必须一致、只能先后分别设置的配置项
PAIRED_KEYS = {
    "net.conv_channels": "net.kernel_sizes",
    "net.kernel_sizes": "net.conv_channels",
}


def convert_value(key: str, value: Any) -> Any:
    """把原始值转换为配置项声明的类型

    Raises:
        UnknownKeyError: 未知配置项
        ConfigTypeError: 值无法转换，消息为配置项名称
    """
    if key not in ALLOWED_KEYS:
        raise UnknownKeyError(f"不支持的配置项 '{key}'")
    converter = ALLOWED_KEYS[key][2]
    try:
        return converter(value)
    except (TypeError, ValueError) as e:
        raise ConfigTypeError(key) from e


def build_run_config(values: dict[str, Any]) -> RunConfig:
    """按已转换的 key -> value 覆盖默认值"""
    sections: dict[str, dict[str, Any]] = {}
    seed = None
    for key, value in values.items():
        section, name, _ = ALLOWED_KEYS[key]
        if not section:
            seed = value
        else:
            sections.setdefault(section, {})[name] = value
    base = RunConfig()
    try:
        parts = {
            name: dataclasses.replace(getattr(base, name), **overrides)
            for name, overrides in sections.items()
        }
        return RunConfig(**parts, seed=seed)
    except ValueError as e:
        raise InvalidConfigError(str(e)) from e


def parse_config_values(text: str) -> dict[str, Any]:
    """解析 `key = value` 文本，返回已转换的值；`#` 之后为注释"""
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"第 {lineno} 行缺少 '=': {raw.strip()}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = convert_value(key, value)
    return values


def parse_config(text: str) -> RunConfig:
    """解析配置文本，未出现的项取默认值"""
    return build_run_config(parse_config_values(text))


def load_run_config(path: Optional[Path] = None, seed: Optional[int] = None) -> RunConfig:
    """解析最终配置: 默认值 < 用户保存的配置 < 配置文件 < 命令行 --seed"""
    values: dict[str, Any] = {}
    saved = _get_settings().all()
    for key, value in sorted(saved.items()):
        if key not in ALLOWED_KEYS:
            logger.warning("⚠️ 忽略 %s 中不支持的配置项 '%s'", CONFIG_FILE, key)
            continue
        values[key] = convert_value(key, value)
    if values:
        logger.info("⚙️ 应用已保存的配置: %s", ", ".join(f"{k}={v}" for k, v in values.items()))
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ArtifactIOError(f"无法读取配置文件 {path}: {e}", stage="config") from e
        values.update(parse_config_values(text))
    if seed is not None:
        values["seed"] = seed
    return build_run_config(values)


# ========================================================================
# 用户配置持久化
# ========================================================================


class UserSettings:
    """读写 ~/.rbdiag-cli/config.json 的管理器，key 与配置文件相同"""

    def __init__(self) -> None:
        self._data: dict[str, Any] = self._load()

    # ------------------------------------------------------------------
    # 读写
    # ------------------------------------------------------------------

    def _load(self) -> dict[str, Any]:
        if CONFIG_FILE.exists():
            try:
                return json.loads(CONFIG_FILE.read_text(encoding="utf-8"))
            except (json.JSONDecodeError, OSError):
                logger.warning("⚠️ 无法读取 %s，忽略已保存的配置", CONFIG_FILE)
                return {}
        return {}

    def _save(self) -> None:
        CONFIG_DIR.mkdir(parents=True, exist_ok=True)
        CONFIG_FILE.write_text(
            json.dumps(self._data, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    # ------------------------------------------------------------------
    # 公共 API
    # ------------------------------------------------------------------

    def get(self, key: str) -> Optional[Any]:
        """获取某项配置值，不存在返回 None"""
        return self._data.get(key)

    def all(self) -> dict[str, Any]:
        """返回所有已保存的配置"""
        return dict(self._data)

    def set(self, key: str, value: str) -> Any:
        """设置配置项，自动做类型转换并校验组合后的配置。返回转换后的值。

        成对的 net.conv_channels / net.kernel_sizes 允许暂时长度不一致，
        只要该项本身合法；组合是否一致由 load_run_config 检查。
        """
        converted = convert_value(key, value)
        candidate = {k: convert_value(k, v) for k, v in self._data.items() if k in ALLOWED_KEYS}
        candidate[key] = converted
        try:
            build_run_config(candidate)
        except InvalidConfigError:
            partner = PAIRED_KEYS.get(key)
            if partner is None:
                raise
            build_run_config({key: converted, partner: (1,) * len(converted)})
            logger.warning("⚠️ %s 与 %s 长度不一致，请同时设置 %s", key, partner, partner)
        if isinstance(converted, tuple):
            converted = list(converted)
        self._data[key] = converted.value if isinstance(converted, FusionMode) else converted
        self._save()
        return converted

    def remove(self, key: str) -> bool:
        """删除某项配置，返回是否存在并已删除"""
        if key in self._data:
            del self._data[key]
            self._save()
            return True
        return False

    def clear(self) -> int:
        """清除所有配置，返回清除的条目数"""
        count = len(self._data)
        self._data.clear()
        self._save()
        return count


_settings = None


def _get_settings() -> UserSettings:
    global _settings
    if _settings is None:
        _settings = UserSettings()
    return _settings
