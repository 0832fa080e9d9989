"""配置与常量"""

from pathlib import Path

# ========================================================================
# 文件格式
# ========================================================================

# 二值掩膜文件: magic + "nx ny nz\n" + nx*ny*nz 字节 (0/1)
MASK_MAGIC = b"RBMASK1\n"

# 体数据文件: magic + "nx ny nz sx sy sz\n" + little-endian float32 (x 最快)
VOLUME_MAGIC = b"RBVOL1\n"

# Patch 归档: magic + "count n slices\n" + float32 数据 + 每个 patch 一个标签字节
PATCH_MAGIC = b"RBPATCH1\n"

# 模型文件: magic + ASCII 层描述 + float32 权重
MODEL_MAGIC = b"RBMODEL1\n"

# Patch 归档中表示 "无标签" 的字节
UNLABELED = 255

# 8-bit PGM/PPM 唯一支持的 maxval
PNM_MAXVAL = 255

# ========================================================================
# 路径配置
# ========================================================================

# 用户配置目录
CONFIG_DIR = Path.home() / ".rbdiag-cli"

# 持久化配置文件
USER_CONFIG_FILE = CONFIG_DIR / "config.json"

# 默认输出目录
DEFAULT_OUTPUT_DIR = Path.cwd() / "rbdiag_out"

# 中间产物清单文件名
ARTIFACT_MANIFEST_FILE = "manifest.json"

# ========================================================================
# 成像
# ========================================================================

# 每像素毫米数（眼底相机未给出，需由配置提供）
DEFAULT_SPACING_MM = 0.25

# 2D 眼底图提升为体数据时的切片数
DEFAULT_LIFT_DEPTH = 64

# ========================================================================
# LPDMF 去噪
# ========================================================================

DEFAULT_WINDOW_RADIUS = 1
DEFAULT_MAX_RADIUS = 2
MAX_ALLOWED_RADIUS = 3
DEFAULT_LOW_CLIP = 0.0
DEFAULT_HIGH_CLIP = 1.0
DEFAULT_DENSITY_SWITCH = 0.5

# 最大窗口内全为噪声且此前无输出像素时的替代值
FALLBACK_INTENSITY = 0.5

# ========================================================================
# 采样网格
# ========================================================================

DEFAULT_GRID_SIZE = 64
DEFAULT_GRID_SPACING = 1.0
DEFAULT_SLICES = 9
DEFAULT_SLICE_STEP = 1.0
DEFAULT_CENTER_STRIDE = 8
DEFAULT_CENTER_MARGIN = 0

# 网格倾斜角度（度）
GRID_TILTS_DEG = (0.0, -45.0, 45.0)

# 视角模式 -> 每个中心使用的网格数
VIEW_GRID_COUNTS = {
    "2d": 1,
    "2.5d": 3,
    "2.75d": 9,
}
DEFAULT_VIEWS = "2.75d"

# ========================================================================
# 网络与训练
# ========================================================================

DEFAULT_CONV_CHANNELS = (24, 32, 48)
DEFAULT_KERNEL_SIZES = (5, 3, 3)
DEFAULT_HIDDEN_UNITS = 16
DEFAULT_CLASSES = 2
DEFAULT_NET_SEED = 7

DEFAULT_LEARNING_RATE = 0.01
DEFAULT_EPOCHS = 5
DEFAULT_BATCH_SIZE = 16
DEFAULT_TRAIN_SEED = 7

# 推理时每批 patch 数
PREDICT_BATCH_SIZE = 64

# ========================================================================
# 融合与分级
# ========================================================================

# 未标定时每个投票者的 (敏感度, 特异度)
DEFAULT_VOTER_ALPHA = 0.9
DEFAULT_VOTER_BETA = 0.9
DEFAULT_FUSION_MODE = "bayes"

# Group A 判定阈值 (mm)
DEFAULT_SMALL_TUMOR_MM = 3.0
DEFAULT_DISC_CLEARANCE_MM = 1.5
DEFAULT_FOVEA_CLEARANCE_MM = 3.0

# ========================================================================
# 体模
# ========================================================================

DEFAULT_PHANTOM_DIMS = (64, 64, 64)
DEFAULT_PHANTOM_DIAMETER_MM = (1.5, 3.5)
PLACEMENT_ATTEMPTS = 1000

# 报告中浮点数位数
REPORT_DECIMALS = 6
