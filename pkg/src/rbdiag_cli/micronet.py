"""最小 CNN 引擎 — 前向、反向、SGD，以及逐层参数量计算表"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from rbdiag_cli.config import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_CLASSES,
    DEFAULT_CONV_CHANNELS,
    DEFAULT_EPOCHS,
    DEFAULT_GRID_SIZE,
    DEFAULT_HIDDEN_UNITS,
    DEFAULT_KERNEL_SIZES,
    DEFAULT_LEARNING_RATE,
    DEFAULT_NET_SEED,
    DEFAULT_SLICES,
    DEFAULT_TRAIN_SEED,
    MODEL_MAGIC,
    PREDICT_BATCH_SIZE,
)
from rbdiag_cli.errors import (
    ArtifactIOError,
    MalformedModelFileError,
    OddSpatialDimError,
    ShapeMismatchError,
    ShapeUnderflowError,
    SingleClassDatasetError,
    UnlabeledPatchError,
)
from rbdiag_cli.patcher import Patch

logger = logging.getLogger(__name__)

Shape = tuple[int, ...]
LayerGrads = tuple[np.ndarray, np.ndarray] | None


# ========================================================================
# 参数量计算
# ========================================================================


def layer_param_count(w: int, h: int, lf: int, cf: int, *, bias: bool = True) -> int:
    """卷积层参数量 ((w × h × lf) + 1) × cf；bias=False 时只计卷积核 w × h × lf × cf"""
    if min(w, h, lf, cf) < 1:
        raise ValueError("w, h, lf, cf 必须 ≥ 1")
    return ((w * h * lf) + int(bias)) * cf


def fc_param_count(pf: int, cf: int) -> int:
    """全连接层参数量 cf × pf + 1 × cf"""
    if min(pf, cf) < 1:
        raise ValueError("pf, cf 必须 ≥ 1")
    return cf * pf + cf


@dataclass(frozen=True)
class ParamRow:
    name: str
    shape_label: str
    activation_shape: Shape
    activation_size: int
    parameters: int


def layer_param_table() -> list[ParamRow]:
    """逐层激活形状、激活大小与参数量的十行参考表。

    激活形状是固定的参考值；参数量由两个计数公式算出，
    其中第 2、3 个卷积层行只计卷积核、不计偏置。
    """

    def row(name: str, shape: Shape, params: int, label: str | None = None) -> ParamRow:
        label = label or "(" + ",".join(str(d) for d in shape) + ")"
        return ParamRow(name, label, shape, int(np.prod(shape)), params)

    return [
        row("Input", (64, 64, 64), 0, label="64×64×64"),
        row("Convolution Layer 1", (24, 24, 8), layer_param_count(5, 5, 1, 8)),
        row("Maxpool Layer 1", (2, 2, 8), 0),
        row("Convolution Layer 2", (32, 32, 8), layer_param_count(3, 3, 24, 16, bias=False)),
        row("Maxpool Layer 2", (2, 2, 8), 0),
        row("Convolution Layer 3", (48, 48, 8), layer_param_count(3, 3, 32, 32, bias=False)),
        row("Maxpool Layer 3", (2, 2, 8), 0),
        row("Fully connected Layer 3", (110, 1), fc_param_count(70, 110)),
        row("Fully connected Layer 4", (70, 1), fc_param_count(110, 70)),
        row("Softmax Layer", (10, 1), fc_param_count(70, 10)),
    ]


# ========================================================================
# 层定义
# ========================================================================


class LayerKind(str, Enum):
    CONV = "conv"
    MAXPOOL = "maxpool"
    RELU = "relu"
    FC = "fc"
    SOFTMAX = "softmax"


@dataclass(frozen=True)
class LayerSpec:
    """单层描述；out_channels 对卷积是输出通道数，对全连接是输出单元数"""

    kind: LayerKind
    kernel: tuple[int, int] = (1, 1)
    out_channels: int = 0
    stride: int = 1
    pool: tuple[int, int] = (2, 2)

    def __post_init__(self) -> None:
        if self.kind is LayerKind.CONV:
            if self.stride < 1 or min(self.kernel) < 1 or self.out_channels < 1:
                raise ValueError(f"卷积层参数非法: {self}")
        if self.kind is LayerKind.FC and self.out_channels < 1:
            raise ValueError(f"全连接层输出单元必须 ≥ 1: {self}")
        if self.kind is LayerKind.MAXPOOL and self.pool != (2, 2):
            raise ValueError("池化窗口固定为不重叠的 2×2")

    @property
    def has_params(self) -> bool:
        return self.kind in (LayerKind.CONV, LayerKind.FC)


def output_shape(spec: LayerSpec, in_shape: Shape) -> Shape:
    """推导单层输出形状；无法组合时抛出 ShapeUnderflowError"""
    if spec.kind is LayerKind.CONV:
        if len(in_shape) != 3:
            raise ShapeUnderflowError(f"卷积层需要 (h, w, c) 输入，实际 {in_shape}")
        h, w, _ = in_shape
        kh, kw = spec.kernel
        if h < kh or w < kw:
            raise ShapeUnderflowError(f"空间尺寸 {h}×{w} 小于卷积核 {kh}×{kw}")
        return ((h - kh) // spec.stride + 1, (w - kw) // spec.stride + 1, spec.out_channels)
    if spec.kind is LayerKind.MAXPOOL:
        if len(in_shape) != 3:
            raise ShapeUnderflowError(f"池化层需要 (h, w, c) 输入，实际 {in_shape}")
        h, w, c = in_shape
        if h < 2 or w < 2 or h % 2 or w % 2:
            raise ShapeUnderflowError(f"池化层输入空间尺寸必须为偶数，实际 {h}×{w}")
        return (h // 2, w // 2, c)
    if spec.kind is LayerKind.FC:
        return (spec.out_channels,)
    return in_shape


# ========================================================================
# 模型
# ========================================================================


@dataclass
class Model:
    """有序层列表 + 每层 (权重, 偏置)"""

    input_shape: Shape
    layers: list[LayerSpec]
    weights: list[LayerGrads]
    rng_seed: int = DEFAULT_NET_SEED
    shapes: list[Shape] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.layers):
            raise ShapeMismatchError("weights 与 layers 数量不一致")
        shapes = [tuple(self.input_shape)]
        for spec, params in zip(self.layers, self.weights):
            in_shape = shapes[-1]
            out = output_shape(spec, in_shape)
            if spec.has_params:
                if params is None:
                    raise ShapeMismatchError(f"{spec.kind.value} 层缺少权重")
                weight, bias = params
                expected = _weight_shape(spec, in_shape)
                if weight.shape != expected or bias.shape != (spec.out_channels,):
                    raise ShapeMismatchError(
                        f"{spec.kind.value} 层权重形状 {weight.shape}/{bias.shape}，期望 {expected}/({spec.out_channels},)"
                    )
            elif params is not None:
                raise ShapeMismatchError(f"{spec.kind.value} 层不应有权重")
            shapes.append(out)
        self.shapes = shapes

    @property
    def output_shape(self) -> Shape:
        return self.shapes[-1]

    def copy(self) -> "Model":
        return Model(
            input_shape=self.input_shape,
            layers=list(self.layers),
            weights=[None if p is None else (p[0].copy(), p[1].copy()) for p in self.weights],
            rng_seed=self.rng_seed,
        )

    def param_count(self) -> int:
        return sum(p[0].size + p[1].size for p in self.weights if p is not None)


def _weight_shape(spec: LayerSpec, in_shape: Shape) -> Shape:
    if spec.kind is LayerKind.CONV:
        return (spec.kernel[0], spec.kernel[1], in_shape[2], spec.out_channels)
    return (int(np.prod(in_shape)), spec.out_channels)


@dataclass(frozen=True)
class NetworkConfig:
    input_size: int = DEFAULT_GRID_SIZE
    slices: int = DEFAULT_SLICES
    classes: int = DEFAULT_CLASSES
    conv_channels: tuple[int, ...] = DEFAULT_CONV_CHANNELS
    kernel_sizes: tuple[int, ...] = DEFAULT_KERNEL_SIZES
    hidden_units: int = DEFAULT_HIDDEN_UNITS
    seed: int = DEFAULT_NET_SEED

    def __post_init__(self) -> None:
        if self.classes < 2:
            raise ValueError(f"classes 必须 ≥ 2，实际 {self.classes}")
        if len(self.conv_channels) != len(self.kernel_sizes):
            raise ValueError("conv_channels 与 kernel_sizes 长度必须一致")
        if self.input_size < 1 or self.slices < 1 or self.hidden_units < 1:
            raise ValueError("input_size、slices、hidden_units 必须 ≥ 1")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = DEFAULT_LEARNING_RATE
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    seed: int = DEFAULT_TRAIN_SEED

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError(f"训练配置非法: {self}")


def build_network(cfg: NetworkConfig = NetworkConfig()) -> Model:
    """Conv → ReLU → MaxPool 重复三次，接 FC(hidden) → ReLU → FC(classes) → Softmax。

    权重取自种子化均匀分布 U(−r, r)，r = √(6 / (fan_in + fan_out))，偏置为 0。

    Raises:
        ShapeUnderflowError: 空间尺寸在全连接层之前耗尽
    """
    layers: list[LayerSpec] = []
    for channels, k in zip(cfg.conv_channels, cfg.kernel_sizes):
        layers += [
            LayerSpec(LayerKind.CONV, kernel=(k, k), out_channels=channels),
            LayerSpec(LayerKind.RELU),
            LayerSpec(LayerKind.MAXPOOL),
        ]
    layers += [
        LayerSpec(LayerKind.FC, out_channels=cfg.hidden_units),
        LayerSpec(LayerKind.RELU),
        LayerSpec(LayerKind.FC, out_channels=cfg.classes),
        LayerSpec(LayerKind.SOFTMAX),
    ]
    return init_model((cfg.input_size, cfg.input_size, cfg.slices), layers, cfg.seed)


def init_model(input_shape: Shape, layers: list[LayerSpec], seed: int) -> Model:
    """按层顺序用种子化 Glorot 均匀分布初始化权重"""
    rng = np.random.default_rng(seed)
    weights: list[LayerGrads] = []
    shape = tuple(input_shape)
    for spec in layers:
        if spec.has_params:
            w_shape = _weight_shape(spec, shape)
            if spec.kind is LayerKind.CONV:
                kh, kw, cin, cout = w_shape
                fan_in, fan_out = kh * kw * cin, kh * kw * cout
            else:
                fan_in, fan_out = w_shape
            r = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append((rng.uniform(-r, r, size=w_shape), np.zeros(spec.out_channels)))
        else:
            weights.append(None)
        shape = output_shape(spec, shape)
    return Model(tuple(input_shape), list(layers), weights, seed)


# ========================================================================
# 逐层前向 / 反向
# ========================================================================


def _batched(x: np.ndarray, ndim: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == ndim:
        return x[np.newaxis], True
    if x.ndim != ndim + 1:
        raise ShapeMismatchError(f"输入维度 {x.ndim} 不符合 {ndim} 或 {ndim + 1}")
    return x, False


def conv_forward(x: np.ndarray, kernels: np.ndarray, biases: np.ndarray, stride: int = 1) -> np.ndarray:
    """无填充卷积。x: (h, w, c) 或 (b, h, w, c)；kernels: (kh, kw, c, out)"""
    xb, single = _batched(x, 3)
    kh, kw, cin, cout = kernels.shape
    if xb.shape[3] != cin:
        raise ShapeMismatchError(f"输入通道 {xb.shape[3]} 与卷积核深度 {cin} 不符")
    if biases.shape != (cout,):
        raise ShapeMismatchError(f"偏置形状 {biases.shape} ≠ ({cout},)")
    if xb.shape[1] < kh or xb.shape[2] < kw:
        raise ShapeMismatchError(f"输入 {xb.shape[1]}×{xb.shape[2]} 小于卷积核 {kh}×{kw}")
    windows = sliding_window_view(xb, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    # windows: (b, oh, ow, c, kh, kw)
    out = np.tensordot(windows, kernels.transpose(2, 0, 1, 3), axes=([3, 4, 5], [0, 1, 2])) + biases
    return out[0] if single else out


def conv_backward(
    x: np.ndarray, kernels: np.ndarray, dout: np.ndarray, stride: int = 1
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """返回 (dx, dkernels, dbiases)"""
    xb, single = _batched(x, 3)
    db_, _ = _batched(dout, 3)
    kh, kw, _, _ = kernels.shape
    oh, ow = db_.shape[1], db_.shape[2]
    windows = sliding_window_view(xb, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    dkernels = np.tensordot(windows, db_, axes=([0, 1, 2], [0, 1, 2])).transpose(1, 2, 0, 3)
    dbiases = db_.sum(axis=(0, 1, 2))
    dx = np.zeros_like(xb)
    for i in range(kh):
        for j in range(kw):
            rows = slice(i, i + stride * (oh - 1) + 1, stride)
            cols = slice(j, j + stride * (ow - 1) + 1, stride)
            dx[:, rows, cols, :] += db_ @ kernels[i, j].T
    return (dx[0] if single else dx), dkernels, dbiases


def maxpool_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2×2 不重叠最大池化，返回 (输出, 每个窗口的 argmax 记录)"""
    xb, single = _batched(x, 3)
    b, h, w, c = xb.shape
    if h % 2 or w % 2:
        raise OddSpatialDimError(f"池化输入空间尺寸必须为偶数，实际 {h}×{w}")
    blocks = xb.reshape(b, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 5, 2, 4).reshape(b, h // 2, w // 2, c, 4)
    argmax = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, argmax[..., np.newaxis], axis=-1)[..., 0]
    if single:
        return out[0], argmax[0]
    return out, argmax


def maxpool_backward(dout: np.ndarray, argmax: np.ndarray) -> np.ndarray:
    """把梯度只路由到前向记录的 argmax 位置"""
    db_, single = _batched(dout, 3)
    am, _ = _batched(argmax, 3)
    b, oh, ow, c = db_.shape
    blocks = np.zeros((b, oh, ow, c, 4))
    np.put_along_axis(blocks, am.astype(np.intp)[..., np.newaxis], db_[..., np.newaxis], axis=-1)
    dx = blocks.reshape(b, oh, ow, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(b, oh * 2, ow * 2, c)
    return dx[0] if single else dx


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def fc_forward(x: np.ndarray, weights: np.ndarray, biases: np.ndarray) -> np.ndarray:
    """全连接: 展平后 x·W + b。x 为单样本时返回 (units,)"""
    x = np.asarray(x, dtype=np.float64)
    d_in, _ = weights.shape
    if x.ndim >= 2 and int(np.prod(x.shape[1:])) == d_in:
        return x.reshape(x.shape[0], d_in) @ weights + biases
    if x.size == d_in:
        return x.reshape(d_in) @ weights + biases
    raise ShapeMismatchError(f"全连接层输入 {x.shape} 无法展平为 {d_in}")


def softmax(x: np.ndarray) -> np.ndarray:
    """沿最后一维的数值稳定 softmax"""
    x = np.asarray(x, dtype=np.float64)
    shifted = np.exp(x - x.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """批平均交叉熵"""
    probs = np.atleast_2d(probs)
    targets = np.atleast_1d(targets)
    picked = probs[np.arange(len(targets)), targets]
    return float(-np.mean(np.log(np.maximum(picked, np.finfo(np.float64).tiny))))


# ========================================================================
# 整网前向 / 反向
# ========================================================================


def _check_input(model: Model, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    shape = tuple(model.input_shape)
    if x.shape == shape:
        return x[np.newaxis], True
    if x.shape[1:] != shape:
        raise ShapeMismatchError(f"输入形状 {x.shape} 与模型输入 {shape} 不符")
    return x, False


def _forward(model: Model, xb: np.ndarray) -> tuple[np.ndarray, list]:
    caches = []
    out = xb
    for spec, params in zip(model.layers, model.weights):
        caches.append(out)
        if spec.kind is LayerKind.CONV:
            out = conv_forward(out, params[0], params[1], spec.stride)
        elif spec.kind is LayerKind.MAXPOOL:
            out, argmax = maxpool_forward(out)
            caches[-1] = (caches[-1], argmax)
        elif spec.kind is LayerKind.RELU:
            out = relu(out)
        elif spec.kind is LayerKind.FC:
            out = fc_forward(out, params[0], params[1])
        else:
            out = softmax(out)
    return out, caches


def forward(model: Model, x: np.ndarray) -> np.ndarray:
    """单样本返回 (classes,)，批量返回 (b, classes)"""
    xb, single = _check_input(model, x)
    out, _ = _forward(model, xb)
    return out[0] if single else out


def _forward_backward(model: Model, x: np.ndarray, target) -> tuple[float, list[LayerGrads], np.ndarray]:
    if not model.layers or model.layers[-1].kind is not LayerKind.SOFTMAX:
        raise ShapeMismatchError("反向传播要求最后一层为 softmax")
    xb, _ = _check_input(model, x)
    targets = np.atleast_1d(np.asarray(target, dtype=np.intp))
    classes = model.output_shape[0]
    if targets.shape != (xb.shape[0],) or targets.min() < 0 or targets.max() >= classes:
        raise ShapeMismatchError(f"目标类别非法: {targets}")

    probs, caches = _forward(model, xb)
    loss = cross_entropy(probs, targets)

    onehot = np.zeros_like(probs)
    onehot[np.arange(len(targets)), targets] = 1.0
    # softmax 与交叉熵合并求导
    grad = (probs - onehot) / len(targets)
    grads: list[LayerGrads] = [None] * len(model.layers)

    for i in range(len(model.layers) - 2, -1, -1):
        spec, params, cache = model.layers[i], model.weights[i], caches[i]
        if spec.kind is LayerKind.FC:
            flat = cache.reshape(cache.shape[0], -1)
            grads[i] = (flat.T @ grad, grad.sum(axis=0))
            grad = (grad @ params[0].T).reshape(cache.shape)
        elif spec.kind is LayerKind.RELU:
            grad = grad * (cache > 0)
        elif spec.kind is LayerKind.MAXPOOL:
            grad = maxpool_backward(grad, cache[1])
        elif spec.kind is LayerKind.CONV:
            grad, dk, dbias = conv_backward(cache, params[0], grad, spec.stride)
            grads[i] = (dk, dbias)
        else:
            raise ShapeMismatchError("softmax 只能作为最后一层")
    return loss, grads, probs


def backward(model: Model, x: np.ndarray, target) -> list[LayerGrads]:
    """交叉熵损失对每层权重与偏置的精确梯度（批量时为批平均）"""
    _, grads, _ = _forward_backward(model, x, target)
    return grads


def loss(model: Model, x: np.ndarray, target) -> float:
    xb, _ = _check_input(model, x)
    return cross_entropy(_forward(model, xb)[0], np.atleast_1d(target))


# ========================================================================
# 训练与推理
# ========================================================================


@dataclass
class TrainingRun:
    model: Model
    losses: list[float]
    accuracies: list[float]


def _stack_labelled(patches: list[Patch]) -> tuple[np.ndarray, np.ndarray]:
    if not patches:
        raise SingleClassDatasetError("训练集为空")
    for i, p in enumerate(patches):
        if p.label is None:
            raise UnlabeledPatchError(f"第 {i} 个 patch 无标签")
    labels = np.array([p.label for p in patches], dtype=np.intp)
    if np.unique(labels).size < 2:
        raise SingleClassDatasetError(f"训练集只包含类别 {int(labels[0])}")
    return np.stack([p.data for p in patches]), labels


def fit(model: Model, patches: list[Patch], cfg: TrainConfig = TrainConfig()) -> TrainingRun:
    """小批量 SGD，返回新模型及每轮损失/准确率；给定种子时结果确定"""
    x, y = _stack_labelled(patches)
    if x.shape[1:] != tuple(model.input_shape):
        raise ShapeMismatchError(f"patch 形状 {x.shape[1:]} 与模型输入 {model.input_shape} 不符")
    if y.max() >= model.output_shape[0]:
        raise ShapeMismatchError(f"标签 {int(y.max())} 超出类别数 {model.output_shape[0]}")

    model = model.copy()
    rng = np.random.default_rng(cfg.seed)
    losses: list[float] = []
    accuracies: list[float] = []

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(y))
        total_loss = 0.0
        correct = 0
        for start in range(0, len(y), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            batch_loss, grads, probs = _forward_backward(model, x[idx], y[idx])
            total_loss += batch_loss * len(idx)
            correct += int((probs.argmax(axis=1) == y[idx]).sum())
            _sgd_step(model, grads, cfg.learning_rate)
        losses.append(total_loss / len(y))
        accuracies.append(correct / len(y))
        logger.info("🧠 epoch %d/%d  loss=%.4f  acc=%.3f", epoch + 1, cfg.epochs, losses[-1], accuracies[-1])

    return TrainingRun(model, losses, accuracies)


def train(model: Model, patches: list[Patch], cfg: TrainConfig = TrainConfig()) -> Model:
    """训练并返回更新后的模型（输入模型不被修改）"""
    return fit(model, patches, cfg).model


def _sgd_step(model: Model, grads: list[LayerGrads], lr: float) -> None:
    for params, g in zip(model.weights, grads):
        if params is None or g is None:
            continue
        params[0][...] -= lr * g[0]
        params[1][...] -= lr * g[1]


def predict(model: Model, patch: Patch | np.ndarray) -> np.ndarray:
    """单个 patch 的类别概率"""
    data = patch.data if isinstance(patch, Patch) else patch
    xb, single = _check_input(model, data)
    if not single:
        raise ShapeMismatchError(f"predict 只接受单个 patch，实际 {np.shape(data)}")
    return forward(model, data)


def predict_batch(model: Model, data: np.ndarray, batch_size: int = PREDICT_BATCH_SIZE) -> np.ndarray:
    """批量推理 (b, n, n, s) -> (b, classes)"""
    data = np.asarray(data, dtype=np.float64)
    if len(data) == 0:
        return np.zeros((0, model.output_shape[0]))
    return np.concatenate([forward(model, data[i:i + batch_size]) for i in range(0, len(data), batch_size)])


# ========================================================================
# 模型文件
# ========================================================================


def _spec_line(spec: LayerSpec) -> str:
    if spec.kind is LayerKind.CONV:
        return f"conv {spec.kernel[0]} {spec.kernel[1]} {spec.out_channels} {spec.stride}"
    if spec.kind is LayerKind.MAXPOOL:
        return "maxpool 2 2"
    if spec.kind is LayerKind.FC:
        return f"fc {spec.out_channels}"
    return spec.kind.value


def _parse_spec(line: str) -> LayerSpec:
    parts = line.split()
    kind = LayerKind(parts[0])
    if kind is LayerKind.CONV:
        kh, kw, out, stride = (int(p) for p in parts[1:5])
        return LayerSpec(kind, kernel=(kh, kw), out_channels=out, stride=stride)
    if kind is LayerKind.FC:
        return LayerSpec(kind, out_channels=int(parts[1]))
    return LayerSpec(kind)


def save_model(model: Model, path: Path) -> None:
    """写出 RBMODEL1 模型文件"""
    lines = [
        "input " + " ".join(str(d) for d in model.input_shape),
        f"seed {model.rng_seed}",
        f"layers {len(model.layers)}",
        *(_spec_line(s) for s in model.layers),
        "end",
    ]
    header = MODEL_MAGIC + ("\n".join(lines) + "\n").encode("ascii")
    body = b"".join(
        np.asarray(a).astype("<f4").tobytes()
        for params in model.weights if params is not None
        for a in params
    )
    try:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(header + body)
    except OSError as e:
        raise ArtifactIOError(f"无法写入模型 {path}: {e}") from e
    logger.debug("💾 模型已写入 %s (%d 个参数)", path, model.param_count())


def load_model(path: Path) -> Model:
    """读取 RBMODEL1 模型文件"""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOError(f"无法读取模型 {path}: {e}") from e
    if not data.startswith(MODEL_MAGIC):
        raise MalformedModelFileError(f"文件 magic 不匹配，期望 {MODEL_MAGIC!r}")
    marker = data.find(b"\nend\n")
    if marker < 0:
        raise MalformedModelFileError("模型头缺少 end 行")
    lines = data[len(MODEL_MAGIC):marker].decode("ascii", errors="replace").splitlines()
    body = data[marker + len(b"\nend\n"):]
    try:
        input_shape = tuple(int(v) for v in lines[0].split()[1:])
        seed = int(lines[1].split()[1])
        count = int(lines[2].split()[1])
        layers = [_parse_spec(line) for line in lines[3:3 + count]]
    except (IndexError, ValueError) as e:
        raise MalformedModelFileError(f"模型头非法: {e}") from e
    if len(layers) != count:
        raise MalformedModelFileError(f"层数 {len(layers)} ≠ 声明的 {count}")

    weights: list[LayerGrads] = []
    shape = input_shape
    offset = 0
    try:
        for spec in layers:
            if spec.has_params:
                w_shape = _weight_shape(spec, shape)
                arrays = []
                for s in (w_shape, (spec.out_channels,)):
                    size = int(np.prod(s))
                    chunk = body[offset:offset + size * 4]
                    if len(chunk) != size * 4:
                        raise MalformedModelFileError("权重数据不足")
                    arrays.append(np.frombuffer(chunk, dtype="<f4").astype(np.float64).reshape(s))
                    offset += size * 4
                weights.append((arrays[0], arrays[1]))
            else:
                weights.append(None)
            shape = output_shape(spec, shape)
    except ShapeUnderflowError as e:
        raise MalformedModelFileError(f"层形状无法组合: {e}") from e
    if offset != len(body):
        raise MalformedModelFileError(f"权重数据多出 {len(body) - offset} 字节")
    return Model(input_shape, layers, weights, seed)
