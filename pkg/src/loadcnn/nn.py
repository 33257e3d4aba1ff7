"""One-dimensional CNN for multi-step load forecasting.

Architecture: a single-channel valid convolution with ``F`` filters of length
``k`` (stride 1) and tanh, flattened position-major (channels last, index
``p * F + f``) to ``F * (W - k + 1)`` features, a hidden dense layer of width
``D`` with ReLU, and a linear output layer of width ``h``.  There is no pooling.

The convolution uses tanh rather than ReLU: with ~10^4 non-negative features
feeding the dense layer, Nadam's near sign-sized first steps shift every hidden
pre-activation coherently and kill the ReLU units within the first epoch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, ShapeMismatch, TraceMismatch
from .numerics import conv_windows

PARAM_NAMES = ("conv_weights", "conv_bias", "fc1_weights", "fc1_bias", "out_weights", "out_bias")


@dataclass(frozen=True)
class NetworkConfig:
    input_len: int = 672
    kernel_size: int = 9
    n_filters: int = 16
    dense_size: int = 6
    horizon: int = 144

    def __post_init__(self):
        for name in ("input_len", "kernel_size", "n_filters", "dense_size", "horizon"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise InvalidConfig(f"{name} must be a positive integer, got {v!r}")
        if self.kernel_size > self.input_len:
            raise InvalidConfig(
                f"kernel_size {self.kernel_size} exceeds input_len {self.input_len}")

    @property
    def conv_len(self) -> int:
        return self.input_len - self.kernel_size + 1

    @property
    def flat_len(self) -> int:
        return self.n_filters * self.conv_len

    @property
    def parameter_count(self) -> int:
        F, k, D, h = self.n_filters, self.kernel_size, self.dense_size, self.horizon
        return F * (k + 1) + D * (self.flat_len + 1) + h * (D + 1)

    def shapes(self) -> dict[str, tuple[int, ...]]:
        F, k, D, h = self.n_filters, self.kernel_size, self.dense_size, self.horizon
        return {
            "conv_weights": (F, k),
            "conv_bias": (F,),
            "fc1_weights": (D, self.flat_len),
            "fc1_bias": (D,),
            "out_weights": (h, D),
            "out_bias": (h,),
        }


@dataclass(eq=False)
class _ParamSet:
    conv_weights: np.ndarray
    conv_bias: np.ndarray
    fc1_weights: np.ndarray
    fc1_bias: np.ndarray
    out_weights: np.ndarray
    out_bias: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, name) for name in PARAM_NAMES]

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])


@dataclass(eq=False)
class Gradients(_ParamSet):
    pass


@dataclass(eq=False)
class Network(_ParamSet):
    config: NetworkConfig = None

    def __post_init__(self):
        if self.config is None:
            raise InvalidConfig("network needs a config")
        for name, shape in self.config.shapes().items():
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ShapeMismatch(f"{name} has shape {arr.shape}, expected {shape}")
            setattr(self, name, arr)

    @classmethod
    def zeros(cls, config: NetworkConfig) -> "Network":
        return cls(config=config, **{n: np.zeros(s) for n, s in config.shapes().items()})

    def with_parameters(self, arrays) -> "Network":
        return Network(config=self.config, **dict(zip(PARAM_NAMES, arrays)))

    def copy(self) -> "Network":
        return self.with_parameters([a.copy() for a in self.arrays()])

    @property
    def parameter_count(self) -> int:
        return sum(a.size for a in self.arrays())


@dataclass(eq=False)
class ForwardTrace:
    network: Network
    inputs: np.ndarray      # (B, W)
    windows: np.ndarray     # (B, L, k)
    conv_pre: np.ndarray    # (B, L, F)
    flat: np.ndarray        # (B, L*F), post-tanh
    fc1_pre: np.ndarray     # (B, D)
    fc1_act: np.ndarray     # (B, D)
    output: np.ndarray      # (B, h)


def init_network(config: NetworkConfig, seed: int) -> Network:
    """Glorot-uniform weights, zero biases.

    Convolution fans follow the usual Conv1D convention: ``fan_in = k`` and
    ``fan_out = k * F``.
    """
    if not isinstance(config, NetworkConfig):
        raise InvalidConfig("config must be a NetworkConfig")
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    F, k, D, h = config.n_filters, config.kernel_size, config.dense_size, config.horizon

    def glorot(shape, fan_in, fan_out):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    return Network(
        config=config,
        conv_weights=glorot((F, k), k, k * F),
        conv_bias=np.zeros(F),
        fc1_weights=glorot((D, config.flat_len), config.flat_len, D),
        fc1_bias=np.zeros(D),
        out_weights=glorot((h, D), D, h),
        out_bias=np.zeros(h),
    )


def _check_batch(net: Network, batch) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.config.input_len:
        raise ShapeMismatch(
            f"expected inputs of shape (B, {net.config.input_len}), got {x.shape}")
    return x


def forward(net: Network, batch) -> tuple[np.ndarray, ForwardTrace]:
    x = _check_batch(net, batch)
    B = x.shape[0]
    windows = conv_windows(x, net.config.kernel_size)
    # diverging parameters yield inf/nan outputs; training turns them into NonFiniteLoss
    with np.errstate(over="ignore", invalid="ignore"):
        conv_pre = windows @ net.conv_weights.T + net.conv_bias
        flat = np.tanh(conv_pre).reshape(B, -1)
        fc1_pre = flat @ net.fc1_weights.T + net.fc1_bias
        fc1_act = np.maximum(fc1_pre, 0.0)
        out = fc1_act @ net.out_weights.T + net.out_bias
    return out, ForwardTrace(net, x, windows, conv_pre, flat, fc1_pre, fc1_act, out)


def predict(net: Network, batch) -> np.ndarray:
    return forward(net, batch)[0]


def mse_loss(pred, target) -> float:
    """Mean of squared errors over every element."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"prediction {pred.shape} vs target {target.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.mean((pred - target) ** 2))


def backward(net: Network, trace: ForwardTrace, target) -> Gradients:
    """Gradient of :func:`mse_loss` with respect to every parameter.

    The ReLU derivative at exactly zero is taken as zero.
    """
    if trace.network is not net:
        raise TraceMismatch("trace was produced by a different network")
    target = np.asarray(target, dtype=np.float64)
    if target.ndim == 1:
        target = target[None, :]
    if target.shape != trace.output.shape:
        raise ShapeMismatch(f"target {target.shape} vs output {trace.output.shape}")
    B = target.shape[0]
    F, k = net.conv_weights.shape
    L = net.config.conv_len

    d_out = 2.0 * (trace.output - target) / target.size
    g_out_w = d_out.T @ trace.fc1_act
    g_out_b = d_out.sum(axis=0)

    d_fc1 = (d_out @ net.out_weights) * (trace.fc1_pre > 0)
    g_fc1_w = d_fc1.T @ trace.flat
    g_fc1_b = d_fc1.sum(axis=0)

    d_conv = (d_fc1 @ net.fc1_weights).reshape(B * L, F)
    d_conv *= 1.0 - trace.flat.reshape(B * L, F) ** 2
    g_conv_w = d_conv.T @ trace.windows.reshape(B * L, k)
    g_conv_b = d_conv.sum(axis=0)

    return Gradients(g_conv_w, g_conv_b, g_fc1_w, g_fc1_b, g_out_w, g_out_b)


def dumps_network(net: Network) -> str:
    c = net.config
    lines = [f"{c.input_len} {c.kernel_size} {c.n_filters} {c.dense_size} {c.horizon}"]
    lines.extend(repr(float(v)) for v in net.flat())
    return "\n".join(lines) + "\n"


def loads_network(text: str) -> Network:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidConfig("empty network file")
    try:
        W, k, F, D, h = (int(tok) for tok in lines[0].split())
    except ValueError:
        raise InvalidConfig(f"bad network header {lines[0]!r}") from None
    config = NetworkConfig(W, k, F, D, h)
    values = np.array([float(v) for v in lines[1:]], dtype=np.float64)
    if values.size != config.parameter_count:
        raise ShapeMismatch(
            f"network file has {values.size} parameters, expected {config.parameter_count}")
    arrays = []
    offset = 0
    for name, shape in config.shapes().items():
        size = int(np.prod(shape))
        arrays.append(values[offset:offset + size].reshape(shape))
        offset += size
    return Network(config=config, **dict(zip(PARAM_NAMES, arrays)))
