"""Mini-batch training of the forecasting network with Nadam on MSE."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import WindowedDataset, batches
from .errors import InvalidConfig, NonFiniteGradient, NonFiniteLoss, NonFiniteValue, ShapeMismatch
from .nn import Network, NetworkConfig, backward, forward, init_network, mse_loss, predict
from .optim import NadamConfig, NadamState, nadam_step

log = logging.getLogger(__name__)

EVAL_CHUNK = 1024


@dataclass(frozen=True)
class TrainingConfig:
    batch_size: int = 128
    epochs: int = 40
    seed: int = 0
    nadam: NadamConfig = field(default_factory=NadamConfig)

    def __post_init__(self):
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")
        if self.epochs < 1:
            raise InvalidConfig("epochs must be >= 1")


@dataclass
class TrainReport:
    train_loss: list[float]
    val_mse: list[float]
    final_val_mse: float
    final_val_mse_phys: float
    wall_time_s: float = field(default=0.0, compare=False)


def predict_batched(net: Network, inputs: np.ndarray, chunk: int = EVAL_CHUNK) -> np.ndarray:
    if len(inputs) == 0:
        return np.zeros((0, net.config.horizon))
    return np.concatenate([predict(net, inputs[i:i + chunk]) for i in range(0, len(inputs), chunk)])


def dataset_mse(net: Network, data: WindowedDataset) -> float:
    """Normalised-scale MSE of ``net`` on every window of ``data``."""
    return mse_loss(predict_batched(net, data.inputs), data.targets)


def _check_shapes(config: NetworkConfig, data: WindowedDataset, what: str):
    if data.W != config.input_len or data.h != config.horizon:
        raise ShapeMismatch(
            f"{what} windows are W={data.W}, h={data.h}; network expects "
            f"W={config.input_len}, h={config.horizon}")
    if len(data) == 0:
        raise ShapeMismatch(f"{what} set is empty")


def train(config: NetworkConfig, tcfg: TrainingConfig, train_data: WindowedDataset,
          val_data: WindowedDataset) -> tuple[Network, TrainReport]:
    """Train a freshly initialised network for a fixed number of epochs.

    The run is a pure function of its arguments.  A non-finite loss or update
    aborts with :class:`NonFiniteLoss` before any bad parameter is stored.
    """
    _check_shapes(config, train_data, "training")
    _check_shapes(config, val_data, "validation")
    t0 = time.perf_counter()
    net = init_network(config, tcfg.seed)
    state = NadamState.zeros_like(net.arrays())
    train_losses, val_losses = [], []

    for epoch in range(tcfg.epochs):
        total, count = 0.0, 0
        for b, idx in enumerate(batches(len(train_data), tcfg.batch_size, tcfg.seed, epoch)):
            x = train_data.inputs[idx]
            y = train_data.targets[idx]
            out, trace = forward(net, x)
            loss = mse_loss(out, y)
            if not math.isfinite(loss):
                raise NonFiniteLoss(epoch, b, loss)
            grads = backward(net, trace, y)
            try:
                params, state = nadam_step(net.arrays(), grads.arrays(), state, tcfg.nadam)
            except (NonFiniteGradient, NonFiniteValue):
                raise NonFiniteLoss(epoch, b, loss) from None
            net = net.with_parameters(params)
            total += loss * len(idx)
            count += len(idx)
        train_losses.append(total / count)
        val = dataset_mse(net, val_data)
        if not math.isfinite(val):
            raise NonFiniteLoss(epoch, -1, val)
        val_losses.append(val)
        log.debug("epoch %d: train %.6g, val %.6g", epoch + 1, train_losses[-1], val)

    final = val_losses[-1]
    report = TrainReport(train_losses, val_losses, final, final * val_data.stats.sd ** 2,
                         time.perf_counter() - t0)
    return net, report
