"""Nadam: Adam with Nesterov momentum and a warming momentum schedule."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, NonFiniteGradient, NonFiniteValue, ShapeMismatch


@dataclass(frozen=True)
class NadamConfig:
    lr: float = 0.002
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    schedule_decay: float = 0.004

    def __post_init__(self):
        if not self.lr > 0:
            raise InvalidConfig("lr must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise InvalidConfig("beta1 and beta2 must lie in (0, 1)")
        if not self.eps > 0:
            raise InvalidConfig("eps must be positive")
        if not np.isfinite(self.schedule_decay):
            raise InvalidConfig("schedule_decay must be finite")


@dataclass
class NadamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    mu_product: float = 1.0

    @classmethod
    def zeros_like(cls, params) -> "NadamState":
        return cls([np.zeros_like(p, dtype=np.float64) for p in params],
                   [np.zeros_like(p, dtype=np.float64) for p in params])


def momentum(t: int, config: NadamConfig) -> float:
    """Scheduled momentum coefficient for step ``t``."""
    return config.beta1 * (1.0 - 0.5 * 0.96 ** (t * config.schedule_decay))


def nadam_step(params, grads, state: NadamState, config: NadamConfig = NadamConfig()):
    """One Nadam update.

    Returns ``(new_params, new_state)``; the inputs are left untouched, so a
    step that would produce non-finite parameters can be rejected cleanly.
    """
    params = list(params)
    grads = list(grads)
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ShapeMismatch("params, grads and optimizer state differ in length")
    for p, g, m in zip(params, grads, state.m):
        if np.shape(p) != np.shape(g) or np.shape(p) != np.shape(m):
            raise ShapeMismatch(f"parameter {np.shape(p)} vs gradient {np.shape(g)}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient("gradient contains non-finite values")

    b1, b2 = config.beta1, config.beta2
    t = state.t + 1
    mu_t = momentum(t, config)
    mu_next = momentum(t + 1, config)
    mu_product = state.mu_product * mu_t
    mu_product_next = mu_product * mu_next
    v_corr = 1.0 - b2 ** t

    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        g = np.asarray(g, dtype=np.float64)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_bar = mu_next * m / (1.0 - mu_product_next) + (1.0 - mu_t) * g / (1.0 - mu_product)
        v_hat = v / v_corr
        p_new = p - config.lr * m_bar / (np.sqrt(v_hat) + config.eps)
        if not np.all(np.isfinite(p_new)):
            raise NonFiniteValue("update produced non-finite parameters")
        new_params.append(p_new)
        new_m.append(m)
        new_v.append(v)
    return new_params, NadamState(new_m, new_v, t, mu_product)
