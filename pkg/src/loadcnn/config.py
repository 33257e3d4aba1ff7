"""Plain ``key = value`` configuration files.

Blank lines and lines starting with ``#`` are ignored.  Lists are comma
separated.
"""
from __future__ import annotations

from pathlib import Path

from .errors import ConfigError
from .nn import NetworkConfig
from .optim import NadamConfig
from .scan import ScanGrid
from .train import TrainingConfig


def parse_kv(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_kv(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_kv(text, str(path))


def format_kv(values: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())


def int_list(value: str, key: str = "value") -> list[int]:
    try:
        return [int(tok) for tok in value.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected a comma separated list of integers") from None


def _typed(kv: dict[str, str], key: str, typ):
    try:
        return typ(kv[key])
    except ValueError:
        raise ConfigError(f"{key}: invalid value {kv[key]!r}") from None


TRAINING_KEYS = {
    "batch_size": int, "epochs": int, "seed": int,
    "lr": float, "beta1": float, "beta2": float, "eps": float, "schedule_decay": float,
    "input_len": int, "kernel_size": int, "n_filters": int, "dense_size": int, "horizon": int,
    "val_fraction": float, "mode": str,
}

GRID_KEYS = {"kernel_sizes", "filter_counts", "dense_sizes", "seeds"}


def check_keys(kv: dict[str, str], allowed, source: str):
    unknown = sorted(set(kv) - set(allowed))
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) {', '.join(unknown)}")


def training_values(kv: dict[str, str], source: str = "<config>") -> dict:
    check_keys(kv, TRAINING_KEYS, source)
    return {k: _typed(kv, k, TRAINING_KEYS[k]) for k in kv}


def build_training_config(values: dict) -> TrainingConfig:
    nadam = NadamConfig(**{k: values[k] for k in ("lr", "beta1", "beta2", "eps", "schedule_decay")
                           if k in values})
    return TrainingConfig(**{k: values[k] for k in ("batch_size", "epochs", "seed") if k in values},
                          nadam=nadam)


def build_network_config(values: dict) -> NetworkConfig:
    return NetworkConfig(**{k: values[k] for k in
                            ("input_len", "kernel_size", "n_filters", "dense_size", "horizon")
                            if k in values})


def read_grid(path) -> ScanGrid:
    kv = read_kv(path)
    check_keys(kv, GRID_KEYS, str(path))
    return ScanGrid(**{k: int_list(v, k) for k, v in kv.items()})
