"""Latent time navigation: time-parameterized contrastive pre-training."""

from ._core import (
    ConfigError,
    LtnError,
    NumericalError,
    Trainer,
    info_nce,
    orthogonality_error,
    orthogonalize,
    resolve_config,
    run_experiment,
    selftest,
)


def config_text(**overrides):
    """Canonical config text with keyword overrides, e.g. config_text(variant="none", steps=200)."""
    lines = []
    for key, value in overrides.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return resolve_config("\n".join(lines))


__all__ = [
    "ConfigError",
    "LtnError",
    "NumericalError",
    "Trainer",
    "config_text",
    "info_nce",
    "orthogonality_error",
    "orthogonalize",
    "resolve_config",
    "run_experiment",
    "selftest",
]
