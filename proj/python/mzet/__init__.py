"""Memory-augmented zero-shot fine-grained entity typing."""

from ._mzet import (
    MzetError,
    artifact_version,
    evaluate,
    explain,
    margin_loss,
    metrics,
    select_labels,
    similarity,
    synth,
    train,
)

__all__ = [
    "MzetError",
    "artifact_version",
    "evaluate",
    "explain",
    "margin_loss",
    "metrics",
    "select_labels",
    "similarity",
    "synth",
    "train",
]
