# SPDX-License-Identifier: Apache-2.0
"""Pose-based gait recognition: normalisation, descriptors, training and retrieval."""

from ._gpgait import (
    NUM_JOINTS,
    ConfigError,
    DataError,
    Error,
    NumericError,
    ShapeError,
    apply_hot,
    cross_entropy_loss,
    descriptors,
    evaluate,
    joint_angles,
    one_cycle_lr,
    pairwise_distances,
    partition_mask,
    rank1,
    synth,
    train,
    triplet_loss,
)

__all__ = [
    "NUM_JOINTS",
    "ConfigError",
    "DataError",
    "Error",
    "NumericError",
    "ShapeError",
    "apply_hot",
    "cross_entropy_loss",
    "descriptors",
    "evaluate",
    "joint_angles",
    "one_cycle_lr",
    "pairwise_distances",
    "partition_mask",
    "rank1",
    "synth",
    "train",
    "triplet_loss",
]
