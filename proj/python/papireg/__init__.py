"""LiDAR-camera registration: projection, patch-to-pixel matching, EPnP + RANSAC."""

from ._core import (
    Error,
    Intrinsics,
    Pose,
    PoseEstimate,
    SyntheticScene,
    dual_softmax,
    epnp,
    generate_synthetic,
    project,
    ransac_pnp,
    read_tensors,
    register_scene,
    rot_z,
    rre,
    rte,
    topk,
    write_tensors,
)

__all__ = [
    "Error",
    "Intrinsics",
    "Pose",
    "PoseEstimate",
    "SyntheticScene",
    "dual_softmax",
    "epnp",
    "generate_synthetic",
    "project",
    "ransac_pnp",
    "read_tensors",
    "register_scene",
    "rot_z",
    "rre",
    "rte",
    "topk",
    "write_tensors",
]

__version__ = "0.1.0"
