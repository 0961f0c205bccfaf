"""Pinhole camera and linear constant-velocity camera trajectory.

World coordinates are metric with Z along the (shared) optical axis. All
camera poses lie on the plane Z = 0 and have identity rotation, so a pose is
fully described by its optical center.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError(
                f"principal point ({self.cx}, {self.cy}) outside {self.width}x{self.height} sensor")

    @classmethod
    def centered(cls, width: int, height: int, f: float, fy: float | None = None):
        """Camera with the principal point at the sensor center."""
        return cls(f, f if fy is None else fy, (width - 1) / 2, (height - 1) / 2, width, height)

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def pixel_grid(self):
        """(u, v) float arrays of shape (height, width) holding pixel coordinates."""
        v, u = np.mgrid[0:self.height, 0:self.width]
        return u.astype(np.float64), v.astype(np.float64)

    def project(self, point, center=(0.0, 0.0, 0.0)):
        """Project a world point seen from a camera at ``center``; returns (u, v)."""
        X = np.asarray(point, np.float64) - np.asarray(center, np.float64)
        return self.cx + self.fx * X[0] / X[2], self.cy + self.fy * X[1] / X[2]


@dataclass(frozen=True)
class Trajectory:
    """Camera moving at constant ``velocity`` (m/s) from t_start to t_end (us).

    The center is at the world origin at ``t_start``. ``ref_time`` picks the
    reference pose used for refocusing and defaults to the temporal midpoint.
    """

    velocity: tuple[float, float, float]
    t_start: int
    t_end: int
    ref_time: int | None = None

    def __post_init__(self):
        vel = tuple(float(v) for v in self.velocity)
        if len(vel) == 2:
            vel = vel + (0.0,)
        if len(vel) != 3:
            raise ValueError(f"velocity must have 2 or 3 components, got {self.velocity}")
        if vel[2] != 0.0:
            raise ValueError("camera motion must stay in the image plane (velocity z must be 0)")
        object.__setattr__(self, "velocity", vel)
        object.__setattr__(self, "t_start", int(self.t_start))
        object.__setattr__(self, "t_end", int(self.t_end))
        if not self.t_start < self.t_end:
            raise ValueError(f"t_start ({self.t_start}) must precede t_end ({self.t_end})")
        ref = (self.t_start + self.t_end) // 2 if self.ref_time is None else int(self.ref_time)
        if not self.t_start <= ref <= self.t_end:
            raise ValueError(f"ref_time {ref} outside [{self.t_start}, {self.t_end}]")
        object.__setattr__(self, "ref_time", ref)

    def contains(self, t) -> bool:
        t = np.asarray(t)
        return bool(np.all((t >= self.t_start) & (t <= self.t_end)))

    def centers(self, t) -> np.ndarray:
        """Vectorized pose_at: optical centers for an array of times, shape (..., 3)."""
        t = np.asarray(t)
        if not self.contains(t):
            raise ValueError(
                f"time outside trajectory span [{self.t_start}, {self.t_end}] us")
        dt = (t.astype(np.float64) - self.t_start) * 1e-6
        return dt[..., None] * np.asarray(self.velocity)

    @property
    def ref_center(self) -> np.ndarray:
        return pose_at(self, self.ref_time)


def pose_at(traj: Trajectory, t) -> np.ndarray:
    """Optical center (meters) of the camera at time ``t`` (us); rotation is identity."""
    if not traj.t_start <= t <= traj.t_end:
        raise ValueError(f"t={t} outside trajectory span [{traj.t_start}, {traj.t_end}] us")
    return np.asarray(traj.velocity) * ((t - traj.t_start) * 1e-6)
