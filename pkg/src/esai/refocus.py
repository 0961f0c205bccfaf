"""Event refocusing onto the reference view at a chosen depth.

For a camera translating in its image plane, an event fired at pixel x while
the camera sat at center c(t) is moved to

    x_ref = x + fx * (c(t) - c_ref)_x / d,   y_ref = y + fy * (c(t) - c_ref)_y / d

which is the pure-translation case of x_ref = K R K^-1 x + K T / d. Points on
the plane at depth d land on the same reference pixel whatever the event time;
anything at another depth smears along the motion direction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .events import Event, EventLabel, EventStream
from .geometry import CameraModel, Trajectory, pose_at


@dataclass(frozen=True)
class RefocusParams:
    cam: CameraModel
    traj: Trajectory
    depth: float
    rounding: str = "nearest"
    bounds_policy: str = "drop"

    def __post_init__(self):
        if not self.depth > 0:
            raise ValueError(f"depth must be positive, got {self.depth}")
        if self.rounding not in ("nearest", "floor"):
            raise ValueError(f"rounding must be 'nearest' or 'floor', got {self.rounding!r}")
        if self.bounds_policy not in ("drop", "keep"):
            raise ValueError(f"bounds_policy must be 'drop' or 'keep', got {self.bounds_policy!r}")


def translation_to_ref(traj: Trajectory, t) -> np.ndarray:
    """Camera-frame translation T_i between the pose at ``t`` and the reference pose."""
    return traj.centers(t) - traj.ref_center


def refocus_coords(t, x, y, params: RefocusParams):
    """Unrounded reference-plane coordinates for arrays of events."""
    T = translation_to_ref(params.traj, np.asarray(t))
    cam = params.cam
    xr = np.asarray(x, np.float64) + cam.fx * T[..., 0] / params.depth
    yr = np.asarray(y, np.float64) + cam.fy * T[..., 1] / params.depth
    return xr, yr


def _round(v, mode):
    return np.floor(v + 0.5) if mode == "nearest" else np.floor(v)


def _place(xr, yr, params: RefocusParams):
    """Round to pixels; returns (x, y, keep mask)."""
    cam = params.cam
    xi = _round(xr, params.rounding).astype(np.int64)
    yi = _round(yr, params.rounding).astype(np.int64)
    inside = (xi >= 0) & (xi < cam.width) & (yi >= 0) & (yi < cam.height)
    if params.bounds_policy == "keep":
        xi = np.clip(xi, 0, cam.width - 1)
        yi = np.clip(yi, 0, cam.height - 1)
        inside = np.ones_like(inside)
    return xi, yi, inside


def refocus_event(e: Event, params: RefocusParams) -> Event | None:
    """Refocus one event; ``None`` when it leaves the sensor under the drop policy."""
    pose_at(params.traj, e.t)  # raises for times outside the trajectory
    xr, yr = refocus_coords(np.array([e.t]), np.array([e.x]), np.array([e.y]), params)
    xi, yi, keep = _place(xr, yr, params)
    if not keep[0]:
        return None
    return Event(e.t, int(xi[0]), int(yi[0]), e.p)


def refocus_stream(stream: EventStream, params: RefocusParams):
    """Refocus every event; returns (refocused stream, report dict).

    Timestamps, polarities and labels are carried through unchanged, so the
    output stays time-sorted. The report counts dropped events.
    """
    if (stream.width, stream.height) != (params.cam.width, params.cam.height):
        raise ValueError(
            f"stream is {stream.width}x{stream.height} but camera is "
            f"{params.cam.width}x{params.cam.height}")
    traj = params.traj
    bad = np.flatnonzero((stream.t < traj.t_start) | (stream.t > traj.t_end))
    if bad.size:
        i = int(bad[0])
        raise ValueError(
            f"event {i}: t={int(stream.t[i])} outside trajectory span "
            f"[{traj.t_start}, {traj.t_end}] us")
    if len(stream) == 0:
        out = stream.select(np.zeros(0, bool))
        return out, {"input_events": 0, "dropped": 0}
    xr, yr = refocus_coords(stream.t, stream.x, stream.y, params)
    xi, yi, keep = _place(xr, yr, params)
    labels = None if stream.labels is None else stream.labels[keep]
    out = EventStream(stream.width, stream.height, stream.t[keep], xi[keep], yi[keep],
                      stream.p[keep], labels, stream.warnings)
    report = {"input_events": len(stream), "dropped": int((~keep).sum())}
    return out, report


def alignment_score(stream: EventStream, label_filter: EventLabel | None = None,
                    clusters: bool = False) -> float:
    """Spatial spread of the (optionally label-filtered) events, in px^2.

    By default this is the total variance var(x) + var(y) of all selected
    event coordinates. With ``clusters=True`` the occupied pixels are split
    into 8-connected clusters and the mean per-cluster variance is returned.
    """
    if label_filter is not None:
        stream = stream.with_label(label_filter)
    if len(stream) == 0:
        raise ValueError("no events left to score after filtering")
    x = stream.x.astype(np.float64)
    y = stream.y.astype(np.float64)
    if not clusters:
        return float(x.var() + y.var())
    occupied = np.zeros((stream.height, stream.width), bool)
    occupied[stream.y, stream.x] = True
    lab, n = ndimage.label(occupied, structure=np.ones((3, 3)))
    ids = lab[stream.y, stream.x]
    scores = [x[ids == k].var() + y[ids == k].var() for k in range(1, n + 1)]
    return float(np.mean(scores))
