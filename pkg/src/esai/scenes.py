"""Parametric scene generators and the simulate -> refocus -> frame pipeline.

The helpers here build the toy scenes used in demos and tests: slat
occluders, point targets, and a seeded family of random textured targets.
Plane pitches are chosen so one plane cell images to one pixel at the
reference pose, and planes are centered on the reference optical axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import EventStream
from .framing import FrameSequence, voxelize
from .geometry import CameraModel, Trajectory
from .refocus import RefocusParams, refocus_stream
from .simulator import SceneSpec, ground_truth, simulate_events


def slat_mask(height: int, width: int, period: int, duty: float = 0.5, phase: int = 0):
    """Vertical slats: columns where ((c + phase) mod period) < duty * period are opaque."""
    cols = (np.arange(width) + phase) % period
    row = cols < duty * period
    return np.repeat(row[None, :], height, axis=0)


def half_plane_mask(height: int, width: int, opaque_left: bool = True):
    mask = np.zeros((height, width), bool)
    if opaque_left:
        mask[:, : width // 2] = True
    else:
        mask[:, width // 2:] = True
    return mask


def centered_origin(cam: CameraModel, traj: Trajectory, depth: float, plane_shape):
    """Plane origin near the reference optical axis that puts reference-view
    pixel centers at target-cell centers (no nearest-neighbor ties)."""
    ref = traj.ref_center
    h, w = plane_shape
    dx = (w / 2 - cam.cx) % 1.0 - 0.5
    dy = (h / 2 - cam.cy) % 1.0 - 0.5
    return (ref[0] + dx * depth / cam.fx, ref[1] + dy * depth / cam.fy)


def random_target(rng, size: int, n_shapes: int = 6, lo: float = 0.15, hi: float = 0.95):
    """Piecewise-constant texture of random overlapping rectangles and discs."""
    img = np.full((size, size), rng.uniform(lo, lo + 0.25))
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(n_shapes):
        val = rng.uniform(lo, hi)
        cy, cx = rng.uniform(0.2 * size, 0.8 * size, 2)
        r = rng.uniform(0.06 * size, 0.18 * size)
        if rng.random() < 0.5:
            sel = (np.abs(yy - cy) < r) & (np.abs(xx - cx) < r * rng.uniform(0.5, 1.5))
        else:
            sel = (yy - cy) ** 2 + (xx - cx) ** 2 < r * r
        img[sel] = val
    return img


@dataclass
class ToySetup:
    """Camera, trajectory and scene of one synthetic sample."""

    scene: SceneSpec
    cam: CameraModel
    traj: Trajectory
    dt_sample: int


def slat_scene(target: np.ndarray, *, size: int = 32, f: float | None = None, d: float = 1.0,
               d_occ: float = 0.5, disparity: float = 16.0, period: int = 4, duty: float = 0.5,
               occ_value: float = 0.05, eta: float = 0.2, noise_rate: float = 0.0, seed: int = 0,
               duration: int = 1_000_000, dt_sample: int = 2000, background: float = 0.0,
               cx: float | None = None, cy: float | None = None) -> ToySetup:
    """A target texture behind vertical slats, camera sweeping horizontally.

    ``disparity`` is the total image shift (px) of the target plane over the
    sweep; the occluder, being nearer, shifts by disparity * d / d_occ.
    """
    f = float(size if f is None else f)
    cam = CameraModel(f, f, size / 2 if cx is None else cx, size / 2 if cy is None else cy,
                      size, size)
    v = disparity * d / (f * duration * 1e-6)
    traj = Trajectory((v, 0.0, 0.0), 0, duration)
    occ_shift = disparity * d / d_occ
    occ_w = int(size + occ_shift + 4 * period)
    occ_w += (-occ_w) % period
    mask = slat_mask(size + 4, occ_w, period, duty)
    tex = np.full(mask.shape, occ_value)
    scene = SceneSpec(target, d, d / f, mask, d_occ, d_occ / f, tex, background, eta,
                      noise_rate, seed, centered_origin(cam, traj, d, target.shape))
    return ToySetup(scene, cam, traj, dt_sample)


def point_target_scene(*, size: int = 64, disparity: float = 40.0, level: float = 0.2,
                       point: float = 1.0, period: int = 8, eta: float = 0.2, seed: int = 0,
                       d: float = 1.0, d_occ: float = 0.5) -> ToySetup:
    """One bright target cell on a plane matching the occluder's intensity.

    Because occluder and target background share ``level``, only the bright
    cell produces occluder/target signal events.
    """
    tsize = int(size + disparity + 16)
    target = np.full((tsize, tsize), level)
    target[tsize // 2, tsize // 2] = point
    setup = slat_scene(target, size=size, d=d, d_occ=d_occ, disparity=disparity, period=period,
                       occ_value=level, eta=eta, seed=seed, dt_sample=1000)
    return setup


def point_reference_pixel(setup: ToySetup):
    """Pixel (x, y) where the bright cell of a point-target scene sits in the reference view."""
    cam, sc = setup.cam, setup.scene
    th, tw = sc.target_image.shape
    # cell (th//2, tw//2) has its center at origin + (col - tw/2 + 0.5) * pitch
    X = sc.origin[0] + (tw // 2 - tw / 2 + 0.5) * sc.pitch_target
    Y = sc.origin[1] + (th // 2 - th / 2 + 0.5) * sc.pitch_target
    u, v = cam.project((X, Y, sc.d), setup.traj.ref_center)
    return int(np.floor(u + 0.5)), int(np.floor(v + 0.5))


@dataclass
class Sample:
    events: EventStream
    refocused: EventStream
    frames: FrameSequence
    truth: np.ndarray
    report: dict


def make_sample(setup: ToySetup, n: int, depth: float | None = None) -> Sample:
    """Simulate, refocus at ``depth`` (default: true target depth) and frame into ``n`` bins."""
    ev = simulate_events(setup.scene, setup.cam, setup.traj, setup.dt_sample)
    params = RefocusParams(setup.cam, setup.traj, setup.scene.d if depth is None else depth)
    ref, report = refocus_stream(ev, params)
    frames = voxelize(ref, n, (setup.traj.t_start, setup.traj.t_end + 1))
    truth = ground_truth(setup.scene, setup.cam, setup.traj)
    return Sample(ev, ref, frames, truth, report)


def toy_family(seed: int, count: int, *, size: int = 32, n: int = 10, noise_rate: float = 2.0,
               **kwargs) -> list[Sample]:
    """``count`` samples from the seeded random-target slat-scene generator."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        target = random_target(rng, int(size * 1.75))
        setup = slat_scene(target, size=size, noise_rate=noise_rate,
                           seed=int(rng.integers(2 ** 31)), **kwargs)
        out.append(make_sample(setup, n))
    return out
