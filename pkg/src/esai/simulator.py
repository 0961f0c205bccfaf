"""Synthetic occluded scenes: ray-cast rendering, DVS event emulation, frame capture.

A scene is two fronto-parallel textured planes: the target at depth ``d`` and
a binary occluder mask at the nearer depth ``d_occ``. Both planes are centered
on the world point ``origin`` (X, Y) and sampled nearest-neighbor.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .events import EventLabel, EventStream, ValidationError
from .geometry import CameraModel, Trajectory, pose_at

logger = logging.getLogger(__name__)

LOG_EPS = 1e-4
# slack for floor(|dL| / eta) so that exact multiples of eta are not lost to rounding
_COUNT_SLACK = 1e-9

BACKGROUND, TARGET, OCCLUDER = 0, 1, 2


@dataclass(frozen=True, eq=False)
class SceneSpec:
    target_image: np.ndarray
    d: float
    pitch_target: float
    occluder_mask: np.ndarray
    d_occ: float
    pitch_occ: float
    occluder_texture: np.ndarray | None = None
    background: float = 0.0
    eta: float = 0.2
    noise_rate: float = 0.0
    seed: int = 0
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        tgt = np.asarray(self.target_image, np.float64)
        mask = np.asarray(self.occluder_mask).astype(bool)
        if tgt.ndim != 2 or mask.ndim != 2:
            raise ValueError("target_image and occluder_mask must be 2-D")
        if not 0 < self.d_occ < self.d:
            raise ValueError(f"need 0 < d_occ < d, got d_occ={self.d_occ}, d={self.d}")
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.noise_rate < 0:
            raise ValueError(f"noise_rate must be >= 0, got {self.noise_rate}")
        if self.pitch_target <= 0 or self.pitch_occ <= 0:
            raise ValueError("plane pitches must be positive")
        tex = None
        if self.occluder_texture is not None:
            tex = np.asarray(self.occluder_texture, np.float64)
            if tex.shape != mask.shape:
                raise ValueError("occluder_texture must match occluder_mask shape")
        for name, arr in (("target_image", tgt), ("occluder_texture", tex)):
            if arr is not None and (arr.min(initial=0) < 0 or arr.max(initial=0) > 1):
                raise ValueError(f"{name} values must lie in [0, 1]")
        if not 0 <= self.background <= 1:
            raise ValueError("background must lie in [0, 1]")
        object.__setattr__(self, "target_image", tgt)
        object.__setattr__(self, "occluder_mask", mask)
        object.__setattr__(self, "occluder_texture", tex)
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    def unoccluded(self) -> "SceneSpec":
        """Same scene with the occluder removed (ground-truth rendering)."""
        return SceneSpec(self.target_image, self.d, self.pitch_target,
                         np.zeros_like(self.occluder_mask), self.d_occ, self.pitch_occ,
                         None, self.background, self.eta, self.noise_rate, self.seed,
                         self.origin)


def _plane_cells(cam: CameraModel, center, depth, pitch, shape, origin):
    """Row/col of the plane cell hit by every pixel ray, plus an in-plane mask."""
    u, v = cam.pixel_grid()
    X = center[0] + depth * (u - cam.cx) / cam.fx
    Y = center[1] + depth * (v - cam.cy) / cam.fy
    h, w = shape
    col = np.floor((X - origin[0]) / pitch + w / 2).astype(np.int64)
    row = np.floor((Y - origin[1]) / pitch + h / 2).astype(np.int64)
    inside = (col >= 0) & (col < w) & (row >= 0) & (row < h)
    return row, col, inside


def render_surfaces(scene: SceneSpec, cam: CameraModel, center):
    """Render one view; returns (intensity, surface id) images.

    Surface ids are BACKGROUND, TARGET or OCCLUDER per pixel.
    """
    center = np.asarray(center, np.float64)
    img = np.full((cam.height, cam.width), scene.background, np.float64)
    surf = np.full((cam.height, cam.width), BACKGROUND, np.int8)

    r, c, hit = _plane_cells(cam, center, scene.d, scene.pitch_target,
                             scene.target_image.shape, scene.origin)
    img[hit] = scene.target_image[r[hit], c[hit]]
    surf[hit] = TARGET

    r, c, inside = _plane_cells(cam, center, scene.d_occ, scene.pitch_occ,
                                scene.occluder_mask.shape, scene.origin)
    occ = np.zeros_like(inside)
    occ[inside] = scene.occluder_mask[r[inside], c[inside]]
    if scene.occluder_texture is None:
        img[occ] = 0.0
    else:
        img[occ] = scene.occluder_texture[r[occ], c[occ]]
    surf[occ] = OCCLUDER
    return img, surf


def render_view(scene: SceneSpec, cam: CameraModel, pose) -> np.ndarray:
    """Intensity image (height x width, [0, 1]) seen from the optical center ``pose``."""
    return render_surfaces(scene, cam, pose)[0]


def sample_times(traj: Trajectory, dt_sample: int) -> np.ndarray:
    times = np.arange(traj.t_start, traj.t_end + 1, dt_sample, dtype=np.int64)
    if times[-1] != traj.t_end:
        times = np.append(times, traj.t_end)
    return times


def _log_intensity(img):
    return np.log(np.maximum(img, LOG_EPS))


def _noise_events(scene: SceneSpec, cam: CameraModel, traj: Trajectory):
    """Poisson physical noise, drawn from an independent seeded stream per pixel."""
    if scene.noise_rate == 0:
        return np.zeros((0, 4), np.int64)
    mean = scene.noise_rate * (traj.t_end - traj.t_start) * 1e-6
    rows = []
    for pix in range(cam.width * cam.height):
        rng = np.random.default_rng([scene.seed, 0x4E01, pix])
        k = rng.poisson(mean)
        if k == 0:
            continue
        t = rng.integers(traj.t_start, traj.t_end, size=k, endpoint=True)
        p = rng.choice(np.array([-1, 1]), size=k)
        y, x = divmod(pix, cam.width)
        rows.append(np.column_stack([np.sort(t), np.full(k, x), np.full(k, y), p]))
    if not rows:
        return np.zeros((0, 4), np.int64)
    return np.concatenate(rows).astype(np.int64)


def simulate_events(scene: SceneSpec, cam: CameraModel, traj: Trajectory,
                    dt_sample: int) -> EventStream:
    """Emulate a DVS moving along ``traj``; returns a labeled, time-sorted stream.

    Each pixel keeps a reference log level. At every sample the view is rendered
    and floor(|L - L_ref| / eta) events are emitted, spaced evenly inside the
    step, with L_ref moving by eta per event. Labels compare the surface seen
    at the step's start and end.
    """
    if not isinstance(dt_sample, (int, np.integer)) or dt_sample <= 0:
        raise ValueError(f"dt_sample must be a positive integer (us), got {dt_sample!r}")
    eta = scene.eta
    times = sample_times(traj, int(dt_sample))

    img, surf_prev = render_surfaces(scene, cam, pose_at(traj, int(times[0])))
    L_prev = _log_intensity(img)
    L_ref = L_prev.copy()
    flat_x = np.tile(np.arange(cam.width), cam.height)
    flat_y = np.repeat(np.arange(cam.height), cam.width)

    chunks, label_chunks = [], []
    big_steps = 0
    worst = 0.0
    for t0, t1 in zip(times[:-1].tolist(), times[1:].tolist()):
        img, surf = render_surfaces(scene, cam, pose_at(traj, t1))
        L = _log_intensity(img)
        jump = np.abs(L - L_prev)
        if jump.max() >= 5 * eta:
            big_steps += 1
            worst = max(worst, float(jump.max()))
        diff = (L - L_ref).ravel()
        count = np.floor(np.abs(diff) / eta + _COUNT_SLACK).astype(np.int64)
        pol = np.where(diff > 0, 1, -1).astype(np.int64)
        idx = np.flatnonzero(count)
        if idx.size:
            k = count[idx]
            pix = np.repeat(idx, k)
            # j-th of k events in the step sits at (j + 1) / (k + 1) of the step
            starts = np.cumsum(k) - k
            j = np.arange(pix.size) - np.repeat(starts, k)
            kk = np.repeat(k, k)
            ts = t0 + ((j + 1) * (t1 - t0)) // (kk + 1)
            order = np.argsort(ts, kind="stable")
            pix, ts = pix[order], ts[order]
            chunks.append(np.column_stack([ts, flat_x[pix], flat_y[pix], pol[pix]]))

            s0 = surf_prev.ravel()[pix] == OCCLUDER
            s1 = surf.ravel()[pix] == OCCLUDER
            lab = np.full(pix.size, int(EventLabel.SignalOA), np.int8)
            lab[s0 & s1] = EventLabel.NoiseOO
            lab[~s0 & ~s1] = EventLabel.NoiseAA
            label_chunks.append(lab)

            L_ref.ravel()[idx] += count[idx] * eta * pol[idx]
        L_prev, surf_prev = L, surf

    noise = _noise_events(scene, cam, traj)
    chunks.append(noise)
    label_chunks.append(np.full(len(noise), int(EventLabel.NoisePhysical), np.int8))
    ev = np.concatenate(chunks) if chunks else np.zeros((0, 4), np.int64)
    labels = np.concatenate(label_chunks)
    order = np.argsort(ev[:, 0], kind="stable")
    ev, labels = ev[order], labels[order]

    warnings = []
    if big_steps:
        msg = (f"{big_steps} of {len(times) - 1} steps changed log intensity by >= 5*eta "
               f"at some pixel (max {worst:.3f} vs eta {eta}); reduce dt_sample for "
               f"smooth-texture accuracy")
        logger.info(msg)
        warnings.append(msg)
    return EventStream(cam.width, cam.height, ev[:, 0], ev[:, 1], ev[:, 2], ev[:, 3],
                       labels, tuple(warnings))


def simulate_frames(scene: SceneSpec, cam: CameraModel, traj: Trajectory, n_views: int):
    """``n_views`` (center, image) pairs at evenly spaced times over the trajectory."""
    if n_views < 2:
        raise ValueError(f"n_views must be >= 2, got {n_views}")
    times = np.linspace(traj.t_start, traj.t_end, n_views)
    times = np.rint(times).astype(np.int64)
    out = []
    for t in times.tolist():
        c = pose_at(traj, t)
        out.append((c, render_view(scene, cam, c)))
    return out


def ground_truth(scene: SceneSpec, cam: CameraModel, traj: Trajectory) -> np.ndarray:
    """Unoccluded target seen from the reference pose."""
    return render_view(scene.unoccluded(), cam, traj.ref_center)


# ---------------------------------------------------------------- config files

SCENE_KEYS = ("target_image", "occluder_mask", "occluder_texture", "d", "d_occ",
              "pitch_target", "pitch_occ", "background", "eta", "noise_rate", "seed",
              "velocity", "t_start", "t_end", "ref_time")
CAMERA_KEYS = ("width", "height", "fx")
OPTIONAL_KEYS = ("fy", "cx", "cy", "dt_sample", "origin", "ref_time")


@dataclass
class SceneConfig:
    scene: SceneSpec
    camera: CameraModel
    trajectory: Trajectory
    dt_sample: int = 1000
    raw: dict = field(default_factory=dict)


def read_keyvalue(path) -> dict:
    """Parse ``key=value`` lines; blank lines and # comments are skipped."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}: line {lineno}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_scene_config(path) -> SceneConfig:
    """Build scene, camera and trajectory from a key=value config file."""
    from .imageio import read_pgm

    path = Path(path)
    raw = read_keyvalue(path)
    required = [k for k in SCENE_KEYS + CAMERA_KEYS if k not in OPTIONAL_KEYS]
    missing = [k for k in required if k not in raw]
    if missing:
        raise ValidationError(f"{path}: missing required key(s): {', '.join(missing)}")

    def num(key, cast=float, default=None):
        if key not in raw:
            return default
        try:
            return cast(raw[key])
        except ValueError:
            raise ValidationError(f"{path}: key {key!r}: cannot parse {raw[key]!r}") from None

    def vec(key, default=None):
        if key not in raw:
            return default
        try:
            return tuple(float(s) for s in raw[key].split(","))
        except ValueError:
            raise ValidationError(f"{path}: key {key!r}: cannot parse {raw[key]!r}") from None

    def image(key):
        val = raw[key]
        if val.lower() == "none":
            return None
        p = Path(val)
        return read_pgm(p if p.is_absolute() else path.parent / p)

    width, height = num("width", int), num("height", int)
    fx = num("fx")
    try:
        cam = CameraModel(fx, num("fy", default=fx), num("cx", default=(width - 1) / 2),
                          num("cy", default=(height - 1) / 2), width, height)
        mask = image("occluder_mask")
        scene = SceneSpec(
            target_image=image("target_image"), d=num("d"), pitch_target=num("pitch_target"),
            occluder_mask=np.zeros((1, 1), bool) if mask is None else mask > 0.5,
            d_occ=num("d_occ"), pitch_occ=num("pitch_occ"),
            occluder_texture=image("occluder_texture"), background=num("background"),
            eta=num("eta"), noise_rate=num("noise_rate"), seed=num("seed", int),
            origin=vec("origin", (0.0, 0.0)))
        traj = Trajectory(vec("velocity"), num("t_start", int), num("t_end", int),
                          num("ref_time", int))
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return SceneConfig(scene, cam, traj, num("dt_sample", int, 1000), raw)

