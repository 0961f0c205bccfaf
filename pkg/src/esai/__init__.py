"""Event-based synthetic aperture imaging toolkit.

Simulate events from an occluded planar scene under linear camera motion,
refocus them onto the target depth, and reconstruct the hidden target by
accumulation, frame shift-and-average, or a hybrid spiking/convolutional
network.
"""
from .events import (Event, EventLabel, EventStream, FormatError, ValidationError, load_events,
                     save_events, validate_stream)
from .framing import FrameSequence, collapse, load_frames, save_frames, voxelize
from .geometry import CameraModel, Trajectory, pose_at
from .metrics import entropy2d, psnr, ssim, std
from .reconstruction import (Reconstruction, reconstruct_acc, reconstruct_fsai,
                             reconstruct_hybrid)
from .refocus import RefocusParams, alignment_score, refocus_event, refocus_stream
from .simulator import SceneSpec, render_view, simulate_events, simulate_frames

__version__ = "0.1.0"
