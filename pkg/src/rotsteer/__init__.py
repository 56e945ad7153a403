"""Rotary steering of first-order Ambisonics for moving-speaker extraction.

Rotating the sound field so the tracked target sits at the front lets a
fixed front-looking enhancer follow a moving speaker; the tracker and the
enhancer can feed each other frame by frame (autoregressive mode).
"""
from .pipeline import Guidance, PipelineMode, RunResult, run
from .rotation import EulerZYZ, RealRotation, real_rotation, steering_matrix
from .sh import Normalization, SphericalDirection, sh_eval
from .ssf import SsfConfig
from .stft import StftConfig, analyze, synthesize
from .tracker import Tracker, TrackerConfig

__version__ = "0.1.0"

__all__ = [
    "EulerZYZ", "Guidance", "Normalization", "PipelineMode", "RealRotation", "RunResult",
    "SphericalDirection", "SsfConfig", "StftConfig", "Tracker", "TrackerConfig", "analyze",
    "real_rotation", "run", "sh_eval", "steering_matrix", "synthesize", "__version__",
]
