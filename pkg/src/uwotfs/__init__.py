"""Unique-word channel estimation and link simulation for MIMO CDD OTFS/OFDM."""
from .channel import ChannelProfile, build_eva_profile, generate_realization, propagate
from .estimation import FrameOptimizer, UWChannelEstimator, optimize_frame
from .receiver import MmsePicDetector, detect_frame, fd_demux
from .waveform import FrameGeometry, WaveformKind, build_frame, demodulate, modulate

__version__ = "0.1.0"

__all__ = [
    "ChannelProfile",
    "FrameGeometry",
    "FrameOptimizer",
    "MmsePicDetector",
    "UWChannelEstimator",
    "WaveformKind",
    "build_eva_profile",
    "build_frame",
    "demodulate",
    "detect_frame",
    "fd_demux",
    "generate_realization",
    "modulate",
    "optimize_frame",
    "propagate",
]
