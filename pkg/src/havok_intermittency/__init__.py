"""Intermittent-forcing analysis of scalar time series via Hankel time-delay embedding."""

__version__ = "0.1.0"

from .embedding import DelayEmbedding, TimeSeries, build_hankel, decompose, embed, select_rank
from .havok import CoordinateSeries, ForcingSeries, HavokModel, fit, reconstruction_score, simulate
from .intermittency import (
    BurstAnalysis,
    DistributionEstimate,
    burst_statistics,
    detect_bursts,
    estimate_pdf,
    pearson_test,
)
from .spectral import (
    Scalogram,
    SpectrumResult,
    amplitude_spectrum,
    cwt_morse,
    dominant_bandwidth,
    fft_forward,
    windowed_spectra,
)

__all__ = [
    "BurstAnalysis",
    "CoordinateSeries",
    "DelayEmbedding",
    "DistributionEstimate",
    "ForcingSeries",
    "HavokModel",
    "Scalogram",
    "SpectrumResult",
    "TimeSeries",
    "amplitude_spectrum",
    "build_hankel",
    "burst_statistics",
    "cwt_morse",
    "decompose",
    "detect_bursts",
    "dominant_bandwidth",
    "embed",
    "estimate_pdf",
    "fft_forward",
    "fit",
    "pearson_test",
    "reconstruction_score",
    "select_rank",
    "simulate",
    "windowed_spectra",
]
