"""Streaming TED peak detection for LPBF keyhole-collapse monitoring."""
from ._backend import available_backends, backend_name, set_backend, use_backend
from .detection import (
    DetectionResult,
    DetectorConfig,
    PeakInterval,
    StreamingDetector,
    count_peaks,
    detect,
    find_peak_intervals,
    flag,
    flag_mask,
)
from .layers import LayerHistogram, TransitionSummary, per_layer_counts, transition_summary
from .signal import PoreRecord, StreamMeta, TedSample, TedStream, read_pores, read_samples, write_pores, write_samples
from .smoothing import PolyCoeffs, SmoothingConfig, StreamingSmoother, fit_window, smooth
from .stats import RegressionResult, SweepCell, SweepSpec, normalize_total, ols_fit, sensitivity_sweep
from .synth import Event, ScoreReport, SynthSpec, generate, score

__version__ = "0.1.0"
