"""Sub-band and wavelet analysis of tabla strokes.

The pipeline splits a stroke into octave bands with a lifting filter bank,
picks harmonic peaks per band, times the attack, decay and most prominent
frequency with a Morlet transform, and compares groups with one-way tests.
"""

from .audio_io import AudioClip, StrokeLabel, SynthStrokeSpec, read_wav, synthesize_stroke, write_wav
from .cwt import Scalogram, WaveletSpec, check_admissibility, compute_moments, cwt_transform, global_wavelet_spectrum
from .features import (
    HarmonicPeak,
    PeakParams,
    StrokeFeatureSet,
    compute_ltas,
    detect_band_peaks,
    extract_features,
    most_prominent_frequency,
)
from .stats import GroupedSamples, levene_test, oneway_anova, tukey_hsd, welch_anova
from .subband import BandDecomposition, BandPlan, FilterSpec, decompose, reconstruct

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "BandDecomposition",
    "BandPlan",
    "check_admissibility",
    "compute_ltas",
    "compute_moments",
    "cwt_transform",
    "decompose",
    "detect_band_peaks",
    "extract_features",
    "FilterSpec",
    "global_wavelet_spectrum",
    "GroupedSamples",
    "HarmonicPeak",
    "levene_test",
    "most_prominent_frequency",
    "oneway_anova",
    "PeakParams",
    "read_wav",
    "reconstruct",
    "Scalogram",
    "StrokeFeatureSet",
    "StrokeLabel",
    "synthesize_stroke",
    "SynthStrokeSpec",
    "tukey_hsd",
    "WaveletSpec",
    "welch_anova",
    "write_wav",
]
