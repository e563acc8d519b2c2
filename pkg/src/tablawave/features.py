"""Stroke descriptors: per-band harmonic peaks, MPF, envelopes and LTAS."""

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .cwt import WaveletSpec, cwt_transform
from .subband import BandPlan, FilterSpec, decompose

__all__ = [
    "HarmonicPeak",
    "PeakParams",
    "BandFeatures",
    "StrokeFeatureSet",
    "Ltas",
    "FEATURE_COLUMNS",
    "detect_band_peaks",
    "most_prominent_frequency",
    "rms_envelope",
    "attack_peak_time",
    "decay_time",
    "mpf_time",
    "energy_duration",
    "compute_ltas",
    "extract_features",
    "write_feature_table",
]

FEATURE_COLUMNS = (
    "row_id", "clip", "tabla_id", "stroke", "damping", "band_level", "f_low", "f_high",
    "mpf_hz", "harmonic_count", "coeff_count", "energy", "energy_duration_s",
    "attack_peak_s", "decay_s", "mpf_time_s",
)

ENVELOPE_WINDOW = 0.005
ENVELOPE_HOP = 0.001


@dataclass(frozen=True)
class HarmonicPeak:
    frequency: float
    magnitude: float
    band_level: int
    time_of_peak_power: float


@dataclass(frozen=True)
class PeakParams:
    """Spectral peak picking thresholds.

    ``floor_db`` is relative to the largest spectral magnitude of the whole
    clip; ``prominence_db`` is measured against the median magnitude within
    ``neighborhood_hz`` of the candidate.  ``n_fft=None`` analyses the whole
    band signal.
    """

    floor_db: float = -60.0
    prominence_db: float = 10.0
    neighborhood_hz: float = 50.0
    n_fft: Optional[int] = None


@dataclass(frozen=True)
class BandFeatures:
    level: int
    f_low: float
    f_high: float
    mpf: Optional[float]
    harmonics: tuple
    coefficient_count: int
    energy: float
    energy_duration: float

    @property
    def harmonic_count(self):
        return len(self.harmonics)


@dataclass(frozen=True)
class StrokeFeatureSet:
    bands: tuple
    attack_peak_time: float
    decay_time: float
    decay_truncated: bool
    mpf: Optional[float]
    mpf_time: Optional[float]
    harmonic_ratios: tuple
    label: object = None
    clip_id: str = ""

    def band(self, level):
        for b in self.bands:
            if b.level == level:
                return b
        raise KeyError(level)

    @property
    def harmonics(self):
        """All detected harmonics pooled over bands, sorted by frequency."""
        return tuple(sorted((h for b in self.bands for h in b.harmonics), key=lambda h: h.frequency))

    @property
    def harmonic_counts(self):
        return {b.level: b.harmonic_count for b in self.bands}

    def rows(self, clip_id=None):
        """Feature-table rows: one per band followed by one global row."""
        clip_id = clip_id if clip_id is not None else self.clip_id
        lab = self.label
        base = {
            "clip": clip_id,
            "tabla_id": lab.tabla_id if lab else "",
            "stroke": lab.stroke_name if lab else "",
            "damping": lab.damping if lab else "",
        }
        out = []
        for b in self.bands:
            out.append(dict(base, row_id=f"{clip_id}:L{b.level}", band_level=b.level, f_low=b.f_low,
                            f_high=b.f_high, mpf_hz=_blank(b.mpf), harmonic_count=b.harmonic_count,
                            coeff_count=b.coefficient_count, energy=b.energy,
                            energy_duration_s=b.energy_duration, attack_peak_s="", decay_s="",
                            mpf_time_s=""))
        out.append(dict(base, row_id=f"{clip_id}:global", band_level="global", f_low="", f_high="",
                        mpf_hz=_blank(self.mpf), harmonic_count=len(self.harmonics),
                        coeff_count=sum(b.coefficient_count for b in self.bands),
                        energy=sum(b.energy for b in self.bands), energy_duration_s="",
                        attack_peak_s=self.attack_peak_time, decay_s=self.decay_time,
                        mpf_time_s=_blank(self.mpf_time)))
        return out


def _blank(v):
    return "" if v is None else v


@dataclass(frozen=True, eq=False)
class Ltas:
    frequencies: np.ndarray
    mean_db: np.ndarray
    window_size: int
    hop: int
    n_frames: int


def _spectrum(x, n_fft=None):
    if n_fft is not None:
        x = x[:n_fft]
    win = np.hanning(x.size + 2)[1:-1]
    return np.abs(np.fft.rfft(x * win))


def _total_spectrum(decomp, n_fft):
    total = np.sum([decomp.band_signals[lev] for lev in decomp.band_signals], axis=0)
    return _spectrum(total, n_fft)


def _band_reference(decomp, n_fft):
    return float(np.max(_total_spectrum(decomp, n_fft)))


def _harmonic_peak_time(x, fs, freq, smooth=0.01):
    # Complex demodulation at the harmonic, then a short moving average.
    t = np.arange(x.size) / fs
    base = x * np.exp(-2j * np.pi * freq * t)
    n = max(1, int(round(smooth * fs)))
    env = np.abs(np.convolve(base, np.ones(n) / n, mode="same"))
    return float(np.argmax(env) / fs)


def detect_band_peaks(decomp, level, params=None, reference=None):
    """Harmonic peaks in one band signal.

    Local maxima of the Hann-windowed magnitude spectrum are kept when they
    lie inside the band edges, exceed the absolute floor and stand out from
    their neighbourhood by ``prominence_db``.  A candidate must also be a
    local maximum (within one bin) of the full-clip spectrum and carry
    between half and twice the full-clip magnitude at that bin.  This
    rejects the skirt of a partial just outside the band (shaped into a
    bump by the band-edge transition) and stopband aliasing that cancels
    when the bands are summed.  Peak frequency and magnitude are refined by
    quadratic interpolation on the dB spectrum.

    Parameters
    ----------
    decomp : BandDecomposition
    level : int
    params : PeakParams, optional
    reference : float, optional
        Magnitude taken as 0 dB for the floor; defaults to the spectral peak
        of the sum of all band signals.
    """
    params = params or PeakParams()
    f_low, f_high = decomp.plan.edges(level)
    x = decomp.band_signals[level]
    n = x.size if params.n_fft is None else params.n_fft
    if x.size < n:
        raise ValueError(f"band signal shorter ({x.size}) than FFT window ({n})")
    if not np.any(x[:n]):
        return []
    fs = decomp.sample_rate
    mag = _spectrum(x, params.n_fft)
    full = _total_spectrum(decomp, params.n_fft)
    full_peak = np.zeros(full.size, dtype=bool)
    full_peak[1:-1] = (full[1:-1] > full[:-2]) & (full[1:-1] >= full[2:])
    if reference is None:
        reference = float(full.max())
    if reference <= 0:
        return []
    bin_hz = fs / n
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag)
    floor = 20.0 * math.log10(reference) + params.floor_db
    half = max(3, int(round(params.neighborhood_hz / bin_hz)))

    peaks = []
    cand = np.flatnonzero((mag[1:-1] > mag[:-2]) & (mag[1:-1] >= mag[2:])) + 1
    for i in cand:
        if db[i] < floor or not full_peak[i - 1:i + 2].any():
            continue
        # Aliasing leaked into a critically sampled band cancels in the sum;
        # a real partial is carried by its band at roughly full strength.
        if mag[i] > 2.0 * full[i] or mag[i] < 0.5 * full[i]:
            continue
        y0, y1, y2 = db[i - 1], db[i], db[i + 1]
        denom = y0 - 2.0 * y1 + y2
        delta = 0.0 if not np.isfinite(denom) or denom == 0 else 0.5 * (y0 - y2) / denom
        freq = (i + delta) * bin_hz
        if not f_low <= freq < f_high:
            continue
        lo, hi = max(0, i - half), min(mag.size, i + half + 1)
        neigh = np.median(mag[lo:hi])
        if neigh > 0 and 20.0 * math.log10(mag[i] / neigh) < params.prominence_db:
            continue
        peak_db = y1 - 0.25 * (y0 - y2) * delta
        peaks.append(HarmonicPeak(float(freq), float(10.0 ** (peak_db / 20.0)), level,
                                  _harmonic_peak_time(x, fs, freq)))
    return peaks


def most_prominent_frequency(peaks):
    """Frequency of the largest-magnitude peak; ties go to the lower frequency.

    Returns ``None`` for an empty list (a band with no information).
    """
    if not peaks:
        return None
    best = min(peaks, key=lambda p: (-p.magnitude, p.frequency))
    return best.frequency


def rms_envelope(samples, sample_rate, window=ENVELOPE_WINDOW, hop=ENVELOPE_HOP):
    """Frame RMS; returns ``(times, rms)`` with times at frame centres."""
    x = np.asarray(samples, dtype=float)
    win = max(1, int(round(window * sample_rate)))
    step = max(1, int(round(hop * sample_rate)))
    if x.size < win:
        x = np.pad(x, (0, win - x.size))
    starts = np.arange(0, x.size - win + 1, step)
    csum = np.concatenate([[0.0], np.cumsum(x * x)])
    energy = (csum[starts + win] - csum[starts]) / win
    times = (starts + 0.5 * win) / sample_rate
    return times, np.sqrt(np.maximum(energy, 0.0))


def _onset_and_peak(clip, onset_db=-40.0):
    times, env = rms_envelope(clip.samples, clip.sample_rate)
    peak = env.max()
    if peak == 0:
        raise ValueError("clip is silent")
    onset = int(np.argmax(env >= peak * 10.0 ** (onset_db / 20.0)))
    return times, env, onset, int(np.argmax(env))


def attack_peak_time(clip):
    """Seconds from onset (first frame above -40 dB re peak) to the envelope maximum."""
    times, _, onset, pk = _onset_and_peak(clip)
    return float(times[pk] - times[onset])


def decay_time(clip, drop_db=-20.0, hold=0.05):
    """Seconds from the attack peak until the envelope stays below ``drop_db`` for ``hold`` s.

    Returns
    -------
    seconds : float
    truncated : bool
        True when the envelope never decays; ``seconds`` is then the time
        remaining in the clip after the peak.
    """
    times, env, _, pk = _onset_and_peak(clip)
    thr = env[pk] * 10.0 ** (drop_db / 20.0)
    hold_frames = max(1, int(round(hold / ENVELOPE_HOP)))
    below = env < thr
    # Number of consecutive below-threshold frames starting at each index.
    run = np.zeros(env.size + 1, dtype=int)
    for i in range(env.size - 1, -1, -1):
        run[i] = run[i + 1] + 1 if below[i] else 0
    for i in range(pk + 1, env.size):
        if below[i] and (run[i] >= hold_frames or i + run[i] == env.size):
            return float(times[i] - times[pk]), False
    return float(clip.duration - times[pk]), True


def mpf_time(scal, mpf):
    """Time of maximum power at the scale nearest ``mpf``, outside the cone of influence.

    For a flat power row the earliest maximum is returned.
    """
    j = scal.scale_index(mpf)
    row = np.where(scal.valid[j], scal.power[j], -np.inf)
    if not np.isfinite(row).any():
        raise ValueError(f"scale for {mpf:g} Hz lies entirely inside the cone of influence")
    return float(np.argmax(row) * scal.dt)


def energy_duration(decomp, level, threshold_fraction=0.1, window=ENVELOPE_WINDOW):
    """Total time the band's short-time energy exceeds a fraction of its own peak."""
    x = decomp.band_signals[level]
    win = max(1, int(round(window * decomp.sample_rate)))
    n_frames = x.size // win
    if n_frames == 0:
        return 0.0
    e = (x[: n_frames * win].reshape(n_frames, win) ** 2).sum(axis=1)
    peak = e.max()
    if peak == 0:
        return 0.0
    return float(np.count_nonzero(e > threshold_fraction * peak) * win / decomp.sample_rate)


def compute_ltas(clip, window=4096, hop=2048, floor_db=-120.0):
    """Long-term average spectrum: mean Hann-windowed magnitude, dB re the largest bin."""
    x = clip.samples
    if window > x.size:
        raise ValueError(f"window ({window}) exceeds clip length ({x.size})")
    if hop < 1:
        raise ValueError("hop must be positive")
    starts = np.arange(0, x.size - window + 1, hop)
    win = np.hanning(window + 2)[1:-1]
    frames = np.stack([x[s:s + window] * win for s in starts])
    mean_mag = np.abs(np.fft.rfft(frames, axis=1)).mean(axis=0)
    ref = mean_mag.max()
    if ref == 0:
        mean_db = np.full(mean_mag.size, floor_db)
    else:
        with np.errstate(divide="ignore"):
            mean_db = np.maximum(20.0 * np.log10(mean_mag / ref), floor_db)
    freqs = np.fft.rfftfreq(window, clip.dt)
    return Ltas(freqs, mean_db, window, hop, starts.size)


@dataclass(frozen=True)
class FeatureConfig:
    plan: BandPlan = field(default_factory=BandPlan)
    filter_spec: FilterSpec = field(default_factory=FilterSpec)
    peaks: PeakParams = field(default_factory=PeakParams)
    wavelet_dj: float = 0.125
    wavelet_omega0: float = 6.0
    energy_threshold: float = 0.1

    def to_dict(self):
        return {
            "plan": self.plan.to_dict(),
            "filter_spec": self.filter_spec.to_dict(),
            "peaks": asdict(self.peaks),
            "wavelet_dj": self.wavelet_dj,
            "wavelet_omega0": self.wavelet_omega0,
            "energy_threshold": self.energy_threshold,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            plan=BandPlan.from_dict(d["plan"]) if "plan" in d else BandPlan(),
            filter_spec=FilterSpec.from_dict(d["filter_spec"]) if "filter_spec" in d else FilterSpec(),
            peaks=PeakParams(**d["peaks"]) if "peaks" in d else PeakParams(),
            wavelet_dj=d.get("wavelet_dj", 0.125),
            wavelet_omega0=d.get("wavelet_omega0", 6.0),
            energy_threshold=d.get("energy_threshold", 0.1),
        )


class FeatureError(RuntimeError):
    """A constituent extractor failed; the message names the band or feature."""


def extract_features(clip, config=None, clip_id=""):
    """Full descriptor set for one stroke clip.

    Runs the sub-band decomposition, per-band peak picking, envelope
    timings and a Morlet transform around the clip's most prominent
    frequency.
    """
    config = config or FeatureConfig()
    try:
        decomp = decompose(clip, config.plan, config.filter_spec)
    except ValueError as exc:
        raise FeatureError(f"{clip_id or 'clip'}: decomposition failed: {exc}") from exc
    reference = _band_reference(decomp, config.peaks.n_fft)
    counts = decomp.coefficient_counts
    bands = []
    for lev, lo, hi in config.plan.levels:
        try:
            peaks = detect_band_peaks(decomp, lev, config.peaks, reference)
        except ValueError as exc:
            raise FeatureError(f"{clip_id or 'clip'}: band {lev}: {exc}") from exc
        x = decomp.band_signals[lev]
        bands.append(BandFeatures(
            lev, lo, hi, most_prominent_frequency(peaks), tuple(peaks), counts[lev],
            float(np.dot(x, x)), energy_duration(decomp, lev, config.energy_threshold),
        ))
    pooled = sorted((h for b in bands for h in b.harmonics), key=lambda h: h.frequency)
    ratios = tuple(b.frequency / a.frequency for a, b in zip(pooled, pooled[1:]))
    try:
        attack = attack_peak_time(clip)
        decay, truncated = decay_time(clip)
    except ValueError as exc:
        raise FeatureError(f"{clip_id or 'clip'}: envelope: {exc}") from exc

    mpf = None
    t_mpf = None
    if pooled:
        mpf = max(pooled, key=lambda h: (h.magnitude, -h.frequency)).frequency
        spec = WaveletSpec.for_band(mpf * 2 ** 0.5, mpf / 2 ** 0.5, config.wavelet_dj, config.wavelet_omega0)
        try:
            t_mpf = mpf_time(cwt_transform(clip, spec), mpf)
        except ValueError as exc:
            raise FeatureError(f"{clip_id or 'clip'}: mpf_time: {exc}") from exc
    return StrokeFeatureSet(tuple(bands), attack, decay, truncated, mpf, t_mpf, ratios, clip.label, clip_id)


def write_feature_table(feature_sets, path, fmt="csv"):
    """Write feature rows (sorted by clip id) as CSV or JSON."""
    rows = [r for fs in sorted(feature_sets, key=lambda f: f.clip_id) for r in fs.rows()]
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump({"columns": list(FEATURE_COLUMNS), "rows": rows}, fh, indent=1)
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=FEATURE_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r[k]) for k in FEATURE_COLUMNS})


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return v
