"""Octave sub-band coding with an iterated half-band filter bank.

The clip is brought to an analysis rate of twice the top band edge (28160 Hz
for the default plan), so that every split sits exactly at a quarter of the
stage's own rate.  Each stage is a two-step lifting scheme built from a
Kaiser-windowed half-band FIR:

* predict: odd samples are estimated from even ones with the half-band
  interpolator; the residual is the detail (upper half of the band),
* update: the even samples are corrected with half the adjoint predictor,
  which turns them into a low-passed, decimated approximation.

Eight stages give eight detail series, stage ``l`` covering
``[top/2**l, top/2**(l-1))``.  The low residue left after the last stage is
kept beside them and folded into the lowest band's signal, so that band
spans everything below ``top/2**(n_levels-1)``.

Lifting is invertible whatever the boundary handling, so the bank is
critically sampled and reconstructs exactly; the frequency selectivity comes
from the half-band design (default: 50 Hz transition, 60 dB).
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import signal

from .audio_io import AudioClip, write_wav

__all__ = [
    "BandPlan",
    "FilterSpec",
    "HalfBandFilter",
    "BandDecomposition",
    "FilterDesignError",
    "design_halfband",
    "decompose",
    "reconstruct",
    "band_energy",
    "export_band_wavs",
]

DEFAULT_TOP_EDGE = 14080.0
DEFAULT_LEVELS = 8


class FilterDesignError(ValueError):
    """The requested filter cannot be realized within the tap budget."""


@dataclass(frozen=True)
class BandPlan:
    """Octave bands below ``top_edge``; level 1 is the highest band.

    Levels ``1 .. n_levels-1`` are ``[top/2**l, top/2**(l-1))``; the last
    level is the residual low band ``[0, top/2**(n_levels-1))``.
    """

    top_edge: float = DEFAULT_TOP_EDGE
    n_levels: int = DEFAULT_LEVELS

    def __post_init__(self):
        if self.top_edge <= 0:
            raise ValueError("top_edge must be positive")
        if self.n_levels < 2:
            raise ValueError("a plan needs at least two levels")

    @property
    def levels(self):
        out = []
        for lev in range(1, self.n_levels + 1):
            hi = self.top_edge / 2 ** (lev - 1)
            lo = 0.0 if lev == self.n_levels else hi / 2.0
            out.append((lev, lo, hi))
        return tuple(out)

    def edges(self, level):
        if not 1 <= level <= self.n_levels:
            raise ValueError(f"level must be in 1..{self.n_levels}, got {level}")
        return self.levels[level - 1][1:]

    @property
    def analysis_rate(self):
        return 2.0 * self.top_edge

    def level_of(self, freq):
        """Band level containing ``freq`` (Hz), or ``None`` above the plan."""
        for lev, lo, hi in self.levels:
            if lo <= freq < hi:
                return lev
        return None

    def to_dict(self):
        return {
            "top_edge": self.top_edge,
            "n_levels": self.n_levels,
            "levels": [{"level": l, "f_low": lo, "f_high": hi} for l, lo, hi in self.levels],
        }

    @classmethod
    def from_dict(cls, d):
        plan = cls(float(d.get("top_edge", DEFAULT_TOP_EDGE)), int(d.get("n_levels", DEFAULT_LEVELS)))
        if "levels" in d:
            given = [(int(r["level"]), float(r["f_low"]), float(r["f_high"])) for r in d["levels"]]
            if given != list(plan.levels):
                raise ValueError("band levels must be successive halvings of top_edge")
        return plan

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FilterSpec:
    transition_width: float = 50.0
    stopband_attenuation: float = 60.0
    max_taps: int = 16383

    def to_dict(self):
        return {
            "transition_width": self.transition_width,
            "stopband_attenuation": self.stopband_attenuation,
            "max_taps": self.max_taps,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True, eq=False)
class HalfBandFilter:
    taps: np.ndarray
    transition_width: float
    stage_rate: float
    stopband_attenuation: float

    @property
    def numtaps(self):
        return self.taps.size

    @property
    def center(self):
        return self.taps.size // 2

    @property
    def highpass_taps(self):
        """Complementary high-pass by spectral inversion."""
        g = -self.taps.copy()
        g[self.center] += 1.0
        return g

    @property
    def predictor(self):
        """Odd-phase taps scaled by 2: interpolates odd samples from even ones."""
        return 2.0 * self.taps[(self.center + 1) % 2::2]

    def frequency_response(self, freqs, highpass=False):
        taps = self.highpass_taps if highpass else self.taps
        _, h = signal.freqz(taps, worN=np.asarray(freqs, dtype=float), fs=self.stage_rate)
        # Remove the linear-phase delay so the response is real.
        return np.real(h * np.exp(2j * np.pi * np.asarray(freqs) * self.center / self.stage_rate))


def _halfband_taps(numtaps, beta):
    n = np.arange(numtaps) - numtaps // 2
    taps = 0.5 * np.sinc(n / 2.0) * np.kaiser(numtaps, beta)
    taps[(n % 2 == 0)] = 0.0
    odd = n % 2 != 0
    taps[odd] *= 0.5 / taps[odd].sum()
    taps[numtaps // 2] = 0.5
    return taps


def _stopband_peak(taps, transition_width, stage_rate):
    # Half-band symmetry: the passband ripple mirrors the stopband ripple.
    f = np.linspace(stage_rate / 4 + transition_width / 2, stage_rate / 2, 2048)
    _, h = signal.freqz(taps, worN=f, fs=stage_rate)
    return float(np.max(np.abs(h)))


def design_halfband(transition_width, stage_rate, stopband_attenuation=60.0, max_taps=16383):
    """Kaiser-windowed sinc half-band low-pass with cutoff at ``stage_rate / 4``.

    The tap count is ``4K - 1`` (odd, symmetric, with zero taps at every
    even offset from the centre except the centre itself).  The Kaiser
    estimate is grown four taps at a time until the measured stopband (and
    hence, by symmetry, the passband ripple) meets ``stopband_attenuation``
    across the whole band outside ``stage_rate/4 +- transition_width/2``.
    """
    if transition_width <= 0:
        raise ValueError("transition width must be positive")
    if stage_rate <= 4.0 * transition_width:
        raise ValueError(
            f"stage rate {stage_rate:g} Hz is too low for a {transition_width:g} Hz transition band"
        )
    numtaps, beta = signal.kaiserord(stopband_attenuation, 2.0 * transition_width / stage_rate)
    numtaps = 4 * math.ceil((numtaps + 1) / 4) - 1
    limit = 10.0 ** (-stopband_attenuation / 20.0)
    while True:
        if numtaps > max_taps:
            raise FilterDesignError(f"half-band design needs more than {max_taps} taps")
        taps = _halfband_taps(numtaps, beta)
        if _stopband_peak(taps, transition_width, stage_rate) <= limit:
            break
        numtaps += 4
    taps.setflags(write=False)
    return HalfBandFilter(taps, float(transition_width), float(stage_rate), float(stopband_attenuation))


def _predict(even, n_odd, p):
    k = p.size // 2
    ext = np.pad(even, (k - 1, k), mode="symmetric")
    return np.convolve(ext, p, mode="valid")[:n_odd]


def _update(detail, n_even, p):
    k = p.size // 2
    if detail.size == 0:
        return np.zeros(n_even)
    ext = np.pad(detail, (k, k - 1 + n_even - detail.size), mode="symmetric")
    return 0.5 * np.correlate(ext, p, mode="valid")[:n_even]


def _analysis_step(x, filt):
    p = filt.predictor
    even, odd = x[0::2], x[1::2]
    detail = odd - _predict(even, odd.size, p)
    approx = even + _update(detail, even.size, p)
    return approx, detail


def _synthesis_step(approx, detail, filt):
    p = filt.predictor
    even = approx - _update(detail, approx.size, p)
    odd = detail + _predict(even, detail.size, p)
    out = np.empty(even.size + odd.size)
    out[0::2] = even
    out[1::2] = odd
    return out


@dataclass(frozen=True, eq=False)
class BandDecomposition:
    """Result of :func:`decompose`.

    ``coefficient_series`` and ``band_signals`` are dicts keyed by level;
    coefficient series live at their stage's rate, band signals at the
    clip's original rate and length.  ``residual`` is the low-pass output
    of the last stage; it belongs to the lowest band's signal but not to
    that level's coefficient series, which is the last stage's detail.
    """

    plan: BandPlan
    filters: tuple
    coefficient_series: dict
    band_signals: dict
    residual: np.ndarray
    sample_rate: int
    analysis_rate: float
    n_samples: int
    padded_length: int
    filter_spec: FilterSpec = field(default_factory=FilterSpec)

    @property
    def coefficient_counts(self):
        return {lev: int(c.size) for lev, c in self.coefficient_series.items()}

    def coefficient_rate(self, level):
        return self.analysis_rate / 2**level


def _stage_filters(plan, spec):
    rate = plan.analysis_rate
    out = []
    for _ in range(plan.n_levels):
        out.append(design_halfband(spec.transition_width, rate, spec.stopband_attenuation, spec.max_taps))
        rate /= 2.0
    return tuple(out)


_FILTER_CACHE = {}


def _cached_filters(plan, spec):
    key = (plan, spec)
    if key not in _FILTER_CACHE:
        _FILTER_CACHE[key] = _stage_filters(plan, spec)
    return _FILTER_CACHE[key]


def _padded_length(n, fs, analysis_rate):
    ratio = Fraction(analysis_rate).limit_denominator(10**6) / fs
    step = ratio.denominator
    n_pad = step * math.ceil(n / step)
    return n_pad, int(n_pad * ratio)


def _to_analysis_rate(x, fs, analysis_rate):
    n_pad, n_an = _padded_length(x.size, fs, analysis_rate)
    if n_an == x.size:
        return x.copy(), n_pad
    xp = np.concatenate([x, np.zeros(n_pad - x.size)])
    return signal.resample(xp, n_an), n_pad


def _from_analysis_rate(y, n_pad, n):
    if y.size == n_pad:
        return y[:n].copy()
    return signal.resample(y, n_pad)[:n]


def _synthesize(plan, filters, details, approx):
    x = approx
    for lev in range(plan.n_levels, 0, -1):
        x = _synthesis_step(x, details[lev], filters[lev - 1])
    return x


def decompose(clip, plan=None, filter_spec=None):
    """Split ``clip`` into the plan's octave bands.

    Parameters
    ----------
    clip : AudioClip
        Sample rate must be at least ``plan.analysis_rate`` (28160 Hz by default).
    plan : BandPlan, optional
    filter_spec : FilterSpec, optional
        Half-band design parameters applied at every stage's own rate.

    Returns
    -------
    BandDecomposition
    """
    plan = plan or BandPlan()
    spec = filter_spec or FilterSpec()
    fs = clip.sample_rate
    if fs < plan.analysis_rate:
        raise ValueError(f"sample rate {fs} Hz is below twice the top band edge ({plan.analysis_rate:g} Hz)")
    filters = _cached_filters(plan, spec)
    x, n_pad = _to_analysis_rate(clip.samples, fs, plan.analysis_rate)
    if x.size < filters[0].numtaps:
        raise ValueError(
            f"clip too short: {clip.samples.size} samples, first-stage filter has {filters[0].numtaps} taps"
        )
    details = {}
    approx = x
    for lev in range(1, plan.n_levels + 1):
        approx, details[lev] = _analysis_step(approx, filters[lev - 1])

    bands = {}
    last = plan.n_levels
    for lev in range(1, last + 1):
        z_details = {l: np.zeros_like(d) for l, d in details.items()}
        z_details[lev] = details[lev]
        z_approx = approx if lev == last else np.zeros_like(approx)
        y = _synthesize(plan, filters, z_details, z_approx)
        bands[lev] = _from_analysis_rate(y, n_pad, clip.samples.size)

    for arr in list(details.values()) + list(bands.values()) + [approx]:
        arr.setflags(write=False)
    return BandDecomposition(plan, filters, details, bands, approx, fs, plan.analysis_rate,
                             clip.samples.size, n_pad, spec)


def reconstruct(decomp):
    """Invert :func:`decompose` from its coefficient series.

    The output has the input's length and rate.  Samples are clipped to
    [-1, 1] if band-limiting produced overshoot.
    """
    plan, filters = decomp.plan, decomp.filters
    if len(filters) != plan.n_levels:
        raise ValueError("decomposition filters do not match its band plan")
    rate = plan.analysis_rate
    for f in filters:
        if not math.isclose(f.stage_rate, rate):
            raise ValueError("decomposition filters do not match its band plan")
        rate /= 2.0
    y = _synthesize(plan, filters, decomp.coefficient_series, decomp.residual)
    out = _from_analysis_rate(y, decomp.padded_length, decomp.n_samples)
    return AudioClip(np.clip(out, -1.0, 1.0), decomp.sample_rate)


def band_energy(decomp, level):
    """Sum of squared samples of one band signal."""
    if level not in decomp.band_signals:
        raise ValueError(f"level must be in 1..{decomp.plan.n_levels}, got {level}")
    b = decomp.band_signals[level]
    return float(np.dot(b, b))


def export_band_wavs(decomp, directory, stem="band"):
    """Write each band signal to ``<directory>/<stem>_L<level>.wav`` (16-bit)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for lev, b in sorted(decomp.band_signals.items()):
        path = directory / f"{stem}_L{lev}.wav"
        write_wav(AudioClip(np.clip(b, -1.0, 1.0), decomp.sample_rate), path)
        paths.append(path)
    return paths
