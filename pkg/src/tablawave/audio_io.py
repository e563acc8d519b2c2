"""Audio clips, stroke labels, WAV I/O and the harmonic-stroke synthesizer."""

import json
import struct
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.io import wavfile

__all__ = [
    "AudioClip",
    "StrokeLabel",
    "SynthStrokeSpec",
    "WavFormatError",
    "STROKES",
    "DEFAULT_DAMPING",
    "TABLA_DIAMETERS",
    "read_wav",
    "write_wav",
    "synthesize_stroke",
    "load_synth_spec",
]

STROKES = ("Ta/Na", "Ti", "Teen", "Ghe", "Ge", "Thun", "Tu", "Te", "Re")

DEFAULT_DAMPING = {
    "Ta/Na": "damped",
    "Ti": "damped",
    "Teen": "free",
    "Ghe": "damped",
    "Ge": "free",
    "Thun": "free",
    "Tu": "free",
    "Te": "damped",
    "Re": "damped",
}

# Membrane diameters in inches.
TABLA_DIAMETERS = {1: 5.0, 2: 5.0, 3: 5.0, 4: 5.5, 5: 6.0}

# Synthesizer fixture defaults for the two execution styles.
DAMPED_DECAY = 18.0
DAMPED_ATTACK = 0.008
FREE_DECAY = 6.0
FREE_ATTACK = 0.003

_FULL_SCALE_SLACK = 1e-9


class WavFormatError(ValueError):
    """Malformed or unsupported WAV data."""


@dataclass(frozen=True)
class StrokeLabel:
    stroke_name: str
    damping: Optional[str] = None
    tabla_id: int = 1
    membrane_diameter: Optional[float] = None

    def __post_init__(self):
        if self.stroke_name not in STROKES:
            raise ValueError(f"unknown stroke {self.stroke_name!r}; expected one of {STROKES}")
        if self.damping is None:
            object.__setattr__(self, "damping", DEFAULT_DAMPING[self.stroke_name])
        if self.damping not in ("damped", "free"):
            raise ValueError(f"damping must be 'damped' or 'free', got {self.damping!r}")
        if self.tabla_id not in TABLA_DIAMETERS:
            raise ValueError(f"tabla_id must be in 1..5, got {self.tabla_id!r}")
        if self.membrane_diameter is None:
            object.__setattr__(self, "membrane_diameter", TABLA_DIAMETERS[self.tabla_id])

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono sample buffer in [-1, 1] with its sample rate."""

    samples: np.ndarray
    sample_rate: int
    label: Optional[StrokeLabel] = None

    def __post_init__(self):
        x = np.array(self.samples, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("audio clip is empty")
        if not np.all(np.isfinite(x)):
            raise ValueError("audio clip contains non-finite samples")
        if np.max(np.abs(x)) > 1.0 + _FULL_SCALE_SLACK:
            raise ValueError("samples must lie within [-1, 1]")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample rate must be a positive integer, got {self.sample_rate!r}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self):
        return self.samples.size / self.sample_rate

    @property
    def dt(self):
        return 1.0 / self.sample_rate

    def __len__(self):
        return self.samples.size

    def times(self):
        return np.arange(self.samples.size) / self.sample_rate

    def with_samples(self, samples):
        return AudioClip(samples, self.sample_rate, self.label)


@dataclass(frozen=True)
class SynthStrokeSpec:
    """Harmonic stroke model: exponentially decaying partials under a linear attack."""

    fundamental: float
    partial_ratios: tuple = (1.0, 2.0, 3.0, 4.0, 5.0)
    partial_amplitudes: Optional[tuple] = None
    partial_decay_constants: Optional[tuple] = None
    attack_time: float = FREE_ATTACK
    duration: float = 1.0
    noise_floor: float = 1e-5

    def __post_init__(self):
        ratios = tuple(float(r) for r in self.partial_ratios)
        if not ratios:
            raise ValueError("partial list is empty")
        amps = self.partial_amplitudes
        amps = (1.0,) * len(ratios) if amps is None else tuple(float(a) for a in amps)
        decays = self.partial_decay_constants
        decays = (FREE_DECAY,) * len(ratios) if decays is None else tuple(float(d) for d in decays)
        if not (len(ratios) == len(amps) == len(decays)):
            raise ValueError("partial_ratios, partial_amplitudes and partial_decay_constants differ in length")
        if self.fundamental <= 0 or any(r <= 0 for r in ratios):
            raise ValueError("partial frequencies must be positive")
        if any(d < 0 for d in decays):
            raise ValueError("decay constants must be non-negative")
        if self.duration <= 0 or not 0 <= self.attack_time < self.duration:
            raise ValueError("need 0 <= attack_time < duration")
        if self.noise_floor < 0:
            raise ValueError("noise_floor must be non-negative")
        object.__setattr__(self, "partial_ratios", ratios)
        object.__setattr__(self, "partial_amplitudes", amps)
        object.__setattr__(self, "partial_decay_constants", decays)

    @property
    def partial_frequencies(self):
        return tuple(self.fundamental * r for r in self.partial_ratios)

    @classmethod
    def damped(cls, fundamental, **kwargs):
        n = len(kwargs.get("partial_ratios", cls.partial_ratios))
        kwargs.setdefault("partial_decay_constants", (DAMPED_DECAY,) * n)
        kwargs.setdefault("attack_time", DAMPED_ATTACK)
        return cls(fundamental, **kwargs)

    @classmethod
    def free(cls, fundamental, **kwargs):
        n = len(kwargs.get("partial_ratios", cls.partial_ratios))
        kwargs.setdefault("partial_decay_constants", (FREE_DECAY,) * n)
        kwargs.setdefault("attack_time", FREE_ATTACK)
        return cls(fundamental, **kwargs)

    def to_dict(self):
        d = asdict(self)
        for key in ("partial_ratios", "partial_amplitudes", "partial_decay_constants"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown synth spec fields: {sorted(unknown)}")
        if "fundamental" not in d:
            raise ValueError("synth spec requires 'fundamental'")
        return cls(**d)


def load_synth_spec(path):
    """Read a :class:`SynthStrokeSpec` from a JSON document.

    Besides the spec fields the document may carry ``sample_rate``, ``seed``
    and ``label`` (a dict of :class:`StrokeLabel` fields); these are returned
    alongside the spec.
    """
    doc = json.loads(Path(path).read_text())
    extra = {k: doc.pop(k) for k in ("sample_rate", "seed", "label") if k in doc}
    spec = SynthStrokeSpec.from_dict(doc)
    label = StrokeLabel(**extra["label"]) if extra.get("label") else None
    return spec, extra.get("sample_rate", 44100), extra.get("seed", 0), label


def synthesize_stroke(spec, sample_rate=44100, seed=0, label=None, peak=0.9):
    """Render a stroke from ``spec``.

    Each partial ``k`` contributes ``A_k * env(t) * exp(-d_k t) * sin(2 pi r_k f0 t)``
    where ``env`` ramps linearly over ``attack_time``.  Uniform noise of
    amplitude ``noise_floor`` is added, then the clip is peak-normalized.
    """
    nyquist = sample_rate / 2.0
    top = max(spec.partial_frequencies)
    if top >= nyquist:
        raise ValueError(f"partial at {top:g} Hz aliases at sample rate {sample_rate} (Nyquist {nyquist:g} Hz)")
    n = int(round(spec.duration * sample_rate))
    t = np.arange(n) / sample_rate
    if spec.attack_time > 0:
        env = np.minimum(t / spec.attack_time, 1.0)
    else:
        env = np.ones(n)
    y = np.zeros(n)
    for f, a, d in zip(spec.partial_frequencies, spec.partial_amplitudes, spec.partial_decay_constants):
        y += a * np.exp(-d * t) * np.sin(2.0 * np.pi * f * t)
    y *= env
    if spec.noise_floor > 0:
        rng = np.random.default_rng(seed)
        y += rng.uniform(-spec.noise_floor, spec.noise_floor, n)
    top_abs = np.max(np.abs(y))
    if top_abs == 0:
        raise ValueError("synthesized stroke is silent")
    return AudioClip(y * (peak / top_abs), sample_rate, label)


def read_wav(path, label=None):
    """Read a mono PCM (8/16/24/32-bit integer) or IEEE-float WAV file.

    Integer data are scaled by the format's full-scale value so that the
    samples land in [-1, 1].  Multi-channel files are rejected.
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except (ValueError, wavfile.WavFileWarning, EOFError, struct.error) as exc:
        raise WavFormatError(f"{path}: {exc}") from exc
    if data.ndim != 1:
        raise WavFormatError(f"{path}: expected 1 channel, found {data.shape[1]}")
    if data.size == 0:
        raise WavFormatError(f"{path}: no audio frames")
    if data.dtype == np.uint8:
        x = (data.astype(float) - 128.0) / 128.0
    elif data.dtype == np.int16:
        x = data.astype(float) / 32768.0
    elif data.dtype == np.int32:
        # 24-bit frames are delivered left-justified in int32.
        x = data.astype(float) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(float)
        if np.max(np.abs(x)) > 1.0:
            raise WavFormatError(f"{path}: float samples exceed full scale")
    else:
        raise WavFormatError(f"{path}: unsupported sample type {data.dtype}")
    return AudioClip(x, rate, label)


def to_pcm16(samples):
    q = np.round(np.asarray(samples, dtype=float) * 32768.0)
    return np.clip(q, -32768, 32767).astype(np.int16)


def write_wav(clip, path):
    """Write ``clip`` as a 16-bit PCM mono WAV file."""
    wavfile.write(str(path), clip.sample_rate, to_pcm16(clip.samples))
