"""Morlet continuous wavelet transform.

Frequency-domain implementation with unit-energy daughter wavelets, the usual
Fourier-period conversion for the Morlet wavelet and an e-folding cone of
influence (sqrt(2) * scale from either edge).  Also evaluates the
admissibility condition and the wavelet's moments by quadrature.
"""

import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate

from .special import QuadratureError

__all__ = [
    "WaveletSpec",
    "Scalogram",
    "cwt_transform",
    "global_wavelet_spectrum",
    "check_admissibility",
    "compute_moments",
    "morlet",
    "fourier_factor",
    "write_scalogram_csv",
    "write_scalogram_binary",
    "read_scalogram_binary",
]

_BINARY_MAGIC = b"TWSC"
_BINARY_VERSION = 1
_HEADER = struct.Struct("<4sIIIdddd")


@dataclass(frozen=True)
class WaveletSpec:
    """Morlet transform configuration.

    ``s0=None`` means two sampling intervals; ``num_scales=None`` spans
    scales up to the clip duration.
    """

    family: str = "morlet"
    center_frequency_parameter: float = 6.0
    dj: float = 0.125
    s0: float = None
    num_scales: int = None

    def __post_init__(self):
        if self.family != "morlet":
            raise ValueError(f"unsupported wavelet family {self.family!r}")
        if self.center_frequency_parameter <= 0:
            raise ValueError("center frequency parameter must be positive")
        if not 0 < self.dj <= 1:
            raise ValueError("dj must lie in (0, 1]")
        if self.num_scales is not None and self.num_scales < 1:
            raise ValueError("num_scales must be positive")

    @property
    def omega0(self):
        return self.center_frequency_parameter

    @classmethod
    def for_band(cls, f_high, f_low, dj=0.125, omega0=6.0):
        """Scales covering Fourier frequencies from ``f_high`` down to ``f_low``."""
        ff = fourier_factor(omega0)
        s0 = 1.0 / (ff * f_high)
        n = int(math.ceil(math.log2(f_high / f_low) / dj)) + 1
        return cls("morlet", omega0, dj, s0, n)


def fourier_factor(omega0):
    """Fourier period per unit scale for the Morlet wavelet."""
    return 4.0 * math.pi / (omega0 + math.sqrt(2.0 + omega0**2))


def morlet(t, omega0=6.0):
    """Mother Morlet wavelet ``pi**-0.25 * exp(i omega0 t) * exp(-t**2 / 2)``."""
    t = np.asarray(t, dtype=float)
    return np.pi**-0.25 * np.exp(1j * omega0 * t - 0.5 * t**2)


@dataclass(frozen=True, eq=False)
class Scalogram:
    power: np.ndarray
    scales: np.ndarray
    frequencies: np.ndarray
    coi: np.ndarray
    dt: float
    spec: WaveletSpec
    coefficients: np.ndarray = None
    flags: tuple = ()

    @property
    def times(self):
        return np.arange(self.power.shape[1]) * self.dt

    @property
    def valid(self):
        """Boolean mask of (scale, time) cells outside the cone of influence."""
        return self.scales[:, None] <= self.coi[None, :]

    @property
    def rectified_power(self):
        """Power divided by scale; comparable across scales for sinusoids."""
        return self.power / self.scales[:, None]

    def scale_index(self, freq):
        """Index of the scale whose Fourier frequency is nearest ``freq`` (log distance)."""
        if not self.frequencies[-1] <= freq <= self.frequencies[0]:
            raise ValueError(
                f"{freq:g} Hz is outside the scalogram range "
                f"[{self.frequencies[-1]:g}, {self.frequencies[0]:g}] Hz"
            )
        return int(np.argmin(np.abs(np.log(self.frequencies / freq))))


def cwt_transform(clip, spec=None, keep_coefficients=False):
    """Morlet CWT power of ``clip``.

    Parameters
    ----------
    clip : AudioClip
    spec : WaveletSpec, optional
    keep_coefficients : bool
        Also store the complex coefficients (memory heavy for long clips).

    Returns
    -------
    Scalogram
    """
    spec = spec or WaveletSpec()
    if spec.omega0 < 5:
        raise ValueError("Morlet transform needs omega0 >= 5 for approximate admissibility")
    x = np.asarray(clip.samples, dtype=float)
    n = x.size
    dt = clip.dt
    s0 = 2.0 * dt if spec.s0 is None else spec.s0
    if s0 < 2.0 * dt * (1 - 1e-9):
        raise ValueError("smallest scale must be at least two sampling intervals")
    if spec.num_scales is None:
        n_scales = int(math.floor(math.log2(n * dt / s0) / spec.dj)) + 1
        n_scales = max(n_scales, 1)
    else:
        n_scales = spec.num_scales
    scales = s0 * 2.0 ** (spec.dj * np.arange(n_scales))
    ff = fourier_factor(spec.omega0)
    freqs = 1.0 / (ff * scales)

    flags = []
    if scales[-1] > 0.5 * n * dt:
        warnings.warn("largest wavelet scale exceeds half the clip duration; results lie in the cone of influence",
                      stacklevel=2)
        flags.append("scale_exceeds_half_duration")

    n_pad = 1 << int(math.ceil(math.log2(n)))
    xhat = np.fft.fft(x, n_pad)
    k = np.arange(1, n_pad // 2 + 1)
    omega = 2.0 * np.pi * k / (n_pad * dt)
    omega_full = np.concatenate([[0.0], omega, -omega[: (n_pad - 1) // 2][::-1]])
    positive = omega_full > 0

    power = np.empty((n_scales, n))
    coeffs = np.empty((n_scales, n), dtype=complex) if keep_coefficients else None
    for j, s in enumerate(scales):
        daughter = np.zeros(n_pad)
        arg = s * omega_full[positive] - spec.omega0
        daughter[positive] = math.sqrt(2.0 * np.pi * s / dt) * np.pi**-0.25 * np.exp(-0.5 * arg**2)
        w = np.fft.ifft(xhat * daughter)[:n]
        power[j] = w.real**2 + w.imag**2
        if keep_coefficients:
            coeffs[j] = w

    dist = np.minimum(np.arange(n), np.arange(n)[::-1]).astype(float)
    coi = dist * dt / math.sqrt(2.0)
    return Scalogram(power, scales, freqs, coi, dt, spec, coeffs, tuple(flags))


def global_wavelet_spectrum(scal):
    """Time-averaged power per scale, ignoring cells inside the cone of influence.

    Returns
    -------
    frequencies, mean_power : ndarray
        Only scales with at least one valid cell are reported.
    """
    valid = scal.valid
    counts = valid.sum(axis=1)
    present = counts > 0
    sums = np.where(valid, scal.power, 0.0).sum(axis=1)
    return scal.frequencies[present], sums[present] / counts[present]


def peak_frequency(freqs, power):
    """Frequency of the maximum of a sampled spectrum.

    Parabolic interpolation in log-frequency refines the peak between scale
    samples.
    """
    freqs = np.asarray(freqs, dtype=float)
    power = np.asarray(power, dtype=float)
    i = int(np.argmax(power))
    if i == 0 or i == power.size - 1:
        return float(freqs[i])
    y0, y1, y2 = power[i - 1: i + 2]
    denom = y0 - 2.0 * y1 + y2
    delta = 0.0 if denom == 0 else 0.5 * (y0 - y2) / denom
    lf = np.log(freqs)
    step = 0.5 * (lf[i + 1] - lf[i - 1])
    return float(np.exp(lf[i] + delta * step))


def ridge_frequencies(scal):
    """Per-time frequency of maximum power outside the cone of influence (NaN where none)."""
    masked = np.where(scal.valid, scal.power, -np.inf)
    idx = np.argmax(masked, axis=0)
    ok = np.isfinite(masked[idx, np.arange(masked.shape[1])])
    return np.where(ok, scal.frequencies[idx], np.nan)


def _fourier_at(omega, omega0, half_width=40.0, step=0.005):
    # Unitary Fourier transform of the mother wavelet by the trapezoid rule.
    t = np.arange(-half_width, half_width + step / 2, step)
    psi = morlet(t, omega0)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    kern = np.exp(-1j * omega[:, None] * t[None, :])
    return integrate.trapezoid(psi[None, :] * kern, t, axis=1) / math.sqrt(2.0 * math.pi)


def check_admissibility(spec, tolerance=1e-10):
    """Zero-frequency leakage and band-pass shape of the mother wavelet.

    ``spec`` may be a :class:`WaveletSpec` or a bare ``omega0``.

    Returns
    -------
    admissible : bool
        ``|Psi(0)|**2 <= tolerance`` and the magnitude spectrum has a single
        interior maximum.
    zero_frequency_magnitude : float
        ``|Psi(0)|``, evaluated by quadrature.
    """
    omega0 = spec.omega0 if isinstance(spec, WaveletSpec) else float(spec)
    psi0 = abs(_fourier_at(0.0, omega0)[0])
    grid = np.linspace(0.0, 4.0 * max(omega0, 1.0), 801)
    mag = np.abs(_fourier_at(grid, omega0))
    d = np.diff(mag)
    # Signs of the slope must go + ... + then - ... - exactly once.
    sign = np.sign(d[np.abs(d) > 1e-14 * mag.max()])
    changes = np.count_nonzero(np.diff(sign) != 0)
    band_pass = changes == 1 and sign[0] > 0 and sign[-1] < 0
    return bool(psi0**2 <= tolerance and band_pass), float(psi0)


def compute_moments(spec, n_max, shift=0.0, vanishing_tol=1e-6):
    """Moments ``M_p = integral t**p psi(t - shift) dt`` for ``p = 0 .. n_max``.

    Returns
    -------
    moments : ndarray of complex
    vanishing : ndarray of bool
        ``|M_p| <= vanishing_tol``.
    """
    if n_max > 8 or n_max < 0:
        raise ValueError("n_max must lie in 0..8")
    omega0 = spec.omega0 if isinstance(spec, WaveletSpec) else float(spec)
    half = 14.0
    lo, hi = shift - half, shift + half
    out = np.empty(n_max + 1, dtype=complex)
    for p in range(n_max + 1):
        edge = max(abs(lo), abs(hi)) ** p * math.exp(-0.5 * half**2)
        if edge > 1e-16:
            raise QuadratureError(f"support truncation insufficient for moment {p}")
        parts = []
        for fn in (np.real, np.imag):
            with warnings.catch_warnings():
                # Convergence is judged from the returned error estimate below.
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, err = integrate.quad(
                    lambda t: t**p * fn(morlet(t - shift, omega0)), lo, hi,
                    limit=500, epsabs=1e-15, epsrel=1e-12,
                )
            if err > 1e-9 * max(1.0, abs(val)):
                raise QuadratureError(f"moment {p} quadrature did not converge (error estimate {err:g})")
            parts.append(val)
        out[p] = complex(parts[0], parts[1])
    return out, np.abs(out) <= vanishing_tol


def write_scalogram_csv(scal, path, time_stride=1, scale_stride=1):
    """Long-format CSV: ``scale,frequency,time,power``."""
    times = scal.times
    with open(path, "w") as fh:
        fh.write("scale,frequency,time,power\n")
        for j in range(0, scal.scales.size, scale_stride):
            s, f = scal.scales[j], scal.frequencies[j]
            for i in range(0, times.size, time_stride):
                fh.write(f"{s:.9g},{f:.9g},{times[i]:.9g},{scal.power[j, i]:.9g}\n")


def write_scalogram_binary(scal, path):
    """Compact little-endian layout.

    Header (``<4sIIIdddd``): magic ``b"TWSC"``, version, number of scales,
    number of time samples, dt, dj, omega0, s0.  Then float64 arrays:
    scales, frequencies, coi, and the power matrix in scale-major order.
    """
    n_s, n_t = scal.power.shape
    header = _HEADER.pack(_BINARY_MAGIC, _BINARY_VERSION, n_s, n_t, scal.dt, scal.spec.dj,
                          scal.spec.omega0, float(scal.scales[0]))
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in (scal.scales, scal.frequencies, scal.coi, scal.power):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_scalogram_binary(path):
    data = Path(path).read_bytes()
    magic, version, n_s, n_t, dt, dj, omega0, s0 = _HEADER.unpack_from(data, 0)
    if magic != _BINARY_MAGIC or version != _BINARY_VERSION:
        raise ValueError(f"{path}: not a scalogram file")
    off = _HEADER.size
    arrays = []
    for count in (n_s, n_s, n_t, n_s * n_t):
        arrays.append(np.frombuffer(data, dtype="<f8", count=count, offset=off).astype(float))
        off += 8 * count
    scales, freqs, coi, power = arrays
    spec = WaveletSpec("morlet", omega0, dj, s0, n_s)
    return Scalogram(power.reshape(n_s, n_t), scales, freqs, coi, dt, spec)
