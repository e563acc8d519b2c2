import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from tablawave.audio_io import AudioClip
from tablawave.cwt import (
    WaveletSpec,
    check_admissibility,
    compute_moments,
    cwt_transform,
    fourier_factor,
    global_wavelet_spectrum,
    peak_frequency,
    read_scalogram_binary,
    ridge_frequencies,
    write_scalogram_binary,
    write_scalogram_csv,
)
from tablawave.special import QuadratureError

from conftest import tone

SPEC = WaveletSpec.for_band(3000.0, 100.0, dj=1 / 16)


def band_mean(scal, freq, power=None):
    power = scal.power if power is None else power
    j = scal.scale_index(freq)
    return power[j][scal.valid[j]].mean()


def ridge_scale(freq):
    scal = cwt_transform(tone(freq, duration=0.5), SPEC)
    f, p = global_wavelet_spectrum(scal)
    return 1.0 / (fourier_factor(6.0) * peak_frequency(f, p))


class TestWaveletSpec:
    def test_defaults(self):
        s = WaveletSpec()
        assert s.family == "morlet" and s.omega0 == 6 and s.dj == 0.125

    def test_fourier_factor(self):
        assert fourier_factor(6.0) == pytest.approx(4 * math.pi / (6 + math.sqrt(38)))
        assert fourier_factor(6.0) == pytest.approx(1.0330, abs=1e-4)

    def test_for_band_covers_range(self):
        scal = cwt_transform(tone(440, duration=0.2), WaveletSpec.for_band(2000, 200))
        assert scal.frequencies[0] == pytest.approx(2000)
        assert scal.frequencies[-1] <= 200

    def test_rejects_small_omega0(self):
        with pytest.raises(ValueError):
            cwt_transform(tone(440, duration=0.1), WaveletSpec(center_frequency_parameter=2))


class TestTransform:
    def test_tone_ridge(self):
        scal = cwt_transform(tone(440), SPEC)
        ridge = ridge_frequencies(scal)
        mid = ridge[scal.power.shape[1] // 4: 3 * scal.power.shape[1] // 4]
        assert np.all(np.abs(mid / 440 - 1) <= 0.03)
        f, p = global_wavelet_spectrum(scal)
        assert peak_frequency(f, p) == pytest.approx(440, rel=0.03)

    def test_two_tones(self):
        t = np.arange(44100) / 44100
        x = 0.2 * np.sin(2 * np.pi * 220 * t) + 0.4 * np.sin(2 * np.pi * 880 * t)
        scal = cwt_transform(AudioClip(x, 44100), SPEC)
        f, p = global_wavelet_spectrum(scal)
        # Two local maxima, at 220 and 880 Hz.
        interior = np.flatnonzero((p[1:-1] > p[:-2]) & (p[1:-1] > p[2:])) + 1
        peaks = sorted(f[interior][np.argsort(p[interior])[-2:]])
        assert peaks[0] == pytest.approx(220, rel=0.03)
        assert peaks[1] == pytest.approx(880, rel=0.03)
        ratio = band_mean(scal, 880, scal.rectified_power) / band_mean(scal, 220, scal.rectified_power)
        assert ratio == pytest.approx(4.0, rel=0.10)

    def test_octave_doubling(self):
        for f in (200, 450, 1000):
            assert ridge_scale(f) / ridge_scale(2 * f) == pytest.approx(2.0, rel=0.02)

    def test_zero_signal(self):
        scal = cwt_transform(AudioClip(np.zeros(2000), 8000), WaveletSpec(num_scales=20))
        assert not np.any(scal.power)
        f, p = global_wavelet_spectrum(scal)
        assert not np.any(p)

    def test_invariants(self, raman_clip):
        scal = cwt_transform(raman_clip, WaveletSpec.for_band(2000, 150))
        assert np.all(np.isfinite(scal.power)) and np.all(scal.power >= 0)
        assert np.all(np.diff(scal.frequencies) < 0)
        assert scal.power.shape == (scal.scales.size, len(raman_clip))

    def test_coi(self):
        scal = cwt_transform(tone(300, duration=0.2), SPEC)
        n = scal.power.shape[1]
        dist = min(n // 2, n - 1 - n // 2)
        assert scal.coi[0] == 0 and scal.coi[n // 2] == pytest.approx(dist * scal.dt / math.sqrt(2))
        assert not scal.valid[:, 0].any()

    def test_large_scale_flagged(self):
        c = tone(300, duration=0.05)
        with pytest.warns(UserWarning, match="half the clip"):
            scal = cwt_transform(c, WaveletSpec.for_band(1000, 10))
        assert "scale_exceeds_half_duration" in scal.flags

    def test_linear_in_input(self):
        rng = np.random.default_rng(7)
        for _ in range(3):
            x, y = rng.uniform(-0.4, 0.4, (2, 3000))
            a, b = rng.uniform(-1, 1, 2)
            spec = WaveletSpec(num_scales=30, dj=0.25)
            cx = cwt_transform(AudioClip(x, 8000), spec, keep_coefficients=True).coefficients
            cy = cwt_transform(AudioClip(y, 8000), spec, keep_coefficients=True).coefficients
            cz = cwt_transform(AudioClip(a * x + b * y, 8000), spec, keep_coefficients=True).coefficients
            want = a * cx + b * cy
            assert np.linalg.norm(cz - want) <= 1e-9 * np.linalg.norm(want)

    @given(hst.integers(-800, 800))
    @settings(max_examples=15, deadline=None)
    def test_shift_covariance(self, shift):
        fs, n = 8000, 8000
        t = (np.arange(n) - n / 2 - shift) / fs
        burst = np.exp(-0.5 * (t / 0.03) ** 2) * np.sin(2 * np.pi * 500 * t)
        base = np.exp(-0.5 * ((np.arange(n) - n / 2) / fs / 0.03) ** 2) * np.sin(
            2 * np.pi * 500 * (np.arange(n) - n / 2) / fs
        )
        spec = WaveletSpec.for_band(1500, 150, dj=0.125)
        p0 = cwt_transform(AudioClip(base / np.linalg.norm(base), fs), spec).power.sum()
        p1 = cwt_transform(AudioClip(burst / np.linalg.norm(burst), fs), spec).power.sum()
        assert p1 == pytest.approx(p0, rel=1e-3)

    def test_white_noise_flat(self):
        spec = WaveletSpec(dj=0.25, num_scales=30)
        acc = None
        for seed in range(20):
            x = np.random.default_rng(seed).uniform(-0.9, 0.9, 4096)
            f, p = global_wavelet_spectrum(cwt_transform(AudioClip(x, 8000), spec))
            acc = p if acc is None else acc[: p.size] + p[: acc.size]
        acc /= 20
        db = 10 * np.log10(acc / np.median(acc))
        mid = db[db.size // 4: 3 * db.size // 4]
        assert np.all(np.abs(mid) <= 3.0)


class TestAdmissibility:
    def test_omega6(self):
        ok, psi0 = check_admissibility(WaveletSpec())
        assert ok
        assert psi0**2 <= 1e-15
        # Analytic value pi**-0.25 * exp(-omega0**2 / 2).
        assert psi0 == pytest.approx(math.pi**-0.25 * math.exp(-18), rel=1e-3)

    def test_omega2_leaks_more(self):
        ok2, psi2 = check_admissibility(2.0)
        _, psi6 = check_admissibility(6.0)
        assert not ok2
        assert psi2**2 / psi6**2 >= 1e10


class TestMoments:
    def test_vanishing_mean(self):
        m, vanishing = compute_moments(WaveletSpec(), 4)
        assert abs(m[0]) <= 1e-6 and vanishing[0]

    def test_odd_real_parts_vanish(self):
        m, _ = compute_moments(WaveletSpec(), 7)
        for p in (1, 3, 5, 7):
            assert abs(m[p].real) <= 1e-9

    def test_against_hermite_closed_form(self):
        # M_p = pi**-0.25 sqrt(2 pi) i**p He_p(omega0) exp(-omega0**2 / 2).
        from numpy.polynomial import hermite_e

        m, _ = compute_moments(WaveletSpec(), 6)
        for p in range(7):
            c = np.zeros(p + 1)
            c[p] = 1
            want = math.pi**-0.25 * math.sqrt(2 * math.pi) * (1j**p) * hermite_e.hermeval(6.0, c) * math.exp(-18)
            assert abs(m[p] - want) <= 1e-12

    def test_shifted_first_moment(self):
        # Off-centre, the real part is no longer even about t = 0, so the
        # symmetric cancellation of M_1 is lost: M_1(a) = M_1 + a * M_0.
        m0, _ = compute_moments(WaveletSpec(), 1)
        m, _ = compute_moments(WaveletSpec(), 1, shift=1.5)
        assert abs(m0[1].real) <= 1e-9
        assert abs(m[1].real) > 1e-9
        want = m0[1] + 1.5 * (math.pi**-0.25 * math.sqrt(2 * math.pi) * math.exp(-18))
        assert m[1] == pytest.approx(want, abs=1e-12)

    def test_order_limit(self):
        with pytest.raises(ValueError):
            compute_moments(WaveletSpec(), 9)

    def test_truncation_error(self):
        with pytest.raises(QuadratureError):
            compute_moments(WaveletSpec(), 8, shift=40.0)


class TestExport:
    def test_binary_roundtrip(self, tmp_path):
        scal = cwt_transform(tone(440, duration=0.05), WaveletSpec.for_band(2000, 200))
        p = tmp_path / "s.bin"
        write_scalogram_binary(scal, p)
        back = read_scalogram_binary(p)
        assert np.array_equal(back.power, scal.power)
        assert np.array_equal(back.scales, scal.scales) and np.array_equal(back.coi, scal.coi)
        assert back.dt == scal.dt and back.spec.omega0 == 6.0
        assert p.read_bytes()[:4] == b"TWSC"

    def test_binary_bad_magic(self, tmp_path):
        p = tmp_path / "x.bin"
        p.write_bytes(b"XXXX" + bytes(60))
        with pytest.raises(ValueError):
            read_scalogram_binary(p)

    def test_csv(self, tmp_path):
        scal = cwt_transform(tone(440, duration=0.01), WaveletSpec(num_scales=4, s0=1e-3))
        p = tmp_path / "s.csv"
        write_scalogram_csv(scal, p)
        lines = p.read_text().splitlines()
        assert lines[0] == "scale,frequency,time,power"
        assert len(lines) == 1 + scal.power.size
