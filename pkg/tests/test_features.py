import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from tablawave.audio_io import AudioClip, SynthStrokeSpec, synthesize_stroke
from tablawave.cwt import WaveletSpec, cwt_transform
from tablawave.features import (
    FEATURE_COLUMNS,
    FeatureConfig,
    FeatureError,
    HarmonicPeak,
    PeakParams,
    attack_peak_time,
    compute_ltas,
    decay_time,
    detect_band_peaks,
    energy_duration,
    extract_features,
    most_prominent_frequency,
    mpf_time,
    write_feature_table,
)
from tablawave.pipeline import table1_from_features
from tablawave.subband import BandPlan, decompose

from conftest import FS, tone

PLAN = BandPlan()


def peak(f, m, level=5):
    return HarmonicPeak(f, m, level, 0.0)


def single_partial(decay, duration=1.0, freq=500.0, attack=0.003):
    spec = SynthStrokeSpec(freq, (1.0,), (1.0,), (decay,), attack, duration, noise_floor=0.0)
    return synthesize_stroke(spec, FS, seed=0)


class TestPeaks:
    def test_raman_level5(self, raman_clip):
        peaks = detect_band_peaks(decompose(raman_clip), 5)
        assert len(peaks) == 2
        assert peaks[0].frequency == pytest.approx(600, rel=0.01)
        assert peaks[1].frequency == pytest.approx(800, rel=0.01)
        assert all(p.band_level == 5 and p.magnitude > 0 for p in peaks)

    def test_zero_signal(self):
        d = decompose(AudioClip(np.zeros(FS // 2), FS))
        assert detect_band_peaks(d, 5) == []

    def test_close_tones_merge(self):
        t = np.arange(FS) / FS
        x = 0.3 * np.sin(2 * np.pi * 500 * t) + 0.3 * np.sin(2 * np.pi * 505 * t)
        peaks = detect_band_peaks(decompose(AudioClip(x, FS)), 5, PeakParams(n_fft=4096))
        assert len(peaks) == 1
        assert 495 < peaks[0].frequency < 510

    def test_resolved_with_long_window(self):
        # The same pair is resolvable once bins are ~1 Hz wide.
        t = np.arange(FS) / FS
        x = 0.3 * np.sin(2 * np.pi * 500 * t) + 0.3 * np.sin(2 * np.pi * 520 * t)
        peaks = detect_band_peaks(decompose(AudioClip(x, FS)), 5, PeakParams(neighborhood_hz=8))
        assert [round(p.frequency) for p in peaks] == [500, 520]

    def test_window_longer_than_band(self):
        d = decompose(tone(500, duration=0.1))
        with pytest.raises(ValueError):
            detect_band_peaks(d, 5, PeakParams(n_fft=1 << 16))

    def test_sub_bin_interpolation(self):
        peaks = detect_band_peaks(decompose(tone(613.37, duration=0.5)), 5)
        assert len(peaks) == 1
        assert peaks[0].frequency == pytest.approx(613.37, abs=0.5)


class TestMostProminent:
    def test_argmax(self):
        assert most_prominent_frequency([peak(600, 0.5), peak(800, 0.9)]) == 800

    def test_single(self):
        assert most_prominent_frequency([peak(650, 0.1)]) == 650

    def test_tie_goes_low(self):
        assert most_prominent_frequency([peak(800, 0.7), peak(600, 0.7)]) == 600

    def test_empty(self):
        assert most_prominent_frequency([]) is None


class TestEnvelopeTimes:
    def test_attack(self):
        clip = synthesize_stroke(SynthStrokeSpec(200.0, attack_time=0.03), FS, seed=1)
        assert 0.025 <= attack_peak_time(clip) <= 0.035

    def test_monotone_decreasing(self):
        clip = single_partial(10.0, attack=0.0)
        assert attack_peak_time(clip) <= 0.001 + 1e-12

    def test_silent(self):
        with pytest.raises(ValueError):
            attack_peak_time(AudioClip(np.zeros(1000), FS))

    def test_decay_matches_exponential(self):
        d = 9.2
        t, truncated = decay_time(single_partial(d))
        assert not truncated
        assert t == pytest.approx(math.log(10) / d, rel=0.10)

    def test_decay_halves(self):
        t1, _ = decay_time(single_partial(9.2))
        t2, _ = decay_time(single_partial(18.4))
        assert t2 == pytest.approx(t1 / 2, rel=0.10)

    def test_no_decay_truncates(self):
        clip = tone(300, duration=0.5)
        t, truncated = decay_time(clip)
        assert truncated
        assert t == pytest.approx(clip.duration - attack_peak_time(clip) - 0.0025, abs=0.01)


class TestMpfTime:
    def test_burst(self):
        n = FS // 2
        t = np.arange(n) / FS
        x = np.exp(-0.5 * ((t - 0.2) / 0.01) ** 2) * np.sin(2 * np.pi * 1000 * t)
        scal = cwt_transform(AudioClip(x, FS), WaveletSpec.for_band(1500, 700))
        assert mpf_time(scal, 1000) == pytest.approx(0.2, abs=0.01)

    def test_out_of_range(self):
        scal = cwt_transform(tone(1000, duration=0.1), WaveletSpec.for_band(1500, 700))
        with pytest.raises(ValueError):
            mpf_time(scal, 100)

    def test_flat_row_earliest(self):
        scal = cwt_transform(tone(1000, duration=0.2), WaveletSpec.for_band(1500, 700))
        j = scal.scale_index(1000)
        flat = scal.power.copy()
        flat[j] = 1.0
        first_valid = np.flatnonzero(scal.valid[j])[0]
        scal = type(scal)(flat, scal.scales, scal.frequencies, scal.coi, scal.dt, scal.spec)
        assert mpf_time(scal, 1000) == pytest.approx(first_valid * scal.dt)

    def test_damped_before_free(self, corpus_features):
        damped = [f.mpf_time for fc, f in corpus_features.values() if fc.label.damping == "damped"]
        free = [f.mpf_time for fc, f in corpus_features.values() if fc.label.damping == "free"]
        assert np.mean(damped) < np.mean(free)


class TestEnergyDuration:
    def test_zero_band(self):
        d = decompose(AudioClip(np.zeros(FS // 4), FS))
        assert all(energy_duration(d, lev) == 0.0 for lev in range(1, 9))

    def test_sustained_tone(self):
        d = decompose(tone(600, duration=1.0))
        assert energy_duration(d, 5) == pytest.approx(1.0, abs=0.010)

    def test_fast_vs_slow(self):
        spec = SynthStrokeSpec(300.0, (1.0, 4.0), (1.0, 1.0), (20.0, 4.0), 0.003, 1.0)
        d = decompose(synthesize_stroke(spec, FS, seed=0))
        assert energy_duration(d, 6) < energy_duration(d, 4)


class TestLtas:
    def test_bins_and_tone(self):
        lt = compute_ltas(tone(1000, duration=1.0), window=2048, hop=1024)
        assert lt.frequencies.size == 2048 // 2 + 1 == lt.mean_db.size
        assert lt.frequencies[np.argmax(lt.mean_db)] == pytest.approx(1000, abs=FS / 2048)
        assert lt.mean_db.max() == 0.0

    def test_noise_flat(self):
        x = np.random.default_rng(3).uniform(-0.5, 0.5, 1024 * 101)
        lt = compute_ltas(AudioClip(x, FS), window=2048, hop=1024)
        assert lt.n_frames >= 100
        mid = lt.mean_db[100:900]
        assert np.all(np.abs(mid - np.median(mid)) <= 3.0)

    def test_silence_at_floor(self):
        lt = compute_ltas(AudioClip(np.zeros(8192), FS), floor_db=-100)
        assert np.all(lt.mean_db == -100)

    def test_window_too_long(self):
        with pytest.raises(ValueError):
            compute_ltas(AudioClip(np.zeros(100), FS), window=256)


class TestExtract:
    def test_raman(self, raman_features):
        assert raman_features.harmonic_counts == {1: 0, 2: 0, 3: 0, 4: 1, 5: 2, 6: 1, 7: 1, 8: 0}
        assert len(raman_features.harmonics) == 5
        for r, want in zip(raman_features.harmonic_ratios, (2.0, 1.5, 4 / 3, 1.25)):
            assert r == pytest.approx(want, rel=0.01)
        for lev in (1, 2, 8):
            assert raman_features.band(lev).mpf is None

    def test_mpf_is_band_argmax(self, raman_features):
        for b in raman_features.bands:
            if b.harmonics:
                assert b.mpf == max(b.harmonics, key=lambda h: h.magnitude).frequency
            assert b.harmonic_count == len(b.harmonics)

    def test_harmonics_inside_band(self, corpus_features):
        for _, fs in corpus_features.values():
            for b in fs.bands:
                for h in b.harmonics:
                    assert b.f_low <= h.frequency < b.f_high
            assert all(r > 1 for r in fs.harmonic_ratios)

    def test_fixture_counts(self, corpus_features):
        for fc, fs in corpus_features.values():
            f = fc.spec.partial_frequencies
            want = {}
            for x in f:
                want[PLAN.level_of(x)] = want.get(PLAN.level_of(x), 0) + 1
            got = {k: v for k, v in fs.harmonic_counts.items() if v}
            assert got == want, fc.clip_id

    def test_attack_order(self, corpus_features):
        damped = [f.attack_peak_time for fc, f in corpus_features.values() if fc.label.damping == "damped"]
        free = [f.attack_peak_time for fc, f in corpus_features.values() if fc.label.damping == "free"]
        assert np.mean(free) < np.mean(damped)

    @pytest.mark.parametrize("scale", [0.05, None])
    def test_amplitude_scaling(self, raman_clip, raman_features, scale):
        x = raman_clip.samples
        scale = scale or 0.999 / np.abs(x).max()
        c = AudioClip(x * scale, FS, raman_clip.label)
        g = extract_features(c, clip_id="raman")
        f = raman_features
        assert g.harmonic_counts == f.harmonic_counts
        for a, b in zip(g.harmonics, f.harmonics):
            assert a.frequency == pytest.approx(b.frequency, rel=1e-9)
        assert g.mpf == pytest.approx(f.mpf, rel=1e-9)
        assert abs(g.attack_peak_time - f.attack_peak_time) <= 0.001 + 1e-9
        assert abs(g.decay_time - f.decay_time) <= 0.001 + 1e-9

    @given(hst.lists(hst.tuples(hst.integers(3, 7), hst.floats(0.3, 0.7)), min_size=1, max_size=4,
                     unique_by=lambda p: p[0]))
    @settings(max_examples=8, deadline=None)
    def test_partial_count(self, placement):
        freqs = sorted(PLAN.edges(lev)[0] * 2.0**u for lev, u in placement)
        spec = SynthStrokeSpec(freqs[0], tuple(f / freqs[0] for f in freqs), None, None, 0.003, 0.5)
        fs = extract_features(synthesize_stroke(spec, FS, seed=1))
        assert len(fs.harmonics) == len(freqs)
        for h, f in zip(fs.harmonics, freqs):
            assert h.frequency == pytest.approx(f, rel=0.005)

    def test_deterministic(self, raman_clip, raman_features):
        assert extract_features(raman_clip, clip_id="raman") == raman_features

    def test_error_context(self):
        with pytest.raises(FeatureError, match="envelope"):
            extract_features(AudioClip(np.zeros(FS // 2), FS), clip_id="quiet")


class TestAggregate:
    def test_table1_schema(self, corpus_features):
        nine = [fs for fc, fs in corpus_features.values() if fc.label.tabla_id == 1]
        assert len(nine) == 9
        rows = table1_from_features(nine)
        assert len(rows) == 5
        for row in rows:
            lev = 8 - row["subband"]
            vals = [h.frequency for fs in nine for h in fs.band(lev).harmonics]
            if len(vals) < 2:
                assert row["mean"] is None and row["sd"] is None
                continue
            m = sum(vals) / len(vals)
            sd = math.sqrt(sum((v - m) ** 2 for v in vals) / (len(vals) - 1))
            assert row["mean"] == pytest.approx(m, rel=1e-12)
            assert row["sd"] == pytest.approx(sd, rel=1e-12)
            assert (row["f_low"], row["f_high"]) == PLAN.edges(lev)


class TestConfig:
    def test_roundtrip(self):
        cfg = FeatureConfig(peaks=PeakParams(floor_db=-50), wavelet_dj=0.25)
        assert FeatureConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


class TestExport:
    def test_csv_and_json(self, raman_features, tmp_path):
        write_feature_table([raman_features], tmp_path / "f.csv")
        with open(tmp_path / "f.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == list(FEATURE_COLUMNS)
        assert len(rows) == 9 and rows[-1]["band_level"] == "global"
        assert rows[4]["harmonic_count"] == "2"
        write_feature_table([raman_features], tmp_path / "f.json", fmt="json")
        doc = json.loads((tmp_path / "f.json").read_text())
        assert doc["columns"] == list(FEATURE_COLUMNS) and len(doc["rows"]) == 9
