import numpy as np
import pytest

from tablawave.audio_io import AudioClip, StrokeLabel, SynthStrokeSpec, synthesize_stroke

FS = 44100


def tone(freq, duration=1.0, amp=0.5, fs=FS, phase=0.0):
    t = np.arange(int(round(duration * fs))) / fs
    return AudioClip(amp * np.sin(2 * np.pi * freq * t + phase), fs)


@pytest.fixture(scope="session")
def raman_clip():
    return synthesize_stroke(SynthStrokeSpec(200.0), FS, seed=0, label=StrokeLabel("Ta/Na"))


@pytest.fixture(scope="session")
def raman_features(raman_clip):
    from tablawave.features import extract_features

    return extract_features(raman_clip, clip_id="raman")


@pytest.fixture(scope="session")
def corpus_features():
    """Feature sets of the 45-clip fixture corpus, keyed by clip id."""
    from tablawave.features import extract_features
    from tablawave.pipeline import fixture_corpus

    out = {}
    for fc in fixture_corpus():
        clip = synthesize_stroke(fc.spec, FS, fc.seed, fc.label)
        out[fc.clip_id] = (fc, extract_features(clip, clip_id=fc.clip_id))
    return out
