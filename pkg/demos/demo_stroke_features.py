"""
Per-band stroke descriptors
===========================

"""

# one damped and one free stroke from the shipped fixture corpus
from tablawave import extract_features, synthesize_stroke
from tablawave.pipeline import fixture_corpus
clips = {fc.clip_id: fc for fc in fixture_corpus()}

for clip_id in ("t1_ta-na", "t1_ge"):
    fc = clips[clip_id]
    fs = extract_features(synthesize_stroke(fc.spec, 44100, fc.seed, fc.label), clip_id=clip_id)
    print(f"{clip_id} ({fc.label.damping})")
    # harmonic count and most prominent frequency per band
    for b in fs.bands:
        if b.harmonics:
            print(f"  L{b.level}: {b.harmonic_count} peaks, MPF {b.mpf:.1f} Hz, "
                  f"energy duration {b.energy_duration * 1e3:.0f} ms")
    # envelope timings and the ratios of consecutive partials
    print(f"  attack {fs.attack_peak_time * 1e3:.1f} ms, decay {fs.decay_time * 1e3:.0f} ms, "
          f"MPF at {fs.mpf_time * 1e3:.1f} ms")
    print("  ratios", [round(r, 3) for r in fs.harmonic_ratios])
