"""
Octave sub-band decomposition of a synthetic stroke
===================================================

"""

# a five-partial stroke at 200 Hz, the default synthetic model
import numpy as np
from tablawave import SynthStrokeSpec, StrokeLabel, synthesize_stroke
clip = synthesize_stroke(SynthStrokeSpec(200.0), 44100, seed=0, label=StrokeLabel("Ta/Na"))

# split it into eight octave bands; level 1 is the highest
from tablawave import decompose, reconstruct
from tablawave.subband import band_energy
d = decompose(clip)
total = sum(band_energy(d, lev) for lev in range(1, 9))
for lev, lo, hi in d.plan.levels:
    share = band_energy(d, lev) / total
    print(f"L{lev}  [{lo:7.0f}, {hi:7.0f}) Hz  coefficients {d.coefficient_counts[lev]:6d}  energy {share:6.1%}")

# the coefficient series alone are enough to rebuild the clip
y = reconstruct(d).samples
snr = 10 * np.log10(np.sum(clip.samples**2) / np.sum((clip.samples - y) ** 2))
print(f"reconstruction SNR {snr:.1f} dB")
