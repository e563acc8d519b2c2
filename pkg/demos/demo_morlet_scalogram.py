"""
Morlet scalogram of a stroke
============================

"""

# synthesize a stroke and transform it over 110 Hz to 3.5 kHz
import numpy as np
from tablawave import SynthStrokeSpec, synthesize_stroke
from tablawave.cwt import (WaveletSpec, cwt_transform, global_wavelet_spectrum, peak_frequency,
                           check_admissibility, compute_moments)
clip = synthesize_stroke(SynthStrokeSpec(200.0), 44100, seed=0)
scal = cwt_transform(clip, WaveletSpec.for_band(3520.0, 110.0, dj=1 / 16))
print(f"{scal.scales.size} scales, {scal.power.shape[1]} time steps")

# time-averaged power outside the cone of influence
f, p = global_wavelet_spectrum(scal)
print(f"global spectrum peak at {peak_frequency(f, p):.1f} Hz")

# local maxima of the global spectrum mark the partials
i = np.flatnonzero((p[1:-1] > p[:-2]) & (p[1:-1] > p[2:])) + 1
print("spectral peaks (Hz):", np.round(np.sort(f[i]), 1))

# the Morlet mother wavelet is only approximately admissible
ok, psi0 = check_admissibility(WaveletSpec())
m, vanishing = compute_moments(WaveletSpec(), 3)
print(f"|Psi(0)| = {psi0:.2e}  admissible: {ok}")
print("moments M0..M3:", np.round(m, 12), vanishing)
