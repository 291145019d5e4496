"""Eigenfrequency branches over the red-detuned sweep, with both avoided crossings.

Run: python demos/dispersion_two_crossings.py
"""

import numpy as np

from polaritron import presets
from polaritron.constants import khz, to_khz
from polaritron.langevin import avoided_crossings, dispersion

p = presets.two_crossing()
detunings = -khz(np.linspace(260.0, 60.0, 201))[::-1]
curve = dispersion(p, detunings)

for c in avoided_crossings(curve):
    print(f"{c.mode.upper()} crossing near -delta = {to_khz(-c.detuning):6.1f} kHz, "
          f"gap {to_khz(c.gap):5.1f} kHz")

f, w, comp, _ = curve.sorted_levels()
print("\n-delta/kHz   branch frequencies/kHz          photonic weight")
for i in range(0, detunings.size, 20):
    freqs = "  ".join(f"{x:7.2f}" for x in to_khz(f[i]))
    phot = "  ".join(f"{x:4.2f}" for x in comp[i, :, 0])
    print(f"{to_khz(-detunings[i]):8.1f}   {freqs}    {phot}")
