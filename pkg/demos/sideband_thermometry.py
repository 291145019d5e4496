"""Sideband-asymmetry thermometry at the high-vacuum operating points.

The inferred occupation is compared with the occupation of the X axis
obtained by integrating the mechanical spectrum.

Run: python demos/sideband_thermometry.py
"""

import warnings

from polaritron import presets
from polaritron.analysis import DegenerateFitWarning
from polaritron.constants import to_khz
from polaritron.spectra import occupation, sideband_asymmetry

warnings.simplefilter("ignore", DegenerateFitWarning)
for delta_khz, n_peaks in ((-170.0, 2), (-100.0, 3)):
    p = presets.high_vacuum(delta_khz)
    res = sideband_asymmetry(p, n_peaks=n_peaks)
    fit = res.high_fit
    print(f"-delta = {-delta_khz:.0f} kHz: sideband ratio {res.ratio:.3f}, inferred n {res.inferred_n:.2f}"
          f"{' (unreliable fit)' if res.unreliable else ''}")
    print(f"  fitted peaks/kHz: {', '.join(f'{c:.1f}' for c in to_khz(fit.centers))}")
    print(f"  X-axis occupation from the spectrum: {occupation(p, 0.0):.2f}")
