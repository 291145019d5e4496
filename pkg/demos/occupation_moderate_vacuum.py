"""Axis occupations and the coldest in-plane direction at 6 mPa.

Run: python demos/occupation_moderate_vacuum.py
"""

import math

from polaritron import presets
from polaritron.spectra import coldest_angle

print("-delta/kHz      n_x       n_y   theta_min/deg   n(theta_min)")
for d in (-260.0, -210.0, -160.0, -140.0, -120.0, -100.0, -80.0, -60.0):
    c = coldest_angle(presets.moderate_vacuum(d))
    print(f"{-d:8.0f}  {c.n_x:9.1f} {c.n_y:9.1f}   {math.degrees(c.theta):10.2f}   "
          f"{c.occupation:10.1f}")
