"""Linearized cavity optomechanics of a levitated particle moving in two dimensions.

Submodules
----------
model      parameter sets, decoherence rates, thermal occupations
langevin   drift matrix, eigenmodes, dispersion and avoided crossings
spectra    output, heterodyne and mechanical spectra; occupations
analysis   Lorentzian fits, dispersion points, pressure law
oracle     classical time-domain integrator and Welch PSD
presets    parameter sets of the experimental operating points
cli        the ``polaritron`` command
"""

__version__ = "0.1.0"

from .model import EnvironmentSpec, PhysicalParams  # noqa: E402,F401
