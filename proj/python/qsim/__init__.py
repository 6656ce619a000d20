"""Photon-statistics simulation toolkit: resonance-fluorescence photon
streams, phase-modulation sidebands, HBT/HOM correlation analysis."""

from ._qsim import *  # noqa: F401,F403
