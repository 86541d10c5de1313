"""Zak-OTFS link simulator with interleaved-pilot channel acquisition."""

from .dd_core import DDFilter, DDSignal, GridParams, extend, point_pulse, twisted_convolve, twisted_convolve_filters

__version__ = "0.1.0"
