"""Spatiotemporal tube toolkit: online tube synthesis, funnel control and
probabilistic verification for reach-avoid-stay tasks among moving
Gaussian-uncertain obstacles."""

__version__ = "0.1.0"
