"""Offline visualization for spatiotemporal-tube trajectory logs.

Reads the simulator's log (JSON-lines) and scenario (YAML) files directly;
no simulator code is imported, and avoidance probabilities are recomputed
locally, which doubles as an independent cross-check of the exported
values.  Everything here is read-only with respect to its inputs.
"""

__version__ = "0.1.0"
