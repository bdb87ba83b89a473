"""Entropy production by floating thermoelectric probes on a biased tight-binding wire."""

__version__ = "0.1.0"
