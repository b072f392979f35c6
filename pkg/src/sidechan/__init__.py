"""Side-channel leakage analysis for four-diode BB84 transmitters."""

__version__ = "0.1.0"
