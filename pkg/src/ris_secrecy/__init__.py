"""Joint precoder and phase-shift design for secrecy over a lossy RIS."""

__version__ = "0.1.0"
