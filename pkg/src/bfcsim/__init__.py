"""Beamforming-cancellation designs for mmWave full-duplex with hybrid beamforming."""

__version__ = "0.1.0"
