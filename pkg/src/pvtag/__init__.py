"""Simulator and engineering library for PV-assisted backscatter RFID tags."""

__version__ = "0.1.0"
