"""Frequency-hopping joint radar-communications simulator."""

__version__ = "0.1.0"
