"""Neural detector for sub-pulse lines in time-frequency images.

Trains a small single-stage grid detector on datasets produced by the
signal-simulator's dataset generator and serves predictions over a
newline-delimited subprocess protocol, so the simulator can swap it in for
its built-in classical detector.
"""

__version__ = "0.1.0"
