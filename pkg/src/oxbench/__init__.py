"""Offline benchmark harness for action-prediction models on robot trajectories."""

__version__ = "0.1.0"

PROTOCOL_VERSION = 1
