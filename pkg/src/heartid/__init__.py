"""Radar heartbeat biometrics: feature extraction, SVM identification, and a
synthetic FMCW vital-sign cohort for desk-scale experiments."""

__version__ = "0.1.0"
