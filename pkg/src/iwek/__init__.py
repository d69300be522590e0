"""Estimate database knob-configuration performance without executing it.

The package ranks knobs by importance, fits interpretable rule-based
estimators over knob-performance samples, and transfers stored tuning
experiences to new workloads matched by query fingerprints.
"""

__version__ = "0.1.0"
