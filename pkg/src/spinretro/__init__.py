"""Spin-measurement retrodiction: states, protocols, constructions and gate networks."""

from .protocol import (
    LookupTable,
    ProjectiveMeasurement,
    RetrodictionProtocol,
    derive_table,
    enumerate_outcomes,
    run_trials,
    verify_protocol,
)

__version__ = "0.1.0"

__all__ = [
    "LookupTable",
    "ProjectiveMeasurement",
    "RetrodictionProtocol",
    "derive_table",
    "enumerate_outcomes",
    "run_trials",
    "verify_protocol",
]
