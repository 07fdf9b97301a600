"""Optimized dynamical decoupling toolkit.

Constructs UDD and nested QDD pulse sequences, evaluates the ordered
switching-function integrals behind their suppression properties in closed
form, assembles Magnus effective Hamiltonians for switched qubit-bath models,
and runs the scaling experiments that verify decoherence suppression orders
numerically.
"""

from .sequence import (
    Pulse,
    PulseAxis,
    PulseSequence,
    SwitchingFunction,
    qdd_sequence,
    switching_function,
    udd_times,
)

__all__ = [
    "Pulse",
    "PulseAxis",
    "PulseSequence",
    "SwitchingFunction",
    "qdd_sequence",
    "switching_function",
    "udd_times",
]

__version__ = "0.1.0"
