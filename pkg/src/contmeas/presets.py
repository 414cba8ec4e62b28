"""Built-in 2x2 example models used across the tests and the self test.

decoupled: pure Brownian signal with drift, no system coupling.
informationless_jumps: unit-rate Poisson signal whose jumps act trivially.
diffusive_qubit: damped qubit watched through homodyne-style diffusion.
counting_qubit: damped qubit watched through direct jump counting.
"""

from __future__ import annotations

import numpy as np

from .model import MeasurementModel, validate_model
from .operators import pauli


def _zeros() -> np.ndarray:
    return np.zeros((2, 2), dtype=complex)


def decoupled() -> MeasurementModel:
    return validate_model(
        {
            "dim": 2,
            "H": _zeros(),
            "Ls": [],
            "R": _zeros(),
            "c": 1.0,
            "r": 1.0,
            "b": 1.0,
            "channels": [],
        }
    )


def informationless_jumps() -> MeasurementModel:
    return validate_model(
        {
            "dim": 2,
            "H": _zeros(),
            "Ls": [],
            "R": _zeros(),
            "c": 0.0,
            "r": 0.0,
            "b": 1.0,
            "channels": [
                {"z": 1.0, "n": 1, "nu": 1.0, "V": np.eye(2, dtype=complex)}
            ],
        }
    )


def diffusive_qubit() -> MeasurementModel:
    return validate_model(
        {
            "dim": 2,
            "H": 0.5 * pauli("z"),
            "Ls": [],
            "R": pauli("minus"),
            "c": 0.0,
            "r": 1.0,
            "b": 1.0,
            "channels": [],
        }
    )


def counting_qubit() -> MeasurementModel:
    return validate_model(
        {
            "dim": 2,
            "H": _zeros(),
            "Ls": [],
            "R": _zeros(),
            "c": 0.0,
            "r": 0.0,
            "b": 1.0,
            "channels": [{"z": 1.0, "n": 1, "nu": 1.0, "V": pauli("minus")}],
        }
    )


PRESETS = {
    "decoupled": decoupled,
    "informationless-jumps": informationless_jumps,
    "diffusive-qubit": diffusive_qubit,
    "counting-qubit": counting_qubit,
}


def load_preset(name: str) -> MeasurementModel:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
