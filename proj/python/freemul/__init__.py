"""Free multiplicative convolution powers of measures on the half-line and the circle."""

import json

from ._freemul import (
    FreemulError,
    Measure,
    eta,
    psi,
    semigroup,
    semigroup_moments,
    subordination,
)
from ._freemul import verify as _verify

__all__ = [
    "FreemulError",
    "Measure",
    "eta",
    "psi",
    "semigroup",
    "semigroup_moments",
    "subordination",
    "verify",
]


def verify(measure, t, inject_gap=False, threads=1):
    """Run the regularity checks on mu_t; returns (passed, report dict)."""
    passed, text = _verify(measure, t, inject_gap=inject_gap, threads=threads)
    return passed, json.loads(text)
