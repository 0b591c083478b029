"""Density functional theory of a hard-sphere fluid in a ball.

The package computes self-consistent density profiles of a hard-sphere
fluid with an attractive pair potential confined to a spherical
container, locates the gas-liquid and vapor-drop phase transitions, and
evaluates the analytic existence, uniqueness, and stability criteria
that go with the fixed-point formulation.
"""

__version__ = "0.1.0"

from hardball import (  # noqa: E402,F401
    eos,
    field,
    functionals,
    kernels,
    phase,
    spectral,
    uniform,
)

__all__ = [
    "eos",
    "kernels",
    "uniform",
    "field",
    "functionals",
    "spectral",
    "phase",
    "__version__",
]
