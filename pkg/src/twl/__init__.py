"""Numerical laboratory for Berezin-Toeplitz spectral asymptotics on the
unit sphere over ``CP^d``, with and without a Hamiltonian circle action."""

from .asymptotics import WeylLaw, gamma_integral, hessian_suite, weyl_parameters
from .dynamics import flow, lie_identities_check, pullback_check
from .exceptions import (
    ConfigError,
    IncompleteSpectrumError,
    NumericalFailure,
    PreconditionError,
    TWLError,
)
from .spectral import (
    PowerLawFit,
    ToeplitzSpectrum,
    compute_spectrum,
    counting,
    good_cutoff,
    smoothed_kernel,
    smoothed_trace,
)
from .symbols import parse_symbol
from .toeplitz import assemble_block

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "IncompleteSpectrumError", "NumericalFailure", "PowerLawFit",
    "PreconditionError", "TWLError", "ToeplitzSpectrum", "WeylLaw", "assemble_block",
    "compute_spectrum", "counting", "flow", "gamma_integral", "good_cutoff", "hessian_suite",
    "lie_identities_check", "parse_symbol", "pullback_check", "smoothed_kernel",
    "smoothed_trace", "weyl_parameters",
]
