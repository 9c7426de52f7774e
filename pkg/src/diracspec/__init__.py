"""Numerical spectral diagnostics for half-line Dirac systems whose
potentials grow without bound at infinity."""

from .coefficients import (  # noqa: F401
    ChannelSystem,
    CoefficientFunction,
    CoefficientModel,
    ConstantChannel,
    DomainError,
    assemble_channel,
    coefficient,
    constant,
    eval_model,
    model_from_dict,
    model_to_dict,
    power,
)

__version__ = "0.1.0"
