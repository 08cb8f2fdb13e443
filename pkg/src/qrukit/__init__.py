"""Frequency-domain analysis of data re-uploading quantum circuits.

Statevector and harmonic simulation, spectrum kernels and their
convolutions, Dirichlet models of frequency weights, gradient-variance
witnesses and Lipschitz bounds.
"""

from .algebra import Generator, build_generator, haar_unitary
from .harmonic import FrequencyProfile, HarmonicState, measure_fourier, simulate_harmonic
from .model import GateStep, QruModel, gradient, hypothesis, value_and_gradient
from .spectrum import SpectrumKernel, extract_kernel, power_convolve

__version__ = "0.1.0"

__all__ = [
    "FrequencyProfile",
    "GateStep",
    "Generator",
    "HarmonicState",
    "QruModel",
    "SpectrumKernel",
    "build_generator",
    "extract_kernel",
    "gradient",
    "haar_unitary",
    "hypothesis",
    "measure_fourier",
    "power_convolve",
    "simulate_harmonic",
    "value_and_gradient",
]
