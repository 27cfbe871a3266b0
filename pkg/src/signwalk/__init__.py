"""Random walks on sign hypercubes of Bernoulli matrix ensembles.

The package simulates lazy single-sign-flip walks over three families of
scaled +-1 matrices, follows the induced stochastic motion of their
eigenvalues, and verifies the resulting drift/diffusion coefficients, mixing
behaviour and stationary spectral laws against closed-form references and a
brute-force oracle on tiny hypercubes.
"""

from .ensemble import (EnsembleKind, ScaledMatrix, SignVector, dimension,
                       flip_delta, imaginary_antisymmetric, real_symmetric,
                       realize, rectangular)

__version__ = "0.1.0"

__all__ = [
    "EnsembleKind", "ScaledMatrix", "SignVector", "dimension", "flip_delta",
    "imaginary_antisymmetric", "real_symmetric", "realize", "rectangular",
    "__version__",
]
