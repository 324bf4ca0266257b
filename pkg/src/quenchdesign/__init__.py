"""Unitary designs from random-Hamiltonian quench protocols.

Exact-diagonalisation numerics for frame potentials of quenched ensembles
(GUE, SYK variants, Richardson), random-matrix predictions, small-d Haar
oracles and Thouless-time detection.
"""
__version__ = "0.1.0"

from .errors import (CapacityError, ConfigurationError, NumericalError, ParameterError,
                     QuenchDesignError, StatisticsError)

__all__ = ["CapacityError", "ConfigurationError", "NumericalError", "ParameterError",
           "QuenchDesignError", "StatisticsError", "__version__"]
