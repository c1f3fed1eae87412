"""Random artificial gauge-field quantum walks.

Exact and Monte Carlo mean dynamics of a one-dimensional discrete-time
quantum walk whose coin angles fluctuate randomly in time.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    ContractViolation,
    CrossCheckError,
    DegeneracyError,
    DomainError,
    NumericalValidityError,
    RGWalkError,
    SingularParameterError,
    ValidityWarning,
    WrapAroundWarning,
)
from .lattice import CircleGrid, ComplexSequence, dft_forward, dft_inverse  # noqa: E402
from .walk import CoinAngles, SpinorField, coin_matrix, evolve_wavefunction, step_wavefunction  # noqa: E402
from .density import DensityField, FourierModeVector, default_initial_density, density_from_pure  # noqa: E402
from .noise import NoiseConfig, averaged_r, evolve_averaged, moment_series, monte_carlo_average  # noqa: E402
from .asymptotics import alpha, diffusion, diffusion_e, diffusion_g, oracle_table  # noqa: E402

__all__ = [
    "__version__",
    "RGWalkError", "ConfigurationError", "ContractViolation", "CrossCheckError", "DegeneracyError",
    "DomainError", "NumericalValidityError", "SingularParameterError", "ValidityWarning",
    "WrapAroundWarning",
    "CircleGrid", "ComplexSequence", "dft_forward", "dft_inverse",
    "CoinAngles", "SpinorField", "coin_matrix", "evolve_wavefunction", "step_wavefunction",
    "DensityField", "FourierModeVector", "default_initial_density", "density_from_pure",
    "NoiseConfig", "averaged_r", "evolve_averaged", "moment_series", "monte_carlo_average",
    "alpha", "diffusion", "diffusion_e", "diffusion_g", "oracle_table",
]
