"""FFT-based Stokes flow and solute transport in periodic porous unit cells.

The package computes periodic velocity and excess-concentration fields on
structured unit-cell grids with an immersed solid phase, and assembles the
effective permeability and diffusivity tensors of the medium.  Flow uses an
augmented-Lagrangian splitting solved mode-by-mode in Fourier space;
transport uses a comparison-medium iteration with spectral or
central-difference derivative symbols.
"""

from .backends import HAVE_FUSED, default_backend_name
from .effective import EffectiveTensors, diffusivity, permeability, pore_average
from .grid import (
    IndicatorField,
    UnitCellGrid,
    load_indicator_raster,
    make_model_geometry,
    porosity,
    write_indicator,
)
from .oracle import OracleError, dense_operators, oracle_stokes, oracle_transport
from .report import ConvergenceReport
from .spectral import (
    CENTRAL,
    EXACT,
    SpectralSymbols,
    apply_laplacian,
    div,
    fft,
    grad,
    gradient_field,
    ifft,
    make_symbols,
)
from .stokes import (
    AdmmState,
    PenaltyParams,
    StokesConfig,
    adapt_penalties,
    residuals_and_tolerances,
    solve_stokes,
    step1_velocity_solve,
    step2_aux_update,
    step3_multiplier_update,
)
from .transport import (
    MediumCoefficients,
    TransportConfig,
    TransportState,
    build_coefficients,
    residual_rhs,
    solve_transport,
    update_concentration,
)

__version__ = "0.1.0"

__all__ = [
    "AdmmState",
    "CENTRAL",
    "ConvergenceReport",
    "EXACT",
    "EffectiveTensors",
    "HAVE_FUSED",
    "IndicatorField",
    "MediumCoefficients",
    "OracleError",
    "PenaltyParams",
    "SpectralSymbols",
    "StokesConfig",
    "TransportConfig",
    "TransportState",
    "UnitCellGrid",
    "adapt_penalties",
    "apply_laplacian",
    "build_coefficients",
    "default_backend_name",
    "dense_operators",
    "diffusivity",
    "div",
    "fft",
    "grad",
    "gradient_field",
    "ifft",
    "load_indicator_raster",
    "make_model_geometry",
    "make_symbols",
    "oracle_stokes",
    "oracle_transport",
    "permeability",
    "pore_average",
    "porosity",
    "residual_rhs",
    "residuals_and_tolerances",
    "solve_stokes",
    "solve_transport",
    "step1_velocity_solve",
    "step2_aux_update",
    "step3_multiplier_update",
    "update_concentration",
    "write_indicator",
]
