"""
Exact symbolic phase-space calculus, Grassmann dequantisation, and grid
Wigner-function dynamics.
"""

from .symbolic import CRational, DimensionMismatch, PolySymbol, SymplecticForm, VariableId
from .parser import PolyParseError, parse_poly
from .grassmann import GrassmannElement, berezin_integrate, grassmann_shift_eval
from .moyal import (
    DequantReport,
    ExtendedHamiltonian,
    bidifferential_power,
    classical_extended_hamiltonian,
    dequantise,
    lambda_to_operator,
    marinov_hamiltonian,
    moyal_bracket,
    poisson_bracket,
    star_product,
)
from .wigner import (
    GridSymbol,
    OperatorMatrix,
    SpatialGrid,
    StateVector,
    grid_liouville_rhs,
    grid_moyal_rhs,
    grid_star,
    observables,
    weyl_quantize,
    weyl_symbol,
    wigner_of_state,
)
from .dynamics import EvolutionConfig, Trajectory, propagate, rk4_step
from .oracle import SplitHamiltonian, oracle_wigner_trajectory, split_operator_step

__version__ = "0.1.0"
