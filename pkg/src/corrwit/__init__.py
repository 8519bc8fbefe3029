"""
corrwit - quadratic correlation witnesses on isospectral orbits.

Builds the projector A for separable, bosonic, Slater and fermionic Gaussian
states, evaluates f(ρ) = tr((ρ⊗ρ)(A − P^asym)) and estimates how much of an
isospectral orbit the witness flags.
"""

from corrwit.data_structures import (
    ClassKind,
    ClosedFormRow,
    DensityMatrix,
    FractionEstimate,
    OrbitParameters,
    Spectrum,
    StateClass,
    TwoFermionSchmidt,
    WitnessReport,
)
from corrwit.errors import (
    CorrwitError,
    NumericError,
    ParameterError,
    ParseError,
    ResourceCapError,
    SelftestFailure,
    ValidationError,
)
from corrwit.estimation import (
    closed_form_parameters,
    concentration_bound,
    estimate_fraction,
    numeric_X,
    orbit_mean_f,
    orbit_parameters,
    purity_sweep,
)
from corrwit.operators import ProjectorA, build_A, build_V
from corrwit.spaces import dim_space
from corrwit.witness import bilinear_witness, linear_witness, pure_membership, witness_value

__version__ = "0.1.0"
