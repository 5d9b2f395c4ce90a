"""Numerical laboratory for discrete-time quantum walks in a homogeneous
electric field: exact dynamics, continued-fraction revival certificates,
band structure, and high-precision Anderson-localization analysis."""

__version__ = "0.1.0"

from .errors import (
    BudgetExhaustedError,
    ElectricWalkError,
    NoDecayError,
    PrecisionExhaustedError,
    SupportOverflowError,
)
from .walkcore import (
    Coin,
    FieldSpec,
    ObservableSeries,
    WalkState,
    evolve,
    position_moments,
    return_probability,
    revival_deficiency,
    revival_parameters,
    step,
)
from .diophantine import (
    ContinuedFraction,
    HierarchicalSpec,
    RevivalCertificate,
    approximation_quality,
    construct_hierarchical_field,
    convergents,
    deviation_bound,
    expand,
    revival_schedule,
)
from .spectral import (
    bloch_matrix,
    dispersion,
    regrouped_bloch,
    revival_norm,
    trace_tau_closed,
    trace_tau_direct,
)
from .localization import (
    EigenProfile,
    PrecisionConfig,
    localization_length,
    random_field_survey,
    ring_diagonalize,
    symmetric_omega_turns,
    symmetry_family,
    transfer_iterate,
)
