"""Thermal operations, recovery maps, and work bounds for finite-dimensional
quantum thermodynamics, with dense-matrix verification of the central
identities and inequalities."""

from .channel import (
    EnergyConservingUnitary,
    QuadratureSpec,
    Superoperator,
    ThermalOperation,
    adjoint,
    apply,
    is_gibbs_preserving,
    petz_recovery,
    reversal,
    rotated_recovery_average,
    sample_energy_conserving_unitary,
    to_superoperator,
)
from .config import DEFAULT_TOLS, DomainError, NumericsError, Tolerances, ValidationError
from .divergence import (
    AlphaFamilySpec,
    DivergenceResult,
    Fidelity,
    fidelity,
    relative_entropy,
    renyi_divergence,
    von_neumann_entropy,
)
from .linalg import (
    CompositeSpace,
    DensityMatrix,
    HermitianOperator,
    conjugate,
    matrix_function,
    partial_trace,
    random_density,
    tensor,
)
from .thermo import (
    GibbsState,
    HamiltonianSpec,
    WitBattery,
    augment_with_wit,
    combine_hamiltonians,
    free_energy,
    gibbs_state,
)
from .workbounds import (
    AlphaGrid,
    NanoBound,
    WorkReport,
    delta,
    nano_gain_bound,
    nano_invest_bound,
    recovery_gain_bound,
    recovery_invest_bound,
    work_report,
)

__version__ = "0.1.0"
