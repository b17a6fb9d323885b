"""Catalytic extensions of thermal operations: channels with one or more
catalysts whose local states must return, classification of the resulting
operation, and the fixed-point product-structure check.

Composite ordering is system, bath, then catalysts in declaration order.
The marginal-return constraint is checked per designated input state: the
operation classes are defined relative to the transition being implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import (
    EnergyConservingUnitary,
    ThermalOperation,
    apply,
    reversal,
)
from .config import DEFAULT_TOLS, Tolerances, ValidationError
from .divergence import fidelity, relative_entropy, von_neumann_entropy
from .linalg import (
    CompositeSpace,
    DensityMatrix,
    ptrace_matrix,
    trace_norm,
)
from .thermo import GibbsState, HamiltonianSpec, combine_hamiltonians, gibbs_state

__all__ = [
    "Catalyst",
    "CatalystSet",
    "NctoInstance",
    "NctoApplication",
    "FixedPointReport",
    "Classification",
    "apply_ncto",
    "check_fixed_point_product",
    "reversal_ncto",
    "classify",
    "recovery_chain",
]


class Catalyst(NamedTuple):
    state: DensityMatrix
    hamiltonian: HamiltonianSpec


@dataclass(frozen=True)
class CatalystSet:
    catalysts: tuple[Catalyst, ...]

    def __post_init__(self):
        for i, cat in enumerate(self.catalysts):
            if cat.state.dim != cat.hamiltonian.dim:
                raise ValidationError(
                    f"catalyst {i}: state dim {cat.state.dim} != Hamiltonian dim {cat.hamiltonian.dim}"
                )

    @property
    def n(self) -> int:
        return len(self.catalysts)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.state.dim for c in self.catalysts)

    @property
    def states(self) -> tuple[DensityMatrix, ...]:
        return tuple(c.state for c in self.catalysts)

    @property
    def hamiltonians(self) -> tuple[HamiltonianSpec, ...]:
        return tuple(c.hamiltonian for c in self.catalysts)


class NctoInstance:
    """Energy-conserving unitary on system + bath + catalysts, with the bath
    thermal and each catalyst in a declared state."""

    def __init__(
        self,
        v,
        system: HamiltonianSpec,
        bath: GibbsState,
        catalysts: CatalystSet,
        *,
        tols: Tolerances = DEFAULT_TOLS,
    ):
        self.system = system
        self.bath = bath
        self.catalysts = catalysts
        self._tols = tols
        dims = (system.dim, bath.dim) + catalysts.dims
        self.space = CompositeSpace(dims)
        total_h = combine_hamiltonians([system, bath.hamiltonian, *catalysts.hamiltonians])
        matrix = v.matrix if isinstance(v, EnergyConservingUnitary) else v
        self.v = EnergyConservingUnitary(matrix, total_h, tols=tols)

    @property
    def beta(self) -> float:
        return self.bath.beta

    @property
    def tols(self) -> Tolerances:
        return self._tols

    def tau_system(self) -> DensityMatrix:
        return gibbs_state(self.system, self.beta).state

    def input_environment(self) -> np.ndarray:
        env = self.bath.state.matrix
        for state in self.catalysts.states:
            env = np.kron(env, state.matrix)
        return env

    def to_thermal_operation(self) -> ThermalOperation:
        """The induced system channel, with catalysts folded into the environment."""
        return ThermalOperation(
            self.v.matrix,
            self.system,
            self.bath,
            extra_env=self.catalysts.states,
            extra_hamiltonians=self.catalysts.hamiltonians,
            tols=self._tols,
        )


@dataclass(frozen=True)
class NctoApplication:
    """Joint system+catalysts output, its system marginal, and the per-catalyst
    return residuals (trace norm) for the designated input."""

    sigma_sc: DensityMatrix
    sigma_s: DensityMatrix
    catalyst_residuals: tuple[float, ...]
    returns_ok: bool


def _output_full(inst: NctoInstance, rho: DensityMatrix) -> np.ndarray:
    full = np.kron(rho.matrix, inst.input_environment())
    u = inst.v.matrix
    return u @ full @ u.conj().T


def _catalyst_residuals(inst: NctoInstance, out_full: np.ndarray) -> tuple[float, ...]:
    dims = inst.space.factor_dims
    residuals = []
    for i, cat in enumerate(inst.catalysts.catalysts):
        marginal = ptrace_matrix(out_full, dims, keep=(2 + i,))
        residuals.append(trace_norm(marginal - cat.state.matrix))
    return tuple(residuals)


def apply_ncto(inst: NctoInstance, rho: DensityMatrix) -> NctoApplication:
    """Trace out the bath only, keeping system-catalyst correlations, and
    record whether each catalyst's local state returned."""
    if rho.dim != inst.system.dim:
        raise ValidationError(
            f"state dim {rho.dim} does not match system dim {inst.system.dim}"
        )
    out_full = _output_full(inst, rho)
    dims = inst.space.factor_dims
    keep_sc = (0,) + tuple(range(2, len(dims)))
    sigma_sc = DensityMatrix(ptrace_matrix(out_full, dims, keep_sc), tols=inst.tols)
    sigma_s = DensityMatrix(ptrace_matrix(out_full, dims, (0,)), tols=inst.tols)
    residuals = _catalyst_residuals(inst, out_full)
    returns_ok = all(r <= inst.tols.catalyst_return for r in residuals)
    return NctoApplication(
        sigma_sc=sigma_sc,
        sigma_s=sigma_s,
        catalyst_residuals=residuals,
        returns_ok=returns_ok,
    )


@dataclass(frozen=True)
class FixedPointReport:
    """Outcome of feeding the thermal state through the operation.

    ``status`` is "holds" when the premises (system and catalyst marginals
    all return) are met and the global output equals the input product state,
    "violated" when premises hold but the product structure fails, and
    "not_applicable" when the premises themselves fail. The bath energy shift
    and entropy gap are the intermediate quantities of the saturation
    argument and vanish whenever the premises hold.
    """

    status: str
    system_residual: float
    catalyst_residuals: tuple[float, ...]
    global_residual: float | None
    bath_energy_shift: float
    bath_entropy_gap: float

    @property
    def premises_hold(self) -> bool:
        return self.status != "not_applicable"


def check_fixed_point_product(inst: NctoInstance, *, product_tol: float = 1e-8) -> FixedPointReport:
    tau_s = inst.tau_system()
    in_full = np.kron(tau_s.matrix, inst.input_environment())
    u = inst.v.matrix
    out_full = u @ in_full @ u.conj().T
    dims = inst.space.factor_dims

    sys_residual = trace_norm(ptrace_matrix(out_full, dims, (0,)) - tau_s.matrix)
    cat_residuals = _catalyst_residuals(inst, out_full)

    bath_out = DensityMatrix(ptrace_matrix(out_full, dims, (1,)), tols=inst.tols)
    h_b = inst.bath.hamiltonian.operator.matrix
    energy_shift = float(
        np.trace(h_b @ (bath_out.matrix - inst.bath.state.matrix)).real
    )
    entropy_gap = von_neumann_entropy(bath_out) - von_neumann_entropy(inst.bath.state)

    eps = inst.tols.catalyst_return
    premises = sys_residual <= eps and all(r <= eps for r in cat_residuals)
    if not premises:
        return FixedPointReport(
            status="not_applicable",
            system_residual=sys_residual,
            catalyst_residuals=cat_residuals,
            global_residual=None,
            bath_energy_shift=energy_shift,
            bath_entropy_gap=entropy_gap,
        )
    global_residual = trace_norm(out_full - in_full)
    status = "holds" if global_residual <= product_tol else "violated"
    return FixedPointReport(
        status=status,
        system_residual=sys_residual,
        catalyst_residuals=cat_residuals,
        global_residual=global_residual,
        bath_energy_shift=energy_shift,
        bath_entropy_gap=entropy_gap,
    )


def reversal_ncto(inst: NctoInstance) -> NctoInstance:
    """Same bath and catalysts, inverse global dynamics: the recovery
    operation, in the same class as the original."""
    return NctoInstance(
        inst.v.matrix.conj().T, inst.system, inst.bath, inst.catalysts, tols=inst.tols
    )


@dataclass(frozen=True)
class Classification:
    """Which operation classes the instance realizes for a designated input."""

    is_cto: bool
    is_ccto: bool
    is_ncto: bool
    system_catalyst_correlation: float
    catalyst_cross_correlation: float


def classify(inst: NctoInstance, rho: DensityMatrix) -> Classification:
    result = apply_ncto(inst, rho)
    eps = inst.tols.catalyst_return
    if inst.catalysts.n == 0:
        return Classification(
            is_cto=False,
            is_ccto=True,
            is_ncto=True,
            system_catalyst_correlation=0.0,
            catalyst_cross_correlation=0.0,
        )
    dims_sc = (inst.system.dim,) + inst.catalysts.dims
    sc = result.sigma_sc.matrix
    sigma_c = ptrace_matrix(sc, dims_sc, keep=tuple(range(1, len(dims_sc))))
    sc_product = np.kron(result.sigma_s.matrix, sigma_c)
    sys_cat_corr = trace_norm(sc - sc_product)
    eta_product = np.eye(1, dtype=complex)
    for state in inst.catalysts.states:
        eta_product = np.kron(eta_product, state.matrix)
    cat_cross = trace_norm(sigma_c - eta_product) if inst.catalysts.n else 0.0
    is_ncto = result.returns_ok
    is_ccto = is_ncto and sys_cat_corr <= eps
    is_cto = is_ccto and inst.catalysts.n == 1
    return Classification(
        is_cto=is_cto,
        is_ccto=is_ccto,
        is_ncto=is_ncto,
        system_catalyst_correlation=sys_cat_corr,
        catalyst_cross_correlation=cat_cross,
    )


@dataclass(frozen=True)
class RecoveryChain:
    delta: float
    d_recovery: float
    neg_log_fidelity: float
    chain_ok: bool


def recovery_chain(inst: NctoInstance, rho: DensityMatrix, *, slack: float = 1e-10) -> RecoveryChain:
    """Evaluate the relative-entropy difference against the recovery-map chain
    for the supplied input and the channel's own output."""
    to = inst.to_thermal_operation()
    sigma = apply(to, rho)
    recovered = apply(reversal(to), sigma)
    tau = inst.tau_system()
    d_rho = relative_entropy(rho, tau)
    d_sigma = relative_entropy(sigma, tau)
    if not (d_rho.finite and d_sigma.finite):
        raise ValidationError("support violation against the thermal state")
    dlt = d_rho.value - d_sigma.value
    d_rec = relative_entropy(rho, recovered).value
    nlf = -math.log(fidelity(rho, recovered).squared)
    ok = dlt >= d_rec - slack and d_rec >= nlf - slack
    return RecoveryChain(delta=dlt, d_recovery=d_rec, neg_log_fidelity=nlf, chain_ok=ok)
