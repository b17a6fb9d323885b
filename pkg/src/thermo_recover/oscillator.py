"""Two-level system coupled to a truncated harmonic-oscillator bath: the
explicit mixing unitary, the erasure transition it realizes, and the
closed-form recovery populations and work-investment bound.

Energies are in units of the system gap (E_S = 1 = the oscillator quantum),
so the only physical parameters are beta * E_S and the target ground
population p0. The bath ladder is truncated at ``n_max`` with the top energy
level left untouched by the unitary, which keeps it exactly unitary and
energy conserving on the truncated space; the Gibbs tail mass beyond the
truncation is required to be below tolerance, so every truncation effect on
populations stays below it as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import EnergyConservingUnitary, ThermalOperation, apply, reversal
from .config import DEFAULT_TOLS, NumericsError, Tolerances, ValidationError
from .divergence import fidelity
from .linalg import CompositeSpace, DensityMatrix, basis_projector
from .thermo import HamiltonianSpec, gibbs_state

__all__ = [
    "OscillatorInstance",
    "build_unitary",
    "thermal_operation",
    "forward_state",
    "reversal_populations",
    "invest_bound",
    "population_residual",
]


def _auto_n_max(beta_e: float, tail_tol: float) -> int:
    # tail mass: exp(-(n+1) beta_e) / (1 - exp(-beta_e)) <= tail_tol
    x = math.exp(-beta_e)
    needed = math.ceil(-math.log(tail_tol * (1.0 - x)) / beta_e - 1.0)
    return max(needed, 1)


@dataclass(frozen=True)
class OscillatorInstance:
    """Validated parameter set: gap-scaled inverse temperature, target ground
    population, bath truncation level, and the derived mixing parameter."""

    beta_e: float
    p0: float
    n_max: int

    @classmethod
    def create(
        cls,
        beta_e: float,
        p0: float,
        n_max: int | None = None,
        *,
        tols: Tolerances = DEFAULT_TOLS,
    ) -> "OscillatorInstance":
        beta_e = float(beta_e)
        if not math.isfinite(beta_e) or beta_e <= 0:
            raise ValidationError(f"beta_e must be finite and > 0, got {beta_e}")
        p0 = float(p0)
        lower = 1.0 - math.exp(-beta_e)
        if not (lower - 1e-12 <= p0 <= 1.0 + 1e-12):
            raise ValidationError(
                f"p0 = {p0} outside the admissible interval [{lower}, 1]"
            )
        p0 = min(max(p0, lower), 1.0)
        auto = _auto_n_max(beta_e, tols.truncation)
        if n_max is None:
            n_max = auto
        elif n_max < auto:
            raise ValidationError(
                f"n_max = {n_max} leaves tail mass above {tols.truncation}; need >= {auto}"
            )
        return cls(beta_e=beta_e, p0=p0, n_max=int(n_max))

    @property
    def z_bath(self) -> float:
        """Partition function of the untruncated oscillator ladder."""
        return 1.0 / (1.0 - math.exp(-self.beta_e))

    @property
    def b(self) -> float:
        """Mixing parameter reproducing p0, from inverting the forward populations."""
        zb = self.z_bath
        b = (self.p0 * zb - 1.0) / (zb - 1.0)
        if not (-1e-12 <= b <= 1.0 + 1e-12):
            raise NumericsError(f"mixing parameter {b} escaped [0, 1]")
        return min(max(b, 0.0), 1.0)

    @property
    def tail(self) -> float:
        return math.exp(-(self.n_max + 1) * self.beta_e) / (1.0 - math.exp(-self.beta_e))


def system_hamiltonian(inst: OscillatorInstance) -> HamiltonianSpec:
    return _system_h()


def bath_hamiltonian(inst: OscillatorInstance) -> HamiltonianSpec:
    return _bath_h(inst.n_max)


@lru_cache(maxsize=None)
def _system_h() -> HamiltonianSpec:
    return HamiltonianSpec.from_diagonal([0.0, 1.0])


@lru_cache(maxsize=64)
def _bath_h(n_max: int) -> HamiltonianSpec:
    return HamiltonianSpec.from_diagonal(np.arange(n_max + 1, dtype=float))


def build_unitary(inst: OscillatorInstance) -> EnergyConservingUnitary:
    """Block unitary mixing |0, n> with |1, n-1| at angle set by sqrt(b).

    Each 2x2 energy block is [[sqrt(b), sqrt(1-b)], [sqrt(1-b), -sqrt(b)]],
    so the unitary is Hermitian and squares to the identity. The lone ground
    block |0, 0> and the dangling top state |1, n_max> are fixed.
    """
    nb = inst.n_max + 1
    space = CompositeSpace((2, nb))
    u = np.zeros((2 * nb, 2 * nb), dtype=complex)
    sb = math.sqrt(inst.b)
    s1b = math.sqrt(1.0 - inst.b)
    u[space.index((0, 0)), space.index((0, 0))] = 1.0
    for n in range(1, nb):
        i = space.index((0, n))
        j = space.index((1, n - 1))
        u[i, i] = sb
        u[i, j] = s1b
        u[j, i] = s1b
        u[j, j] = -sb
    top = space.index((1, inst.n_max))
    u[top, top] = 1.0
    total_h = HamiltonianSpec.from_diagonal(
        np.add.outer(np.array([0.0, 1.0]), np.arange(nb, dtype=float)).reshape(-1)
    )
    return EnergyConservingUnitary(u, total_h)


def thermal_operation(inst: OscillatorInstance) -> ThermalOperation:
    bath = gibbs_state(bath_hamiltonian(inst), inst.beta_e)
    return ThermalOperation(build_unitary(inst), system_hamiltonian(inst), bath)


def forward_state(inst: OscillatorInstance) -> DensityMatrix:
    """Channel output on the ground state; matches diag(p0, 1 - p0) by design."""
    out = apply(thermal_operation(inst), DensityMatrix(basis_projector(2, 0)))
    target = np.diag([inst.p0, 1.0 - inst.p0]).astype(complex)
    gap = float(np.max(np.abs(out.matrix - target)))
    if gap > 1e-10:
        raise NumericsError(f"forward populations off target by {gap:.3e}")
    return out


def _recovered_state(inst: OscillatorInstance) -> DensityMatrix:
    rho = DensityMatrix(np.diag([inst.p0, 1.0 - inst.p0]).astype(complex))
    return apply(reversal(thermal_operation(inst)), rho)


def closed_form_recovery_population(inst: OscillatorInstance) -> float:
    """Ground population of the recovered state: p0^2 + (1-p0)^2 e^(beta_e)."""
    return inst.p0**2 + (1.0 - inst.p0) ** 2 * math.exp(inst.beta_e)


def population_residual(inst: OscillatorInstance) -> float:
    """|closed form - full matrix computation| for the recovered ground population."""
    numeric = float(_recovered_state(inst).matrix[0, 0].real)
    return abs(numeric - closed_form_recovery_population(inst))


def reversal_populations(inst: OscillatorInstance) -> tuple[float, float]:
    """Recovered-state populations (P0, P1), closed form cross-checked against
    the dense pipeline to 1e-9."""
    residual = population_residual(inst)
    if residual > 1e-9:
        raise NumericsError(
            f"closed-form and matrix recovery populations disagree by {residual:.3e}"
        )
    p0r = closed_form_recovery_population(inst)
    return p0r, 1.0 - p0r


def invest_bound(inst: OscillatorInstance) -> float:
    """Work-investment lower bound -log[p0^2 + (1-p0)^2 e^(beta_e)] in kT units.

    Equals -log F_squared(ground state, recovered state) computed from the
    dense matrices; the two routes are required to agree to 1e-9.
    """
    p0r, _ = reversal_populations(inst)
    bound = -math.log(p0r)
    ground = DensityMatrix(basis_projector(2, 0))
    matrix_bound = -math.log(fidelity(ground, _recovered_state(inst)).squared)
    if abs(matrix_bound - bound) > 1e-9:
        raise NumericsError(
            f"matrix fidelity bound {matrix_bound!r} disagrees with closed form {bound!r}"
        )
    return bound
