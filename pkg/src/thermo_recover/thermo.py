"""Hamiltonians with degeneracy bookkeeping, Gibbs states, free energies, and
the two-level work-storage battery.

Units: energies are in a caller-chosen unit E0 and ``beta`` carries inverse
units, so kT = 1/beta. Free energies returned here are in units of E0; the
work-bound layer reports everything in units of kT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .config import DEFAULT_TOLS, Tolerances, NumericsError, ValidationError
from .divergence import relative_entropy, von_neumann_entropy
from .linalg import DensityMatrix, HermitianOperator, basis_projector, max_abs

__all__ = [
    "HamiltonianSpec",
    "GibbsState",
    "WitBattery",
    "combine_hamiltonians",
    "gibbs_state",
    "free_energy",
    "augment_with_wit",
]


def _group_blocks(energies: np.ndarray, tol_rel: float) -> tuple[tuple[int, ...], ...]:
    """Partition eigen-indices into groups of equal energy (within tolerance)."""
    scale = float(np.max(np.abs(energies))) if energies.size else 0.0
    eps = tol_rel * scale
    order = np.argsort(energies, kind="stable")
    blocks: list[list[int]] = []
    for idx in order:
        e = energies[idx]
        if blocks and abs(e - energies[blocks[-1][-1]]) <= eps:
            blocks[-1].append(int(idx))
        else:
            blocks.append([int(idx)])
    return tuple(tuple(b) for b in blocks)


class HamiltonianSpec:
    """Energies, eigenbasis, and the partition of levels into degenerate blocks.

    For diagonal Hamiltonians the eigenbasis is kept as the computational
    basis (no reordering), so block indices refer directly to basis states.
    """

    def __init__(self, operator: HermitianOperator, *, tols: Tolerances = DEFAULT_TOLS):
        self.operator = operator
        self._tols = tols
        w, v = operator.eigensystem()
        self._energies = np.array(w, dtype=float)
        self._basis = np.array(v, dtype=complex)
        self._energies.flags.writeable = False
        self._basis.flags.writeable = False
        self.diagonal = bool(max_abs(operator.matrix - np.diag(np.diag(operator.matrix))) == 0.0)
        if self.diagonal:
            # keep computational order and exact basis vectors
            self._energies = np.diag(operator.matrix).real.copy()
            self._basis = np.eye(operator.dim, dtype=complex)
            self._energies.flags.writeable = False
            self._basis.flags.writeable = False
        self.blocks = _group_blocks(self._energies, tols.degeneracy_rel)
        spread = max(
            (float(np.ptp(self._energies[list(b)])) for b in self.blocks if len(b) > 1),
            default=0.0,
        )
        scale = float(np.max(np.abs(self._energies))) if operator.dim else 0.0
        if spread > tols.degeneracy_rel * max(scale, 1e-300):
            raise ValidationError("energy blocks are not degenerate within tolerance")

    @classmethod
    def from_diagonal(
        cls, energies: Sequence[float], *, tols: Tolerances = DEFAULT_TOLS
    ) -> "HamiltonianSpec":
        e = np.asarray(list(energies), dtype=float)
        if e.ndim != 1 or e.size < 1 or not np.all(np.isfinite(e)):
            raise ValidationError("diagonal Hamiltonian needs a finite 1-d energy list")
        return cls(HermitianOperator(np.diag(e.astype(complex)), tols=tols), tols=tols)

    @property
    def dim(self) -> int:
        return self.operator.dim

    @property
    def energies(self) -> np.ndarray:
        """Energy of each eigenbasis column (computational order if diagonal)."""
        return self._energies

    @property
    def basis(self) -> np.ndarray:
        """Eigenvector columns; column j has energy ``energies[j]``."""
        return self._basis

    @property
    def tols(self) -> Tolerances:
        return self._tols

    def __repr__(self) -> str:  # pragma: no cover
        return f"HamiltonianSpec(dim={self.dim}, blocks={len(self.blocks)})"


def combine_hamiltonians(specs: Sequence[HamiltonianSpec]) -> HamiltonianSpec:
    """Total Hamiltonian ``sum_i I x ... x H_i x ... x I`` on the composite space.

    All-diagonal inputs stay diagonal, so the composite blocks follow exactly
    from sums of level energies.
    """
    if not specs:
        raise ValidationError("need at least one Hamiltonian")
    tols = specs[0].tols
    if all(s.diagonal for s in specs):
        total = np.zeros(1)
        for s in specs:
            total = np.add.outer(total, s.energies).reshape(-1)
        return HamiltonianSpec.from_diagonal(total, tols=tols)
    dims = [s.dim for s in specs]
    total_dim = math.prod(dims)
    h = np.zeros((total_dim, total_dim), dtype=complex)
    for i, s in enumerate(specs):
        left = math.prod(dims[:i])
        right = math.prod(dims[i + 1:])
        h += np.kron(np.kron(np.eye(left), s.operator.matrix), np.eye(right))
    return HamiltonianSpec(HermitianOperator(h, tols=tols), tols=tols)


@dataclass(frozen=True)
class GibbsState:
    """exp(-beta H)/Z together with its defining data."""

    state: DensityMatrix
    beta: float
    log_partition: float
    hamiltonian: HamiltonianSpec

    @property
    def dim(self) -> int:
        return self.state.dim


def gibbs_state(h: HamiltonianSpec, beta: float) -> GibbsState:
    """Thermal state with Boltzmann weights in h's eigenbasis.

    ``beta = 0`` gives the maximally mixed state. The log-partition function
    is evaluated with log-sum-exp for stability at large beta.
    """
    beta = float(beta)
    if not math.isfinite(beta) or beta < 0:
        raise ValidationError(f"beta must be a finite value >= 0, got {beta}")
    exponents = -beta * h.energies
    log_z = float(logsumexp(exponents))
    weights = np.exp(exponents - log_z)
    b = h.basis
    state = (b * weights) @ b.conj().T
    return GibbsState(
        state=DensityMatrix(state, tols=h.tols),
        beta=beta,
        log_partition=log_z,
        hamiltonian=h,
    )


def free_energy(rho: DensityMatrix, h: HamiltonianSpec, beta: float) -> float:
    """Helmholtz free energy Tr[H rho] - S(rho)/beta (natural log), in E0 units.

    Cross-checked against the equivalent form kT * (D(rho || tau) - log Z);
    the two must agree to the configured tolerance.
    """
    beta = float(beta)
    if not math.isfinite(beta) or beta <= 0:
        raise ValidationError("free energy requires a finite positive beta")
    if rho.dim != h.dim:
        raise ValidationError(f"state dim {rho.dim} does not match Hamiltonian dim {h.dim}")
    energy = float(np.trace(h.operator.matrix @ rho.matrix).real)
    entropic = energy - von_neumann_entropy(rho) / beta
    g = gibbs_state(h, beta)
    div = relative_entropy(rho, g.state)
    if not div.finite:
        raise NumericsError("relative-entropic free energy is infinite (thermal state lost rank)")
    relative = (div.value - g.log_partition) / beta
    if abs(entropic - relative) > h.tols.free_energy_agreement * max(1.0, abs(entropic)):
        raise NumericsError(
            f"free-energy forms disagree: {entropic!r} vs {relative!r}"
        )
    return entropic


@dataclass(frozen=True)
class WitBattery:
    """Two-level battery: ground energy exactly 0, excited energy ``gap``."""

    gap: float

    def __post_init__(self):
        if not math.isfinite(self.gap) or self.gap < 0:
            raise ValidationError(f"battery gap must be finite and >= 0, got {self.gap}")

    @cached_property
    def hamiltonian(self) -> HamiltonianSpec:
        return HamiltonianSpec.from_diagonal([0.0, self.gap])


def augment_with_wit(rho: DensityMatrix, w: WitBattery, level: int) -> DensityMatrix:
    """rho x |level><level| on the system-battery composite (system first)."""
    if level not in (0, 1):
        raise ValidationError(f"battery level must be 0 or 1, got {level}")
    return DensityMatrix(np.kron(rho.matrix, basis_projector(2, level)), tols=rho.tols)
