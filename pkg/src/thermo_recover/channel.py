"""Thermal operations as Stinespring dilations, their reversals and recovery
maps, superoperator forms, and random energy-conserving unitary generation.

Superoperator convention (fixed, because recovery-map equality tests compare
raw matrices): COLUMN-STACKING vectorization. ``vec(X)`` stacks the columns
of X, so ``vec(A X B) = (B^T kron A) vec(X)`` and a channel with Kraus
operators ``K_i`` has matrix ``sum_i conj(K_i) kron K_i``.

Composite ordering (fixed): system factor first, then environment factors
(bath first, then any catalysts).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.stats import unitary_group

from .config import DEFAULT_TOLS, NumericsError, Tolerances, ValidationError
from .linalg import (
    CompositeSpace,
    DensityMatrix,
    HermitianOperator,
    check_unitary,
    max_abs,
    power_on_support,
    ptrace_matrix,
    trace_norm,
)
from .thermo import GibbsState, HamiltonianSpec, combine_hamiltonians, gibbs_state

__all__ = [
    "EnergyConservingUnitary",
    "ThermalOperation",
    "Superoperator",
    "QuadratureSpec",
    "vec",
    "unvec",
    "superoperator_of",
    "apply",
    "reversal",
    "to_superoperator",
    "adjoint",
    "petz_recovery",
    "rotated_recovery_average",
    "sample_energy_conserving_unitary",
    "is_gibbs_preserving",
]


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(x).flatten(order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


class EnergyConservingUnitary:
    """A unitary commuting with its total Hamiltonian.

    Both characterizations are validated at construction: the commutator
    ``[V, H]`` (with H scaled to unit spectral radius so the threshold is
    meaningful across energy units) and block-diagonality of V across the
    degenerate-energy blocks of H.
    """

    def __init__(self, matrix, hamiltonian: HamiltonianSpec, *, tols: Tolerances = DEFAULT_TOLS):
        u = check_unitary(matrix, hamiltonian.dim, tols=tols)
        h = hamiltonian.operator.matrix
        scale = float(np.max(np.abs(hamiltonian.energies)))
        if scale > 0:
            hs = h / scale
            comm = max_abs(u @ hs - hs @ u)
            if comm > tols.commutation:
                raise ValidationError(
                    f"unitary does not conserve energy: ||[V, H]||_max = {comm:.3e} (scaled)"
                )
        basis = hamiltonian.basis
        in_eigenbasis = basis.conj().T @ u @ basis
        block_of = np.empty(hamiltonian.dim, dtype=int)
        for bi, block in enumerate(hamiltonian.blocks):
            for idx in block:
                block_of[idx] = bi
        offblock = in_eigenbasis.copy()
        same = block_of[:, None] == block_of[None, :]
        offblock[same] = 0.0
        leak = max_abs(offblock)
        if leak > tols.commutation:
            raise ValidationError(
                f"unitary couples distinct energy blocks: max off-block entry {leak:.3e}"
            )
        u = u.copy()
        u.flags.writeable = False
        self._matrix = u
        self.hamiltonian = hamiltonian
        self._tols = tols

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @property
    def tols(self) -> Tolerances:
        return self._tols

    def dagger(self) -> "EnergyConservingUnitary":
        return EnergyConservingUnitary(self._matrix.conj().T, self.hamiltonian, tols=self._tols)


class ThermalOperation:
    """Stinespring triple: energy-conserving V, Gibbs bath, optional extra
    environment factors (catalyst states appended after the bath).

    Defines the forward channel ``Tr_env[V((.) x env) V^dag]`` and, by
    swapping V for its inverse, the reversal channel.
    """

    def __init__(
        self,
        v,
        system: HamiltonianSpec,
        bath: GibbsState,
        extra_env: Sequence[DensityMatrix] = (),
        extra_hamiltonians: Sequence[HamiltonianSpec] = (),
        *,
        tols: Tolerances = DEFAULT_TOLS,
    ):
        self.system = system
        self.bath = bath
        self.extra_env = tuple(extra_env)
        if extra_hamiltonians and len(extra_hamiltonians) != len(self.extra_env):
            raise ValidationError("one Hamiltonian per extra environment factor required")
        self.extra_hamiltonians = tuple(extra_hamiltonians)
        self._tols = tols

        reference = gibbs_state(bath.hamiltonian, bath.beta)
        residual = max_abs(bath.state.matrix - reference.state.matrix)
        if residual > tols.gibbs_residual:
            raise ValidationError(
                f"bath state deviates from its Gibbs state by {residual:.3e}"
            )

        dims = (system.dim, bath.dim) + tuple(s.dim for s in self.extra_env)
        self.space = CompositeSpace(dims)
        matrix = v.matrix if isinstance(v, EnergyConservingUnitary) else v
        if self.extra_hamiltonians:
            env_specs = [bath.hamiltonian, *self.extra_hamiltonians]
        else:
            # extra factors without declared Hamiltonians count as fully
            # degenerate (zero energy)
            env_specs = [bath.hamiltonian] + [
                HamiltonianSpec.from_diagonal(np.zeros(s.dim), tols=tols)
                for s in self.extra_env
            ]
        total_h = combine_hamiltonians([system, *env_specs])
        # re-validating against the combined Hamiltonian guarantees V conserves
        # the same energy the bath is thermal with respect to
        self.v = EnergyConservingUnitary(matrix, total_h, tols=tols)

    @property
    def beta(self) -> float:
        return self.bath.beta

    @property
    def system_dim(self) -> int:
        return self.system.dim

    @property
    def tols(self) -> Tolerances:
        return self._tols

    @cached_property
    def env_matrix(self) -> np.ndarray:
        env = self.bath.state.matrix
        for s in self.extra_env:
            env = np.kron(env, s.matrix)
        env.flags.writeable = False
        return env

    @cached_property
    def env_half(self) -> np.ndarray:
        half = power_on_support(self.env_matrix, 0.5, tols=self._tols)
        half.flags.writeable = False
        return half

    @cached_property
    def tau_system(self) -> DensityMatrix:
        return gibbs_state(self.system, self.beta).state


def _apply_raw(t: ThermalOperation, x: np.ndarray) -> np.ndarray:
    full = np.kron(x, t.env_matrix)
    u = t.v.matrix
    out = u @ full @ u.conj().T
    return ptrace_matrix(out, t.space.factor_dims, keep=(0,))


def _adjoint_raw(t: ThermalOperation, x: np.ndarray) -> np.ndarray:
    d_env = t.env_matrix.shape[0]
    eh = np.kron(np.eye(t.system_dim), t.env_half)
    big = np.kron(x, np.eye(d_env))
    u = t.v.matrix
    m = eh @ (u.conj().T @ big @ u) @ eh
    return ptrace_matrix(m, t.space.factor_dims, keep=(0,))


def apply(t: ThermalOperation, rho: DensityMatrix) -> DensityMatrix:
    """Forward channel Tr_env[V (rho x env) V^dag]."""
    if rho.dim != t.system_dim:
        raise ValidationError(f"state dim {rho.dim} does not match system dim {t.system_dim}")
    return DensityMatrix(_apply_raw(t, rho.matrix), tols=t.tols)


def reversal(t: ThermalOperation) -> ThermalOperation:
    """Same environment, inverse global dynamics: V replaced by V^dag.

    The result is itself a valid thermal operation (it attaches a fresh,
    uncorrelated environment) and requires no work to implement.
    """
    return ThermalOperation(
        t.v.matrix.conj().T,
        t.system,
        t.bath,
        t.extra_env,
        t.extra_hamiltonians,
        tols=t.tols,
    )


class Superoperator:
    """A linear map on operators, stored as a dim^2 x dim^2 matrix under the
    column-stacking convention documented in the module docstring."""

    def __init__(self, matrix, *, tols: Tolerances = DEFAULT_TOLS, check_tp: bool = True):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"superoperator must be square, got {m.shape}")
        dim = math.isqrt(m.shape[0])
        if dim * dim != m.shape[0]:
            raise ValidationError(f"superoperator side {m.shape[0]} is not a perfect square")
        if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
            raise ValidationError("superoperator contains non-finite entries")
        if check_tp:
            defect = _tp_defect(m, dim)
            if defect > 1e-10:
                raise ValidationError(
                    f"superoperator is not trace-preserving: defect {defect:.3e}"
                )
        m = m.copy()
        m.flags.writeable = False
        self._matrix = m
        self._dim = dim
        self._tols = tols

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        """Dimension of the operators the map acts on."""
        return self._dim

    def apply(self, x) -> np.ndarray:
        arr = x.matrix if isinstance(x, HermitianOperator) else np.asarray(x, dtype=complex)
        if arr.shape != (self._dim, self._dim):
            raise ValidationError(f"operand shape {arr.shape} does not match dim {self._dim}")
        return unvec(self._matrix @ vec(arr), self._dim)

    def apply_state(self, rho: DensityMatrix) -> DensityMatrix:
        return DensityMatrix(self.apply(rho), tols=self._tols)

    def is_trace_preserving(self, tol: float = 1e-10) -> bool:
        return _tp_defect(self._matrix, self._dim) <= tol

    def choi(self) -> np.ndarray:
        """Unnormalized Choi matrix sum_ij |i><j| x N(|i><j|)."""
        d = self._dim
        j = np.zeros((d * d, d * d), dtype=complex)
        for a in range(d):
            for b in range(d):
                e = np.zeros((d, d), dtype=complex)
                e[a, b] = 1.0
                j += np.kron(e, self.apply(e))
        return j

    def is_completely_positive(self, tol: float = 1e-9) -> bool:
        j = self.choi()
        return float(np.min(np.linalg.eigvalsh((j + j.conj().T) / 2))) >= -tol


def _tp_defect(matrix: np.ndarray, dim: int) -> float:
    vid = vec(np.eye(dim))
    return max_abs(vid @ matrix - vid)


def superoperator_of(
    channel: Callable[[np.ndarray], np.ndarray], dim: int, *, check_tp: bool = True,
    tols: Tolerances = DEFAULT_TOLS,
) -> Superoperator:
    """Assemble the matrix of a channel by acting on all matrix units."""
    s = np.zeros((dim * dim, dim * dim), dtype=complex)
    for col in range(dim * dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[col % dim, col // dim] = 1.0  # column-stacked basis element
        s[:, col] = vec(channel(e))
    return Superoperator(s, tols=tols, check_tp=check_tp)


def to_superoperator(t: ThermalOperation) -> Superoperator:
    return superoperator_of(lambda x: _apply_raw(t, x), t.system_dim, tols=t.tols)


def adjoint(t: ThermalOperation) -> Superoperator:
    """Adjoint of the forward channel (a unital map, not trace-preserving)."""
    return superoperator_of(
        lambda x: _adjoint_raw(t, x), t.system_dim, check_tp=False, tols=t.tols
    )


def petz_recovery(t: ThermalOperation, reference: DensityMatrix) -> Superoperator:
    """Petz recovery channel of the forward map with respect to ``reference``.

    For a rank-deficient reference (or rank-deficient image of it) the inverse
    square roots are taken on the support only; a warning flags that the
    resulting map is trace-preserving only on that support.
    """
    if reference.dim != t.system_dim:
        raise ValidationError("reference state must live on the system")
    theta = reference
    n_theta = apply(t, theta)
    cutoff_in = theta.support_cutoff()
    cutoff_out = n_theta.support_cutoff()
    restricted = bool(
        np.min(theta.eigenvalues()) <= cutoff_in or np.min(n_theta.eigenvalues()) <= cutoff_out
    )
    if restricted:
        warnings.warn(
            "Petz recovery reference is rank-deficient; map is support-restricted",
            RuntimeWarning,
            stacklevel=2,
        )
    theta_half = power_on_support(theta.matrix, 0.5, tols=t.tols)
    image_invhalf = power_on_support(n_theta.matrix, -0.5, tols=t.tols)
    s_adj = adjoint(t).matrix
    inner = np.kron(image_invhalf.T, image_invhalf)
    outer = np.kron(theta_half.T, theta_half)
    return Superoperator(outer @ s_adj @ inner, tols=t.tols, check_tp=not restricted)


def is_gibbs_preserving(
    s: Superoperator, tau: DensityMatrix, tol: float | None = None
) -> bool:
    """True iff the map leaves the thermal state invariant in trace norm."""
    if tol is None:
        tol = DEFAULT_TOLS.gibbs_preserving
    return trace_norm(s.apply(tau) - tau.matrix) <= tol


@dataclass(frozen=True)
class QuadratureSpec:
    """Rule for averaging over the rotation parameter t with density
    p(t) = (pi/2) / (cosh(pi t) + 1).

    The exact substitution u = tanh(pi t / 2) maps the real line onto (-1, 1)
    with p(t) dt = du/2, so there is no truncation and no tail parameter.
    The substituted integrand carries phases exp(i w t(u)) ~ (1-u)^(-iw/pi)
    near the endpoints, which stalls a single Gauss rule at ~1e-5; the
    interval is therefore tiled with dyadically graded panels toward each
    endpoint (constant phase increment per panel) and Gauss-Legendre is
    applied per panel, which converges to machine precision.
    """

    nodes: int = 64         # Gauss-Legendre nodes per panel
    panel_levels: int = 44  # dyadic grading levels toward each endpoint

    def __post_init__(self):
        if self.nodes < 2 or self.panel_levels < 1:
            raise ValidationError("need nodes >= 2 and panel_levels >= 1")

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights on (-1, 1); weights sum to 2."""
        return _panel_points(self.nodes, self.panel_levels)


@lru_cache(maxsize=8)
def _panel_points(nodes: int, levels: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    positive = [0.0] + [1.0 - 2.0 ** (-k) for k in range(1, levels + 1)] + [1.0]
    edges = np.array(sorted({-e for e in positive} | set(positive)))
    us, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        us.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    u = np.concatenate(us)
    weights = np.concatenate(ws)
    u.flags.writeable = False
    weights.flags.writeable = False
    return u, weights


def rotated_recovery_average(
    n: Superoperator,
    reference: DensityMatrix,
    sigma: DensityMatrix,
    quadrature: QuadratureSpec = QuadratureSpec(),
) -> DensityMatrix:
    """Average of the rotated Petz recoveries of a Gibbs-preserving map.

    Computes ``integral dt p(t) R_t(sigma)`` where ``R_t`` conjugates the
    Petz recovery (with respect to ``reference``, which the map must fix) by
    the imaginary powers ``reference^(it/2)``; those are evaluated by spectral
    calculus. The result is symmetrized and renormalized, with the drift
    asserted below tolerance.
    """
    tau = reference
    if not (n.dim == tau.dim == sigma.dim):
        raise ValidationError("map, reference, and input state dimensions must match")
    if not is_gibbs_preserving(n, tau):
        raise ValidationError("map does not preserve the reference state")
    lam, basis = tau.spectrum()
    if float(lam[-1]) <= tau.support_cutoff():
        raise ValidationError("rotated recovery needs a full-rank reference state")
    d = tau.dim
    log_lam = np.log(lam)
    freq = log_lam[:, None] - log_lam[None, :]

    tau_half = (basis * np.sqrt(lam)) @ basis.conj().T
    tau_invhalf = (basis * (1.0 / np.sqrt(lam))) @ basis.conj().T
    petz = (
        np.kron(tau_half.T, tau_half)
        @ n.matrix.conj().T
        @ np.kron(tau_invhalf.T, tau_invhalf)
    )

    u, w = quadrature.points()
    t = (2.0 / np.pi) * np.arctanh(np.clip(u, -1.0 + 1e-16, 1.0 - 1e-16))
    phases = np.exp(-0.5j * t[:, None, None] * freq[None, :, :])  # (J, d, d)

    sigma_e = basis.conj().T @ sigma.matrix @ basis
    rotated_in = basis @ (sigma_e[None, :, :] * phases) @ basis.conj().T
    vecs = rotated_in.transpose(0, 2, 1).reshape(-1, d * d)
    recovered = (vecs @ petz.T).reshape(-1, d, d).transpose(0, 2, 1)
    rec_e = basis.conj().T @ recovered @ basis
    rotated_out = basis @ (rec_e * phases.conj()) @ basis.conj().T
    avg = np.einsum("j,jab->ab", 0.5 * w, rotated_out)

    drift = max(abs(float(np.trace(avg).real) - 1.0), max_abs(avg - avg.conj().T))
    if drift > tau.tols.recovery_drift:
        raise NumericsError(f"averaged recovery drifted by {drift:.3e}")
    sym = (avg + avg.conj().T) / 2
    sym /= np.trace(sym).real
    return DensityMatrix(sym, tols=tau.tols)


def sample_energy_conserving_unitary(
    h: HamiltonianSpec, rng: int | np.random.Generator
) -> EnergyConservingUnitary:
    """Haar-random unitary on each degenerate-energy block of h.

    Nondegenerate levels get random phases, so a fully nondegenerate
    Hamiltonian yields a diagonal (phase-only) unitary. Deterministic for a
    given integer seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    u_blocks = np.zeros((h.dim, h.dim), dtype=complex)
    for block in h.blocks:
        if len(block) == 1:
            u_blocks[block[0], block[0]] = np.exp(2j * np.pi * rng.random())
        else:
            sub = unitary_group.rvs(len(block), random_state=rng)
            u_blocks[np.ix_(block, block)] = sub
    v = h.basis @ u_blocks @ h.basis.conj().T
    return EnergyConservingUnitary(v, h, tols=h.tols)
