"""Entropies, relative entropies, the alpha-Renyi families, and fidelity.

Conventions fixed here and relied on by every bound:

* All logarithms are natural.
* Operator logarithms and negative powers act only on the support of their
  argument (relative rank cutoff from the operator layer).
* The alpha family uses the Petz form ``(1/(a-1)) log Tr[rho^a sigma^(1-a)]``
  for 0 <= a < 1/2 and the sandwiched form
  ``(1/(a-1)) log Tr[(sigma^((1-a)/2a) rho sigma^((1-a)/2a))^a]`` for a >= 1/2.
  a = 1 is the relative-entropy limit and a = inf is the max-divergence,
  both implemented as dedicated branches rather than numerical limits.
* Fidelity is exposed in BOTH conventions (root and squared) because
  different bounds consume different ones; callers must pick explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import NumericsError, ValidationError
from .linalg import DensityMatrix, power_on_support

__all__ = [
    "DivergenceResult",
    "AlphaFamilySpec",
    "Fidelity",
    "von_neumann_entropy",
    "relative_entropy",
    "renyi_divergence",
    "fidelity",
]

# alpha values this close to 1 are routed to the relative-entropy branch to
# avoid catastrophic cancellation in 1/(alpha-1)
ALPHA_ONE_WINDOW = 1e-6


@dataclass(frozen=True)
class DivergenceResult:
    """Extended-real divergence value with support diagnostics.

    ``support_ok`` records whether the support condition appropriate to the
    evaluated divergence holds (inclusion for alpha >= 1, non-orthogonality
    for alpha < 1); ``finite`` is equivalent to it by construction.
    """

    value: float
    finite: bool
    support_ok: bool


_INFINITE = DivergenceResult(value=math.inf, finite=False, support_ok=False)


@dataclass(frozen=True)
class AlphaFamilySpec:
    """An alpha >= 0 (or inf) with the variant rule fixed by the family."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if math.isnan(a) or a < 0:
            raise ValidationError(f"alpha must be >= 0 or inf, got {self.alpha}")
        object.__setattr__(self, "alpha", a)

    @property
    def variant(self) -> str:
        return "petz" if self.alpha < 0.5 else "sandwiched"


class Fidelity(NamedTuple):
    root: float      # Tr sqrt(sqrt(rho) sigma sqrt(rho))
    squared: float   # the square of the above


def _support_weights(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Clamped eigenvalues above the rank cutoff, with their eigenvectors."""
    w, v = rho.spectrum()
    mask = w > rho.support_cutoff()
    return w[mask], v[:, mask]


def _kernel_leak(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Weight of rho on the kernel of sigma."""
    w, v = sigma.spectrum()
    kernel = v[:, w <= sigma.support_cutoff()]
    if kernel.shape[1] == 0:
        return 0.0
    return float(np.einsum("ij,ik,kj->", kernel.conj(), rho.matrix, kernel).real)


def _support_contained(rho: DensityMatrix, sigma: DensityMatrix) -> bool:
    return _kernel_leak(rho, sigma) <= rho.dim * rho.tols.rank_rel


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """-Tr[rho log rho] over the support of rho."""
    w, _ = _support_weights(rho)
    return float(-np.sum(w * np.log(w)))


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> DivergenceResult:
    """D(rho || sigma) = Tr[rho log rho] - Tr[rho log sigma]; +inf off-support."""
    if rho.dim != sigma.dim:
        raise ValidationError(f"dimension mismatch {rho.dim} vs {sigma.dim}")
    if not _support_contained(rho, sigma):
        return _INFINITE
    w_r, _ = _support_weights(rho)
    w_s, v_s = _support_weights(sigma)
    own = float(np.sum(w_r * np.log(w_r)))
    overlap = np.einsum("ij,ik,kj->j", v_s.conj(), rho.matrix, v_s).real
    cross = float(np.sum(np.log(w_s) * overlap))
    return DivergenceResult(value=own - cross, finite=True, support_ok=True)


def _overlap_threshold(rho: DensityMatrix) -> float:
    return rho.dim * rho.tols.rank_rel


def _petz_renyi(rho: DensityMatrix, sigma: DensityMatrix, alpha: float) -> DivergenceResult:
    a_pow = power_on_support(rho.matrix, alpha, tols=rho.tols)
    b_pow = power_on_support(sigma.matrix, 1.0 - alpha, tols=sigma.tols)
    tr = float(np.trace(a_pow @ b_pow).real)
    if tr <= _overlap_threshold(rho):
        return _INFINITE
    return DivergenceResult(value=math.log(tr) / (alpha - 1.0), finite=True, support_ok=True)


def _sandwiched_renyi(rho: DensityMatrix, sigma: DensityMatrix, alpha: float) -> DivergenceResult:
    if alpha > 1.0 and not _support_contained(rho, sigma):
        return _INFINITE
    exponent = (1.0 - alpha) / (2.0 * alpha)
    g = power_on_support(sigma.matrix, exponent, tols=sigma.tols)
    m = g @ rho.matrix @ g
    vals = np.clip(np.linalg.eigvalsh((m + m.conj().T) / 2), 0.0, None)
    tr = float(np.sum(vals**alpha))
    if tr <= _overlap_threshold(rho):
        return _INFINITE
    return DivergenceResult(value=math.log(tr) / (alpha - 1.0), finite=True, support_ok=True)


def _max_divergence(rho: DensityMatrix, sigma: DensityMatrix) -> DivergenceResult:
    """D_max = log min{lam : rho <= lam sigma}, evaluated spectrally."""
    if not _support_contained(rho, sigma):
        return _INFINITE
    g = power_on_support(sigma.matrix, -0.5, tols=sigma.tols)
    m = g @ rho.matrix @ g
    top = float(np.max(np.linalg.eigvalsh((m + m.conj().T) / 2)))
    if top <= 0.0:
        return _INFINITE
    return DivergenceResult(value=math.log(top), finite=True, support_ok=True)


def renyi_divergence(
    rho: DensityMatrix, sigma: DensityMatrix, spec: AlphaFamilySpec | float
) -> DivergenceResult:
    """alpha-Renyi divergence D_alpha(rho || sigma) per the family convention."""
    if not isinstance(spec, AlphaFamilySpec):
        spec = AlphaFamilySpec(float(spec))
    if rho.dim != sigma.dim:
        raise ValidationError(f"dimension mismatch {rho.dim} vs {sigma.dim}")
    alpha = spec.alpha
    if math.isinf(alpha):
        return _max_divergence(rho, sigma)
    if abs(alpha - 1.0) < ALPHA_ONE_WINDOW:
        return relative_entropy(rho, sigma)
    if spec.variant == "petz":
        return _petz_renyi(rho, sigma, alpha)
    return _sandwiched_renyi(rho, sigma, alpha)


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> Fidelity:
    """Uhlmann fidelity in both conventions.

    ``root`` is Tr sqrt(sqrt(rho) sigma sqrt(rho)) in [0, 1]; ``squared`` is
    its square. Symmetric in its arguments.
    """
    if rho.dim != sigma.dim:
        raise ValidationError(f"dimension mismatch {rho.dim} vs {sigma.dim}")
    sr = power_on_support(rho.matrix, 0.5, tols=rho.tols)
    m = sr @ sigma.matrix @ sr
    vals = np.clip(np.linalg.eigvalsh((m + m.conj().T) / 2), 0.0, None)
    root = float(np.sum(np.sqrt(vals)))
    if root > 1.0 + 1e-8:
        raise NumericsError(f"fidelity root {root} exceeds 1 beyond numerical slack")
    root = min(max(root, 0.0), 1.0)
    return Fidelity(root=root, squared=root * root)
