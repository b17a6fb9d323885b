"""Numerical tolerances and shared error types.

Every validation threshold used across the library lives in one
:class:`Tolerances` instance so that CLI overrides apply uniformly.
"""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass

MAX_DIM_ENV = "THERMO_RECOVER_MAX_DIM"
DEFAULT_MAX_DIM = 4096


class ValidationError(ValueError):
    """Input fails a structural precondition (shape, Hermiticity, unitarity, ...)."""


class DomainError(ValidationError):
    """A scalar function was evaluated outside its domain on a retained eigenvalue."""


class NumericsError(ArithmeticError):
    """An internal consistency check failed (a mathematically guaranteed relation broke)."""


@dataclass(frozen=True)
class Tolerances:
    """Validation and consistency thresholds.

    All matrix-norm thresholds are on the entrywise max norm unless noted.
    ``rank_rel`` is relative: the support cutoff for an operator is
    ``dim * max|eigenvalue| * rank_rel``.
    """

    herm: float = 1e-12            # ||M - M^dag||_max at construction
    psd: float = 1e-10             # eigenvalue floor for density matrices
    trace: float = 1e-10           # |Tr(rho) - 1|
    rank_rel: float = 1e-12        # relative support cutoff
    unitary: float = 1e-10         # ||U^dag U - I||_max
    degeneracy_rel: float = 1e-9   # energy-block grouping, relative to max|E|
    commutation: float = 1e-10     # ||[V, H]||_max with H scaled to unit spectral radius
    gibbs_residual: float = 1e-12  # bath state vs exp(-beta H_B)/Z_B
    gibbs_preserving: float = 1e-9 # trace-norm drift of tau under a candidate map
    catalyst_return: float = 1e-9  # trace-norm marginal-return residual
    truncation: float = 1e-12      # oscillator bath tail mass
    recovery_drift: float = 1e-8   # trace/Hermiticity drift of the averaged recovery output
    free_energy_agreement: float = 1e-9   # entropic vs relative-entropic form

    def replace(self, **overrides: float) -> "Tolerances":
        eps = sys.float_info.epsilon
        for key, val in overrides.items():
            if not hasattr(self, key):
                raise ValidationError(f"unknown tolerance {key!r}")
            if not (float(val) >= eps):
                raise ValidationError(f"tolerance {key}={val} below machine epsilon")
        return dataclasses.replace(self, **{k: float(v) for k, v in overrides.items()})


DEFAULT_TOLS = Tolerances()


def max_dim() -> int:
    """Hard cap on total matrix dimension, overridable via the environment."""
    raw = os.environ.get(MAX_DIM_ENV)
    if raw is None:
        return DEFAULT_MAX_DIM
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValidationError(f"{MAX_DIM_ENV} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValidationError(f"{MAX_DIM_ENV} must be positive, got {value}")
    return value
