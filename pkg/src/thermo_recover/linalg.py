"""Dense Hermitian/PSD matrix foundation: validated operator types, tensor
products, partial traces, and spectral matrix functions.

Index convention for composite spaces (fixed everywhere): the leftmost factor
is slowest, i.e. the global index of basis labels ``(s_1, ..., s_k)`` on
factor dimensions ``(d_1, ..., d_k)`` is ``sum_i s_i * prod_{j>i} d_j``.
This is exactly the ordering produced by ``np.kron`` and by reshaping to
``(d_1, ..., d_k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .config import DEFAULT_TOLS, DomainError, Tolerances, ValidationError, max_dim

__all__ = [
    "HermitianOperator",
    "DensityMatrix",
    "CompositeSpace",
    "tensor",
    "partial_trace",
    "matrix_function",
    "conjugate",
    "max_abs",
    "trace_norm",
    "random_density",
    "basis_projector",
]


def max_abs(m: np.ndarray) -> float:
    """Entrywise max-norm of a matrix."""
    return float(np.max(np.abs(m))) if m.size else 0.0


def trace_norm(m: np.ndarray) -> float:
    """Trace norm of a Hermitian matrix (sum of absolute eigenvalues)."""
    return float(np.sum(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2))))


def _as_square(matrix, what: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{what} must be a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValidationError(f"{what} must be non-empty")
    if m.shape[0] > max_dim():
        raise ValidationError(
            f"{what} dimension {m.shape[0]} exceeds the configured cap {max_dim()}"
        )
    if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
        raise ValidationError(f"{what} contains non-finite entries")
    return m


class HermitianOperator:
    """A validated Hermitian matrix; stores the symmetrized form (M + M^dag)/2.

    Immutable after construction (the underlying array is write-locked), so
    instances are safe to share across threads.
    """

    def __init__(self, matrix, *, tols: Tolerances = DEFAULT_TOLS):
        m = _as_square(matrix, type(self).__name__)
        defect = max_abs(m - m.conj().T)
        if defect > tols.herm:
            raise ValidationError(
                f"{type(self).__name__} is not Hermitian: max|M - M^dag| = {defect:.3e}"
            )
        sym = (m + m.conj().T) / 2
        sym.flags.writeable = False
        self._matrix = sym
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

    @cached_property
    def _eigh(self) -> tuple[np.ndarray, np.ndarray]:
        w, v = np.linalg.eigh(self._matrix)
        w.flags.writeable = False
        v.flags.writeable = False
        return w, v

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending) and eigenvector columns."""
        return self._eigh

    def eigenvalues(self) -> np.ndarray:
        return self._eigh[0]

    def trace(self) -> float:
        return float(np.trace(self._matrix).real)

    def support_cutoff(self) -> float:
        """Eigenvalues with |lambda| at or below this are treated as zero."""
        lam_max = float(np.max(np.abs(self.eigenvalues())))
        return self.dim * lam_max * self._tols.rank_rel

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"{type(self).__name__}(dim={self.dim})"


class DensityMatrix(HermitianOperator):
    """Hermitian, positive semidefinite (to tolerance), unit trace."""

    def __init__(self, matrix, *, tols: Tolerances = DEFAULT_TOLS):
        super().__init__(matrix, tols=tols)
        tr = self.trace()
        if abs(tr - 1.0) > tols.trace:
            raise ValidationError(f"density matrix trace {tr!r} is not 1")
        w = self.eigenvalues()
        if float(w[0]) < -tols.psd:
            raise ValidationError(
                f"density matrix has negative eigenvalue {float(w[0]):.3e}"
            )

    @cached_property
    def _spectrum_desc(self) -> tuple[np.ndarray, np.ndarray]:
        w, v = self.eigensystem()
        order = np.argsort(w)[::-1]
        probs = np.clip(w[order], 0.0, None)
        vecs = v[:, order]
        probs.flags.writeable = False
        vecs.flags.writeable = False
        return probs, vecs

    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues descending and clamped to >= 0, with matching eigenvectors."""
        return self._spectrum_desc


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor factorization of a Hilbert space.

    ``factor_dims[0]`` is the slowest (leftmost) factor; see module docstring
    for the exact index formula.
    """

    factor_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims or any(d < 1 for d in dims):
            raise ValidationError(f"factor dims must be positive, got {self.factor_dims}")
        object.__setattr__(self, "factor_dims", dims)
        if self.total_dim > max_dim():
            raise ValidationError(
                f"composite dimension {self.total_dim} exceeds the configured cap {max_dim()}"
            )

    @property
    def total_dim(self) -> int:
        return math.prod(self.factor_dims)

    @property
    def n_factors(self) -> int:
        return len(self.factor_dims)

    def index(self, labels: Sequence[int]) -> int:
        """Global index of the basis state with the given per-factor labels."""
        if len(labels) != self.n_factors:
            raise ValidationError("label count does not match factor count")
        idx = 0
        for label, d in zip(labels, self.factor_dims):
            if not 0 <= label < d:
                raise ValidationError(f"label {label} out of range for factor dim {d}")
            idx = idx * d + label
        return idx


def _rewrap(template: HermitianOperator, matrix: np.ndarray) -> HermitianOperator:
    return type(template)(matrix, tols=template.tols)


def tensor(a: HermitianOperator, b: HermitianOperator) -> HermitianOperator:
    """Kronecker product under the fixed index convention.

    Two density matrices give a density matrix; any other combination gives a
    plain Hermitian operator.
    """
    out = np.kron(a.matrix, b.matrix)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(out, tols=a.tols)
    return HermitianOperator(out, tols=a.tols)


def ptrace_matrix(matrix: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Partial trace on a raw matrix; ``keep`` lists factor indices to retain."""
    dims = tuple(int(d) for d in dims)
    k = len(dims)
    keep = sorted(set(int(i) for i in keep))
    if not keep:
        raise ValidationError("keep must name at least one factor")
    if any(i < 0 or i >= k for i in keep):
        raise ValidationError(f"keep indices {keep} out of range for {k} factors")
    total = math.prod(dims)
    if matrix.shape != (total, total):
        raise ValidationError(
            f"matrix dimension {matrix.shape} does not match factor dims {dims}"
        )
    arr = matrix.reshape(dims + dims)
    # Row axis i carries subscript i; column axis i carries k+i when kept,
    # i when traced (contracting it against the row axis).
    subscripts = list(range(k)) + [k + i if i in keep else i for i in range(k)]
    out_subs = [i for i in keep] + [k + i for i in keep]
    reduced = np.einsum(arr, subscripts, out_subs)
    d = math.prod(dims[i] for i in keep)
    return np.ascontiguousarray(reduced.reshape(d, d))


def partial_trace(
    m: HermitianOperator, space: CompositeSpace, keep: Iterable[int]
) -> HermitianOperator:
    """Reduced operator on the kept factors, in their original relative order."""
    if m.dim != space.total_dim:
        raise ValidationError(
            f"operator dim {m.dim} does not match composite dim {space.total_dim}"
        )
    return _rewrap(m, ptrace_matrix(m.matrix, space.factor_dims, keep))


def spectral_apply(
    matrix: np.ndarray,
    f: Callable[[np.ndarray], np.ndarray],
    *,
    support_only: bool = False,
    tols: Tolerances = DEFAULT_TOLS,
    what: str = "matrix function",
) -> np.ndarray:
    """Apply a scalar function to a raw Hermitian matrix via eigendecomposition.

    With ``support_only`` the spectral sum runs only over eigenvalues above
    the relative rank cutoff, which realizes the convention that logarithms
    and negative powers act on the support of their argument.
    """
    w, v = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    if support_only:
        lam_max = float(np.max(np.abs(w))) if w.size else 0.0
        cutoff = w.size * lam_max * tols.rank_rel
        mask = np.abs(w) > cutoff
    else:
        mask = np.ones_like(w, dtype=bool)
    if not np.any(mask):
        return np.zeros_like(matrix)
    with np.errstate(all="ignore"):
        vals = np.asarray(f(w[mask]), dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = w[mask][~np.isfinite(vals)]
        raise DomainError(f"{what} undefined at retained eigenvalue(s) {bad}")
    cols = v[:, mask]
    return (cols * vals) @ cols.conj().T


def matrix_function(
    m: HermitianOperator,
    f: Callable[[np.ndarray], np.ndarray],
    support_only: bool = False,
) -> HermitianOperator:
    """Hermitian spectral function: sum of f(lambda_i) |v_i><v_i|.

    ``f`` must accept a 1-d float array. Raises :class:`DomainError` if ``f``
    is undefined (non-finite) at a retained eigenvalue.
    """
    out = spectral_apply(m.matrix, f, support_only=support_only, tols=m.tols)
    return HermitianOperator(out, tols=m.tols)


def power_on_support(
    matrix: np.ndarray, exponent: float, *, tols: Tolerances = DEFAULT_TOLS
) -> np.ndarray:
    """PSD matrix power restricted to the support; exponent 0 gives the projector."""
    def f(w: np.ndarray) -> np.ndarray:
        return np.power(np.clip(w, 0.0, None), exponent)

    return spectral_apply(matrix, f, support_only=True, tols=tols, what=f"power {exponent}")


def check_unitary(matrix, dim: int | None = None, *, tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    u = _as_square(matrix, "unitary")
    if dim is not None and u.shape[0] != dim:
        raise ValidationError(f"unitary dim {u.shape[0]} does not match operator dim {dim}")
    defect = max_abs(u.conj().T @ u - np.eye(u.shape[0]))
    if defect > tols.unitary:
        raise ValidationError(f"matrix is not unitary: max|U^dag U - I| = {defect:.3e}")
    return u


def conjugate(m: HermitianOperator, u) -> HermitianOperator:
    """Unitary conjugation U m U^dag; the spectrum is unchanged."""
    uu = check_unitary(u, m.dim, tols=m.tols)
    return _rewrap(m, uu @ m.matrix @ uu.conj().T)


def basis_projector(dim: int, level: int) -> np.ndarray:
    """|level><level| on a dim-dimensional space, as a raw matrix."""
    if not 0 <= level < dim:
        raise ValidationError(f"level {level} out of range for dim {dim}")
    p = np.zeros((dim, dim), dtype=complex)
    p[level, level] = 1.0
    return p


def random_density(
    dim: int, rng: np.random.Generator, *, min_eigenvalue: float = 0.0
) -> DensityMatrix:
    """Random density matrix; a positive ``min_eigenvalue`` guarantees full rank.

    Sampled as GG^dag from a complex Ginibre G, optionally mixed with the
    maximally mixed state so every eigenvalue is at least ``min_eigenvalue``.
    """
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    if min_eigenvalue > 0.0:
        lam = min_eigenvalue * dim
        if lam >= 1.0:
            raise ValidationError("min_eigenvalue too large for this dimension")
        rho = (1 - lam) * rho + lam * np.eye(dim) / dim
    return DensityMatrix(rho)
