"""JSON interchange for matrices, Hamiltonians, and report files.

Matrix format (the canonical interchange format for every command):

    {"dim": n, "entries": [[re, im], ...]}      # n*n entries, row-major

Hamiltonian format: either ``{"diagonal": [E_0, ...]}`` or a full matrix
object as above. Report floats are emitted with 12 significant digits;
non-finite values are emitted as ``null`` alongside an explicit flag.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .config import DEFAULT_TOLS, Tolerances, ValidationError
from .linalg import DensityMatrix, HermitianOperator
from .thermo import HamiltonianSpec


def matrix_to_json(matrix: np.ndarray) -> dict:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    entries = [[float(z.real), float(z.imag)] for z in m.reshape(-1)]
    return {"dim": int(m.shape[0]), "entries": entries}


def matrix_from_json(obj: Any) -> np.ndarray:
    if not isinstance(obj, dict) or "dim" not in obj or "entries" not in obj:
        raise ValidationError("matrix JSON must have 'dim' and 'entries' keys")
    dim = obj["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise ValidationError(f"matrix 'dim' must be a positive integer, got {dim!r}")
    entries = obj["entries"]
    if not isinstance(entries, list) or len(entries) != dim * dim:
        raise ValidationError(f"expected {dim * dim} entries, got {len(entries)}")
    flat = np.empty(dim * dim, dtype=complex)
    for i, pair in enumerate(entries):
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise ValidationError(f"entry {i} must be a [re, im] pair, got {pair!r}")
        flat[i] = complex(float(pair[0]), float(pair[1]))
    if not np.all(np.isfinite(flat.real)) or not np.all(np.isfinite(flat.imag)):
        raise ValidationError("matrix JSON contains non-finite entries")
    return flat.reshape(dim, dim)


def hermitian_from_json(obj: Any, *, tols: Tolerances = DEFAULT_TOLS) -> HermitianOperator:
    return HermitianOperator(matrix_from_json(obj), tols=tols)


def density_from_json(obj: Any, *, tols: Tolerances = DEFAULT_TOLS) -> DensityMatrix:
    return DensityMatrix(matrix_from_json(obj), tols=tols)


def hamiltonian_from_json(obj: Any, *, tols: Tolerances = DEFAULT_TOLS) -> HamiltonianSpec:
    if isinstance(obj, dict) and "diagonal" in obj:
        energies = obj["diagonal"]
        if not isinstance(energies, list) or not energies:
            raise ValidationError("'diagonal' must be a non-empty list of energies")
        return HamiltonianSpec.from_diagonal([float(e) for e in energies], tols=tols)
    return HamiltonianSpec(hermitian_from_json(obj, tols=tols), tols=tols)


def load_json(path: str | Path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path}: {exc}") from exc


def round_sig(x: float, digits: int = 12) -> float | None:
    """Round to significant digits; non-finite values map to None (JSON null)."""
    if x is None or not math.isfinite(x):
        return None
    return float(f"{x:.{digits}g}") + 0.0  # + 0.0 normalizes -0.0


def json_ready(obj: Any) -> Any:
    """Recursively convert to JSON-serializable values with 12-digit floats."""
    if isinstance(obj, dict):
        return {str(k): json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2 and np.iscomplexobj(obj):
            return json_ready(matrix_to_json(obj))
        return json_ready(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(float(obj))
    if isinstance(obj, complex):
        return [round_sig(obj.real), round_sig(obj.imag)]
    return obj


def dump_report(report: Any, path: str | Path | None) -> str:
    """Serialize a report deterministically; write to ``path`` if given."""
    text = json.dumps(json_ready(report), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
