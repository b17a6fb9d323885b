"""Randomized property suites over all modules, with self-contained
counterexample dumps.

Every check is a named function from a plain data dict (matrices, spectra,
scalars) to a (residual, tolerance) pair, or None when its premise does not
apply. Data values may be numpy arrays or their JSON forms, so a dumped
counterexample replays through exactly the same code path that failed.

Trials are independent: the RNG for trial i of suite s is seeded with
(seed, s, i), so distributing trials over worker threads cannot change any
result, and the reduction is always in trial order.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import catalysis as cat
from . import channel as ch
from . import oscillator as osc
from . import workbounds as wb
from .config import ValidationError
from .divergence import fidelity, relative_entropy, renyi_divergence
from .jsonio import matrix_from_json, matrix_to_json
from .linalg import (
    DensityMatrix,
    HermitianOperator,
    basis_projector,
    matrix_function,
    max_abs,
    ptrace_matrix,
    random_density,
    spectral_apply,
)
from .thermo import HamiltonianSpec, combine_hamiltonians, gibbs_state

__all__ = [
    "SuiteResult",
    "run_all",
    "replay_counterexample",
    "CHECKS",
    "random_channel_data",
    "random_gp_data",
    "random_catalysis_data",
]


def _arr(x) -> np.ndarray:
    if isinstance(x, dict):
        return matrix_from_json(x)
    return np.asarray(x, dtype=complex)


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(-1)


def _density(x) -> DensityMatrix:
    return DensityMatrix(_arr(x))


def _log_full(m: np.ndarray) -> np.ndarray:
    return spectral_apply(m, np.log, support_only=True)


# ---------------------------------------------------------------------------
# operator-core checks
# ---------------------------------------------------------------------------

def check_tensor_ptrace_adjointness(data) -> tuple[float, float]:
    a = _arr(data["a"])
    m = _arr(data["m"])
    da, db = int(data["dim_a"]), int(data["dim_b"])
    lhs = np.trace(np.kron(a, np.eye(db)) @ m)
    rhs = np.trace(a @ ptrace_matrix(m, (da, db), keep=(0,)))
    return abs(complex(lhs - rhs)), 1e-10


def check_matrix_function_identity(data) -> tuple[float, float]:
    m = HermitianOperator(_arr(data["m"]))
    out = matrix_function(m, lambda w: w, support_only=False)
    return max_abs(out.matrix - m.matrix), 1e-11


def check_hermiticity_preservation(data) -> tuple[float, float]:
    a = _arr(data["a"])
    b = _arr(data["b"])
    u = _arr(data["u"])
    da, db = a.shape[0], b.shape[0]
    t = np.kron(a, b)
    reduced = ptrace_matrix(t, (da, db), keep=(0,))
    conj = u @ t @ u.conj().T
    defect = max(
        max_abs(t - t.conj().T),
        max_abs(reduced - reduced.conj().T),
        max_abs(conj - conj.conj().T),
    )
    return defect, 1e-11


# ---------------------------------------------------------------------------
# divergence checks
# ---------------------------------------------------------------------------

def check_data_processing(data) -> tuple[float, float]:
    dc, dd = int(data["dim_c"]), int(data["dim_d"])
    rho = _density(data["rho"])
    sigma = _density(data["sigma"])
    full = relative_entropy(rho, sigma).value
    rho_d = DensityMatrix(ptrace_matrix(rho.matrix, (dc, dd), keep=(1,)))
    sigma_d = DensityMatrix(ptrace_matrix(sigma.matrix, (dc, dd), keep=(1,)))
    marg = relative_entropy(rho_d, sigma_d).value
    return max(0.0, marg - full), 1e-10


_MONOTONE_ALPHAS = (0.0, 0.25, 0.5, 1.0, 2.0, 5.0, math.inf)


def check_alpha_monotonicity(data) -> tuple[float, float]:
    p = _vec(data["p"])
    q = _vec(data["q"])
    rho = DensityMatrix(np.diag(p).astype(complex))
    sigma = DensityMatrix(np.diag(q).astype(complex))
    vals = [renyi_divergence(rho, sigma, a).value for a in _MONOTONE_ALPHAS]
    worst = max(vals[i] - vals[i + 1] for i in range(len(vals) - 1))
    return max(0.0, worst), 1e-10


def check_divergence_ordering(data) -> tuple[float, float]:
    rho = _density(data["rho"])
    sigma = _density(data["sigma"])
    d = relative_entropy(rho, sigma).value
    d_half = renyi_divergence(rho, sigma, 0.5).value
    neg_log_f = -math.log(fidelity(rho, sigma).squared)
    return max(abs(d_half - neg_log_f), max(0.0, d_half - d)), 1e-10


def check_divergence_invariance(data) -> tuple[float, float]:
    rho = _density(data["rho"])
    sigma = _density(data["sigma"])
    u = _arr(data["u"])
    gamma = _arr(data["gamma"])
    base = relative_entropy(rho, sigma).value
    rotated = relative_entropy(
        DensityMatrix(u @ rho.matrix @ u.conj().T),
        DensityMatrix(u @ sigma.matrix @ u.conj().T),
    ).value
    padded = relative_entropy(
        DensityMatrix(np.kron(rho.matrix, gamma)),
        DensityMatrix(np.kron(sigma.matrix, gamma)),
    ).value
    return max(abs(rotated - base), abs(padded - base)), 1e-9


def check_rewrite_identity(data) -> tuple[float, float]:
    """Difference of a joint and a marginal relative entropy equals one trace
    expression built from the four logarithms (the key rewrite step)."""
    dc, dd = int(data["dim_c"]), int(data["dim_d"])
    eta = _density(data["eta"])
    theta = _density(data["theta"])
    eta_d = ptrace_matrix(eta.matrix, (dc, dd), keep=(1,))
    theta_d = ptrace_matrix(theta.matrix, (dc, dd), keep=(1,))
    lhs = (
        relative_entropy(eta, theta).value
        - relative_entropy(DensityMatrix(eta_d), DensityMatrix(theta_d)).value
    )
    ic = np.eye(dc)
    op = (
        _log_full(eta.matrix)
        - _log_full(theta.matrix)
        - np.kron(ic, _log_full(eta_d))
        + np.kron(ic, _log_full(theta_d))
    )
    rhs = float(np.trace(eta.matrix @ op).real)
    return abs(lhs - rhs), 1e-9


# ---------------------------------------------------------------------------
# channel checks (raw-matrix level so injected fixtures can run)
# ---------------------------------------------------------------------------

def _channel_pieces(data):
    v = _arr(data["v"])
    hs = HamiltonianSpec.from_diagonal(_vec(data["hs"]))
    hb = HamiltonianSpec.from_diagonal(_vec(data["hb"]))
    beta = float(data["beta"])
    rho = _density(data["rho"])
    tau_s = gibbs_state(hs, beta).state
    tau_b = gibbs_state(hb, beta).state
    dims = (hs.dim, hb.dim)
    joint_in = np.kron(rho.matrix, tau_b.matrix)
    sigma = DensityMatrix(ptrace_matrix(v @ joint_in @ v.conj().T, dims, keep=(0,)))
    return v, hs, hb, beta, rho, tau_s, tau_b, dims, sigma


def check_entropy_difference_identity(data) -> tuple[float, float]:
    """The relative-entropy difference to the thermal state equals the
    divergence between the joint input and the inverse-evolved joint output,
    an exact identity for energy-conserving dynamics."""
    v, hs, hb, beta, rho, tau_s, tau_b, dims, sigma = _channel_pieces(data)
    dlt = relative_entropy(rho, tau_s).value - relative_entropy(sigma, tau_s).value
    back = v.conj().T @ np.kron(sigma.matrix, tau_b.matrix) @ v
    rhs = relative_entropy(
        DensityMatrix(np.kron(rho.matrix, tau_b.matrix)), DensityMatrix(back)
    ).value
    return abs(dlt - rhs), 1e-9


def check_recovery_chain(data) -> tuple[float, float]:
    v, hs, hb, beta, rho, tau_s, tau_b, dims, sigma = _channel_pieces(data)
    dlt = relative_entropy(rho, tau_s).value - relative_entropy(sigma, tau_s).value
    recovered = DensityMatrix(
        ptrace_matrix(
            v.conj().T @ np.kron(sigma.matrix, tau_b.matrix) @ v, dims, keep=(0,)
        )
    )
    d_rec = relative_entropy(rho, recovered).value
    nlf = -math.log(fidelity(rho, recovered).squared)
    violation = max(0.0, d_rec - dlt, nlf - d_rec)
    return violation, 1e-10


def _thermal_operation_from(data) -> ch.ThermalOperation:
    hs = HamiltonianSpec.from_diagonal(_vec(data["hs"]))
    hb = HamiltonianSpec.from_diagonal(_vec(data["hb"]))
    beta = float(data["beta"])
    return ch.ThermalOperation(_arr(data["v"]), hs, gibbs_state(hb, beta))


def check_petz_reversal_equality(data) -> tuple[float, float]:
    t = _thermal_operation_from(data)
    rev = ch.to_superoperator(ch.reversal(t))
    petz = ch.petz_recovery(t, t.tau_system)
    return max_abs(rev.matrix - petz.matrix), 1e-10


def check_adjoint_duality(data) -> tuple[float, float]:
    t = _thermal_operation_from(data)
    adj = ch.adjoint(t)
    a = _arr(data["obs_a"])
    b = _arr(data["obs_b"])
    lhs = np.trace(a @ ch.to_superoperator(t).apply(b))
    rhs = np.trace(adj.apply(a) @ b)
    unital = max_abs(adj.apply(np.eye(t.system_dim)) - np.eye(t.system_dim))
    return max(abs(complex(lhs - rhs)), unital), 1e-10


def check_rotated_recovery_bound(data) -> tuple[float, float]:
    s = ch.Superoperator(_arr(data["s"]))
    hs = HamiltonianSpec.from_diagonal(_vec(data["hs"]))
    beta = float(data["beta"])
    rho = _density(data["rho"])
    tau = gibbs_state(hs, beta).state
    sigma = s.apply_state(rho)
    dlt = wb.delta(rho, sigma, tau)
    avg = ch.rotated_recovery_average(s, tau, sigma)
    bound = -2.0 * math.log(fidelity(rho, avg).root)
    return max(0.0, bound - dlt), 1e-10


def check_rotated_recovery_convergence(data) -> tuple[float, float]:
    s = ch.Superoperator(_arr(data["s"]))
    hs = HamiltonianSpec.from_diagonal(_vec(data["hs"]))
    beta = float(data["beta"])
    rho = _density(data["rho"])
    tau = gibbs_state(hs, beta).state
    sigma = s.apply_state(rho)
    bounds = []
    for nodes in (64, 128):
        avg = ch.rotated_recovery_average(s, tau, sigma, ch.QuadratureSpec(nodes=nodes))
        bounds.append(-2.0 * math.log(fidelity(rho, avg).root))
    return abs(bounds[0] - bounds[1]), 1e-8


# ---------------------------------------------------------------------------
# oscillator checks
# ---------------------------------------------------------------------------

def check_oscillator_pipeline(data) -> tuple[float, float]:
    inst = osc.OscillatorInstance.create(float(data["beta_e"]), float(data["p0"]))
    closed = osc.invest_bound(inst)
    rho = DensityMatrix(np.diag([inst.p0, 1.0 - inst.p0]).astype(complex))
    ground = DensityMatrix(basis_projector(2, 0))
    generic = wb.recovery_invest_bound(rho, ground, osc.thermal_operation(inst))
    return abs(closed - generic), 1e-8


def check_oscillator_populations(data) -> tuple[float, float]:
    inst = osc.OscillatorInstance.create(float(data["beta_e"]), float(data["p0"]))
    return osc.population_residual(inst), 1e-9


def check_oscillator_ground_case(data) -> tuple[float, float]:
    inst = osc.OscillatorInstance.create(float(data["beta_e"]), 1.0)
    return abs(osc.invest_bound(inst)), 1e-12


def check_oscillator_thermal_case(data) -> tuple[float, float]:
    beta_e = float(data["beta_e"])
    z_s = 1.0 + math.exp(-beta_e)
    inst = osc.OscillatorInstance.create(beta_e, 1.0 / z_s)
    bound = osc.invest_bound(inst)
    closed_gap = abs(bound - math.log(z_s))
    tau = gibbs_state(HamiltonianSpec.from_diagonal([0.0, 1.0]), beta_e).state
    ground = DensityMatrix(basis_projector(2, 0))
    nano = wb.nano_invest_bound(tau, ground, tau)
    tightness_gap = abs(nano.value - bound)
    return max(closed_gap, tightness_gap), 1e-9


def check_oscillator_bathlike_case(data) -> tuple[float, float]:
    beta_e = float(data["beta_e"])
    x = math.exp(-beta_e)
    inst = osc.OscillatorInstance.create(beta_e, 1.0 - x)
    expected = -math.log(1.0 + x * x - x)
    return abs(osc.invest_bound(inst) - expected), 1e-9


def check_oscillator_monotonicity(data) -> tuple[float, float]:
    beta_e = float(data["beta_e"])
    z_s = 1.0 + math.exp(-beta_e)
    grid = np.linspace(1.0 / z_s, 1.0, int(data.get("points", 12)))
    bounds = [
        osc.invest_bound(osc.OscillatorInstance.create(beta_e, p)) for p in grid
    ]
    worst = max(bounds[i + 1] - bounds[i] for i in range(len(bounds) - 1))
    return max(0.0, worst), 1e-10


# ---------------------------------------------------------------------------
# catalysis checks
# ---------------------------------------------------------------------------

def _ncto_from(data) -> cat.NctoInstance:
    beta = float(data["beta"])
    hs = HamiltonianSpec.from_diagonal(_vec(data["hs"]))
    hb = HamiltonianSpec.from_diagonal(_vec(data["hb"]))
    catalysts = cat.CatalystSet(
        tuple(
            cat.Catalyst(_density(eta), HamiltonianSpec.from_diagonal(_vec(hc)))
            for eta, hc in zip(data["etas"], data["hcs"])
        )
    )
    return cat.NctoInstance(_arr(data["v"]), hs, gibbs_state(hb, beta), catalysts)


def check_catalysis_product_return(data) -> tuple[float, float] | None:
    inst = _ncto_from(data)
    report = cat.check_fixed_point_product(inst)
    if not report.premises_hold:
        return None
    return float(report.global_residual), 1e-8


def check_catalysis_identity(data) -> tuple[float, float] | None:
    inst = _ncto_from(data)
    if not cat.check_fixed_point_product(inst).premises_hold:
        return None
    rho = _density(data["rho"])
    result = cat.apply_ncto(inst, rho)
    tau = inst.tau_system()
    dlt = (
        relative_entropy(rho, tau).value
        - relative_entropy(result.sigma_s, tau).value
    )
    env = inst.input_environment()
    v = inst.v.matrix
    back = v.conj().T @ np.kron(result.sigma_s.matrix, env) @ v
    rhs = relative_entropy(
        DensityMatrix(np.kron(rho.matrix, env)), DensityMatrix(back)
    ).value
    return abs(dlt - rhs), 1e-9


def check_catalysis_chain(data) -> tuple[float, float] | None:
    inst = _ncto_from(data)
    if not cat.check_fixed_point_product(inst).premises_hold:
        return None
    chain = cat.recovery_chain(inst, _density(data["rho"]))
    violation = max(
        0.0,
        chain.d_recovery - chain.delta,
        chain.neg_log_fidelity - chain.d_recovery,
    )
    return violation, 1e-10


def check_catalysis_energy(data) -> tuple[float, float]:
    inst = _ncto_from(data)
    rho = _density(data["rho"])
    h_total = combine_hamiltonians(
        [inst.system, inst.bath.hamiltonian, *inst.catalysts.hamiltonians]
    ).operator.matrix
    before = np.kron(rho.matrix, inst.input_environment())
    after = inst.v.matrix @ before @ inst.v.matrix.conj().T
    shift = abs(float(np.trace(h_total @ (after - before)).real))
    return shift, 1e-10


CHECKS: dict[str, Callable[[dict], tuple[float, float] | None]] = {
    "tensor_ptrace_adjointness": check_tensor_ptrace_adjointness,
    "matrix_function_identity": check_matrix_function_identity,
    "hermiticity_preservation": check_hermiticity_preservation,
    "data_processing": check_data_processing,
    "alpha_monotonicity": check_alpha_monotonicity,
    "divergence_ordering": check_divergence_ordering,
    "divergence_invariance": check_divergence_invariance,
    "rewrite_identity": check_rewrite_identity,
    "entropy_difference_identity": check_entropy_difference_identity,
    "recovery_chain": check_recovery_chain,
    "petz_reversal_equality": check_petz_reversal_equality,
    "adjoint_duality": check_adjoint_duality,
    "rotated_recovery_bound": check_rotated_recovery_bound,
    "rotated_recovery_convergence": check_rotated_recovery_convergence,
    "oscillator_pipeline": check_oscillator_pipeline,
    "oscillator_populations": check_oscillator_populations,
    "oscillator_ground_case": check_oscillator_ground_case,
    "oscillator_thermal_case": check_oscillator_thermal_case,
    "oscillator_bathlike_case": check_oscillator_bathlike_case,
    "oscillator_monotonicity": check_oscillator_monotonicity,
    "catalysis_product_return": check_catalysis_product_return,
    "catalysis_identity": check_catalysis_identity,
    "catalysis_chain": check_catalysis_chain,
    "catalysis_energy": check_catalysis_energy,
}


# ---------------------------------------------------------------------------
# instance generators
# ---------------------------------------------------------------------------

def _random_spectrum(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Integer spectra keep the total Hamiltonian commensurate, so random
    energy-conserving unitaries get blocks of nontrivial size."""
    if rng.random() < 0.5:
        return np.arange(dim, dtype=float)
    return rng.integers(0, 4, size=dim).astype(float)


def _random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel_data(rng: np.random.Generator, ds: int, db: int) -> dict:
    """A random thermal-operation instance plus a random full-rank input."""
    hs = _random_spectrum(rng, ds)
    hb = _random_spectrum(rng, db)
    beta = 0.3 + 1.4 * rng.random()
    total = combine_hamiltonians(
        [HamiltonianSpec.from_diagonal(hs), HamiltonianSpec.from_diagonal(hb)]
    )
    v = ch.sample_energy_conserving_unitary(total, rng)
    rho = random_density(ds, rng, min_eigenvalue=1e-3)
    return {
        "v": v.matrix,
        "hs": hs,
        "hb": hb,
        "beta": beta,
        "rho": rho.matrix,
        "obs_a": HermitianOperator(_random_herm(rng, ds)).matrix,
        "obs_b": HermitianOperator(_random_herm(rng, ds)).matrix,
    }


def _random_herm(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2


def random_gp_data(
    rng: np.random.Generator, ds: int, bath_dims: Sequence[int]
) -> dict:
    """A Gibbs-preserving map built as a convex mixture of thermal operations
    sharing the system Hamiltonian and temperature."""
    hs = _random_spectrum(rng, ds)
    beta = 0.3 + 1.4 * rng.random()
    hs_spec = HamiltonianSpec.from_diagonal(hs)
    n_parts = int(rng.integers(2, 4))
    weights = rng.dirichlet(np.ones(n_parts))
    s = np.zeros((ds * ds, ds * ds), dtype=complex)
    for k in range(n_parts):
        db = int(rng.choice(list(bath_dims)))
        hb = HamiltonianSpec.from_diagonal(_random_spectrum(rng, db))
        total = combine_hamiltonians([hs_spec, hb])
        v = ch.sample_energy_conserving_unitary(total, rng)
        t = ch.ThermalOperation(v, hs_spec, gibbs_state(hb, beta))
        s += weights[k] * ch.to_superoperator(t).matrix
    rho = random_density(ds, rng, min_eigenvalue=1e-3)
    return {"s": s, "hs": hs, "beta": beta, "rho": rho.matrix}


_CATALYSIS_KINDS = (
    "identity", "spectral", "system_bath", "swap", "diag_phases", "random",
)


def random_catalysis_data(
    rng: np.random.Generator,
    ds: int,
    db: int,
    catalyst_dims: Sequence[int],
    kind: str | None = None,
) -> dict:
    """One catalytic instance. Constructed kinds are guaranteed to satisfy the
    fixed-point premises; "random" usually does not and exercises the
    not-applicable path."""
    if kind is None:
        kind = _CATALYSIS_KINDS[int(rng.integers(0, len(_CATALYSIS_KINDS)))]
    beta = 0.3 + 1.4 * rng.random()
    hs = _random_spectrum(rng, ds)
    hb = _random_spectrum(rng, db)
    hs_spec = HamiltonianSpec.from_diagonal(hs)
    hb_spec = HamiltonianSpec.from_diagonal(hb)

    if kind == "swap":
        catalyst_dims = (ds,)
        hcs = [hs.copy()]
        etas = [gibbs_state(hs_spec, beta).state.matrix]
    else:
        hcs = [_random_spectrum(rng, dc) for dc in catalyst_dims]
        etas = []
        for dc in catalyst_dims:
            if kind == "system_bath":
                etas.append(random_density(dc, rng, min_eigenvalue=1e-3).matrix)
            else:
                # diagonal catalyst states commute with their Hamiltonians,
                # which the spectral/diagonal constructions rely on
                probs = rng.dirichlet(np.ones(dc)) + 1e-3
                probs /= probs.sum()
                etas.append(np.diag(probs).astype(complex))

    specs = [hs_spec, hb_spec] + [HamiltonianSpec.from_diagonal(hc) for hc in hcs]
    total = combine_hamiltonians(specs)
    dim = total.dim

    if kind == "identity":
        v = np.eye(dim, dtype=complex)
    elif kind == "spectral":
        theta = 2.0 * np.pi * rng.random()
        v = np.diag(np.exp(1j * theta * total.energies))
    elif kind == "system_bath":
        sb_total = combine_hamiltonians([hs_spec, hb_spec])
        v_sb = ch.sample_energy_conserving_unitary(sb_total, rng).matrix
        v = np.kron(v_sb, np.eye(math.prod(catalyst_dims)))
    elif kind == "swap":
        v = _swap_system_catalyst(ds, db)
    elif kind == "diag_phases":
        v = np.diag(np.exp(2j * np.pi * rng.random(dim)))
    elif kind == "random":
        v = ch.sample_energy_conserving_unitary(total, rng).matrix
    else:
        raise ValueError(f"unknown catalysis kind {kind!r}")

    rho = random_density(ds, rng, min_eigenvalue=1e-3)
    return {
        "v": v,
        "hs": hs,
        "hb": hb,
        "hcs": hcs,
        "etas": etas,
        "beta": beta,
        "rho": rho.matrix,
        "kind": kind,
    }


def _swap_system_catalyst(ds: int, db: int) -> np.ndarray:
    """Permutation exchanging the system with a same-dimension catalyst across
    the bath factor (ordering S, B, C)."""
    dim = ds * db * ds
    v = np.zeros((dim, dim), dtype=complex)
    for s in range(ds):
        for b in range(db):
            for c in range(ds):
                src = (s * db + b) * ds + c
                dst = (c * db + b) * ds + s
                v[dst, src] = 1.0
    return v


# ---------------------------------------------------------------------------
# suite driver
# ---------------------------------------------------------------------------

@dataclass
class SuiteResult:
    name: str
    trials: int
    passes: int = 0
    failures: int = 0
    skipped: int = 0
    max_residual: float = 0.0
    counterexample: dict | None = None
    by_check: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failures == 0


def _ce_json(value):
    if isinstance(value, np.ndarray):
        if value.ndim == 2:
            return matrix_to_json(value.astype(complex))
        return [float(x) for x in value]
    if isinstance(value, (list, tuple)):
        return [_ce_json(v) for v in value]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    return value


def _run_suite(
    name: str,
    ordinal: int,
    seed: int,
    trials: int,
    make_trial: Callable[[np.random.Generator, int], Iterable[tuple[str, dict]]],
    workers: int = 1,
) -> SuiteResult:
    result = SuiteResult(name=name, trials=trials)

    def one(idx: int):
        rng = np.random.default_rng((seed, ordinal, idx))
        outcomes = []
        for check_name, data in make_trial(rng, idx):
            out = CHECKS[check_name](data)
            outcomes.append((check_name, data, out))
        return outcomes

    if workers > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(one, range(trials)))
    else:
        per_trial = [one(i) for i in range(trials)]

    for idx, outcomes in enumerate(per_trial):
        for check_name, data, out in outcomes:
            stats = result.by_check.setdefault(
                check_name, {"pass": 0, "fail": 0, "skip": 0}
            )
            if out is None:
                result.skipped += 1
                stats["skip"] += 1
                continue
            residual, tol = out
            result.max_residual = max(result.max_residual, residual)
            if residual <= tol:
                result.passes += 1
                stats["pass"] += 1
            else:
                result.failures += 1
                stats["fail"] += 1
                if result.counterexample is None:
                    result.counterexample = {
                        "suite": name,
                        "check": check_name,
                        "seed": seed,
                        "trial": idx,
                        "residual": float(residual),
                        "tolerance": float(tol),
                        "data": {k: _ce_json(v) for k, v in data.items()},
                    }
    return result


def _pick(rng: np.random.Generator, values: Sequence[int]) -> int:
    return int(values[int(rng.integers(0, len(values)))])


def operator_core_suite(seed, trials, dims=(2, 3, 4), workers=1) -> SuiteResult:
    def make(rng, idx):
        da = _pick(rng, dims)
        db = _pick(rng, dims)
        a = _random_herm(rng, da)
        m = _random_herm(rng, da * db)
        u = _random_unitary(rng, da * db)
        yield "tensor_ptrace_adjointness", {"a": a, "m": m, "dim_a": da, "dim_b": db}
        yield "matrix_function_identity", {"m": _random_herm(rng, da)}
        yield "hermiticity_preservation", {"a": a, "b": _random_herm(rng, db), "u": u}

    return _run_suite("operator-core", 0, seed, trials, make, workers)


def divergence_suite(seed, trials, dims=(2, 3), workers=1) -> SuiteResult:
    def make(rng, idx):
        dc = _pick(rng, dims)
        dd = _pick(rng, dims)
        rho = random_density(dc * dd, rng, min_eigenvalue=1e-3)
        sigma = random_density(dc * dd, rng, min_eigenvalue=1e-3)
        yield "data_processing", {
            "rho": rho.matrix, "sigma": sigma.matrix, "dim_c": dc, "dim_d": dd,
        }
        d = _pick(rng, dims)
        p = rng.dirichlet(np.ones(d)) + 1e-4
        q = rng.dirichlet(np.ones(d)) + 1e-4
        yield "alpha_monotonicity", {"p": p / p.sum(), "q": q / q.sum()}
        r2 = random_density(d, rng, min_eigenvalue=1e-3)
        s2 = random_density(d, rng, min_eigenvalue=1e-3)
        yield "divergence_ordering", {"rho": r2.matrix, "sigma": s2.matrix}
        yield "divergence_invariance", {
            "rho": r2.matrix,
            "sigma": s2.matrix,
            "u": _random_unitary(rng, d),
            "gamma": random_density(_pick(rng, dims), rng, min_eigenvalue=1e-2).matrix,
        }
        yield "rewrite_identity", {
            "eta": rho.matrix, "theta": sigma.matrix, "dim_c": dc, "dim_d": dd,
        }

    return _run_suite("divergence", 1, seed, trials, make, workers)


def channel_suite(
    seed, trials, system_dims=(2, 3), bath_dims=(2, 3, 4), workers=1, fixture=None
) -> SuiteResult:
    def make(rng, idx):
        data = random_channel_data(rng, _pick(rng, system_dims), _pick(rng, bath_dims))
        yield "entropy_difference_identity", data
        yield "recovery_chain", data
        yield "petz_reversal_equality", data
        yield "adjoint_duality", data

    result = _run_suite("channel", 2, seed, trials, make, workers)
    if fixture is not None:
        rng = np.random.default_rng((seed, 2, 10**6))
        hs = _vec(fixture["hs"])
        data = {
            "v": _arr(fixture["v"]),
            "hs": hs,
            "hb": _vec(fixture["hb"]),
            "beta": float(fixture["beta"]),
            "rho": random_density(len(hs), rng, min_eigenvalue=1e-3).matrix,
        }
        out = CHECKS["entropy_difference_identity"](data)
        residual, tol = out
        result.max_residual = max(result.max_residual, residual)
        stats = result.by_check.setdefault(
            "entropy_difference_identity", {"pass": 0, "fail": 0, "skip": 0}
        )
        if residual <= tol:
            result.passes += 1
            stats["pass"] += 1
        else:
            result.failures += 1
            stats["fail"] += 1
            if result.counterexample is None:
                result.counterexample = {
                    "suite": "channel",
                    "check": "entropy_difference_identity",
                    "seed": seed,
                    "trial": -1,
                    "residual": float(residual),
                    "tolerance": float(tol),
                    "data": {k: _ce_json(v) for k, v in data.items()},
                }
    return result


def rotated_suite(seed, trials, system_dims=(2, 3), bath_dims=(2, 3, 4), workers=1) -> SuiteResult:
    def make(rng, idx):
        data = random_gp_data(rng, _pick(rng, system_dims), bath_dims)
        yield "rotated_recovery_bound", data
        if idx % 4 == 0:  # node-doubling costs two full quadratures
            yield "rotated_recovery_convergence", data

    return _run_suite("rotated-recovery", 3, seed, trials, make, workers)


def oscillator_suite(seed, trials, workers=1) -> SuiteResult:
    betas = (0.5, 1.0, 2.0)

    def make(rng, idx):
        beta_e = betas[idx % len(betas)]
        lo = 1.0 - math.exp(-beta_e)
        p0 = lo + (1.0 - lo) * rng.random()
        yield "oscillator_populations", {"beta_e": beta_e, "p0": p0}
        yield "oscillator_pipeline", {"beta_e": beta_e, "p0": p0}
        if idx < len(betas):
            yield "oscillator_ground_case", {"beta_e": beta_e}
            yield "oscillator_thermal_case", {"beta_e": beta_e}
            yield "oscillator_bathlike_case", {"beta_e": beta_e}
            yield "oscillator_monotonicity", {"beta_e": beta_e, "points": 12}

    return _run_suite("oscillator", 4, seed, trials, make, workers)


def catalysis_suite(
    seed,
    trials,
    system_dims=(2,),
    bath_dims=(2, 3),
    catalyst_dims=((2,), (2, 2)),
    workers=1,
) -> SuiteResult:
    def make(rng, idx):
        ds = _pick(rng, system_dims)
        db = _pick(rng, bath_dims)
        cdims = catalyst_dims[int(rng.integers(0, len(catalyst_dims)))]
        data = random_catalysis_data(rng, ds, db, cdims)
        yield "catalysis_product_return", data
        yield "catalysis_identity", data
        yield "catalysis_chain", data
        yield "catalysis_energy", data

    return _run_suite("catalysis", 5, seed, trials, make, workers)


def run_all(
    seed: int,
    trials: int = 200,
    system_dims: Sequence[int] = (2, 3),
    bath_dims: Sequence[int] = (2, 3, 4),
    fixture: dict | None = None,
    workers: int = 1,
) -> list[SuiteResult]:
    """Run every property suite; heavier suites get proportionally fewer trials."""
    rotated_trials = trials // 2 if trials else 0
    osc_trials = max(3, min(trials, 30)) if trials else 0
    return [
        operator_core_suite(seed, trials, workers=workers),
        divergence_suite(seed, trials, dims=tuple(system_dims), workers=workers),
        channel_suite(seed, trials, system_dims, bath_dims, workers, fixture),
        rotated_suite(seed, rotated_trials, system_dims, bath_dims, workers),
        oscillator_suite(seed, osc_trials, workers=workers),
        catalysis_suite(seed, trials, workers=workers),
    ]


def replay_counterexample(dump: dict) -> dict:
    """Re-run a dumped counterexample through the original check."""
    if not isinstance(dump, dict) or "check" not in dump or "data" not in dump:
        raise ValidationError("counterexample dump needs 'check' and 'data' keys")
    check_name = dump["check"]
    if check_name not in CHECKS:
        raise ValidationError(f"unknown check {check_name!r}")
    out = CHECKS[check_name](dump["data"])
    if out is None:
        return {"check": check_name, "status": "not_applicable"}
    residual, tol = out
    return {
        "check": check_name,
        "status": "fail" if residual > tol else "pass",
        "residual": residual,
        "tolerance": tol,
    }


def dump_counterexample(ce: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ce, indent=2) + "\n", encoding="utf-8")
