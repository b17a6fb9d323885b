import numpy as np
import pytest

from thermo_recover import (
    DensityMatrix,
    HamiltonianSpec,
    ThermalOperation,
    ValidationError,
    apply,
    combine_hamiltonians,
    gibbs_state,
    random_density,
    relative_entropy,
    reversal,
    sample_energy_conserving_unitary,
)
from thermo_recover.catalysis import (
    Catalyst,
    CatalystSet,
    NctoInstance,
    apply_ncto,
    check_fixed_point_product,
    classify,
    recovery_chain,
    reversal_ncto,
)
from thermo_recover.verify import random_catalysis_data, _ncto_from


def ladder(d):
    return HamiltonianSpec.from_diagonal(np.arange(d, dtype=float))


def make_instance(v, ds=2, db=2, dc=2, beta=1.0, eta=None, hc=None):
    hs, hb = ladder(ds), ladder(db)
    hc = hc if hc is not None else ladder(dc)
    if eta is None:
        probs = np.full(hc.dim, 1.0 / hc.dim)
        eta = DensityMatrix(np.diag(probs).astype(complex))
    cats = CatalystSet((Catalyst(eta, hc),))
    return NctoInstance(v, hs, gibbs_state(hb, beta), cats)


def test_identity_unitary_gives_product_output():
    inst = make_instance(np.eye(8, dtype=complex))
    rng = np.random.default_rng(0)
    rho = random_density(2, rng)
    result = apply_ncto(inst, rho)
    assert result.returns_ok
    eta = inst.catalysts.states[0]
    np.testing.assert_allclose(
        result.sigma_sc.matrix, np.kron(rho.matrix, eta.matrix), atol=1e-12
    )
    np.testing.assert_allclose(result.sigma_s.matrix, rho.matrix, atol=1e-12)


def test_no_catalysts_reduces_to_thermal_operation():
    hs, hb = ladder(2), ladder(3)
    total = combine_hamiltonians([hs, hb])
    v = sample_energy_conserving_unitary(total, 3)
    inst = NctoInstance(v, hs, gibbs_state(hb, 1.0), CatalystSet(()))
    t = ThermalOperation(v, hs, gibbs_state(hb, 1.0))
    rng = np.random.default_rng(1)
    rho = random_density(2, rng)
    result = apply_ncto(inst, rho)
    np.testing.assert_allclose(result.sigma_s.matrix, apply(t, rho).matrix, atol=1e-13)
    assert result.catalyst_residuals == ()
    assert result.returns_ok


def test_swap_with_thermal_catalyst():
    # swap between system and an identical-Hamiltonian catalyst holding the
    # thermal state: at the designated input tau_S the catalyst returns and
    # the system stays thermal; away from it the return constraint fails
    from thermo_recover.verify import _swap_system_catalyst

    beta = 1.0
    hs = ladder(2)
    tau = gibbs_state(hs, beta).state
    inst = make_instance(
        _swap_system_catalyst(2, 2), eta=tau, hc=hs, beta=beta
    )
    at_fixed_point = apply_ncto(inst, tau)
    assert at_fixed_point.returns_ok
    np.testing.assert_allclose(at_fixed_point.sigma_s.matrix, tau.matrix, atol=1e-12)

    rng = np.random.default_rng(2)
    rho = random_density(2, rng, min_eigenvalue=1e-2)
    away = apply_ncto(inst, rho)
    np.testing.assert_allclose(away.sigma_s.matrix, tau.matrix, atol=1e-12)
    assert not away.returns_ok  # the catalyst absorbed the input state


def test_fixed_point_product_identity_unitary():
    inst = make_instance(np.eye(8, dtype=complex))
    report = check_fixed_point_product(inst)
    assert report.status == "holds"
    assert report.global_residual <= 1e-12
    assert abs(report.bath_energy_shift) <= 1e-12
    assert abs(report.bath_entropy_gap) <= 1e-12


def test_fixed_point_product_spectral_phases():
    hs, hb, hc = ladder(2), ladder(2), ladder(2)
    total = combine_hamiltonians([hs, hb, hc])
    v = np.diag(np.exp(0.37j * total.energies))
    inst = make_instance(v)
    report = check_fixed_point_product(inst)
    assert report.status == "holds"


def test_fixed_point_product_system_bath_factor():
    # a unitary acting only on system+bath preserves the full product for any
    # catalyst state
    hs, hb = ladder(2), ladder(3)
    sb = combine_hamiltonians([hs, hb])
    v_sb = sample_energy_conserving_unitary(sb, 7).matrix
    rng = np.random.default_rng(3)
    eta = random_density(2, rng, min_eigenvalue=1e-2)
    inst = make_instance(np.kron(v_sb, np.eye(2)), db=3, eta=eta)
    report = check_fixed_point_product(inst)
    assert report.status == "holds"
    assert report.global_residual <= 1e-8


def test_fixed_point_premise_failure_reported():
    # swap with a non-thermal catalyst: marginals do not return
    from thermo_recover.verify import _swap_system_catalyst

    eta = DensityMatrix(np.diag([0.95, 0.05]))
    inst = make_instance(_swap_system_catalyst(2, 2), eta=eta, hc=ladder(2))
    report = check_fixed_point_product(inst)
    assert report.status == "not_applicable"
    assert report.global_residual is None


def test_reversal_ncto_involution_and_consistency():
    data = random_catalysis_data(np.random.default_rng(4), 2, 2, (2,), kind="random")
    inst = _ncto_from(data)
    rev = reversal_ncto(inst)
    back = reversal_ncto(rev)
    np.testing.assert_allclose(back.v.matrix, inst.v.matrix, atol=1e-14)

    # with no catalysts the reversal matches the channel-level reversal
    hs, hb = ladder(2), ladder(3)
    total = combine_hamiltonians([hs, hb])
    v = sample_energy_conserving_unitary(total, 9)
    inst0 = NctoInstance(v, hs, gibbs_state(hb, 1.0), CatalystSet(()))
    t = ThermalOperation(v, hs, gibbs_state(hb, 1.0))
    rng = np.random.default_rng(5)
    rho = random_density(2, rng)
    np.testing.assert_allclose(
        apply_ncto(reversal_ncto(inst0), rho).sigma_s.matrix,
        apply(reversal(t), rho).matrix,
        atol=1e-13,
    )


def test_recovery_chain_on_premise_passing_instances():
    rng = np.random.default_rng(6)
    exercised = 0
    for kind in ("identity", "spectral", "system_bath", "diag_phases", "swap"):
        for _ in range(100):
            data = random_catalysis_data(rng, 2, 2, (2,), kind=kind)
            inst = _ncto_from(data)
            if not check_fixed_point_product(inst).premises_hold:
                continue
            rho = random_density(2, rng, min_eigenvalue=1e-3)
            chain = recovery_chain(inst, rho)
            assert chain.chain_ok, (kind, chain)
            exercised += 1
    assert exercised >= 500


def test_general_identity_specialization():
    # with the fixed-point product premise, the entropy difference equals the
    # divergence between joint input and inverse-evolved joint output
    rng = np.random.default_rng(7)
    checked = 0
    for kind in ("spectral", "system_bath", "diag_phases"):
        for _ in range(10):
            data = random_catalysis_data(rng, 2, 2, (2,), kind=kind)
            inst = _ncto_from(data)
            if not check_fixed_point_product(inst).premises_hold:
                continue
            rho = random_density(2, rng, min_eigenvalue=1e-3)
            result = apply_ncto(inst, rho)
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
            assert abs(dlt - rhs) <= 1e-9
            checked += 1
    assert checked >= 25


def test_energy_bookkeeping():
    rng = np.random.default_rng(8)
    for _ in range(20):
        data = random_catalysis_data(rng, 2, 2, (2,), kind="random")
        inst = _ncto_from(data)
        rho = random_density(2, rng)
        h = combine_hamiltonians(
            [inst.system, inst.bath.hamiltonian, *inst.catalysts.hamiltonians]
        ).operator.matrix
        before = np.kron(rho.matrix, inst.input_environment())
        after = inst.v.matrix @ before @ inst.v.matrix.conj().T
        assert abs(float(np.trace(h @ (after - before)).real)) <= 1e-10


def test_classification_flags():
    inst = make_instance(np.eye(8, dtype=complex))
    rng = np.random.default_rng(9)
    rho = random_density(2, rng)
    flags = classify(inst, rho)
    assert flags.is_ncto and flags.is_ccto and flags.is_cto
    assert flags.system_catalyst_correlation <= 1e-12

    hs, hb = ladder(2), ladder(3)
    total = combine_hamiltonians([hs, hb])
    v = sample_energy_conserving_unitary(total, 10)
    bare = NctoInstance(v, hs, gibbs_state(hb, 1.0), CatalystSet(()))
    flags0 = classify(bare, rho)
    assert flags0.is_ncto and flags0.is_ccto and not flags0.is_cto


def test_catalyst_dimension_validation():
    eta = DensityMatrix(np.eye(2) / 2)
    with pytest.raises(ValidationError):
        CatalystSet((Catalyst(eta, ladder(3)),))
