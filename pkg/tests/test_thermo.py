import math

import numpy as np
import pytest

from thermo_recover import (
    DensityMatrix,
    HamiltonianSpec,
    ValidationError,
    WitBattery,
    augment_with_wit,
    combine_hamiltonians,
    free_energy,
    gibbs_state,
    partial_trace,
    random_density,
    sample_energy_conserving_unitary,
)
from thermo_recover.linalg import CompositeSpace, max_abs


def test_gibbs_closed_form():
    # h = diag(0, E) with beta E = ln 2 gives populations (2/3, 1/3)
    h = HamiltonianSpec.from_diagonal([0.0, 1.0])
    g = gibbs_state(h, math.log(2.0))
    np.testing.assert_allclose(g.state.matrix, np.diag([2 / 3, 1 / 3]), atol=1e-14)
    assert abs(g.log_partition - math.log(1.5)) < 1e-14


def test_gibbs_infinite_temperature():
    h = HamiltonianSpec.from_diagonal([0.0, 3.0, 7.0])
    g = gibbs_state(h, 0.0)
    np.testing.assert_allclose(g.state.matrix, np.eye(3) / 3, atol=1e-14)


def test_gibbs_commutes_with_hamiltonian():
    rng = np.random.default_rng(0)
    for _ in range(10):
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        from thermo_recover import HermitianOperator

        h = HamiltonianSpec(HermitianOperator((m + m.conj().T) / 2))
        g = gibbs_state(h, 0.7)
        comm = g.state.matrix @ h.operator.matrix - h.operator.matrix @ g.state.matrix
        assert max_abs(comm) <= 1e-12


def test_gibbs_fixed_under_energy_conserving_unitary():
    h = HamiltonianSpec.from_diagonal([0.0, 1.0, 1.0, 2.0])
    g = gibbs_state(h, 1.3)
    v = sample_energy_conserving_unitary(h, 11)
    rotated = v.matrix @ g.state.matrix @ v.matrix.conj().T
    assert max_abs(rotated - g.state.matrix) <= 1e-12


def test_log_partition_matches_direct_sum():
    rng = np.random.default_rng(1)
    for _ in range(20):
        energies = rng.uniform(-2, 2, size=4)
        beta = rng.uniform(0.1, 3.0)
        g = gibbs_state(HamiltonianSpec.from_diagonal(energies), beta)
        direct = math.log(np.sum(np.exp(-beta * energies)))
        assert abs(g.log_partition - direct) < 1e-12


def test_free_energy_of_thermal_state():
    h = HamiltonianSpec.from_diagonal([0.0, 1.0, 2.5])
    beta = 0.8
    g = gibbs_state(h, beta)
    f = free_energy(g.state, h, beta)
    assert abs(f - (-g.log_partition / beta)) < 1e-10


def test_free_energy_two_level_example():
    # rho = |0><0| at beta E = 1: energy 0, entropy 0, so F = 0;
    # equivalently kT [D(rho||tau) - log Z] with D = log Z = log(1 + e^-1)
    h = HamiltonianSpec.from_diagonal([0.0, 1.0])
    rho = DensityMatrix(np.diag([1.0, 0.0]))
    f = free_energy(rho, h, 1.0)
    assert abs(f) < 1e-12
    from thermo_recover import relative_entropy

    tau = gibbs_state(h, 1.0)
    d = relative_entropy(rho, tau.state)
    assert abs(d.value - math.log(1.0 + math.exp(-1.0))) < 1e-12


def test_free_energy_variational_principle():
    rng = np.random.default_rng(2)
    h = HamiltonianSpec.from_diagonal([0.0, 1.0, 2.0])
    beta = 1.1
    f_tau = free_energy(gibbs_state(h, beta).state, h, beta)
    for _ in range(200):
        f = free_energy(random_density(3, rng), h, beta)
        assert f >= f_tau - 1e-10


def test_free_energy_rejects_zero_beta():
    h = HamiltonianSpec.from_diagonal([0.0, 1.0])
    with pytest.raises(ValidationError):
        free_energy(DensityMatrix(np.eye(2) / 2), h, 0.0)


def test_wit_roundtrip():
    rng = np.random.default_rng(3)
    rho = random_density(3, rng)
    w = WitBattery(gap=0.75)
    up = augment_with_wit(rho, w, 1)
    back = partial_trace(up, CompositeSpace((3, 2)), {0})
    np.testing.assert_allclose(back.matrix, rho.matrix, atol=1e-13)
    with pytest.raises(ValidationError):
        augment_with_wit(rho, w, 2)


def test_wit_free_energy_gap_is_work():
    # the battery is pure and uncorrelated, so raising it shifts F by exactly W
    rng = np.random.default_rng(4)
    h = HamiltonianSpec.from_diagonal([0.0, 1.0, 1.7])
    w = WitBattery(gap=0.6)
    hw = combine_hamiltonians([h, w.hamiltonian])
    beta = 0.9
    for _ in range(10):
        rho = random_density(3, rng)
        f0 = free_energy(augment_with_wit(rho, w, 0), hw, beta)
        f1 = free_energy(augment_with_wit(rho, w, 1), hw, beta)
        assert abs((f1 - f0) - w.gap) < 1e-9


def test_work_upper_bound_rearrangement():
    # W <= F(rho) - F(sigma) iff F(rho x |0><0|) >= F(sigma x |1><1|)
    rng = np.random.default_rng(5)
    h = HamiltonianSpec.from_diagonal([0.0, 1.0])
    beta = 1.0
    for _ in range(25):
        rho = random_density(2, rng)
        sigma = random_density(2, rng)
        gap = free_energy(rho, h, beta) - free_energy(sigma, h, beta)
        for w_val, expect in ((gap - 0.1, True), (gap + 0.1, False)):
            if w_val < 0:
                continue
            w = WitBattery(gap=w_val)
            hw = combine_hamiltonians([h, w.hamiltonian])
            lhs = free_energy(augment_with_wit(rho, w, 0), hw, beta)
            rhs = free_energy(augment_with_wit(sigma, w, 1), hw, beta)
            assert (lhs >= rhs - 1e-10) == expect


def test_combine_hamiltonians_diagonal_blocks():
    a = HamiltonianSpec.from_diagonal([0.0, 1.0])
    b = HamiltonianSpec.from_diagonal([0.0, 1.0, 2.0])
    total = combine_hamiltonians([a, b])
    np.testing.assert_allclose(total.energies, [0, 1, 2, 1, 2, 3])
    sizes = sorted(len(blk) for blk in total.blocks)
    assert sizes == [1, 1, 2, 2]


def test_hamiltonian_blocks_relative_tolerance():
    h = HamiltonianSpec.from_diagonal([0.0, 1e-12, 1.0])
    assert len(h.blocks) == 2  # the two near-zero energies group together
