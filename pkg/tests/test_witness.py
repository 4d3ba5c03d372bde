"""控制比特约化态、纯度、熵与能量估计量"""
import numpy as np
import pytest
from scipy.linalg import expm

from conftest import random_pauli_sum, random_state
from core.pauli_algebra import HermitianEigensystem, eigendecompose, parse_pauli_sum, to_dense
from core.statevector import StateVector, eigenbasis_amplitudes, from_eigenbasis
from core.witness import (ControlQubitState, NoisyTomography, PhaseUndefinedError, arm_density,
                          choose_evolution_time, control_density, density_objective, energy_estimator,
                          linear_entropy, objective, purity, time_averaged_purity, tomography_sample,
                          von_neumann_entropy, witness_readout)


def hadamard_test_control_state(state: StateVector, hamiltonian_matrix: np.ndarray, t: float) -> np.ndarray:
    """完整 Hadamard 测试线路后对目标寄存器求偏迹，控制比特为最高位"""
    psi = state.amplitudes
    blocks = np.vstack([psi, expm(-1j * t * hamiltonian_matrix) @ psi]) / np.sqrt(2)
    return blocks @ blocks.conj().T


class TestControlDensity:

    def test_purity_matches_eigenbasis_formula(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 5))
            pauli_sum = random_pauli_sum(n, int(rng.integers(1, 8)), rng)
            eigensystem = eigendecompose(pauli_sum)
            state = random_state(n, rng)
            t = float(rng.uniform(-5, 5))
            weights = np.abs(eigenbasis_amplitudes(state, eigensystem)) ** 2
            phases = eigensystem.eigenvalues * t
            expected = 0.5 + 0.5 * np.sum(np.outer(weights, weights) * np.cos(np.subtract.outer(phases, phases)))
            assert abs(purity(control_density(state, eigensystem, t)) - expected) < 1e-10

    def test_matches_full_hadamard_test(self, rng):
        pauli_sum = random_pauli_sum(2, 5, rng)
        state = random_state(2, rng)
        rho = control_density(state, eigendecompose(pauli_sum), 0.9)
        assert np.allclose(rho.rho, hadamard_test_control_state(state, to_dense(pauli_sum), 0.9), atol=1e-10)

    def test_eigenstate_is_pure_and_reads_its_energy(self, exciton_oracle):
        state = exciton_oracle.ground.basis[0]
        rho = control_density(state, exciton_oracle.eigensystem, 2.0)
        assert np.isclose(purity(rho), 1.0)
        assert np.isclose(energy_estimator(rho, 2.0), exciton_oracle.ground.eigenvalue)

    def test_energy_aliases_at_long_times(self, exciton_oracle):
        # λt = 0.183·26 > π，估计值落在 (-π/t, π/t]
        state = exciton_oracle.ground.basis[0]
        energy = energy_estimator(control_density(state, exciton_oracle.eigensystem, 26.0), 26.0)
        assert -np.pi / 26 < energy <= np.pi / 26
        assert np.isclose(energy, exciton_oracle.ground.eigenvalue - 2 * np.pi / 26)

    def test_equal_superposition_at_half_period_has_no_phase(self, exciton_oracle):
        eigensystem = exciton_oracle.eigensystem
        gap = eigensystem.eigenvalues[1] - eigensystem.eigenvalues[0]
        state = from_eigenbasis([1 / np.sqrt(2), 1 / np.sqrt(2)], eigensystem)
        rho = control_density(state, eigensystem, np.pi / gap)
        assert np.isclose(purity(rho), 0.5)
        with pytest.raises(PhaseUndefinedError):
            energy_estimator(rho, np.pi / gap)

    def test_energy_range_includes_upper_endpoint(self):
        # <U> = -1 时 Arg 为 π，估计值取区间上端 π/t
        rho = ControlQubitState.from_bloch(-1.0, 0.0, 0.0)
        assert np.isclose(energy_estimator(rho, 2.0), np.pi / 2)

    def test_zero_time(self, exciton_oracle):
        rho = control_density(exciton_oracle.ground.basis[0], exciton_oracle.eigensystem, 0.0)
        with pytest.raises(PhaseUndefinedError):
            energy_estimator(rho, 0.0)
        assert witness_readout(rho, 0.0).energy is None

    def test_infinite_time_rejected(self, exciton_oracle):
        with pytest.raises(ValueError):
            control_density(exciton_oracle.ground.basis[0], exciton_oracle.eigensystem, np.inf)


class TestArmDensity:

    def test_identical_arms_match_single_state(self, rng):
        for _ in range(10):
            eigensystem = eigendecompose(random_pauli_sum(2, 4, rng))
            state = random_state(2, rng)
            t = float(rng.uniform(0.1, 3.0))
            assert np.allclose(arm_density(state, state, eigensystem, t).rho,
                               control_density(state, eigensystem, t).rho)

    def test_phase_rotates_off_diagonal(self, exciton_oracle, rng):
        state = random_state(1, rng)
        eigensystem = exciton_oracle.eigensystem
        plain = arm_density(state, state, eigensystem, 1.0)
        shifted = arm_density(state, state, eigensystem, 1.0, phase=0.3)
        assert np.isclose(shifted.rho[1, 0], np.exp(0.3j) * plain.rho[1, 0])
        assert np.isclose(purity(shifted), purity(plain))

    def test_mismatched_arms_lose_purity(self, exciton_oracle):
        eigensystem = exciton_oracle.eigensystem
        ground, excited = exciton_oracle.subspaces[0].basis[0], exciton_oracle.subspaces[1].basis[0]
        rho = arm_density(ground, excited, eigensystem, 1.0)
        assert np.isclose(purity(rho), 0.5)
        with pytest.raises(PhaseUndefinedError):
            energy_estimator(rho, 1.0)


class TestEntropy:

    def test_entropy_bound_on_random_states(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 4))
            eigensystem = eigendecompose(random_pauli_sum(n, 4, rng))
            rho = control_density(random_state(n, rng), eigensystem, float(rng.uniform(0, 10)))
            assert von_neumann_entropy(rho) >= linear_entropy(rho) - 1e-9

    def test_pure_and_maximally_mixed(self):
        pure = ControlQubitState.from_bloch(0.0, 0.0, 1.0)
        mixed = ControlQubitState.from_bloch(0.0, 0.0, 0.0)
        assert np.isclose(von_neumann_entropy(pure), 0.0)
        assert np.isclose(von_neumann_entropy(mixed), np.log(2))
        assert np.isclose(linear_entropy(mixed), 0.5)

    def test_readout_fields(self, exciton_oracle):
        rho = control_density(exciton_oracle.ground.basis[0], exciton_oracle.eigensystem, 1.0)
        readout = witness_readout(rho, 1.0, shots_used=1500)
        assert readout.shots_used == 1500
        assert np.isclose(readout.purity, 1.0)
        assert readout.von_neumann_entropy >= readout.linear_entropy - 1e-9


class TestTimeAverage:

    def test_matches_long_time_average(self, rng):
        for _ in range(25):
            eigenvalues = np.array([0.0, 0.31, 0.57, 1.0]) + rng.uniform(0.0, 0.05, 4)
            q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
            eigensystem = HermitianEigensystem(eigenvalues, q)
            state = random_state(2, rng)
            gap = float(np.min(np.diff(eigenvalues)))
            times = np.linspace(0.0, 1e3 / gap, 4001)
            average = np.mean([purity(control_density(state, eigensystem, t)) for t in times])
            alphas = eigenbasis_amplitudes(state, eigensystem)
            assert abs(average - time_averaged_purity(alphas)) < 5e-3

    def test_requires_normalized(self):
        with pytest.raises(ValueError):
            time_averaged_purity(np.array([1.0, 1.0]))

    def test_single_eigenstate_is_one(self):
        assert time_averaged_purity(np.array([0.0, 1.0, 0.0])) == 1.0


class TestTomography:

    def test_noisy_estimate_is_physical_and_close(self, exciton_oracle, rng):
        rho = control_density(exciton_oracle.ground.basis[0], exciton_oracle.eigensystem, 3.0)
        estimates = [tomography_sample(rho, 1500, rng) for _ in range(50)]
        for estimate in estimates:
            assert np.linalg.norm(estimate.bloch_vector) <= 1.0 + 1e-9
        mean_bloch = np.mean([e.bloch_vector for e in estimates], axis=0)
        assert np.allclose(mean_bloch, rho.bloch_vector, atol=0.02)

    def test_poisson_model(self, exciton_oracle, rng):
        rho = control_density(exciton_oracle.ground.basis[0], exciton_oracle.eigensystem, 3.0)
        estimate = tomography_sample(rho, 1500, rng, model="poisson", peak_counts=200)
        assert np.linalg.norm(estimate.bloch_vector) <= 1.0 + 1e-9

    def test_same_seed_same_estimate(self, exciton_oracle):
        rho = control_density(exciton_oracle.ground.basis[0], exciton_oracle.eigensystem, 3.0)
        a = tomography_sample(rho, 100, np.random.default_rng(5))
        b = tomography_sample(rho, 100, np.random.default_rng(5))
        assert np.array_equal(a.rho, b.rho)

    def test_bad_model(self):
        with pytest.raises(ValueError):
            NoisyTomography(100, "gaussian")


class TestObjective:

    def test_ground_state_scores_lowest(self, exciton_oracle):
        eigensystem = exciton_oracle.eigensystem
        ground = objective(exciton_oracle.subspaces[0].basis[0], eigensystem, 26.0, 1.25, 1.0)
        excited = objective(exciton_oracle.subspaces[1].basis[0], eigensystem, 26.0, 1.25, 1.0)
        mixed = objective(from_eigenbasis([np.sqrt(0.5), np.sqrt(0.5)], eigensystem), eigensystem, 26.0, 1.25, 1.0)
        assert ground.value < excited.value
        assert ground.value < mixed.value

    def test_purity_only_skips_energy(self, exciton_oracle):
        value = objective(exciton_oracle.ground.basis[0], exciton_oracle.eigensystem, 1.0, 1.0, 0.0)
        assert value.energy is None
        assert np.isclose(value.value, -1.0)

    def test_record_components(self, exciton_oracle):
        value = objective(exciton_oracle.ground.basis[0], exciton_oracle.eigensystem, 1.0, 1.0, 0.0,
                          record_components=True)
        assert value.energy is not None and value.purity is not None

    def test_invalid_weights(self, exciton_oracle):
        with pytest.raises(ValueError):
            objective(exciton_oracle.ground.basis[0], exciton_oracle.eigensystem, 1.0, 0.0, 0.0)

    def test_noise_needs_generator(self, exciton_oracle):
        with pytest.raises(ValueError):
            objective(exciton_oracle.ground.basis[0], exciton_oracle.eigensystem, 1.0, 1.0, 1.0,
                      tomography=NoisyTomography())

    def test_undefined_phase_scores_upper_endpoint(self):
        mixed = ControlQubitState.from_bloch(0.0, 0.0, 0.0)
        value = density_objective(mixed, 2.0, 1.0, 1.0)
        assert value.energy is None
        assert np.isclose(value.purity, 0.5)
        assert np.isclose(value.value, np.pi / 2 - 0.5)

    def test_zero_time_needs_purity_only(self, exciton_oracle):
        rho = control_density(exciton_oracle.ground.basis[0], exciton_oracle.eigensystem, 0.0)
        with pytest.raises(PhaseUndefinedError):
            density_objective(rho, 0.0, 1.0, 1.0)
        assert np.isclose(density_objective(rho, 0.0, 1.0, 0.0).value, -1.0)


class TestEvolutionTime:

    def test_spectral_bound(self, exciton_oracle):
        t = choose_evolution_time(exciton_oracle.eigensystem)
        assert np.isclose(t * (0.257 - 0.183), np.pi / 2)

    def test_caller_bound(self, exciton_oracle):
        assert np.isclose(choose_evolution_time(exciton_oracle.eigensystem, "caller_bound", 2.0), np.pi / 4)
        with pytest.raises(ValueError):
            choose_evolution_time(exciton_oracle.eigensystem, "caller_bound")

    def test_degenerate_spectrum(self):
        with pytest.raises(ValueError):
            choose_evolution_time(eigendecompose(parse_pauli_sum("qubits 1\n2.0\n")))
