import csv
import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlstab.dynamics import Propagator, convergence_report, evolve, trajectory, write_csv
from qlstab.generator import LindbladGenerator, liouvillian
from qlstab.statelib import ghz, ghz3_qls_generator, ghz_conditional_generator, w, w_conditional
from qlstab.tensor import DensityOperator, MultipartiteSpace

DECAY = np.array([[0, 1], [0, 0]], dtype=complex)
ONE_QUBIT = MultipartiteSpace.qubits(1)


def random_generator(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    L = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    return LindbladGenerator(MultipartiteSpace([3]), A + A.conj().T, L)


class TestEvolve:
    def test_decay(self):
        gen = LindbladGenerator(ONE_QUBIT, None, DECAY)
        rho = evolve(gen, [0, 1], 1.0)
        assert rho.fidelity([1, 0]) == pytest.approx(1 - np.exp(-1))
        assert rho.trace == pytest.approx(1)

    def test_zero_time(self):
        gen = LindbladGenerator(ONE_QUBIT, None, DECAY)
        rho = evolve(gen, DensityOperator.maximally_mixed(2), 0)
        assert np.allclose(rho.matrix, np.eye(2) / 2)

    def test_expm_path_agrees(self):
        gen = LindbladGenerator(ONE_QUBIT, None, DECAY)
        propagator = Propagator(liouvillian(gen))
        propagator.method = 'expm'
        rho = propagator.step(DensityOperator.pure([0, 1]), 1.0).state
        assert rho.fidelity([1, 0]) == pytest.approx(1 - np.exp(-1))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 5))
    def test_positivity_and_trace(self, seed, t):
        gen = random_generator(seed)
        rng = np.random.default_rng(seed + 7)
        psi = rng.normal(size=3) + 1j * rng.normal(size=3)
        propagator = Propagator.from_generator(gen)
        snapshot = propagator.step(DensityOperator.pure(psi), t)
        assert abs(snapshot.raw_trace - 1) < 1e-7
        assert snapshot.state.min_eigenvalue > -1e-7
        assert snapshot.correction < 1e-6

    @pytest.mark.parametrize('t', [0.1, 1, 10])
    def test_positive_at_long_times(self, t):
        gen = random_generator(5)
        rho = evolve(gen, DensityOperator.pure([1, 1j, 0]), t)
        assert rho.min_eigenvalue > -1e-9
        assert rho.trace == pytest.approx(1)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 3), st.floats(0.05, 3))
    def test_semigroup(self, seed, s, t):
        gen = random_generator(seed)
        rho = DensityOperator.maximally_mixed(3)
        stepped = evolve(gen, evolve(gen, rho, s), t)
        assert np.allclose(stepped.matrix, evolve(gen, rho, s + t).matrix, atol=1e-8)

    def test_rescaled_generator_rescales_time(self):
        gen = random_generator(11)
        rho = DensityOperator.pure([1, 0, 1])
        assert np.allclose(evolve(gen.scaled(0.25), rho, 2.0).matrix, evolve(gen, rho, 0.5).matrix, atol=1e-8)

    def test_fault_bound(self):
        gen, _ = ghz_conditional_generator(3)
        eps = 0.05
        plus = np.ones(8) / np.sqrt(8)
        phi = np.zeros(8)
        phi[0], phi[-1] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        rho0 = (1 - eps) * np.outer(plus, plus) + eps * np.outer(phi, phi)
        rho = evolve(gen, rho0, 200.0)
        assert 1 - rho.fidelity(ghz(3).vector) <= eps + 1e-6


class TestTrajectory:
    @pytest.mark.parametrize('name', ['ghz', 'w'])
    def test_conditional_population_never_drops(self, name):
        space = MultipartiteSpace.qubits(3)
        if name == 'ghz':
            gen, h_prime = ghz_conditional_generator(3)
            target = ghz(3).vector
        else:
            construction = w_conditional(3)
            gen, h_prime = construction.generator(space), construction.h_prime
            target = w(3).vector
        rng = np.random.default_rng(8)
        psi = rng.normal(size=8) + 1j * rng.normal(size=8)
        P = h_prime.projector
        propagator = Propagator.from_generator(gen)
        propagator.method = 'expm'
        for rho0 in (DensityOperator.maximally_mixed(8), DensityOperator.pure(psi)):
            tr = trajectory(propagator, rho0, np.linspace(0, 20, 41), target)
            populations = [np.trace(P @ state.matrix).real for state in tr.states]
            assert np.all(np.diff(populations) >= -1e-10)

    def test_monotone_decay(self):
        propagator = Propagator.from_generator(LindbladGenerator(ONE_QUBIT, None, DECAY))
        tr = trajectory(propagator, [0, 1], [0, 0.5, 1, 2], [1, 0])
        assert len(tr) == 4
        assert tr.fidelities[0] == pytest.approx(0)
        assert tr.monotone
        assert tr.trace_drift < 1e-12

    def test_write_csv(self, tmp_path):
        propagator = Propagator.from_generator(LindbladGenerator(ONE_QUBIT, None, DECAY))
        tr = trajectory(propagator, [0, 1], [0, 1], [1, 0])
        path = tmp_path / 'trajectory.csv'
        write_csv(tr, path)
        with open(path) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ['t', 'fidelity', 'trace', 'min_eigenvalue']
        assert len(rows) == 3
        assert float(rows[2][1]) == pytest.approx(1 - np.exp(-1))


class TestConvergenceReport:
    def test_decay_rate(self, caplog):
        caplog.set_level(logging.INFO)
        gen = LindbladGenerator(ONE_QUBIT, None, DECAY)
        report = convergence_report(gen, [1, 0], [[0, 1]], horizon=20.0)
        assert report.rate == pytest.approx(1, rel=1e-3)
        assert report.r_squared[0] == pytest.approx(1, abs=1e-6)
        assert report.final_fidelities[0] == pytest.approx(1, abs=1e-8)
        assert not report.trace_drift
        assert any('Convergence' in record.message for record in caplog.records)

    def test_default_horizon(self):
        gen = LindbladGenerator(ONE_QUBIT, None, DECAY)
        report = convergence_report(gen, [1, 0], [[0, 1]], samples=5)
        assert report.gap == pytest.approx(0.5)
        assert report.horizon == pytest.approx(100)
        assert len(report.trajectories[0]) == 5

    def test_ghz3_controls_converge(self):
        space = MultipartiteSpace.qubits(3)
        gen = ghz3_qls_generator()
        plus = np.ones(8) / np.sqrt(8)
        phi = np.zeros(8)
        phi[0], phi[-1] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        eps = 0.1
        rho0 = (1 - eps) * np.outer(plus, plus) + eps * np.outer(phi, phi)
        rho0s = [rho0, DensityOperator.maximally_mixed(8), space.basis_state('010')]
        report = convergence_report(gen, ghz(3).vector, rho0s, workers=3)
        assert all(f > 1 - 1e-6 for f in report.final_fidelities)
        summary = report.summary()
        assert len(summary['final_fidelities']) == 3
        assert summary['trace_drift'] is False

    def test_workers_match_serial(self):
        gen = LindbladGenerator(ONE_QUBIT, None, DECAY)
        rho0s = [[0, 1], [1, 1], DensityOperator.maximally_mixed(2)]
        serial = convergence_report(gen, [1, 0], rho0s, horizon=5.0, samples=8)
        pooled = convergence_report(gen, [1, 0], rho0s, horizon=5.0, samples=8, workers=3)
        for a, b in zip(serial.trajectories, pooled.trajectories):
            assert np.allclose(a.fidelities, b.fidelities)
