import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlstab.analysis import (
    DidOutcome,
    DqlsVerdict,
    NoGo,
    conditional_necessary,
    did,
    did_gas,
    dqls_test,
    kernel_condition,
    largest_invariant_subspace,
    nogo_ghz,
    qls_necessary,
)
from qlstab.exceptions import InvariancePrecondition, NotInvariant
from qlstab.generator import LindbladGenerator, Term, is_gas
from qlstab.operators import SIGMA_X, pauli
from qlstab.statelib import ghz, ghz3_qls_generator, ghz_conditional_generator, w
from qlstab.synthesis import build_constraints, randomize
from qlstab.tensor import MultipartiteSpace, NeighborhoodStructure, Subspace, kron_all, observable_eigenspace

DECAY = np.array([[0, 1], [0, 0]], dtype=complex)


def bell():
    return np.array([1, 0, 0, 1]) / np.sqrt(2)


def random_qubit(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def random_local_unitary(rng, n):
    factors = []
    for _ in range(n):
        q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        factors.append(q)
    return kron_all(factors)


def random_candidate(case):
    """Randomized controls for one of four targets, with a random subset of terms dropped."""
    rng = np.random.default_rng([17, case])
    kind = case % 4
    if kind == 0:
        psi, nbhds = ghz(3).vector, NeighborhoodStructure.chain(3)
    elif kind == 1:
        psi, nbhds = w(3).vector, NeighborhoodStructure.chain(3)
    elif kind == 2:
        psi, nbhds = kron_all([random_qubit(rng) for _ in range(3)]), NeighborhoodStructure.chain(3)
    else:
        psi, nbhds = kron_all([random_qubit(rng) for _ in range(2)]), NeighborhoodStructure([[1], [2]], 2)
    candidate = randomize(build_constraints(psi, nbhds), 1.0, (17, case))
    dissipators = [term for term in candidate.dissipators if rng.random() < 0.7]
    hamiltonian = candidate.hamiltonian if rng.random() < 0.5 else None
    space = MultipartiteSpace.qubits(nbhds.n)
    return LindbladGenerator(space, hamiltonian, dissipators), psi


class TestDqlsTest:
    def test_product_state(self):
        space = MultipartiteSpace.qubits(2)
        report = dqls_test(space.basis_state('00'), NeighborhoodStructure([[1], [2]], 2))
        assert report.verdict is DqlsVerdict.DQLS
        assert report.d0 == 1
        assert report.hw.dim == 0

    def test_ghz_on_chain(self):
        report = dqls_test(ghz(3).vector, NeighborhoodStructure.chain(3))
        assert report.verdict is DqlsVerdict.NOT_DQLS
        assert report.d0 == 2
        phi = np.zeros(8)
        phi[0], phi[-1] = 1, -1
        assert report.hw.contains(phi / np.sqrt(2))

    def test_w_on_chain(self):
        report = dqls_test(w(3).vector, NeighborhoodStructure.chain(3))
        assert report.d0 == 2
        assert report.hw.contains(MultipartiteSpace.qubits(3).basis_state('000'))
        assert [s.dim for s in report.local_supports] == [2, 2]

    def test_whole_system_neighborhood(self):
        nbhds = NeighborhoodStructure([[1, 2, 3]], 3, trivial=True)
        assert dqls_test(ghz(3).vector, nbhds).verdict is DqlsVerdict.DQLS

    def test_bell_on_sites(self):
        report = dqls_test(bell(), NeighborhoodStructure([[1], [2]], 2))
        assert report.d0 == 4

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.sampled_from(['ghz', 'w']))
    def test_local_unitaries_keep_verdict(self, seed, name):
        psi = (ghz if name == 'ghz' else w)(3).vector
        nbhds = NeighborhoodStructure.chain(3)
        before = dqls_test(psi, nbhds)
        after = dqls_test(random_local_unitary(np.random.default_rng(seed), 3) @ psi, nbhds)
        assert after.d0 == before.d0
        assert after.verdict is before.verdict

    def test_logs_verdict(self, caplog):
        caplog.set_level(logging.INFO)
        dqls_test(ghz(3).vector, NeighborhoodStructure.chain(3))
        assert any('NotDQLS' in record.message for record in caplog.records)


class TestDid:
    def test_two_decays(self):
        space = MultipartiteSpace.qubits(2)
        gen = LindbladGenerator(space, None, [Term(DECAY, (1,)), Term(DECAY, (2,))])
        result = did_gas(gen, space.basis_state('00'))
        assert result.completed
        assert result.steps == 2
        assert result.dims == [1, 2, 1]

    def test_single_decay_is_one_step(self):
        gen = LindbladGenerator(MultipartiteSpace.qubits(1), None, DECAY)
        result = did_gas(gen, [1, 0])
        assert result.outcome is DidOutcome.COMPLETED
        assert result.steps == 1
        assert result.dims == [1, 1]

    def test_no_dynamics(self):
        gen = LindbladGenerator(MultipartiteSpace.qubits(1))
        result = did(gen, Subspace.span([[1, 0]]))
        assert result.outcome is DidOutcome.NOT_GAS
        assert result.steps == 1
        assert result.remainder.contains([0, 1])

    def test_missing_decay(self):
        space = MultipartiteSpace.qubits(2)
        gen = LindbladGenerator(space, None, [Term(DECAY, (1,))])
        result = did_gas(gen, space.basis_state('00'))
        assert not result.completed
        assert result.remainder.contains(space.basis_state('01'))

    def test_hamiltonian_step(self):
        # decay pulls |1> into the target only through the rotation of |2>
        L = np.zeros((3, 3), dtype=complex)
        L[0, 1] = 1
        H = np.zeros((3, 3), dtype=complex)
        H[1, 2] = H[2, 1] = 1
        gen = LindbladGenerator(MultipartiteSpace([3]), H, L)
        result = did_gas(gen, [1, 0, 0])
        assert result.completed
        assert result.dims == [1, 1, 1]

    def test_requires_invariant_subspace(self):
        gen = LindbladGenerator(MultipartiteSpace.qubits(1), SIGMA_X)
        with pytest.raises(InvariancePrecondition):
            did(gen, Subspace.span([[1, 0]]))

    def test_ghz3_controls(self):
        result = did_gas(ghz3_qls_generator(), ghz(3).vector)
        assert result.completed
        assert sum(result.dims) == 8

    def test_flawed_ghz3_controls(self):
        result = did_gas(ghz3_qls_generator(flawed=True), ghz(3).vector)
        assert not result.completed
        assert result.remainder.includes(observable_eigenspace('xxx', -1))

    def test_pair_dissipators_on_ghz3(self):
        gen, _ = ghz_conditional_generator(3)
        space = MultipartiteSpace.qubits(3)
        result = did(gen, Subspace.span([space.basis_state('000'), space.basis_state('111')]))
        assert result.outcome is DidOutcome.COMPLETED
        assert result.steps == 2
        assert result.dims == [2, 4, 2]

    @pytest.mark.parametrize('case', range(20))
    def test_agrees_with_spectral_verifier(self, case):
        gen, psi = random_candidate(case)
        assert did_gas(gen, psi).completed == is_gas(gen, psi)


class TestNecessaryConditions:
    def test_dqls_target_passes(self):
        space = MultipartiteSpace.qubits(2)
        check = qls_necessary(space.basis_state('00'), NeighborhoodStructure([[1], [2]], 2), np.zeros((4, 4)))
        assert check
        assert check.reason == 'target is DQLS'

    def test_ghz3_control_hamiltonian(self):
        H = pauli('xii') - pauli('ixx')
        assert qls_necessary(ghz(3).vector, NeighborhoodStructure.chain(3), H)

    def test_parity_hamiltonian_fails(self):
        H = pauli('zzi') + pauli('izz')
        check = qls_necessary(ghz(3).vector, NeighborhoodStructure.chain(3), H)
        assert not check

    def test_non_eigenvector_fails(self):
        check = qls_necessary(ghz(3).vector, NeighborhoodStructure.chain(3), pauli('xii'))
        assert not check
        assert 'eigenvector' in check.reason

    def test_largest_invariant_subspace(self):
        H = np.diag([1, 2, 3]).astype(complex)
        H[0, 1] = H[1, 0] = 1
        within = Subspace.span([[1, 0, 0], [0, 0, 1]])
        assert largest_invariant_subspace(H, within).contains([0, 0, 1])
        assert largest_invariant_subspace(H, within).dim == 1
        assert largest_invariant_subspace(H, Subspace.full(3)).dim == 3

    def test_conditional_necessary(self):
        nbhds = NeighborhoodStructure.chain(3)
        psi = ghz(3).vector
        assert conditional_necessary(psi, nbhds, observable_eigenspace('xxx', 1))
        assert not conditional_necessary(psi, nbhds, Subspace.full(8))
        assert not conditional_necessary(psi, nbhds, observable_eigenspace('xxx', -1))


class TestNoGo:
    def test_thresholds(self):
        assert nogo_ghz(4, NeighborhoodStructure.pairs(4)) is NoGo.POSSIBLE
        assert nogo_ghz(6, NeighborhoodStructure.chain(6)) is NoGo.BLOCKED
        assert nogo_ghz(6, NeighborhoodStructure.chain(6, 3)) is NoGo.POSSIBLE
        assert nogo_ghz(3, NeighborhoodStructure([[1], [2, 3]], 3)) is NoGo.POSSIBLE
        assert nogo_ghz(3, NeighborhoodStructure([[1], [2], [3]], 3)) is NoGo.BLOCKED


class TestKernelCondition:
    def test_ghz3_controls(self):
        assert kernel_condition(ghz3_qls_generator(), ghz(3).vector)

    def test_product_neighborhoods(self):
        space = MultipartiteSpace.qubits(2)
        psi = np.array([1, 1, 0, 0]) / np.sqrt(2)
        gen = LindbladGenerator(space, None, [Term(DECAY, (1,)), Term(SIGMA_X, (2,))])
        assert kernel_condition(gen, psi)

    def test_requires_invariance(self):
        space = MultipartiteSpace.qubits(2)
        gen = LindbladGenerator(space, None, [Term(SIGMA_X, (1,))])
        with pytest.raises(NotInvariant):
            kernel_condition(gen, space.basis_state('00'))

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_randomized_controls(self, seed):
        rng = np.random.default_rng(seed)
        psi = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi = psi / np.linalg.norm(psi)
        candidate = randomize(build_constraints(psi, NeighborhoodStructure.chain(3)), 1.0, seed)
        gen = LindbladGenerator(MultipartiteSpace.qubits(3), candidate.hamiltonian, candidate.dissipators)
        assert kernel_condition(gen, psi)
