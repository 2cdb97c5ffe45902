import numpy as np
import pytest

from qlstab.generator import is_gas, is_invariant, verify_gas
from qlstab.operators import pauli
from qlstab.statelib import (
    dicke,
    ghz,
    ghz3_qls_controls,
    ghz3_qls_generator,
    ghz_conditional_generator,
    ghz_pair_dissipator,
    ghz_split_hamiltonian,
    resolve,
    w,
    w_conditional,
    w_qls_controls,
    w_qls_generator,
)
from qlstab.synthesis import verify_conditional
from qlstab.tensor import MultipartiteSpace, NeighborhoodStructure, embed


class TestStates:
    def test_ghz(self):
        state = ghz(4)
        assert state.n == 4
        assert state.label == 'ghz:4'
        assert np.linalg.norm(state.vector) == pytest.approx(1)
        assert state.vector[0] == pytest.approx(state.vector[-1])

    def test_w(self):
        v = w(3).vector
        assert np.flatnonzero(v).tolist() == [1, 2, 4]
        assert np.allclose(v[[1, 2, 4]], 1 / np.sqrt(3))

    def test_dicke(self):
        v = dicke(4, 2).vector
        assert np.count_nonzero(v) == 6
        assert np.allclose(v[np.flatnonzero(v)], 1 / np.sqrt(6))
        assert np.allclose(dicke(3, 1).vector, w(3).vector)

    def test_invalid(self):
        with pytest.raises(ValueError):
            ghz(1)
        with pytest.raises(ValueError):
            dicke(3, 4)

    def test_space(self):
        assert ghz(3).space == MultipartiteSpace.qubits(3)


class TestGhzControls:
    def test_controls_annihilate_target(self):
        space = MultipartiteSpace.qubits(3)
        psi = ghz(3).vector
        H_c, D1, D2 = ghz3_qls_controls()
        H = sum(t.full(space) for t in H_c)
        assert np.allclose(H @ psi, 0)
        assert np.allclose(D1.full(space) @ psi, 0)
        assert np.allclose(D2.full(space) @ psi, 0)
        assert D1.nbhd == (1, 2)
        assert D2.nbhd == (2, 3)

    def test_generator_is_gas(self):
        assert is_gas(ghz3_qls_generator(), ghz(3).vector)

    def test_flawed_generator_is_not_gas(self):
        report = verify_gas(ghz3_qls_generator(flawed=True), ghz(3).vector)
        assert not report.gas
        assert report.spectrum.multiplicity > 1

    def test_pair_dissipator(self):
        D = ghz_pair_dissipator()
        XX = np.kron([[0, 1], [1, 0]], [[0, 1], [1, 0]])
        assert np.allclose(D @ [1, 0, 0, 0], 0)
        assert np.allclose(D @ [0, 0, 0, 1], 0)
        assert np.allclose(D @ [0, 0, 1, 0], [1, 0, 0, 0])
        assert np.allclose(D @ [0, 1, 0, 0], [0, 0, 0, 1])
        assert np.allclose(D @ XX, XX @ D)

    def test_conditional_fixture(self):
        fixture = resolve('ghz-cond:4')
        assert verify_conditional(fixture.generator, fixture.state.vector, fixture.h_prime)
        assert fixture.h_prime.dim == 8

    @pytest.mark.parametrize('n', [3, 4, 5])
    def test_conditional_generator(self, n):
        gen, h_prime = ghz_conditional_generator(n)
        assert verify_conditional(gen, ghz(n).vector, h_prime)
        X = pauli('x' * n)
        for D in gen.lindblads:
            assert np.linalg.norm(D @ X - X @ D) < 1e-10

    @pytest.mark.parametrize('n', [3, 4, 5])
    def test_split_hamiltonian(self, n):
        space = MultipartiteSpace.qubits(n)
        H = sum(t.full(space) for t in ghz_split_hamiltonian(n))
        assert np.allclose(H @ ghz(n).vector, 0)
        assert not np.allclose(H, 0)


class TestWControls:
    @pytest.mark.parametrize('n', [3, 4])
    def test_controls_annihilate_target(self, n):
        space = MultipartiteSpace.qubits(n)
        H_c, dissipators = w_qls_controls(n)
        psi = w(n).vector
        assert np.allclose(sum(t.full(space) for t in H_c) @ psi, 0)
        for term in dissipators:
            assert np.allclose(term.full(space) @ psi, 0)
        assert is_invariant(w_qls_generator(n), psi)

    def test_nearest_neighbor_ladders(self):
        _, dissipators = w_qls_controls(4, nearest=True)
        assert [t.nbhd for t in dissipators] == [(1, 2), (2, 3), (3, 4)]
        _, dissipators = w_qls_controls(4)
        assert len(dissipators) == 6

    @pytest.mark.parametrize('n', [3, 4])
    def test_w_is_gas(self, n):
        report = verify_gas(w_qls_generator(n), w(n).vector)
        assert report.gas
        assert report.spectrum.multiplicity == 1
        assert report.fidelity >= 1 - 1e-8

    def test_w_conditional(self):
        construction = w_conditional(3)
        assert construction.applicable
        space = MultipartiteSpace.qubits(3)
        assert verify_conditional(construction.generator(space), w(3).vector, construction.h_prime)

    def test_ladder_is_quasi_local(self):
        gen = w_qls_generator(4, nearest=True)
        assert gen.is_quasi_local(NeighborhoodStructure.pairs(4))


class TestResolve:
    def test_states(self):
        assert resolve('GHZ:3').state.label == 'ghz:3'
        assert resolve('dicke:4:2').nbhds.max_size == 3
        assert resolve('w:3').generator is None

    def test_fixtures(self):
        fixture = resolve('ghz3-qls')
        assert fixture.nbhds.neighborhoods == ((1, 2), (2, 3))
        assert fixture.generator.is_quasi_local(fixture.nbhds)
        assert resolve('w-qls:3').generator is not None
        assert resolve('w-cond:3').h_prime.dim == 7

    def test_unknown(self):
        with pytest.raises(ValueError):
            resolve('bell')
        with pytest.raises(ValueError):
            resolve('ghz:x')

    def test_embedding_of_dissipators(self):
        fixture = resolve('ghz3-qls')
        space = fixture.state.space
        for D, term in zip(fixture.generator.lindblads, fixture.generator.lindblad_terms):
            assert np.allclose(D, embed(term.op, term.nbhd, space))
