"""Target states and explicit control constructions used as fixtures.

Fixtures are addressable by name (see `resolve`):

    ghz:N  w:N  dicke:N:K           target states
    ghz3-qls  ghz3-qls-flawed       Hamiltonian-assisted GHZ_3 controls
    w-qls:N                         Hamiltonian-assisted W_N controls
    ghz-cond:N  w-cond:N            conditional (H'-restricted) controls
"""
from itertools import combinations
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import comb

from .generator import LindbladGenerator, Term
from .operators import IDENTITY, SIGMA_MINUS, SIGMA_PLUS, SIGMA_X, SIGMA_Z, pauli
from .synthesis import WTypeConstruction, construct_wtype
from .tensor import MultipartiteSpace, NeighborhoodStructure, Subspace, kron_all, observable_eigenspace

__all__ = [
    'NamedState',
    'Fixture',
    'ghz',
    'w',
    'dicke',
    'ghz3_qls_controls',
    'ghz3_qls_generator',
    'ghz_conditional_dissipators',
    'ghz_conditional_generator',
    'ghz_split_hamiltonian',
    'w_qls_controls',
    'w_qls_generator',
    'w_conditional',
    'resolve',
]


class NamedState(NamedTuple):
    label: str
    vector: np.ndarray
    n: int

    @property
    def space(self) -> MultipartiteSpace:
        return MultipartiteSpace.qubits(self.n)


def _check_n(n: int, low: int = 2) -> None:
    if not isinstance(n, int) or n < low:
        raise ValueError('Number of qubits must be an integer >= {}, got {!r}'.format(low, n))


def _excitations(n: int, k: int) -> np.ndarray:
    """Sum of the computational basis states with exactly k ones."""
    v = np.zeros(2 ** n, dtype=complex)
    for ones in combinations(range(n), k):
        v[sum(1 << (n - 1 - a) for a in ones)] = 1
    return v


def ghz(n: int) -> NamedState:
    """(|0...0> + |1...1>)/sqrt(2)."""
    _check_n(n)
    v = np.zeros(2 ** n, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return NamedState('ghz:{}'.format(n), v, n)


def w(n: int) -> NamedState:
    """Equal superposition of the n single-excitation states."""
    _check_n(n)
    return NamedState('w:{}'.format(n), _excitations(n, 1) / np.sqrt(n), n)


def dicke(n: int, k: int) -> NamedState:
    """Equal superposition of the C(n, k) states with k excitations."""
    _check_n(n)
    if not isinstance(k, int) or not 0 <= k <= n:
        raise ValueError('Excitation number must lie in 0..{}, got {!r}'.format(n, k))
    return NamedState('dicke:{}:{}'.format(n, k), _excitations(n, k) / np.sqrt(comb(n, k, exact=True)), n)


def _projector_pair(first: str, second: str, phase: complex = 1) -> np.ndarray:
    """|00><first| + phase |11><second| on two qubits."""
    def ket(bits: str) -> np.ndarray:
        v = np.zeros(4, dtype=complex)
        v[int(bits, 2)] = 1
        return v

    return np.outer(ket('00'), ket(first)) + phase * np.outer(ket('11'), ket(second))


def ghz3_qls_controls(flawed: bool = False) -> Tuple[List[Term], Term, Term]:
    """H_c = X_1 - X_2 X_3, D_1 on {1,2}, D_2 on {2,3}.

    The flawed variant drops the phase i of D_2 and leaves the -1 eigenspace
    of X^(x)3 inside H_0 invariant.
    """
    H_c = [Term(SIGMA_X, (1,)), Term(-pauli('xx'), (2, 3))]
    D1 = Term(_projector_pair('01', '10'), (1, 2))
    D2 = Term(_projector_pair('01', '10', 1 if flawed else 1j), (2, 3))
    return H_c, D1, D2


def ghz3_qls_generator(flawed: bool = False) -> LindbladGenerator:
    H_c, D1, D2 = ghz3_qls_controls(flawed)
    return LindbladGenerator(MultipartiteSpace.qubits(3), H_c, [D1, D2])


def ghz_pair_dissipator() -> np.ndarray:
    """|00><10| + |11><01|: annihilates |00>, |11> and commutes with X (x) X."""
    return np.kron(SIGMA_PLUS, (SIGMA_Z + IDENTITY) / 2) - np.kron(SIGMA_MINUS, (SIGMA_Z - IDENTITY) / 2)


def ghz_conditional_dissipators(n: int) -> List[Term]:
    """The pair dissipator on every nearest-neighbor pair {k, k+1}."""
    _check_n(n)
    D = ghz_pair_dissipator()
    return [Term(D, (k, k + 1)) for k in range(1, n)]


def ghz_conditional_generator(n: int) -> Tuple[LindbladGenerator, Subspace]:
    """Generator and H' = +1 eigenspace of X^(x)n."""
    space = MultipartiteSpace.qubits(n)
    return LindbladGenerator(space, None, ghz_conditional_dissipators(n)), observable_eigenspace('x' * n, 1)


def ghz_split_hamiltonian(n: int) -> List[Term]:
    """X^(x)S1 - X^(x)S2 for the split S1 = {1..floor(n/2)}, S2 = the rest; annihilates GHZ_n."""
    _check_n(n)
    half = n // 2
    first, second = tuple(range(1, half + 1)), tuple(range(half + 1, n + 1))
    return [Term(pauli('x' * len(first)), first), Term(-pauli('x' * len(second)), second)]


def _p0(n: int) -> np.ndarray:
    """(sum_a Z_a - (n - 4) I)/2 on the n - 2 middle qubits."""
    m = n - 2
    eye = np.eye(2 ** m, dtype=complex)
    total = sum(kron_all([SIGMA_Z if b == a else IDENTITY for b in range(m)]) for a in range(m))
    return (total - (n - 4) * eye) / 2


def w_qls_controls(n: int, nearest: bool = False) -> Tuple[List[Term], List[Term]]:
    """H_c = X_1 P_0 - P_0 X_n as one- and two-body terms, and a ladder per pair.

    P_0 acts on qubits 2..n-1, fixes |0...0> and annihilates W_{n-2}. The
    ladder I (x) s+ - s+ (x) I has kernel span{|00>, W_2}; it is placed on
    every unordered pair, or only on nearest neighbors when `nearest` is set.
    """
    _check_n(n, 3)
    P0 = _p0(n)
    assert np.allclose(P0 @ _excitations(n - 2, 0), _excitations(n - 2, 0))
    assert np.allclose(P0 @ _excitations(n - 2, 1), 0)

    H_c = []
    shift = (n - 4) / 2
    if shift:
        H_c.append(Term(-shift * SIGMA_X, (1,)))
        H_c.append(Term(shift * SIGMA_X, (n,)))
    for a in range(2, n):
        H_c.append(Term(np.kron(SIGMA_X, SIGMA_Z) / 2, (1, a)))
        H_c.append(Term(-np.kron(SIGMA_Z, SIGMA_X) / 2, (a, n)))

    ladder = np.kron(IDENTITY, SIGMA_PLUS) - np.kron(SIGMA_PLUS, IDENTITY)
    pairs = [(k, k + 1) for k in range(1, n)] if nearest else list(combinations(range(1, n + 1), 2))
    return H_c, [Term(ladder, pair) for pair in pairs]


def w_qls_generator(n: int, nearest: bool = False) -> LindbladGenerator:
    H_c, dissipators = w_qls_controls(n, nearest)
    return LindbladGenerator(MultipartiteSpace.qubits(n), H_c, dissipators)


def w_conditional(n: int, nbhds: Optional[NeighborhoodStructure] = None) -> WTypeConstruction:
    """Local ladders cooling each neighborhood towards the reduced W state; nearest-neighbor pairs by default."""
    _check_n(n, 3)
    return construct_wtype(w(n).vector, nbhds or NeighborhoodStructure.chain(n))


class Fixture(NamedTuple):
    state: NamedState
    nbhds: Optional[NeighborhoodStructure] = None
    generator: Optional[LindbladGenerator] = None
    h_prime: Optional[Subspace] = None


def _int(value: str, name: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValueError('Fixture {!r} expects an integer, got {!r}'.format(name, value)) from None


def resolve(name: str) -> Fixture:
    """Look a fixture up by name, e.g. 'ghz:4' or 'w-qls:3'."""
    head, *args = name.strip().lower().split(':')
    if head == 'ghz' and len(args) == 1:
        return Fixture(ghz(_int(args[0], name)))
    if head == 'w' and len(args) == 1:
        return Fixture(w(_int(args[0], name)))
    if head == 'dicke' and len(args) == 2:
        n, k = _int(args[0], name), _int(args[1], name)
        nbhds = NeighborhoodStructure.chain(n, 3) if n > 3 else None
        return Fixture(dicke(n, k), nbhds)
    if head in ('ghz3-qls', 'ghz3-qls-flawed') and not args:
        return Fixture(ghz(3), NeighborhoodStructure.chain(3), ghz3_qls_generator(head.endswith('flawed')))
    if head == 'w-qls' and len(args) == 1:
        n = _int(args[0], name)
        return Fixture(w(n), NeighborhoodStructure.pairs(n), w_qls_generator(n))
    if head == 'ghz-cond' and len(args) == 1:
        n = _int(args[0], name)
        gen, h_prime = ghz_conditional_generator(n)
        return Fixture(ghz(n), NeighborhoodStructure.chain(n), gen, h_prime)
    if head == 'w-cond' and len(args) == 1:
        n = _int(args[0], name)
        nbhds = NeighborhoodStructure.chain(n)
        construction = w_conditional(n, nbhds)
        return Fixture(w(n), nbhds, construction.generator(MultipartiteSpace.qubits(n)), construction.h_prime)
    raise ValueError('Unknown fixture {!r}'.format(name))
