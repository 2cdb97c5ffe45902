"""Local operator bases.

Qubits use normalized Pauli products; larger local dimensions use the
generalized Gell-Mann matrices. All bases are orthonormal for the
Hilbert-Schmidt inner product and consist of Hermitian matrices, so real
coefficients span the Hermitian operators and, doubled with i times each
element, all complex operators.
"""
from functools import lru_cache, reduce
from itertools import product
from typing import List, Sequence, Tuple

import numpy as np

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# |0><1| and |1><0|: SIGMA_PLUS lowers |1> to |0>.
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)

_LETTERS = {'i': IDENTITY, 'x': SIGMA_X, 'y': SIGMA_Y, 'z': SIGMA_Z}


def pauli(label: str) -> np.ndarray:
    """Tensor product of Pauli matrices, e.g. pauli('xix') = X (x) I (x) X."""
    try:
        factors = [_LETTERS[ch] for ch in label.lower()]
    except KeyError as err:
        raise ValueError('Unknown Pauli letter in {!r}'.format(label)) from err
    if not factors:
        raise ValueError('Empty Pauli label')
    return reduce(np.kron, factors)


@lru_cache(maxsize=None)
def _gell_mann(d: int) -> Tuple[np.ndarray, ...]:
    mats = [np.eye(d, dtype=complex) / np.sqrt(d)]
    if d == 2:
        mats.extend(m / np.sqrt(2) for m in (SIGMA_X, SIGMA_Y, SIGMA_Z))
        return tuple(mats)

    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k] = -1j
            anti[k, j] = 1j
            mats.append(sym / np.sqrt(2))
            mats.append(anti / np.sqrt(2))
    for l in range(1, d):
        diag = np.zeros(d, dtype=complex)
        diag[:l] = 1
        diag[l] = -l
        mats.append(np.diag(diag) / np.sqrt(l * (l + 1)))
    return tuple(mats)


def single_site_basis(d: int) -> List[np.ndarray]:
    """d*d Hermitian matrices, orthonormal, identity first."""
    if d < 2:
        raise ValueError('Local dimension must be at least 2')
    return [m.copy() for m in _gell_mann(d)]


def hermitian_basis(dims: Sequence[int]) -> List[np.ndarray]:
    """Products of single-site bases over the given factors, in lexicographic order."""
    sites = [single_site_basis(d) for d in dims]
    basis = []
    for combo in product(*[range(len(s)) for s in sites]):
        basis.append(reduce(np.kron, (sites[a][i] for a, i in enumerate(combo))))
    return basis
