"""Multipartite Hilbert-space algebra.

Subsystems are one-indexed, subsystem 1 being the leftmost (most significant)
tensor factor of the computational basis. Operators on a neighborhood are
given in the factor order of the sorted neighborhood.
"""
from functools import reduce
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .exceptions import DimensionMismatch, NeighborhoodError, NotHermitian, QuasiLocalityError
from .operators import pauli
from .utils import as_matrix, as_vector, dagger, hermitian_part, resolve_tol

__all__ = [
    'MultipartiteSpace',
    'NeighborhoodStructure',
    'Subspace',
    'DensityOperator',
    'embed',
    'extract_local',
    'partial_trace',
    'support',
    'intersect',
    'kernel',
    'kron_all',
    'observable_eigenspace',
]


class MultipartiteSpace:
    """H = H_1 (x) ... (x) H_n with dim(H_a) = dims[a - 1]."""

    def __init__(self, dims: Sequence[int]) -> None:
        dims = tuple(int(d) for d in dims)
        if not dims:
            raise ValueError('A multipartite space needs at least one subsystem')
        for d in dims:
            if d < 2:
                raise ValueError('Subsystem dimensions must be at least 2, got {}'.format(d))
        self._dims = dims
        self._dim = int(np.prod(dims))

    @classmethod
    def qubits(cls, n: int) -> 'MultipartiteSpace':
        return cls([2] * n)

    @property
    def dims(self) -> Tuple[int, ...]:
        return self._dims

    @property
    def n(self) -> int:
        return len(self._dims)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def is_qubits(self) -> bool:
        return all(d == 2 for d in self._dims)

    def subset(self, nbhd: Iterable[int]) -> Tuple[int, ...]:
        """Validate a one-indexed subsystem subset and return it sorted."""
        items = list(nbhd)
        if not items:
            raise NeighborhoodError('Empty subsystem subset')
        for a in items:
            if not isinstance(a, (int, np.integer)) or isinstance(a, bool):
                raise NeighborhoodError('Subsystem index {!r} is not an integer'.format(a))
            if a < 1 or a > self.n:
                raise NeighborhoodError('Subsystem index {} out of range 1..{}'.format(a, self.n))
        if len(set(items)) != len(items):
            raise NeighborhoodError('Duplicate subsystem index in {}'.format(items))
        return tuple(sorted(int(a) for a in items))

    def complement(self, nbhd: Iterable[int]) -> Tuple[int, ...]:
        keep = set(self.subset(nbhd))
        return tuple(a for a in range(1, self.n + 1) if a not in keep)

    def local_dim(self, nbhd: Iterable[int]) -> int:
        return int(np.prod([self._dims[a - 1] for a in self.subset(nbhd)]))

    def subdims(self, nbhd: Iterable[int]) -> Tuple[int, ...]:
        return tuple(self._dims[a - 1] for a in self.subset(nbhd))

    def basis_state(self, digits: Union[str, Sequence[int]]) -> np.ndarray:
        """Computational basis vector, e.g. basis_state('010')."""
        digits = [int(x) for x in digits]
        if len(digits) != self.n:
            raise DimensionMismatch(self.n, len(digits))
        index = 0
        for x, d in zip(digits, self._dims):
            if not 0 <= x < d:
                raise ValueError('Digit {} out of range for dimension {}'.format(x, d))
            index = index * d + x
        v = np.zeros(self._dim, dtype=complex)
        v[index] = 1
        return v

    def __eq__(self, other) -> bool:
        return isinstance(other, MultipartiteSpace) and self._dims == other._dims

    def __hash__(self) -> int:
        return hash(self._dims)

    def __repr__(self) -> str:
        return '<MultipartiteSpace dims={}>'.format(list(self._dims))


class NeighborhoodStructure:
    """The subsets N_j of {1, ..., n} on which operators may act non-trivially."""

    def __init__(self, neighborhoods: Iterable[Iterable[int]], n: int, trivial: bool = False) -> None:
        self.n = int(n)
        self.trivial = trivial
        space = MultipartiteSpace([2] * self.n)
        nbhds = []
        for nbhd in neighborhoods:
            subset = space.subset(nbhd)
            if len(subset) == self.n and not trivial:
                raise NeighborhoodError(
                    'Neighborhood {} is the whole system; pass trivial=True to allow it'.format(list(subset))
                )
            nbhds.append(subset)
        if not nbhds:
            raise NeighborhoodError('At least one neighborhood is required')
        self._neighborhoods = tuple(nbhds)

        gaps = self.uncovered()
        if gaps:
            raise NeighborhoodError('Uncovered subsystem(s): {}'.format(gaps))

    @classmethod
    def chain(cls, n: int, width: int = 2) -> 'NeighborhoodStructure':
        """Sliding windows {k, ..., k + width - 1} on an open chain."""
        return cls([range(k, k + width) for k in range(1, n - width + 2)], n, trivial=width >= n)

    @classmethod
    def pairs(cls, n: int) -> 'NeighborhoodStructure':
        return cls([(j, k) for j in range(1, n + 1) for k in range(j + 1, n + 1)], n, trivial=n <= 2)

    @classmethod
    def whole(cls, n: int) -> 'NeighborhoodStructure':
        return cls([range(1, n + 1)], n, trivial=True)

    @property
    def neighborhoods(self) -> Tuple[Tuple[int, ...], ...]:
        return self._neighborhoods

    @property
    def M(self) -> int:
        return len(self._neighborhoods)

    @property
    def max_size(self) -> int:
        return max(len(nbhd) for nbhd in self._neighborhoods)

    def uncovered(self) -> List[int]:
        covered = set()
        for nbhd in self._neighborhoods:
            covered.update(nbhd)
        return [a for a in range(1, self.n + 1) if a not in covered]

    def complement(self, j: int) -> Tuple[int, ...]:
        nbhd = set(self._neighborhoods[j])
        return tuple(a for a in range(1, self.n + 1) if a not in nbhd)

    def contains(self, subset: Iterable[int]) -> bool:
        """Whether some neighborhood includes the given subset."""
        subset = set(subset)
        return any(subset <= set(nbhd) for nbhd in self._neighborhoods)

    def __iter__(self) -> Iterator[Tuple[int, ...]]:
        return iter(self._neighborhoods)

    def __len__(self) -> int:
        return len(self._neighborhoods)

    def __getitem__(self, j: int) -> Tuple[int, ...]:
        return self._neighborhoods[j]

    def __repr__(self) -> str:
        return '<NeighborhoodStructure {}>'.format([list(x) for x in self._neighborhoods])


def _slack(tol: float) -> float:
    return max(100 * tol, 1e-12)


def kernel(matrix: np.ndarray, tol: Optional[float] = None, scale: Optional[float] = None) -> np.ndarray:
    """Orthonormal basis (as columns) of the null space of `matrix`.

    Singular values below tol * scale count as zero; `scale` defaults to the
    largest singular value.
    """
    tol = resolve_tol(tol)
    m = np.atleast_2d(np.asarray(matrix))
    ncols = m.shape[1]
    if m.shape[0] == 0 or ncols == 0:
        return np.eye(ncols, dtype=m.dtype if np.iscomplexobj(m) else float)
    _, s, vh = scipy.linalg.svd(m, full_matrices=True)
    ref = scale if scale is not None else (s.max() if s.size else 0.0)
    rank = int(np.sum(s > tol * ref)) if ref > 0 else 0
    return vh[rank:].conj().T


class Subspace:
    """A subspace of C^d given by an orthonormal basis (columns of `basis`)."""

    def __init__(self, basis: np.ndarray, tol: Optional[float] = None) -> None:
        self.tol = resolve_tol(tol)
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 2:
            raise ValueError('Subspace basis must be a d x r matrix')
        if basis.shape[1] > basis.shape[0]:
            raise DimensionMismatch('r <= {}'.format(basis.shape[0]), basis.shape[1])
        gram = dagger(basis) @ basis
        if basis.shape[1] and not np.allclose(gram, np.eye(basis.shape[1]), atol=max(10 * self.tol, 1e-9)):
            raise ValueError('Subspace basis columns are not orthonormal')
        self._basis = basis
        self._basis.setflags(write=False)

    @classmethod
    def span(cls, vectors, ambient: Optional[int] = None, tol: Optional[float] = None) -> 'Subspace':
        """Orthonormalized span of vectors (a list of 1-D arrays or a d x k matrix)."""
        tol = resolve_tol(tol)
        if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
            mat = vectors.astype(complex)
        else:
            vecs = [as_vector(v) for v in vectors]
            if not vecs:
                if ambient is None:
                    raise ValueError('Cannot infer the ambient dimension of an empty span')
                return cls.zero(ambient, tol)
            mat = np.column_stack(vecs)
        if ambient is not None and mat.shape[0] != ambient:
            raise DimensionMismatch(ambient, mat.shape[0])
        if mat.shape[1] == 0 or not np.any(mat):
            return cls.zero(mat.shape[0], tol)
        return cls(scipy.linalg.orth(mat, rcond=tol), tol)

    @classmethod
    def zero(cls, ambient: int, tol: Optional[float] = None) -> 'Subspace':
        return cls(np.zeros((ambient, 0), dtype=complex), tol)

    @classmethod
    def full(cls, ambient: int, tol: Optional[float] = None) -> 'Subspace':
        return cls(np.eye(ambient, dtype=complex), tol)

    @classmethod
    def from_projector(cls, projector: np.ndarray, tol: Optional[float] = None) -> 'Subspace':
        w, v = scipy.linalg.eigh(hermitian_part(as_matrix(projector)))
        return cls(v[:, w > 0.5], tol)

    @property
    def basis(self) -> np.ndarray:
        return self._basis

    @property
    def dim(self) -> int:
        return self._basis.shape[1]

    @property
    def ambient(self) -> int:
        return self._basis.shape[0]

    @property
    def projector(self) -> np.ndarray:
        return self._basis @ dagger(self._basis)

    def _check_ambient(self, other: 'Subspace') -> None:
        if other.ambient != self.ambient:
            raise DimensionMismatch(self.ambient, other.ambient)

    def complement(self) -> 'Subspace':
        if self.dim == 0:
            return Subspace.full(self.ambient, self.tol)
        return Subspace(kernel(dagger(self._basis), self.tol, scale=1.0), self.tol)

    def difference(self, other: 'Subspace') -> 'Subspace':
        """V1 (-) V2 = V1 intersected with the orthocomplement of V2."""
        self._check_ambient(other)
        if self.dim == 0 or other.dim == 0:
            return self
        coords = kernel(dagger(other.basis) @ self._basis, self.tol, scale=1.0)
        return Subspace(self._basis @ coords, self.tol) if coords.shape[1] else Subspace.zero(self.ambient, self.tol)

    def join(self, other: 'Subspace') -> 'Subspace':
        """Smallest subspace containing both."""
        self._check_ambient(other)
        return Subspace.span(np.hstack([self._basis, other.basis]), self.ambient, self.tol)

    def intersect(self, other: 'Subspace') -> 'Subspace':
        return intersect([self, other])

    def residual(self, vector) -> float:
        v = as_vector(vector)
        if v.shape[0] != self.ambient:
            raise DimensionMismatch(self.ambient, v.shape[0])
        return float(np.linalg.norm(v - self._basis @ (dagger(self._basis) @ v)))

    def contains(self, vector) -> bool:
        v = as_vector(vector)
        return self.residual(v) <= _slack(self.tol) * max(1.0, float(np.linalg.norm(v)))

    def includes(self, other: 'Subspace') -> bool:
        self._check_ambient(other)
        return all(self.contains(other.basis[:, j]) for j in range(other.dim))

    def is_orthogonal(self, other: 'Subspace') -> bool:
        self._check_ambient(other)
        if self.dim == 0 or other.dim == 0:
            return True
        return float(np.linalg.norm(dagger(self._basis) @ other.basis)) <= _slack(self.tol)

    def equals(self, other: 'Subspace') -> bool:
        return self.dim == other.dim and self.includes(other)

    def __repr__(self) -> str:
        return '<Subspace dim={} in C^{}>'.format(self.dim, self.ambient)


def intersect(subspaces: Sequence[Subspace], tol: Optional[float] = None) -> Subspace:
    """Largest subspace contained in every input: kernel of sum_k (I - P_k)."""
    subspaces = list(subspaces)
    if not subspaces:
        raise ValueError('Nothing to intersect')
    ambient = subspaces[0].ambient
    for sub in subspaces[1:]:
        if sub.ambient != ambient:
            raise DimensionMismatch(ambient, sub.ambient)
    tol = resolve_tol(tol if tol is not None else subspaces[0].tol)
    if any(sub.dim == 0 for sub in subspaces):
        return Subspace.zero(ambient, tol)

    eye = np.eye(ambient)
    total = sum(eye - sub.projector for sub in subspaces)
    w, v = scipy.linalg.eigh(hermitian_part(total))
    return Subspace(v[:, w < tol], tol)


class DensityOperator:
    """Trace-one positive semi-definite matrix."""

    def __init__(self, matrix, tol: Optional[float] = None, validate: bool = True) -> None:
        self.tol = resolve_tol(tol)
        m = as_matrix(matrix)
        if validate:
            herm = float(np.linalg.norm(m - dagger(m)))
            if herm > _slack(self.tol):
                raise NotHermitian(herm)
            m = hermitian_part(m)
            tr = np.trace(m).real
            if abs(tr - 1) > _slack(self.tol):
                raise ValueError('Density operator must have unit trace, got {:.12g}'.format(tr))
            low = float(scipy.linalg.eigvalsh(m)[0])
            if low < -_slack(self.tol):
                raise ValueError('Density operator has negative eigenvalue {:.3e}'.format(low))
        self._matrix = m
        self._matrix.setflags(write=False)

    @classmethod
    def pure(cls, vector, tol: Optional[float] = None) -> 'DensityOperator':
        v = as_vector(vector)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), tol)

    @classmethod
    def maximally_mixed(cls, d: int) -> 'DensityOperator':
        return cls(np.eye(d, dtype=complex) / d)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self._matrix).real)

    @property
    def min_eigenvalue(self) -> float:
        return float(scipy.linalg.eigvalsh(self._matrix)[0])

    def fidelity(self, vector) -> float:
        """Overlap <Psi|rho|Psi> with a pure reference."""
        v = as_vector(vector)
        return float(np.vdot(v, self._matrix @ v).real)

    def __repr__(self) -> str:
        return '<DensityOperator d={}>'.format(self.dim)


def _check_operator(op: np.ndarray, expected: int) -> np.ndarray:
    m = as_matrix(op)
    if m.shape[0] != expected:
        raise DimensionMismatch(expected, m.shape[0])
    return m


def embed(op, nbhd: Iterable[int], space: MultipartiteSpace) -> np.ndarray:
    """op acting on the neighborhood, identity on its complement."""
    nbhd = space.subset(nbhd)
    m = _check_operator(op, space.local_dim(nbhd))
    rest = space.complement(nbhd)
    if not rest:
        return m.copy()
    rest_dim = int(np.prod([space.dims[a - 1] for a in rest]))
    full = np.kron(m, np.eye(rest_dim, dtype=complex))

    order = [a - 1 for a in nbhd + rest]
    shape = [space.dims[a] for a in order]
    inverse = list(np.argsort(order))
    n = space.n
    tensor = full.reshape(shape + shape).transpose(inverse + [n + x for x in inverse])
    return tensor.reshape(space.dim, space.dim)


def _trace_out(m: np.ndarray, keep: Tuple[int, ...], space: MultipartiteSpace) -> np.ndarray:
    rest = space.complement(keep)
    order = [a - 1 for a in keep + rest]
    n = space.n
    shape = list(space.dims)
    tensor = m.reshape(shape + shape).transpose(order + [n + x for x in order])
    dk = int(np.prod([space.dims[a - 1] for a in keep]))
    dr = space.dim // dk
    return np.einsum('ajbj->ab', tensor.reshape(dk, dr, dk, dr))


def partial_trace(
    rho: Union[DensityOperator, np.ndarray], keep: Iterable[int], space: MultipartiteSpace
) -> Union[DensityOperator, np.ndarray]:
    """Tr over the complement of `keep`.

    A DensityOperator yields a DensityOperator on the kept factors; a plain
    matrix yields a plain matrix (used for projectors and other operators).
    """
    keep = space.subset(keep)
    if isinstance(rho, DensityOperator):
        m = _check_operator(rho.matrix, space.dim)
        return DensityOperator(_trace_out(m, keep, space), rho.tol)
    return _trace_out(_check_operator(rho, space.dim), keep, space)


def extract_local(op, nbhd: Iterable[int], space: MultipartiteSpace, tol: Optional[float] = None) -> np.ndarray:
    """Inverse of `embed`: the block A with op = A (x) I, or QuasiLocalityError."""
    tol = resolve_tol(tol)
    nbhd = space.subset(nbhd)
    m = _check_operator(op, space.dim)
    local = _trace_out(m, nbhd, space) / (space.dim // space.local_dim(nbhd))
    residual = float(np.linalg.norm(m - embed(local, nbhd, space)))
    if residual > _slack(tol) * max(1.0, float(np.linalg.norm(m))):
        raise QuasiLocalityError(nbhd, residual)
    return local


def support(rho: Union[DensityOperator, np.ndarray], tol: Optional[float] = None) -> Subspace:
    """Span of the eigenvectors with eigenvalue above tol * (largest eigenvalue)."""
    tol = resolve_tol(tol)
    m = rho.matrix if isinstance(rho, DensityOperator) else as_matrix(rho)
    herm = float(np.linalg.norm(m - dagger(m)))
    if herm > _slack(tol) * max(1.0, float(np.linalg.norm(m))):
        raise NotHermitian(herm)
    w, v = scipy.linalg.eigh(hermitian_part(m))
    top = w.max() if w.size else 0.0
    if top <= 0:
        return Subspace.zero(m.shape[0], tol)
    return Subspace(v[:, w > tol * top], tol)


def kron_all(ops: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, ops)


def observable_eigenspace(observable, eigenvalue: float, tol: Optional[float] = None) -> Subspace:
    """Eigenspace of a Hermitian observable, given as a matrix or a Pauli label like 'xxx'."""
    tol = resolve_tol(tol)
    m = pauli(observable) if isinstance(observable, str) else as_matrix(observable)
    herm = float(np.linalg.norm(m - dagger(m)))
    if herm > _slack(tol) * max(1.0, float(np.linalg.norm(m))):
        raise NotHermitian(herm)
    w, v = scipy.linalg.eigh(hermitian_part(m))
    selected = np.abs(w - eigenvalue) <= _slack(tol) * max(1.0, float(np.abs(w).max()))
    return Subspace(v[:, selected], tol)
