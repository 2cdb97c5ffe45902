"""Lindblad generators, their Liouvillian matrices and spectral analysis.

Density matrices are vectorized by stacking columns, so that
vec(A X B) = (B^T (x) A) vec(X) and

    L = -i (I (x) H - H^T (x) I)
        + sum_k [conj(L_k) (x) L_k - 1/2 I (x) L_k^dag L_k - 1/2 (L_k^dag L_k)^T (x) I].
"""
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .exceptions import DimensionMismatch, EigensolverError, NotHermitian, NotInvariant
from .tensor import MultipartiteSpace, NeighborhoodStructure, Subspace, embed
from .utils import as_matrix, as_vector, dagger, hermitian_part, logger, resolve_tol

__all__ = [
    'SPECTRAL_TOLERANCE',
    'Term',
    'LindbladGenerator',
    'Liouvillian',
    'StandardForm',
    'InvarianceReport',
    'SpectralReport',
    'GasReport',
    'liouvillian',
    'standard_form',
    'is_invariant',
    'is_subspace_invariant',
    'invariance_residual',
    'enlarge_subspace',
    'zero_eigenspace',
    'verify_gas',
    'is_gas',
    'vec',
    'unvec',
]

# |lambda| below SPECTRAL_TOLERANCE * ||L||_2 counts as a zero eigenvalue.
SPECTRAL_TOLERANCE = 1e-8

# Fixed points closer than this (in 1 - <Psi|rho|Psi>) to the target are accepted.
FIDELITY_SLACK = 1e-8


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).reshape(-1, order='F')


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape(d, d, order='F')


def _slack(tol: float) -> float:
    return max(100 * tol, 1e-12)


class Term(NamedTuple):
    """A local block and the neighborhood it acts on; `nbhd=None` marks a full operator."""

    op: np.ndarray
    nbhd: Optional[Tuple[int, ...]] = None

    def full(self, space: MultipartiteSpace) -> np.ndarray:
        if self.nbhd is None:
            return self.op
        return embed(self.op, self.nbhd, space)

    @property
    def tag(self) -> Union[List[int], str]:
        return list(self.nbhd) if self.nbhd is not None else 'global'


def _coerce_terms(items, space: MultipartiteSpace) -> Tuple[Term, ...]:
    if items is None:
        return ()
    if isinstance(items, (np.ndarray, Term)):
        items = [items]
    terms = []
    for item in items:
        if isinstance(item, Term):
            if item.nbhd is None:
                op = as_matrix(item.op)
                if op.shape[0] != space.dim:
                    raise DimensionMismatch(space.dim, op.shape[0])
                terms.append(Term(op, None))
            else:
                nbhd = space.subset(item.nbhd)
                op = as_matrix(item.op)
                if op.shape[0] != space.local_dim(nbhd):
                    raise DimensionMismatch(space.local_dim(nbhd), op.shape[0])
                terms.append(Term(op, nbhd))
        else:
            op = as_matrix(item)
            if op.shape[0] != space.dim:
                raise DimensionMismatch(space.dim, op.shape[0])
            terms.append(Term(op, None))
    return tuple(terms)


class LindbladGenerator:
    """H = sum of Hamiltonian terms, and one Lindblad operator per term in `lindblads`.

    Terms are either `Term(local_block, nbhd)` or full d x d matrices (tagged
    'global').
    """

    def __init__(
        self,
        space: MultipartiteSpace,
        hamiltonian: Union[None, np.ndarray, Term, Iterable[Union[Term, np.ndarray]]] = None,
        lindblads: Union[None, np.ndarray, Term, Iterable[Union[Term, np.ndarray]]] = None,
        tol: Optional[float] = None,
    ) -> None:
        self.space = space
        self.tol = resolve_tol(tol)
        self._hamiltonian_terms = _coerce_terms(hamiltonian, space)
        self._lindblad_terms = _coerce_terms(lindblads, space)

        for term in self._hamiltonian_terms:
            residual = float(np.linalg.norm(term.op - dagger(term.op)))
            if residual > _slack(self.tol) * max(1.0, float(np.linalg.norm(term.op))):
                raise NotHermitian(residual)

        d = space.dim
        self._H = sum((hermitian_part(t.full(space)) for t in self._hamiltonian_terms), np.zeros((d, d), complex))
        self._lindblads = [t.full(space) for t in self._lindblad_terms]

    @property
    def hamiltonian_terms(self) -> Tuple[Term, ...]:
        return self._hamiltonian_terms

    @property
    def lindblad_terms(self) -> Tuple[Term, ...]:
        return self._lindblad_terms

    @property
    def H(self) -> np.ndarray:
        return self._H

    @property
    def lindblads(self) -> List[np.ndarray]:
        return self._lindblads

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def effective_hamiltonian(self) -> np.ndarray:
        """H - i/2 sum_k L_k^dag L_k; states supported on an invariant subspace evolve under it."""
        damping = sum((dagger(L) @ L for L in self._lindblads), np.zeros_like(self._H))
        return self._H - 0.5j * damping

    @property
    def scale(self) -> float:
        """||H|| + sum_k ||L_k||^2, the natural size of the Liouvillian."""
        size = float(np.linalg.norm(self._H, 2))
        size += sum(float(np.linalg.norm(L, 2)) ** 2 for L in self._lindblads)
        return size

    def is_quasi_local(self, structure: NeighborhoodStructure) -> bool:
        """Whether every term is tagged with a subset of some neighborhood."""
        return all(
            t.nbhd is not None and structure.contains(t.nbhd)
            for t in self._hamiltonian_terms + self._lindblad_terms
        )

    def scaled(self, lam: float) -> 'LindbladGenerator':
        """(lam H, sqrt(lam) L_k): the generator lam * L."""
        if lam < 0:
            raise ValueError('Scaling factor must be non-negative')
        root = np.sqrt(lam)
        return LindbladGenerator(
            self.space,
            [Term(lam * t.op, t.nbhd) for t in self._hamiltonian_terms],
            [Term(root * t.op, t.nbhd) for t in self._lindblad_terms],
            self.tol,
        )

    def combined(self, other: 'LindbladGenerator') -> 'LindbladGenerator':
        """Generator of the sum L + L' of the two semigroup generators."""
        if other.space != self.space:
            raise DimensionMismatch(self.space.dims, other.space.dims)
        return LindbladGenerator(
            self.space,
            self._hamiltonian_terms + other.hamiltonian_terms,
            self._lindblad_terms + other.lindblad_terms,
            self.tol,
        )

    def with_terms(self, hamiltonian=None, lindblads=None) -> 'LindbladGenerator':
        """Copy with extra Hamiltonian and/or Lindblad terms appended."""
        return LindbladGenerator(
            self.space,
            self._hamiltonian_terms + _coerce_terms(hamiltonian, self.space),
            self._lindblad_terms + _coerce_terms(lindblads, self.space),
            self.tol,
        )

    def __repr__(self) -> str:
        return '<LindbladGenerator dims={} hamiltonian_terms={} lindblads={}>'.format(
            list(self.space.dims), len(self._hamiltonian_terms), len(self._lindblad_terms)
        )


class Liouvillian:
    """Matrix of the generator acting on vec(rho)."""

    def __init__(self, matrix: np.ndarray, d: int) -> None:
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (d * d, d * d):
            raise DimensionMismatch((d * d, d * d), matrix.shape)
        self.matrix = matrix
        self.d = d
        self._norm = None
        self._eig = None

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.d)

    @property
    def norm(self) -> float:
        if self._norm is None:
            self._norm = float(np.linalg.norm(self.matrix, 2)) if self.matrix.size else 0.0
        return self._norm

    def eig(self) -> Tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and right eigenvectors, computed once per instance."""
        if self._eig is None:
            try:
                self._eig = scipy.linalg.eig(self.matrix)
            except (np.linalg.LinAlgError, ValueError) as err:
                raise EigensolverError(err) from err
        return self._eig

    def restrict(self, subspace: Subspace) -> 'Liouvillian':
        """Compression to operators X = V Y V^dag supported on `subspace`.

        Only meaningful when the subspace is invariant; then the restriction
        generates the dynamics of states supported on it.
        """
        if subspace.ambient != self.d:
            raise DimensionMismatch(self.d, subspace.ambient)
        V = subspace.basis
        W = np.kron(V.conj(), V)
        return Liouvillian(dagger(W) @ self.matrix @ W, subspace.dim)

    def __repr__(self) -> str:
        return '<Liouvillian d={}>'.format(self.d)


def liouvillian(gen: LindbladGenerator) -> Liouvillian:
    d = gen.dim
    eye = np.eye(d, dtype=complex)
    H = gen.H
    m = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for L in gen.lindblads:
        LdL = dagger(L) @ L
        m = m + np.kron(L.conj(), L) - 0.5 * np.kron(eye, LdL) - 0.5 * np.kron(LdL.T, eye)
    return Liouvillian(m, d)


def _normalized(target) -> np.ndarray:
    psi = as_vector(target)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError('Target state is the zero vector')
    return psi / norm


class InvarianceReport:
    """Outcome of the pure-state invariance test; truthy when the target is invariant."""

    def __init__(
        self,
        ell: List[complex],
        lindblad_residuals: List[float],
        h: float,
        hamiltonian_residual: float,
        threshold: float,
    ) -> None:
        self.ell = ell
        self.lindblad_residuals = lindblad_residuals
        self.h = h
        self.hamiltonian_residual = hamiltonian_residual
        self.threshold = threshold

    @property
    def violating_index(self) -> Optional[int]:
        for k, residual in enumerate(self.lindblad_residuals):
            if residual > self.threshold:
                return k
        return None

    @property
    def invariant(self) -> bool:
        return self.violating_index is None and self.hamiltonian_residual <= self.threshold

    def __bool__(self) -> bool:
        return self.invariant

    def raise_for_violation(self) -> None:
        k = self.violating_index
        if k is not None:
            raise NotInvariant(k, 'lindblad', self.lindblad_residuals[k])
        if self.hamiltonian_residual > self.threshold:
            raise NotInvariant(None, 'hamiltonian', self.hamiltonian_residual)

    def __repr__(self) -> str:
        return '<InvarianceReport invariant={} h={:.6g}>'.format(self.invariant, self.h)


def _shifted_hamiltonian_terms(gen: LindbladGenerator, ell: Sequence[complex]) -> List[Term]:
    """Terms of H + i/2 sum_k (ell_k^* L_k - ell_k L_k^dag)."""
    terms = list(gen.hamiltonian_terms)
    for lk, term in zip(ell, gen.lindblad_terms):
        if lk == 0:
            continue
        terms.append(Term(0.5j * (np.conj(lk) * term.op - lk * dagger(term.op)), term.nbhd))
    return terms


def is_invariant(gen: LindbladGenerator, target, tol: Optional[float] = None) -> InvarianceReport:
    """Whether |Psi><Psi| is a fixed point: L_k|Psi> = ell_k|Psi> and H~|Psi> = h|Psi>."""
    tol = resolve_tol(tol if tol is not None else gen.tol)
    psi = _normalized(target)
    if psi.shape[0] != gen.dim:
        raise DimensionMismatch(gen.dim, psi.shape[0])
    threshold = _slack(tol) * max(1.0, gen.scale)

    ell, residuals = [], []
    for L in gen.lindblads:
        Lpsi = L @ psi
        lk = complex(np.vdot(psi, Lpsi))
        ell.append(lk)
        residuals.append(float(np.linalg.norm(Lpsi - lk * psi)))

    H_tilde = gen.H.copy()
    for lk, L in zip(ell, gen.lindblads):
        H_tilde += 0.5j * (np.conj(lk) * L - lk * dagger(L))
    Hpsi = H_tilde @ psi
    h = float(np.vdot(psi, Hpsi).real)
    report = InvarianceReport(ell, residuals, h, float(np.linalg.norm(Hpsi - h * psi)), threshold)
    logger.debug('Invariance check: {!r}'.format(report))
    return report


class StandardForm(NamedTuple):
    generator: LindbladGenerator
    h: float
    ell: List[complex]


def standard_form(gen: LindbladGenerator, target, tol: Optional[float] = None) -> StandardForm:
    """Equivalent generator whose Lindblad operators annihilate the target.

    L~_k = L_k - ell_k I and H~ = H + i/2 sum_k (ell_k^* L_k - ell_k L_k^dag)
    generate the same semigroup; H~|Psi> = h|Psi>.
    """
    report = is_invariant(gen, target, tol)
    report.raise_for_violation()

    lindblads = []
    for lk, term in zip(report.ell, gen.lindblad_terms):
        lindblads.append(Term(term.op - lk * np.eye(term.op.shape[0]), term.nbhd))
    shifted = LindbladGenerator(gen.space, _shifted_hamiltonian_terms(gen, report.ell), lindblads, gen.tol)
    return StandardForm(shifted, report.h, report.ell)


def invariance_residual(gen: LindbladGenerator, subspace: Subspace) -> float:
    """max over ||(I - P) L_k P|| and ||(I - P) K P|| with K = -i H - 1/2 sum L^dag L."""
    if subspace.ambient != gen.dim:
        raise DimensionMismatch(gen.dim, subspace.ambient)
    if subspace.dim in (0, subspace.ambient):
        return 0.0
    V = subspace.basis
    Q = np.eye(gen.dim) - subspace.projector
    residuals = [float(np.linalg.norm(Q @ L @ V)) for L in gen.lindblads]
    residuals.append(float(np.linalg.norm(Q @ (-1j * gen.effective_hamiltonian) @ V)))
    return max(residuals)


def is_subspace_invariant(gen: LindbladGenerator, subspace: Subspace, tol: Optional[float] = None) -> bool:
    """Whether states supported on `subspace` stay supported on it.

    Equivalent to the block conditions L_Q = 0 and i H_P - 1/2 sum L_S^dag L_P = 0
    in the splitting H = subspace (+) complement.
    """
    tol = resolve_tol(tol if tol is not None else gen.tol)
    return invariance_residual(gen, subspace) <= _slack(tol) * max(1.0, gen.scale)


def enlarge_subspace(gen: LindbladGenerator, subspace: Subspace, tol: Optional[float] = None) -> Subspace:
    """Smallest invariant subspace containing `subspace`.

    The join of the supports reachable from states on `subspace`: the closure
    of the subspace under K = -i H - 1/2 sum L^dag L and every L_k.
    """
    tol = resolve_tol(tol if tol is not None else gen.tol)
    if subspace.ambient != gen.dim:
        raise DimensionMismatch(gen.dim, subspace.ambient)
    ops = [-1j * gen.effective_hamiltonian] + list(gen.lindblads)
    scale = max(1.0, gen.scale)
    current = subspace
    while True:
        images = [current.basis] + [op @ current.basis / scale for op in ops]
        grown = Subspace.span(np.hstack(images), gen.dim, tol)
        if grown.dim == current.dim:
            return current
        current = grown


class SpectralReport:
    """Zero eigenspace of a Liouvillian and the position of the rest of the spectrum."""

    def __init__(
        self,
        multiplicity: int,
        fixed_points: List[np.ndarray],
        max_real: float,
        marginal: bool,
        eigenvalues: np.ndarray,
        threshold: float,
    ) -> None:
        self.multiplicity = multiplicity
        self.fixed_points = fixed_points
        self.max_real = max_real
        self.marginal = marginal
        self.eigenvalues = eigenvalues
        self.threshold = threshold

    @property
    def gap(self) -> float:
        """Distance of the nonzero spectrum from the imaginary axis."""
        return -self.max_real

    def rightmost(self, count: int = 10) -> np.ndarray:
        return self.eigenvalues[:count]

    def __repr__(self) -> str:
        return '<SpectralReport multiplicity={} gap={:.3e} marginal={}>'.format(
            self.multiplicity, self.gap, self.marginal
        )


def zero_eigenspace(
    liouv: Liouvillian, tol: Optional[float] = None, scale: Optional[float] = None
) -> SpectralReport:
    """Fixed points of the semigroup and the largest real part of the remaining spectrum.

    Eigenvalues with |lambda| < tol * scale count as zero, where tol defaults
    to SPECTRAL_TOLERANCE and scale to ||L||_2 (pass the norm of the full
    Liouvillian when analysing a restriction). Nonzero eigenvalues with real
    part above -tol * scale are marginal.
    """
    tol = SPECTRAL_TOLERANCE if tol is None else tol
    scale = liouv.norm if scale is None else scale
    threshold = tol * scale if scale > 0 else tol
    w, v = liouv.eig()
    order = np.argsort(-w.real, kind='stable')
    w, v = w[order], v[:, order]

    zero = np.abs(w) < threshold
    fixed_points = []
    for j in np.flatnonzero(zero):
        X = unvec(v[:, j], liouv.d)
        tr = np.trace(X)
        if abs(tr) > threshold:
            fixed_points.append(hermitian_part(X / tr))
        else:
            X = hermitian_part(X * np.exp(-1j * np.angle(X.flat[np.argmax(np.abs(X))])))
            fixed_points.append(X / np.linalg.norm(X))

    rest = w[~zero]
    max_real = float(rest.real.max()) if rest.size else -np.inf
    marginal = bool(rest.size and max_real > -threshold)
    report = SpectralReport(int(zero.sum()), fixed_points, max_real, marginal, w, threshold)
    logger.debug('Spectrum: {!r}'.format(report))
    return report


class GasReport:
    """Spectral verdict on global asymptotic stability of a pure target."""

    def __init__(self, gas: bool, reason: str, spectrum: SpectralReport, fidelity: Optional[float]) -> None:
        self.gas = gas
        self.reason = reason
        self.spectrum = spectrum
        self.fidelity = fidelity

    def __bool__(self) -> bool:
        return self.gas

    def __repr__(self) -> str:
        return '<GasReport gas={} reason={!r}>'.format(self.gas, self.reason)


def verify_gas(
    gen: LindbladGenerator, target, tol: Optional[float] = None, liouv: Optional[Liouvillian] = None
) -> GasReport:
    """Spectral GAS test: unique fixed point equal to the target, rest of the spectrum strictly stable.

    `tol` is the spectral tolerance. Raises NotInvariant if the target is not
    a fixed point at all.
    """
    psi = _normalized(target)
    is_invariant(gen, psi).raise_for_violation()
    spectrum = zero_eigenspace(liouv if liouv is not None else liouvillian(gen), tol)

    fidelity = None
    if spectrum.multiplicity == 1:
        fidelity = float(np.vdot(psi, spectrum.fixed_points[0] @ psi).real)

    if spectrum.multiplicity == 0:
        gas, reason = False, 'no-fixed-point'
    elif spectrum.multiplicity > 1:
        gas, reason = False, 'degenerate'
    elif spectrum.marginal:
        gas, reason = False, 'marginal'
    elif 1 - fidelity > FIDELITY_SLACK:
        gas, reason = False, 'wrong-fixed-point'
    else:
        gas, reason = True, 'gas'
    return GasReport(gas, reason, spectrum, fidelity)


def is_gas(gen: LindbladGenerator, target, tol: Optional[float] = None) -> bool:
    return verify_gas(gen, target, tol).gas
