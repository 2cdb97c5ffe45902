"""Decision procedures for quasi-local stabilization.

dqls_test decides whether a pure target can be made GAS by quasi-local
dissipation alone, `did` certifies (or refutes) attractivity of an invariant
subspace by peeling off basins of attraction, and the *_necessary checks
screen Hamiltonian-assisted and conditional problems before any synthesis.
"""
from enum import Enum
from typing import List, Optional

import numpy as np

from .exceptions import DimensionMismatch, InvariancePrecondition
from .generator import LindbladGenerator, invariance_residual, is_subspace_invariant, standard_form
from .tensor import (
    DensityOperator,
    MultipartiteSpace,
    NeighborhoodStructure,
    Subspace,
    embed,
    intersect,
    kernel,
    partial_trace,
    support,
)
from .utils import as_matrix, as_vector, dagger, logger, resolve_tol

__all__ = [
    'DqlsVerdict',
    'DqlsReport',
    'DidOutcome',
    'DidDecomposition',
    'NoGo',
    'Check',
    'dqls_test',
    'did',
    'did_gas',
    'largest_invariant_subspace',
    'qls_necessary',
    'conditional_necessary',
    'nogo_ghz',
    'kernel_condition',
]


class DqlsVerdict(Enum):
    DQLS = 'DQLS'
    NOT_DQLS = 'NotDQLS'


class DidOutcome(Enum):
    COMPLETED = 'Completed'
    NOT_GAS = 'NotGas'


class NoGo(Enum):
    BLOCKED = 'Blocked'
    POSSIBLE = 'Possible'


class Check:
    """Pass/Fail outcome of a necessary condition; truthy on Pass."""

    def __init__(self, passed: bool, reason: str = '') -> None:
        self.passed = passed
        self.reason = reason

    def __bool__(self) -> bool:
        return self.passed

    def __repr__(self) -> str:
        return '<Check {}{}>'.format('Pass' if self.passed else 'Fail', ': ' + self.reason if self.reason else '')


def _slack(tol: float) -> float:
    return max(100 * tol, 1e-12)


def resolve_space(nbhds: NeighborhoodStructure, dim: int, space: Optional[MultipartiteSpace]) -> MultipartiteSpace:
    """`space` if given, else n qubits; checked against the state dimension."""
    if space is None:
        space = MultipartiteSpace.qubits(nbhds.n)
    if space.n != nbhds.n:
        raise DimensionMismatch(space.n, nbhds.n)
    if space.dim != dim:
        raise DimensionMismatch(space.dim, dim)
    return space


def _normalized(target) -> np.ndarray:
    psi = as_vector(target)
    return psi / np.linalg.norm(psi)


class DqlsReport:
    def __init__(
        self,
        target: np.ndarray,
        h0: Subspace,
        supports: List[Subspace],
        local_supports: List[Subspace],
        space: MultipartiteSpace,
    ) -> None:
        self.target = target
        self.h0 = h0
        self.supports = supports
        self.local_supports = local_supports
        self.space = space

    @property
    def d0(self) -> int:
        return self.h0.dim

    @property
    def verdict(self) -> DqlsVerdict:
        return DqlsVerdict.DQLS if self.d0 == 1 else DqlsVerdict.NOT_DQLS

    @property
    def hw(self) -> Subspace:
        """The part of H_0 orthogonal to the target."""
        return self.h0.difference(Subspace.span([self.target], tol=self.h0.tol))

    def __repr__(self) -> str:
        return '<DqlsReport {} d0={}>'.format(self.verdict.value, self.d0)


def dqls_test(
    target,
    nbhds: NeighborhoodStructure,
    space: Optional[MultipartiteSpace] = None,
    tol: Optional[float] = None,
) -> DqlsReport:
    """H_0 = intersection over k of supp(rho_Nk) (x) I; the target is DQLS iff H_0 is one-dimensional."""
    tol = resolve_tol(tol)
    psi = _normalized(target)
    space = resolve_space(nbhds, psi.shape[0], space)
    rho = DensityOperator.pure(psi, tol)

    supports, local_supports = [], []
    for nbhd in nbhds:
        local = support(partial_trace(rho, nbhd, space), tol)
        local_supports.append(local)
        supports.append(Subspace.from_projector(embed(local.projector, nbhd, space), tol))

    report = DqlsReport(psi, intersect(supports, tol), supports, local_supports, space)
    logger.info('DQLS test: {} (d0 = {})'.format(report.verdict.value, report.d0))
    return report


class DidDecomposition:
    """Ordered basins H_S, H_T(1), ..., H_T(q) of the dissipation-induced decomposition."""

    def __init__(
        self, basins: List[Subspace], steps: int, outcome: DidOutcome, remainder: Optional[Subspace] = None
    ) -> None:
        self.basins = basins
        self.steps = steps
        self.outcome = outcome
        self.remainder = remainder

    @property
    def completed(self) -> bool:
        return self.outcome is DidOutcome.COMPLETED

    @property
    def dims(self) -> List[int]:
        return [b.dim for b in self.basins]

    def __repr__(self) -> str:
        return '<DidDecomposition {} steps={} dims={}>'.format(self.outcome.value, self.steps, self.dims)


def did(gen: LindbladGenerator, hs: Subspace, tol: Optional[float] = None) -> DidDecomposition:
    """Decide attractivity of the invariant subspace `hs`.

    Each pass splits H = H_S (+) H_R, forms the blocks L_P = S^dag L R and
    intersects their kernels:
      * empty kernel: all of H_R is pulled into H_S, the decomposition completes;
      * kernel shrinks: the part of H_R outside the kernel is the next basin;
      * kernel stalls: the same is done with -i H_P - 1/2 sum L_Q^dag L_R, and
        if that block vanishes H_R is invariant and `hs` is not attractive.
    `steps` counts executed passes, not basis vectors: the pair dissipators on
    GHZ_3 started from span{|000>, |111>} finish in 2 passes with basins of
    dimension 2, 4 and 2.
    """
    tol = resolve_tol(tol if tol is not None else gen.tol)
    if hs.ambient != gen.dim:
        raise DimensionMismatch(gen.dim, hs.ambient)
    if hs.dim == 0:
        raise ValueError('The starting subspace must be nonzero')
    if not is_subspace_invariant(gen, hs, tol):
        raise InvariancePrecondition(invariance_residual(gen, hs))

    scale = max(1.0, gen.scale)
    basins = [hs]
    S = hs.basis
    steps = 0
    while S.shape[1] < gen.dim:
        steps += 1
        R = Subspace(S, tol).complement().basis
        blocks = [dagger(S) @ L @ R for L in gen.lindblads]
        stacked = np.vstack(blocks) if blocks else np.zeros((0, R.shape[1]), dtype=complex)
        coords = kernel(stacked, tol, scale=scale)

        if coords.shape[1] == R.shape[1]:
            H_P = dagger(S) @ gen.H @ R
            reduced = -1j * H_P
            for L in gen.lindblads:
                reduced = reduced - 0.5 * dagger(dagger(R) @ L @ S) @ (dagger(R) @ L @ R)
            if np.linalg.norm(reduced) <= _slack(tol) * scale:
                logger.debug('DID pass {}: stalled with {}-dimensional invariant remainder'.format(steps, R.shape[1]))
                return DidDecomposition(basins, steps, DidOutcome.NOT_GAS, Subspace(R, tol))
            coords = kernel(reduced, tol, scale=scale)

        if coords.shape[1] == 0:
            T = R
        else:
            T = R @ kernel(dagger(coords), tol, scale=1.0)
        logger.debug('DID pass {}: basin of dimension {}'.format(steps, T.shape[1]))
        basins.append(Subspace(T, tol))
        S = np.hstack([S, T])

    return DidDecomposition(basins, steps, DidOutcome.COMPLETED)


def did_gas(gen: LindbladGenerator, target, tol: Optional[float] = None) -> DidDecomposition:
    """DID of the standard form of `gen` starting from span{|Psi>}; GAS iff it completes."""
    psi = _normalized(target)
    std = standard_form(gen, psi, tol).generator
    return did(std, Subspace.span([psi], tol=tol), tol)


def largest_invariant_subspace(H, within: Subspace, tol: Optional[float] = None) -> Subspace:
    """Largest H-invariant subspace contained in `within`.

    Iterates K <- {v in K : H v in K} until the dimension stops shrinking.
    """
    tol = resolve_tol(tol)
    H = as_matrix(H)
    if H.shape[0] != within.ambient:
        raise DimensionMismatch(within.ambient, H.shape[0])
    scale = max(1.0, float(np.linalg.norm(H, 2)))
    current = within
    while current.dim:
        B = current.basis
        leak = H @ B - B @ (dagger(B) @ H @ B)
        coords = kernel(leak, tol, scale=scale)
        if coords.shape[1] == current.dim:
            return current
        current = Subspace(B @ coords, tol) if coords.shape[1] else Subspace.zero(within.ambient, tol)
    return current


def qls_necessary(
    target,
    nbhds: NeighborhoodStructure,
    h_c,
    space: Optional[MultipartiteSpace] = None,
    report: Optional[DqlsReport] = None,
    tol: Optional[float] = None,
) -> Check:
    """No H_c-invariant subspace of H_0 other than span{|Psi>} may exist.

    Every quasi-local dissipator that keeps the target invariant vanishes on
    H_0, so such a subspace would be invariant for the whole generator. The
    test computes the largest invariant subspace exactly; for d0 = 2 it also
    reports whether H_c|Phi_1> leaves H_0, Phi_1 spanning H_0 (-) target.
    """
    tol = resolve_tol(tol)
    psi = _normalized(target)
    if report is None:
        report = dqls_test(psi, nbhds, space, tol)
    if report.verdict is DqlsVerdict.DQLS:
        return Check(True, 'target is DQLS')

    H = as_matrix(h_c)
    h = float(np.vdot(psi, H @ psi).real)
    H = H - h * np.eye(H.shape[0])
    scale = max(1.0, float(np.linalg.norm(H, 2)))
    if np.linalg.norm(H @ psi) > _slack(tol) * scale:
        return Check(False, 'target is not an eigenvector of H_c')

    if report.d0 == 2:
        phi = report.hw.basis[:, 0]
        leak = report.h0.residual(H @ phi)
        if leak <= _slack(tol) * scale:
            return Check(False, 'H_c maps the unwanted state back into H_0')
        return Check(True, 'H_c|Phi_1> leaves H_0 (residual {:.3e})'.format(leak))

    invariant = largest_invariant_subspace(H, report.h0, tol)
    if invariant.dim > 1:
        return Check(False, 'H_0 contains a {}-dimensional H_c-invariant subspace'.format(invariant.dim))
    return Check(True, 'no H_c-invariant subspace of H_0 besides the target')


def conditional_necessary(
    target,
    nbhds: NeighborhoodStructure,
    h_prime: Subspace,
    space: Optional[MultipartiteSpace] = None,
    report: Optional[DqlsReport] = None,
    tol: Optional[float] = None,
) -> Check:
    """H' must contain the target and be orthogonal to H_w = H_0 (-) span{|Psi>}."""
    tol = resolve_tol(tol)
    psi = _normalized(target)
    if report is None:
        report = dqls_test(psi, nbhds, space, tol)
    if not h_prime.contains(psi):
        return Check(False, "H' does not contain the target")
    if not h_prime.is_orthogonal(report.hw):
        return Check(False, "H' overlaps the unwanted part of H_0")
    return Check(True)


def nogo_ghz(n: int, nbhds: NeighborhoodStructure) -> NoGo:
    """GHZ_n is not QLS when every neighborhood has fewer than ceil(n/2) qubits."""
    threshold = (n + 1) // 2
    verdict = NoGo.BLOCKED if nbhds.max_size < threshold else NoGo.POSSIBLE
    logger.debug('GHZ_{} no-go: largest neighborhood {} vs threshold {}: {}'.format(
        n, nbhds.max_size, threshold, verdict.value))
    return verdict


def kernel_condition(
    gen: LindbladGenerator,
    target,
    space: Optional[MultipartiteSpace] = None,
    tol: Optional[float] = None,
) -> Check:
    """supp(rho_N) must lie in ker(D_N) for every tagged dissipator of the standard form."""
    tol = resolve_tol(tol if tol is not None else gen.tol)
    psi = _normalized(target)
    space = space or gen.space
    std = standard_form(gen, psi, tol).generator
    rho = DensityOperator.pure(psi, tol)
    scale = max(1.0, gen.scale)

    for k, term in enumerate(std.lindblad_terms):
        if term.nbhd is None:
            residual = float(np.linalg.norm(term.op @ psi))
        else:
            local = support(partial_trace(rho, term.nbhd, space), tol)
            residual = float(np.linalg.norm(term.op @ local.basis))
        if residual > _slack(tol) * scale:
            return Check(False, 'dissipator {} does not annihilate its reduced support'.format(k))
    return Check(True)
