"""Controller synthesis.

Quasi-local Hamiltonians and dissipators are parametrized by real
coordinates in a local operator basis of each neighborhood, so every
candidate is quasi-local by construction. Invariance of the target (and, in
conditional mode, of H' and its complement) is a homogeneous linear
constraint on those coordinates; candidates are drawn uniformly from a box
in the constraint nullspace and then verified.
"""
from enum import Enum
from queue import Queue
from threading import Lock, Thread
from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np
import scipy.linalg

from .analysis import (
    DqlsReport,
    DqlsVerdict,
    NoGo,
    conditional_necessary,
    did_gas,
    dqls_test,
    nogo_ghz,
    qls_necessary,
    resolve_space,
)
from .exceptions import (
    ConstraintError,
    EmptyNullspace,
    Infeasible,
    NotCompensable,
    QuasiLocalityError,
)
from .generator import (
    LindbladGenerator,
    SpectralReport,
    Term,
    is_invariant,
    is_subspace_invariant,
    liouvillian,
    verify_gas,
    zero_eigenspace,
)
from .operators import hermitian_basis
from .tensor import (
    MultipartiteSpace,
    NeighborhoodStructure,
    Subspace,
    embed,
    extract_local,
    intersect,
    partial_trace,
    support,
)
from .utils import (
    as_vector,
    assert_not_negative_integer,
    assert_positive_integer,
    assert_positive_number,
    dagger,
    logger,
    resolve_tol,
)

__all__ = [
    'Verdict',
    'QlOperatorBasis',
    'ConstraintSystem',
    'Candidate',
    'ConditionalReport',
    'SynthesisResult',
    'WTypeConstruction',
    'Synthesizer',
    'build_constraints',
    'randomize',
    'verify_conditional',
    'construct_wtype',
    'drift_compensate',
    'synthesize_qls',
    'synthesize_conditional',
]


class Verdict(Enum):
    GAS = 'GAS'
    CONDITIONALLY_AS = 'ConditionallyAS'
    FAILED = 'Failed'


def _slack(tol: float) -> float:
    return max(100 * tol, 1e-12)


def _normalized(target) -> np.ndarray:
    psi = as_vector(target)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError('Target state is the zero vector')
    return psi / norm


def _realify(columns: np.ndarray) -> np.ndarray:
    """Real linear map of real coordinates equivalent to a complex one."""
    return np.vstack([columns.real, columns.imag])


def _nullspace(matrix: np.ndarray, tol: float) -> np.ndarray:
    if matrix.shape[0] == 0 or not np.any(matrix):
        return np.eye(matrix.shape[1])
    return scipy.linalg.null_space(matrix, rcond=tol)


class QlOperatorBasis:
    """Per-neighborhood operator bases.

    `hermitian[k]` holds the d_k^2 orthonormal Hermitian products (identity
    first); `operators[k]` doubles it with i times each element, so that real
    coordinates reach every complex matrix on the neighborhood.
    """

    def __init__(self, space: MultipartiteSpace, nbhds: NeighborhoodStructure) -> None:
        self.space = space
        self.nbhds = nbhds
        self.hermitian = [hermitian_basis(space.subdims(nbhd)) for nbhd in nbhds]
        self.operators = [herm + [1j * m for m in herm] for herm in self.hermitian]

    def count(self, k: int) -> int:
        return len(self.operators[k])

    def combine(self, k: int, coeffs: np.ndarray) -> np.ndarray:
        return sum(c * m for c, m in zip(coeffs, self.operators[k]))


class ConstraintSystem:
    """Nullspaces of the stacked invariance constraints, one per neighborhood.

    `nullspaces[k]` has one column per free real coordinate of D_k in
    `basis.operators[k]`; `hamiltonian_nullspace` does the same jointly for
    all Hamiltonian terms, whose coordinates are listed in `hamiltonian_index`
    as (neighborhood, basis element) pairs.
    """

    def __init__(
        self,
        target: np.ndarray,
        basis: QlOperatorBasis,
        mode: str,
        h_prime: Optional[Subspace],
        matrices: List[np.ndarray],
        nullspaces: List[np.ndarray],
        hamiltonian_index: List[tuple],
        hamiltonian_nullspace: Optional[np.ndarray],
        tol: float,
    ) -> None:
        self.target = target
        self.basis = basis
        self.mode = mode
        self.h_prime = h_prime
        self.matrices = matrices
        self.nullspaces = nullspaces
        self.hamiltonian_index = hamiltonian_index
        self.hamiltonian_nullspace = hamiltonian_nullspace
        self.tol = tol

    @property
    def space(self) -> MultipartiteSpace:
        return self.basis.space

    @property
    def nbhds(self) -> NeighborhoodStructure:
        return self.basis.nbhds

    @property
    def dims(self) -> List[int]:
        return [ns.shape[1] for ns in self.nullspaces]

    @property
    def empty(self) -> bool:
        return not any(self.dims)

    def __repr__(self) -> str:
        return '<ConstraintSystem mode={} dims={}>'.format(self.mode, self.dims)


def build_constraints(
    target,
    nbhds: NeighborhoodStructure,
    mode: str = 'qls',
    h_prime: Optional[Subspace] = None,
    space: Optional[MultipartiteSpace] = None,
    hamiltonian: bool = True,
    tol: Optional[float] = None,
) -> ConstraintSystem:
    """Constraint nullspaces for quasi-local controls that keep the target invariant.

    mode 'qls':         D_k|Psi> = 0 per neighborhood and, when `hamiltonian`
                        is set, (sum_k H_k)|Psi> = 0 with traceless local terms.
    mode 'conditional': additionally [D_k, P'] = 0 with P' the projector on
                        `h_prime`; no Hamiltonian.
    """
    tol = resolve_tol(tol)
    if mode not in ('qls', 'conditional'):
        raise ValueError('Unknown constraint mode {!r}'.format(mode))
    psi = _normalized(target)
    space = resolve_space(nbhds, psi.shape[0], space)

    projector = None
    if mode == 'conditional':
        if h_prime is None:
            raise ConstraintError("Conditional constraints need a subspace H'")
        if h_prime.ambient != space.dim:
            raise ConstraintError("H' lives in dimension {}, expected {}".format(h_prime.ambient, space.dim))
        if not h_prime.contains(psi):
            raise ConstraintError("H' does not contain the target")
        projector = h_prime.projector

    basis = QlOperatorBasis(space, nbhds)
    matrices, nullspaces = [], []
    for k, nbhd in enumerate(nbhds):
        full = [embed(op, nbhd, space) for op in basis.operators[k]]
        blocks = [_realify(np.column_stack([F @ psi for F in full]))]
        if projector is not None:
            blocks.append(_realify(np.column_stack([(F @ projector - projector @ F).reshape(-1) for F in full])))
        matrix = np.vstack(blocks)
        matrices.append(matrix)
        nullspaces.append(_nullspace(matrix, tol))

    index, ham_nullspace = [], None
    if hamiltonian and mode == 'qls':
        columns = []
        for k, nbhd in enumerate(nbhds):
            for j, op in enumerate(basis.hermitian[k][1:], start=1):
                index.append((k, j))
                columns.append(embed(op, nbhd, space) @ psi)
        ham_nullspace = _nullspace(_realify(np.column_stack(columns)), tol)

    cs = ConstraintSystem(psi, basis, mode, h_prime, matrices, nullspaces, index, ham_nullspace, tol)
    logger.debug('Constraint nullspace dimensions: {}{}'.format(
        cs.dims, '' if ham_nullspace is None else ', hamiltonian {}'.format(ham_nullspace.shape[1])))
    return cs


class Candidate(NamedTuple):
    hamiltonian: List[Term]
    dissipators: List[Term]


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        return np.random.default_rng(list(seed))
    return np.random.default_rng(seed)


def randomize(cs: ConstraintSystem, gamma: float = 1.0, seed=None) -> Candidate:
    """Draw free coordinates i.i.d. uniform on [-gamma, gamma] and rebuild the operators.

    `seed` is an int, a sequence of ints (e.g. (master_seed, trial)) or a
    numpy Generator. Each rebuilt operator is re-checked against its constraints.
    """
    if cs.empty:
        raise EmptyNullspace()
    rng = _rng(seed)
    psi = cs.target
    space = cs.space
    threshold = _slack(cs.tol) * max(1.0, gamma)

    dissipators = []
    for k, (nbhd, ns) in enumerate(zip(cs.nbhds, cs.nullspaces)):
        if not ns.shape[1]:
            continue
        coords = ns @ rng.uniform(-gamma, gamma, ns.shape[1])
        op = cs.basis.combine(k, coords)
        full = embed(op, nbhd, space)
        residual = float(np.linalg.norm(full @ psi))
        if cs.h_prime is not None:
            P = cs.h_prime.projector
            residual = max(residual, float(np.linalg.norm(full @ P - P @ full)))
        if residual > threshold * max(1.0, float(np.linalg.norm(op))):
            raise ConstraintError('Rebuilt dissipator {} violates its constraints ({:.3e})'.format(k, residual))
        dissipators.append(Term(op, nbhd))

    hamiltonian = []
    if cs.hamiltonian_nullspace is not None and cs.hamiltonian_nullspace.shape[1]:
        ns = cs.hamiltonian_nullspace
        coords = ns @ rng.uniform(-gamma, gamma, ns.shape[1])
        local = [np.zeros_like(h[0]) for h in cs.basis.hermitian]
        for c, (k, j) in zip(coords, cs.hamiltonian_index):
            local[k] = local[k] + c * cs.basis.hermitian[k][j]
        hamiltonian = [Term(op, nbhd) for op, nbhd in zip(local, cs.nbhds) if np.any(op)]
        total = sum(embed(t.op, t.nbhd, space) for t in hamiltonian) if hamiltonian else None
        if total is not None and np.linalg.norm(total @ psi) > threshold * max(1.0, float(np.linalg.norm(total))):
            raise ConstraintError('Rebuilt Hamiltonian does not annihilate the target')

    return Candidate(hamiltonian, dissipators)


class ConditionalReport:
    """Verdict of the conditional test on H'; truthy when conditionally AS."""

    def __init__(
        self,
        ok: bool,
        reason: str,
        invariant: bool,
        complement_invariant: bool,
        spectrum: Optional[SpectralReport],
        fidelity: Optional[float],
    ) -> None:
        self.ok = ok
        self.reason = reason
        self.invariant = invariant
        self.complement_invariant = complement_invariant
        self.spectrum = spectrum
        self.fidelity = fidelity

    def __bool__(self) -> bool:
        return self.ok

    def __repr__(self) -> str:
        return '<ConditionalReport ok={} reason={!r}>'.format(self.ok, self.reason)


def verify_conditional(
    gen: LindbladGenerator, target, h_prime: Subspace, tol: Optional[float] = None
) -> ConditionalReport:
    """Whether states supported on H' converge to the target.

    Requires H' to be invariant; the generator restricted to operators on H'
    must then have the target as its unique fixed point and a strictly stable
    remaining spectrum. Invariance of the complement is reported, not required.
    """
    psi = _normalized(target)
    if not is_invariant(gen, psi):
        return ConditionalReport(False, 'target not invariant', False, False, None, None)
    if not h_prime.contains(psi):
        return ConditionalReport(False, "H' does not contain the target", False, False, None, None)

    invariant = is_subspace_invariant(gen, h_prime)
    complement = is_subspace_invariant(gen, h_prime.complement())
    if not invariant:
        return ConditionalReport(False, "H' is not invariant", False, complement, None, None)

    liouv = liouvillian(gen)
    spectrum = zero_eigenspace(liouv.restrict(h_prime), tol, scale=liouv.norm)
    fidelity = None
    if spectrum.multiplicity == 1:
        coords = dagger(h_prime.basis) @ psi
        fidelity = float(np.vdot(coords, spectrum.fixed_points[0] @ coords).real)

    if spectrum.multiplicity != 1:
        ok, reason = False, 'degenerate' if spectrum.multiplicity else 'no-fixed-point'
    elif spectrum.marginal:
        ok, reason = False, 'marginal'
    elif 1 - fidelity > 1e-8:
        ok, reason = False, 'wrong-fixed-point'
    else:
        ok, reason = True, 'conditionally-as'
    return ConditionalReport(ok, reason, invariant, complement, spectrum, fidelity)


class WTypeConstruction:
    """H' and explicit ladder dissipators, or the neighborhood where the construction fails."""

    def __init__(
        self,
        applicable: bool,
        h_prime: Optional[Subspace] = None,
        dissipators: Optional[List[Term]] = None,
        reason: str = '',
    ) -> None:
        self.applicable = applicable
        self.h_prime = h_prime
        self.dissipators = dissipators or []
        self.reason = reason

    def generator(self, space: MultipartiteSpace) -> LindbladGenerator:
        return LindbladGenerator(space, None, self.dissipators)

    def __repr__(self) -> str:
        if not self.applicable:
            return '<WTypeConstruction NotApplicable: {}>'.format(self.reason)
        return '<WTypeConstruction dim H\'={} dissipators={}>'.format(self.h_prime.dim, len(self.dissipators))


def _canonical_basis(sub: Subspace, tol: float) -> np.ndarray:
    """Gram-Schmidt of the projected computational basis vectors, in lexicographic order."""
    P = sub.projector
    vectors = []
    for i in range(sub.ambient):
        v = P[:, i].copy()
        for u in vectors:
            v = v - np.vdot(u, v) * u
        norm = np.linalg.norm(v)
        if norm > 1e3 * _slack(tol):
            vectors.append(v / norm)
        if len(vectors) == sub.dim:
            break
    for i in range(sub.dim):
        if len(vectors) == sub.dim:
            break
        v = sub.basis[:, i].copy()
        for u in vectors:
            v = v - np.vdot(u, v) * u
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            vectors.append(v / norm)
    return np.column_stack(vectors) if vectors else np.zeros((sub.ambient, 0), dtype=complex)


def construct_wtype(
    target,
    nbhds: NeighborhoodStructure,
    space: Optional[MultipartiteSpace] = None,
    report: Optional[DqlsReport] = None,
    tol: Optional[float] = None,
) -> WTypeConstruction:
    """Conditional stabilization by local ladders.

    For each neighborhood the reduced support of the target splits into the
    reduced support of H_w (the part that cannot be separated from the target)
    and a remainder H^t; it must be strictly larger than the former. The
    dissipator climbs the ladder r_m -> ... -> r_1 -> t_1 through the local
    orthocomplement H^r and annihilates the reduced support, so it is
    block-diagonal for H' = H (-) intersection of (H^w_k (x) I).
    """
    tol = resolve_tol(tol)
    psi = _normalized(target)
    space = resolve_space(nbhds, psi.shape[0], space)
    if report is None:
        report = dqls_test(psi, nbhds, space, tol)
    unwanted = report.hw.projector

    dissipators, blocked = [], []
    for k, nbhd in enumerate(nbhds):
        reduced = report.local_supports[k]
        local_dim = reduced.ambient
        if report.hw.dim:
            hw = support(partial_trace(unwanted, nbhd, space), tol)
        else:
            hw = Subspace.zero(local_dim, tol)
        if not reduced.includes(hw) or hw.dim >= reduced.dim:
            return WTypeConstruction(
                False, reason='reduced support of H_w is not strictly inside that of the target on {}'.format(
                    list(nbhd))
            )
        blocked.append(Subspace.from_projector(embed(hw.projector, nbhd, space), tol) if hw.dim else None)

        t = _canonical_basis(reduced.difference(hw), tol)
        r = _canonical_basis(reduced.complement(), tol)
        if not r.shape[1]:
            continue
        D = np.outer(t[:, 0], r[:, 0].conj())
        for j in range(1, r.shape[1]):
            D = D + np.outer(r[:, j - 1], r[:, j].conj())
        dissipators.append(Term(D, nbhd))

    if any(b is None for b in blocked):
        h_prime = Subspace.full(space.dim, tol)
    else:
        h_prime = intersect(blocked, tol).complement()
    logger.info("W-type construction: dim H' = {}, {} dissipators".format(h_prime.dim, len(dissipators)))
    return WTypeConstruction(True, h_prime, dissipators)


def drift_compensate(
    drift: LindbladGenerator,
    target,
    nbhds: Optional[NeighborhoodStructure] = None,
    tol: Optional[float] = None,
) -> List[Term]:
    """Rank-one dissipators |Psi><chi_N| that make the drift leave the target invariant.

    Per neighborhood tag N, <chi_N| = <Psi| + 2i <Psi|H_N Q - sum ell_k^* <Psi|L_k Q
    with Q the projector off the target, summed over the drift terms tagged N.
    A dissipator keeps the tag when it factors on N; otherwise it is global.
    """
    tol = resolve_tol(tol if tol is not None else drift.tol)
    psi = _normalized(target)
    space = drift.space
    threshold = _slack(tol) * max(1.0, drift.scale)

    if nbhds is not None:
        for term in drift.hamiltonian_terms + drift.lindblad_terms:
            if term.nbhd is None or not nbhds.contains(term.nbhd):
                residual = _locality_residual(term.full(space), nbhds, space, tol)
                if residual > threshold:
                    raise QuasiLocalityError(term.nbhd or tuple(range(1, space.n + 1)), residual)

    rows: Dict[Any, np.ndarray] = {}
    Q = np.eye(space.dim) - np.outer(psi, psi.conj())
    for k, term in enumerate(drift.lindblad_terms):
        L = term.full(space)
        ell = complex(np.vdot(psi, L @ psi))
        residual = float(np.linalg.norm(L @ psi - ell * psi))
        if residual > threshold:
            raise NotCompensable(k, residual)
        rows[term.nbhd] = rows.get(term.nbhd, 0) - np.conj(ell) * (psi.conj() @ L @ Q)
    for term in drift.hamiltonian_terms:
        rows[term.nbhd] = rows.get(term.nbhd, 0) + 2j * (psi.conj() @ term.full(space) @ Q)

    total = sum(rows.values(), np.zeros(space.dim, dtype=complex))
    if np.linalg.norm(total) <= threshold:
        return []

    compensators = []
    for nbhd, row in rows.items():
        if np.linalg.norm(row) <= threshold:
            continue
        D = np.outer(psi, psi.conj() + row)
        if nbhd is not None:
            try:
                compensators.append(Term(extract_local(D, nbhd, space, tol), nbhd))
                continue
            except QuasiLocalityError:
                logger.warn('Compensation dissipator for neighborhood {} is not quasi-local; tagged global'.format(
                    list(nbhd)))
        compensators.append(Term(D, None))
    return compensators


def _locality_residual(op: np.ndarray, nbhds: NeighborhoodStructure, space: MultipartiteSpace, tol: float) -> float:
    best = float(np.linalg.norm(op))
    for nbhd in nbhds:
        try:
            extract_local(op, nbhd, space, tol)
            return 0.0
        except QuasiLocalityError as err:
            best = min(best, err.residual)
    return best


class SynthesisResult:
    def __init__(
        self,
        verdict: Verdict,
        generator: Optional[LindbladGenerator],
        seed: int,
        trials: int,
        trial: Optional[int] = None,
        evidence: Any = None,
        failures: Optional[List[dict]] = None,
        h_prime: Optional[Subspace] = None,
        diagnostics: Optional[List[str]] = None,
    ) -> None:
        self.verdict = verdict
        self.generator = generator
        self.seed = seed
        self.trials = trials
        self.trial = trial
        self.evidence = evidence
        self.failures = failures or []
        self.h_prime = h_prime
        self.diagnostics = diagnostics or []

    @property
    def ok(self) -> bool:
        return self.verdict is not Verdict.FAILED

    def __repr__(self) -> str:
        return '<SynthesisResult {} trials={} seed={}>'.format(self.verdict.value, self.trials, self.seed)


class _TrialOutcome(NamedTuple):
    index: int
    ok: bool
    generator: LindbladGenerator
    evidence: Any
    summary: dict


def _ghz_vector(space: MultipartiteSpace) -> Optional[np.ndarray]:
    if not space.is_qubits:
        return None
    v = np.zeros(space.dim, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return v


class Synthesizer:
    """Randomized synthesis of quasi-local controls.

    Configure by class attributes (subclassing) or keyword arguments.
    """

    # Half-width of the interval the free coordinates are drawn from.
    GAMMA = 1.0

    # Number of independent draws before giving up.
    TRIALS = 16

    # Master seed; trial j draws from default_rng([SEED, j]).
    SEED = 0

    # Number of worker threads evaluating trials.
    WORKERS = 1

    # 'spectral' (Liouvillian eigendecomposition) or 'did' (basin decomposition).
    VERIFIER = 'spectral'

    def __init__(
        self,
        gamma: Optional[float] = None,
        trials: Optional[int] = None,
        seed: Optional[int] = None,
        workers: Optional[int] = None,
        verifier: Optional[str] = None,
        tol: Optional[float] = None,
    ) -> None:
        if gamma is not None:
            self.GAMMA = gamma
        if trials is not None:
            self.TRIALS = trials
        if seed is not None:
            self.SEED = seed
        if workers is not None:
            self.WORKERS = workers
        if verifier is not None:
            self.VERIFIER = verifier
        self.tol = resolve_tol(tol)
        self._check_config()

    def _check_config(self) -> None:
        assert_positive_number(self.GAMMA)
        assert_positive_integer(self.TRIALS)
        assert_not_negative_integer(self.SEED)
        assert_positive_integer(self.WORKERS)
        assert self.VERIFIER in ('spectral', 'did')

    def synthesize_qls(
        self,
        target,
        nbhds: NeighborhoodStructure,
        space: Optional[MultipartiteSpace] = None,
        hamiltonian=None,
        drift: Optional[LindbladGenerator] = None,
        force: bool = False,
    ) -> SynthesisResult:
        """Random quasi-local H_c and D_k until the target is GAS.

        `hamiltonian` fixes H_c (full matrix or list of Terms) and only the
        dissipators are drawn. `drift` is compensated first and kept in every
        candidate. Known obstructions raise Infeasible unless `force` is set.
        """
        psi = _normalized(target)
        space = resolve_space(nbhds, psi.shape[0], space)
        report = dqls_test(psi, nbhds, space, self.tol)
        diagnostics = ['{} (d0 = {})'.format(report.verdict.value, report.d0)]

        ghz = _ghz_vector(space)
        if ghz is not None and space.n > 2 and abs(abs(np.vdot(ghz, psi)) - 1) < 1e-9:
            if nogo_ghz(space.n, nbhds) is NoGo.BLOCKED:
                msg = 'GHZ_{} is not QLS: every neighborhood has fewer than {} qubits'.format(
                    space.n, (space.n + 1) // 2)
                diagnostics.append(msg)
                if not force:
                    raise Infeasible(msg)
                logger.warn('{}; running {} forced trials'.format(msg, self.TRIALS))

        base = LindbladGenerator(space, tol=self.tol)
        if drift is not None:
            base = drift.with_terms(lindblads=drift_compensate(drift, psi, tol=self.tol))
        if hamiltonian is not None:
            base = base.with_terms(hamiltonian=hamiltonian)
            if report.verdict is DqlsVerdict.NOT_DQLS:
                fixed = LindbladGenerator(space, hamiltonian).H
                check = qls_necessary(psi, nbhds, fixed, space, report, self.tol)
                diagnostics.append(check.reason)
                if not check and not force:
                    raise Infeasible(check.reason)

        cs = build_constraints(psi, nbhds, 'qls', space=space, hamiltonian=hamiltonian is None, tol=self.tol)

        def run(index: int) -> _TrialOutcome:
            candidate = randomize(cs, self.GAMMA, (self.SEED, index))
            gen = base.with_terms(candidate.hamiltonian, candidate.dissipators)
            if self.VERIFIER == 'did':
                evidence = did_gas(gen, psi, self.tol)
                return _TrialOutcome(index, evidence.completed, gen, evidence, {
                    'trial': index, 'outcome': evidence.outcome.value, 'steps': evidence.steps})
            evidence = verify_gas(gen, psi)
            return _TrialOutcome(index, evidence.gas, gen, evidence, {
                'trial': index,
                'reason': evidence.reason,
                'multiplicity': evidence.spectrum.multiplicity,
                'max_real': evidence.spectrum.max_real,
            })

        return self._collect(run, Verdict.GAS, diagnostics)

    def synthesize_conditional(
        self,
        target,
        nbhds: NeighborhoodStructure,
        h_prime: Optional[Subspace] = None,
        space: Optional[MultipartiteSpace] = None,
    ) -> SynthesisResult:
        """Random quasi-local dissipators commuting with P' until the target is H'-conditionally AS.

        `h_prime` defaults to H (-) H_w, the largest admissible choice.
        """
        psi = _normalized(target)
        space = resolve_space(nbhds, psi.shape[0], space)
        report = dqls_test(psi, nbhds, space, self.tol)
        if h_prime is None:
            h_prime = report.hw.complement()
        elif not h_prime.contains(psi):
            raise ConstraintError("H' does not contain the target")
        check = conditional_necessary(psi, nbhds, h_prime, space, report, self.tol)
        if not check:
            raise Infeasible(check.reason)

        cs = build_constraints(psi, nbhds, 'conditional', h_prime, space, tol=self.tol)
        if cs.empty:
            raise EmptyNullspace()
        base = LindbladGenerator(space, tol=self.tol)

        def run(index: int) -> _TrialOutcome:
            candidate = randomize(cs, self.GAMMA, (self.SEED, index))
            gen = base.with_terms(lindblads=candidate.dissipators)
            evidence = verify_conditional(gen, psi, h_prime, None)
            summary = {'trial': index, 'reason': evidence.reason}
            if evidence.spectrum is not None:
                summary['multiplicity'] = evidence.spectrum.multiplicity
            return _TrialOutcome(index, evidence.ok, gen, evidence, summary)

        result = self._collect(run, Verdict.CONDITIONALLY_AS, ['{} (d0 = {})'.format(report.verdict.value, report.d0)])
        result.h_prime = h_prime
        return result

    def _collect(self, run, success: Verdict, diagnostics: List[str]) -> SynthesisResult:
        """Evaluate trials on the worker pool; the lowest successful index wins."""
        outcomes = self._run_trials(run)
        best = next((o for o in outcomes if o.ok), None)
        failures = [o.summary for o in outcomes if not o.ok and (best is None or o.index < best.index)]
        for summary in failures:
            logger.debug('Trial failed: {}'.format(summary))

        if best is None:
            logger.info('Synthesis failed after {} trials'.format(self.TRIALS))
            return SynthesisResult(
                Verdict.FAILED, None, self.SEED, self.TRIALS, failures=failures, diagnostics=diagnostics)
        logger.info('Synthesis succeeded on trial {}: {}'.format(best.index, success.value))
        return SynthesisResult(
            success, best.generator, self.SEED, best.index + 1, best.index, best.evidence, failures,
            diagnostics=diagnostics)

    def _run_trials(self, run) -> List[_TrialOutcome]:
        jobs = Queue()
        results = Queue()
        lock = Lock()
        state = {'best': self.TRIALS}

        for index in range(self.TRIALS):
            jobs.put(index)

        def work() -> None:
            while True:
                index = jobs.get()
                if index is None:
                    break
                with lock:
                    skip = index > state['best']
                if skip:
                    results.put(None)
                    continue
                try:
                    outcome = run(index)
                except Exception as err:
                    results.put(err)
                    continue
                if outcome.ok:
                    with lock:
                        state['best'] = min(state['best'], index)
                results.put(outcome)

        workers = min(self.WORKERS, self.TRIALS)
        for idx in range(workers):
            jobs.put(None)
            thread = Thread(target=work, name='trial-{}'.format(idx))
            thread.daemon = True
            thread.start()

        outcomes = []
        for _ in range(self.TRIALS):
            item = results.get()
            if isinstance(item, Exception):
                raise item
            if item is not None:
                outcomes.append(item)
        return sorted(outcomes, key=lambda o: o.index)


def synthesize_qls(target, nbhds: NeighborhoodStructure, gamma=None, trials=None, seed=None, workers=None,
                   verifier=None, tol=None, **kwargs) -> SynthesisResult:
    return Synthesizer(gamma, trials, seed, workers, verifier, tol).synthesize_qls(target, nbhds, **kwargs)


def synthesize_conditional(target, nbhds: NeighborhoodStructure, h_prime=None, gamma=None, trials=None, seed=None,
                           workers=None, tol=None, **kwargs) -> SynthesisResult:
    return Synthesizer(gamma, trials, seed, workers, tol=tol).synthesize_conditional(target, nbhds, h_prime, **kwargs)
