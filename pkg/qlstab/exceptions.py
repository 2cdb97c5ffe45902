from typing import Optional, Sequence


class StabilizationError(Exception):
    """Base class for qlstab errors."""

    def __init__(self, msg: str, cause: Optional[Exception] = None) -> None:
        super().__init__(msg)
        self.msg = msg
        self.cause = cause


class DimensionMismatch(StabilizationError):
    """Operands live in spaces of different dimension."""

    def __init__(self, expected, got, cause: Optional[Exception] = None) -> None:
        self.expected = expected
        self.got = got
        super().__init__('Dimension mismatch: expected {}, got {}.'.format(expected, got), cause)


class NeighborhoodError(StabilizationError):
    """A subsystem subset is empty, out of range or leaves subsystems uncovered."""


class NotHermitian(StabilizationError):
    def __init__(self, residual: float) -> None:
        self.residual = residual
        super().__init__('Operator is not Hermitian (residual {:.3e}).'.format(residual))


class NotInvariant(StabilizationError):
    """The target violates one of the invariance conditions.

    `condition` is 'lindblad' when some L_k|Psi> is not proportional to |Psi>,
    'hamiltonian' when the shifted Hamiltonian does not have |Psi> as eigenvector.
    """

    def __init__(self, index: Optional[int], condition: str, residual: float) -> None:
        self.index = index
        self.condition = condition
        self.residual = residual
        if condition == 'lindblad':
            msg = 'Lindblad operator {} does not have the target as eigenvector (residual {:.3e}).'.format(
                index, residual
            )
        else:
            msg = 'Shifted Hamiltonian does not have the target as eigenvector (residual {:.3e}).'.format(
                residual
            )
        super().__init__(msg)


class InvariancePrecondition(StabilizationError):
    def __init__(self, residual: float) -> None:
        self.residual = residual
        super().__init__('Subspace is not invariant for the generator (residual {:.3e}).'.format(residual))


class NotCompensable(StabilizationError):
    """A drift Lindblad operator does not have the target as eigenvector."""

    def __init__(self, index: int, residual: float) -> None:
        self.index = index
        self.residual = residual
        super().__init__(
            'Drift Lindblad operator {} cannot be compensated (residual {:.3e}).'.format(index, residual)
        )


class QuasiLocalityError(StabilizationError):
    """An operator does not factor as (local block) x identity on its tag."""

    def __init__(self, nbhd: Sequence[int], residual: float) -> None:
        self.nbhd = tuple(nbhd)
        self.residual = residual
        super().__init__(
            'Operator is not supported on neighborhood {} (residual {:.3e}).'.format(list(nbhd), residual)
        )


class ConstraintError(StabilizationError):
    """The constraint system cannot be set up, e.g. H' does not contain the target."""


class EmptyNullspace(StabilizationError):
    def __init__(self) -> None:
        super().__init__('The constraint system only admits the zero solution on every neighborhood.')


class Infeasible(StabilizationError):
    """The problem is known to have no solution (no-go, not applicable, necessary condition)."""

    def __init__(self, reason: str, cause: Optional[Exception] = None) -> None:
        self.reason = reason
        super().__init__('Infeasible: {}'.format(reason), cause)


class EigensolverError(StabilizationError):
    def __init__(self, cause: Optional[Exception] = None) -> None:
        super().__init__('Eigendecomposition of the Liouvillian failed.', cause)


class SpecError(StabilizationError):
    """A problem file does not match the schema."""

    def __init__(self, diagnostics: Sequence[str]) -> None:
        self.diagnostics = list(diagnostics)
        super().__init__('Invalid problem spec: {}'.format('; '.join(self.diagnostics)))
