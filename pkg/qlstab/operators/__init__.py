from .paulis import (
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    SIGMA_PLUS,
    SIGMA_MINUS,
    pauli,
    single_site_basis,
    hermitian_basis,
)
