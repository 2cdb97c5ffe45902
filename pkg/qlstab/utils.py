import logging
import sys
from typing import Optional, Union

import numpy as np

__all__ = [
    'TOLERANCE',
    'logger',
    'resolve_tol',
    'as_matrix',
    'as_vector',
    'dagger',
    'hermitian_part',
    'assert_positive_number',
    'assert_not_negative_number',
    'assert_positive_integer',
    'assert_not_negative_integer',
    'complex_pairs',
    'from_complex_pairs',
]

# Singular/eigen values below TOLERANCE * (largest value) are treated as zero.
TOLERANCE = 1e-9


def resolve_tol(tol: Optional[float]) -> float:
    if tol is None:
        return TOLERANCE
    assert_not_negative_number(tol)
    return float(tol)


def as_matrix(value) -> np.ndarray:
    """Coerce nested lists or arrays to a square complex matrix."""
    m = np.asarray(value, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError('Expected a square matrix, got shape {}'.format(m.shape))
    return m


def as_vector(value) -> np.ndarray:
    v = np.asarray(value, dtype=complex).reshape(-1)
    return v


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def assert_not_negative_number(num):
    assert isinstance(num, (int, float)) and num >= 0


def assert_positive_number(num):
    assert isinstance(num, (int, float)) and num > 0


def assert_not_negative_integer(num):
    assert isinstance(num, int) and num >= 0


def assert_positive_integer(num):
    assert isinstance(num, int) and num > 0


def complex_pairs(value: Union[np.ndarray, complex]):
    """Serialize complex numbers as [re, im] pairs, keeping the array nesting."""
    arr = np.asarray(value, dtype=complex)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [complex_pairs(x) for x in arr]


def from_complex_pairs(value) -> np.ndarray:
    """Inverse of `complex_pairs`: the innermost axis holds [re, im]."""
    arr = np.asarray(value, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError('Complex numbers must be given as [re, im] pairs')
    return arr[..., 0] + 1j * arr[..., 1]


class Logger:
    logger_format = '[%(asctime)-15s] %(levelname)-7s: %(message)s'
    date_format = '%Y-%m-%d %H:%M:%S'

    def __init__(self, name: str, level: int = logging.INFO) -> None:
        self._logger = logging.getLogger(name)
        self._logger.setLevel(level)
        self._add_stream_handlers()

    def replace(self, new_logger: logging.Logger) -> None:
        self._logger = new_logger

    def set_level(self, level: int) -> None:
        self._logger.setLevel(level)

    def add_handler(self, handler: logging.Handler) -> None:
        self._logger.addHandler(handler)

    def debug(self, msg: str, *args, **kwargs) -> None:
        self._logger.debug(msg, *args, **kwargs)

    def info(self, msg: str, *args, **kwargs) -> None:
        self._logger.info(msg, *args, **kwargs)

    def warn(self, msg: str, *args, **kwargs) -> None:
        self._logger.warning(msg, *args, **kwargs)

    def error(self, msg: str, *args, **kwargs) -> None:
        self._logger.error(msg, *args, **kwargs)

    def _add_stream_handlers(self):
        stdout_handler = self._stream_handler(
            sys.stdout, logging.DEBUG, lambda record: record.levelno < logging.ERROR
        )
        stderr_handler = self._stream_handler(sys.stderr, logging.ERROR)
        self._logger.addHandler(stdout_handler)
        self._logger.addHandler(stderr_handler)

    def _stream_handler(self, stream, level, msg_filter=None):
        handler = logging.StreamHandler(stream)
        handler.setLevel(level)
        formatter = logging.Formatter(self.logger_format, datefmt=self.date_format)
        handler.setFormatter(formatter)
        if msg_filter:
            handler.addFilter(msg_filter)
        return handler


logger = Logger('qlstab')
