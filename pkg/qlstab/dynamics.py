"""Time evolution under a Liouvillian and convergence reporting."""
import csv
from queue import Queue
from threading import Thread
from typing import Callable, List, NamedTuple, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from .exceptions import EigensolverError
from .generator import LindbladGenerator, Liouvillian, liouvillian, unvec, vec, zero_eigenspace
from .tensor import DensityOperator
from .utils import as_vector, assert_not_negative_number, assert_positive_integer, hermitian_part, logger

__all__ = [
    'Snapshot',
    'Propagator',
    'Trajectory',
    'ConvergenceReport',
    'evolve',
    'trajectory',
    'convergence_report',
    'write_csv',
]

# Eigenvector matrices with a larger condition number fall back to expm.
MAX_CONDITION = 1e8

# Tolerated deviation of the unnormalized trace from 1.
TRACE_DRIFT = 1e-7


class Snapshot(NamedTuple):
    state: DensityOperator
    raw_trace: float
    correction: float


def _as_density(rho0) -> DensityOperator:
    if isinstance(rho0, DensityOperator):
        return rho0
    arr = np.asarray(rho0)
    if arr.ndim == 1:
        return DensityOperator.pure(arr)
    return DensityOperator(arr)


class Propagator:
    """exp(t L) for one Liouvillian.

    Uses the eigendecomposition of L, computed once and shared by every call,
    unless its eigenvector matrix is ill-conditioned; then each call goes
    through scipy.linalg.expm (scaling and squaring).
    """

    def __init__(self, liouv: Liouvillian) -> None:
        self.liouv = liouv
        self.method = 'eig'
        try:
            w, v = liouv.eig()
            cond = np.linalg.cond(v)
        except EigensolverError as err:
            logger.warn('Eigendecomposition failed ({}); falling back to expm'.format(err.cause))
            cond = np.inf
        if not np.isfinite(cond) or cond >= MAX_CONDITION:
            if np.isfinite(cond):
                logger.warn('Ill-conditioned eigenbasis (cond = {:.2e}); falling back to expm'.format(cond))
            self.method = 'expm'
        else:
            self._w = w
            self._v = v
            self._v_inv = np.linalg.inv(v)

    @classmethod
    def from_generator(cls, gen: LindbladGenerator) -> 'Propagator':
        return cls(liouvillian(gen))

    def raw(self, rho: np.ndarray, t: float) -> np.ndarray:
        """exp(t L)[rho] without any post-processing."""
        if self.method == 'eig':
            return unvec(self._v @ (np.exp(self._w * t) * (self._v_inv @ vec(rho))), self.liouv.d)
        return unvec(scipy.linalg.expm(t * self.liouv.matrix) @ vec(rho), self.liouv.d)

    def step(self, rho0: DensityOperator, t: float) -> Snapshot:
        assert_not_negative_number(t)
        if t == 0:
            return Snapshot(rho0, rho0.trace, 0.0)
        raw = self.raw(rho0.matrix, t)
        herm = hermitian_part(raw)
        trace = float(np.trace(herm).real)
        fixed = herm / trace
        correction = float(np.linalg.norm(fixed - raw))
        logger.debug('Evolution to t = {:.4g}: trace {:.3e} off, correction {:.3e}'.format(t, trace - 1, correction))
        return Snapshot(DensityOperator(fixed), trace, correction)


def evolve(gen: Union[LindbladGenerator, Propagator], rho0, t: float) -> DensityOperator:
    """exp(t L)[rho0], re-Hermitized and renormalized to unit trace."""
    propagator = gen if isinstance(gen, Propagator) else Propagator.from_generator(gen)
    return propagator.step(_as_density(rho0), t).state


class Trajectory:
    """Sampled states along t -> exp(t L)[rho0] with their overlap to a reference."""

    def __init__(self, times: Sequence[float], snapshots: List[Snapshot], reference: np.ndarray) -> None:
        self.times = np.asarray(times, dtype=float)
        self.states = [s.state for s in snapshots]
        self.traces = np.array([s.raw_trace for s in snapshots])
        self.corrections = np.array([s.correction for s in snapshots])
        self.fidelities = np.array([state.fidelity(reference) for state in self.states])
        self.min_eigenvalues = np.array([state.min_eigenvalue for state in self.states])

    @property
    def final_fidelity(self) -> float:
        return float(self.fidelities[-1])

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.fidelities) >= -1e-9))

    @property
    def trace_drift(self) -> float:
        return float(np.max(np.abs(self.traces - 1)))

    def rows(self):
        for row in zip(self.times, self.fidelities, self.traces, self.min_eigenvalues):
            yield [float(x) for x in row]

    def __len__(self) -> int:
        return len(self.times)


def trajectory(propagator: Propagator, rho0, times: Sequence[float], reference) -> Trajectory:
    rho0 = _as_density(rho0)
    return Trajectory(times, [propagator.step(rho0, t) for t in times], as_vector(reference))


class ConvergenceReport:
    def __init__(
        self,
        trajectories: List[Trajectory],
        horizon: float,
        gap: float,
        rates: List[Optional[float]],
        r_squared: List[Optional[float]],
    ) -> None:
        self.trajectories = trajectories
        self.horizon = horizon
        self.gap = gap
        self.rates = rates
        self.r_squared = r_squared

    @property
    def final_fidelities(self) -> List[float]:
        return [tr.final_fidelity for tr in self.trajectories]

    @property
    def rate(self) -> Optional[float]:
        """Slowest fitted exponential rate over the trajectories."""
        rates = [r for r in self.rates if r is not None]
        return min(rates) if rates else None

    @property
    def non_monotone(self) -> List[bool]:
        return [not tr.monotone for tr in self.trajectories]

    @property
    def trace_drift(self) -> bool:
        return any(tr.trace_drift > TRACE_DRIFT for tr in self.trajectories)

    def summary(self) -> dict:
        return {
            'horizon': self.horizon,
            'gap': self.gap,
            'final_fidelities': self.final_fidelities,
            'rate': self.rate,
            'rates': self.rates,
            'r_squared': self.r_squared,
            'non_monotone': self.non_monotone,
            'trace_drift': self.trace_drift,
        }


def _fit_rate(tr: Trajectory):
    """Least-squares fit of log(1 - F) against t over the second half of the samples."""
    half = len(tr) // 2
    t = tr.times[half:]
    infidelity = 1 - tr.fidelities[half:]
    usable = infidelity > 1e-13
    if usable.sum() < 3:
        return None, None
    t, y = t[usable], np.log(infidelity[usable])
    slope, intercept = np.polyfit(t, y, 1)
    residual = y - (slope * t + intercept)
    spread = np.sum((y - y.mean()) ** 2)
    r2 = 1 - np.sum(residual ** 2) / spread if spread > 0 else 1.0
    return float(-slope), float(r2)


def _thread_map(func: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    jobs, results = Queue(), Queue()
    for idx, item in enumerate(items):
        jobs.put((idx, item))

    def work() -> None:
        while True:
            job = jobs.get()
            if job is None:
                break
            idx, item = job
            try:
                results.put((idx, func(item)))
            except Exception as err:
                results.put((idx, err))

    for idx in range(min(workers, len(items))):
        jobs.put(None)
        thread = Thread(target=work, name='trajectory-{}'.format(idx))
        thread.daemon = True
        thread.start()

    out = [None] * len(items)
    for _ in items:
        idx, value = results.get()
        if isinstance(value, Exception):
            raise value
        out[idx] = value
    return out


def convergence_report(
    gen: LindbladGenerator,
    target,
    rho0s: Sequence,
    horizon: Optional[float] = None,
    samples: int = 40,
    workers: int = 1,
) -> ConvergenceReport:
    """Evolve each initial state and fit the exponential approach to the target.

    The default horizon is 50 / gap, sampled at `samples` log-spaced times
    (t = 0 included).
    """
    assert_positive_integer(samples)
    liouv = liouvillian(gen)
    propagator = Propagator(liouv)
    spectrum = zero_eigenspace(liouv)
    gap = spectrum.gap
    if horizon is None:
        horizon = 50 / gap if np.isfinite(gap) and gap > spectrum.threshold else 50.0
    assert_not_negative_number(horizon)
    times = np.concatenate([[0.0], np.geomspace(horizon * 1e-3, horizon, samples - 1)]) if horizon else [0.0]

    psi = as_vector(target)
    psi = psi / np.linalg.norm(psi)
    trajectories = _thread_map(lambda rho0: trajectory(propagator, rho0, times, psi), list(rho0s), workers)
    fits = [_fit_rate(tr) for tr in trajectories]
    report = ConvergenceReport(trajectories, float(horizon), float(gap), [f[0] for f in fits], [f[1] for f in fits])
    if report.trace_drift:
        logger.warn('Trace drifted by more than {:.0e} along a trajectory'.format(TRACE_DRIFT))
    logger.info('Convergence: final fidelities {}'.format(['{:.6f}'.format(f) for f in report.final_fidelities]))
    return report


def write_csv(tr: Trajectory, path) -> None:
    """Columns t, fidelity, trace, min_eigenvalue."""
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['t', 'fidelity', 'trace', 'min_eigenvalue'])
        writer.writerows(tr.rows())
