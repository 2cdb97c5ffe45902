"""Command-line front end.

    qlstab run --spec problem.json [--out DIR] [--csv] [--seed N] [--jobs N] [--quiet]
    qlstab validate --spec problem.json

Exit codes: 0 success, 1 invalid problem file, 2 infeasible problem,
3 verification failed.
"""
import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from . import __version__
from .analysis import did_gas, dqls_test
from .dynamics import convergence_report, write_csv
from .exceptions import (
    ConstraintError,
    EmptyNullspace,
    Infeasible,
    NotCompensable,
    NotInvariant,
    SpecError,
    StabilizationError,
)
from .generator import LindbladGenerator, SpectralReport, Term, verify_gas
from .statelib import resolve
from .synthesis import Synthesizer, construct_wtype, verify_conditional
from .tensor import MultipartiteSpace, NeighborhoodStructure, Subspace, observable_eigenspace
from .utils import TOLERANCE, complex_pairs, from_complex_pairs, logger

__all__ = ['ProblemSpec', 'check_spec', 'run', 'main']

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_INFEASIBLE = 2
EXIT_VERIFICATION = 3

MODES = ('dqls-test', 'synth-qls', 'synth-conditional', 'construct-wtype', 'verify', 'simulate')
TOP_KEYS = {'system', 'neighborhoods', 'target', 'drift', 'mode', 'options'}
REQUIRED_KEYS = {'system', 'neighborhoods', 'target', 'mode'}
OPTION_KEYS = {'gamma', 'trials', 'seed', 'tol', 'horizon', 'h_prime', 'verifier', 'force'}
DEFAULT_OPTIONS = {
    'gamma': Synthesizer.GAMMA,
    'trials': Synthesizer.TRIALS,
    'seed': Synthesizer.SEED,
    'tol': TOLERANCE,
    'horizon': None,
    'h_prime': None,
    'verifier': Synthesizer.VERIFIER,
    'force': False,
}

# Above this many qubits the dense Liouvillian gets expensive.
LARGE_SYSTEM = 6


def _unknown(obj: dict, allowed: set, where: str) -> List[str]:
    return ['unknown key {!r} in {}'.format(key, where) for key in sorted(set(obj) - allowed)]


def _check_matrix(value, dim: int, where: str) -> List[str]:
    try:
        m = from_complex_pairs(value)
    except (ValueError, TypeError, IndexError):
        return ['{}: matrix entries must be [re, im] pairs'.format(where)]
    if m.shape != (dim, dim):
        return ['{}: expected a {}x{} matrix, got shape {}'.format(where, dim, dim, m.shape)]
    return []


def _check_terms(terms, dims: List[int], where: str) -> List[str]:
    if not isinstance(terms, list):
        return ['{} must be a list of terms'.format(where)]
    diagnostics = []
    n = len(dims)
    for j, term in enumerate(terms):
        label = '{}[{}]'.format(where, j)
        if not isinstance(term, dict):
            diagnostics.append('{} must be an object'.format(label))
            continue
        diagnostics += _unknown(term, {'nbhd', 'matrix'}, label)
        nbhd = term.get('nbhd', 'global')
        if nbhd == 'global':
            dim = int(np.prod(dims))
        else:
            if not isinstance(nbhd, list) or not nbhd or any(not isinstance(a, int) for a in nbhd):
                diagnostics.append('{}: nbhd must be "global" or a list of indices'.format(label))
                continue
            bad = [a for a in nbhd if not 1 <= a <= n]
            if bad:
                diagnostics.append('{}: index out of range: {}'.format(label, bad))
                continue
            dim = int(np.prod([dims[a - 1] for a in nbhd]))
        if 'matrix' not in term:
            diagnostics.append('{}: missing matrix'.format(label))
        else:
            diagnostics += _check_matrix(term['matrix'], dim, label)
    return diagnostics


def check_spec(data) -> List[str]:
    """Schema diagnostics for a parsed problem file; empty when valid."""
    if not isinstance(data, dict):
        return ['problem file must contain a JSON object']
    diagnostics = _unknown(data, TOP_KEYS, 'problem')
    diagnostics += ['missing key {!r}'.format(key) for key in sorted(REQUIRED_KEYS - set(data))]

    dims = None
    system = data.get('system')
    if system is not None:
        if not isinstance(system, dict):
            diagnostics.append('system must be an object')
        else:
            diagnostics += _unknown(system, {'dims'}, 'system')
            raw = system.get('dims')
            if not isinstance(raw, list) or not raw or any(not isinstance(d, int) or d < 2 for d in raw):
                diagnostics.append('system.dims must be a nonempty list of integers >= 2')
            else:
                dims = raw

    nbhds = data.get('neighborhoods')
    if nbhds is not None and dims is not None:
        n = len(dims)
        if not isinstance(nbhds, list) or not nbhds:
            diagnostics.append('neighborhoods must be a nonempty list of index lists')
        else:
            covered = set()
            for j, nbhd in enumerate(nbhds):
                if not isinstance(nbhd, list) or not nbhd or any(not isinstance(a, int) for a in nbhd):
                    diagnostics.append('neighborhood {}: must be a nonempty list of integers'.format(j))
                    continue
                for a in nbhd:
                    if not 1 <= a <= n:
                        diagnostics.append('neighborhood {}: index out of range: {}'.format(j, a))
                if len(set(nbhd)) != len(nbhd):
                    diagnostics.append('neighborhood {}: duplicate index'.format(j))
                covered.update(nbhd)
            for a in range(1, n + 1):
                if a not in covered:
                    diagnostics.append('uncovered subsystem {}'.format(a))

    target = data.get('target')
    if target is not None:
        if not isinstance(target, dict) or len(target) != 1 or not set(target) <= {'name', 'amplitudes'}:
            diagnostics.append('target must be {"name": ...} or {"amplitudes": [...]}')
        elif 'name' in target:
            try:
                state = resolve(target['name']).state
                if dims is not None and (len(dims) != state.n or any(d != 2 for d in dims)):
                    diagnostics.append('target {!r} does not fit system dims {}'.format(target['name'], dims))
            except (ValueError, AttributeError) as err:
                diagnostics.append('target: {}'.format(err))
        else:
            try:
                amplitudes = from_complex_pairs(target['amplitudes'])
            except (ValueError, TypeError, IndexError):
                diagnostics.append('target.amplitudes must be a list of [re, im] pairs')
            else:
                if amplitudes.ndim != 1:
                    diagnostics.append('target.amplitudes must be a flat list of [re, im] pairs')
                elif dims is not None and amplitudes.shape[0] != int(np.prod(dims)):
                    diagnostics.append('target has {} amplitudes, expected {}'.format(
                        amplitudes.shape[0], int(np.prod(dims))))
                elif not np.any(amplitudes):
                    diagnostics.append('target amplitudes are all zero')

    mode = data.get('mode')
    if mode is not None and mode not in MODES:
        diagnostics.append('unknown mode {!r}; expected one of {}'.format(mode, ', '.join(MODES)))

    drift = data.get('drift')
    if drift is not None:
        if not isinstance(drift, dict):
            diagnostics.append('drift must be an object or null')
        elif 'fixture' in drift:
            diagnostics += _unknown(drift, {'fixture'}, 'drift')
            try:
                if resolve(drift['fixture']).generator is None:
                    diagnostics.append('drift fixture {!r} carries no generator'.format(drift['fixture']))
            except (ValueError, AttributeError) as err:
                diagnostics.append('drift: {}'.format(err))
        else:
            diagnostics += _unknown(drift, {'hamiltonian', 'lindblads'}, 'drift')
            if dims is not None:
                diagnostics += _check_terms(drift.get('hamiltonian', []), dims, 'drift.hamiltonian')
                diagnostics += _check_terms(drift.get('lindblads', []), dims, 'drift.lindblads')
    if mode in ('verify', 'simulate') and drift is None:
        diagnostics.append('mode {!r} needs a drift generator'.format(mode))

    options = data.get('options')
    if options is not None:
        if not isinstance(options, dict):
            diagnostics.append('options must be an object')
        else:
            diagnostics += _unknown(options, OPTION_KEYS, 'options')
            diagnostics += _check_options(options, dims)

    if mode == 'synth-conditional' and not _names_h_prime(options, drift):
        diagnostics.append("mode 'synth-conditional' needs options.h_prime or a drift fixture carrying H'")
    return diagnostics


def _names_h_prime(options, drift) -> bool:
    if isinstance(options, dict) and options.get('h_prime') is not None:
        return True
    if isinstance(drift, dict) and 'fixture' in drift:
        try:
            return resolve(drift['fixture']).h_prime is not None
        except (ValueError, AttributeError):
            return False
    return False


def _check_options(options: dict, dims) -> List[str]:
    diagnostics = []
    for key in ('gamma', 'tol', 'horizon'):
        value = options.get(key)
        if value is not None and (not isinstance(value, (int, float)) or isinstance(value, bool) or value < 0):
            diagnostics.append('options.{} must be a non-negative number'.format(key))
    for key in ('trials', 'seed'):
        value = options.get(key)
        if value is not None and (not isinstance(value, int) or isinstance(value, bool) or value < 0):
            diagnostics.append('options.{} must be a non-negative integer'.format(key))
    if options.get('trials') == 0:
        diagnostics.append('options.trials must be positive')
    if options.get('verifier') is not None and options['verifier'] not in ('spectral', 'did'):
        diagnostics.append("options.verifier must be 'spectral' or 'did'")
    if options.get('force') is not None and not isinstance(options['force'], bool):
        diagnostics.append('options.force must be true or false')
    h_prime = options.get('h_prime')
    if h_prime is not None:
        if not isinstance(h_prime, dict):
            diagnostics.append('options.h_prime must be an object or null')
        elif 'observable' in h_prime:
            diagnostics += _unknown(h_prime, {'observable', 'eigenvalue'}, 'options.h_prime')
            label = h_prime['observable']
            if not isinstance(label, str) or set(label.lower()) - set('ixyz'):
                diagnostics.append('options.h_prime.observable must be a Pauli label')
            elif dims is not None and len(label) != len(dims):
                diagnostics.append('options.h_prime.observable has {} letters, expected {}'.format(
                    len(label), len(dims)))
            if not isinstance(h_prime.get('eigenvalue'), (int, float)):
                diagnostics.append('options.h_prime.eigenvalue must be a number')
        elif 'basis' in h_prime:
            diagnostics += _unknown(h_prime, {'basis'}, 'options.h_prime')
            try:
                basis = from_complex_pairs(h_prime['basis'])
                if basis.ndim != 2 or (dims is not None and basis.shape[1] != int(np.prod(dims))):
                    diagnostics.append('options.h_prime.basis must list state vectors of the system dimension')
            except (ValueError, TypeError, IndexError):
                diagnostics.append('options.h_prime.basis must be a list of vectors of [re, im] pairs')
        else:
            diagnostics.append('options.h_prime must have an "observable" or a "basis"')
    return diagnostics


class ProblemSpec:
    """A validated problem file."""

    def __init__(self, data: dict) -> None:
        diagnostics = check_spec(data)
        if diagnostics:
            raise SpecError(diagnostics)
        self.dims = list(data['system']['dims'])
        self.neighborhoods = [list(nbhd) for nbhd in data['neighborhoods']]
        self.target = dict(data['target'])
        self.drift = data.get('drift')
        self.mode = data['mode']
        self.options = dict(DEFAULT_OPTIONS)
        self.options.update({k: v for k, v in (data.get('options') or {}).items() if v is not None})

        env_tol = os.environ.get('QLSTAB_TOL')
        if env_tol:
            try:
                self.options['tol'] = float(env_tol)
            except ValueError:
                raise SpecError(['QLSTAB_TOL must be a number, got {!r}'.format(env_tol)]) from None

        if len(self.dims) > LARGE_SYSTEM:
            logger.warn('{} subsystems: dense Liouvillian of dimension {}'.format(
                len(self.dims), int(np.prod(self.dims)) ** 2))

    @classmethod
    def load(cls, path) -> 'ProblemSpec':
        try:
            with open(path, 'rt') as f:
                data = json.load(f)
        except (OSError, ValueError) as err:
            raise SpecError(['cannot read {}: {}'.format(path, err)]) from err
        return cls(data)

    @property
    def tol(self) -> float:
        return float(self.options['tol'])

    def space(self) -> MultipartiteSpace:
        return MultipartiteSpace(self.dims)

    def structure(self) -> NeighborhoodStructure:
        return NeighborhoodStructure(self.neighborhoods, len(self.dims), trivial=True)

    def target_vector(self) -> np.ndarray:
        if 'name' in self.target:
            return resolve(self.target['name']).state.vector
        psi = from_complex_pairs(self.target['amplitudes'])
        norm = float(np.linalg.norm(psi))
        if abs(norm - 1) > 1e-6:
            logger.warn('Target amplitudes renormalized (norm was {:.6g})'.format(norm))
        return psi / norm

    def drift_generator(self) -> Optional[LindbladGenerator]:
        if self.drift is None:
            return None
        if 'fixture' in self.drift:
            return resolve(self.drift['fixture']).generator
        space = self.space()

        def terms(key):
            out = []
            for term in self.drift.get(key, []):
                nbhd = term.get('nbhd', 'global')
                out.append(Term(from_complex_pairs(term['matrix']), None if nbhd == 'global' else tuple(nbhd)))
            return out

        return LindbladGenerator(space, terms('hamiltonian'), terms('lindblads'), self.tol)

    def h_prime(self) -> Optional[Subspace]:
        h_prime = self.options.get('h_prime')
        if h_prime is None:
            if self.drift is not None and 'fixture' in self.drift:
                return resolve(self.drift['fixture']).h_prime
            return None
        if 'observable' in h_prime:
            return observable_eigenspace(h_prime['observable'], h_prime['eigenvalue'], self.tol)
        return Subspace.span(from_complex_pairs(h_prime['basis']).T, tol=self.tol)


def _operators_json(gen: LindbladGenerator) -> dict:
    def terms(items):
        return [{'nbhd': t.tag, 'matrix': complex_pairs(t.op)} for t in items]

    return {'hamiltonian': terms(gen.hamiltonian_terms), 'lindblads': terms(gen.lindblad_terms)}


def _spectrum_json(spectrum: SpectralReport) -> dict:
    return {
        'zero_multiplicity': spectrum.multiplicity,
        'max_real': spectrum.max_real if np.isfinite(spectrum.max_real) else None,
        'marginal': spectrum.marginal,
        'rightmost': complex_pairs(spectrum.rightmost(10)),
    }


def _did_json(decomposition) -> dict:
    return {
        'outcome': decomposition.outcome.value,
        'steps': decomposition.steps,
        'basin_dims': decomposition.dims,
    }


def run(spec: ProblemSpec, out: Optional[Path] = None, csv: bool = False, seed: Optional[int] = None,
        jobs: int = 1) -> Tuple[dict, int]:
    """Execute one problem; returns the report and the exit code."""
    start = time.time()
    space = spec.space()
    nbhds = spec.structure()
    psi = spec.target_vector()
    tol = spec.tol
    options = spec.options
    if seed is not None:
        options['seed'] = seed

    report = {'mode': spec.mode, 'version': __version__, 'seed': options['seed'], 'diagnostics': []}
    code = EXIT_OK
    try:
        if spec.mode == 'dqls-test':
            dqls = dqls_test(psi, nbhds, space, tol)
            report.update({'verdict': dqls.verdict.value, 'd0': dqls.d0,
                           'supports': [s.dim for s in dqls.local_supports]})

        elif spec.mode in ('synth-qls', 'synth-conditional'):
            synthesizer = Synthesizer(
                options['gamma'], options['trials'], options['seed'], jobs, options['verifier'], tol)
            if spec.mode == 'synth-qls':
                result = synthesizer.synthesize_qls(psi, nbhds, space, drift=spec.drift_generator(),
                                                    force=options['force'])
            else:
                result = synthesizer.synthesize_conditional(psi, nbhds, spec.h_prime(), space)
            report.update({'verdict': result.verdict.value, 'trials': result.trials, 'trial': result.trial,
                           'failures': result.failures})
            report['diagnostics'] += result.diagnostics
            if result.ok:
                report['operators'] = _operators_json(result.generator)
                evidence = result.evidence
                if getattr(evidence, 'spectrum', None) is not None:
                    report['spectrum'] = _spectrum_json(evidence.spectrum)
                if hasattr(evidence, 'basins'):
                    report['did'] = _did_json(evidence)
                if result.h_prime is not None:
                    report['h_prime_dim'] = result.h_prime.dim
            else:
                code = EXIT_VERIFICATION

        elif spec.mode == 'construct-wtype':
            construction = construct_wtype(psi, nbhds, space, tol=tol)
            if not construction.applicable:
                report.update({'verdict': 'NotApplicable'})
                report['diagnostics'].append(construction.reason)
                code = EXIT_INFEASIBLE
            else:
                gen = construction.generator(space)
                check = verify_conditional(gen, psi, construction.h_prime)
                report.update({'verdict': 'ConditionallyAS' if check else 'Failed',
                               'h_prime_dim': construction.h_prime.dim,
                               'operators': _operators_json(gen)})
                if check.spectrum is not None:
                    report['spectrum'] = _spectrum_json(check.spectrum)
                if not check:
                    report['diagnostics'].append(check.reason)
                    code = EXIT_VERIFICATION

        elif spec.mode == 'verify':
            gen = spec.drift_generator()
            h_prime = spec.h_prime()
            if h_prime is not None:
                check = verify_conditional(gen, psi, h_prime)
                report.update({'verdict': 'ConditionallyAS' if check else 'Failed', 'h_prime_dim': h_prime.dim})
                if check.spectrum is not None:
                    report['spectrum'] = _spectrum_json(check.spectrum)
                ok = check.ok
            else:
                gas = verify_gas(gen, psi)
                report.update({'verdict': 'GAS' if gas else 'Failed', 'gas': gas.gas,
                               'zero_multiplicity': gas.spectrum.multiplicity,
                               'spectrum': _spectrum_json(gas.spectrum),
                               'did': _did_json(did_gas(gen, psi, tol))})
                ok = gas.gas
            if not ok:
                code = EXIT_VERIFICATION

        elif spec.mode == 'simulate':
            gen = spec.drift_generator()
            rng = np.random.default_rng(options['seed'])
            random_state = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
            rho0s = [np.eye(space.dim) / space.dim, space.basis_state([0] * space.n),
                     random_state / np.linalg.norm(random_state)]
            convergence = convergence_report(gen, psi, rho0s, options['horizon'], workers=jobs)
            report.update({'verdict': 'Failed' if convergence.trace_drift else 'OK',
                           'convergence': convergence.summary()})
            if convergence.trace_drift:
                code = EXIT_VERIFICATION
            if csv and out is not None:
                for idx, tr in enumerate(convergence.trajectories):
                    write_csv(tr, out / 'trajectory_{}.csv'.format(idx))

    except (Infeasible, NotCompensable, EmptyNullspace, ConstraintError) as err:
        report.update({'verdict': 'Infeasible'})
        report['diagnostics'].append(err.msg)
        code = EXIT_INFEASIBLE
    except NotInvariant as err:
        report.update({'verdict': 'Failed'})
        report['diagnostics'].append(err.msg)
        code = EXIT_VERIFICATION

    report['exit_code'] = code
    report['wall_time'] = time.time() - start
    return report, code


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='qlstab', description='Quasi-local stabilization of pure states.')
    parser.add_argument('--version', action='version', version='qlstab {}'.format(__version__))
    commands = parser.add_subparsers(dest='command')
    commands.required = True

    run_cmd = commands.add_parser('run', help='Solve a problem file and emit a JSON report.')
    run_cmd.add_argument('--spec', required=True, help='Problem file (JSON).')
    run_cmd.add_argument('--out', help='Directory for report.json and CSV trajectories.')
    run_cmd.add_argument('--csv', action='store_true', help='Write trajectories as CSV (simulate mode).')
    run_cmd.add_argument('--seed', type=int, help='Override options.seed.')
    run_cmd.add_argument('--jobs', type=int, default=1, help='Concurrent synthesis trials (default: 1).')
    run_cmd.add_argument('--quiet', action='store_true', help='Only log warnings and errors.')

    validate_cmd = commands.add_parser('validate', help='Lint a problem file without running it.')
    validate_cmd.add_argument('--spec', required=True, help='Problem file (JSON).')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)

    if args.command == 'validate':
        try:
            with open(args.spec, 'rt') as f:
                diagnostics = check_spec(json.load(f))
        except (OSError, ValueError) as err:
            diagnostics = ['cannot read {}: {}'.format(args.spec, err)]
        for line in diagnostics:
            logger.error(line)
        if not diagnostics:
            logger.info('{}: ok'.format(args.spec))
        return EXIT_SCHEMA if diagnostics else EXIT_OK

    if args.quiet:
        logger.set_level(logging.WARNING)
    if args.jobs < 1:
        logger.error('--jobs must be positive')
        return EXIT_SCHEMA

    try:
        spec = ProblemSpec.load(args.spec)
    except SpecError as err:
        for line in err.diagnostics:
            logger.error(line)
        return EXIT_SCHEMA

    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    try:
        report, code = run(spec, out, args.csv, args.seed, args.jobs)
    except StabilizationError as err:
        logger.error(err.msg, exc_info=err.cause)
        return EXIT_VERIFICATION

    text = json.dumps(report, indent=2, sort_keys=True)
    if out is not None:
        (out / 'report.json').write_text(text + '\n')
    else:
        sys.stdout.write(text + '\n')
    if code:
        logger.error('Run finished with exit code {}: {}'.format(code, report.get('verdict')))
    return code
