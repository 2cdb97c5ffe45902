import json
import logging

import pytest

from qlstab.cli import ProblemSpec, build_arg_parser, check_spec, main
from qlstab.exceptions import SpecError


def write(tmp_path, problem, name='problem.json'):
    path = tmp_path / name
    path.write_text(json.dumps(problem))
    return str(path)


def execute(tmp_path, problem, *flags):
    out = tmp_path / 'out'
    code = main(['run', '--spec', write(tmp_path, problem), '--out', str(out)] + list(flags))
    return code, json.loads((out / 'report.json').read_text())


def chain(n):
    return [[a, a + 1] for a in range(1, n)]


class TestValidate:
    def test_valid_problem(self, tmp_path):
        problem = {'system': {'dims': [2, 2, 2]}, 'neighborhoods': chain(3),
                   'target': {'name': 'w:3'}, 'mode': 'dqls-test'}
        assert check_spec(problem) == []
        assert main(['validate', '--spec', write(tmp_path, problem)]) == 0

    def test_unknown_key(self, tmp_path, caplog):
        problem = {'system': {'dims': [2, 2]}, 'neighborhoods': [[1], [2]],
                   'target': {'name': 'ghz:2'}, 'mode': 'dqls-test', 'colour': 'blue'}
        assert main(['validate', '--spec', write(tmp_path, problem)]) == 1
        assert any("unknown key 'colour' in problem" in record.message for record in caplog.records)

    def test_index_out_of_range(self):
        problem = {'system': {'dims': [2, 2]}, 'neighborhoods': [[1, 3]],
                   'target': {'name': 'ghz:2'}, 'mode': 'dqls-test'}
        diagnostics = check_spec(problem)
        assert 'neighborhood 0: index out of range: 3' in diagnostics
        assert 'uncovered subsystem 2' in diagnostics

    def test_mode_checks(self):
        problem = {'system': {'dims': [2, 2]}, 'neighborhoods': [[1, 2]],
                   'target': {'name': 'ghz:2'}, 'mode': 'verify'}
        assert "mode 'verify' needs a drift generator" in check_spec(problem)
        problem['mode'] = 'anneal'
        assert any(line.startswith('unknown mode') for line in check_spec(problem))

    def test_run_rejects_invalid_file(self, tmp_path):
        problem = {'system': {'dims': [1]}, 'neighborhoods': [[1]], 'target': {'name': 'ghz:2'}, 'mode': 'dqls-test'}
        assert main(['run', '--spec', write(tmp_path, problem)]) == 1
        with pytest.raises(SpecError):
            ProblemSpec(problem)

    def test_unreadable_file(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{not json')
        assert main(['validate', '--spec', str(path)]) == 1

    def test_conditional_needs_h_prime(self, tmp_path):
        problem = {'system': {'dims': [2, 2, 2]}, 'neighborhoods': chain(3),
                   'target': {'name': 'ghz:3'}, 'mode': 'synth-conditional'}
        assert "mode 'synth-conditional' needs options.h_prime or a drift fixture carrying H'" in check_spec(problem)
        assert main(['validate', '--spec', write(tmp_path, problem)]) == 1
        problem['drift'] = {'fixture': 'ghz-cond:3'}
        assert check_spec(problem) == []
        problem['drift'] = {'fixture': 'ghz3-qls'}
        assert any(line.startswith("mode 'synth-conditional' needs") for line in check_spec(problem))

    def test_option_values(self):
        problem = {'system': {'dims': [2, 2]}, 'neighborhoods': [[1], [2]], 'target': {'name': 'ghz:2'},
                   'mode': 'synth-qls', 'options': {'verifier': 'lanczos', 'force': 'yes'}}
        diagnostics = check_spec(problem)
        assert "options.verifier must be 'spectral' or 'did'" in diagnostics
        assert 'options.force must be true or false' in diagnostics
        problem['options'] = {'verifier': 'did', 'force': True}
        assert check_spec(problem) == []

    def test_arguments(self):
        args = build_arg_parser().parse_args(['run', '--spec', 'p.json', '--jobs', '4', '--seed', '7'])
        assert args.jobs == 4
        assert args.seed == 7
        assert not args.csv


class TestRun:
    def test_dqls_test(self, tmp_path):
        problem = {'system': {'dims': [2, 2, 2]}, 'neighborhoods': chain(3),
                   'target': {'name': 'w:3'}, 'mode': 'dqls-test'}
        code, report = execute(tmp_path, problem)
        assert code == 0
        assert report['verdict'] == 'NotDQLS'
        assert report['d0'] == 2
        assert report['exit_code'] == 0

    def test_ghz6_is_infeasible(self, tmp_path):
        problem = {'system': {'dims': [2] * 6}, 'neighborhoods': chain(6),
                   'target': {'name': 'ghz:6'}, 'mode': 'synth-qls'}
        code, report = execute(tmp_path, problem)
        assert code == 2
        assert report['verdict'] == 'Infeasible'
        assert any('not QLS' in line for line in report['diagnostics'])

    def test_verify_fixture(self, tmp_path):
        problem = {'system': {'dims': [2, 2, 2]}, 'neighborhoods': chain(3),
                   'target': {'name': 'ghz:3'}, 'mode': 'verify', 'drift': {'fixture': 'ghz3-qls'}}
        code, report = execute(tmp_path, problem)
        assert code == 0
        assert report['verdict'] == 'GAS'
        assert report['spectrum']['zero_multiplicity'] == 1
        assert report['did']['outcome'] == 'Completed'

    def test_verify_flawed_fixture(self, tmp_path):
        problem = {'system': {'dims': [2, 2, 2]}, 'neighborhoods': chain(3),
                   'target': {'name': 'ghz:3'}, 'mode': 'verify', 'drift': {'fixture': 'ghz3-qls-flawed'}}
        code, report = execute(tmp_path, problem)
        assert code == 3
        assert report['verdict'] == 'Failed'
        assert report['spectrum']['zero_multiplicity'] > 1

    def test_amplitudes_are_renormalized(self, tmp_path, caplog):
        caplog.set_level(logging.INFO)
        problem = {'system': {'dims': [2]}, 'neighborhoods': [[1]],
                   'target': {'amplitudes': [[2, 0], [0, 0]]}, 'mode': 'dqls-test'}
        code, report = execute(tmp_path, problem)
        assert code == 0
        assert report['verdict'] == 'DQLS'
        assert any('renormalized' in record.message for record in caplog.records)

    def test_wtype_operators_verify(self, tmp_path):
        problem = {'system': {'dims': [2, 2]}, 'neighborhoods': [[1], [2]],
                   'target': {'amplitudes': [[1, 0], [0, 0], [0, 0], [0, 0]]}, 'mode': 'construct-wtype'}
        code, report = execute(tmp_path, problem)
        assert code == 0
        assert report['verdict'] == 'ConditionallyAS'
        assert report['h_prime_dim'] == 4
        drift = report['operators']
        assert [term['nbhd'] for term in drift['lindblads']] == [[1], [2]]

        problem.update({'mode': 'verify', 'drift': drift})
        code, report = execute(tmp_path, problem)
        assert code == 0
        assert report['verdict'] == 'GAS'

    def test_simulate_writes_csv(self, tmp_path):
        problem = {'system': {'dims': [2, 2, 2]}, 'neighborhoods': chain(3),
                   'target': {'name': 'ghz:3'}, 'mode': 'simulate', 'drift': {'fixture': 'ghz3-qls'},
                   'options': {'horizon': 40}}
        code, report = execute(tmp_path, problem, '--csv')
        assert code == 0
        assert len(report['convergence']['final_fidelities']) == 3
        assert sorted(p.name for p in (tmp_path / 'out').glob('trajectory_*.csv')) == [
            'trajectory_0.csv', 'trajectory_1.csv', 'trajectory_2.csv']

    def test_seed_override(self, tmp_path):
        problem = {'system': {'dims': [2, 2]}, 'neighborhoods': [[1], [2]],
                   'target': {'name': 'ghz:2'}, 'mode': 'dqls-test', 'options': {'seed': 3}}
        code, report = execute(tmp_path, problem, '--seed', '11')
        assert code == 0
        assert report['seed'] == 11

    def test_conditional_synthesis(self, tmp_path):
        problem = {'system': {'dims': [2, 2, 2]}, 'neighborhoods': chain(3),
                   'target': {'name': 'ghz:3'}, 'mode': 'synth-conditional',
                   'options': {'h_prime': {'observable': 'xxx', 'eigenvalue': 1}, 'trials': 5, 'seed': 4}}
        code, report = execute(tmp_path, problem)
        assert code == 0
        assert report['verdict'] == 'ConditionallyAS'
        assert report['h_prime_dim'] == 4

    def test_forced_ghz6(self, tmp_path):
        problem = {'system': {'dims': [2] * 6}, 'neighborhoods': chain(6),
                   'target': {'name': 'ghz:6'}, 'mode': 'synth-qls',
                   'options': {'force': True, 'verifier': 'did', 'trials': 2}}
        code, report = execute(tmp_path, problem)
        assert code == 3
        assert report['verdict'] == 'Failed'
        assert any('not QLS' in line for line in report['diagnostics'])
        assert [failure['outcome'] for failure in report['failures']] == ['NotGas', 'NotGas']
