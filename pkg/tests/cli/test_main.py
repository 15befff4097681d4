import json
import os

import pytest

from src.main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main

SMALL = ['--set', 'simulation.eval_size=2', '--set', 'simulation.mixture.max_tokens=5']


@pytest.fixture(autouse=True)
def environment(monkeypatch, tmp_path, restore_root_logger):
    monkeypatch.setenv('TSOT_WORK_DIR', str(tmp_path / 'runs'))
    monkeypatch.setenv('TSOT_LOG_LEVEL', 'WARNING')
    monkeypatch.delenv('TSOT_LOG_FILE', raising=False)
    monkeypatch.delenv('TSOT_NUM_THREADS', raising=False)


def run_json(argv, capsys):
    code = main(argv + ['--json'])
    return code, json.loads(capsys.readouterr().out)


def test_oracle_run(tmp_path, capsys):
    code, result = run_json(['run', '--preset', 'oracle', '--work-dir', str(tmp_path / 'oracle')] + SMALL, capsys)

    assert code == EXIT_OK
    assert result['metrics']['sawer'] == 0.0
    assert result['metrics']['cpwer'] == 0.0
    assert result['work_dir'] == str(tmp_path / 'oracle')
    assert os.path.exists(tmp_path / 'oracle' / 'report.json')


def test_default_work_dir_comes_from_environment(tmp_path, capsys):
    code, result = run_json(['run', '--preset', 'oracle', '--stages', 'simulate'] + SMALL, capsys)

    assert code == EXIT_OK
    assert result['work_dir'] == os.path.join(str(tmp_path / 'runs'), 'oracle')
    assert list(result['stages']) == ['simulate']


def test_simulate_attribute_and_eval(tmp_path, capsys):
    work = str(tmp_path / 'steps')
    common = ['--preset', 'oracle', '--work-dir', work] + SMALL

    code, simulated = run_json(['simulate', '--train-size', '0'] + common, capsys)
    assert code == EXIT_OK
    assert simulated['eval'] == 2

    code, attributed = run_json(['attribute', '--delay-words', '1'] + common, capsys)
    assert code == EXIT_OK
    assert attributed['source'] == 'reference'
    assert attributed['reference_attribution']['accuracy'] == 1.0

    code, evaluated = run_json(['eval', '--ref', os.path.join(work, 'corpus', 'eval'),
                                '--hyp', os.path.join(work, 'attribute'), '--metric', 'sawer',
                                '--metric', 'cpwer'] + common, capsys)
    assert code == EXIT_OK
    assert evaluated['metrics'] == ['sawer', 'cpwer']
    assert evaluated['total'] == {'sawer': 0.0, 'ser': 0.0, 'cpwer': 0.0}


def test_plain_output(tmp_path, capsys):
    code = main(['simulate', '--preset', 'oracle', '--work-dir', str(tmp_path / 'plain'),
                 '--train-size', '0', '--eval-size', '1'])

    assert code == EXIT_OK
    assert "eval: 1" in capsys.readouterr().out


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(['run', '--preset', 'unknown'])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == EXIT_USAGE
    assert main(['run', '--log-level', 'LOUD']) == EXIT_USAGE


def test_domain_errors(tmp_path):
    assert main(['run', '--set', 'attribution.delay_words=-1']) == EXIT_FAILURE
    assert main(['decode', '--work-dir', str(tmp_path / 'empty')]) == EXIT_FAILURE
    assert main(['run', '--work-dir', str(tmp_path / 'failed'), '--stages', 'decode']) == EXIT_FAILURE
    assert os.path.exists(tmp_path / 'failed' / 'report.json')
