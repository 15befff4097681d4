import json
import os

import pytest

from src.core.models.attribution import AttributionResult
from src.core.models.token import TokenEvent
from src.core.reports.delay_sweep_chart import DelaySweepChart
from src.core.reports.run_report import REPORT_FORMAT, RunReport, system_info
from src.core.reports.timeline_chart import AttributionTimelineChart

SWEEP = [
    {'delay': 0, 'attribution_error': 0.1, 'missed_changes': 0, 'true_changes': 4,
     'mean_decision_delay': 0.0, 'latency_seconds': 0.0},
    {'delay': 4, 'attribution_error': 0.05, 'missed_changes': 1, 'true_changes': 4,
     'mean_decision_delay': 3.5, 'latency_seconds': 1.2},
]


def make_report() -> RunReport:
    report = RunReport(config={'seed': 0})
    with report.stage('simulate') as record:
        record['train'] = 2
    report.metrics.update({'sawer': 0.125, 'samples': 2})
    report.latency = {'delay_words': 4}
    report.delay_sweep = list(SWEEP)
    return report


def test_stage_records_status_and_duration():
    report = make_report()

    assert report.stages['simulate']['status'] == 'ok'
    assert report.stages['simulate']['train'] == 2
    assert report.stages['simulate']['seconds'] >= 0.0


def test_failed_stage_is_recorded():
    report = RunReport(config={})

    with pytest.raises(ValueError):
        with report.stage('decode'):
            raise ValueError("нет корпуса")

    assert report.stages['decode']['status'] == 'failed'
    assert report.to_dict()['failed_stage'] == 'decode'
    assert report.to_dict()['error'] == "нет корпуса"


def test_report_excludes_timing():
    first, second = make_report(), make_report()

    assert first.to_dict() == second.to_dict()
    assert first.to_dict()['format'] == REPORT_FORMAT
    assert 'stages' not in first.to_dict()


def test_write(tmp_path):
    paths = make_report().write(str(tmp_path / 'run'))

    with open(paths['report'], encoding='utf-8') as f:
        report = json.load(f)
    with open(paths['manifest'], encoding='utf-8') as f:
        manifest = json.load(f)
    assert report['delay_sweep'] == SWEEP
    assert manifest['config'] == {'seed': 0}
    assert 'written_at' in manifest
    assert manifest['system']['package_version']


def test_render_text():
    text = make_report().render_text()

    assert "simulate: ok" in text
    assert "sawer: 0.1250" in text
    assert "samples" not in text
    assert "4   0.0500" in text


def test_system_info():
    info = system_info()

    assert info['python']
    assert 'memory_mb' in info


def test_delay_sweep_chart(tmp_path):
    chart = DelaySweepChart(str(tmp_path))

    path = chart.generate('sid mode', SWEEP)
    empty = chart.generate('empty', [])

    assert os.path.basename(path) == 'sid_mode_delay_sweep.png'
    assert os.path.getsize(path) > 0
    assert os.path.exists(empty)


def test_timeline_chart(tmp_path):
    result = AttributionResult(
        tokens=[TokenEvent('a', 'A', 0.0, 0.2, channel=0), TokenEvent('b', 'B', 0.1, 0.2, channel=1),
                TokenEvent('c', 'B', 0.3, 0.2, channel=0)],
        final_at=[1, 1, 2], decision_delays=[1, 0, 0], segments=[], change_points={0: [1]},
    )

    path = AttributionTimelineChart(str(tmp_path)).generate('eval/0001', result)

    assert os.path.basename(path) == 'eval_0001_timeline.png'
    assert os.path.getsize(path) > 0
