import json

import pytest

import cli
from analytics import l_max
from config import DEFAULT_FIBER_SPEED
from params import attenuation_to_rate


@pytest.fixture
def aarhus_config(tmp_path, aarhus_doc):
    path = tmp_path / 'aarhus.json'
    path.write_text(json.dumps(aarhus_doc))
    return path


def run_json(capsys, *argv):
    assert cli.main(list(argv) + ['--json']) == 0
    return json.loads(capsys.readouterr().out)


def test_table_rows_reproduce_printed_values():
    rows = {r['name']: r for r in cli.table_rows()}
    assert len(rows) == 10
    for name, row in rows.items():
        assert abs(row['delta_f_ap']) < 0.2, name
        if name != 'Bonn M':
            assert abs(row['delta_p1']) < 0.2, name
    assert rows['Aarhus']['f_ap'] == pytest.approx(80.6, abs=0.1)


def test_table_writes_csv_and_manifest(tmp_path, capsys):
    out = tmp_path / 'run'
    assert cli.main(['table', '--out', str(out)]) == 0
    first = (out / 'table1.csv').read_bytes()
    manifest = json.loads((out / 'table.manifest.json').read_text())
    assert manifest['outputs'][0]['path'] == 'table1.csv'
    assert 'Aarhus' in capsys.readouterr().out

    assert cli.main(['table', '--out', str(out)]) == 0
    assert (out / 'table1.csv').read_bytes() == first
    assert first.decode('utf-8').count('\n') == 11


def test_lmax_single_point(capsys):
    assert cli.main(['lmax', '--pout', '0.5']) == 0
    printed = float(capsys.readouterr().out.strip())
    expected = l_max(0.5, attenuation_to_rate(0.2, DEFAULT_FIBER_SPEED), DEFAULT_FIBER_SPEED)
    assert printed == pytest.approx(expected, rel=1e-5)


def test_lmax_curve_from_preset(tmp_path, capsys):
    payload = run_json(capsys, 'lmax', '--fig', '5', '--out', str(tmp_path))
    assert len(payload['rows']) == 20
    labels = {row[0] for row in payload['rows']}
    assert labels == {'0.2 dB/km', '3 dB/km'}
    assert (tmp_path / 'lmax.csv').exists()


def test_analyze_json(capsys, aarhus_config):
    report = run_json(capsys, 'analyze', '--config', str(aarhus_config))
    assert 100 * report['f_ap'] == pytest.approx(80.6, abs=0.2)
    assert report['p_out'] == pytest.approx(0.713, abs=1e-3)
    assert 'cooperativity' not in report


def test_modes_n1_matches_closed_form(tmp_path, capsys, aarhus_config):
    payload = run_json(capsys, 'modes', '--config', str(aarhus_config), '--n', '1', '--out', str(tmp_path))
    assert len(payload['rows']) == 5
    assert payload['max_deviation_hz'] < 1e-6 * abs(payload['rows'][-1][1])
    assert (tmp_path / 'modes_n1.csv').exists()


def test_bad_json_exits_with_config_code(tmp_path, capsys):
    path = tmp_path / 'broken.json'
    path.write_text('{"cavity": {"length_l": 0.02,}}')
    assert cli.main(['analyze', '--config', str(path)]) == 2
    assert 'line 1' in capsys.readouterr().err


def test_missing_config_exits_with_config_code(tmp_path):
    assert cli.main(['analyze', '--config', str(tmp_path / 'nowhere.json')]) == 2
    assert cli.main(['analyze']) == 2


def test_unknown_preset(capsys):
    assert cli.main(['analyze', '--fig', '42']) == 2
    assert 'unknown figure preset' in capsys.readouterr().err
