import json
import os

import pytest

from exlb import cli
from exlb.module_utils.output import load_manifest, read_csv


def run(capsys, *argv):
    with pytest.raises(SystemExit) as e:
        cli.main(list(argv))
    captured = capsys.readouterr()
    return e.value.code, captured.out.splitlines(), captured.err


def result(lines):
    return json.loads(lines[-1])


def test_usage_without_arguments(capsys):
    rc, out, err = run(capsys)
    assert rc == 1
    assert 'usage: exlb' in err
    assert out == []


def test_help(capsys):
    rc, out, _ = run(capsys, '--help')
    assert rc == 0
    assert any(line.strip().startswith('estimate') for line in out)


def test_version(capsys):
    import exlb

    rc, out, _ = run(capsys, '--version')
    assert rc == 0
    assert out == ['exlb {0}'.format(exlb.__version__)]


def test_unknown_subcommand(capsys):
    rc, _, err = run(capsys, 'frobnicate')
    assert rc == 1
    assert 'unknown subcommand "frobnicate"' in err


def test_bounds_random_plane_wave(capsys, tmp_path):
    rc, out, _ = run(capsys, 'bounds', '--lambda', '1.4142135', '--eta-sq', '8',
                     '--out', str(tmp_path))
    assert rc == 0
    assert out[0] == 'bimodal: yes, threshold: 1.0'
    res = result(out)
    assert res['bimodal'] is True
    assert res['bimodality_margin'] > 0

    csv_path = next(f for f in res['files'] if f.endswith('.csv'))
    with open(csv_path) as fd:
        head = [fd.readline().strip(), fd.readline().strip()]
    assert head == ['# schema: bounds/1', 'level,ces_diff,ces_lower,cns_lower,cns_upper']


def test_bounds_bargmann_fock(capsys, tmp_path):
    rc, out, _ = run(capsys, 'bounds', '--lambda', '1', '--eta-sq', '2',
                     '--out', str(tmp_path))
    assert rc == 0
    assert out[0] == 'bimodal: no, threshold: 1.4142'
    assert result(out)['bimodal'] is False


def test_bounds_from_model(capsys, tmp_path):
    rc, out, _ = run(capsys, 'bounds', '--model', 'bargmann-fock', '--levels', '0:2:0.5',
                     '--out', str(tmp_path))
    assert rc == 0
    assert out[0] == 'bimodal: no, threshold: 1.4142'
    assert os.path.exists(str(tmp_path / 'bounds-bargmann-fock.svg'))


def test_bounds_lambda_out_of_range(capsys, tmp_path):
    rc, out, err = run(capsys, 'bounds', '--lambda', '2', '--eta-sq', '1',
                       '--out', str(tmp_path))
    assert rc == 1
    assert 'lambda' in err
    assert result(out)['failed'] is True


def test_bad_flag_value(capsys, tmp_path):
    rc, _, err = run(capsys, 'bounds', '--eta-sq', 'many', '--out', str(tmp_path))
    assert rc == 1
    assert 'eta_sq' in err


def test_densities(capsys, tmp_path):
    rc, out, _ = run(capsys, 'densities', '--model', 'rpw', '--xs', '-1:1:0.5',
                     '--out', str(tmp_path))
    assert rc == 0
    res = result(out)
    assert res['case'] == 'Critical'
    assert res['totals']['saddle'] == pytest.approx(2 * res['totals']['max'], rel=1e-6)
    schema, header, rows = read_csv(str(tmp_path / 'densities-rpw.csv'))
    assert header == ['x', 'p_max', 'p_min', 'p_saddle']
    zero = next(r for r in rows if float(r[0]) == 0.0)
    assert zero[1] == '0.0'


def test_densities_rejects_atomic_models(capsys, tmp_path, measure_file):
    path = measure_file({'alpha': 0.2, 'beta': 0.5, 'gamma': 0.3})
    rc, _, err = run(capsys, 'densities', '--model', 'atomic:{0}'.format(path),
                     '--out', str(tmp_path))
    assert rc == 1
    assert 'closed-form' in err


def test_degenerate_null_case(capsys, tmp_path):
    rc, out, _ = run(capsys, 'degenerate', '--alpha', '0', '--beta', '0.5', '--gamma', '0.5',
                     '--levels', '-1:1:0.5', '--out', str(tmp_path))
    assert rc == 0
    assert result(out)['models'] == ['degenerate-a0-b0.5-g0.5']
    schema, _, rows = read_csv(str(tmp_path / 'degenerate-a0-b0.5-g0.5.csv'))
    assert schema == 'degenerate/1'
    zero = next(r for r in rows if float(r[0]) == 0.0)
    assert zero[1] == '0.0'
    assert os.path.exists(str(tmp_path / 'degenerate-cns-a0.svg'))


def test_degenerate_needs_beta_and_gamma(capsys, tmp_path):
    rc, _, err = run(capsys, 'degenerate', '--beta', '0.5', '--out', str(tmp_path))
    assert rc == 1
    assert 'gamma' in err


def test_audit_holds(capsys, tmp_path):
    rc, out, _ = run(capsys, 'audit', '--model', 'bargmann-fock', '--reals', '2',
                     '--side', '10', '--levels', '-1.05:1.05:0.3', '--out', str(tmp_path))
    assert rc == 0
    assert out[0].startswith('audited 2 field(s)')
    assert result(out)['audited'] == 2
    schema, header, rows = read_csv(str(tmp_path / 'audit-bargmann-fock-7.csv'))
    assert schema == 'audit/1'
    assert len(rows) == 2 * 8


def test_audit_failure_exits_two(capsys, tmp_path, monkeypatch):
    from exlb import grid_topology

    merge_sweep = grid_topology._merge_sweep

    def drop_first(order, n, offsets):
        vertex, merges = merge_sweep(order, n, offsets)
        return vertex[1:], merges[1:]

    monkeypatch.setattr(grid_topology, '_merge_sweep', drop_first)
    rc, out, err = run(capsys, 'audit', '--model', 'bargmann-fock', '--reals', '1',
                       '--side', '10', '--levels', '0.05', '--out', str(tmp_path))
    assert rc == 2
    assert 'Realization 0' in err
    assert 'audit' in result(out)
    assert os.path.exists(str(tmp_path / 'audit-bargmann-fock-7.csv'))


def test_sample_dump(capsys, tmp_path):
    rc, out, _ = run(capsys, 'sample', '--model', 'bargmann-fock', '--side', '10',
                     '--out', str(tmp_path))
    assert rc == 0
    res = result(out)
    n = res['points_per_side']
    assert os.path.getsize(res['path']) == 16 + 8 * n * n


def test_sample_then_audit_file(capsys, tmp_path):
    _, out, _ = run(capsys, 'sample', '--model', 'bargmann-fock', '--side', '10',
                    '--out', str(tmp_path))
    path = result(out)['path']
    rc, out, _ = run(capsys, 'audit', '--field', path, '--levels', '-0.95:0.95:0.3',
                     '--events', '--out', str(tmp_path))
    assert rc == 0
    assert any(os.path.basename(f).startswith('events-') for f in result(out)['files'])


def test_estimate_small_run(capsys, tmp_path):
    rc, out, _ = run(capsys, 'estimate', '--model', 'bargmann-fock', '--side', '12',
                     '--reals', '3', '--threads', '1', '--levels', '-1:1:0.5',
                     '--out', str(tmp_path))
    assert rc == 0
    res = result(out)
    assert res['n_realizations'] == 3
    assert res['interrupted'] is False
    assert {c['name'] for c in res['checks']} >= {'integral_identity', 'cns_symmetry'}
    assert os.path.exists(str(tmp_path / 'report-bargmann-fock-7.json'))


def test_estimate_missing_config(capsys, tmp_path):
    missing = str(tmp_path / 'missing.yml')
    rc, _, err = run(capsys, 'estimate', '--config', missing, '--out', str(tmp_path))
    assert rc == 1
    assert missing in err


def test_config_parse_error(capsys, tmp_path):
    cfg = tmp_path / 'bad.yml'
    cfg.write_text('model: rpw\nlevels: [1, 2\n')
    rc, _, err = run(capsys, 'bounds', '--config', str(cfg), '--out', str(tmp_path))
    assert rc == 1
    assert 'line' in err


def test_config_supplies_params(capsys, tmp_path):
    cfg = tmp_path / 'run.yml'
    cfg.write_text('lambda: 1.0\neta-sq: 2.0\nlevels: "0:1:0.5"\n')
    rc, out, _ = run(capsys, 'bounds', '--config', str(cfg), '--out', str(tmp_path))
    assert rc == 0
    assert out[0] == 'bimodal: no, threshold: 1.4142'


def test_manifest_accumulates(capsys, tmp_path):
    for lam in ('1', '1.2'):
        rc, _, _ = run(capsys, 'bounds', '--lambda', lam, '--eta-sq', '2',
                       '--levels', '0:1:0.5', '--out', str(tmp_path))
        assert rc == 0
    manifest = load_manifest(str(tmp_path))
    assert [m['subcommand'] for m in manifest] == ['bounds', 'bounds']
    assert all(m['version'] for m in manifest)


def test_estimate_warns_on_contained_excess(capsys, tmp_path, monkeypatch):
    from exlb import grid_topology

    # A negative corner slack pushes every realization over the allowance.
    monkeypatch.setattr(grid_topology, 'CORNER_SLACK', -1000)
    rc, out, _ = run(capsys, 'estimate', '--model', 'bargmann-fock', '--side', '10',
                     '--reals', '2', '--threads', '1', '--levels', '-1:1:0.5',
                     '--checks', 'false', '--out', str(tmp_path))
    assert rc == 0
    res = result(out)
    assert res['max_contained_excess'] > 0
    assert any('exceed the boundary allowance' in w for w in res['warnings'])


def test_estimate_without_excess_has_no_boundary_warning(capsys, tmp_path):
    rc, out, _ = run(capsys, 'estimate', '--model', 'bargmann-fock', '--side', '10',
                     '--reals', '2', '--threads', '1', '--levels', '-1:1:0.5',
                     '--checks', 'false', '--out', str(tmp_path))
    assert rc == 0
    res = result(out)
    assert res['max_contained_excess'] <= 0
    assert not any('boundary allowance' in w for w in res['warnings'])


@pytest.mark.parametrize('atoms, expected', [
    ([[1, 0, 0.25], [-1, 0, 0.25], [0, 1, 0.25], [0, -1, 0.25]], True),
    ([[0, 1, 1 / 6.], [0, -1, 1 / 6.], [1, 1, 1 / 6.], [-1, -1, 1 / 6.],
      [2, 1, 1 / 6.], [-2, -1, 1 / 6.]], False),
])
def test_estimate_degenerate_reference_follows_support(capsys, tmp_path, measure_file,
                                                       atoms, expected):
    path = measure_file({'kind': 'AtomicSymmetric', 'atoms': atoms})
    rc, out, _ = run(capsys, 'estimate', '--model', 'atomic:' + path, '--side', '3',
                     '--reals', '3', '--threads', '1', '--levels', '-1:1:0.5',
                     '--out', str(tmp_path))
    assert rc == 0
    names = {c['name'] for c in result(out)['checks']}
    assert ('degenerate_reference' in names) is expected
    assert 'cns_symmetry' in names
