import csv
import math
import os

import numpy as np
import pytest

from app.experiments import (
    ResultsTable,
    fig4,
    fig5,
    fig6,
    fit_exponential_decay,
    load_preset,
    run_experiment,
    sweep_taps,
    write_csv,
)
from app.simulator import RunOptions

N_TAPS = [2, 4, 8, 16]


def read_rows(path):
    with open(path, newline='') as f:
        lines = [line for line in f if not line.startswith('#')]
    return list(csv.DictReader(lines))


@pytest.fixture
def fig_config():
    return load_preset('fig4').with_overrides(n_o=20, messages=50)


def test_write_csv_format(tmp_path):
    table = ResultsTable(columns=['n', 'value', 'w'], preamble=['seed=1'])
    table.add_row([3, 1 / 3, None])
    table.add_row([1, 2.0, 4])
    path = write_csv(str(tmp_path / 'nested' / 't.csv'), table)
    with open(path, 'rb') as f:
        raw = f.read()
    assert b'\r' not in raw
    assert raw.decode().splitlines() == ['# seed=1', 'n,value,w', '1,2,4', '3,0.333333333,inf']


def test_results_table_rejects_ragged_rows():
    table = ResultsTable(columns=['a', 'b'])
    with pytest.raises(ValueError):
        table.add_row([1])


def test_run_experiment_is_byte_stable(tmp_path):
    config = load_preset('default').with_overrides(n_o=10, messages=20)
    run_experiment(config, str(tmp_path / 'a'), seed=5, reps=4)
    run_experiment(config, str(tmp_path / 'b'), seed=5, reps=4)
    for name in ('summary.csv', 'replications.csv'):
        with open(tmp_path / 'a' / name, 'rb') as a, open(tmp_path / 'b' / name, 'rb') as b:
            assert a.read() == b.read()
    rows = read_rows(tmp_path / 'a' / 'replications.csv')
    assert len(rows) == 4
    assert [int(r['replication']) for r in rows] == [0, 1, 2, 3]


def test_preamble_documents_parameters(tmp_path):
    config = load_preset('default').with_overrides(n_o=5, messages=10)
    run_experiment(config, str(tmp_path), seed=9, reps=2)
    with open(tmp_path / 'summary.csv') as f:
        header = [line for line in f if line.startswith('#')]
    assert '# seed=9\n' in header
    assert '# traffic.pu_distance_gain=4\n' in header


def test_fit_exponential_decay_recovers_curve():
    xs = np.arange(2, 21)
    ys = 0.5 * np.exp(-0.3 * xs) + 0.4
    a, k, c, r2 = fit_exponential_decay(xs, ys)
    assert a == pytest.approx(0.5, rel=1e-4)
    assert k == pytest.approx(0.3, rel=1e-4)
    assert c == pytest.approx(0.4, rel=1e-4)
    assert r2 == pytest.approx(1.0)


def test_fit_needs_three_points():
    with pytest.raises(ValueError):
        fit_exponential_decay([1, 2], [1, 2])


def test_fig4_trends(tmp_path, fig_config):
    tables = fig4(fig_config, str(tmp_path), [20], N_TAPS, seed=3, reps=20)
    baseline = tables['baseline'].column('tau_total_mean')
    smart = tables['smart'].column('tau_total_mean')
    d2d = tables['d2d'].column('tau_total_mean')
    both = tables['smart_d2d'].column('tau_total_mean')

    assert all(a > b for a, b in zip(baseline, baseline[1:]))
    assert all(s <= b for s, b in zip(smart, baseline))
    assert all(d <= b for d, b in zip(d2d, baseline))
    assert all(x <= s for x, s in zip(both, smart))

    gaps = [(b - s) / b for b, s in zip(baseline, smart)]
    assert gaps[0] == max(gaps)
    assert 0.1 <= gaps[0] <= 0.6

    for variant in ('baseline', 'smart', 'd2d', 'smart_d2d'):
        assert os.path.exists(tmp_path / f'fig4_{variant}.csv')
    fit = read_rows(tmp_path / 'fig4_fit.csv')
    assert {row['variant'] for row in fit} == {'baseline', 'smart', 'd2d', 'smart_d2d'}


def test_baseline_latency_decays_exponentially(fig_config):
    options = RunOptions.from_config(fig_config)
    table = sweep_taps(fig_config, [20], [2, 4, 6, 8, 12, 16, 20], 3, 20, options, ('tau_total',))
    _, k, _, r2 = fit_exponential_decay(table.column('n_tap'), table.column('tau_total_mean'))
    assert k > 0
    assert r2 >= 0.9


def test_fig5_trends(tmp_path):
    config = load_preset('fig5').with_overrides(n_o=20, messages=10)
    table = fig5(config, str(tmp_path), [20], N_TAPS, seed=3, reps=20)
    total = table.column('p_total_mean')
    assert all(a > b for a, b in zip(total, total[1:]))
    assert all(p <= 0.75 for p in table.column('p_tx_mean'))
    assert all(p <= 0.75 for p in table.column('p_tx_ci_high'))
    assert set(table.column('p_switching_mean')) == {0.0}
    rows = read_rows(tmp_path / 'fig5_power.csv')
    assert {row['p_switching_mean'] for row in rows} == {'0'}


def test_fig6_surface(tmp_path):
    table = fig6(str(tmp_path), ratios=[1.0, 6.0], n_a_list=[1, 2, 3], xi_grid=[0.9, 0.99, 0.999, 1.0])
    cells = {(r, n, x): w for r, n, x, _, w in table.sorted_rows()}

    def w(r, n, x):
        value = cells[(r, n, x)]
        return math.inf if value is None else value

    for n in (1, 2, 3):
        for x in (0.9, 0.99, 0.999, 1.0):
            assert w(6.0, n, x) <= w(1.0, n, x)
    assert any(w(6.0, n, 0.999) <= 2 for n in (1, 2, 3))
    assert cells[(6.0, 2, 0.999)] == 2

    rows = read_rows(tmp_path / 'fig6_surface.csv')
    assert len(rows) == 24
    assert {row['w'] for row in rows if row['xi_min'] == '1'} == {'inf'}


def test_fig6_smart_ideal_knowledge(tmp_path):
    table = fig6(str(tmp_path), ratios=[1.0, 6.0], n_a_list=[1, 2], xi_grid=[0.9, 0.999, 1.0], smart=True)
    assert set(table.column('w')) == {1}
    assert os.path.exists(tmp_path / 'fig6_smart.csv')
