"""
Experiment sweeps and CSV output.

Every table goes through write_csv: `# key=value` preamble lines with the
parameters that produced it, a header row, then one row per sweep point with
floats at a fixed number of significant digits and LF line endings. Nothing
time-dependent is written, so a rerun with the same config and seed gives
byte-identical files.
"""
import csv
import logging
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from app.planner import reliability_surface
from app.scenario import build_scenario
from app.scenario_config import parse_config
from app.simulator import METRICS, RunOptions, run_batch
from app.utils import format_float
from config import Config

logger = logging.getLogger(__name__)

LATENCY_METRICS = ('tau_o', 'tau_p', 'tau_a', 'tau_total')
POWER_METRICS = ('p_tx', 'p_compute', 'p_storage', 'p_switching', 'p_total')

# name -> (smart, d2d)
VARIANTS = {
    'baseline': (False, False),
    'smart': (True, False),
    'd2d': (False, True),
    'smart_d2d': (True, True),
}

DEFAULT_RATIOS = (1.0, 2.0, 6.0)
DEFAULT_NA = (1, 2, 3)
DEFAULT_XI_GRID = (0.9, 0.95, 0.99, 0.995, 0.999, 0.9999, 1.0)


@dataclass
class ResultsTable:
    """Header plus rows, sorted by the leading sweep columns"""
    columns: list
    rows: list = field(default_factory=list)
    preamble: list = field(default_factory=list)
    sort_columns: int = 1

    def add_row(self, values):
        if len(values) != len(self.columns):
            raise ValueError(f"Row has {len(values)} values, table has {len(self.columns)} columns")
        self.rows.append(list(values))

    def sorted_rows(self):
        return sorted(self.rows, key=lambda row: tuple(row[:self.sort_columns]))

    def column(self, name):
        """Values of one column in sorted row order"""
        index = self.columns.index(name)
        return [row[index] for row in self.sorted_rows()]


def metric_columns(metrics):
    """mean, ci_low, ci_high per metric"""
    columns = []
    for metric in metrics:
        columns.extend([f'{metric}_mean', f'{metric}_ci_low', f'{metric}_ci_high'])
    return columns


def summary_values(summary, metrics):
    values = []
    for metric in metrics:
        stat = summary[metric]
        values.extend([stat.mean, stat.ci_low, stat.ci_high])
    return values


def write_csv(path, table, digits=Config.CSV_SIGNIFICANT_DIGITS):
    """
    Write a ResultsTable.

    Args:
        path: Output file path; parent directories are created
        table: ResultsTable
        digits: Significant digits for floats

    Returns:
        str: The path written
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        for line in table.preamble:
            f.write(f"# {line}\n")
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(table.columns)
        for row in table.sorted_rows():
            writer.writerow([value if isinstance(value, str) else format_float(value, digits) for value in row])
    logger.info("Wrote %s (%d rows)", path, len(table.rows))
    return path


def load_preset(name):
    """Parse presets/<name>.cfg, or a path to any .cfg file"""
    path = name if name.endswith('.cfg') else os.path.join(Config.PRESET_DIR, f'{name}.cfg')
    return parse_config(path)


def run_preamble(config, seed, reps, options):
    lines = [f"seed={seed}", f"reps={reps}"]
    for key in ('smart', 'd2d', 'w', 'n_a', 'messages', 'monitor_window'):
        lines.append(f"options.{key}={format_float(getattr(options, key))}")
    return lines + config.preamble()


def summary_table(summary, preamble=()):
    table = ResultsTable(columns=['metric', 'mean', 'stderr', 'ci_low', 'ci_high', 'n'], preamble=list(preamble), sort_columns=0)
    for metric in METRICS:
        stat = summary[metric]
        table.add_row([metric, stat.mean, stat.stderr, stat.ci_low, stat.ci_high, stat.n])
    return table


def replications_table(summary, preamble=()):
    table = ResultsTable(columns=['replication', 'seed'] + list(METRICS), preamble=list(preamble))
    for k, result in enumerate(summary.replications):
        values = result.metrics()
        table.add_row([k, result.seed] + [values[m] for m in METRICS])
    return table


def run_experiment(config, out_dir, seed, reps, parallelism=1, options=None):
    """
    Run one batch and write summary.csv and replications.csv.

    Returns:
        MetricsSummary
    """
    scenario = build_scenario(config)
    options = options or RunOptions.from_config(config)
    summary = run_batch(scenario, options, reps, seed, parallelism)
    preamble = run_preamble(config, seed, reps, options)
    write_csv(os.path.join(out_dir, 'summary.csv'), summary_table(summary, preamble))
    write_csv(os.path.join(out_dir, 'replications.csv'), replications_table(summary, preamble))
    return summary


def sweep_taps(config, n_o_list, n_tap_list, seed, reps, options, metrics, parallelism=1):
    """
    Run a batch at every (n_o, n_tap) point.

    Every point uses the same base seed, so replication k places the same
    objects and the same first TAPs at every n_tap.

    Returns:
        ResultsTable with columns n_o, n_tap and mean/ci per metric
    """
    table = ResultsTable(columns=['n_o', 'n_tap'] + metric_columns(metrics), sort_columns=2)
    for n_o in sorted(n_o_list):
        for n_tap in sorted(n_tap_list):
            point = config.with_overrides(n_o=n_o, n_tap=n_tap)
            logger.info("Sweep point n_o=%d n_tap=%d smart=%s d2d=%s", n_o, n_tap, options.smart, options.d2d)
            summary = run_batch(build_scenario(point), options, reps, seed, parallelism)
            table.add_row([n_o, n_tap] + summary_values(summary, metrics))
    table.preamble = [f"n_o={','.join(str(n) for n in sorted(n_o_list))}",
                      f"n_tap={','.join(str(n) for n in sorted(n_tap_list))}"] + run_preamble(config, seed, reps, options)
    return table


def exponential_decay(x, a, k, c):
    return a * np.exp(-k * x) + c


def fit_exponential_decay(xs, ys):
    """
    Least-squares fit of y = A exp(-k x) + C.

    Returns:
        tuple: (A, k, C, r2); r2 is 1 for a constant series
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size != y.size:
        raise ValueError("xs and ys differ in length")
    if x.size < 3:
        raise ValueError(f"At least 3 points are needed for an exponential fit, got {x.size}")

    span = float(x.max() - x.min()) or 1.0
    p0 = (float(y[0] - y[-1]), 1.0 / span, float(y[-1]))
    try:
        params, _ = optimize.curve_fit(exponential_decay, x, y, p0=p0, maxfev=20000)
    except RuntimeError as e:
        logger.warning("Exponential fit did not converge: %s", e)
        return math.nan, math.nan, math.nan, math.nan

    residual = float(np.sum((y - exponential_decay(x, *params)) ** 2))
    total = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if total == 0.0 else 1.0 - residual / total
    a, k, c = (float(p) for p in params)
    return a, k, c, r2


def fig4(config, out_dir, n_o_list, n_tap_list, seed, reps, parallelism=1):
    """
    Mean latency against the number of TAPs for every variant.

    Writes fig4_<variant>.csv per variant and fig4_fit.csv with the
    exponential-decay fit of tau_total per (variant, n_o).

    Returns:
        dict: variant -> ResultsTable
    """
    base = RunOptions.from_config(config)
    tables = {}
    fit = ResultsTable(columns=['variant', 'n_o', 'A', 'k', 'C', 'r2'], sort_columns=2,
                       preamble=["model=A*exp(-k*n_tap)+C", f"seed={seed}", f"reps={reps}"])
    for variant, (smart, d2d) in VARIANTS.items():
        options = replace(base, smart=smart, d2d=d2d)
        table = sweep_taps(config, n_o_list, n_tap_list, seed, reps, options, LATENCY_METRICS, parallelism)
        table.preamble.insert(0, f"variant={variant}")
        write_csv(os.path.join(out_dir, f'fig4_{variant}.csv'), table)
        tables[variant] = table

        if len(n_tap_list) >= 3:
            for n_o in sorted(n_o_list):
                rows = [row for row in table.sorted_rows() if row[0] == n_o]
                xs = [row[1] for row in rows]
                ys = [row[table.columns.index('tau_total_mean')] for row in rows]
                fit.add_row([variant, n_o, *fit_exponential_decay(xs, ys)])
    if fit.rows:
        write_csv(os.path.join(out_dir, 'fig4_fit.csv'), fit)
    return tables


def fig5(config, out_dir, n_o_list, n_tap_list, seed, reps, parallelism=1):
    """
    Mean power against the number of TAPs, split into its components.

    Returns:
        ResultsTable
    """
    options = RunOptions.from_config(config)
    table = sweep_taps(config, n_o_list, n_tap_list, seed, reps, options, POWER_METRICS, parallelism)
    write_csv(os.path.join(out_dir, 'fig5_power.csv'), table)
    return table


def fig6(out_dir, ratios=DEFAULT_RATIOS, n_a_list=DEFAULT_NA, xi_grid=DEFAULT_XI_GRID,
         smart=False, monitored_channels=None, w_max=Config.SURFACE_W_MAX):
    """
    Minimal channel count over (ratio, n_a, xi_min).

    Infeasible cells are written as `inf`.

    Returns:
        ResultsTable
    """
    cells = reliability_surface(ratios, n_a_list, xi_grid, smart=smart,
                                monitored_channels=monitored_channels, w_max=w_max)
    preamble = [
        f"ratios={','.join(format_float(float(r)) for r in sorted(ratios))}",
        f"n_a={','.join(str(n) for n in sorted(n_a_list))}",
        f"xi_grid={','.join(format_float(float(x)) for x in sorted(xi_grid))}",
        f"smart={format_float(smart)}",
        f"monitored_channels={'ideal' if monitored_channels is None else monitored_channels}",
        f"w_max={w_max}",
    ]
    table = ResultsTable(columns=['ratio', 'n_a', 'xi_min', 'xi', 'w'], preamble=preamble, sort_columns=3)
    for cell in cells:
        table.add_row([float(cell.ratio), cell.n_a, float(cell.xi_min), cell.xi, cell.w])
    name = 'fig6_smart.csv' if smart else 'fig6_surface.csv'
    write_csv(os.path.join(out_dir, name), table)
    return table
