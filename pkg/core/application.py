"""
Experiment runners

Each runner solves the problems an experiment needs, samples the results
on a uniform (S, v) grid and writes CSV files with SVG heatmaps derived
from them. run_experiment dispatches on the configured experiment and
adds the run manifest.
"""
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from config.settings import CONFIG
from report import build_manifest, render_heatmap, write_frame, write_manifest
from report.csv_output import (COMPARE_COLUMNS, CONTROL_COLUMNS, DELTA_MAP_COLUMNS, SPREAD_COLUMNS,
                               SURFACE_COLUMNS, SWEEP_COLUMNS)

from .assembly import assemble, dump_matrices
from .errors import ValidationError
from .greeks import price_surface, query
from .hjb_solver import solve_fixed, solve_hjb
from .mesh import build_mesh, write_mesh
from .model import ControlInterval
from .payoff import Payoff
from .transform import CoordinateMap, build_trapezoid

logger = logging.getLogger('hjbpricer.core.application')


@dataclass
class RunResult:
    """Files written by a runner plus the solved surfaces and headline numbers"""
    experiment: str
    files: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    surfaces: dict = field(default_factory=dict)
    mesh: object = None
    wall_time: float = 0.0


def prepare_mesh(cfg):
    cmap = CoordinateMap.from_params(cfg.params)
    trap = build_trapezoid(cfg.domain, cmap)
    return build_mesh(trap, cfg.n_y, cfg.n_z, cfg.refinements), cmap


def sample_grid(cfg):
    n_s, n_v = cfg.sample_grid
    S = np.linspace(cfg.domain.s_min, cfg.domain.s_max, n_s)
    v = np.linspace(0.0, cfg.domain.v_max, n_v)
    return S, v


def _run_legs(tasks):
    """Run independent callables concurrently, results in submission order"""
    with ThreadPoolExecutor(max_workers=CONFIG['MAX_WORKERS']) as pool:
        futures = [pool.submit(task) for task in tasks]
        return [f.result() for f in futures]


def solve_pair(op, control, steps):
    """Best-case and worst-case surfaces for one operator"""
    sup, inf = _run_legs([
        lambda: solve_hjb(op, control, steps, 'sup'),
        lambda: solve_hjb(op, control, steps, 'inf'),
    ])
    return sup, inf


def max_spreads(sup, inf):
    """
    Largest absolute and relative gap between best and worst case at t = 0

    The relative gap is the largest spread divided by the largest best-case
    value, so tails where both bounds vanish do not dominate it.
    """
    hi = sup.values[-1]
    spread = hi - inf.values[-1]
    top = float(np.max(hi))
    relative = float(np.max(spread)) / top if top > 0 else 0.0
    return float(np.max(spread)), relative


def _heatmaps(csv_path, columns, out_dir, prefix, t):
    files = []
    for column in columns:
        svg = os.path.join(out_dir, f"{prefix}_{column}.svg")
        files.append(render_heatmap(csv_path, column, svg, title=f"{column} at t = {t:g}", t=t))
    return files


def run_value_surface(cfg, out_dir):
    """
    Best-case and worst-case value, Delta and control surfaces

    Writes surface.csv (one block per output time) and heatmaps at t = 0.
    """
    mesh, cmap = prepare_mesh(cfg)
    op = assemble(mesh, cfg.params, cfg.payoff, cmap, cfg.control)
    sup, inf = solve_pair(op, cfg.control, cfg.steps)

    S, v = sample_grid(cfg)
    blocks = []
    for t in cfg.times:
        ps = price_surface(sup, S, v, t)
        pi = price_surface(inf, S, v, t)
        blocks.append({
            'S': ps.S, 'v': ps.v, 't': np.full(len(ps.S), ps.t),
            'value_sup': ps.value, 'value_inf': pi.value,
            'delta_sup': ps.delta, 'delta_inf': pi.delta,
            'control_sup': ps.control, 'control_inf': pi.control,
        })
    frame = {k: np.concatenate([b[k] for b in blocks]) for k in SURFACE_COLUMNS}
    csv_path = write_frame(frame, os.path.join(out_dir, 'surface.csv'), SURFACE_COLUMNS)

    files = [csv_path] + _heatmaps(csv_path, ['value_sup', 'value_inf', 'delta_sup', 'delta_inf'],
                                   out_dir, 'surface', 0.0)
    spread, relative = max_spreads(sup, inf)
    summary = {
        'value_min': float(min(sup.values.min(), inf.values.min())),
        'value_max': float(max(sup.values.max(), inf.values.max())),
        'controls_sup': sorted(set(np.unique(sup.controls).tolist())),
        'controls_inf': sorted(set(np.unique(inf.controls).tolist())),
        'howard_iterations_sup': int(sup.howard_iterations.sum()),
        'howard_iterations_inf': int(inf.howard_iterations.sum()),
        'max_spread': spread,
        'max_relative_spread': relative,
    }
    return RunResult('value_surface', files, summary, {'sup': sup, 'inf': inf}, mesh)


def run_control_map(cfg, out_dir):
    """Selected controls of both problems on the sample grid at the comparison time"""
    mesh, cmap = prepare_mesh(cfg)
    op = assemble(mesh, cfg.params, cfg.payoff, cmap, cfg.control)
    sup, inf = solve_pair(op, cfg.control, cfg.steps)

    S, v = sample_grid(cfg)
    ps = price_surface(sup, S, v, cfg.compare_time)
    pi = price_surface(inf, S, v, cfg.compare_time)
    frame = {'S': ps.S, 'v': ps.v, 't': np.full(len(ps.S), ps.t),
             'control_sup': ps.control, 'control_inf': pi.control}
    csv_path = write_frame(frame, os.path.join(out_dir, 'controls.csv'), CONTROL_COLUMNS)
    files = [csv_path] + _heatmaps(csv_path, ['control_sup', 'control_inf'], out_dir, 'controls', ps.t)

    endpoints = {cfg.control.lambda_min, cfg.control.lambda_max}
    recorded = np.concatenate([sup.controls.reshape(-1), inf.controls.reshape(-1)])
    summary = {
        't': ps.t,
        'fraction_at_endpoints': float(np.mean(np.isin(recorded, list(endpoints)))),
        'fraction_sup_at_lambda_min': float(np.mean(sup.controls[sup.index_of(ps.t)] == cfg.control.lambda_min)),
    }
    return RunResult('control_map', files, summary, {'sup': sup, 'inf': inf}, mesh)


def run_linear_compare(cfg, out_dir, lambda_fixed=None):
    """
    Difference between the best-case value and the value for one fixed control

    The difference is written at the comparison time; it is nonnegative
    because the best case dominates every constant control in the interval.
    """
    lam = cfg.fixed_control if lambda_fixed is None else lambda_fixed
    if not cfg.control.contains(lam):
        raise ValidationError(f"fixed control {lam} outside [{cfg.control.lambda_min}, {cfg.control.lambda_max}]")
    mesh, cmap = prepare_mesh(cfg)
    op = assemble(mesh, cfg.params, cfg.payoff, cmap, cfg.control)
    sup, fixed = _run_legs([
        lambda: solve_hjb(op, cfg.control, cfg.steps, 'sup'),
        lambda: solve_fixed(op, lam, cfg.steps),
    ])

    S, v = sample_grid(cfg)
    ps = price_surface(sup, S, v, cfg.compare_time)
    pf = price_surface(fixed, S, v, cfg.compare_time)
    frame = {'S': ps.S, 'v': ps.v, 't': np.full(len(ps.S), ps.t),
             'value_sup': ps.value, 'value_fixed': pf.value, 'difference': ps.value - pf.value}
    csv_path = write_frame(frame, os.path.join(out_dir, 'linear_compare.csv'), COMPARE_COLUMNS)
    files = [csv_path] + _heatmaps(csv_path, ['difference'], out_dir, 'linear_compare', ps.t)

    diff = sup.values - fixed.values
    summary = {
        'lambda_fixed': lam,
        't': ps.t,
        'min_difference': float(diff.min()),
        'max_difference': float(diff.max()),
        'max_difference_at_t': float(diff[sup.index_of(ps.t)].max()),
    }
    return RunResult('linear_compare', files, summary, {'sup': sup, 'fixed': fixed}, mesh)


def _sweep_leg(cfg, mesh, cmap, control):
    op = assemble(mesh, cfg.params, cfg.payoff, cmap, control)
    sup = solve_hjb(op, control, cfg.steps, 'sup')
    inf = solve_hjb(op, control, cfg.steps, 'inf')
    return op, sup, inf


def run_interval_sweep(cfg, out_dir, center=None, diameters=None):
    """
    Best and worst case for symmetric control sets of growing diameter

    Writes interval_sweep.csv (values and Deltas at the query points) and
    spreads.csv (largest absolute and relative gap per diameter).
    """
    center = cfg.sweep_center if center is None else center
    diameters = list(cfg.sweep_diameters if diameters is None else diameters)
    if any(d < 0 for d in diameters) or diameters != sorted(diameters):
        raise ValidationError("sweep diameters must be nonnegative and increasing")
    mesh, cmap = prepare_mesh(cfg)
    controls = [ControlInterval.symmetric(center, d, cfg.control.n_points) for d in diameters]
    legs = _run_legs([(lambda c=c: _sweep_leg(cfg, mesh, cmap, c)) for c in controls])

    rows = {k: [] for k in SWEEP_COLUMNS}
    spreads = {k: [] for k in SPREAD_COLUMNS}
    surfaces = {}
    for d, control, (op, sup, inf) in zip(diameters, controls, legs):
        surfaces[d] = (sup, inf)
        for S0, v0 in cfg.query_points:
            vs, ds = query(sup, S0, v0, 0.0)
            vi, di = query(inf, S0, v0, 0.0)
            for key, value in (('diameter', d), ('lambda_min', control.lambda_min),
                               ('lambda_max', control.lambda_max), ('S', S0), ('v', v0),
                               ('value_sup', vs), ('value_inf', vi), ('delta_sup', ds), ('delta_inf', di)):
                rows[key].append(value)
        spread, relative = max_spreads(sup, inf)
        for key, value in (('diameter', d), ('lambda_min', control.lambda_min),
                           ('lambda_max', control.lambda_max), ('max_spread', spread),
                           ('max_relative_spread', relative)):
            spreads[key].append(value)
        logger.info(f"Sweep diameter {d}: max spread {spread:.6g}, relative {relative:.2%}")

    files = [
        write_frame(rows, os.path.join(out_dir, 'interval_sweep.csv'), SWEEP_COLUMNS),
        write_frame(spreads, os.path.join(out_dir, 'spreads.csv'), SPREAD_COLUMNS),
    ]
    summary = {
        'center': center,
        'diameters': diameters,
        'max_spread': spreads['max_spread'],
        'max_relative_spread': spreads['max_relative_spread'],
    }
    return RunResult('interval_sweep', files, summary, surfaces, mesh)


def delta_map_payoffs(payoff):
    """Call and butterfly sharing the configured strike"""
    a = payoff.a if payoff.kind == 'butterfly' else 0.4 * payoff.K
    return {'call': Payoff.call(payoff.K), 'butterfly': Payoff.butterfly(payoff.K, a)}


def run_delta_map(cfg, out_dir):
    """Delta gap between best and worst case at t = 0 for a call and a butterfly"""
    mesh, cmap = prepare_mesh(cfg)
    S, v = sample_grid(cfg)
    files = []
    summary = {}
    surfaces = {}
    for kind, payoff in delta_map_payoffs(cfg.payoff).items():
        op = assemble(mesh, cfg.params, payoff, cmap, cfg.control)
        sup, inf = solve_pair(op, cfg.control, cfg.steps)
        surfaces[kind] = (sup, inf)
        ps = price_surface(sup, S, v, 0.0)
        pi = price_surface(inf, S, v, 0.0)
        diff = ps.delta - pi.delta
        frame = {'S': ps.S, 'v': ps.v, 't': np.full(len(ps.S), ps.t),
                 'delta_sup': ps.delta, 'delta_inf': pi.delta, 'delta_difference': diff}
        csv_path = write_frame(frame, os.path.join(out_dir, f'delta_map_{kind}.csv'), DELTA_MAP_COLUMNS)
        files.append(csv_path)
        files += _heatmaps(csv_path, ['delta_difference'], out_dir, f'delta_map_{kind}', 0.0)
        k = int(np.argmax(np.abs(diff)))
        summary[kind] = {'max_abs_difference': float(abs(diff[k])), 'at_S': float(ps.S[k]),
                         'at_v': float(ps.v[k])}
    return RunResult('delta_map', files, summary, surfaces, mesh)


def write_debug_files(cfg, mesh, directory):
    """Mesh export and coordinate-format matrices of the configured problem"""
    cmap = CoordinateMap.from_params(cfg.params)
    op = assemble(mesh, cfg.params, cfg.payoff, cmap, cfg.control)
    return [write_mesh(mesh, os.path.join(directory, 'mesh.txt'))] + dump_matrices(op, directory)


RUNNERS = {
    'value_surface': run_value_surface,
    'control_map': run_control_map,
    'linear_compare': run_linear_compare,
    'interval_sweep': run_interval_sweep,
    'delta_map': run_delta_map,
}


def run_experiment(cfg, out_dir, dump=False):
    """
    Run the configured experiment and write its manifest

    Parameters:
    - cfg: ExperimentConfig
    - out_dir: output directory
    - dump: also write the mesh and the assembled matrices under out_dir/debug

    Returns:
    - RunResult
    """
    logger.info(f"Starting experiment '{cfg.experiment}' into {out_dir}")
    os.makedirs(out_dir, exist_ok=True)
    start = time.perf_counter()
    result = RUNNERS[cfg.experiment](cfg, out_dir)
    result.wall_time = time.perf_counter() - start
    if dump:
        result.files.extend(write_debug_files(cfg, result.mesh, os.path.join(out_dir, 'debug')))
    manifest = build_manifest(cfg, result.mesh.statistics(), result.wall_time, result.files, result.summary)
    result.files.append(write_manifest(manifest, out_dir))
    logger.info(f"Experiment '{cfg.experiment}' finished in {result.wall_time:.1f}s, "
                f"{len(result.files)} files written")
    return result


def run_oracle(cfg, lam, S0, v0):
    """
    Reference prices at one point for a fixed control

    Returns:
    - dict with the Monte Carlo estimate and standard error, the PDE price
      and, for a call with lambda = 0, the characteristic-function price
    """
    from oracle import McConfig, heston_cf_call, mc_price

    mc, stderr = mc_price(cfg.params, cfg.payoff, lam, S0, v0,
                          McConfig(n_paths=cfg.mc_paths, n_steps=cfg.mc_steps, seed=cfg.seed))
    mesh, cmap = prepare_mesh(cfg)
    control = ControlInterval.singleton(lam)
    op = assemble(mesh, cfg.params, cfg.payoff, cmap, control)
    surface = solve_fixed(op, lam, cfg.steps)
    pde, delta = query(surface, S0, v0, 0.0)
    result = {'lambda': lam, 'S': S0, 'v': v0, 'mc_price': mc, 'mc_stderr': stderr,
              'pde_price': pde, 'pde_delta': delta}
    if lam == 0 and cfg.payoff.kind == 'call':
        result['cf_price'] = heston_cf_call(cfg.params, cfg.payoff.K, S0, v0)
    if math.isfinite(stderr) and stderr > 0:
        result['z_score'] = (pde - mc) / stderr
    return result
