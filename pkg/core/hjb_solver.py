"""
Backward time stepping for the fixed-control and the HJB problems

Each implicit Euler step solves (M/dt + A(lambda)) w^n = (M/dt) w^{n+1} + rhs.
For the HJB problem the per-node control is chosen by Howard policy
iteration on the defect b - (M/dt + A(lambda)) w: 'sup' takes the largest
defect and yields the highest value, 'inf' the smallest.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from config.settings import CONFIG
from .errors import DomainError, HowardConvergenceError, SolverError, ValidationError

logger = logging.getLogger('hjbpricer.core.hjb_solver')

MODES = ('sup', 'inf')


@dataclass(eq=False)
class ValueSurface:
    """
    Time-indexed nodal solution

    Parameters:
    - times: decreasing from T to 0
    - values: (steps + 1, N) nodal values, values[0] is the final condition
    - controls: (steps + 1, N) selected control per node
    - mode: 'sup', 'inf' or 'fixed'
    - fixed_control: the control for mode 'fixed'
    """
    times: np.ndarray
    values: np.ndarray
    controls: np.ndarray
    mode: str
    mesh: object
    coordinate_map: object
    fixed_control: float = None
    howard_iterations: np.ndarray = field(default=None)

    @property
    def steps(self):
        return len(self.times) - 1

    @property
    def dt(self):
        return float(self.times[0] - self.times[1]) if self.steps else 0.0

    def index_of(self, t):
        """Index of the stored time nearest to t"""
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 0.5 * self.dt + 1e-12:
            raise DomainError(f"time {t} is not in the trajectory")
        return idx

    def at(self, t):
        return self.values[self.index_of(t)]


def howard_select(residuals, mode):
    """
    Per-node control choice

    Parameters:
    - residuals: (N, P) defect per node and control value, controls ascending
    - mode: 'sup' picks the argmax, 'inf' the argmin

    Returns:
    - (N,) control indices; ties go to the smallest control
    """
    if mode not in MODES:
        raise ValidationError(f"unknown mode '{mode}'")
    residuals = np.asarray(residuals)
    if residuals.ndim != 2 or residuals.shape[1] < 1:
        raise ValidationError("need at least one control value")
    if mode == 'sup':
        return np.argmax(residuals, axis=1)
    return np.argmin(residuals, axis=1)


def _time_grid(T, steps):
    if steps < 1:
        raise ValidationError("steps must be positive")
    times = T - np.arange(steps + 1) * (T / steps)
    times[-1] = 0.0
    return times


def _solve(matrix, b, step, lu=None):
    """Sparse direct solve with one refinement pass and a residual check"""
    try:
        lu = splu(sp.csc_matrix(matrix)) if lu is None else lu
    except RuntimeError as e:
        raise SolverError(f"singular system at step {step}: {e}", step=step)
    w = lu.solve(b)
    norm_b = max(float(np.abs(b).max()), np.finfo(float).tiny)
    tol = CONFIG['LINEAR_SOLVE_TOLERANCE']
    res = b - matrix @ w
    if np.abs(res).max() > tol * norm_b:
        w = w + lu.solve(res)
        res = b - matrix @ w
    if not np.all(np.isfinite(w)) or np.abs(res).max() > tol * norm_b:
        raise SolverError(f"linear solve inaccurate at step {step}: "
                          f"residual {np.abs(res).max():.3e}", step=step, residual=float(np.abs(res).max()))
    return w, lu


def _step_rhs(op, w_next, dt):
    return op.mass / dt * w_next + op.rhs


def solve_fixed(op, lam, steps=None):
    """
    Linear backward problem for a constant control

    Parameters:
    - op: DiscreteOperator
    - lam: control inside the assembled interval
    - steps: number of implicit Euler steps (CONFIG default)

    Returns:
    - ValueSurface with mode 'fixed'
    """
    steps = CONFIG['DEFAULT_STEPS'] if steps is None else steps
    op.check_control(lam)
    times = _time_grid(op.params.T, steps)
    dt = op.params.T / steps
    n = op.size
    controls = np.full(n, float(lam))
    matrix = op.system_matrix(controls, dt)

    values = np.empty((steps + 1, n))
    values[0] = op.terminal
    lu = None
    for s in range(1, steps + 1):
        values[s], lu = _solve(matrix, _step_rhs(op, values[s - 1], dt), s, lu)

    logger.info(f"Fixed-control solve lambda={lam}: {steps} steps")
    return ValueSurface(times=times, values=values, controls=np.tile(controls, (steps + 1, 1)),
                        mode='fixed', mesh=op.mesh, coordinate_map=op.coordinate_map,
                        fixed_control=float(lam), howard_iterations=np.zeros(steps + 1, dtype=int))


def _defects(op, w, b, points, dt):
    base_w = op.mass / dt * w + op.base_matrix @ w
    down_w, up_w = op.lambda_products(w)
    return ((b - base_w)[:, None] - np.minimum(points, 0.0)[None, :] * down_w[:, None]
            - np.maximum(points, 0.0)[None, :] * up_w[:, None])


def solve_hjb(op, control, steps=None, mode='sup'):
    """
    Nonlinear backward problem with per-node extremal control

    Parameters:
    - op: DiscreteOperator assembled for this control interval
    - control: ControlInterval
    - steps: number of implicit Euler steps (CONFIG default)
    - mode: 'sup' for the best case, 'inf' for the worst case

    Returns:
    - ValueSurface; controls[0] repeats the policy of the first step

    Raises:
    - HowardConvergenceError if a step exceeds the iteration limit
    """
    if mode not in MODES:
        raise ValidationError(f"unknown mode '{mode}'")
    steps = CONFIG['DEFAULT_STEPS'] if steps is None else steps
    points = control.points()
    for lam in (points[0], points[-1]):
        op.check_control(lam)
    times = _time_grid(op.params.T, steps)
    dt = op.params.T / steps
    n = op.size
    tol = CONFIG['HOWARD_TOLERANCE']
    max_iter = CONFIG['HOWARD_MAX_ITERATIONS']

    values = np.empty((steps + 1, n))
    controls = np.empty((steps + 1, n))
    iterations = np.zeros(steps + 1, dtype=int)
    values[0] = op.terminal

    for s in range(1, steps + 1):
        b = _step_rhs(op, values[s - 1], dt)
        threshold = tol * max(1.0, float(np.abs(b).max()))
        w = values[s - 1]
        policy = howard_select(_defects(op, w, b, points, dt), mode)
        residual = np.inf
        for it in range(1, max_iter + 1):
            matrix = op.system_matrix(points[policy], dt)
            w, _ = _solve(matrix, b, s)
            defects = _defects(op, w, b, points, dt)
            new_policy = howard_select(defects, mode)
            residual = float(np.abs(defects[np.arange(n), new_policy]).max())
            logger.debug(f"step {s} iteration {it}: residual {residual:.3e}, "
                         f"{int(np.count_nonzero(new_policy != policy))} policy changes")
            unchanged = np.array_equal(new_policy, policy)
            policy = new_policy
            if unchanged or residual <= threshold:
                break
        else:
            raise HowardConvergenceError(
                f"Howard iteration did not converge at step {s} after {max_iter} iterations, "
                f"residual {residual:.3e}", step=s, residual=residual)
        values[s] = w
        controls[s] = points[policy]
        iterations[s] = it

    controls[0] = controls[1] if steps else points[0]
    logger.info(f"HJB solve mode={mode} L=[{control.lambda_min}, {control.lambda_max}]: "
                f"{steps} steps, {int(iterations.sum())} Howard iterations, max {int(iterations.max())}")
    return ValueSurface(times=times, values=values, controls=controls, mode=mode, mesh=op.mesh,
                        coordinate_map=op.coordinate_map, howard_iterations=iterations)
