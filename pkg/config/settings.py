import json
import logging
import os

from dotenv import load_dotenv

project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# Optional .env at the project root; PRICER_<KEY> variables override CONFIG
load_dotenv(os.path.join(project_root, '.env'))

# Ensure log directory exists
log_dir = os.path.join(project_root, 'logs')
os.makedirs(log_dir, exist_ok=True)

# Solver and experiment configuration
CONFIG = {
    # Logging
    'LOG_LEVEL': 'INFO',
    'LOG_FILE': os.path.join(log_dir, 'pricer.log'),

    # Discretization defaults
    'DEFAULT_STEPS': 100,          # implicit Euler steps over [0, T]
    'DEFAULT_MESH': (128, 96),     # cells in y and z before refinement
    'STENCIL_TOLERANCE': 1e-12,    # cone membership slack for upwind stencils

    # Solver tolerances
    'HOWARD_TOLERANCE': 1e-10,
    'HOWARD_MAX_ITERATIONS': 100,
    'LINEAR_SOLVE_TOLERANCE': 1e-11,

    # Output sampling
    'SAMPLE_GRID': (101, 61),      # points in S and v

    # Case-study experiment settings
    'COMPARE_TIME': 0.39,
    'SWEEP_CENTER': -1.25,
    'SWEEP_DIAMETERS': [0.0, 0.5, 1.0, 1.5, 2.0, 2.5],
    'QUERY_POINTS': [(2.11, 2.06), (53.12, 0.75), (51.76, 2.84), (51.43, 0.23)],

    # Concurrency
    'MAX_WORKERS': 2,

    # Oracles
    'MC_BATCH_SIZE': 50000,
    'CF_ABS_TOLERANCE': 1e-8,
    'CF_INTEGRATION_LIMIT': 500,
}


def _coerce(value, default):
    if isinstance(default, bool):
        return value.strip().lower() in ('1', 'true', 'yes', 'on')
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if isinstance(default, (list, tuple)):
        parsed = json.loads(value)
        return type(default)(tuple(p) if isinstance(p, list) else p for p in parsed)
    return value


def apply_environment(config, environ=None):
    """
    Override configuration entries from PRICER_<KEY> environment variables

    Parameters:
    - config: dictionary to update in place
    - environ: mapping to read from (defaults to os.environ)

    Returns:
    - list of overridden keys
    """
    environ = os.environ if environ is None else environ
    changed = []
    for key, default in config.items():
        raw = environ.get(f'PRICER_{key}')
        if raw is None:
            continue
        config[key] = _coerce(raw, default)
        changed.append(key)
    return changed


_overrides = apply_environment(CONFIG)

# Configure logging
logging.basicConfig(
    level=getattr(logging, str(CONFIG['LOG_LEVEL']).upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(CONFIG['LOG_FILE']),
        logging.StreamHandler()
    ]
)

if _overrides:
    logging.getLogger('hjbpricer.config').info(f"Environment overrides: {', '.join(_overrides)}")
