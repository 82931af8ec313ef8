"""
CSV output for experiment results
"""
import logging
import os

import pandas as pd

logger = logging.getLogger('hjbpricer.report.csv_output')

FLOAT_FORMAT = '%.10g'

SURFACE_COLUMNS = ['S', 'v', 't', 'value_sup', 'value_inf', 'delta_sup', 'delta_inf',
                   'control_sup', 'control_inf']
CONTROL_COLUMNS = ['S', 'v', 't', 'control_sup', 'control_inf']
COMPARE_COLUMNS = ['S', 'v', 't', 'value_sup', 'value_fixed', 'difference']
SWEEP_COLUMNS = ['diameter', 'lambda_min', 'lambda_max', 'S', 'v', 'value_sup', 'value_inf',
                 'delta_sup', 'delta_inf']
SPREAD_COLUMNS = ['diameter', 'lambda_min', 'lambda_max', 'max_spread', 'max_relative_spread']
DELTA_MAP_COLUMNS = ['S', 'v', 't', 'delta_sup', 'delta_inf', 'delta_difference']


def write_frame(frame, path, columns):
    """
    Write a frame with a fixed column order

    Parameters:
    - frame: pandas DataFrame or mapping of column arrays
    - path: destination file
    - columns: required column order

    Returns:
    - the path written
    """
    frame = pd.DataFrame(frame)
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ValueError(f"missing CSV columns: {', '.join(missing)}")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame[columns].to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def read_frame(path):
    return pd.read_csv(path)
