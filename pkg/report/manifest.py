"""
Run manifest: configuration echo, tolerances, mesh statistics and timing
"""
import json
import logging
import os
import platform

import numpy as np
import scipy

from config.settings import CONFIG

logger = logging.getLogger('hjbpricer.report.manifest')

TOLERANCE_KEYS = ('HOWARD_TOLERANCE', 'HOWARD_MAX_ITERATIONS', 'LINEAR_SOLVE_TOLERANCE',
                  'STENCIL_TOLERANCE')


def build_manifest(cfg, mesh_stats, wall_time, files, summary=None):
    return {
        'config': cfg.to_dict(),
        'tolerances': {k: CONFIG[k] for k in TOLERANCE_KEYS},
        'mesh': mesh_stats,
        'wall_time_seconds': round(float(wall_time), 3),
        'files': [os.path.basename(f) for f in files],
        'summary': summary or {},
        'environment': {
            'python': platform.python_version(),
            'numpy': np.__version__,
            'scipy': scipy.__version__,
        },
    }


def write_manifest(manifest, directory):
    path = os.path.join(directory, 'manifest.json')
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=float)
        fh.write('\n')
    logger.info(f"Wrote manifest {path}")
    return path
