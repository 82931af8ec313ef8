"""
Static result output: CSV tables, SVG heatmaps and run manifests
"""

__version__ = '1.0.0'

from .csv_output import write_frame, read_frame
from .svg_heatmap import render_heatmap
from .manifest import build_manifest, write_manifest

__all__ = ['write_frame', 'read_frame', 'render_heatmap', 'build_manifest', 'write_manifest']
