"""
Native SVG heatmaps rendered from CSV output

The figure is built from the CSV file alone: S on the horizontal axis,
v on the vertical axis, one rectangle per sample, a linear colour map and
a legend with two decimals.
"""
import logging
import os

import numpy as np

from .csv_output import read_frame

logger = logging.getLogger('hjbpricer.report.svg_heatmap')

# blue -> white -> red
_STOPS = np.array([
    [0.0, 49, 54, 149],
    [0.5, 247, 247, 247],
    [1.0, 165, 0, 38],
])

WIDTH = 640
HEIGHT = 420
MARGIN = 50
LEGEND_WIDTH = 70


def colour(fraction):
    """Hex colour for a fraction in [0, 1]"""
    f = float(np.clip(fraction, 0.0, 1.0))
    rgb = [int(round(np.interp(f, _STOPS[:, 0], _STOPS[:, k]))) for k in (1, 2, 3)]
    return '#{:02x}{:02x}{:02x}'.format(*rgb)


def render_heatmap(csv_path, column, svg_path, title=None, t=None):
    """
    Render one CSV column as an (S, v) heatmap

    Parameters:
    - csv_path: CSV written by the experiment runner
    - column: column to colour by
    - svg_path: destination file
    - title: optional figure title
    - t: optional time filter for files with several time slices

    Returns:
    - the path written
    """
    frame = read_frame(csv_path)
    if t is not None and 't' in frame.columns:
        frame = frame[np.isclose(frame['t'], t)]
    if frame.empty:
        raise ValueError(f"no rows to plot in {csv_path}")

    S = np.sort(frame['S'].unique())
    v = np.sort(frame['v'].unique())
    grid = frame.pivot_table(index='v', columns='S', values=column, aggfunc='first')
    grid = grid.reindex(index=v, columns=S).to_numpy()
    lo = float(np.nanmin(grid))
    hi = float(np.nanmax(grid))
    span = hi - lo if hi > lo else 1.0

    plot_w = WIDTH - 2 * MARGIN - LEGEND_WIDTH
    plot_h = HEIGHT - 2 * MARGIN
    cell_w = plot_w / len(S)
    cell_h = plot_h / len(v)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="13">'
        f'{title or column}</text>',
    ]
    for row in range(len(v)):
        # v increases upwards
        y0 = MARGIN + plot_h - (row + 1) * cell_h
        for col in range(len(S)):
            value = grid[row, col]
            if np.isnan(value):
                continue
            x0 = MARGIN + col * cell_w
            parts.append(
                f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{cell_w + 0.05:.2f}" height="{cell_h + 0.05:.2f}" '
                f'fill="{colour((value - lo) / span)}"/>'
            )

    parts.append(f'<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" '
                 f'fill="none" stroke="black"/>')
    for k in range(5):
        f = k / 4
        sx = MARGIN + f * plot_w
        sy = MARGIN + plot_h - f * plot_h
        s_val = S[0] + f * (S[-1] - S[0])
        v_val = v[0] + f * (v[-1] - v[0])
        parts.append(f'<text x="{sx:.1f}" y="{MARGIN + plot_h + 15}" text-anchor="middle">{s_val:.2f}</text>')
        parts.append(f'<text x="{MARGIN - 5}" y="{sy + 4:.1f}" text-anchor="end">{v_val:.2f}</text>')
    parts.append(f'<text x="{MARGIN + plot_w / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">S</text>')
    parts.append(f'<text x="15" y="{MARGIN + plot_h / 2:.1f}" text-anchor="middle">v</text>')

    lx = WIDTH - MARGIN - LEGEND_WIDTH + 20
    steps = 50
    for k in range(steps):
        f = k / (steps - 1)
        ly = MARGIN + plot_h - (k + 1) * plot_h / steps
        parts.append(f'<rect x="{lx}" y="{ly:.2f}" width="15" height="{plot_h / steps + 0.05:.2f}" '
                     f'fill="{colour(f)}"/>')
    for k in range(5):
        f = k / 4
        ly = MARGIN + plot_h - f * plot_h
        parts.append(f'<text x="{lx + 20}" y="{ly + 4:.1f}">{lo + f * (hi - lo):.2f}</text>')
    parts.append('</svg>')

    os.makedirs(os.path.dirname(os.path.abspath(svg_path)), exist_ok=True)
    with open(svg_path, 'w', encoding='utf-8', newline='\n') as fh:
        fh.write('\n'.join(parts))
        fh.write('\n')
    logger.info(f"Wrote heatmap {svg_path}")
    return svg_path
