"""CSV tables, run manifests and SVG line charts."""

import csv
import logging
import os

import numpy as np
import yaml
from jinja2 import Environment, PackageLoader, StrictUndefined


log = logging.getLogger(__name__)

MANIFEST = 'manifest.yml'

# Dash patterns cycle solid, dashed, dotted.
_DASHES = ['', '6,4', '2,3', '8,3,2,3']
_COLOURS = ['#1f4e79', '#a23b2a', '#2e7d32', '#6a3d9a', '#b8860b']


def write_csv(path, schema, header, rows):
    """Writes ``rows`` under a ``# schema: <schema>`` line and ``header``."""
    with open(path, 'w', newline='') as fd:
        fd.write('# schema: {0}\n'.format(schema))
        writer = csv.writer(fd)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(x) for x in row])
    log.debug('wrote %s', path)
    return path


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def read_csv(path):
    """Returns ``(schema, header, rows)``; rows are lists of strings."""
    with open(path, newline='') as fd:
        first = fd.readline().strip()
        schema = first.split(':', 1)[1].strip() if first.startswith('#') else None
        reader = csv.reader(fd)
        header = next(reader)
        return schema, header, [row for row in reader]


def append_manifest(out_dir, entry):
    """Appends one run entry; the manifest is a YAML list that only grows."""
    path = os.path.join(out_dir, MANIFEST)
    with open(path, 'a') as fd:
        yaml.safe_dump([entry], fd, default_flow_style=False, sort_keys=True)
    return path


def load_manifest(out_dir):
    with open(os.path.join(out_dir, MANIFEST)) as fd:
        return yaml.safe_load(fd) or []


def jinja2_environment():
    return Environment(
        loader=PackageLoader('exlb', 'module_utils/templates'),
        undefined=StrictUndefined,
        trim_blocks=True,
        lstrip_blocks=True,
        autoescape=True,
    )


def render_linechart(path, title, x, series, xlabel='level', ylabel='',
                     width=640, height=400):
    """Renders ``series`` (name -> y array) against ``x`` as an SVG file."""
    x = np.asarray(x, dtype=float)
    margin = 56
    ys = [np.asarray(y, dtype=float) for y in series.values()]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys] or [np.zeros(1)])
    ymin = min(0.0, float(finite.min())) if finite.size else 0.0
    ymax = float(finite.max()) if finite.size else 1.0
    if ymax <= ymin:
        ymax = ymin + 1.0
    xmin, xmax = float(x.min()), float(x.max())
    if xmax <= xmin:
        xmax = xmin + 1.0

    def sx(v):
        return margin + (v - xmin) / (xmax - xmin) * (width - 2 * margin)

    def sy(v):
        return height - margin - (v - ymin) / (ymax - ymin) * (height - 2 * margin)

    lines = []
    for i, (name, y) in enumerate(series.items()):
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(y)
        points = ' '.join('{0:.2f},{1:.2f}'.format(sx(a), sy(b))
                          for a, b in zip(x[keep], y[keep]))
        lines.append({
            'name': name,
            'points': points,
            'dash': _DASHES[i % len(_DASHES)],
            'colour': _COLOURS[i % len(_COLOURS)],
        })

    ticks_x = [{'pos': sx(v), 'label': '{0:g}'.format(v)}
               for v in np.linspace(xmin, xmax, 5)]
    ticks_y = [{'pos': sy(v), 'label': '{0:.3g}'.format(v)}
               for v in np.linspace(ymin, ymax, 5)]

    template = jinja2_environment().get_template('linechart.svg.j2')
    text = template.render(
        title=title, width=width, height=height, margin=margin,
        lines=lines, ticks_x=ticks_x, ticks_y=ticks_y,
        xlabel=xlabel, ylabel=ylabel,
    )
    with open(path, 'w') as fd:
        fd.write(text)
    return path
