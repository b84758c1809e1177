"""
Flat-file outputs: CSV tables and SVG line charts.

CSV files are UTF-8 with LF line endings. The first lines are '#' comments
carrying the config hash, seed and build id; floats are written with 17
significant digits so that reading a file back gives the in-memory values
exactly. SVG charts are emitted as text with a fixed 960x540 viewBox.
"""
import csv
import logging
import math
import os
from xml.sax.saxutils import escape

import numpy as np

logger = logging.getLogger("Artifacts")

REGRET_HEADER = ["policy", "rho", "t", "regret_mean", "regret_stderr"]
PULLS_HEADER = ["policy", "rho", "arm", "pulls_mean", "pulls_var"]
SWEEP_HEADER = ["rho", "policy", "regret_mean", "regret_stderr"]
BOUNDS_HEADER = ["rho", "n", "upper_bound", "lower_bound"]

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]


def fmt(value):
    return format(float(value), ".17g")


def _metadata_lines(config_hash, seed=None, build_id=None):
    lines = [f"# config_hash={config_hash}"]
    if seed is not None:
        lines.append(f"# seed={seed}")
    if build_id is not None:
        lines.append(f"# build={build_id}")
    return lines


def _write_csv(path, header, rows, metadata):
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            for line in metadata:
                f.write(line + "\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        logger.error(f"❌ Failed to write {path}: {e}")
        raise
    logger.debug(f"Wrote {path}")


def emit_csv(result, path):
    """Regret curves on the result's emission grid, one row per (policy, round)."""
    rows = []
    idx = result.grid - 1
    for curve in result.curves:
        rho = fmt(curve.rho)
        for t, mean, stderr in zip(result.grid, curve.regret_mean[idx], curve.regret_stderr[idx]):
            rows.append([curve.policy, rho, int(t), fmt(mean), fmt(stderr)])
    _write_csv(path, REGRET_HEADER, rows, _metadata_lines(result.config_hash, result.seed, result.build_id))


def emit_pulls_csv(result, path):
    rows = []
    for curve in result.curves:
        rho = fmt(curve.rho)
        for arm, (mean, var) in enumerate(zip(curve.pulls_mean, curve.pulls_var)):
            rows.append([curve.policy, rho, arm, fmt(mean), fmt(var)])
    _write_csv(path, PULLS_HEADER, rows, _metadata_lines(result.config_hash, result.seed, result.build_id))


def emit_sweep_csv(rows, path, config_hash):
    body = [[fmt(r.rho), r.policy, fmt(r.regret_mean), fmt(r.regret_stderr)] for r in rows]
    _write_csv(path, SWEEP_HEADER, body, _metadata_lines(config_hash))


def emit_bounds_csv(curves, path, config_hash):
    body = []
    for bc in curves:
        for n, upper, lower in zip(bc.n_grid, bc.upper_bound, bc.lower_bound):
            body.append([fmt(bc.rho), int(n), fmt(upper), fmt(lower)])
    _write_csv(path, BOUNDS_HEADER, body, _metadata_lines(config_hash))


def read_regret_csv(path):
    """
    Parse a regret CSV back into (config_hash, curves) where curves maps
    (policy, rho) to a dict of t, regret_mean and regret_stderr arrays.
    """
    config_hash = None
    data = {}
    with open(path, "r", encoding="utf-8", newline="") as f:
        lines = []
        for line in f:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                if key == "config_hash":
                    config_hash = value
                continue
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader, None)
    if header != REGRET_HEADER:
        raise ValueError(f"{path} is not a regret CSV (header {header})")
    for policy, rho, t, mean, stderr in reader:
        entry = data.setdefault((policy, float(rho)), {"t": [], "regret_mean": [], "regret_stderr": []})
        entry["t"].append(int(t))
        entry["regret_mean"].append(float(mean))
        entry["regret_stderr"].append(float(stderr))
    curves = {key: {name: np.array(values) for name, values in entry.items()} for key, entry in data.items()}
    return config_hash, curves


class SvgChart:
    """Minimal line chart: polylines, axes with ticks, legend, optional log10 x-axis."""

    WIDTH = 960
    HEIGHT = 540
    LEFT, RIGHT, TOP, BOTTOM = 80, 220, 50, 60

    def __init__(self, title, x_label, y_label, log_x=False):
        self.title = title
        self.x_label = x_label
        self.y_label = y_label
        self.log_x = log_x
        self.series = []

    def add_series(self, label, xs, ys, dashed=False):
        self.series.append((label, np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), dashed))

    def _x(self, values):
        return np.log10(values) if self.log_x else values

    def _ranges(self):
        xs, ys = [], []
        for _, x, y, _ in self.series:
            ok = np.isfinite(x) & np.isfinite(y)
            if self.log_x:
                ok &= x > 0
            xs.append(self._x(x[ok]))
            ys.append(y[ok])
        xs = np.concatenate(xs) if xs else np.array([])
        ys = np.concatenate(ys) if ys else np.array([])
        if xs.size == 0:
            return (0.0, 1.0), (0.0, 1.0)
        x_range = (float(xs.min()), float(xs.max()))
        y_range = (float(min(ys.min(), 0.0)), float(ys.max()))
        if x_range[0] == x_range[1]:
            x_range = (x_range[0] - 0.5, x_range[1] + 0.5)
        if y_range[0] == y_range[1]:
            y_range = (y_range[0] - 0.5, y_range[1] + 0.5)
        return x_range, y_range

    def render(self, config_hash):
        plot_w = self.WIDTH - self.LEFT - self.RIGHT
        plot_h = self.HEIGHT - self.TOP - self.BOTTOM
        (x0, x1), (y0, y1) = self._ranges()

        def px(x):
            return self.LEFT + (x - x0) / (x1 - x0) * plot_w

        def py(y):
            return self.TOP + plot_h - (y - y0) / (y1 - y0) * plot_h

        svg = (
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.WIDTH}" height="{self.HEIGHT}" '
            f'viewBox="0 0 {self.WIDTH} {self.HEIGHT}" font-family="sans-serif" font-size="12">\n'
            f'<!-- config_hash={config_hash} -->\n'
            f'<metadata>config_hash={config_hash}</metadata>\n'
            f'<rect x="0" y="0" width="{self.WIDTH}" height="{self.HEIGHT}" fill="white"/>\n'
            f'<text x="{self.WIDTH / 2:.1f}" y="28" text-anchor="middle" font-size="16">{escape(self.title)}</text>\n'
            f'<rect x="{self.LEFT}" y="{self.TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>\n'
        )

        for i in range(6):
            yv = y0 + (y1 - y0) * i / 5
            y = py(yv)
            svg += f'<line x1="{self.LEFT - 4}" y1="{y:.2f}" x2="{self.LEFT}" y2="{y:.2f}" stroke="black"/>\n'
            svg += f'<text x="{self.LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{yv:.4g}</text>\n'
        if self.log_x:
            ticks = [(d, f"1e{d}") for d in range(math.ceil(x0), math.floor(x1) + 1)]
        else:
            ticks = [(x0 + (x1 - x0) * i / 5, None) for i in range(6)]
        for xv, label in ticks:
            x = px(xv)
            text = label if label is not None else f"{xv:.4g}"
            svg += f'<line x1="{x:.2f}" y1="{self.TOP + plot_h}" x2="{x:.2f}" y2="{self.TOP + plot_h + 4}" stroke="black"/>\n'
            svg += f'<text x="{x:.2f}" y="{self.TOP + plot_h + 18}" text-anchor="middle">{text}</text>\n'

        svg += (f'<text x="{self.LEFT + plot_w / 2:.1f}" y="{self.HEIGHT - 15}" text-anchor="middle">'
                f'{escape(self.x_label)}</text>\n')
        svg += (f'<text x="20" y="{self.TOP + plot_h / 2:.1f}" text-anchor="middle" '
                f'transform="rotate(-90 20 {self.TOP + plot_h / 2:.1f})">{escape(self.y_label)}</text>\n')

        for i, (label, xs, ys, dashed) in enumerate(self.series):
            color = PALETTE[i % len(PALETTE)]
            dash = ' stroke-dasharray="6 4"' if dashed else ""
            for segment in _finite_segments(xs, ys, self.log_x):
                points = " ".join(f"{px(self._x(x)):.2f},{py(y):.2f}" for x, y in segment)
                svg += f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{points}"/>\n'
            ly = self.TOP + 16 + 20 * i
            lx = self.LEFT + plot_w + 16
            svg += f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>\n'
            svg += f'<text x="{lx + 30}" y="{ly + 4}">{escape(label)}</text>\n'

        return svg + "</svg>\n"

    def write(self, path, config_hash):
        try:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(self.render(config_hash))
        except OSError as e:
            logger.error(f"❌ Failed to write {path}: {e}")
            raise


def _finite_segments(xs, ys, log_x):
    segment = []
    for x, y in zip(xs, ys):
        if math.isfinite(x) and math.isfinite(y) and (x > 0 or not log_x):
            segment.append((x, y))
        elif segment:
            yield segment
            segment = []
    if segment:
        yield segment


def emit_svg(result, path):
    chart = SvgChart(f"Regret vs t (rho={result.rho:g}, {result.replications} reps)", "t", "mean regret")
    for curve in result.curves:
        chart.add_series(curve.policy, result.grid, curve.regret_mean[result.grid - 1])
    chart.write(path, result.config_hash)


def emit_sweep_svg(rows, path, config_hash):
    chart = SvgChart("Final regret vs rho", "rho", "mean regret at n", log_x=True)
    for policy in dict.fromkeys(r.policy for r in rows):
        points = [(r.rho, r.regret_mean) for r in rows if r.policy == policy]
        chart.add_series(policy, [p[0] for p in points], [p[1] for p in points])
    chart.write(path, config_hash)


def emit_bounds_svg(curves, path, config_hash):
    chart = SvgChart("Regret bounds vs n", "n", "bound")
    for bc in curves:
        chart.add_series(f"upper rho={bc.rho:g}", bc.n_grid, bc.upper_bound)
        chart.add_series(f"lower rho={bc.rho:g}", bc.n_grid, bc.lower_bound, dashed=True)
    chart.write(path, config_hash)
