"""Minimal SVG overlay of ROC curves."""

from pathlib import Path
from xml.sax.saxutils import escape

SIZE = 400
MARGIN = 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def to_plot(alpha, beta):
    """Unit-square coordinates to SVG pixels (y grows downward)."""
    return MARGIN + alpha * SIZE, MARGIN + (1.0 - beta) * SIZE


def render_svg(curves, labels):
    if not curves:
        raise ValueError("nothing to plot")
    if len(labels) != len(curves):
        raise ValueError("one label per curve")
    W = SIZE + 2 * MARGIN + 160
    H = SIZE + 2 * MARGIN
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f'<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="#000"/>']
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        px, _ = to_plot(t, 0.0)
        _, py = to_plot(0.0, t)
        out.append(f'<text x="{px:.1f}" y="{MARGIN + SIZE + 16}" text-anchor="middle">{t:g}</text>')
        out.append(f'<text x="{MARGIN - 6}" y="{py + 4:.1f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text class="xlabel" x="{MARGIN + SIZE / 2}" y="{H - 8}" text-anchor="middle">'
               'false positive rate</text>')
    out.append(f'<text class="ylabel" x="14" y="{MARGIN + SIZE / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {MARGIN + SIZE / 2})">true positive rate</text>')
    for i, (curve, label) in enumerate(zip(curves, labels)):
        color = COLORS[i % len(COLORS)]
        pts = " ".join("%.3f,%.3f" % to_plot(a, b) for a, b in zip(curve.alpha, curve.beta))
        out.append(f'<polyline class="roc" points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN + 10 + 18 * i
        lx = MARGIN + SIZE + 15
        out.append(f'<g class="legend"><line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>'
                   f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(curves, labels, path):
    Path(path).write_text(render_svg(curves, labels), encoding="utf-8")
    return path
