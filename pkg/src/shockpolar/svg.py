"""Minimal deterministic SVG line plots: polylines, point markers and labels."""
from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

_COLORS = ("#1f4e79", "#b03a2e", "#1e8449", "#7d3c98")


def _num(x: float) -> str:
    return f"{x:.3f}"


@dataclass
class LinePlot:
    xlabel: str
    ylabel: str
    title: str = ""
    width: int = 640
    height: int = 480
    margin: int = 60
    lines: list = field(default_factory=list)
    points: list = field(default_factory=list)

    def add_line(self, xs, ys, name=""):
        self.lines.append((list(map(float, xs)), list(map(float, ys)), name))

    def add_point(self, x, y, label):
        self.points.append((float(x), float(y), label))

    def _bounds(self):
        xs = [x for line in self.lines for x in line[0]] + [p[0] for p in self.points]
        ys = [y for line in self.lines for y in line[1]] + [p[1] for p in self.points]
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
        padx = 0.05 * (x1 - x0 or 1.0)
        pady = 0.05 * (y1 - y0 or 1.0)
        return x0 - padx, x1 + padx, y0 - pady, y1 + pady

    def render(self) -> str:
        x0, x1, y0, y1 = self._bounds()
        m, w, h = self.margin, self.width, self.height

        def sx(x):
            return m + (x - x0) / (x1 - x0) * (w - 2 * m)

        def sy(y):
            return h - m - (y - y0) / (y1 - y0) * (h - 2 * m)

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
            f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
            f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" fill="none" stroke="#888888"/>',
        ]
        if x0 < 0.0 < x1:
            out.append(f'<line x1="{_num(sx(0.0))}" y1="{m}" x2="{_num(sx(0.0))}" y2="{h - m}" '
                       'stroke="#bbbbbb" stroke-dasharray="4 3"/>')
        for k, (xs, ys, name) in enumerate(self.lines):
            pts = " ".join(f"{_num(sx(x))},{_num(sy(y))}" for x, y in zip(xs, ys))
            color = _COLORS[k % len(_COLORS)]
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
            if name:
                out.append(f'<text x="{w - m + 4}" y="{m + 14 * (k + 1)}" font-size="11" fill="{color}">'
                           f"{escape(name)}</text>")
        for x, y, label in self.points:
            out.append(f'<circle cx="{_num(sx(x))}" cy="{_num(sy(y))}" r="3" fill="black"/>')
            out.append(f'<text x="{_num(sx(x) + 5)}" y="{_num(sy(y) - 5)}" font-size="12">{escape(label)}</text>')
        out.append(f'<text x="{w / 2:.1f}" y="{h - m / 3:.1f}" font-size="13" text-anchor="middle">'
                   f"{escape(self.xlabel)}</text>")
        out.append(f'<text x="{m / 3:.1f}" y="{h / 2:.1f}" font-size="13" text-anchor="middle" '
                   f'transform="rotate(-90 {m / 3:.1f} {h / 2:.1f})">{escape(self.ylabel)}</text>')
        if self.title:
            out.append(f'<text x="{w / 2:.1f}" y="{m / 2:.1f}" font-size="14" text-anchor="middle">'
                       f"{escape(self.title)}</text>")
        out.append("</svg>")
        return "\n".join(out) + "\n"
