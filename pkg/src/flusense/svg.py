"""Minimal static SVG charts (bars, lines, scatter) with deterministic output."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")
W, H = 640, 400
ML, MR, MT, MB = 60, 20, 40, 60


def _f(v: float) -> str:
    return f"{v:.2f}"


def _frame(title: str, ylo: float, yhi: float) -> list[str]:
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
        f'<line x1="{ML}" y1="{H - MB}" x2="{W - MR}" y2="{H - MB}" stroke="black"/>',
        f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{H - MB}" stroke="black"/>',
    ]
    for i in range(5):
        v = ylo + (yhi - ylo) * i / 4
        y = H - MB - (H - MT - MB) * i / 4
        out.append(f'<text x="{ML - 6}" y="{_f(y + 4)}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="10">{v:.3g}</text>')
    return out


def _legend(names: Sequence[str]) -> list[str]:
    out = []
    for i, name in enumerate(names):
        x = ML + 10 + 130 * i
        out.append(f'<rect x="{x}" y="{MT - 12}" width="10" height="10" fill="{PALETTE[i % len(PALETTE)]}"/>')
        out.append(f'<text x="{x + 14}" y="{MT - 3}" font-family="sans-serif" font-size="11">{escape(name)}</text>')
    return out


def _yrange(values: Sequence[float]) -> tuple[float, float]:
    lo, hi = min(values + [0.0]), max(values + [0.0])
    if hi == lo:
        hi = lo + 1.0
    return lo, hi


def _write(path: str | Path, parts: list[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts + ["</svg>"]) + "\n", encoding="utf-8")
    return path


def bar_chart(path, title: str, categories: Sequence[str], series: Mapping[str, Sequence[float | None]]) -> Path:
    """Grouped bars: one group per category, one bar per series. ``None`` bars are skipped."""
    vals = [v for s in series.values() for v in s if v is not None]
    lo, hi = _yrange(vals)
    parts = _frame(title, lo, hi) + _legend(list(series))
    plot_w, plot_h = W - ML - MR, H - MT - MB
    group_w = plot_w / max(len(categories), 1)
    bar_w = group_w * 0.8 / max(len(series), 1)

    def ypix(v):
        return H - MB - plot_h * (v - lo) / (hi - lo)

    for ci, cat in enumerate(categories):
        gx = ML + ci * group_w
        parts.append(f'<text x="{_f(gx + group_w / 2)}" y="{H - MB + 16}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{escape(cat)}</text>')
        for si, vals_s in enumerate(series.values()):
            v = vals_s[ci]
            if v is None:
                continue
            x = gx + group_w * 0.1 + si * bar_w
            y0, y1 = ypix(0.0), ypix(v)
            parts.append(f'<rect x="{_f(x)}" y="{_f(min(y0, y1))}" width="{_f(bar_w)}" height="{_f(abs(y1 - y0))}" '
                         f'fill="{PALETTE[si % len(PALETTE)]}"/>')
    return _write(path, parts)


def line_chart(path, title: str, labels: Sequence[str], series: Mapping[str, Sequence[float | None]]) -> Path:
    """Lines over shared x labels; ``None`` breaks a line."""
    vals = [v for s in series.values() for v in s if v is not None]
    lo, hi = _yrange(vals)
    parts = _frame(title, lo, hi) + _legend(list(series))
    plot_w, plot_h = W - ML - MR, H - MT - MB
    n = max(len(labels) - 1, 1)

    def xy(i, v):
        return ML + plot_w * i / n, H - MB - plot_h * (v - lo) / (hi - lo)

    step = max(1, len(labels) // 8)
    for i in range(0, len(labels), step):
        x, _ = xy(i, lo)
        parts.append(f'<text x="{_f(x)}" y="{H - MB + 16}" text-anchor="middle" font-family="sans-serif" '
                     f'font-size="10">{escape(labels[i])}</text>')
    for si, vals_s in enumerate(series.values()):
        segs, cur = [], []
        for i, v in enumerate(vals_s):
            if v is None:
                if cur:
                    segs.append(cur)
                cur = []
            else:
                cur.append(xy(i, v))
        if cur:
            segs.append(cur)
        for seg in segs:
            pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in seg)
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{PALETTE[si % len(PALETTE)]}" '
                         f'stroke-width="1.5"/>')
    return _write(path, parts)


def scatter(path, title: str, x: Sequence[float], y: Sequence[float], note: str = "") -> Path:
    xlo, xhi = _yrange(list(x))
    ylo, yhi = _yrange(list(y))
    parts = _frame(title, ylo, yhi)
    plot_w, plot_h = W - ML - MR, H - MT - MB
    for xi, yi in zip(x, y):
        px = ML + plot_w * (xi - xlo) / (xhi - xlo)
        py = H - MB - plot_h * (yi - ylo) / (yhi - ylo)
        parts.append(f'<circle cx="{_f(px)}" cy="{_f(py)}" r="3" fill="{PALETTE[0]}"/>')
    parts.append(f'<text x="{ML}" y="{H - 20}" font-family="sans-serif" font-size="11">'
                 f'x: {xlo:.3g} to {xhi:.3g}  {escape(note)}</text>')
    return _write(path, parts)
