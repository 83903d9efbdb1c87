"""Self-contained SVG log-log convergence plots (no plotting dependency)."""

import math

__all__ = ["convergence_svg"]

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _ticks(lo, hi):
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    return [10.0 ** e for e in range(lo_e, hi_e + 1)]


class _LogMap:
    def __init__(self, lo, hi, px0, px1):
        self.l0 = math.log10(lo)
        self.l1 = math.log10(hi)
        self.px0, self.px1 = px0, px1

    def __call__(self, v):
        t = (math.log10(v) - self.l0) / (self.l1 - self.l0)
        return self.px0 + t * (self.px1 - self.px0)


def convergence_svg(series, title="", xlabel="h", ylabel="relative error",
                    guides=()):
    """Render log-log series to an SVG string.

    ``series`` is a list of (label, h_values, errors); ``guides`` is a list
    of slopes to draw as dashed reference lines anchored at the last point of
    the first series.
    """
    w, h = 640, 480
    m_l, m_r, m_t, m_b = 70, 20, 40, 55
    xs = [x for _, hv, _ in series for x in hv]
    ys = [y for _, _, ev in series for y in ev if y > 0]
    if not xs or not ys:
        raise ValueError("nothing to plot")
    fx = _LogMap(min(xs) / 1.3, max(xs) * 1.3, m_l, w - m_r)
    fy = _LogMap(min(ys) / 3.0, max(ys) * 3.0, h - m_b, m_t)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w / 2}" y="20" text-anchor="middle" '
        f'font-size="14">{title}</text>',
    ]
    for t in _ticks(min(xs), max(xs)):
        if not (min(xs) / 1.3 <= t <= max(xs) * 1.3):
            continue
        px = fx(t)
        parts.append(f'<line x1="{px:.1f}" y1="{m_t}" x2="{px:.1f}" '
                     f'y2="{h - m_b}" stroke="#ddd"/>')
        parts.append(f'<text x="{px:.1f}" y="{h - m_b + 16}" '
                     f'text-anchor="middle">1e{int(math.log10(t))}</text>')
    for t in _ticks(min(ys), max(ys)):
        if not (min(ys) / 3 <= t <= max(ys) * 3):
            continue
        py = fy(t)
        parts.append(f'<line x1="{m_l}" y1="{py:.1f}" x2="{w - m_r}" '
                     f'y2="{py:.1f}" stroke="#ddd"/>')
        parts.append(f'<text x="{m_l - 6}" y="{py + 4:.1f}" '
                     f'text-anchor="end">1e{int(math.log10(t))}</text>')
    parts.append(f'<rect x="{m_l}" y="{m_t}" width="{w - m_l - m_r}" '
                 f'height="{h - m_t - m_b}" fill="none" stroke="#333"/>')
    parts.append(f'<text x="{w / 2}" y="{h - 12}" '
                 f'text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="16" y="{h / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {h / 2})">{ylabel}</text>')

    for k, (label, hv, ev) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{fx(x):.1f},{fy(max(y, 1e-300)):.1f}"
                       for x, y in zip(hv, ev) if y > 0)
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.6"/>')
        for x, y in zip(hv, ev):
            if y > 0:
                parts.append(f'<circle cx="{fx(x):.1f}" cy="{fy(y):.1f}" '
                             f'r="3.2" fill="{color}"/>')
        parts.append(f'<text x="{w - m_r - 6}" y="{m_t + 16 + 15 * k}" '
                     f'text-anchor="end" fill="{color}">{label}</text>')

    if series:
        _, hv0, ev0 = series[0]
        for slope in guides:
            x1, y1 = hv0[-1], ev0[-1]
            x0 = hv0[0]
            y0 = y1 * (x0 / x1) ** slope
            parts.append(
                f'<line x1="{fx(x0):.1f}" y1="{fy(y0):.1f}" '
                f'x2="{fx(x1):.1f}" y2="{fy(y1):.1f}" stroke="#888" '
                f'stroke-dasharray="6 4"/>')
            parts.append(f'<text x="{fx(x0) + 6:.1f}" y="{fy(y0) - 4:.1f}" '
                         f'fill="#888">slope {slope:g}</text>')
    parts.append("</svg>")
    return "\n".join(parts)
