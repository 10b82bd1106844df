"""Chart documents for one page of a spectral sequence.

Charts use the Adams convention: x is the stem t - s and y is the filtration
s. The SVG and ASCII renderers emit text by hand so that identical inputs
give identical bytes. A matplotlib PNG renderer is available for viewing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import fp_linalg as la
from .spectral_sequence import SpectralSequence

Point = tuple[int, int]  # (stem, s)


@dataclass(frozen=True)
class Arrow:
    source: Point
    target: Point
    page: int
    rank: int


@dataclass
class ChartDocument:
    title: str
    page: int
    dots: dict[Point, int] = field(default_factory=dict)
    arrows: list[Arrow] = field(default_factory=list)
    legend: list[str] = field(default_factory=list)

    def check(self) -> None:
        for a in self.arrows:
            if a.source not in self.dots or a.target not in self.dots:
                raise ValueError(f"arrow {a} has an endpoint without a dot")

    def bounds(self) -> tuple[int, int, int, int]:
        pts = list(self.dots) or [(0, 0)]
        xs = [x for x, _ in pts]
        ys = [y for _, y in pts]
        return min(xs), max(xs), min(ys), max(ys)


def chart_from_page(ss: SpectralSequence, r: int, title: str = "") -> ChartDocument:
    """Dots for every nonzero interior bidegree of E_r and arrows for the
    nonzero d_r between interior bidegrees."""
    dims = ss.interior_dimensions(r)
    doc = ChartDocument(title or f"E_{r}", r)
    for (s, t), d in sorted(dims.items()):
        if d:
            doc.dots[(t - s, s)] = d
    page = ss.page(r)
    if r < ss.last_page:
        ss.page(r + 1)  # makes sure d_r has been computed
    for (s, t), mat in sorted(page.differentials.items()):
        target = (s + r, t + r - 1)
        src_pt, tgt_pt = (t - s, s), (target[1] - target[0], target[0])
        if src_pt in doc.dots and tgt_pt in doc.dots:
            rank = la.rank(mat)
            if rank:
                doc.arrows.append(Arrow(src_pt, tgt_pt, r, rank))
    doc.legend = [
        f"page E_{r}",
        "x = stem t-s, y = filtration s",
        "number = F_p-dimension when > 1",
        f"arrows: d_{r} (rank shown when > 1)",
    ]
    doc.check()
    return doc


def render_ascii(doc: ChartDocument) -> str:
    """A text grid over the occupied stems (columns) and filtrations (rows)."""
    if not doc.dots:
        return f"{doc.title}: empty\n"
    stems = sorted({x for x, _ in doc.dots})
    x0, x1, y0, y1 = doc.bounds()
    width = max(len(str(s)) for s in stems) + 1
    lines = [doc.title]
    for y in range(y1, y0 - 1, -1):
        cells = []
        for x in stems:
            m = doc.dots.get((x, y), 0)
            cells.append(("." if m == 0 else "o" if m == 1 else str(m) if m < 10 else "*").rjust(width))
        lines.append(f"{y:>4} |" + "".join(cells))
    lines.append("     +" + "-" * (width * len(stems)))
    lines.append("      " + "".join(str(x).rjust(width) for x in stems))
    for a in doc.arrows:
        lines.append(f"d_{a.page}: {a.source} -> {a.target}" + (f" rank {a.rank}" if a.rank > 1 else ""))
    lines += [f"# {item}" for item in doc.legend]
    return "\n".join(lines) + "\n"


def render_svg(doc: ChartDocument, max_width: int = 1600) -> str:
    x0, x1, y0, y1 = doc.bounds()
    span = max(x1 - x0, 1)
    unit_x = max(1, max_width // span) if span < max_width else max_width / span
    unit_y = 20
    pad = 40
    width = int(round(span * unit_x)) + 2 * pad
    height = (y1 - y0) * unit_y + 2 * pad + 16 * len(doc.legend)

    def px(pt: Point) -> tuple[str, str]:
        x = pad + (pt[0] - x0) * unit_x
        y = pad + (y1 - pt[1]) * unit_y
        return f"{x:.2f}", f"{y:.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f"<title>{doc.title}</title>",
        '<g stroke="#999" stroke-width="0.5">',
        f'<line x1="{pad}" y1="{pad + (y1 - y0) * unit_y}" x2="{width - pad}" y2="{pad + (y1 - y0) * unit_y}"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{pad + (y1 - y0) * unit_y}"/>',
        "</g>",
        '<g stroke="#c03" stroke-width="1" fill="none">',
    ]
    for a in doc.arrows:
        (sx, sy), (tx, ty) = px(a.source), px(a.target)
        out.append(f'<line x1="{sx}" y1="{sy}" x2="{tx}" y2="{ty}"><title>d_{a.page} rank {a.rank}</title></line>')
    out.append("</g>")
    out.append('<g fill="#000" font-family="monospace" font-size="9">')
    for pt, m in sorted(doc.dots.items()):
        cx, cy = px(pt)
        out.append(f'<circle cx="{cx}" cy="{cy}" r="2.5"><title>stem {pt[0]}, s {pt[1]}, dim {m}</title></circle>')
        if m > 1:
            out.append(f'<text x="{cx}" y="{cy}" dx="3" dy="-3">{m}</text>')
    out.append("</g>")
    out.append('<g font-family="monospace" font-size="11">')
    base = pad + (y1 - y0) * unit_y + 24
    out.append(f'<text x="{pad}" y="{base - 10}">stems {x0}..{x1}, s {y0}..{y1}</text>')
    for i, item in enumerate(doc.legend):
        out.append(f'<text x="{pad}" y="{base + 16 * i + 6}">{item}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_png(doc: ChartDocument, path: str | Path) -> Path:
    """Matplotlib rendering of the same chart (not byte-stable)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(10, 5))
    if doc.dots:
        xs, ys = zip(*sorted(doc.dots))
        sizes = [12 * doc.dots[pt] for pt in sorted(doc.dots)]
        ax.scatter(xs, ys, s=sizes, color="black", zorder=3)
    for a in doc.arrows:
        ax.annotate("", xy=a.target, xytext=a.source, arrowprops={"arrowstyle": "->", "color": "#c03", "lw": 0.6})
    ax.set_xlabel("stem t - s")
    ax.set_ylabel("s")
    ax.set_title(doc.title)
    ax.grid(True, lw=0.3)
    path = Path(path)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
