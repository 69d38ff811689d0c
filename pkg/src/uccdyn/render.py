"""Deterministic SVG pictures of a tower prefix, its declared limits and marked points."""

from __future__ import annotations

from fractions import Fraction

from .tower import LevelTree, Model, ModelError, TowerPoint, limit_planar

SIZE = 600
MARGIN = 30


def _fmt(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _tree_layout(lt: LevelTree) -> dict:
    """Layered layout of the level tree: depth down the page, leaves spread evenly."""
    tree = lt.tree
    root = tree.vertex_of(lt.to_tree(TowerPoint(1, Fraction(0))))
    order, parent, depth = [root], {root: None}, {root: 0}
    for v in order:
        for e in sorted(tree.incident[v]):
            a, b, _ = tree.edges[e]
            w = b if a == v else a
            if w not in parent:
                parent[w], depth[w] = v, depth[v] + 1
                order.append(w)
    children = {v: [] for v in order}
    for v in order[1:]:
        children[parent[v]].append(v)
    x, counter = {}, [0]

    def place(v):
        if not children[v]:
            x[v] = counter[0]
            counter[0] += 1
        else:
            for c in children[v]:
                place(c)
            x[v] = (x[children[v][0]] + x[children[v][-1]]) / 2

    place(root)
    return {v: (Fraction(x[v]).limit_denominator(64), Fraction(-depth[v])) for v in order}


def render_svg(model: Model, n: int, marks=(), title: str = "") -> str:
    """SVG of T_n.  ``marks`` holds (label, TowerPoint or planar pair) entries."""
    tw = model.tower
    lt = tw.level(n)
    segs = []  # (arc index, p, q)
    if tw.has_planar:
        for i in range(1, n + 1):
            p, q = tw.spec(i).planar
            segs.append((i, p, q))
        locate = tw.planar
    else:
        pos = _tree_layout(lt)
        tree = lt.tree
        for e, (a, b, _) in enumerate(tree.edges):
            segs.append((lt.edge_info[e][0], pos[a], pos[b]))

        def locate(p):
            q = lt.to_tree(p)
            a, b, _ = tree.edges[q.edge]
            return tuple(pa + q.t * (pb - pa) for pa, pb in zip(pos[a], pos[b]))

    limits = []
    if tw.has_planar:
        for e in model.ends:
            try:
                limits.append((e.name, limit_planar(tw, model.limit(e.name))))
            except ModelError:
                continue
    points = []
    for label, p in marks:
        points.append((label, locate(p) if isinstance(p, TowerPoint) else p))
    coords = [c for _, p, q in segs for c in (p, q)] + [c for _, (p, q) in limits for c in (p, q)] + [p for _, p in points]
    xs, ys = [c[0] for c in coords], [c[1] for c in coords]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    scale = Fraction(SIZE - 2 * MARGIN) / max(x1 - x0, y1 - y0, Fraction(1, 1000))

    def xy(c):
        return _fmt(float(MARGIN + (c[0] - x0) * scale)), _fmt(float(SIZE - MARGIN - (c[1] - y0) * scale))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f"<title>{_esc(title or 'tower')}</title>",
        '<rect width="100%" height="100%" fill="white"/>',
        '<g stroke="black" stroke-linecap="round">',
    ]
    for i, p, q in segs:
        (ax, ay), (bx, by) = xy(p), xy(q)
        w = _fmt(max(0.4, 2.5 * 0.9 ** (i - 1)))
        out.append(f'<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" stroke-width="{w}"/>')
    out.append("</g>")
    if limits:
        out.append('<g stroke="crimson" stroke-width="2" stroke-dasharray="4 3" fill="crimson">')
        for name, (p, q) in limits:
            (ax, ay), (bx, by) = xy(p), xy(q)
            if p == q:
                out.append(f'<circle cx="{ax}" cy="{ay}" r="3"><title>{_esc(name)}</title></circle>')
            else:
                out.append(f'<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}"><title>{_esc(name)}</title></line>')
        out.append("</g>")
    if points:
        out.append('<g fill="royalblue" font-family="monospace" font-size="11">')
        for label, c in points:
            cx, cy = xy(c)
            out.append(f'<circle cx="{cx}" cy="{cy}" r="4"/>')
            out.append(f'<text x="{cx}" y="{cy}" dx="6" dy="-6">{_esc(label)}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
