"""Scan reports: ``cells.csv``, marginal heatmaps and curves as CSV and SVG.

Everything except ``cells.csv`` is a pure function of the cell map, so a report
regenerated from a saved ``cells.csv`` is byte-identical to the original.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import DataError
from .scan import AXES, FAILED, OK, Axis, CellResult, ScanGrid, ScanResult, heatmap_axes, \
    marginal_curve, marginal_heatmap

CELLS_HEADER = ["kernel_size", "n_filters", "dense_size", "seed", "status",
                "val_mse_norm", "val_mse_phys", "wall_time_s"]

# viridis anchor colours
_PALETTE = [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)]


def _fmt(x: float) -> str:
    return repr(float(x))


def cells_csv(result: ScanResult, timings: bool = False) -> str:
    """One row per cell sorted by key.  ``wall_time_s`` stays empty unless
    ``timings`` is set, keeping the file reproducible byte-for-byte."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CELLS_HEADER)
    for c in result.ordered_cells():
        wall = _fmt(c.wall_time_s) if timings and c.wall_time_s is not None else ""
        w.writerow([c.kernel_size, c.n_filters, c.dense_size, c.seed, c.status,
                    _fmt(c.val_mse_norm), _fmt(c.val_mse_phys), wall])
    return buf.getvalue()


def parse_cells_csv(text: str) -> ScanResult:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CELLS_HEADER:
        raise DataError("cells.csv: unexpected header")
    cells = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(CELLS_HEADER):
            raise DataError(f"cells.csv line {lineno}: expected {len(CELLS_HEADER)} columns")
        try:
            k, f, d, s = (int(v) for v in row[:4])
            norm, phys = float(row[5]), float(row[6])
            wall = float(row[7]) if row[7] else None
        except ValueError:
            raise DataError(f"cells.csv line {lineno}: bad number") from None
        if row[4] not in (OK, FAILED):
            raise DataError(f"cells.csv line {lineno}: bad status {row[4]!r}")
        if (k, f, d, s) in cells:
            raise DataError(f"cells.csv line {lineno}: duplicate cell")
        cells[(k, f, d, s)] = CellResult(k, f, d, s, row[4], norm, phys, wall)
    if not cells:
        raise DataError("cells.csv has no cells")
    grid = ScanGrid(sorted({key[0] for key in cells}), sorted({key[1] for key in cells}),
                    sorted({key[2] for key in cells}), sorted({key[3] for key in cells}))
    if len(grid) != len(cells):
        raise DataError("cells.csv does not cover a full grid")
    return ScanResult(grid, cells)


def heatmap_name(collapse: Axis) -> str:
    rows, cols = heatmap_axes(collapse)
    return f"heatmap_{rows.value}_vs_{cols.value}"


def curve_name(keep: Axis) -> str:
    return f"curve_{keep.value}"


def heatmap_csv(result: ScanResult, collapse: Axis) -> str:
    rows, cols = heatmap_axes(collapse)
    m = marginal_heatmap(result, collapse)
    lines = [",".join([f"{rows.value}\\{cols.value}"] + [str(v) for v in result.grid.axis_values(cols)])]
    for r, row in zip(result.grid.axis_values(rows), m):
        lines.append(",".join([str(r)] + [_fmt(v) for v in row]))
    return "\n".join(lines) + "\n"


def curve_csv(result: ScanResult, keep: Axis) -> str:
    c = marginal_curve(result, keep)
    lines = [f"{keep.value},mean_val_mse_norm"]
    lines += [f"{v},{_fmt(y)}" for v, y in zip(result.grid.axis_values(keep), c)]
    return "\n".join(lines) + "\n"


def _colour(t: float) -> str:
    t = min(max(t, 0.0), 1.0) * (len(_PALETTE) - 1)
    i = min(int(t), len(_PALETTE) - 2)
    frac = t - i
    a, b = _PALETTE[i], _PALETTE[i + 1]
    r, g, bl = (round(x + (y - x) * frac) for x, y in zip(a, b))
    return f"#{r:02x}{g:02x}{bl:02x}"


def _num(x: float) -> str:
    return f"{x:.4g}"


def heatmap_svg(result: ScanResult, collapse: Axis, title: str | None = None) -> str:
    rows, cols = heatmap_axes(collapse)
    m = marginal_heatmap(result, collapse)
    rv, cv = result.grid.axis_values(rows), result.grid.axis_values(cols)
    cell, left, top = 56, 90, 50
    width = left + cell * len(cv) + 120
    height = top + cell * len(rv) + 70
    lo, hi = float(m.min()), float(m.max())
    span = hi - lo or 1.0
    title = title or f"mean validation MSE (normalised) over {collapse.value}"
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<text x="{left}" y="20" font-size="13">{escape(title)}</text>']
    for i, r in enumerate(rv):
        y = top + i * cell
        out.append(f'<text x="{left - 8}" y="{y + cell / 2 + 4}" text-anchor="end">{r}</text>')
        for j, _c in enumerate(cv):
            x = left + j * cell
            t = (m[i, j] - lo) / span
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{_colour(t)}"/>')
            ink = "#000" if t > 0.6 else "#fff"
            out.append(f'<text x="{x + cell / 2}" y="{y + cell / 2 + 4}" text-anchor="middle" '
                       f'fill="{ink}">{_num(m[i, j])}</text>')
    bottom = top + cell * len(rv)
    for j, c in enumerate(cv):
        out.append(f'<text x="{left + j * cell + cell / 2}" y="{bottom + 16}" '
                   f'text-anchor="middle">{c}</text>')
    out.append(f'<text x="{left + cell * len(cv) / 2}" y="{bottom + 36}" '
               f'text-anchor="middle">{cols.value}</text>')
    out.append(f'<text x="20" y="{top + cell * len(rv) / 2}" text-anchor="middle" '
               f'transform="rotate(-90 20 {top + cell * len(rv) / 2})">{rows.value}</text>')
    # legend
    lx = left + cell * len(cv) + 30
    steps = 20
    lh = cell * len(rv)
    for s in range(steps):
        t = 1 - s / (steps - 1)
        out.append(f'<rect x="{lx}" y="{top + s * lh / steps:.2f}" width="16" '
                   f'height="{lh / steps + 0.5:.2f}" fill="{_colour(t)}"/>')
    out.append(f'<text x="{lx + 22}" y="{top + 10}">{_num(hi)}</text>')
    out.append(f'<text x="{lx + 22}" y="{top + lh}">{_num(lo)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def curve_svg(result: ScanResult, keep: Axis, title: str | None = None) -> str:
    c = marginal_curve(result, keep)
    xs = result.grid.axis_values(keep)
    width, height, left, top, pw, ph = 420, 300, 70, 40, 320, 200
    lo, hi = float(c.min()), float(c.max())
    span = hi - lo or 1.0
    n = len(xs)

    def px(i):
        return left + (pw * i / (n - 1) if n > 1 else pw / 2)

    def py(v):
        return top + ph - ph * (v - lo) / span

    title = title or f"mean validation MSE (normalised) by {keep.value}"
    pts = " ".join(f"{px(i):.2f},{py(v):.2f}" for i, v in enumerate(c))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<text x="{left}" y="20" font-size="13">{escape(title)}</text>',
           f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="#000"/>',
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="#000"/>',
           f'<polyline points="{pts}" fill="none" stroke="#3b528b" stroke-width="2"/>']
    for i, (x, v) in enumerate(zip(xs, c)):
        out.append(f'<circle cx="{px(i):.2f}" cy="{py(v):.2f}" r="3" fill="#3b528b"/>')
        out.append(f'<text x="{px(i):.2f}" y="{top + ph + 16}" text-anchor="middle">{x}</text>')
    out.append(f'<text x="{left - 6}" y="{top + 4}" text-anchor="end">{_num(hi)}</text>')
    out.append(f'<text x="{left - 6}" y="{top + ph}" text-anchor="end">{_num(lo)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{top + ph + 36}" text-anchor="middle">{keep.value}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_report(result: ScanResult, out_dir, write_cells: bool = True,
                  timings: bool = False) -> list[Path]:
    """Write ``cells.csv`` plus three heatmaps and three curves (CSV and SVG)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, str] = {}
    if write_cells:
        files["cells.csv"] = cells_csv(result, timings)
    for axis in AXES:
        files[heatmap_name(axis) + ".csv"] = heatmap_csv(result, axis)
        files[heatmap_name(axis) + ".svg"] = heatmap_svg(result, axis)
        files[curve_name(axis) + ".csv"] = curve_csv(result, axis)
        files[curve_name(axis) + ".svg"] = curve_svg(result, axis)
    failed = [c for c in result.ordered_cells() if not c.ok]
    if failed and write_cells:
        files["failures.txt"] = "".join(
            f"k={c.kernel_size} F={c.n_filters} D={c.dense_size} seed={c.seed}: {c.reason}\n"
            for c in failed)
    written = []
    for name, text in files.items():
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written


def timings_csv(result: ScanResult) -> str:
    lines = ["kernel_size,n_filters,dense_size,seed,wall_time_s"]
    for c in result.ordered_cells():
        wall = "" if c.wall_time_s is None else _fmt(c.wall_time_s)
        lines.append(f"{c.kernel_size},{c.n_filters},{c.dense_size},{c.seed},{wall}")
    return "\n".join(lines) + "\n"


def read_cells(path) -> ScanResult:
    return parse_cells_csv(Path(path).read_text(encoding="utf-8"))

