"""File formats: Field2D rasters, CSV tables, PGM images and simple SVG plots.

A raster is stored as three files sharing a stem:

* ``stem.csv`` -- ``ny`` rows of ``nx`` comma-separated densities, no header;
* ``stem.json`` -- ``{"nx": ..., "ny": ..., "element_size": ...}``;
* ``stem.pgm`` -- 8-bit binary greyscale preview (white = solid).

Row ``iy = 0`` of the array is the first CSV row and the top PGM row.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .fields import Field2D, InvalidInputError


class RasterIOError(OSError):
    """A raster file is missing, empty or malformed."""


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_field(stem, field: Field2D) -> list[Path]:
    """Write the CSV/JSON/PGM triple for ``field``; returns the written paths."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv_path = stem.with_suffix(".csv")
    with open(csv_path, "w", newline="") as fh:
        for row in field.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    meta_path = stem.with_suffix(".json")
    meta = {"nx": field.nx, "ny": field.ny, "element_size": field.element_size}
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    pgm_path = stem.with_suffix(".pgm")
    write_pgm(pgm_path, field.values)
    return [csv_path, meta_path, pgm_path]


def read_field(path) -> Field2D:
    """Read a raster from ``.csv`` (with optional sidecar ``.json``) or ``.pgm``."""
    path = Path(path)
    if not path.exists():
        raise RasterIOError(f"raster not found: {path}")
    if path.stat().st_size == 0:
        raise RasterIOError(f"raster file is empty: {path}")
    if path.suffix.lower() == ".pgm":
        return Field2D(read_pgm(path) / 255.0)
    try:
        values = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise RasterIOError(f"malformed raster {path}: {exc}") from exc
    element_size = 1.0
    meta_path = path.with_suffix(".json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        if values.shape != (meta["ny"], meta["nx"]):
            raise RasterIOError(
                f"{path}: shape {values.shape} disagrees with sidecar ({meta['ny']}, {meta['nx']})"
            )
        element_size = float(meta.get("element_size", 1.0))
    try:
        return Field2D(values, element_size)
    except InvalidInputError as exc:
        raise RasterIOError(f"{path}: {exc}") from exc


def write_pgm(path, values, marks=()) -> Path:
    """8-bit binary PGM of densities in [0, 1]; ``marks`` are ``(iy, ix)`` drawn mid-grey."""
    img = np.clip(np.round(np.asarray(values, float) * 255), 0, 255).astype(np.uint8)
    for iy, ix in marks:
        img[iy, ix] = 128
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    # header: magic, width, height, maxval (comments allowed)
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise RasterIOError(f"truncated PGM header in {path}")
        tokens.append(data[start:pos].decode("ascii"))
    if tokens[0] != "P5":
        raise RasterIOError(f"only binary PGM (P5) is supported, got {tokens[0]}")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    pixels = np.frombuffer(data[pos + 1:pos + 1 + w * h], dtype=np.uint8)
    if pixels.size != w * h:
        raise RasterIOError(f"PGM {path} is truncated")
    return pixels.reshape(h, w).astype(float) * (255.0 / maxval)


def write_csv(path, rows, columns) -> Path:
    """Write dict rows with a fixed column order and repr-exact floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    return path


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
            "#7f7f7f", "#bcbd22", "#17becf")


def write_svg_plot(path, series, title="", xlabel="", ylabel="", width=640, height=420):
    """Line plot of ``series = [(label, xs, ys, dashed), ...]`` as a standalone SVG."""
    path = Path(path)
    ml, mr, mt, mb = 60, 150, 30, 45
    pts = [(x, y) for _, xs, ys, *_ in series for x, y in zip(xs, ys) if np.isfinite(y)]
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(0.0, min(p[1] for p in pts)), max(p[1] for p in pts)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = width - ml - mr, height - mt - mb

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{ml + pw / 2:.1f}" y="18" text-anchor="middle" font-size="14">'
        f'{escape(title)}</text>',
        f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="12">'
        f'{escape(xlabel)}</text>',
        f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for k in range(6):
        xv = x0 + k * (x1 - x0) / 5
        yv = y0 + k * (y1 - y0) / 5
        out.append(f'<text x="{sx(xv):.1f}" y="{mt + ph + 15}" text-anchor="middle" '
                   f'font-size="10">{xv:.3g}</text>')
        out.append(f'<text x="{ml - 5}" y="{sy(yv) + 3:.1f}" text-anchor="end" '
                   f'font-size="10">{yv:.3g}</text>')
    for k, (label, xs, ys, *rest) in enumerate(series):
        dashed = bool(rest and rest[0])
        color = _PALETTE[k % len(_PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys) if np.isfinite(y))
        dash = ' stroke-dasharray="5,3"' if dashed else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} '
                   f'points="{coords}"/>')
        ly = mt + 12 + 16 * k
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 30}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="1.5"{dash}/>')
        out.append(f'<text x="{ml + pw + 35}" y="{ly + 4}" font-size="10">{escape(label)}</text>')
    out.append("</svg>")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path
