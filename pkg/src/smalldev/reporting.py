"""Result emission: CSV tables, hashed JSON payloads, self-contained SVG.

Plots are hand-rolled SVG (no plotting dependency) with the data table
embedded in a comment block, so outputs stay diffable.
"""

import csv
import hashlib
import json
import math
from pathlib import Path


def write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)
    return path


def payload_digest(payload):
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_result_json(path, payload, wall_time_ms=None):
    """Deterministic payload + digest; timing kept outside the hash."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"payload": payload, "payload_sha256": payload_digest(payload)}
    if wall_time_ms is not None:
        doc["wall_time_ms"] = wall_time_ms
    with open(path, "w") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def _ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10.0 ** math.floor(math.log10(span / count))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= count:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-12 * span:
        out.append(round(t, 12))
        t += step
    return out


def svg_plot(path, series, title="", x_label="", y_label="", log_x=False):
    """Line/point plot with error bars.

    series: list of dicts {label, x: list, y: list, err: optional list,
    line: bool}. Writes a standalone SVG with the numeric data embedded in
    a leading comment.
    """
    width, height = 640, 420
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb

    def tx(values):
        return [math.log10(v) for v in values] if log_x else list(values)

    xs = [v for s in series for v in tx(s["x"])]
    ys, errs = [], []
    for s in series:
        err = s.get("err", [0.0] * len(s["y"]))
        ys.extend(s["y"])
        errs.extend(err)
    y_lo = min(y - e for y, e in zip(ys, errs))
    y_hi = max(y + e for y, e in zip(ys, errs))
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_hi += 1.0
    pad = 0.05 * (y_hi - y_lo or 1.0)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return mt + (y_hi - y) / (y_hi - y_lo) * ph

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")
    parts = ["<?xml version=\"1.0\" encoding=\"UTF-8\"?>"]
    table = ["data:"]
    for s in series:
        table.append(f"  {s['label']}: x={list(s['x'])} y={list(s['y'])}"
                     + (f" err={list(s['err'])}" if "err" in s else ""))
    parts.append("<!--\n" + "\n".join(table) + "\n-->")
    parts.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
                 f'height="{height}" viewBox="0 0 {width} {height}">')
    parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    parts.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" '
                 'fill="none" stroke="#333"/>')
    parts.append(f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="15">{title}</text>')
    parts.append(f'<text x="{ml + pw / 2:.0f}" y="{height - 12}" '
                 'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="12">{x_label}</text>')
    parts.append(f'<text x="16" y="{mt + ph / 2:.0f}" text-anchor="middle" '
                 'font-family="sans-serif" font-size="12" transform='
                 f'"rotate(-90 16 {mt + ph / 2:.0f})">{y_label}</text>')
    for t in _ticks(x_lo, x_hi):
        x = px(t)
        label = f"1e{t:g}" if log_x else f"{t:g}"
        parts.append(f'<line x1="{x:.1f}" y1="{mt + ph}" x2="{x:.1f}" '
                     f'y2="{mt + ph + 4}" stroke="#333"/>')
        parts.append(f'<text x="{x:.1f}" y="{mt + ph + 18}" '
                     'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{label}</text>')
    for t in _ticks(y_lo, y_hi):
        y = py(t)
        parts.append(f'<line x1="{ml - 4}" y1="{y:.1f}" x2="{ml}" '
                     f'y2="{y:.1f}" stroke="#333"/>')
        parts.append(f'<text x="{ml - 8}" y="{y + 4:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{t:g}</text>')
    for i, s in enumerate(series):
        color = colors[i % len(colors)]
        X = [px(v) for v in tx(s["x"])]
        Y = [py(v) for v in s["y"]]
        if s.get("line", True) and len(X) > 1:
            pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in zip(X, Y))
            parts.append(f'<polyline points="{pts}" fill="none" '
                         f'stroke="{color}" stroke-width="1.5"/>')
        for j, (x, y) in enumerate(zip(X, Y)):
            parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" '
                         f'fill="{color}"/>')
            if "err" in s and s["err"][j]:
                y1 = py(s["y"][j] - s["err"][j])
                y2 = py(s["y"][j] + s["err"][j])
                parts.append(f'<line x1="{x:.1f}" y1="{y1:.1f}" x2="{x:.1f}" '
                             f'y2="{y2:.1f}" stroke="{color}"/>')
        ly = mt + 16 + 16 * i
        parts.append(f'<line x1="{ml + pw - 120}" y1="{ly - 4}" '
                     f'x2="{ml + pw - 100}" y2="{ly - 4}" stroke="{color}" '
                     'stroke-width="2"/>')
        parts.append(f'<text x="{ml + pw - 94}" y="{ly}" '
                     'font-family="sans-serif" font-size="11">'
                     f'{s["label"]}</text>')
    parts.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts))
    return path
