"""Writer: JSON reports, CSV exports and SVG figures rendered from Jinja2 templates."""
from __future__ import annotations

import csv
import json
import logging
import os
import re
from pathlib import Path

import numpy as np
from jinja2 import Environment, FileSystemLoader

from stringtable.tools.billiard import Diameter
from stringtable.tools.curves import CurveSample, SingularPoint
from stringtable.tools.table import StringTable
from stringtable.tools.twist import EnergyCurve

logger = logging.getLogger(__name__)

TEMPLATES_DIR = Path(__file__).parent.parent / "templates"
FIGURE_SIZE = 480
FIGURE_MARGIN = 24


def sanitize_filename(name: str) -> str:
    """Lower-case, dash-separated file stem.

    'Three directions (tau = 0.5)' → 'three-directions-tau-0-5'
    """
    stem = name.lower()
    stem = re.sub(r"[^a-z0-9\s-]", " ", stem)
    stem = re.sub(r"\s+", "-", stem.strip())
    stem = re.sub(r"-+", "-", stem)
    if len(stem) > 60:
        stem = stem[:60].rsplit("-", 1)[0]
    return stem.strip("-") or "run"


def _plain(value):
    """json default hook for numpy scalars and arrays."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dumps(data) -> str:
    """Deterministic JSON text: sorted keys, UTF-8, two-space indent."""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False, default=_plain)


def write_json(data, path: Path | str) -> Path:
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    path.write_text(dumps(data) + "\n", encoding="utf-8")
    logger.info("Report written to: %s", path)
    return path


def write_csv(rows, path: Path | str) -> Path:
    """Write a column dict (name -> array) or a list of row dicts with a header row."""
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    if isinstance(rows, dict):
        header = list(rows)
        columns = [np.asarray(rows[k]).ravel() for k in header]
        records = zip(*columns)
    else:
        header = list(rows[0]) if rows else []
        records = ([r[k] for k in header] for r in rows)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for record in records:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in record])
    logger.info("CSV written to: %s", path)
    return path


# ---------------------------------------------------------------------------
# SVG figures
# ---------------------------------------------------------------------------


class _Frame:
    """Affine map from data coordinates into the SVG viewport (y up)."""

    def __init__(self, xlim: tuple[float, float], ylim: tuple[float, float], equal: bool = False):
        inner = FIGURE_SIZE - 2 * FIGURE_MARGIN
        sx = inner / (xlim[1] - xlim[0])
        sy = inner / (ylim[1] - ylim[0])
        if equal:
            sx = sy = min(sx, sy)
        self.xlim, self.ylim, self.sx, self.sy = xlim, ylim, sx, sy

    def x(self, v):
        return FIGURE_MARGIN + (np.asarray(v) - self.xlim[0]) * self.sx

    def y(self, v):
        return FIGURE_SIZE - FIGURE_MARGIN - (np.asarray(v) - self.ylim[0]) * self.sy

    def points(self, xs, ys) -> str:
        return " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(self.x(xs), self.y(ys)))


def _environment() -> Environment:
    env = Environment(loader=FileSystemLoader(str(TEMPLATES_DIR)), autoescape=True)
    env.filters["fmt"] = lambda v, spec=".4g": format(float(v), spec)
    return env


def render_svg(template: str, path: Path | str, **context) -> Path:
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    rendered = _environment().get_template(template).render(size=FIGURE_SIZE, **context)
    path.write_text(rendered, encoding="utf-8")
    logger.info("Figure written to: %s", path)
    return path


def table_figure(
    st: StringTable, diameters: list[Diameter], path: Path | str, samples: int = 1024, title: str = ""
) -> Path:
    """Boundary of the table with its 2-periodic chords."""
    t = np.linspace(0.0, 2 * np.pi, samples + 1)
    z = np.asarray(st.boundary(t))
    body = st.body().boundary(t)
    r = 1.05 * float(np.max(np.abs(z)))
    frame = _Frame((-r, r), (-r, r), equal=True)
    chords = []
    for d in diameters:
        a, b = complex(np.asarray(st.boundary(d.t0))), complex(np.asarray(st.boundary(d.t0 + np.pi)))
        chords.append({
            "x1": frame.x(a.real), "y1": frame.y(a.imag),
            "x2": frame.x(b.real), "y2": frame.y(b.imag),
            "kind": d.kind,
        })
    return render_svg(
        "table.svg.j2", path,
        title=title,
        boundary=frame.points(z.real, z.imag),
        body=frame.points(np.real(body), np.imag(body)),
        chords=chords,
    )


def phase_figure(
    sample: CurveSample, points: list[SingularPoint], path: Path | str, title: str = ""
) -> Path:
    """Phase cylinder (t, theta) with both branches, the splice and the corners."""
    frame = _Frame((0.0, 2 * np.pi), (0.0, np.pi))
    corners = []
    splice = np.maximum(sample.plus, sample.minus)
    for p in points:
        i = int(np.argmin(np.abs(sample.t - np.mod(p.t0, 2 * np.pi))))
        corners.append({"x": frame.x(p.t0), "y": frame.y(splice[i])})
    return render_svg(
        "phase.svg.j2", path,
        title=title,
        plus=frame.points(sample.t, sample.plus),
        minus=frame.points(sample.t, sample.minus),
        spliced=frame.points(sample.t, splice),
        corners=corners,
        axis_y=frame.y(np.pi / 2),
    )


def twist_figure(
    curve: EnergyCurve, orbits: list[tuple[np.ndarray, np.ndarray]], path: Path | str, title: str = ""
) -> Path:
    """Reduced phase portrait in (X mod 1, P): orbits as dots, the level curve on top."""
    rows = curve.rows()
    top = 1.2 * max(float(np.max(rows["P"])), max((float(np.max(np.abs(P))) for _, P in orbits), default=0.0), 1e-3)
    frame = _Frame((0.0, 1.0), (-top, top))
    dots = []
    for X, P in orbits:
        X = np.mod(X, 1.0)
        dots.extend({"x": a, "y": b} for a, b in zip(frame.x(X), frame.y(P)))
    return render_svg(
        "twist.svg.j2", path,
        title=title,
        upper=frame.points(rows["X"], rows["P"]),
        lower=frame.points(rows["X"], -rows["P"]),
        dots=dots,
        maxima=[frame.x(x) for x in curve.potential.maxima],
        axis_y=frame.y(0.0),
    )
