import csv
import json

import numpy as np

from stringtable.tools.billiard import find_diameters
from stringtable.tools.curves import sample_curves, singular_points
from stringtable.tools.twist import PotentialSpec, build_potential, curve_from_energy
from stringtable.tools.write import (
    dumps,
    phase_figure,
    sanitize_filename,
    table_figure,
    twist_figure,
    write_csv,
    write_json,
)


def test_sanitize_filename():
    assert sanitize_filename("Three directions (tau = 0.5)") == "three-directions-tau-0-5"
    assert sanitize_filename("***") == "run"
    assert len(sanitize_filename("word " * 40)) <= 60


def test_dumps_is_deterministic_and_handles_numpy():
    data = {"b": np.float64(1.5), "a": np.arange(3), "c": complex(1, -2)}
    text = dumps(data)
    assert text == dumps(dict(reversed(list(data.items()))))
    assert json.loads(text) == {"a": [0, 1, 2], "b": 1.5, "c": [1.0, -2.0]}


def test_write_json_creates_directories(tmp_path):
    path = write_json({"x": 1}, tmp_path / "deep" / "report.json")
    assert json.loads(path.read_text(encoding="utf-8")) == {"x": 1}


def test_write_csv_columns_and_rows(tmp_path):
    path = write_csv({"t": np.array([0.0, 0.1]), "y": np.array([1.0, 2.0])}, tmp_path / "cols.csv")
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows == [["t", "y"], ["0.0", "1.0"], ["0.1", "2.0"]]

    path = write_csv([{"iteration": 0, "t": 0.25}, {"iteration": 1, "t": 1 / 3}], tmp_path / "rows.csv")
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    assert rows[1]["iteration"] == "1"
    assert float(rows[1]["t"]) == 1 / 3


def test_figures(tmp_path, sin3):
    scan = find_diameters(sin3)
    path = table_figure(sin3, scan.diameters, tmp_path / "table.svg", samples=128, title="sin <3t>")
    text = path.read_text(encoding="utf-8")
    assert text.startswith("<svg")
    assert text.count("<line") == 3
    assert "sin &lt;3t&gt;" in text

    sample = sample_curves(sin3, samples=256, scan=scan)
    points = singular_points(sin3, scan)
    text = phase_figure(sample, points, tmp_path / "phase.svg").read_text(encoding="utf-8")
    assert text.count("<circle") == len(points)

    pot = build_potential(PotentialSpec(nodes=[0.0, 0.5]))
    curve = curve_from_energy(pot, 1)
    orbits = [(np.linspace(0.0, 2.0, 5), np.full(5, 0.3))]
    text = twist_figure(curve, orbits, tmp_path / "twist.svg").read_text(encoding="utf-8")
    assert "<polyline" in text
