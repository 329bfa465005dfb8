import xml.etree.ElementTree as ET

import numpy as np
import pytest

from susplab.svg import line_plot

NS = "{http://www.w3.org/2000/svg}"


def test_plot_is_valid_and_deterministic(tmp_path):
    x = np.linspace(0, 1, 50)
    series = {"a": np.sin(x), "b & c": np.cos(x)}
    p1 = line_plot(tmp_path / "a.svg", x, series, "t<1>", "x", "y")
    p2 = line_plot(tmp_path / "b.svg", x, series, "t<1>", "x", "y")
    assert p1.read_bytes() == p2.read_bytes()
    root = ET.parse(p1).getroot()
    assert root.tag == NS + "svg"
    assert len(root.findall(f".//{NS}polyline")) == 2
    texts = [t.text for t in root.iter(NS + "text")]
    assert "t<1>" in texts and "b & c" in texts


def test_decimation_keeps_extremes(tmp_path):
    x = np.arange(100000, dtype=float)
    y = np.zeros_like(x)
    y[54321] = 5.0
    path = line_plot(tmp_path / "d.svg", x, {"y": y}, max_points=400)
    root = ET.parse(path).getroot()
    pts = root.find(f".//{NS}polyline").get("points").split()
    assert len(pts) <= 400
    ys = [float(p.split(",")[1]) for p in pts]
    assert len(set(ys)) == 2


def test_flat_and_nonfinite_series(tmp_path):
    x = np.arange(10.0)
    y = np.ones(10)
    y[3] = np.nan
    path = line_plot(tmp_path / "f.svg", x, {"y": y})
    ET.parse(path)


def test_rejects_mismatched_lengths(tmp_path):
    with pytest.raises(ValueError):
        line_plot(tmp_path / "m.svg", np.arange(3.0), {"y": np.arange(4.0)})
