import json
import math
import xml.etree.ElementTree as ET

import pytest

from qwalks.src.errors import ConsistencyError
from qwalks.src.export import (
    TILINGS_SCHEMA,
    BoundaryPlot,
    split_branches,
    trajectory_rows,
    write_csv,
    write_json,
    write_trajectory,
)
from qwalks.src.walks import Trajectory


@pytest.fixture
def trajectory() -> Trajectory:
    return Trajectory([(3, 1), (3, 0), (2, 0), (1, 0)], q=0.5, seed=4)


def test_csv_uses_lf_and_fixed_digits(tmp_path):
    path = write_csv(tmp_path / "table.csv", ("a", "b", "c"), [(1 / 3, True, math.nan)])
    assert path.read_bytes() == b"a,b,c\n0.333333333333,1,nan\n"


def test_json_rounds_and_validates(tmp_path):
    path = write_json(tmp_path / "doc.json", {"x": 2 / 3, "bad": math.inf})
    assert json.loads(path.read_text()) == {"bad": None, "x": 0.666666666667}
    assert path.read_text().endswith("}\n")
    with pytest.raises(ConsistencyError):
        write_json(tmp_path / "tilings.json", {"lambda": [2, 1, 0]}, TILINGS_SCHEMA)
    assert not (tmp_path / "tilings.json").exists()


def test_trajectory_rows(trajectory):
    rows = trajectory_rows(trajectory)
    assert rows[:2] == [(0, 1, 3), (0, 2, 1)]
    assert rows[-1] == (3, 2, 0)


def test_trajectory_files_are_reproducible(tmp_path, trajectory):
    first = write_trajectory(trajectory, tmp_path / "one", "run")
    second = write_trajectory(trajectory, tmp_path / "two", "run")
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()
    assert json.loads(first[1].read_text())["states"][-1] == [1, 0]


def test_svg_layers(tmp_path):
    plot = BoundaryPlot((0.0, 2.0, 0.0, 2.0))
    plot.add_polylines("polygon", [[(0.0, 0.5), (0.5, 0.0), (2.0, 0.0)]], "black")
    plot.add_markers("liquid", [(1.0, 1.0)], "blue")
    path = plot.write(tmp_path / "plot.svg")
    root = ET.parse(path).getroot()
    layers = {element.get("id") for element in root.iter() if element.get("id")}
    assert {"polygon", "liquid"} <= layers
    assert any(layer.startswith("axes") for layer in layers)
    assert path.read_text().startswith("<?xml")


def test_svg_is_reproducible(tmp_path):
    outputs = []
    for name in ("first.svg", "second.svg"):
        plot = BoundaryPlot((0.0, 2.0, 0.0, 2.0))
        plot.add_polylines("polygon", [[(0.0, 0.5), (0.5, 0.0), (2.0, 0.0)], [(1.0, 1.0)]], "black")
        plot.add_markers("liquid", [], "blue")
        outputs.append(plot.write(tmp_path / name).read_bytes())
    assert outputs[0] == outputs[1]


def test_branches_split_at_window_exits_and_jumps():
    plot = BoundaryPlot((0.0, 1.0, 0.0, 1.0))
    points = [(0.0, 0.1, 0.1), (0.1, 0.2, 0.2), (0.2, 5.0, 5.0), (0.3, 0.3, 0.3), (0.4, 0.9, 0.9), (0.5, 0.95, 0.95)]
    branches = split_branches(points, plot)
    assert branches == [[(0.1, 0.1), (0.2, 0.2)], [(0.3, 0.3)], [(0.9, 0.9), (0.95, 0.95)]]
