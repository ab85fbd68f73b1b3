# tests/test_emitters.py
import json

import numpy as np
import pandas as pd
import pytest

from schemas import RunMetadata
from services.emitters import emit_svg, write_csv, write_metadata


def panels():
    x = np.linspace(0.0, 1.0, 11)
    return {
        "blend": {"h_0 = 1": (x, x ** 2), "h_0 = 2": (x, 2 * x)},
        "chertock": {"h_0 = 1": (x, 1 - x)},
    }


def test_svg_is_deterministic(tmp_path):
    first = emit_svg(panels(), tmp_path / "a.svg", title="sweep")
    second = emit_svg(panels(), tmp_path / "b.svg", title="sweep")
    assert first.read_bytes() == second.read_bytes()


def test_svg_has_panel_titles(tmp_path):
    text = emit_svg(panels(), tmp_path / "p.svg").read_text(encoding="utf-8")
    assert text.lstrip().startswith("<?xml")
    assert "blend" in text and "chertock" in text


def test_svg_needs_data(tmp_path):
    with pytest.raises(ValueError, match="empty"):
        emit_svg({"blend": {}}, tmp_path / "x.svg")


def test_csv_round_trip_is_exact(tmp_path):
    frame = pd.DataFrame({"x": [0.1, 1.0 / 3.0, 2e-17], "cell": [0, 1, 2], "scheme": ["blend"] * 3})
    path = write_csv(frame, tmp_path / "f.csv")
    back = pd.read_csv(path)
    pd.testing.assert_frame_equal(back, frame)
    assert b"\r\n" not in path.read_bytes()
    assert path.read_text().splitlines()[0] == "x,cell,scheme"


def test_metadata_json(tmp_path):
    meta = RunMetadata(python_version="3.11.0", numpy_version="1.26.0", config={"scenario": "dam_break"},
                       steps=5, diagnostics={"l1_error": 0.01})
    data = json.loads(write_metadata(meta, tmp_path / "m.json").read_text(encoding="utf-8"))
    assert data["steps"] == 5
    assert data["config"]["scenario"] == "dam_break"
    assert data["diagnostics"]["l1_error"] == 0.01
