import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bgkheat.series import DiagnosticsSeries, read_csv


def test_round_trip(tmp_path):
    s = DiagnosticsSeries(("time", "value", "label"))
    s.append((0.0, 1 / 3, "a"))
    s.append((0.1, math.pi, "b"))
    path = tmp_path / "x.csv"
    s.to_csv(path, {"grid": {"nx": 8}, "seed": 3})
    config, back = read_csv(path)
    assert config == {"grid": {"nx": 8}, "seed": 3}
    assert back.columns == s.columns
    assert back.column("value")[0] == 1 / 3 and back.last("value") == math.pi


def test_header_layout():
    s = DiagnosticsSeries(("a", "b"))
    s.append((1.0, 2.0))
    lines = s.to_csv(config={"k": 1}).splitlines()
    assert lines[0] == '# config: {"k": 1}' and lines[1] == "a,b"


def test_row_length_checked():
    with pytest.raises(ValueError):
        DiagnosticsSeries(("a", "b")).append((1.0,))


def test_missing_config_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(path)


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_floats_survive_exactly(values):
    s = DiagnosticsSeries(("v",))
    for v in values:
        s.append((v,))
    text = s.to_csv()
    parsed = [float(line) for line in text.splitlines()[2:]]
    assert parsed == [float(v) for v in values]
