import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relthue.checkpoint import MAGIC, CheckpointWriter, read_checkpoint
from relthue.errors import CheckpointError
from relthue.report import RunReport, write_report

vec_lists = st.integers(1, 6).flatmap(
    lambda d: st.lists(st.lists(st.integers(-2**62, 2**62), min_size=d, max_size=d), max_size=20))


@settings(max_examples=30, deadline=None)
@given(vec_lists, vec_lists)
def test_checkpoint_round_trip(tmp_path_factory, a, b):
    p = tmp_path_factory.mktemp("ck") / "s.ckpt"
    with CheckpointWriter(p) as w:
        w.write("a", a, dim=1)
        w.write("b", b, dim=2)
        w.write_json("meta", {"k": [1, 2, "x"]})
    got = read_checkpoint(p)
    assert got["a"] == [tuple(v) for v in a]
    assert got["b"] == [tuple(v) for v in b]
    assert got["meta"] == {"k": [1, 2, "x"]}


def test_later_section_replaces_earlier(tmp_path):
    p = tmp_path / "s.ckpt"
    with CheckpointWriter(p) as w:
        w.write("x", [[1]])
        w.write("x", [[2], [3]])
    assert read_checkpoint(p)["x"] == [(2,), (3,)]


def test_ragged_vectors_rejected(tmp_path):
    with CheckpointWriter(tmp_path / "s.ckpt") as w, pytest.raises(CheckpointError):
        w.write("x", [[1, 2], [3]])


@pytest.mark.parametrize("cut", [9, 15, 30])
def test_truncated_checkpoint(tmp_path, cut):
    p = tmp_path / "s.ckpt"
    with CheckpointWriter(p) as w:
        w.write("x", [[1, 2, 3]] * 4)
    p.write_bytes(p.read_bytes()[:cut])
    with pytest.raises(CheckpointError):
        read_checkpoint(p)


def test_wrong_magic(tmp_path):
    p = tmp_path / "s.ckpt"
    p.write_bytes(b"XXXXXXXX" + MAGIC)
    with pytest.raises(CheckpointError):
        read_checkpoint(p)


def test_example_checkpoint_contents(example_run):
    ck = read_checkpoint(example_run.checkpoint)
    assert sorted(ck["unit_solutions"]) == [(0, 0, 0, 0, 0), (0, 1, 0, 0, 0), (1, 0, 0, 0, 0)]
    assert ck["uv"] == [(1, 0, 0, 0, 0, 0)]


def test_report_json_round_trip(tmp_path, example_run):
    rep = example_run.report
    files = write_report(rep, tmp_path, figures=True)
    d = json.loads((tmp_path / "report.json").read_text())
    back = RunReport.from_dict(d)
    assert back.to_dict() == d
    assert d["schema"] == "relthue-report/1"
    for key in ("reduction_tsv", "enumeration_tsv", "reduction_png", "enumeration_png"):
        assert key in files
    with open(files["reduction_png"], "rb") as fh:
        assert fh.read(8) == b"\x89PNG\r\n\x1a\n"


def test_enumeration_tsv_rows(tmp_path, example_run):
    files = write_report(example_run.report, tmp_path, figures=False)
    lines = (tmp_path / "enumeration.tsv").read_text().splitlines()
    head = lines[0].split("\t")
    rows = [dict(zip(head, ln.split("\t"))) for ln in lines[1:]]
    assert {"case", "step", "enumerated", "sieve_passed"} <= set(head)
    assert len(rows) == 10
    assert "reduction_png" not in files


def test_report_rejects_unknown_schema():
    with pytest.raises(ValueError):
        RunReport.from_dict({"schema": "other/9"})


def test_report_serializes_numpy_and_nonfinite():
    rep = RunReport("t")
    rep.set("x", {"arr": np.arange(3), "inf": float("inf")})
    d = json.loads(rep.to_json())
    assert d["x"]["arr"] == [0, 1, 2]
