import json
import re

import pytest

from relthue.cli import (
    EXIT_CAP,
    EXIT_CASE_DATA,
    EXIT_CHECKPOINT,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_VERIFY,
    run,
)
from relthue.fieldspec import example_spec_path


def _example_text():
    return example_spec_path().read_text()


def _write(tmp_path, text, name="field.spec"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_verify_example(tmp_path, capsys):
    out = tmp_path / "v"
    assert run(["verify", "example", "-o", str(out)]) == EXIT_OK
    rep = _report(out)
    assert rep["verify"]["passed"]
    assert all(c["ok"] for c in rep["verify"]["checks"])


def test_broken_unit_data_exits_verify(tmp_path, capsys):
    text = _example_text().replace("[3, -7, 0, 7, 0, -1]", "[3, -7, 0, -7, 0, -1]")
    assert run(["verify", _write(tmp_path, text), "-o", str(tmp_path / "o")]) == EXIT_VERIFY
    assert "verification failed" in capsys.readouterr().err


@pytest.mark.parametrize("text", ["base: [unclosed", "format: relthue-spec/1\nname: x\n"])
def test_malformed_spec_exits_parse(tmp_path, text):
    assert run(["verify", _write(tmp_path, text), "-o", str(tmp_path / "o")]) == EXIT_PARSE


@pytest.mark.parametrize("flag", [["--schedule", "1e10,abc"], ["--sieve-primes", "7,x"], ["--schedule", "1e10,2"]])
def test_bad_tuning_flags_exit_parse(tmp_path, flag):
    argv = ["solve-all", "example", "-o", str(tmp_path / "o"), "--reduced-bound", "5", "--no-figures"] + flag
    assert run(argv) == EXIT_PARSE


def test_missing_checkpoint(tmp_path):
    argv = ["thue-quartic", "example", "-o", str(tmp_path), "--checkpoint", str(tmp_path / "nope.ckpt")]
    assert run(argv) == EXIT_CHECKPOINT


def test_corrupt_checkpoint(tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"not a checkpoint")
    assert run(["thue-quartic", "example", "-o", str(tmp_path), "--checkpoint", str(bad)]) == EXIT_CHECKPOINT


def test_irreducible_resolvent_without_field_data(tmp_path, capsys):
    text = _example_text()
    text = text.replace("a3: [0, 0, 0]", "a3: [2, 0, 0]").replace("a4: [0, 1, 0]", "a4: [1, 0, 0]")
    text = text[: text.index("absolute:")] + text[text.index("solver:"):]
    assert run(["solve-all", _write(tmp_path, text), "-o", str(tmp_path / "o"), "--no-figures"]) == EXIT_CASE_DATA
    assert "error" in capsys.readouterr().err


def test_cardinality_cap(tmp_path):
    argv = ["unit-eq", "example", "-o", str(tmp_path / "o"), "--reduced-bound", "280", "--cap", "50", "--no-figures"]
    assert run(argv) == EXIT_CAP


def test_stage_reduce_partial_report(tmp_path):
    out = tmp_path / "r"
    assert run(["solve-all", "example", "-o", str(out), "--stage", "reduce"]) == EXIT_OK
    rep = _report(out)
    eq = rep["unit_equations"][0]
    assert "baker" in eq and "reduction" in eq
    assert "enumeration" not in eq
    assert "unit_solutions" not in rep and "generators" not in rep
    assert (out / "reduction.tsv").exists() and (out / "reduction.png").exists()


def test_thue_from_checkpoint_matches_solve_all(tmp_path, example_run):
    out = tmp_path / "t"
    argv = ["thue-quartic", "example", "-o", str(out), "--checkpoint", str(example_run.checkpoint)]
    assert run(argv) == EXIT_OK
    rep = _report(out)
    full = example_run.report.to_dict()
    assert rep["quartic"] == json.loads(json.dumps(full["quartic"]))
    assert rep["generators"] == full["generators"]


def test_abs_search_small_range(tmp_path, capsys):
    out = tmp_path / "a"
    assert run(["abs-search", "example", "-o", str(out), "--range", "1", "--no-figures"]) == EXIT_OK
    rep = _report(out)
    idx = sorted(h["index"] for h in rep["absolute_search"]["hits"])
    assert idx == [1, 65329214857201]
    tsv = (out / "absolute.tsv").read_text().splitlines()
    assert len(tsv) == 3 and re.match(r"^z1\t", tsv[0])
