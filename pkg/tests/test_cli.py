import csv
import json
import xml.etree.ElementTree as ET

import pytest

from phirm.cli import main
from phirm.report import read_csv

SMALL = """\
num_actions = 3
family = int
link = polynomial
p = 2
estimator = quantized
quant_step = 0.5
adversary = adaptive_best_response
horizon = 300
seeds = 0-3
output_dir = out
"""


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("small")
    (d / "small.cfg").write_text(SMALL)
    assert main(["run", "--config", str(d / "small.cfg")]) == 0
    return d / "out"


def test_run_writes_all_outputs(small_run):
    names = {p.name for p in small_run.iterdir()}
    assert {f"seed_{s}.csv" for s in range(4)} <= names
    assert {"mean.csv", "summary.svg", "metadata.json"} <= names
    meta = json.loads((small_run / "metadata.json").read_text())
    assert len(meta["config_sha256"]) == 64
    ET.parse(small_run / "summary.svg")


def test_csv_header_and_full_precision(small_run):
    with open(small_run / "seed_0.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "realized_objective", "blackwell_lhs", "blackwell_rhs", "g_error_sum",
                       "theorem_rhs", "potential", "potential_bound"]
    assert len(rows) == 301
    for cell in rows[1][1:] + rows[-1][1:]:
        assert repr(float(cell)) == cell


def test_mean_file_dominated(small_run):
    d = read_csv(small_run / "mean.csv")
    assert (d["realized_objective"] <= d["theorem_rhs"] + 1e-8).all()


def test_verify_passes_on_run_output(small_run, capsys):
    files = sorted(str(p) for p in small_run.glob("*.csv"))
    assert main(["verify", *files]) == 0
    assert main(["--verify", str(small_run / "mean.csv")]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "domination: PASS" in out


def test_same_config_twice_is_byte_identical(small_run, tmp_path):
    (tmp_path / "small.cfg").write_text(SMALL)
    assert main(["run", "--config", str(tmp_path / "small.cfg"), "--out", str(tmp_path / "again")]) == 0
    for name in [f"seed_{s}.csv" for s in range(4)] + ["mean.csv"]:
        assert (tmp_path / "again" / name).read_bytes() == (small_run / name).read_bytes()


def test_jobs_do_not_change_output(small_run, tmp_path):
    (tmp_path / "small.cfg").write_text(SMALL)
    assert main(["run", "--config", str(tmp_path / "small.cfg"), "--out", str(tmp_path / "par"),
                 "--jobs", "2"]) == 0
    for s in range(4):
        assert (tmp_path / "par" / f"seed_{s}.csv").read_bytes() == (small_run / f"seed_{s}.csv").read_bytes()


def test_corrupted_theorem_rhs_cell_fails_with_row(small_run, tmp_path, capsys):
    lines = (small_run / "mean.csv").read_text().splitlines()
    cells = lines[42].split(",")
    cells[5] = "1e-09"
    lines[42] = ",".join(cells)
    bad = tmp_path / "mean.csv"
    bad.write_text("\n".join(lines) + "\n")
    assert main(["verify", str(bad)]) == 1
    out = capsys.readouterr().out
    assert "domination: FAIL (row 42 (t=42)" in out


def test_recomputed_bound_catches_inflated_cell(small_run, tmp_path, capsys):
    for f in ("metadata.json", "mean.csv"):
        (tmp_path / f).write_bytes((small_run / f).read_bytes())
    lines = (tmp_path / "mean.csv").read_text().splitlines()
    cells = lines[7].split(",")
    cells[5] = "5.0"
    lines[7] = ",".join(cells)
    (tmp_path / "mean.csv").write_text("\n".join(lines) + "\n")
    assert main(["verify", str(tmp_path / "mean.csv")]) == 1
    assert "theorem_rhs_consistency: FAIL (row 7" in capsys.readouterr().out


@pytest.mark.parametrize("content", ["", "t,realized_objective\n",
                                     "t,realized_objective,blackwell_lhs,blackwell_rhs,g_error_sum,"
                                     "theorem_rhs,potential,potential_bound\n"])
def test_empty_or_malformed_trace_is_schema_error(tmp_path, content, capsys):
    p = tmp_path / "empty.csv"
    p.write_text(content)
    assert main(["verify", str(p)]) == 2
    assert "schema error" in capsys.readouterr().err


def test_bad_config_exit_code_names_field(tmp_path, capsys):
    bad = SMALL.replace("link = polynomial\np = 2", "link = exponential\neta = -1")
    (tmp_path / "bad.cfg").write_text(bad)
    assert main(["run", "--config", str(tmp_path / "bad.cfg")]) == 2
    assert "eta" in capsys.readouterr().err


def test_missing_files_are_io_errors(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 3
    assert main(["verify", str(tmp_path / "nope.csv")]) == 3


def test_unwritable_output_is_io_error(tmp_path):
    (tmp_path / "small.cfg").write_text(SMALL.replace("horizon = 300", "horizon = 5"))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--config", str(tmp_path / "small.cfg"), "--out", str(blocker / "sub")]) == 3


def test_game_config_end_to_end(tmp_path):
    (tmp_path / "rps.txt").write_text("0.5 0 1\n1 0.5 0\n0 1 0.5\n\n0.5 1 0\n0 0.5 1\n1 0 0.5\n")
    (tmp_path / "g.cfg").write_text(
        "game = rps.txt\nfamily = int\nlink = polynomial\np = 2\nhorizon = 200\nseeds = 0-1\noutput_dir = o\n")
    assert main(["run", "--config", str(tmp_path / "g.cfg")]) == 0
    meta = json.loads((tmp_path / "o" / "metadata.json").read_text())
    assert "ce_gap" in meta
    for name in ("mean_p1.csv", "mean_p2.csv", "seed_0_p1.csv", "seed_1_p2.csv"):
        assert (tmp_path / "o" / name).exists()
    d = read_csv(tmp_path / "o" / "mean_p1.csv")
    assert d["realized_objective"][-1] <= d["theorem_rhs"][-1]
