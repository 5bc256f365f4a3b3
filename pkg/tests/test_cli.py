import csv
import json

import pytest

from boolfact.boolmat import BooleanMatrix, format_matrix, read_matrix
from boolfact.cli import main

from conftest import EXAMPLE_X


@pytest.fixture
def example_file(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text(format_matrix(BooleanMatrix(EXAMPLE_X)))
    return path


def report(text):
    return dict(line.split(": ", 1) for line in text.strip().splitlines() if ": " in line)


class TestFactorize:
    def test_exact_rank_two(self, example_file, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert main(["factorize", str(example_file), "--rank", "2", "--factors", str(tmp_path / "f"),
                     "--out", str(out)]) == 0
        rep = report(capsys.readouterr().out)
        assert rep["error"] == "0" and rep["percent_reconstructed"] == "100" and rep["status"] == "optimal"
        assert json.loads(out.read_text())["objective"] == 0
        assert read_matrix(tmp_path / "f.C.txt").shape == (3, 2)

    def test_rank_one(self, example_file, capsys):
        assert main(["factorize", str(example_file), "-k", "1", "--no-preprocess"]) == 0
        assert report(capsys.readouterr().out)["objective"] == "2"

    def test_all_zero(self, tmp_path, capsys):
        path = tmp_path / "z.txt"
        path.write_text(format_matrix(BooleanMatrix.zeros(3, 4)))
        assert main(["factorize", str(path), "-k", "2"]) == 0
        assert report(capsys.readouterr().out)["error"] == "0"

    def test_bad_input(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("2 2\n0 1\n2 0\n")
        assert main(["factorize", str(bad), "-k", "1"]) == 2
        assert main(["factorize", str(tmp_path / "missing.txt"), "-k", "1"]) == 2
        assert main(["factorize", "voting", "-k", "1", "--data-dir", str(tmp_path)]) == 2
        assert "error" in capsys.readouterr().err


class TestEmit:
    def counts(self, capsys, *args):
        assert main(["emit", *args]) == 0
        line = capsys.readouterr().err.strip().splitlines()[-1]
        words = line.replace("(", "").replace(",", "").split()
        return {"variables": int(words[1]), "binary": int(words[3]), "constraints": int(words[5])}

    def test_improved_binary_count(self, example_file, capsys):
        c = self.counts(capsys, str(example_file), "-k", "2", "--no-preprocess")
        assert c["binary"] == 12

    def test_improved_smaller_than_full(self, example_file, capsys):
        full = self.counts(capsys, str(example_file), "-k", "2", "--formulation", "full", "--no-preprocess")
        imp = self.counts(capsys, str(example_file), "-k", "2", "--no-preprocess")
        agg = self.counts(capsys, str(example_file), "-k", "2", "--formulation", "aggregated", "--no-preprocess")
        assert imp["constraints"] < full["constraints"]
        assert agg["constraints"] < full["constraints"]

    def test_file_output(self, example_file, tmp_path, capsys):
        out = tmp_path / "m.lp"
        assert main(["emit", str(example_file), "-k", "2", "--format", "lp", "--out", str(out)]) == 0
        assert out.read_text().startswith("\\ Problem:")
        assert "variables" in capsys.readouterr().out

    def test_all_zero_rejected(self, tmp_path):
        path = tmp_path / "z.txt"
        path.write_text(format_matrix(BooleanMatrix.zeros(2, 2)))
        assert main(["emit", str(path), "-k", "1"]) == 2


def test_preprocess(tmp_path, capsys):
    path = tmp_path / "d.txt"
    path.write_text(format_matrix(BooleanMatrix([[1, 1, 0], [1, 1, 0], [0, 0, 0]])))
    assert main(["preprocess", str(path)]) == 0
    out = capsys.readouterr().out
    assert "reduced_rows=1" in out and "alpha 2" in out and "beta 2" in out
    assert "row_map 1 1 -" in out


def test_check_solution(example_file, tmp_path, capsys):
    sol = tmp_path / "s.sol"
    sol.write_text("c_1_1 1\nc_2_1 1\nc_2_2 1\nc_3_2 1\nr_1_1 1\nr_1_2 1\nr_2_2 1\nr_2_3 1\n"
                   "z_1_1 1\nz_1_2 1\nz_2_1 1\nz_2_2 1\nz_2_3 1\nz_3_2 1\nz_3_3 1\n"
                   "y_1_1_1 1\ny_1_1_2 1\ny_2_1_1 1\ny_2_1_2 1\ny_2_2_2 1\ny_2_2_3 1\ny_3_2_2 1\ny_3_2_3 1\n")
    assert main(["check-solution", str(example_file), "-k", "2", "--no-preprocess", "--solution", str(sol)]) == 0
    out = capsys.readouterr().out
    assert "objective: 0" in out and "violations: 0" in out and "error on original matrix: 0" in out
    sol.write_text("c_9_9 1\n")
    assert main(["check-solution", str(example_file), "-k", "2", "--no-preprocess", "--solution", str(sol)]) == 2


def test_synth(tmp_path):
    out = tmp_path / "s.txt"
    assert main(["synth", "--n", "6", "--m", "5", "--kappa", "2", "--noise", "10", "--seed", "3",
                 "--out", str(out)]) == 0
    assert read_matrix(out).shape == (6, 5)
    side = json.loads((tmp_path / "s.txt.json").read_text())
    assert side["config"]["kappa"] == 2 and len(side["flipped"]) == 3


class TestExperiment:
    def test_noise_sweep_noise_free(self, tmp_path):
        out = tmp_path / "e.csv"
        assert main(["experiment", "noise-sweep", "--sizes", "6,8", "--m", "6", "--kappa", "2",
                     "--repeats", "3", "--out", str(out)]) == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 6 and {r["objective"] for r in rows} == {"0"}
        summary = list(csv.DictReader((tmp_path / "e.summary.csv").open()))
        assert len(summary) == 2 and all(s["runs"] == "3" for s in summary)

    def test_formulation_compare(self, tmp_path):
        out = tmp_path / "f.csv"
        assert main(["experiment", "formulation-compare", "--sizes", "5", "--m", "5", "--kappa", "2",
                     "--repeats", "2", "--out", str(out)]) == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 2 * 3 * 2
        for r in rows:
            if r["formulation"] == "improved" and r["preprocess"] == "0":
                assert int(r["binary"]) == 2 * 10

    def test_appends(self, tmp_path):
        out = tmp_path / "e.csv"
        args = ["experiment", "noise-sweep", "--sizes", "5", "--m", "5", "--kappa", "1", "--repeats", "1",
                "--out", str(out)]
        main(args)
        main(args)
        assert len(list(csv.DictReader(out.open()))) == 2

    def test_realdata_missing(self, tmp_path):
        assert main(["--data-dir", str(tmp_path), "experiment", "realdata-ranks"]) == 2
