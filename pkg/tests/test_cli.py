import csv
import json

import pytest

from fraclab.cli import EXIT_FAIL, EXIT_INVALID, EXIT_OK, InputError, main, parse_grid
from fraclab.records import REPORT_SCHEMA


def _summary(path):
    with open(path / "summary.json") as fh:
        return json.load(fh)


class TestParseGrid:
    def test_range_inclusive(self):
        assert parse_grid("1:2:0.25") == [1.0, 1.25, 1.5, 1.75, 2.0]

    def test_list(self):
        assert parse_grid("1,2,inf") == [1.0, 2.0, float("inf")]

    def test_none(self):
        assert parse_grid(None) == []

    @pytest.mark.parametrize("text", ["", "3:1:0.5", "1:2:0", "1:2"])
    def test_invalid(self, text):
        with pytest.raises(InputError):
            parse_grid(text)


class TestInvalidInput:
    def test_empty_grid(self, tmp_path):
        assert main(["torsion-scan", "--p-grid", "", "--out", str(tmp_path)]) == EXIT_INVALID

    def test_t_too_large(self, tmp_path):
        assert main(["torsion-scan", "--s", "0.4", "--t", "0.9", "--out", str(tmp_path)]) == EXIT_INVALID

    def test_alpha_not_integrable(self, tmp_path):
        args = ["estimates", "--lemma", "grzywny", "--alpha", "2.0", "--out", str(tmp_path)]
        assert main(args) == EXIT_INVALID

    def test_unknown_command(self):
        assert main(["frobnicate"]) == EXIT_INVALID

    def test_missing_manifest(self, tmp_path):
        assert main(["--manifest", str(tmp_path / "none.json")]) == EXIT_INVALID


class TestTorsionScan:
    def test_threshold_and_outputs(self, tmp_path):
        code = main(["torsion-scan", "--s", "0.5", "--t", "0.7", "--p-grid", "1:8:0.25", "--out", str(tmp_path)])
        assert code == EXIT_OK
        (check,) = _summary(tmp_path)["checks"]
        assert check["status"] == "pass"
        assert check["threshold_detected"] == pytest.approx(5.0)
        assert check["threshold_predicted"] == pytest.approx(5.0)
        with open(tmp_path / "torsion_scan_t0.7.csv") as fh:
            assert fh.readline().startswith("# units:")
            rows = list(csv.reader(fh))
        assert rows[0] == ["p", "norm_estimate", "converged", "shell_k", "shell_contribution"]
        assert len(rows) == 1 + 29 * 40
        assert (tmp_path / "torsion_scan_t0.7_profile.dat").exists()

    def test_summary_schema(self, tmp_path):
        main(["torsion-scan", "--p-grid", "1,2", "--out", str(tmp_path)])
        summary = _summary(tmp_path)
        assert summary["schema"] == json.loads(json.dumps(REPORT_SCHEMA))
        for c in summary["checks"]:
            assert set(REPORT_SCHEMA["required"]) <= set(c)
            assert c["runtime_ms"] == 0
            assert c["status"] in REPORT_SCHEMA["properties"]["status"]["enum"]
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert "timestamp" in meta

    def test_json_format(self, tmp_path):
        main(["torsion-scan", "--p-grid", "1,2", "--format", "json", "--out", str(tmp_path)])
        data = json.loads((tmp_path / "torsion_scan_t0.5.json").read_text())
        assert data["columns"][0] == "p" and len(data["rows"]) == 2 * 40


class TestEstimates:
    def test_grzywny(self, tmp_path):
        code = main(["estimates", "--lemma", "grzywny", "--alpha", "1.5", "--beta", "1.0", "--out", str(tmp_path)])
        assert code == EXIT_OK
        (check,) = _summary(tmp_path)["checks"]
        assert check["threshold_detected"] == pytest.approx(-0.5, abs=0.05)
        assert check["details"]["regime"] == "power"

    def test_tobias_log(self, tmp_path):
        code = main(["estimates", "--lemma", "tobias", "--lam", "0.4", "--a", "0.4", "--out", str(tmp_path)])
        assert code == EXIT_OK

    def test_mvt(self, tmp_path):
        code = main(["estimates", "--lemma", "mvt", "--samples", "2000", "--dim", "3", "--out", str(tmp_path)])
        assert code == EXIT_OK

    def test_threads_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FRACLAB_THREADS", "2")
        main(["estimates", "--lemma", "mvt", "--samples", "100", "--out", str(tmp_path)])
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["options"]["threads"] == 2

    def test_threaded_scan_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        base = ["estimates", "--lemma", "grzywny", "--alpha", "0.5", "--beta", "0.5"]
        main(base + ["--threads", "1", "--out", str(a)])
        main(base + ["--threads", "3", "--out", str(b)])
        assert _summary(a)["checks"] == _summary(b)["checks"]


class TestReport:
    def test_collects_runs(self, tmp_path):
        main(["torsion-scan", "--p-grid", "1:8:0.25", "--s", "0.5", "--t", "0.7", "--out", str(tmp_path / "a")])
        main(["estimates", "--lemma", "mvt", "--samples", "100", "--out", str(tmp_path / "b")])
        code = main(["report", "--out", str(tmp_path)])
        assert code == EXIT_OK
        ids = [c["check_id"] for c in _summary(tmp_path)["checks"]]
        assert ids == ["torsion.threshold.t0.7", "estimates.mvt"]

    def test_failing_check_exit_code(self, tmp_path):
        # far-field decay is reported against the literal prediction
        code = main(["green-check", "--s", "0.6", "--t", "0.8", "--samples", "4", "--out", str(tmp_path)])
        assert code in (EXIT_OK, EXIT_FAIL)
        statuses = {c["check_id"]: c["status"] for c in _summary(tmp_path)["checks"]}
        assert (code == EXIT_FAIL) == ("fail" in statuses.values())
