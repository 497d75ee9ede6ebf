"""End-to-end CLI behavior: subcommands, exit codes, and stable output."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from conftest import GOLDEN_DIR, make_label, read_golden
from modelfacts.cli import main
from modelfacts.render import to_canonical_json

VOID_MANIFEST = str(GOLDEN_DIR / "void.manifest.json")
SUICIDE_MANIFEST = str(GOLDEN_DIR / "suicide_risk.manifest.json")


def write_label(path: Path, label) -> str:
    path.write_bytes(to_canonical_json(label))
    return str(path)


@pytest.fixture
def reference_file(tmp_path: Path) -> str:
    doc = {"name": "urban", "categories": {
        "Gender": {"Female": 50.0, "Male": 48.0, "Trans Female": 0.6,
                   "Trans Male": 0.6, "Nonbinary": 0.5, "Other": 0.3}}}
    path = tmp_path / "reference.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestDeclareAndRender:
    def test_declare_then_render_matches_golden(self, tmp_path, capsys):
        out = tmp_path / "void.label.json"
        assert main(["declare", "--manifest", VOID_MANIFEST, "-o", str(out)]) == 0
        assert out.read_bytes() == read_golden("void.label.json")
        capsys.readouterr()
        assert main(["render", str(out), "--format", "text"]) == 0
        captured = capsys.readouterr()
        assert captured.out.encode() == read_golden("void.label.txt")

    def test_render_to_file(self, tmp_path, capsys):
        out = tmp_path / "label.json"
        main(["declare", "--manifest", SUICIDE_MANIFEST, "-o", str(out)])
        html_out = tmp_path / "label.html"
        assert main(["render", str(out), "--format", "html", "-o", str(html_out)]) == 0
        assert html_out.read_text().startswith("<!DOCTYPE html>")

    def test_declare_to_stdout(self, capsys):
        assert main(["declare", "--manifest", VOID_MANIFEST]) == 0
        captured = capsys.readouterr()
        assert captured.out.encode() == read_golden("void.label.json")

    def test_byte_identical_across_runs(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["declare", "--manifest", VOID_MANIFEST, "-o", str(a)])
        main(["declare", "--manifest", VOID_MANIFEST, "-o", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_stamp_sidecar(self, tmp_path):
        out = tmp_path / "void.label.json"
        assert main(["declare", "--manifest", VOID_MANIFEST, "-o", str(out), "--stamp"]) == 0
        stamp = json.loads((tmp_path / "void.label.json.stamp.json").read_text())
        assert stamp["command"] == "declare"
        assert VOID_MANIFEST in stamp["inputs"]
        # the label itself stays canonical and stamp-free
        assert out.read_bytes() == read_golden("void.label.json")

    def test_declare_incomplete_manifest_exits_2(self, tmp_path, capsys):
        doc = json.loads(Path(VOID_MANIFEST).read_text())
        doc.pop("dataset")
        path = tmp_path / "partial.json"
        path.write_text(json.dumps(doc))
        assert main(["declare", "--manifest", str(path), "-o", str(tmp_path / "x.json")]) == 2
        err = capsys.readouterr().err
        assert "SCHEMA_ERROR" in err and "Traceback" not in err

    def test_render_missing_label_exits_2(self, tmp_path, capsys):
        assert main(["render", str(tmp_path / "nope.json"), "--format", "text"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_compare_malformed_label_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"schema_version": "1.0"}')
        assert main(["compare", str(bad)]) == 2
        assert "SCHEMA_ERROR" in capsys.readouterr().err


class TestGenerate:
    def manifest(self, tmp_path) -> str:
        doc = {
            "schema_version": "1.0",
            "application": "Flags intake cases for a second review",
            "model_type": "imbalanced_classification",
            "model_train_date": "2020",
            "test_data_range": "2021",
            "positive_class": "1",
            "optimized_metric": {"name": "Accuracy"},
            "warnings": [],
        }
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(doc))
        return str(path)

    def test_generate_pipeline(self, tmp_path, capsys):
        data = tmp_path / "predictions.csv"
        data.write_text("id,y_true,y_pred,gender\na,1,1,F\nb,0,0,M\nc,1,0,F\nd,0,1,M\n")
        out = tmp_path / "out.label.json"
        assert main(["generate", "--data", str(data), "--manifest", self.manifest(tmp_path),
                     "-o", str(out)]) == 0
        doc = json.loads(out.read_bytes())
        assert doc["accuracy"]["optimized"]["raw_score"]["value"] == 0.5

    def test_missing_column_exits_2(self, tmp_path, capsys):
        data = tmp_path / "bad.csv"
        data.write_text("id,y_pred\na,1\n")
        code = main(["generate", "--data", str(data), "--manifest", self.manifest(tmp_path),
                     "-o", str(tmp_path / "x.json")])
        captured = capsys.readouterr()
        assert code == 2
        assert "MISSING_COLUMN" in captured.err
        assert "y_true" in captured.err
        assert "Traceback" not in captured.err

    def test_missing_file_exits_2(self, tmp_path, capsys):
        code = main(["generate", "--data", str(tmp_path / "nope.csv"),
                     "--manifest", self.manifest(tmp_path), "-o", str(tmp_path / "x.json")])
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestValidate:
    def test_clean_label_exits_0(self, tmp_path, capsys):
        path = write_label(tmp_path / "ok.json", make_label())
        assert main(["validate", path]) == 0
        assert "no violations" in capsys.readouterr().out

    def test_overlong_application_exits_1(self, tmp_path, capsys):
        label = make_label(application="Predicts risk. Also ranks people.")
        path = write_label(tmp_path / "overlong.json", label)
        assert main(["validate", path]) == 1
        out = capsys.readouterr().out
        assert "APPLICATION_TOO_LONG" in out

    def test_json_output(self, tmp_path, capsys):
        label = make_label(application="Predicts risk. Also ranks people.")
        path = write_label(tmp_path / "overlong.json", label)
        assert main(["validate", path, "--json"]) == 1
        doc = json.loads(capsys.readouterr().out)
        assert doc["ok"] is False
        assert doc["violations"][0]["code"] == "APPLICATION_TOO_LONG"

    def test_budget_flags(self, tmp_path, capsys):
        path = write_label(tmp_path / "ok.json", make_label())
        assert main(["validate", path, "--max-lines", "24", "--width", "64"]) == 1
        assert "PAGE_OVERFLOW" in capsys.readouterr().out

    def test_malformed_label_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        assert main(["validate", str(bad)]) == 2
        assert "SCHEMA_ERROR" in capsys.readouterr().err


class TestCompare:
    def test_compare_goldens(self, capsys):
        assert main(["compare", str(GOLDEN_DIR / "void.label.json"),
                     str(GOLDEN_DIR / "suicide_risk.label.json")]) == 0
        out = capsys.readouterr().out
        assert out.index("void.label.json") < out.index("suicide_risk.label.json")
        assert "caveat:" in out

    def test_compare_json(self, capsys):
        assert main(["compare", "--json", str(GOLDEN_DIR / "void.label.json"),
                     str(GOLDEN_DIR / "suicide_risk.label.json")]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert [Path(p).name for p in doc["ranking"]] == [
            "void.label.json", "suicide_risk.label.json"]
        assert doc["entries"][0]["optimized"]["raw_score"]["value"] == 0.939


class TestAudit:
    def test_void_audit_unauditable(self, reference_file, capsys):
        assert main(["audit", str(GOLDEN_DIR / "void.label.json"),
                     "--reference", reference_file]) == 0
        out = capsys.readouterr().out
        assert "unauditable" in out
        assert "0 group(s) flagged" in out

    def test_strict_flags_exit_1(self, tmp_path, reference_file, capsys):
        from test_assemble import label_with_gender_shares

        path = write_label(tmp_path / "gap.json", label_with_gender_shares(60.0))
        assert main(["audit", path, "--reference", reference_file, "--strict"]) == 1
        out = capsys.readouterr().out
        assert "FLAG" in out or "flagged" in out

    def test_threshold_override(self, tmp_path, reference_file, capsys):
        from test_assemble import label_with_gender_shares

        path = write_label(tmp_path / "gap.json", label_with_gender_shares(60.0))
        assert main(["audit", path, "--reference", reference_file,
                     "--threshold-pp", "15", "--strict"]) == 0

    def test_audit_json(self, tmp_path, reference_file, capsys):
        from test_assemble import label_with_gender_shares

        path = write_label(tmp_path / "gap.json", label_with_gender_shares(60.0))
        assert main(["audit", path, "--reference", reference_file, "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        female = next(e for e in doc["entries"] if e["group"] == "Female")
        assert female["gap_pp"] == pytest.approx(10.0)
        assert female["flagged"] is True
        # Male sits at 40% against a 48% reference, so it is flagged too
        assert doc["flag_count"] == 2

    def test_no_overlap_exits_2(self, tmp_path, capsys):
        ref = tmp_path / "ref.json"
        ref.write_text(json.dumps({"name": "x", "categories": {"Creed": {"A": 100.0}}}))
        assert main(["audit", str(GOLDEN_DIR / "void.label.json"),
                     "--reference", str(ref)]) == 2
        assert "NO_OVERLAP" in capsys.readouterr().err
