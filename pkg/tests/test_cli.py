import json
from pathlib import Path

import numpy as np

from mmdist.cli import main
from mmdist.documents import (dumps_document, load_space, loads_document,
                              save_space, space_from_document, space_to_document)
from mmdist.generate import generate
from mmdist.report import reevaluate_report

CORPUS = Path(__file__).resolve().parents[1] / "corpus"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestGen:
    def test_line_three_distances(self, tmp_path, capsys):
        out = tmp_path / "line3.json"
        code, _, _ = run_cli(capsys, "gen", "line", "3", "-o", str(out))
        assert code == 0
        space = load_space(out)
        assert space.dist[0, 1] == 1.0
        assert space.dist[1, 2] == 1.0
        assert space.dist[0, 2] == 2.0
        assert np.allclose(space.mass, 1.0 / 3.0)

    def test_random_is_deterministic_per_seed(self, capsys):
        code1, out1, _ = run_cli(capsys, "gen", "random", "4", "--seed", "7")
        code2, out2, _ = run_cli(capsys, "gen", "random", "4", "--seed", "7")
        assert code1 == code2 == 0
        assert out1 == out2
        _, out3, _ = run_cli(capsys, "gen", "random", "4", "--seed", "8")
        assert out3 != out1

    def test_generated_documents_validate(self, capsys):
        for kind, n in (("random", 5), ("cycle", 5), ("line", 4), ("cube", 3)):
            _, out, _ = run_cli(capsys, "gen", kind, str(n))
            space_from_document(loads_document(out))

    def test_invalid_size_is_input_error(self, capsys):
        code, _, err = run_cli(capsys, "gen", "line", "0")
        assert code == 2
        assert "error" in err


class TestDocuments:
    def test_round_trip_is_bit_exact(self, tmp_path):
        space = generate("random", 5, seed=3)
        doc = space_to_document(space, "roundtrip")
        text = dumps_document(doc)
        assert loads_document(text) == doc
        assert dumps_document(loads_document(text)) == text

    def test_save_load(self, tmp_path):
        space = generate("cycle", 4)
        save_space(space, "c4", tmp_path / "c4.json")
        back = load_space(tmp_path / "c4.json")
        assert np.array_equal(back.dist, space.dist)
        assert np.array_equal(back.mass, space.mass)

    def test_asymmetric_matrix_rejected(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({
            "name": "bad", "labels": ["a", "b"],
            "dist": [[0, 1], [2, 0]], "mass": [0.5, 0.5]}), encoding="utf-8")
        code, _, err = run_cli(capsys, "dist", "box", str(bad), str(CORPUS / "p1.json"))
        assert code == 2
        assert "symmetric" in err


class TestDist:
    def test_box_exact_value_and_certificate(self, capsys):
        code, out, _ = run_cli(capsys, "dist", "box", str(CORPUS / "x2.json"),
                               str(CORPUS / "p1.json"), "--exact", "--format", "json")
        assert code == 0
        rep = json.loads(out)
        assert abs(rep["value"] - 0.5) < 1e-9
        x = load_space(CORPUS / "x2.json")
        y = load_space(CORPUS / "p1.json")
        assert abs(reevaluate_report(rep, x, y) - 0.5) < 1e-9

    def test_box_self_distance_zero(self, capsys):
        code, out, _ = run_cli(capsys, "dist", "box", str(CORPUS / "x2.json"),
                               str(CORPUS / "x2.json"), "--exact", "--format", "json")
        assert code == 0
        assert json.loads(out)["value"] <= 1e-9

    def test_dconc_bracket_with_unique_coupling_flag(self, capsys):
        code, out, _ = run_cli(capsys, "dist", "dconc", str(CORPUS / "x2.json"),
                               str(CORPUS / "p1.json"), "--format", "json")
        assert code == 0
        rep = json.loads(out)
        assert abs(rep["lower"] - 0.5) < 1e-9
        assert abs(rep["upper"] - 0.5) < 1e-9
        assert rep["mode"] == "exact (unique coupling)"

    def test_prohorov_requires_one_space(self, capsys):
        code, _, err = run_cli(capsys, "dist", "prohorov", str(CORPUS / "x2.json"),
                               str(CORPUS / "p1.json"))
        assert code == 2
        assert "metric space" in err

    def test_eurandom_exact_demand_beyond_budget_exits_3(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run_cli(capsys, "gen", "random", "5", "--seed", "1", "-o", str(a))
        run_cli(capsys, "gen", "random", "5", "--seed", "2", "-o", str(b))
        code, _, err = run_cli(capsys, "dist", "eurandom", str(a), str(b), "--exact")
        assert code == 3
        assert "budget" in err

    def test_missing_file_exits_2(self, capsys):
        code, _, _ = run_cli(capsys, "dist", "box", "nope.json", "also-nope.json")
        assert code == 2


class TestCheck:
    def test_small_axiom_suite_passes(self, capsys):
        code, out, _ = run_cli(capsys, "check", "axioms", "--scale", "0.05",
                               "--corpus", str(CORPUS))
        assert code == 0
        assert "[PASS]" in out and "[FAIL]" not in out

    def test_corrupt_corpus_exits_2(self, tmp_path, capsys):
        (tmp_path / "bad.json").write_text("{not json", encoding="utf-8")
        code, _, err = run_cli(capsys, "check", "axioms", "--corpus", str(tmp_path))
        assert code == 2
        assert "JSON" in err or "error" in err

    def test_json_format_lines(self, capsys):
        code, out, _ = run_cli(capsys, "check", "axioms", "--scale", "0.02",
                               "--format", "json")
        assert code == 0
        for line in out.strip().splitlines():
            assert json.loads(line)["status"] == "PASS"
