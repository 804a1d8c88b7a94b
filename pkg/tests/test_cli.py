"""
Tests for the command-line interface and the acceptance suite.
"""

import json
import re

import pytest

import causalforge.equivalence
from causalforge.checks import CheckResult, check_pc_equivalence, run_checks, summarize
from causalforge.cli import main
from causalforge.config import load_config
from causalforge.dataset import CorpusBuilder, read_records


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    """A 2..3 node corpus written by `causalforge generate`."""
    out = tmp_path_factory.mktemp("corpus")
    code = main(
        [
            "generate",
            "--n-min", "2",
            "--n-max", "3",
            "--out", str(out),
            "--format", "jsonl",
            "--format", "csv",
            "--perturb", "refactor",
            "--perturb", "paraphrase",
        ]
    )
    assert code == 0
    return out


def test_generate_writes_all_outputs(generated):
    """Tests the corpus files, perturbed copies, stats and manifest."""
    lines = (generated / "corpus.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 204
    assert len(read_records(generated / "corpus.csv")) == 204
    manifest = json.loads((generated / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["records"] == 204
    assert set(manifest["files"]) == {
        "corpus.jsonl",
        "corpus.csv",
        "test.refactor.jsonl",
        "test.paraphrase.jsonl",
        "stats.json",
    }
    report = json.loads((generated / "stats.json").read_text(encoding="utf-8"))
    assert report["by_nodes"]["2"]["samples"] == 24


def test_generate_two_nodes_has_no_valid_labels(tmp_path):
    assert main(["generate", "--n-min", "2", "--n-max", "2", "--out", str(tmp_path)]) == 0
    records = read_records(tmp_path / "corpus.jsonl")
    assert len(records) == 24
    assert {r.label for r in records} == {0}


def test_generate_is_reproducible(generated, tmp_path):
    """Tests that a second run with the same seed produces identical files."""
    args = ["generate", "--n-min", "2", "--n-max", "3", "--out", str(tmp_path), "--format", "jsonl", "--format", "csv"]
    args += ["--perturb", "refactor", "--perturb", "paraphrase"]
    assert main(args) == 0
    first = json.loads((generated / "manifest.json").read_text(encoding="utf-8"))["files"]
    second = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))["files"]
    assert first == second


def test_refactored_test_split(generated):
    """Tests that no original variable name survives refactoring."""
    original = [r for r in read_records(generated / "corpus.jsonl") if r.split == "test"]
    refactored = read_records(generated / "test.refactor.jsonl")
    assert len(refactored) == len(original)
    assert [r.label for r in refactored] == [r.label for r in original]
    for r in refactored:
        assert r.perturbation == "refactor"
        assert not re.search(r"\b[A-F]\b", r.premise + " " + r.hypothesis)


def test_perturb_command(generated, tmp_path):
    out = tmp_path / "dev.paraphrase.jsonl"
    assert main(["perturb", "--in", str(generated / "corpus.jsonl"), "--kind", "paraphrase", "--split", "dev", "--out", str(out)]) == 0
    records = read_records(out)
    assert records and all(r.perturbation == "paraphrase" and r.split == "dev" for r in records)


def test_stats_command(generated, capsys):
    assert main(["stats", "--in", str(generated / "corpus.jsonl")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["overall"]["samples"] == 204
    assert report["by_nodes"]["3"]["test"] == 90


def test_pmi_command(generated, tmp_path, capsys):
    tsv = tmp_path / "pmi.tsv"
    assert main(["pmi", "--in", str(generated / "corpus.jsonl"), "--field", "hypothesis", "--top", "5", "--out", str(tsv)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 6
    assert tsv.read_text(encoding="utf-8").startswith("ngram\tpmi_neg\tpmi_pos\tabs_diff\n")


def test_score_command(generated, tmp_path, capsys):
    """Tests baseline and file scoring of the test split."""
    assert main(["score", "--gold", str(generated / "corpus.jsonl"), "--baseline", "majority"]) == 0
    metrics = json.loads(capsys.readouterr().out)
    test = [r for r in read_records(generated / "corpus.jsonl") if r.split == "test"]
    rate = 100.0 * sum(r.label for r in test) / len(test)
    assert metrics["accuracy"] == pytest.approx(100.0 - rate)

    predictions = tmp_path / "pred.jsonl"
    predictions.write_text("".join(json.dumps({"id": r.id, "label": r.label}) + "\n" for r in test), encoding="utf-8")
    out = tmp_path / "metrics.json"
    code = main(
        ["score", "--gold", str(generated / "corpus.jsonl"), "--predictions", str(predictions), "--by-relation", "--out", str(out)]
    )
    assert code == 0
    assert json.loads(out.read_text(encoding="utf-8"))["accuracy"] == pytest.approx(100.0)
    assert "Has-Collider" in capsys.readouterr().out


def test_errors_exit_with_status_one(generated, tmp_path, capsys):
    """Tests that input errors print a message and return 1."""
    assert main(["stats", "--in", str(tmp_path / "missing.jsonl")]) == 1
    assert "causalforge: error:" in capsys.readouterr().err
    gold = str(generated / "corpus.jsonl")
    assert main(["score", "--gold", gold]) == 1
    assert "exactly one of" in capsys.readouterr().err
    assert main(["generate", "--n-min", "3", "--n-max", "2", "--out", str(tmp_path)]) == 1
    assert "Invalid node range" in capsys.readouterr().err
    args = ["generate", "--n-min", "2", "--n-max", "7", "--max-nodes", "7", "--out", str(tmp_path / "big")]
    assert main(args) == 1
    assert "resource limit" in capsys.readouterr().err
    assert not (tmp_path / "big").exists()


def test_pc_check_command(capsys):
    assert main(["pc-check", "--n-max", "4"]) == 0
    assert "[PASS] PC-CPDAG equivalence" in capsys.readouterr().out


def test_run_checks_small_range():
    """Tests that the suite passes on 2..4 nodes."""
    results = run_checks(load_config(n_min=2, n_max=4))
    names = [r.name for r in results]
    assert "MEC count n=4 == 20" in names
    assert "corpus size n=4 == 1440" in names
    assert "valid labels n=4 == 110" in names
    by_name = {r.name: r for r in results}
    assert by_name["reference valid labels n=4 == 7.50%"].status == "WARN"
    assert by_name["reference MEC count n=4 == 20"].status == "PASS"
    passed, failed, _ = summarize(results)
    assert failed == 0, [f"{r.name}: {r.detail}" for r in results if r.status == "FAIL"]
    assert passed > 0


def test_pc_check_detects_broken_orientation_rules(monkeypatch):
    """Tests that disabling orientation propagation fails the PC criterion."""

    def no_closure(n, directed, undirected):
        return frozenset(directed), frozenset((min(a, b), max(a, b)) for a, b in undirected)

    monkeypatch.setattr(causalforge.equivalence, "meek_closure", no_closure)
    result = check_pc_equivalence(CorpusBuilder(max_nodes=4), 4)
    assert not result.passed
    assert result.status == "FAIL"


def test_check_result_status():
    assert CheckResult("x", True).status == "PASS"
    assert CheckResult("x", False).status == "FAIL"
    assert CheckResult("x", False, hard=False).status == "WARN"
    assert summarize([CheckResult("a", True), CheckResult("b", False), CheckResult("c", False, hard=False)]) == (1, 1, 1)


@pytest.mark.slow
def test_full_check_suite():
    """Tests the whole suite on the default 2..6 range."""
    results = run_checks(load_config())
    by_name = {r.name: r for r in results}
    assert by_name["MEC count n=6 == 2201"].status == "PASS"
    assert by_name["corpus size total == 414864"].status == "PASS"
    assert by_name["reference MEC count n=6 == 2207"].status == "WARN"
    assert summarize(results)[1] == 0
