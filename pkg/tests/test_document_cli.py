"""Document round trips and the command-line surface."""

import json
import os
import subprocess
import sys
from importlib import resources
from pathlib import Path

import pytest

from orthokit.document import (
    DocumentBundle,
    bundle_to_document,
    canonicalize_file,
    document_to_bundle,
    load_document,
    save_document,
)
from orthokit.errors import MissingStructure, ParseError
from orthokit.cli import main
from orthokit.corpus import named


def fixture_paths():
    root = resources.files("orthokit").joinpath("fixtures")
    return sorted(str(p) for p in root.iterdir() if str(p).endswith(".json"))


FIXTURES = fixture_paths()
CHECK_FLAGS = [
    "--algebraic",
    "--coherent",
    "--regular",
    "--projective",
    "--unital",
    "--strongly-unital",
]


def run_cli(args):
    proc = subprocess.run(
        [sys.executable, "-m", "orthokit.cli", *args],
        capture_output=True,
        text=True,
    )
    return proc.returncode, proc.stdout, proc.stderr


class TestDocuments:
    @pytest.mark.parametrize("path", FIXTURES, ids=[Path(p).stem for p in FIXTURES])
    def test_round_trip_byte_identical(self, path):
        original = Path(path).read_text(encoding="utf-8")
        assert canonicalize_file(path) == original

    @pytest.mark.parametrize("path", FIXTURES, ids=[Path(p).stem for p in FIXTURES])
    def test_save_load_save(self, path, tmp_path):
        bundle = load_document(path)
        out = tmp_path / "copy.json"
        save_document(bundle, str(out))
        again = load_document(str(out))
        save_document(again, str(out))
        assert canonicalize_file(str(out)) == Path(path).read_text(encoding="utf-8")

    def test_rational_serialization(self, tmp_path):
        from fractions import Fraction as F

        from orthokit.states import Weight, generator_model
        from orthokit.testspace import build_test_space

        m = generator_model(
            build_test_space([["a", "b"]]),
            [Weight([F(1, 3), F(2, 3)]), Weight([F(1), F(0)])],
        )
        path = tmp_path / "m.json"
        save_document(DocumentBundle(m), str(path))
        doc = json.loads(path.read_text())
        entries = {frozenset(g.items()) for g in doc["states"]["generators"]}
        assert frozenset({("a", "1/3"), ("b", "2/3")}) in entries
        loaded = load_document(str(path))
        assert loaded.model.states.generators[0].values in {
            (F(1, 3), F(2, 3)),
            (F(1), F(0)),
        }

    def test_malformed_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ParseError):
            load_document(str(bad))
        bad.write_text(json.dumps({"format_version": "0"}))
        with pytest.raises(ParseError):
            load_document(str(bad))

    def test_missing_structure(self):
        bundle = load_document(FIXTURES[0])
        has_sigma = bundle.coherence is not None
        if not has_sigma:
            with pytest.raises(MissingStructure):
                bundle.require_coherence()

    def test_document_rejects_bad_product_semantics(self):
        doc = bundle_to_document(DocumentBundle(named("single-2")))
        doc["product"] = {"unit": "a", "semantics": "weird", "table": []}
        with pytest.raises(ParseError):
            document_to_bundle(doc)


def wright_path():
    return next(p for p in FIXTURES if p.endswith("wright.json"))


def classical_path():
    return next(p for p in FIXTURES if p.endswith("classical3.json"))


class TestCheckCommand:
    def test_projective_true_exit_zero(self):
        code, out, err = run_cli(["check", wright_path(), "--projective"])
        assert code == 0
        assert json.loads(out)["projective"]["holds"] is True

    def test_coherent_false_with_witness_exit_one(self):
        triangle = next(p for p in FIXTURES if p.endswith("triangle.json"))
        code, out, _ = run_cli(["check", triangle, "--coherent"])
        assert code == 1
        report = json.loads(out)
        assert report["coherent"]["holds"] is False
        assert report["coherent"]["witness"]

    def test_malformed_exit_two(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{oops")
        code, _, err = run_cli(["check", str(bad)])
        assert code == 2
        assert "error" in err

    def test_support_flag(self):
        code, out, _ = run_cli(["check", wright_path(), "--support", "q,x,y"])
        assert code == 0
        assert json.loads(out)["support"]["holds"] is True

    @pytest.mark.parametrize("path", FIXTURES, ids=[Path(p).stem for p in FIXTURES])
    @pytest.mark.parametrize("flag", CHECK_FLAGS)
    def test_matrix_matches_library(self, path, flag):
        from orthokit.errors import EnumerationCapExceeded

        code, out, _ = run_cli(["check", path, flag])
        name = flag.lstrip("-")
        bundle = load_document(path)
        model = bundle.model
        try:
            if name == "unital":
                expected = model.check_unital().holds
            elif name == "strongly-unital":
                expected = model.check_strongly_unital().holds
            elif name == "projective":
                expected = bool(model.space.projective())
            else:
                expected = bool(getattr(model.space, name)())
        except EnumerationCapExceeded:
            # the CLI must surface the same cap error as the library
            assert code == 2
            return
        report = json.loads(out)
        assert report[name]["holds"] == expected
        assert code == (0 if expected else 1)


class TestTransformCommand:
    def test_coarsen_ternary(self, tmp_path):
        single3 = next(p for p in FIXTURES if p.endswith("single3.json"))
        out_path = tmp_path / "c.json"
        code, _, _ = run_cli(
            ["transform", single3, "coarsen", "--out", str(out_path)]
        )
        assert code == 0
        doc = json.loads(out_path.read_text())
        assert len(doc["tests"]) == 5

    def test_logic_report(self):
        code, out, _ = run_cli(["transform", classical_path(), "logic"])
        assert code == 0
        report = json.loads(out)
        assert report["size"] == 8
        assert report["classification"] == {
            "orthoalgebra": True,
            "omp": True,
            "boolean": True,
        }

    def test_compound_depth_zero(self, tmp_path):
        single3 = next(p for p in FIXTURES if p.endswith("single3.json"))
        code, out, _ = run_cli(["transform", single3, "compound", "--depth", "0"])
        assert code == 0
        doc = json.loads(out)
        assert doc["tests"] == [["ε"]]

    def test_product_and_closure(self, tmp_path):
        semiclassical = next(
            p for p in FIXTURES if p.endswith("semiclassical-2x2.json")
        )
        code, out, _ = run_cli(["transform", semiclassical, "product", semiclassical])
        assert code == 0
        doc = json.loads(out)
        assert len(doc["outcomes"]) == 16
        code, out, _ = run_cli(["transform", wright_path(), "closure-lattice"])
        assert code == 0
        assert json.loads(out)["size"] >= 4

    def test_transform_output_reloads(self, tmp_path):
        out_path = tmp_path / "w2.json"
        code, _, _ = run_cli(
            ["transform", wright_path(), "coarsen", "--out", str(out_path)]
        )
        assert code == 0
        load_document(str(out_path))


class TestLawsCommand:
    def test_sharp_monad(self):
        code, out, _ = run_cli(["laws", wright_path(), "sharp-monad"])
        assert code == 0
        assert json.loads(out)["holds"] is True

    def test_distributive(self):
        code, out, _ = run_cli(
            ["laws", wright_path(), "distributive", "--depth", "2"]
        )
        assert code == 0

    def test_g_algebra(self):
        code, out, _ = run_cli(["laws", classical_path(), "g-algebra"])
        assert code == 0
        report = json.loads(out)
        assert report["holds"] and report["commutative"]

    def test_sequential(self):
        code, out, _ = run_cli(["laws", classical_path(), "sequential"])
        assert code == 0

    def test_missing_structure_exit_two(self):
        code, _, err = run_cli(["laws", wright_path(), "g-algebra"])
        assert code == 2
        assert "coherence" in err


class TestInterferenceCommand:
    def test_qubit_preset_gap(self):
        code, out, _ = run_cli(["interference", "qubit-mz"])
        assert code == 0
        report = json.loads(out)
        gaps = {w["witness"]: w["gap"] for w in report if w["state"] == 0}
        assert abs(gaps["plus"] - 0.5) < 1e-9

    def test_classical_empty(self):
        code, out, _ = run_cli(["interference", classical_path()])
        assert code == 0
        assert json.loads(out) == []

    def test_tolerance_filters(self):
        code, out, _ = run_cli(["interference", "qubit-mz", "--tolerance", "1.0"])
        assert code == 0
        assert json.loads(out) == []

    def test_spin_presets(self):
        for preset in ("spin1", "spin32"):
            code, out, _ = run_cli(["interference", preset])
            assert code == 0
            assert json.loads(out)


def test_cap_env_override(tmp_path):
    single3 = next(p for p in FIXTURES if p.endswith("single3.json"))
    env = dict(os.environ, ORTHOKIT_CAP="2")
    proc = subprocess.run(
        [sys.executable, "-m", "orthokit.cli", "laws", single3, "sharp-monad"],
        capture_output=True,
        text=True,
        env=env,
    )
    assert proc.returncode == 2
    assert "cap" in proc.stderr


def test_main_entry_usage_error():
    assert main(["transform", wright_path(), "product"]) == 2
