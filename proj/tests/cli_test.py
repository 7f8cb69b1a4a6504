#!/usr/bin/env python3
"""End-to-end checks of the rfa command-line tool.

Usage: cli_test.py <path-to-rfa> <source-dir>
"""

import json
import pathlib
import subprocess
import sys
import tempfile
import unittest

try:
    import jsonschema
except ImportError:
    jsonschema = None

RFA = None
SRC = None


def run(*args, check=None):
    proc = subprocess.run([RFA, *map(str, args)], capture_output=True, text=True)
    if check is not None and proc.returncode != check:
        raise AssertionError(
            f"rfa {' '.join(map(str, args))}: exit {proc.returncode}, expected {check}\n{proc.stderr}"
        )
    return proc


def fixtures():
    return sorted((SRC / "fixtures").glob("*.rfa"))


class ExitCodes(unittest.TestCase):
    def test_imin_vgg19(self):
        proc = run("imin", SRC / "fixtures/vgg19.rfa", check=0)
        self.assertEqual(proc.stdout.strip(), "268x268")

    def test_check_passes(self):
        run("check", SRC / "fixtures/resnet18.rfa", "--input-res", "224x224", check=0)

    def test_check_fails(self):
        proc = run("check", SRC / "fixtures/mobilenet_v1.rfa", "--input-res", "224x224", check=3)
        self.assertIn("not fully utilized", proc.stdout)
        self.assertEqual(proc.stderr, "")

    def test_usage_errors(self):
        run(check=1)
        run("frobnicate", check=1)
        run("analyze", SRC / "fixtures/vgg11.rfa", "--input-res", "wide", check=1)
        run("refine", SRC / "fixtures/vgg11.rfa", "--strategy", "magic", check=1)

    def test_ingestion_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            bad = pathlib.Path(tmp) / "bad.rfa"
            bad.write_text("this is not a model\n")
            proc = run("imin", bad, check=2)
            self.assertEqual(proc.stdout, "")
            self.assertIn("SyntaxError", proc.stderr)
            junk = pathlib.Path(tmp) / "junk.onnx"
            junk.write_bytes(b"\xff\xfe\x00garbage")
            run("imin", junk, check=2)
        run("imin", SRC / "fixtures/does_not_exist.rfa", check=2)


class Output(unittest.TestCase):
    @unittest.skipIf(jsonschema is None, "jsonschema not installed")
    def test_json_validates_for_every_fixture(self):
        schema = json.loads((SRC / "schema/report.schema.json").read_text())
        validator = jsonschema.Draft202012Validator(schema)
        models = fixtures() + [SRC / "fixtures/onnx/mobilenet_v2.onnx"]
        for model in models:
            with self.subTest(model=model.name):
                doc = json.loads(run("analyze", model, "--format", "json", check=0).stdout)
                validator.validate(doc)
        for strategy in ("stride", "prune"):
            with self.subTest(strategy=strategy):
                proc = run("refine", SRC / "fixtures/mobilenet_v1.rfa", "--input-res", "224x224",
                           "--strategy", strategy, "--format", "json", check=0)
                doc = json.loads(proc.stdout)
                self.assertIn("proposals", doc)
                validator.validate(doc)

    def test_deterministic(self):
        for model in fixtures()[:5]:
            a = run("analyze", model, "--format", "json", check=0).stdout
            b = run("analyze", model, "--format", "json", check=0).stdout
            self.assertEqual(a, b)
            self.assertTrue(a.endswith("}\n"))

    def test_format_from_extension(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = pathlib.Path(tmp)
            model = SRC / "fixtures/vgg16.rfa"
            run("analyze", model, "--out", tmp / "r.dot", check=0)
            self.assertTrue((tmp / "r.dot").read_text().startswith("digraph"))
            run("analyze", model, "--out", tmp / "r.json", check=0)
            self.assertEqual(json.loads((tmp / "r.json").read_text())["i_min"], [212, 212])
            run("analyze", model, "--out", tmp / "r.json.txt", "--format", "json", check=0)
            json.loads((tmp / "r.json.txt").read_text())

    def test_text_default(self):
        out = run("analyze", SRC / "fixtures/resnet50.rfa", check=0).stdout
        self.assertIn("96x96", out)


class Refine(unittest.TestCase):
    def emitted_imin_matches(self, model, res, strategy):
        with tempfile.TemporaryDirectory() as tmp:
            out = pathlib.Path(tmp) / "refined.rfa"
            proc = run("refine", model, "--input-res", res, "--strategy", strategy,
                       "--format", "json", "--emit-dsl", out, check=0)
            predicted = json.loads(proc.stdout)["proposals"][0]["predicted_imin"]
            measured = run("imin", out, check=0).stdout.strip()
            self.assertEqual(measured, f"{predicted[0]}x{predicted[1]}")

    def test_emit_dsl_reproduces_prediction(self):
        cases = [
            ("mobilenet_v1.rfa", "224x224", "stride"),
            ("mobilenet_v1.rfa", "224x224", "prune"),
            ("mobilenet_v3_small.rfa", "224x224", "stride"),
            ("nasnet_a_mobile.rfa", "224x224", "stride"),
            ("resnet18.rfa", "128x128", "prune"),
        ]
        for name, res, strategy in cases:
            with self.subTest(model=name, strategy=strategy):
                self.emitted_imin_matches(SRC / "fixtures" / name, res, strategy)

    def test_nothing_to_refine(self):
        run("refine", SRC / "fixtures/resnet18.rfa", "--input-res", "224x224", check=2)


class Convert(unittest.TestCase):
    def test_onnx_to_dsl(self):
        onnx = SRC / "fixtures/onnx/mobilenet_v2.onnx"
        with tempfile.TemporaryDirectory() as tmp:
            out = pathlib.Path(tmp) / "mv2.rfa"
            run("convert", onnx, "--to", "dsl", "--out", out, check=0)
            self.assertTrue(out.read_text().startswith("model "))
            self.assertEqual(run("imin", out, check=0).stdout, run("imin", onnx, check=0).stdout)

    def test_dsl_round_trip(self):
        for model in fixtures():
            with self.subTest(model=model.name):
                text = run("convert", model, "--to", "dsl", check=0).stdout
                with tempfile.TemporaryDirectory() as tmp:
                    copy = pathlib.Path(tmp) / model.name
                    copy.write_text(text)
                    self.assertEqual(run("imin", copy, check=0).stdout, run("imin", model, check=0).stdout)


if __name__ == "__main__":
    RFA = sys.argv[1]
    SRC = pathlib.Path(sys.argv[2])
    unittest.main(argv=sys.argv[:1], verbosity=2)
