#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests de la configuration d'exécution et de la ligne de commande
"""

import json
import sys
import tempfile
import unittest
from pathlib import Path

# Ajout du chemin du projet au PYTHONPATH
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from config.run_config import RunConfig, load_run_config
from core.errors import InvalidConfigError
from main import EXIT_INVALID, EXIT_OK, run
from utils.common import config_hash, safe_json_load

SMALL_RUN = {
    "domain": {"h": 0.5},
    "grid": {"dt": 0.05, "T": 0.2},
    "tolerances": {"hypothesis_samples": 20}
}


def write_config(directory, content):
    path = Path(directory) / "run.json"
    path.write_text(json.dumps(content), encoding="utf-8")
    return str(path)


class TestRunConfig(unittest.TestCase):
    """Schéma du fichier JSON"""

    def test_defaults(self):
        config = RunConfig()
        self.assertEqual(config.schema_version, 1)
        self.assertEqual(config.commands, ["verify"])
        self.assertEqual(config.coefficients.preset, "constant")

    def test_load_small_run(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            config = load_run_config(write_config(temp_dir, SMALL_RUN))
        self.assertEqual(config.domain.h, 0.5)
        self.assertEqual(config.grid.dt, 0.05)

    def test_unknown_key(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            with self.assertRaises(InvalidConfigError):
                load_run_config(write_config(temp_dir, {"domain": {"h": 0.5, "mesh": "fine"}}))

    def test_custom_without_expressions(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            with self.assertRaises(InvalidConfigError):
                load_run_config(write_config(temp_dir, {"coefficients": {"preset": "custom"}}))

    def test_refinement_steps(self):
        self.assertEqual(RunConfig().domain.refinement_h, [0.25, 0.125, 0.0625])
        with tempfile.TemporaryDirectory() as temp_dir:
            with self.assertRaises(InvalidConfigError):
                load_run_config(write_config(temp_dir, {"domain": {"refinement_h": [0.125, 0.25]}}))
            with self.assertRaises(InvalidConfigError):
                load_run_config(write_config(temp_dir, {"domain": {"refinement_h": [0.25]}}))

    def test_missing_and_malformed_files(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            with self.assertRaises(InvalidConfigError):
                load_run_config(Path(temp_dir) / "absent.json")
            broken = Path(temp_dir) / "broken.json"
            broken.write_text("{", encoding="utf-8")
            with self.assertRaises(InvalidConfigError):
                load_run_config(broken)

    def test_hash_is_canonical(self):
        first = config_hash({"a": 1, "b": [1, 2]})
        self.assertEqual(first, config_hash({"b": [1, 2], "a": 1}))
        self.assertNotEqual(first, config_hash({"a": 2, "b": [1, 2]}))
        self.assertEqual(len(first), 64)


class TestCommandLine(unittest.TestCase):
    """Codes de sortie et fichiers produits"""

    def test_assemble(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            out = Path(temp_dir) / "out"
            code = run(["assemble", "--config", write_config(temp_dir, SMALL_RUN), "--out", str(out),
                        "--threads", "2"])
            self.assertEqual(code, EXIT_OK)
            ok, manifest = safe_json_load(out / "manifest.json")
            self.assertTrue(ok)
            self.assertEqual(manifest["status"], "success")
            self.assertEqual(manifest["commands"], ["assemble"])
            self.assertIn("forms.csv", manifest["files"])
            self.assertTrue((out / "mesh_nodes.txt").exists())

    def test_evolve(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            out = Path(temp_dir) / "out"
            code = run(["evolve", "--config", write_config(temp_dir, SMALL_RUN), "--out", str(out)])
            self.assertEqual(code, EXIT_OK)
            for name in ("trajectory.csv", "contraction.csv", "positivity.csv"):
                self.assertTrue((out / name).exists(), name)
            header = (out / "trajectory.csv").read_text(encoding="utf-8").splitlines()[0]
            self.assertEqual(header, "t,l1,l2,linf,min,energy")

    def test_deterministic_outputs(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            config = write_config(temp_dir, SMALL_RUN)
            contents = []
            for name in ("a", "b"):
                out = Path(temp_dir) / name
                self.assertEqual(run(["assemble", "--config", config, "--out", str(out), "--deterministic"]),
                                 EXIT_OK)
                contents.append((out / "forms.csv").read_bytes())
            self.assertEqual(contents[0], contents[1])

    def test_exponent_constraint_exit_code(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            content = {**SMALL_RUN, "exponents": {"s": 0.4}}
            code = run(["assemble", "--config", write_config(temp_dir, content),
                        "--out", str(Path(temp_dir) / "out")])
            self.assertEqual(code, EXIT_INVALID)

    def test_missing_config(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            self.assertEqual(run(["assemble", "--config", str(Path(temp_dir) / "absent.json")]), EXIT_INVALID)

    def test_negative_seed(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            code = run(["assemble", "--config", write_config(temp_dir, SMALL_RUN), "--seed", "-1"])
            self.assertEqual(code, EXIT_INVALID)

    def test_unknown_subcommand(self):
        with self.assertRaises(SystemExit):
            run(["train", "--config", "run.json"])


if __name__ == "__main__":
    unittest.main()
