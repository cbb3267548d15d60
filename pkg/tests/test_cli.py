"""
Testes da linha de comando: codigos de saida, payload JSON e artefatos
"""

import json
import os
import shutil
import tempfile
import unittest

from click.testing import CliRunner

from app import cli


class TestCli(unittest.TestCase):
    """Testes pros subcomandos"""

    def setUp(self):
        """Configuração inicial para cada teste"""
        self.runner = CliRunner(mix_stderr=False)
        self.out = tempfile.mkdtemp()
        self.env = {
            "KAMTORUS_GRID__SIZE": "16,16",
            "KAMTORUS_BOUNDS__SAMPLES": "200",
        }

    def tearDown(self):
        shutil.rmtree(self.out, ignore_errors=True)

    def invoke(self, *args, **env):
        """Roda o comando e devolve (exit_code, payload)"""
        environ = dict(self.env)
        environ.update({f"KAMTORUS_{key}": value for key, value in env.items()})
        result = self.runner.invoke(cli, ["--out", self.out, *args], env=environ)
        return result.exit_code, json.loads(result.stdout)

    def artifact(self, name):
        return os.path.join(self.out, name)

    def test_constants(self):
        """Testa o livro-razão sem toro"""
        code, payload = self.invoke("constants")
        self.assertEqual(code, 0)
        self.assertTrue(payload["success"])
        self.assertTrue(payload["data"]["delta_auto"])
        self.assertIn("C_theoDeltaK", payload["data"]["trace"])
        self.assertTrue(os.path.exists(self.artifact("constants.json")))

    def test_solve_exact(self):
        """Testa solve com epsilon = 0"""
        code, payload = self.invoke("solve")
        self.assertEqual(code, 0)
        self.assertEqual(payload["data"]["verdict"], "converged")
        for name in ("iterations.jsonl", "torus.fmd", "torus.csv", "summary.json"):
            self.assertTrue(os.path.exists(self.artifact(name)), name)
        with open(self.artifact("summary.json"), "r", encoding="utf-8") as stream:
            summary = json.load(stream)
        self.assertIn("timestamp", summary["header"])

    def test_solve_diverges(self):
        """Testa solve com acoplamento grande"""
        code, payload = self.invoke("solve", SYSTEM__EPSILON="0.5")
        self.assertEqual(code, 2)
        self.assertFalse(payload["success"])
        self.assertTrue(os.path.exists(self.artifact("torus.fmd")))

    def test_certify_pass(self):
        """Testa certify com erro limpo no toro exato"""
        code, payload = self.invoke("certify", CERTIFICATE__CLEAN_THRESHOLD="1e-13")
        self.assertEqual(code, 0)
        self.assertTrue(payload["data"]["pass"])
        self.assertFalse(payload["data"]["rigorous"])
        self.assertTrue(os.path.exists(self.artifact("report.json")))
        self.assertTrue(os.path.exists(self.artifact("ledger.json")))

    def test_certify_fail(self):
        """Testa certify de um toro que nao é invariante"""
        code, _ = self.invoke("solve")
        self.assertEqual(code, 0)
        code, payload = self.invoke("certify", "--torus", self.artifact("torus.fmd"), SYSTEM__EPSILON="0.1")
        self.assertEqual(code, 1)
        self.assertFalse(payload["data"]["pass"])

    def test_certify_csv_artifact(self):
        """Testa certify lendo o CSV de coeficientes"""
        self.invoke("solve")
        code, _ = self.invoke("certify", "--torus", self.artifact("torus.csv"), CERTIFICATE__CLEAN_THRESHOLD="1e-13")
        self.assertEqual(code, 0)

    def test_hypothesis_violation(self):
        """Testa sigma_B abaixo da norma medida"""
        code, payload = self.invoke("certify", SIGMA__B="0.02")
        self.assertEqual(code, 3)
        self.assertEqual(payload["kind"], "HypothesisError")

    def test_missing_torus(self):
        """Testa --torus apontando pra um arquivo inexistente"""
        code, payload = self.invoke("certify", "--torus", self.artifact("nada.fmd"))
        self.assertEqual(code, 3)
        self.assertEqual(payload["kind"], "ConfigError")

    def test_unknown_config_key(self):
        """Testa chave desconhecida no arquivo de configuração"""
        path = self.artifact("run.env")
        os.makedirs(self.out, exist_ok=True)
        with open(path, "w", encoding="utf-8") as stream:
            stream.write("solver.speed=3\n")
        result = self.runner.invoke(cli, ["--config", path, "--out", self.out, "solve"], env=self.env)
        self.assertEqual(result.exit_code, 3)
        self.assertEqual(json.loads(result.stdout)["kind"], "ConfigError")

    def test_bench_without_scenarios(self):
        """Testa o bench sem cenarios e sem varredura"""
        code, payload = self.invoke("bench", BENCH__EPSILONS="", BENCH__DELTA_STEPS="0")
        self.assertEqual(code, 0)
        self.assertEqual(payload["data"]["scenarios"], [])
        self.assertIsNone(payload["data"]["delta_scan_minimum"])
        self.assertTrue(os.path.exists(self.artifact("bench.csv")))

    def test_bench_delta_scan(self):
        """Testa que o minimo de a/delta fica perto de (rho - rho_inf)/6"""
        code, payload = self.invoke("bench", BENCH__EPSILONS="", BENCH__DELTA_STEPS="60")
        self.assertEqual(code, 0)
        minimum = payload["data"]["delta_scan_minimum"]["delta"]
        step = 0.02 / 61
        self.assertLessEqual(abs(minimum - payload["data"]["optimal_delta"]), step)
        with open(self.artifact("delta_scan.csv"), "r", encoding="utf-8") as stream:
            self.assertEqual(len(stream.read().splitlines()), 61)

    def test_lift_rotational(self):
        """Testa o levantamento da familia rotacional"""
        code, payload = self.invoke(
            "lift", SYSTEM__NAME="rotational", SYSTEM__RADII="1,1,1", SYSTEM__B="1,1,1",
        )
        self.assertEqual(code, 0)
        self.assertIsNotNone(payload["data"]["torus"])
        self.assertTrue(os.path.exists(self.artifact("lift_slices.csv")))

    def test_lift_without_moments(self):
        """Testa lift num sistema sem integrais extras"""
        code, payload = self.invoke("lift")
        self.assertEqual(code, 3)
        self.assertEqual(payload["kind"], "ConfigError")


if __name__ == "__main__":
    unittest.main()
