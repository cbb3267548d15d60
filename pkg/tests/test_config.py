"""
Testes unitarios da configuração
"""

import os
import tempfile
import unittest

from config import RunConfig
from models.errors import ConfigError


class TestRunConfig(unittest.TestCase):
    """Testes pra leitura e validação da configuração"""

    def setUp(self):
        """Configuração inicial para cada teste"""
        self.environ = {}

    def test_defaults(self):
        """Testa os padrões resolvidos"""
        run_config = RunConfig.load(environ=self.environ)
        self.assertEqual(run_config.profile, "default")
        self.assertAlmostEqual(run_config["strip.delta"], 0.01, places=15)
        self.assertTrue(run_config["strip.delta_auto"])
        self.assertEqual(run_config["grid.size"], (32, 32))
        self.assertEqual(run_config["grid.cutoffs"], (15, 15))
        self.assertEqual(run_config["diophantine.k_max"], 120)
        self.assertEqual(run_config.bound_overrides(), {})

    def test_k_max_follows_cutoffs(self):
        """Testa k_max padrão igual a 4 vezes a soma dos cortes"""
        run_config = RunConfig.load(environ=self.environ, overrides={"grid.cutoffs": "5,6"})
        self.assertEqual(run_config["diophantine.k_max"], 44)
        explicit = RunConfig.load(environ={"KAMTORUS_DIOPHANTINE__K_MAX": "200"})
        self.assertEqual(explicit["diophantine.k_max"], 200)

    def test_environment_override(self):
        """Testa variaveis KAMTORUS_<SECAO>__<CHAVE>"""
        environ = {"KAMTORUS_SYSTEM__EPSILON": "0.25", "KAMTORUS_BOUNDS__C_XH": "4.0", "OTHER": "x"}
        run_config = RunConfig.load(environ=environ)
        self.assertEqual(run_config["system.epsilon"], 0.25)
        self.assertEqual(run_config.bound_overrides(), {"c_xh": 4.0})

    def test_explicit_delta(self):
        """Testa delta explicito e a faixa permitida"""
        run_config = RunConfig.load(environ=self.environ, overrides={"strip.delta": 0.005})
        self.assertEqual(run_config["strip.delta"], 0.005)
        self.assertFalse(run_config["strip.delta_auto"])
        with self.assertRaises(ConfigError):
            RunConfig.load(environ=self.environ, overrides={"strip.delta": 0.05})

    def test_unknown_key(self):
        """Testa a recusa de chaves desconhecidas"""
        with self.assertRaises(ConfigError):
            RunConfig.load(environ={"KAMTORUS_SOLVER__SPEED": "1"})

    def test_bad_value(self):
        """Testa a recusa de valores que nao convertem"""
        with self.assertRaises(ConfigError):
            RunConfig.load(environ=self.environ, overrides={"grid.size": "16,x"})
        with self.assertRaises(ConfigError):
            RunConfig.load(environ=self.environ, overrides={"grid.size": "12,16"})
        with self.assertRaises(ConfigError):
            RunConfig.load(environ=self.environ, overrides={"solver.method": "secant"})

    def test_profiles(self):
        """Testa os perfis quick e reference"""
        quick = RunConfig.load(profile="quick", environ=self.environ)
        self.assertEqual(quick["grid.size"], (16, 16))
        self.assertEqual(quick["diophantine.k_max"], 56)
        from_environ = RunConfig.load(environ={"KAMTORUS_PROFILE": "reference"})
        self.assertEqual(from_environ.profile, "reference")
        with self.assertRaises(ConfigError):
            RunConfig.load(profile="huge", environ=self.environ)

    def test_file(self):
        """Testa o arquivo de configuração e a prioridade do ambiente"""
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "run.env")
            with open(path, "w") as handle:
                handle.write("system.epsilon=0.1\nsolver.method=classical\n")
            run_config = RunConfig.load(path, environ={"KAMTORUS_SYSTEM__EPSILON": "0.2"})
        self.assertEqual(run_config["system.epsilon"], 0.2)
        self.assertEqual(run_config["solver.method"], "classical")

    def test_missing_file(self):
        """Testa a recusa de arquivo inexistente"""
        with self.assertRaises(ConfigError):
            RunConfig.load("/nao/existe.env", environ=self.environ)

    def test_rotational_planes(self):
        """Testa a contagem de planos da familia rotacional"""
        with self.assertRaises(ConfigError):
            RunConfig.load(environ=self.environ, overrides={"system.name": "rotational"})
        run_config = RunConfig.load(environ=self.environ, overrides={
            "system.name": "rotational", "system.radii": "1,1,1", "system.b": "1,1,1",
        })
        self.assertEqual(run_config["system.radii"], (1.0, 1.0, 1.0))

    def test_to_dict(self):
        """Testa a serialização com tuplas convertidas"""
        data = RunConfig.load(environ=self.environ).to_dict()
        self.assertEqual(data["profile"], "default")
        self.assertEqual(data["grid.size"], [32, 32])


if __name__ == "__main__":
    unittest.main()
