"""
Testes unitarios do certificado KAM: Rüssmann, livro-razão, condição KAM
e lema da inversa perturbada
"""

import math
import unittest

import numpy as np

from controllers.certificate_controller import (
    CertificateController,
    hurwitz_zeta,
    upper_incomplete_gamma_integral,
)
from controllers.newton_controller import NewtonController
from models.errors import CutoffError, HypothesisError, SingularMatrixError, StaleNormError
from models.fourier import FourierModel, StripSchedule, analyze, solve_cohomological, strip_norm, verify_diophantine
from models.ledger import ConditionNumbers, ConstantLedger, ControlConstants, twist_factor
from models.system import SystemBounds
from models.systems import OscillatorFamily, exact_torus

GOLDEN = (1.0, (1.0 + math.sqrt(5.0)) / 2.0)
TERM_NAMES = {"sym", "xiL", "DeltaK", "DeltaDK", "DeltaDKT", "DeltaB", "DeltaN", "DeltaNT", "DeltaiT", "etaN", "Q_etan"}


def make_controller(epsilon=0.0, sigma_B=0.05, k_max=14):
    """Certificador do oscilador com os sigma padrão"""
    system = OscillatorFamily.tuned(GOLDEN, (1.0, 1.0), (1.0, 1.0), epsilon=epsilon)
    dio = verify_diophantine(GOLDEN, 0.9, 1.0, k_max)
    bounds = SystemBounds.estimate(system, samples=300, seed=0)
    sigma = ConditionNumbers(20.0, 40.0, sigma_B, 1.0, 2.0, 100.0, c_xp=bounds.c_xp, c_xpt=bounds.c_xpt)
    controls = ControlConstants(0.5, 0.5, 1.0)
    return CertificateController(system, dio, bounds, sigma, controls)


class TestSpecialFunctions(unittest.TestCase):
    """Testes das funções especiais"""

    def test_hurwitz_zeta(self):
        """Testa zeta(2, 2) = pi^2/6 - 1"""
        self.assertAlmostEqual(hurwitz_zeta(2.0, 2.0), math.pi**2 / 6.0 - 1.0, places=12)
        with self.assertRaises(ValueError):
            hurwitz_zeta(2.0, 0.0)

    def test_incomplete_gamma(self):
        """Testa os casos fechados da gamma incompleta"""
        self.assertAlmostEqual(upper_incomplete_gamma_integral(0.0, 2.0), 2.0, places=12)
        self.assertAlmostEqual(upper_incomplete_gamma_integral(1.5, 0.0), math.exp(-1.5), places=12)
        with self.assertRaises(ValueError):
            upper_incomplete_gamma_integral(-1.0, 1.0)

    def test_twist_factor(self):
        """Testa (tau + 1)^(tau + 1)/tau^tau com tau = 1"""
        self.assertAlmostEqual(twist_factor(1.0), 4.0, places=14)


class TestRussmann(unittest.TestCase):
    """Testes das constantes de Rüssmann"""

    def setUp(self):
        """Configuração inicial para cada teste"""
        self.controller = make_controller()

    def test_uniform_constant(self):
        """Testa a cota uniforme pra d = 2 e tau = 1"""
        self.assertAlmostEqual(self.controller.uniform_constant(), 0.16274, delta=1e-4)

    def test_chain(self):
        """Testa c_R <= c^_R e c1_R <= c1^_R"""
        russ = self.controller.compute_russmann(0.01)
        self.assertTrue(russ.chain_ok)
        self.assertLessEqual(russ.m, 14)
        self.assertEqual(russ.select("uniform")[0], russ.c_R_hat)
        with self.assertRaises(ValueError):
            russ.select("loose")

    def test_order_monotone(self):
        """Testa que aumentar m nao aumenta c_R"""
        controller = make_controller(k_max=200)
        self.assertGreaterEqual(controller.sharp_constant(0.01, 10), controller.sharp_constant(0.01, 200))

    def test_cutoff(self):
        """Testa a recusa de m acima do corte verificado"""
        with self.assertRaises(CutoffError):
            self.controller.sharp_constant(0.01, 20)
        with self.assertRaises(ValueError):
            self.controller.sharp_constant(0.0, 5)

    def test_empirical_bound(self):
        """Testa ||R v||_(rho - delta) <= c_R/(gamma delta^tau) ||v||_rho com m = 2000 em 100 polinomios"""
        controller = make_controller(k_max=2000)
        russ = controller.compute_russmann(0.01, m=2000)
        self.assertTrue(russ.chain_ok)
        self.assertLess(russ.c_R, russ.c_R_hat)
        rng = np.random.default_rng(17)
        dio = controller.dio
        rho, delta = 0.1, 0.01
        bound = russ.c_R / (dio.gamma * delta**dio.tau)
        violations = 0
        for _ in range(100):
            v = analyze(rng.standard_normal((1, 1, 64, 64)))
            v = v - FourierModel.constant(v.average(), v.grid_size, v.cutoffs)
            u = solve_cohomological(v, dio)
            if strip_norm(u, rho - delta) > bound * strip_norm(v, rho):
                violations += 1
        self.assertEqual(violations, 0)


class TestLedger(unittest.TestCase):
    """Testes do livro-razão"""

    def setUp(self):
        """Configuração inicial para cada teste"""
        self.controller = make_controller()
        self.schedule = StripSchedule(0.1, 0.04, 0.01)
        russ = self.controller.compute_russmann(0.01, rho=0.1)
        self.ledger = self.controller.assemble_tables(0.1, 0.01, russ)

    def test_dependencies(self):
        """Testa os rotulos das dependencias"""
        self.assertEqual(self.ledger.deps("C_sym"), ("C_N_OmegaL", "C_N_OmegaN"))
        self.assertEqual(self.ledger["C_L"], self.ledger["sigma_L"])
        self.assertIn("sigma_B", self.ledger.trace("C_N_OmegaN"))
        self.assertIn("Q_etanL", self.ledger)

    def test_put_errors(self):
        """Testa as recusas do livro-razão"""
        ledger = ConstantLedger()
        ledger.put("x", 1.0)
        with self.assertRaises(HypothesisError):
            ledger.put("x", 2.0)
        with self.assertRaises(HypothesisError):
            ledger.put("y", 1.0, ("z",))
        with self.assertRaises(HypothesisError):
            ledger.put("w", -1.0)
        with self.assertRaises(HypothesisError):
            ledger.put("v", math.nan)

    def test_final_constants(self):
        """Testa a = 2 e as constantes finais"""
        final = self.controller.final_constants(self.ledger, self.schedule)
        self.assertAlmostEqual(final.a, 2.0, places=12)
        self.assertGreater(final.C_DeltaK, 0.0)
        self.assertIn("C_theoDeltaiT", self.ledger)

    def test_final_constants_wrong_delta(self):
        """Testa a recusa de cronograma com outra mordida"""
        with self.assertRaises(HypothesisError):
            self.controller.final_constants(self.ledger, StripSchedule(0.1, 0.04, 0.005))

    def test_strip_outside_time_radius(self):
        """Testa a recusa de rho fora do raio de tempo"""
        russ = self.controller.compute_russmann(0.01)
        with self.assertRaises(HypothesisError):
            self.controller.assemble_tables(1.5, 0.01, russ)


class TestKamCondition(unittest.TestCase):
    """Testes da condição KAM sobre toros medidos"""

    def setUp(self):
        """Configuração inicial para cada teste"""
        self.schedule = StripSchedule(0.1, 0.04, 0.01)
        system = OscillatorFamily.tuned(GOLDEN, (1.0, 1.0), (1.0, 1.0))
        self.K, _ = exact_torus(system, (1.0, 1.0), (16, 16))

    def test_measurement(self):
        """Testa as normas do toro exato na faixa 0.1"""
        measured = make_controller().measure_torus(self.K, 0.1, 0.01)
        self.assertAlmostEqual(measured.B, 1.0 / (4 * math.pi**2), places=10)
        self.assertAlmostEqual(measured.Tinv, 4 * math.pi**2, places=6)
        self.assertAlmostEqual(measured.dist, 3.0 - math.exp(0.2 * math.pi), places=8)
        self.assertLess(measured.DK, 20.0)
        self.assertLess(measured.NT, 2.0)

    def test_pass_on_cleaned_exact_torus(self):
        """Testa o veredito positivo com o erro limpo, marcado nao rigoroso"""
        report, ledger, russ = make_controller().certify(self.K, self.schedule, clean_threshold=1e-13)
        self.assertTrue(report.passed)
        self.assertEqual(report.value, 0.0)
        self.assertFalse(report.rigorous)
        self.assertEqual(set(report.radii), {"K", "DK", "DKT", "B", "N", "NT", "iT"})
        self.assertTrue(any("limpos" in note for note in ledger.notes))

    def test_fail_on_perturbed_system(self):
        """Testa o veredito negativo com o toro de epsilon = 0 num sistema com epsilon = 0.1"""
        report, _, _ = make_controller(epsilon=0.1).certify(self.K, self.schedule)
        self.assertFalse(report.passed)
        self.assertGreater(report.value, 1.0)
        self.assertIn(report.dominating, report.terms)
        self.assertEqual(len(report.terms), 11)
        self.assertEqual(report.radii, {})

    def test_stale_norms(self):
        """Testa a recusa de normas medidas em outra faixa"""
        controller = make_controller()
        russ = controller.compute_russmann(0.01, rho=0.1)
        ledger = controller.assemble_tables(0.1, 0.01, russ)
        final = controller.final_constants(ledger, self.schedule)
        measured = controller.measure_torus(self.K, 0.05, 0.01)
        with self.assertRaises(StaleNormError):
            controller.check_kam(measured, ledger, final)

    def test_sigma_below_measured(self):
        """Testa a recusa de sigma_B abaixo da norma medida de B"""
        with self.assertRaises(HypothesisError):
            make_controller(sigma_B=0.02).certify(self.K, self.schedule)


class TestKamHistory(unittest.TestCase):
    """Testes do valor V ao longo das iterações"""

    def test_monotone_along_newton(self):
        """Testa V nao crescente ao longo do Newton com epsilon = 1e-3, com termo dominante nomeado"""
        schedule = StripSchedule(0.1, 0.04, 0.01)
        controller = make_controller(epsilon=1e-3, k_max=120)
        K0, _ = exact_torus(controller.system, (1.0, 1.0), (32, 32))
        result = NewtonController(controller.system, controller.dio).iterate(K0, schedule, max_iter=6, tol=1e-11)
        self.assertEqual(result.verdict, "converged", result.reason)
        history = controller.certify_history(result.states, schedule)
        entries = history["entries"]
        self.assertEqual(len(entries), len(result.states))
        values = [entry["V"] for entry in entries]
        self.assertNotIn(None, values)
        for earlier, later in zip(values, values[1:]):
            self.assertLessEqual(later, earlier)
        self.assertTrue(history["monotone"])
        self.assertFalse(history["rigorous"])
        self.assertGreater(values[0], 1.0)
        for entry in entries:
            self.assertIn(entry["dominating"], TERM_NAMES)


class TestNeumannInverse(unittest.TestCase):
    """Testes do lema da inversa perturbada"""

    def test_invertible(self):
        """Testa o caso invertivel com perturbação pequena"""
        result = CertificateController.neumann_inverse_check(np.eye(3), np.eye(3) + 0.01 * np.ones((3, 3)), 2.0)
        self.assertEqual(result["status"], "invertible")
        self.assertLess(result["condition"], 1.0)

    def test_random_pairs(self):
        """Testa as cotas de |M_bar^-1| e |M_bar^-1 - M^-1| em pares aleatorios"""
        rng = np.random.default_rng(23)
        checked = 0
        for _ in range(1000):
            M = np.eye(3) + 0.3 * rng.uniform(-1.0, 1.0, (3, 3))
            M_bar = M + 0.05 * rng.uniform(-1.0, 1.0, (3, 3))
            inverse_norm = np.max(np.sum(np.abs(np.linalg.inv(M)), axis=1))
            result = CertificateController.neumann_inverse_check(M, M_bar, 2.0 * inverse_norm)
            if result["status"] != "invertible":
                continue
            checked += 1
            M_bar_inv = np.linalg.inv(M_bar)
            self.assertLess(np.max(np.sum(np.abs(M_bar_inv), axis=1)), result["inverse_bound"])
            difference = np.max(np.sum(np.abs(M_bar_inv - np.linalg.inv(M)), axis=1))
            self.assertLessEqual(difference, result["difference_bound"])
        self.assertGreater(checked, 0)

    def test_singular(self):
        """Testa a recusa de M singular"""
        with self.assertRaises(SingularMatrixError):
            CertificateController.neumann_inverse_check(np.zeros((2, 2)), np.eye(2), 2.0)

    def test_sigma_too_small(self):
        """Testa a recusa de sigma <= |M^-1|"""
        with self.assertRaises(HypothesisError):
            CertificateController.neumann_inverse_check(np.eye(2), np.eye(2), 0.5)


if __name__ == "__main__":
    unittest.main()
