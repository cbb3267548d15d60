"""
Testes unitarios da algebra de Fourier, do solver de pequenos divisores
e dos utilitarios diofantinos
"""

import io
import math
import unittest

import numpy as np

from models.errors import (
    CutoffError,
    DimensionError,
    DiophantineError,
    ErgodicityError,
    HypothesisError,
    ShiftBudgetError,
)
from models.fourier import (
    FourierModel,
    StripSchedule,
    analyze,
    best_gamma,
    compose_shift,
    from_nodes,
    grid_points,
    lie_derivative,
    matmul,
    mode_mask,
    pointwise,
    solve_cohomological,
    strip_norm,
    synthesize,
    verify_diophantine,
    wavenumbers,
)

GOLDEN = (1.0, (1.0 + math.sqrt(5.0)) / 2.0)


def random_model(rng, grid=(16, 16), shape=(2, 1)):
    """Polinomio trigonometrico real com todos os modos dentro do corte"""
    samples = rng.standard_normal(shape + grid)
    return analyze(samples)


class TestFourierModel(unittest.TestCase):
    """Testes pro modelo de Fourier"""

    def setUp(self):
        """Configuração inicial para cada teste"""
        self.grid = (16, 16)
        self.cosine = FourierModel.from_function(lambda t: np.cos(2 * np.pi * t[:, 0]), self.grid).clean(1e-14)

    def test_cutoff_zeroes_high_modes(self):
        """Testa que modos acima do corte ficam zerados"""
        model = FourierModel.from_function(lambda t: np.cos(2 * np.pi * 7 * t[:, 0]), (16, 16), cutoffs=(5, 5))
        self.assertLessEqual(model.max_abs_difference(FourierModel.zeros((1, 1), (16, 16), (5, 5))), 1e-15)

    def test_invalid_grid(self):
        """Testa a rejeição de grades que nao sao potencia de dois"""
        with self.assertRaises(DimensionError):
            FourierModel.zeros((1, 1), (12, 16))
        with self.assertRaises(DimensionError):
            FourierModel.zeros((1, 1), (16, 16), cutoffs=(8, 7))

    def test_node_values(self):
        """Testa os valores nos nos da grade"""
        theta = grid_points(self.grid)
        values = self.cosine.node_values()[:, 0, 0]
        np.testing.assert_allclose(values, np.cos(2 * np.pi * theta[:, 0]), atol=1e-14)

    def test_synthesize_off_grid(self):
        """Testa a avaliação direta em pontos fora da grade"""
        points = np.array([[0.123, 0.7], [0.5, 0.25], [0.9, 0.01]])
        values = synthesize(self.cosine, points)[:, 0, 0]
        np.testing.assert_allclose(values, np.cos(2 * np.pi * points[:, 0]), atol=1e-14)

    def test_coefficients_and_average(self):
        """Testa coeficientes e media"""
        np.testing.assert_allclose(self.cosine.coefficient((1, 0)), [[0.5]], atol=1e-15)
        np.testing.assert_allclose(self.cosine.coefficient((-1, 0)), [[0.5]], atol=1e-15)
        self.assertAlmostEqual(float(self.cosine.average()[0, 0]), 0.0, places=15)

    def test_strip_norm_single_mode(self):
        """Testa a norma de faixa de cos(2 pi theta_1)"""
        self.assertAlmostEqual(strip_norm(self.cosine, 0.0), 1.0, places=14)
        self.assertAlmostEqual(strip_norm(self.cosine, 0.1), math.exp(0.2 * math.pi), places=12)
        with self.assertRaises(ValueError):
            strip_norm(self.cosine, -0.1)

    def test_strip_norm_constant_matrix(self):
        """Testa a maior soma de linha de uma matriz constante"""
        model = FourierModel.constant(np.array([[1.0, -2.0], [3.0, 4.0]]), self.grid)
        self.assertAlmostEqual(strip_norm(model, 0.0), 7.0, places=14)
        self.assertAlmostEqual(strip_norm(model, 0.3), 7.0, places=14)

    def test_strip_norm_dominates_boundary(self):
        """Testa ||u||_rho >= |u| em 10^4 pontos do bordo da faixa complexa"""
        rng = np.random.default_rng(4)
        model = random_model(rng, shape=(1, 1))
        rho = 0.05
        mask = mode_mask(model.grid_size, model.cutoffs)
        ks = np.stack([np.broadcast_to(k, model.grid_size)[mask] for k in wavenumbers(model.grid_size)], axis=1)
        coeffs = model.coeffs[0, 0][mask]
        theta = rng.uniform(0.0, 1.0, (10000, 2))
        signs = rng.choice([-1.0, 1.0], (10000, 2))
        values = np.exp(2j * np.pi * ((theta + 1j * rho * signs) @ ks.T)) @ coeffs
        self.assertLessEqual(float(np.max(np.abs(values))), strip_norm(model, rho))

    def test_strip_norm_monotone_and_submultiplicative(self):
        """Testa ||AB||_rho <= ||A||_rho ||B||_rho e a monotonia em rho"""
        rng = np.random.default_rng(5)
        for _ in range(10):
            a = random_model(rng, shape=(2, 2))
            b = random_model(rng, shape=(2, 1))
            for rho in (0.0, 0.05, 0.1):
                self.assertLessEqual(strip_norm(matmul(a, b), rho), strip_norm(a, rho) * strip_norm(b, rho) + 1e-10)
            self.assertLessEqual(strip_norm(a, 0.05), strip_norm(a, 0.1))

    def test_cauchy_estimate(self):
        """Testa ||d u/d theta_l||_(rho - delta) <= ||u||_rho/delta"""
        rng = np.random.default_rng(6)
        for _ in range(10):
            model = random_model(rng, shape=(1, 1))
            for axis in range(2):
                for rho, delta in ((0.1, 0.01), (0.1, 0.05), (0.02, 0.01)):
                    derivative = model.derivative(axis)
                    self.assertLessEqual(strip_norm(derivative, rho - delta), strip_norm(model, rho) / delta + 1e-9)

    def test_lie_derivative(self):
        """Testa L_omega cos(2 pi theta_1) = 2 pi omega_1 sen(2 pi theta_1)"""
        omega = np.array([0.7, 0.3])
        result = lie_derivative(self.cosine, omega)
        theta = grid_points(self.grid)
        expected = 2 * np.pi * omega[0] * np.sin(2 * np.pi * theta[:, 0])
        np.testing.assert_allclose(result.node_values()[:, 0, 0], expected, atol=1e-12)

    def test_pointwise_product(self):
        """Testa o produto ponto a ponto sem aliasing"""
        square = pointwise(lambda a, b: a * b, self.cosine, self.cosine)
        self.assertAlmostEqual(float(square.average()[0, 0]), 0.5, places=14)
        np.testing.assert_allclose(square.coefficient((2, 0)), [[0.25]], atol=1e-14)

    def test_matmul_shapes(self):
        """Testa o produto matricial e a checagem de formas"""
        rng = np.random.default_rng(1)
        a = random_model(rng, shape=(2, 3))
        b = random_model(rng, shape=(3, 1))
        self.assertEqual(matmul(a, b).shape, (2, 1))
        with self.assertRaises(DimensionError):
            matmul(b, b)

    def test_left_multiply(self):
        """Testa o produto por matriz constante"""
        rng = np.random.default_rng(2)
        model = random_model(rng, shape=(2, 1))
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        swapped = model.left_multiply(swap)
        self.assertEqual(swapped[0, 0].max_abs_difference(model[1, 0]), 0.0)
        with self.assertRaises(DimensionError):
            model.left_multiply(np.eye(3))

    def test_compose_shift(self):
        """Testa a composição com um deslocamento constante"""
        shift = FourierModel.constant(np.array([0.1, 0.0]), self.grid)
        shifted = compose_shift(self.cosine, shift)
        theta = grid_points(self.grid)
        expected = np.cos(2 * np.pi * (theta[:, 0] + 0.1))
        np.testing.assert_allclose(shifted.node_values()[:, 0, 0], expected, atol=1e-12)

    def test_compose_shift_budget(self):
        """Testa o limite da norma do deslocamento"""
        shift = FourierModel.constant(np.array([0.1, 0.0]), self.grid)
        with self.assertRaises(ShiftBudgetError):
            compose_shift(self.cosine, shift, budget=0.05)

    def test_clean(self):
        """Testa a limpeza de coeficientes pequenos"""
        noisy = self.cosine + 1e-15 * FourierModel.from_function(lambda t: np.sin(2 * np.pi * t[:, 1]), self.grid)
        cleaned = noisy.clean(1e-13)
        self.assertEqual(cleaned.max_abs_difference(self.cosine), 0.0)
        self.assertIs(noisy.clean(0.0), noisy)

    def test_binary_artifact(self):
        """Testa a gravação e leitura do formato FMD1"""
        rng = np.random.default_rng(3)
        model = random_model(rng, shape=(4, 1))
        restored = FourierModel.from_bytes(model.to_bytes())
        self.assertEqual(restored.grid_size, model.grid_size)
        self.assertEqual(restored.cutoffs, model.cutoffs)
        self.assertEqual(restored.max_abs_difference(model), 0.0)
        with self.assertRaises(DimensionError):
            FourierModel.from_bytes(b"XXXX" + model.to_bytes()[4:])

    def test_csv_artifact(self):
        """Testa o CSV de coeficientes"""
        stream = io.StringIO()
        self.cosine.to_csv(stream)
        stream.seek(0)
        self.assertTrue(stream.readline().startswith("# d=2 shape=1x1"))
        stream.seek(0)
        restored = FourierModel.from_csv(stream)
        self.assertEqual(restored.max_abs_difference(self.cosine), 0.0)


class TestCohomological(unittest.TestCase):
    """Testes pro solver da equação cohomologica"""

    def setUp(self):
        """Configuração inicial para cada teste"""
        self.dio = verify_diophantine(GOLDEN, 0.9, 1.0, 14)
        self.rng = np.random.default_rng(7)

    def test_identity(self):
        """Testa L_omega(R_omega v) = v - <v> em 100 polinomios com 31 modos por eixo"""
        dio = verify_diophantine(GOLDEN, 0.9, 1.0, 62)
        for _ in range(100):
            v = random_model(self.rng, grid=(64, 64), shape=(1, 1))
            u = solve_cohomological(v, dio)
            centered = v - FourierModel.constant(v.average(), v.grid_size, v.cutoffs)
            residual = lie_derivative(u, dio.omega_array).max_abs_difference(centered)
            self.assertLessEqual(residual, 1e-13 * strip_norm(v, 0.0))
            self.assertLessEqual(float(np.max(np.abs(u.average()))), 1e-15)

    def test_cutoff_error(self):
        """Testa a recusa de modos acima do corte verificado"""
        dio = verify_diophantine(GOLDEN, 0.9, 1.0, 5)
        with self.assertRaises(CutoffError):
            solve_cohomological(random_model(self.rng), dio)


class TestDiophantine(unittest.TestCase):
    """Testes pros utilitarios diofantinos e o cronograma de faixas"""

    def test_best_gamma_golden(self):
        """Testa o melhor gamma de (1, phi) com tau = 1"""
        gamma, k = best_gamma(GOLDEN, 1.0, 20)
        self.assertAlmostEqual(gamma, 1.0, places=12)
        self.assertEqual((abs(k[0]), k[1]), (1, 0))

    def test_best_gamma_on_fibonacci_pair(self):
        """Testa que o minimo de |k|_1 |k·omega| ate |k|_1 = 50 cai num par de Fibonacci"""
        fibonacci = {0, 1, 2, 3, 5, 8, 13, 21, 34}
        gamma, k = best_gamma(GOLDEN, 1.0, 50)
        self.assertGreater(gamma, 0.0)
        self.assertIn(abs(k[0]), fibonacci)
        self.assertIn(abs(k[1]), fibonacci)

    def test_violation_reports_best_gamma(self):
        """Testa o erro com o k violador e o melhor gamma"""
        with self.assertRaises(DiophantineError) as context:
            verify_diophantine(GOLDEN, 1.1, 1.0, 10)
        self.assertAlmostEqual(context.exception.best_gamma, 1.0, places=12)
        self.assertEqual(abs(context.exception.k[0]), 1)

    def test_resonance(self):
        """Testa a deteção de ressonancia"""
        with self.assertRaises(ErgodicityError):
            verify_diophantine((1.0, 2.0), 0.1, 1.0, 5)

    def test_invalid_parameters(self):
        """Testa parametros diofantinos invalidos"""
        with self.assertRaises(ValueError):
            verify_diophantine(GOLDEN, 0.0, 1.0, 5)
        with self.assertRaises(ValueError):
            verify_diophantine(GOLDEN, 0.5, 0.5, 5)

    def test_optimal_schedule(self):
        """Testa a mordida otima e a faixa limite"""
        schedule = StripSchedule.optimal(0.1, 0.04)
        self.assertAlmostEqual(schedule.delta0, 0.01, places=15)
        self.assertAlmostEqual(schedule.ratio_a, 2.0, places=12)
        self.assertAlmostEqual(schedule.bite(3), 0.00125, places=14)
        self.assertAlmostEqual(schedule.strip(1), 0.07, places=14)
        self.assertAlmostEqual(schedule.limit_strip(), 0.04, places=12)

    def test_schedule_hypotheses(self):
        """Testa a recusa de faixas invalidas"""
        with self.assertRaises(HypothesisError):
            StripSchedule(0.1, 0.04, 0.02)
        with self.assertRaises(HypothesisError):
            StripSchedule(0.04, 0.1, 0.001)

    def test_from_nodes_layout(self):
        """Testa a consistencia entre nos e grade"""
        grid = (4, 8)
        theta = grid_points(grid)
        values = from_nodes(theta[:, 0][:, None, None], grid)
        self.assertEqual(values.shape, (1, 1, 4, 8))
        self.assertAlmostEqual(float(values[0, 0, 2, 5]), 0.5)


if __name__ == "__main__":
    unittest.main()
