import logging
import math

import numpy as np

from controllers.geometry_controller import GeometryController, node_states
from models.errors import DomainError, KamError, ShiftBudgetError, TwistError
from models.fourier import (
    TWO_PI,
    FourierModel,
    compose_shift,
    frequency_dot,
    lie_derivative,
    matmul,
    mode_mask,
    pointwise,
    solve_cohomological,
    strip_norm,
)
from models.torus import CorrectionData, IterationResult, TorusState, WeightedErrorNorm

logger = logging.getLogger(__name__)

TWIST_THRESHOLD = 1e-12
METHODS = ("modified", "classical")
MACHINE_EPS = float(np.finfo(float).eps)


class NewtonController:
    """
    Controlador do metodo quasi-Newton pra toros invariantes

    Cada passo calcula o erro de invariancia, projeta nos referenciais
    tangente e normal, resolve as equações cohomologicas e atualiza K pela
    regra classica ou pela regra modificada (composição com o fluxo).
    """

    def __init__(self, system, dio, bounds=None):
        """
        Construtor do controlador

        Args:
            system (HamiltonianSystem): sistema
            dio (DiophantineData): frequencia verificada
            bounds (SystemBounds, optional): dominio e raio de tempo
        """
        self.system = system
        self.dio = dio
        self.bounds = bounds
        self.geometry = GeometryController(system, bounds)

    def invariance_error(self, K, omega=None):
        """
        E = X_h∘K + L_omega K

        Raises:
            DomainError: amostras de K fora do dominio B
        """
        omega = self.dio.omega_array if omega is None else np.asarray(omega, dtype=float)
        values = node_states(K.node_values())
        if not np.all(np.isfinite(values)):
            raise DomainError("K com valores nao finitos")
        if self.bounds is not None and not self.bounds.contains(values):
            raise DomainError(f"K sai do dominio de raio {self.bounds.domain_radius}")
        system = self.system
        return pointwise(lambda k: system.X_h(node_states(k))[:, :, None], K) + lie_derivative(K, omega)

    def project_error(self, E, bundle, K):
        """eta_L = -N^T Omega∘K E e eta_N = L^T Omega∘K E"""
        system = self.system
        eta_L = pointwise(
            lambda k, nv, e: -np.swapaxes(nv, 1, 2) @ system.omega(node_states(k)) @ e, K, bundle.N, E
        )
        eta_N = pointwise(
            lambda k, lv, e: np.swapaxes(lv, 1, 2) @ system.omega(node_states(k)) @ e, K, bundle.L, E
        )
        return eta_L, eta_N

    def solve_corrections(self, eta_L, eta_N, T):
        """
        Resolve o sistema triangular das correções

        <xi_N> = <T>^{-1} <eta_L - T R eta_N>, xi_N = <xi_N> + R eta_N e
        xi_L = R(eta_L - T xi_N), com <xi_L> = 0.

        Raises:
            TwistError: |det <T>| abaixo de 1e-12
            CutoffError: modos acima do corte verificado
        """
        avg_T = T.average()
        det = float(np.linalg.det(avg_T))
        if not abs(det) >= TWIST_THRESHOLD:
            raise TwistError(f"<T> singular: det={det:.3e}")

        r_eta_N = solve_cohomological(eta_N, self.dio)
        rhs = (eta_L - matmul(T, r_eta_N)).average()
        avg_xi_N = np.linalg.solve(avg_T, rhs)
        xi_N = r_eta_N + FourierModel.constant(avg_xi_N, eta_N.grid_size, eta_N.cutoffs)
        xi_L = solve_cohomological(eta_L - matmul(T, xi_N), self.dio)
        return CorrectionData(xi_L=xi_L, xi_N=xi_N, avg_xi_N=avg_xi_N.ravel(), d=self.system.d)

    def update_classical(self, K, bundle, corr):
        """K + L xi_L + N xi_N"""
        return K + matmul(bundle.L, corr.xi_L) + matmul(bundle.N, corr.xi_N)

    def update_modified(self, K, bundle, corr, budget=None):
        """
        Phi(xi_L_Xp(theta), (K + N xi_N)(theta + xi_L_DK(theta)))

        Raises:
            ShiftBudgetError: ||xi_L_DK|| >= budget, ou ||xi_L_Xp|| >= r com fluxo local
        """
        system = self.system
        shifted = compose_shift(K + matmul(bundle.N, corr.xi_N), corr.xi_L_DK, budget)
        if not system.moments:
            return shifted
        times = corr.xi_L_Xp
        if system.flow_period is None and self.bounds is not None:
            size = strip_norm(times, 0.0)
            if size >= self.bounds.time_radius:
                raise ShiftBudgetError(f"Tempo {size:.3e} excede o raio {self.bounds.time_radius}")
        return pointwise(lambda s, z: system.flow(node_states(s), node_states(z))[:, :, None], times, shifted)

    def compare_updates(self, state):
        """max |K_mod - K_cl| dos dois passos feitos com as mesmas correções"""
        corr = self.solve_corrections(state.eta_L, state.eta_N, state.bundle.T)
        classical = self.update_classical(state.K, state.bundle, corr)
        modified = self.update_modified(state.K, state.bundle, corr, budget=state.delta)
        return modified.max_abs_difference(classical)

    def rounding_floor(self, K):
        """
        eps_maq ||K||_0 max|2 pi k·omega|

        Tamanho de um erro de arredondamento de K depois de passar por L_omega;
        coeficientes de eta abaixo disso sao ruido.
        """
        divisors = np.abs(TWO_PI * frequency_dot(K.grid_size, self.dio.omega_array))
        top = float(np.max(divisors[mode_mask(K.grid_size, K.cutoffs)], initial=0.0))
        return MACHINE_EPS * max(strip_norm(K, 0.0), 1.0) * max(top, 1.0)

    def evaluate_state(self, K, rho, delta, iteration=0, norm_rho=0.0, error_delta=None):
        """
        Monta o snapshot de K: referenciais, erro e projeções

        Args:
            rho (float): faixa rho_j do cronograma
            delta (float): mordida delta_j
            norm_rho (float): faixa onde as normas do erro sao medidas
            error_delta (float, optional): delta usado no peso do erro (padrão delta)
        """
        omega = self.dio.omega_array
        E = self.invariance_error(K, omega)
        bundle = self.geometry.build_frames(K)
        eta_L, eta_N = self.project_error(E, bundle, K)
        weighted = WeightedErrorNorm.measure(
            eta_L, eta_N, self.dio, delta if error_delta is None else error_delta, norm_rho,
            floor=self.rounding_floor(K),
        )
        diagnostics = bundle.diagnostics(norm_rho)
        diagnostics["avg_eta_N"] = float(np.max(np.abs(eta_N.average()), initial=0.0))
        diagnostics["E"] = strip_norm(E, norm_rho)
        diagnostics.update({f"drift_{key}": value for key, value in self.geometry.energy_drift(K).items()})
        return TorusState(
            K=K, E=E, eta_L=eta_L, eta_N=eta_N, weighted=weighted, bundle=bundle,
            omega=self.dio.omega, rho=rho, delta=delta, iteration=iteration, diagnostics=diagnostics,
        )

    def step(self, state, method, schedule, norm_rho=0.0, clean_threshold=0.0):
        """
        Um passo do metodo a partir de state

        Coeficientes de K abaixo de max(clean_threshold, eps_maq ||K||_0) sao zerados.
        """
        corr = self.solve_corrections(state.eta_L, state.eta_N, state.bundle.T)
        if method == "classical":
            K_new = self.update_classical(state.K, state.bundle, corr)
        else:
            K_new = self.update_modified(state.K, state.bundle, corr, budget=state.delta)
        size = strip_norm(K_new, 0.0)
        if math.isfinite(size):
            K_new = K_new.clean(max(clean_threshold, MACHINE_EPS * size))
        j = state.iteration + 1
        return self.evaluate_state(
            K_new, schedule.strip(j), schedule.bite(j), j, norm_rho, error_delta=schedule.delta0
        )

    def iterate(self, K0, schedule, max_iter=20, tol=1e-10, method="modified", norm_rho=0.0,
                clean_threshold=0.0, progress=None):
        """
        Laço completo com mordidas delta_j = delta0/a^j

        Para quando o erro ponderado fica <= tol. Falhas dentro de um passo e
        dois aumentos seguidos de eps viram veredito 'diverged'.

        Returns:
            IterationResult: estados, veredito e motivo
        """
        if method not in METHODS:
            raise ValueError(f"Metodo desconhecido: {method}")
        state = self.evaluate_state(K0, schedule.rho0, schedule.delta0, 0, norm_rho, schedule.delta0)
        states = [state]
        increases = 0
        logger.info("iteracao j=0 eps=%.3e", state.weighted_error)
        if progress is not None:
            progress(state)

        while state.weighted_error > tol:
            if state.iteration >= max_iter:
                return IterationResult(states, "max_iter", method, f"eps={state.weighted_error:.3e} apos {max_iter} passos")
            try:
                new_state = self.step(state, method, schedule, norm_rho, clean_threshold)
            except KamError as exc:
                logger.warning("passo %d falhou: %s", state.iteration + 1, exc)
                return IterationResult(states, "diverged", method, f"{type(exc).__name__}: {exc}")
            except np.linalg.LinAlgError as exc:
                logger.warning("passo %d falhou: %s", state.iteration + 1, exc)
                return IterationResult(states, "diverged", method, f"LinAlgError: {exc}")

            if not math.isfinite(new_state.weighted_error):
                states.append(new_state)
                return IterationResult(states, "diverged", method, "erro nao finito")
            increases = increases + 1 if new_state.weighted_error > state.weighted_error else 0
            states.append(new_state)
            state = new_state
            logger.info("iteracao j=%d eps=%.3e", state.iteration, state.weighted_error)
            if progress is not None:
                progress(state)
            if increases >= 2:
                return IterationResult(states, "diverged", method, "eps aumentou em dois passos seguidos")

        return IterationResult(states, "converged", method, "")
