import logging
from dataclasses import dataclass, replace

import numpy as np

from models.errors import ConditioningError, DegenerateFrameError, DimensionError, LiftError
from models.fourier import (
    FourierModel,
    analyze,
    block,
    lie_derivative,
    pointwise,
    strip_norm,
    transpose,
)
from models.system import canonical_form
from models.torus import FrameBundle

logger = logging.getLogger(__name__)

RANK_THRESHOLD = 1e-8
GRAM_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class LiftResult:
    """Amostras de K^(theta, s) = Phi(s, K(theta)) e residuo de invariancia"""

    samples: np.ndarray
    s_grid: np.ndarray
    omega_p: np.ndarray
    p0: np.ndarray
    p_drift: float
    pre_residual: float
    residual: float
    torus: FourierModel = None

    def to_dict(self):
        return {
            "omega_p": self.omega_p.tolist(),
            "p0": self.p0.tolist(),
            "p_drift": self.p_drift,
            "pre_residual": self.pre_residual,
            "residual": self.residual,
            "s_points": int(self.s_grid.shape[0]),
            "torus": self.torus.to_dict() if self.torus is not None else None,
        }


def node_states(values):
    """(P, 2n, 1) -> (P, 2n)"""
    return values[:, :, 0]


class GeometryController:
    """
    Controlador responsavel pela geometria de uma parametrização K

    Monta os referenciais L, N e P, a torção e os residuos de
    lagrangianidade e redutibilidade, e levanta toros pelo fluxo do momento.
    """

    def __init__(self, system, bounds=None):
        """Construtor do controlador"""
        self.system = system
        self.bounds = bounds

    def _check_embedding(self, K):
        if K.shape != (2 * self.system.n, 1) or K.dim_d != self.system.d:
            raise DimensionError(
                f"K precisa ser vetor {2 * self.system.n} x 1 em T^{self.system.d}, recebido {K.shape} em T^{K.dim_d}"
            )

    def moment_field(self, K):
        """X_p∘K, matriz 2n x (n - d)"""
        system = self.system
        return pointwise(lambda k: system.X_p(node_states(k)), K, shape=(2 * system.n, system.moments))

    def build_tangent_frame(self, K):
        """
        L = [DK | X_p∘K]

        Raises:
            DegenerateFrameError: menor valor singular abaixo de 1e-8 ||L||
        """
        self._check_embedding(K)
        DK = K.jacobian()
        L = block([[DK, self.moment_field(K)]]) if self.system.moments else DK
        self.frame_singular_values(L)
        return L

    @staticmethod
    def frame_singular_values(L):
        """Menor valor singular de L nos nos da grade"""
        singular = np.linalg.svd(L.node_values(), compute_uv=False)
        smallest, largest = float(singular.min()), float(singular.max())
        if largest == 0.0 or smallest < RANK_THRESHOLD * largest:
            raise DegenerateFrameError(f"L sem posto completo: sigma_min={smallest:.3e}, sigma_max={largest:.3e}")
        return smallest

    def build_frames(self, K, omega=None):
        """
        Referenciais tangente/normal, torção e diagnosticos

        Args:
            K (FourierModel): parametrização 2n x 1
            omega (array, optional): frequencia; com ela E_red tambem é calculado

        Returns:
            FrameBundle: referenciais e residuos
        """
        system = self.system
        n = system.n
        L = self.build_tangent_frame(K)
        smallest = self.frame_singular_values(L)

        G_L = pointwise(
            lambda k, l: np.einsum("pji,pjk,pkl->pil", l, system.G(node_states(k)), l), K, L, shape=(n, n)
        )
        condition = float(np.max(np.linalg.cond(G_L.node_values(K.padded_grid()))))
        if not condition <= GRAM_CONDITION_LIMIT:
            raise ConditioningError(f"G_L mal condicionada: cond={condition:.3e}")

        B = pointwise(np.linalg.inv, G_L)
        N = pointwise(lambda k, l, b: system.J(node_states(k)) @ l @ b, K, L, B)
        P = block([[L, N]])
        T = pointwise(lambda k, nv: np.swapaxes(nv, 1, 2) @ system.T_h(node_states(k)) @ nv, K, N)
        zero = FourierModel.zeros((n, n), K.grid_size, K.cutoffs)
        Lambda = block([[zero, T], [zero, zero]])

        omega_L = self.lagrangianity_residual(K, L)
        omega_N = pointwise(lambda k, nv: np.swapaxes(nv, 1, 2) @ system.omega(node_states(k)) @ nv, K, N)
        E_sym = pointwise(
            lambda k, pv: np.swapaxes(pv, 1, 2) @ system.omega(node_states(k)) @ pv, K, P
        ) - FourierModel.constant(canonical_form(n), K.grid_size, K.cutoffs)

        bundle = FrameBundle(
            L=L, N=N, B=B, P=P, G_L=G_L, T=T, Lambda=Lambda,
            omega_L=omega_L, omega_N=omega_N, E_sym=E_sym,
            min_singular=smallest, gram_condition=condition,
        )
        if omega is not None:
            bundle = replace(bundle, E_red=self.reducibility_residual(K, bundle, omega))
        return bundle

    def lagrangianity_residual(self, K, L):
        """
        Omega_L = L^T Omega∘K L montada pelos blocos

        [[Omega_DK, D(p∘K)^T], [-D(p∘K), 0]], com Omega_DK = DK^T Omega∘K DK.
        """
        system = self.system
        d = system.d
        DK = L[:, :d]
        omega_DK = pointwise(
            lambda k, dk: np.swapaxes(dk, 1, 2) @ system.omega(node_states(k)) @ dk, K, DK
        )
        if not system.moments:
            return omega_DK
        pK = pointwise(lambda k: system.p(node_states(k))[:, :, None], K)
        DpK = pK.jacobian()
        zero = FourierModel.zeros((system.moments, system.moments), K.grid_size, K.cutoffs)
        return block([[omega_DK, transpose(DpK)], [-DpK, zero]])

    def reducibility_residual(self, K, bundle, omega):
        """
        E_red = Omega_0^{-1} P^T Omega∘K (DX_h∘K P + L_omega P) - Lambda

        Returns:
            dict: blocos 'LL', 'LN', 'NL', 'NN'
        """
        system = self.system
        n = system.n
        P = bundle.P
        flow_part = pointwise(lambda k, pv: system.DX_h(node_states(k)) @ pv, K, P) + lie_derivative(P, omega)
        projected = pointwise(
            lambda k, pv, x: np.swapaxes(pv, 1, 2) @ system.omega(node_states(k)) @ x, K, P, flow_part
        )
        E_red = projected.left_multiply(-canonical_form(n)) - bundle.Lambda
        return {
            "LL": E_red[:n, :n],
            "LN": E_red[:n, n:],
            "NL": E_red[n:, :n],
            "NN": E_red[n:, n:],
        }

    def energy_drift(self, K):
        """||H∘K - <H∘K>|| e ||p∘K - <p∘K>|| na norma de Fourier"""
        system = self.system
        HK = pointwise(lambda k: system.H(node_states(k))[:, None, None], K)
        drift = {"H": strip_norm(HK - FourierModel.constant(HK.average(), K.grid_size, K.cutoffs), 0.0)}
        if system.moments:
            pK = pointwise(lambda k: system.p(node_states(k))[:, :, None], K)
            drift["p"] = strip_norm(pK - FourierModel.constant(pK.average(), K.grid_size, K.cutoffs), 0.0)
        return drift

    # Levantamento pelo fluxo do momento

    def _lift_prepare(self, K, lift_spec, omega, tol):
        system = self.system
        if not system.moments:
            raise LiftError("Sistema sem integrais extras: nada pra levantar")
        self._check_embedding(K)
        pK = pointwise(lambda k: system.p(node_states(k))[:, :, None], K)
        p0 = pK.average().ravel()
        p_drift = strip_norm(pK - FourierModel.constant(p0, K.grid_size, K.cutoffs), 0.0)
        omega_p = lift_spec.resolve(p0)
        if omega_p.shape != (system.moments,):
            raise LiftError("omega_p com dimensão errada")
        discounted = pointwise(
            lambda k: system.discounted_field(node_states(k), omega_p)[:, :, None], K
        ) + lie_derivative(K, omega)
        pre_residual = strip_norm(discounted, 0.0)
        if pre_residual > tol:
            raise LiftError(f"K nao é invariante pro campo descontado: residuo {pre_residual:.3e}")
        return p0, p_drift, omega_p, pre_residual

    def _lift_samples(self, K, omega, omega_p, s_grid):
        system = self.system
        kv = node_states(K.node_values())
        velocity = K.jacobian().node_values() @ np.asarray(omega, dtype=float)
        samples, worst = [], 0.0
        for s in s_grid:
            times = np.broadcast_to(s, (kv.shape[0], system.moments))
            lifted = system.flow(times, kv)
            tangent = np.einsum("pij,pj->pi", system.D_flow(times, kv), velocity)
            residual = system.X_h(lifted) - tangent - system.X_p(lifted) @ omega_p
            worst = max(worst, float(np.max(np.abs(residual))))
            samples.append(lifted)
        return np.stack(samples), worst

    def lift_cylinder(self, K, lift_spec, s_grid, omega, tol=1e-8):
        """
        Avalia K^(theta, s) = Phi(s, K(theta)) numa grade produto

        O residuo X_h∘K^ + L_(omega, omega_p) K^ usa a regra da cadeia:
        d_theta K^ = D_z Phi DK e d_s K^ = X_p∘K^.

        Raises:
            LiftError: K nao invariante pro campo descontado ou s fora do raio de tempo
        """
        s_grid = np.asarray(s_grid, dtype=float).reshape(len(s_grid), -1)
        if self.system.flow_period is None:
            radius = self.bounds.time_radius if self.bounds is not None else 1.0
            if np.any(np.abs(s_grid) >= radius):
                raise LiftError(f"Tempos fora do raio {radius}")
        p0, p_drift, omega_p, pre_residual = self._lift_prepare(K, lift_spec, omega, tol)
        samples, residual = self._lift_samples(K, omega, omega_p, s_grid)
        logger.info("levantamento cilindro residuo=%.3e drift_p=%.3e", residual, p_drift)
        return LiftResult(samples, s_grid, omega_p, p0, p_drift, pre_residual, residual)

    def lift_torus(self, K, lift_spec, s_points, omega, tol=1e-8):
        """
        Levantamento pra um toro de dimensão n quando o fluxo do momento é periodico

        O toro K~(theta, t) = Phi(period t, K(theta)) tem frequencia
        (omega, omega_p/period); o residuo é calculado com a algebra de Fourier.
        """
        system = self.system
        period = system.flow_period
        if period is None:
            raise LiftError("Fluxo do momento nao periodico")
        if system.moments != 1:
            raise LiftError("Levantamento pra toro implementado pra um unico momento")
        p0, p_drift, omega_p, pre_residual = self._lift_prepare(K, lift_spec, omega, tol)
        s_grid = (period * np.arange(s_points) / s_points).reshape(-1, 1)
        samples, _ = self._lift_samples(K, omega, omega_p, s_grid)

        grid = K.grid_size + (int(s_points),)
        values = samples.transpose(2, 1, 0).reshape((2 * system.n,) + grid)[:, None]
        torus = analyze(values, K.cutoffs + (int(s_points) // 2 - 1,))
        frequency = np.concatenate([np.asarray(omega, dtype=float), omega_p / period])
        error = pointwise(lambda k: system.X_h(node_states(k))[:, :, None], torus) + lie_derivative(torus, frequency)
        residual = strip_norm(error, 0.0)
        logger.info("levantamento toro grade=%s residuo=%.3e", grid, residual)
        return LiftResult(samples, s_grid, omega_p, p0, p_drift, pre_residual, residual, torus)
