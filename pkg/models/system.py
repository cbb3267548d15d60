"""
Sistemas hamiltonianos com tripla compativel (Omega, G, J)

Todas as funções do sistema trabalham em lote: z tem forma (P, 2n) e os
resultados tem o indice do no na frente. Derivadas acrescentam o indice da
direção de derivação no final, por exemplo DX_h[p, i, k] = dX_i/dz_k.
"""

import logging
import math
from dataclasses import dataclass, field, fields, asdict, replace

import numpy as np

from models.errors import LiftError

logger = logging.getLogger(__name__)


def canonical_form(n):
    """Omega_0 = [[0, -I], [I, 0]]"""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def tensor_norm(values):
    """Maior soma de linha em valor absoluto, maximizada sobre os nos"""
    a = np.abs(np.asarray(values))
    if a.ndim == 1:
        return float(a.max(initial=0.0))
    a = a.reshape(a.shape[0], a.shape[1], -1).sum(axis=2)
    return float(a.max(initial=0.0))


class HamiltonianSystem:
    """
    Interface de um sistema hamiltoniano com integrais primeiras em involução

    Subclasses implementam H e derivadas, a tripla compativel, o mapa momento p
    e o fluxo do momento Phi. n é o numero de graus de liberdade e d a dimensão
    do toro (d < n quando ha n - d integrais extras).
    """

    name = "abstract"
    flow_period = None

    def __init__(self, n, d):
        if not 1 < d <= n:
            raise ValueError("Precisa 1 < d <= n")
        self.n = n
        self.d = d

    @property
    def moments(self):
        return self.n - self.d

    # Tripla compativel

    def omega(self, z):
        raise NotImplementedError

    def D_omega(self, z):
        raise NotImplementedError

    def G(self, z):
        raise NotImplementedError

    def DG(self, z):
        raise NotImplementedError

    def J(self, z):
        raise NotImplementedError

    def DJ(self, z):
        raise NotImplementedError

    def J_T(self, z):
        return np.swapaxes(self.J(z), 1, 2)

    def DJ_T(self, z):
        return np.swapaxes(self.DJ(z), 1, 2)

    def action_form(self, z):
        raise NotImplementedError

    def D_action(self, z):
        raise NotImplementedError

    # Hamiltoniano

    def H(self, z):
        raise NotImplementedError

    def DH(self, z):
        raise NotImplementedError

    def X_h(self, z):
        raise NotImplementedError

    def DX_h(self, z):
        raise NotImplementedError

    def DX_h_T(self, z):
        return np.swapaxes(self.DX_h(z), 1, 2)

    def D2X_h(self, z):
        raise NotImplementedError

    def T_h(self, z):
        """Torção Omega (DX_h + DJ[X_h] J + J DX_h J), simetrica"""
        om, jm, dx = self.omega(z), self.J(z), self.DX_h(z)
        dj_x = np.einsum("pijk,pk->pij", self.DJ(z), self.X_h(z))
        inner = dx + dj_x @ jm + jm @ dx @ jm
        return om @ inner

    def DT_h(self, z):
        raise NotImplementedError

    # Momento e fluxo

    def p(self, z):
        return np.zeros((z.shape[0], 0), dtype=z.dtype)

    def Dp(self, z):
        return np.zeros((z.shape[0], 0, 2 * self.n), dtype=z.dtype)

    def X_p(self, z):
        return np.zeros((z.shape[0], 2 * self.n, 0), dtype=z.dtype)

    def X_p_T(self, z):
        return np.swapaxes(self.X_p(z), 1, 2)

    def DX_p(self, z):
        return np.zeros((z.shape[0], 2 * self.n, 0, 2 * self.n), dtype=z.dtype)

    def DX_p_T(self, z):
        return np.swapaxes(self.DX_p(z), 1, 2)

    def flow(self, s, z):
        """Phi(s, z); s tem forma (P, n - d)"""
        return np.array(z, copy=True)

    def D_flow(self, s, z):
        return np.broadcast_to(np.eye(2 * self.n), (z.shape[0], 2 * self.n, 2 * self.n)).copy()

    def discounted_field(self, z, omega_p):
        """Campo de H - omega_p·p: X_h - X_p omega_p"""
        return self.X_h(z) - np.einsum("pim,m->pi", self.X_p(z), np.asarray(omega_p, dtype=float))

    def exact_bounds(self):
        """Constantes H1 conhecidas exatamente (o resto é estimado)"""
        return {}

    def to_dict(self):
        return {"name": self.name, "n": self.n, "d": self.d}


class CanonicalSystem(HamiltonianSystem):
    """
    Caso canonico: Omega = Omega_0, G = I, J = Omega_0

    Subclasses fornecem H, gradiente, hessiana e terceira derivada; o campo e
    suas derivadas saem de X_h = Omega_0^{-1} grad H.
    """

    def __init__(self, n, d):
        super().__init__(n, d)
        self._omega0 = canonical_form(n)
        self._omega0_inv = -self._omega0

    def _const(self, matrix, z):
        return np.broadcast_to(matrix, (z.shape[0],) + matrix.shape).astype(np.result_type(z, float))

    def _zero_derivative(self, z):
        m = 2 * self.n
        return np.zeros((z.shape[0], m, m, m), dtype=np.result_type(z, float))

    def omega(self, z):
        return self._const(self._omega0, z)

    def D_omega(self, z):
        return self._zero_derivative(z)

    def G(self, z):
        return self._const(np.eye(2 * self.n), z)

    def DG(self, z):
        return self._zero_derivative(z)

    def J(self, z):
        return self._const(self._omega0, z)

    def DJ(self, z):
        return self._zero_derivative(z)

    def action_form(self, z):
        """a(z) = (p, -q)/2, com a convenção Omega = Da^T - Da"""
        n = self.n
        return 0.5 * np.concatenate([z[:, n:], -z[:, :n]], axis=1)

    def D_action(self, z):
        return self._const(0.5 * self._omega0_inv, z)

    # Derivadas de H ficam nas subclasses

    def hessian(self, z):
        raise NotImplementedError

    def third(self, z):
        raise NotImplementedError

    def moment_hessian(self, z):
        return np.zeros((z.shape[0], 0, 2 * self.n, 2 * self.n), dtype=np.result_type(z, float))

    def X_h(self, z):
        return self.DH(z) @ self._omega0_inv.T

    def DX_h(self, z):
        return np.einsum("ij,pjk->pik", self._omega0_inv, self.hessian(z))

    def D2X_h(self, z):
        return np.einsum("ij,pjkl->pikl", self._omega0_inv, self.third(z))

    def T_h(self, z):
        dx = self.DX_h(z)
        om = self._omega0
        return om @ (dx + om @ dx @ om)

    def DT_h(self, z):
        dd = self.D2X_h(z)
        om = self._omega0
        inner = dd + np.einsum("ij,pjkl,km->piml", om, dd, om)
        return np.einsum("ij,pjkl->pikl", om, inner)

    def X_p(self, z):
        return np.einsum("ij,pmj->pim", self._omega0_inv, self.Dp(z))

    def DX_p(self, z):
        return np.einsum("ij,pmjk->pimk", self._omega0_inv, self.moment_hessian(z))

    def exact_bounds(self):
        bounds = {
            "c_omega": 1.0, "c_g": 1.0, "c_j": 1.0, "c_jt": 1.0,
            "c_domega": 0.0, "c_dg": 0.0, "c_dj": 0.0, "c_djt": 0.0,
        }
        if self.d == self.n:
            bounds.update({"c_xp": 0.0, "c_xpt": 0.0, "c_dxp": 0.0, "c_dxpt": 0.0, "c_dphi": 1.0})
        return bounds


def triple_residual(system, z):
    """
    Maior desvio das identidades da tripla e do campo nos pontos z

    Returns:
        dict: nome da identidade -> residuo maximo
    """
    om, g, jm = system.omega(z), system.G(z), system.J(z)
    eye = np.eye(2 * system.n)
    lhs_x = np.einsum("pi,pij->pj", system.X_h(z), om)
    return {
        "JT_Omega_minus_G": float(np.max(np.abs(system.J_T(z) @ om - g))),
        "Omega_J_plus_G": float(np.max(np.abs(om @ jm + g))),
        "J_squared": float(np.max(np.abs(jm @ jm + eye))),
        "Omega_antisym": float(np.max(np.abs(om + np.swapaxes(om, 1, 2)))),
        "G_sym": float(np.max(np.abs(g - np.swapaxes(g, 1, 2)))),
        "X_h_form": float(np.max(np.abs(lhs_x + system.DH(z)))),
        "T_h_sym": float(np.max(np.abs(system.T_h(z) - np.swapaxes(system.T_h(z), 1, 2)))),
    }


BOUND_KEYS = (
    "c_omega", "c_g", "c_j", "c_jt", "c_domega", "c_dg", "c_dj", "c_djt",
    "c_xh", "c_dxh", "c_dxht", "c_d2xh", "c_th", "c_dth",
    "c_xp", "c_dxp", "c_xpt", "c_dxpt", "c_dphi",
)


@dataclass(frozen=True)
class SystemBounds:
    """
    Constantes globais (H1) do sistema sobre o dominio complexo B

    O dominio é a bola |z_i - c_i| < radius (norma do max) e o dominio de
    tempos é |s| < time_radius. rigorous=False quando alguma constante veio
    de amostragem.
    """

    c_omega: float = 1.0
    c_g: float = 1.0
    c_j: float = 1.0
    c_jt: float = 1.0
    c_domega: float = 0.0
    c_dg: float = 0.0
    c_dj: float = 0.0
    c_djt: float = 0.0
    c_xh: float = 1.0
    c_dxh: float = 1.0
    c_dxht: float = 1.0
    c_d2xh: float = 1.0
    c_th: float = 1.0
    c_dth: float = 1.0
    c_xp: float = 0.0
    c_dxp: float = 0.0
    c_xpt: float = 0.0
    c_dxpt: float = 0.0
    c_dphi: float = 1.0
    domain_center: tuple = ()
    domain_radius: float = 3.0
    time_radius: float = 1.0
    rigorous: bool = True
    notes: tuple = field(default_factory=tuple)

    @staticmethod
    def validate_data(data):
        """
        Valida um dicionario de constantes

        Returns:
            tuple: (is_valid, error_message)
        """
        for key in BOUND_KEYS:
            if key in data:
                value = data[key]
                if not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
                    return False, f"Constante {key} precisa ser finita e nao negativa"
        for key in ("c_omega", "c_g", "c_j"):
            if key in data and data[key] <= 0:
                return False, f"Constante {key} precisa ser positiva"
        if data.get("domain_radius", 1.0) <= 0:
            return False, "Raio do dominio precisa ser positivo"
        if data.get("time_radius", 1.0) <= 0:
            return False, "Raio de tempo precisa ser positivo"
        return True, None

    def check_strip(self, rho):
        """H2 pede 0 < rho < r"""
        return 0.0 < rho < self.time_radius

    def center(self, size):
        if self.domain_center:
            return np.asarray(self.domain_center, dtype=float)
        return np.zeros(size)

    def contains(self, values):
        """values (P, 2n) reais dentro da bola aberta"""
        c = self.center(values.shape[1])
        return bool(np.max(np.abs(values - c), initial=0.0) < self.domain_radius)

    def to_dict(self):
        data = asdict(self)
        data["domain_center"] = list(self.domain_center)
        data["notes"] = list(self.notes)
        return data

    @classmethod
    def estimate(cls, system, samples=2000, seed=0, margin=0.1, overrides=None,
                 domain_center=(), domain_radius=3.0, time_radius=1.0):
        """
        Estima as constantes H1 por amostragem no dominio complexo

        Nao é rigoroso: o resultado sai com rigorous=False. Constantes exatas
        do sistema e os overrides do usuario tem prioridade.

        Args:
            system (HamiltonianSystem): sistema
            samples (int): numero de pontos complexos
            seed (int): semente do gerador
            margin (float): folga relativa aplicada aos maximos amostrados
            overrides (dict, optional): constantes fornecidas pelo usuario
        """
        rng = np.random.default_rng(seed)
        m = 2 * system.n
        center = np.asarray(domain_center, dtype=float) if domain_center else np.zeros(m)
        radius = domain_radius * np.sqrt(rng.uniform(0.0, 1.0, (samples, m)))
        angle = rng.uniform(0.0, 2.0 * np.pi, (samples, m))
        z = center + radius * np.exp(1j * angle)

        sampled = {
            "c_omega": tensor_norm(system.omega(z)),
            "c_g": tensor_norm(system.G(z)),
            "c_j": tensor_norm(system.J(z)),
            "c_jt": tensor_norm(system.J_T(z)),
            "c_domega": tensor_norm(system.D_omega(z)),
            "c_dg": tensor_norm(system.DG(z)),
            "c_dj": tensor_norm(system.DJ(z)),
            "c_djt": tensor_norm(system.DJ_T(z)),
            "c_xh": tensor_norm(system.X_h(z)),
            "c_dxh": tensor_norm(system.DX_h(z)),
            "c_dxht": tensor_norm(system.DX_h_T(z)),
            "c_d2xh": tensor_norm(system.D2X_h(z)),
            "c_th": tensor_norm(system.T_h(z)),
            "c_dth": tensor_norm(system.DT_h(z)),
        }
        if system.moments:
            s = time_radius * np.sqrt(rng.uniform(0.0, 1.0, (samples, system.moments))) * np.exp(
                1j * rng.uniform(0.0, 2.0 * np.pi, (samples, system.moments))
            )
            sampled.update({
                "c_xp": tensor_norm(system.X_p(z)),
                "c_xpt": tensor_norm(system.X_p_T(z)),
                "c_dxp": tensor_norm(system.DX_p(z)),
                "c_dxpt": tensor_norm(system.DX_p_T(z)),
                "c_dphi": tensor_norm(system.D_flow(s, z)),
            })
        values = {key: value * (1.0 + margin) for key, value in sampled.items()}
        values.update(system.exact_bounds())
        values.update(overrides or {})

        estimated = sorted(set(sampled) - set(system.exact_bounds()) - set(overrides or {}))
        rigorous = not estimated
        if not rigorous:
            logger.warning("constantes H1 estimadas por amostragem (nao rigoroso): %s", ",".join(estimated))
        return cls(
            **{key: float(values[key]) for key in BOUND_KEYS if key in values},
            domain_center=tuple(float(c) for c in domain_center),
            domain_radius=float(domain_radius),
            time_radius=float(time_radius),
            rigorous=rigorous,
            notes=tuple(f"estimada:{key}" for key in estimated),
        )

    def with_overrides(self, **values):
        known = {f.name for f in fields(self)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"Constantes desconhecidas: {sorted(unknown)}")
        return replace(self, **values)


@dataclass(frozen=True)
class LiftSpec:
    """
    Desconto f(p) no espaço de momentos, ou diretamente omega_p

    omega_p = Df(p0)^T com p0 = <p∘K>.
    """

    omega_p: tuple = None
    f: object = None
    grad_f: object = None

    def resolve(self, p0):
        """Frequencia do momento pra media p0"""
        p0 = np.asarray(p0, dtype=float)
        derived = None
        if self.grad_f is not None:
            derived = np.asarray(self.grad_f(p0), dtype=float).reshape(-1)
        if self.omega_p is not None:
            given = np.asarray(self.omega_p, dtype=float).reshape(-1)
            if derived is not None and not np.allclose(given, derived, rtol=1e-12, atol=1e-12):
                raise LiftError("omega_p diferente de Df(p0)")
            return given
        if derived is None:
            raise LiftError("LiftSpec precisa de omega_p ou grad_f")
        return derived
