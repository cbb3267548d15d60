"""
Familias de exemplo com derivadas em forma fechada

OscillatorFamily: n osciladores com perfil h_i(I) = a_i I + b_i I^2/2 e
acoplamento eps q1^2 q2^2. RotationalFamily: tres osciladores, com a ação
do terceiro plano como integral primeira e fluxo do momento dado por rotação.
Layout z = (q_1..q_n, p_1..p_n).
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from models.fourier import FourierModel, TWO_PI
from models.system import CanonicalSystem

logger = logging.getLogger(__name__)


class OscillatorFamily(CanonicalSystem):
    """
    Osciladores desacoplados com torção e acoplamento quartico

    Args:
        a (sequence): coeficientes lineares dos perfis
        b (sequence): coeficientes de torção dos perfis
        epsilon (float): intensidade do acoplamento eps q1^2 q2^2
    """

    name = "oscillator"

    def __init__(self, a, b, epsilon=0.0, d=None):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("Perfis a e b precisam ter o mesmo tamanho")
        n = a.size
        if n < 2:
            raise ValueError("Familia precisa de pelo menos dois planos")
        super().__init__(n, n if d is None else d)
        self.a = a
        self.b = b
        self.epsilon = float(epsilon)

    @classmethod
    def tuned(cls, omega, radii, b, epsilon=0.0):
        """Escolhe a_i pra que o toro de raios r tenha frequencia omega"""
        omega, radii, b = (np.asarray(v, dtype=float) for v in (omega, radii, b))
        a = TWO_PI * omega - b * radii**2 / 2.0
        return cls(a, b, epsilon)

    def with_epsilon(self, epsilon):
        return type(self)(self.a, self.b, epsilon)

    def profile_slope(self, action):
        """h_i'(I)"""
        return self.a + self.b * action

    def _split(self, z):
        n = self.n
        q, p = z[:, :n], z[:, n:]
        return q, p, (q * q + p * p) / 2.0

    def H(self, z):
        q, p, action = self._split(z)
        value = np.sum(self.a * action + self.b * action**2 / 2.0, axis=1)
        return value + self.epsilon * q[:, 0] ** 2 * q[:, 1] ** 2

    def DH(self, z):
        q, p, action = self._split(z)
        slope = self.profile_slope(action)
        grad = np.concatenate([slope * q, slope * p], axis=1)
        grad[:, 0] += 2.0 * self.epsilon * q[:, 0] * q[:, 1] ** 2
        grad[:, 1] += 2.0 * self.epsilon * q[:, 0] ** 2 * q[:, 1]
        return grad

    def hessian(self, z):
        n = self.n
        q, p, action = self._split(z)
        slope = self.profile_slope(action)
        out = np.zeros((z.shape[0], 2 * n, 2 * n), dtype=np.result_type(z, float))
        for i in range(n):
            iq, ip = i, n + i
            out[:, iq, iq] = self.b[i] * q[:, i] ** 2 + slope[:, i]
            out[:, ip, ip] = self.b[i] * p[:, i] ** 2 + slope[:, i]
            out[:, iq, ip] = out[:, ip, iq] = self.b[i] * q[:, i] * p[:, i]
        eps = self.epsilon
        out[:, 0, 0] += 2.0 * eps * q[:, 1] ** 2
        out[:, 1, 1] += 2.0 * eps * q[:, 0] ** 2
        out[:, 0, 1] += 4.0 * eps * q[:, 0] * q[:, 1]
        out[:, 1, 0] += 4.0 * eps * q[:, 0] * q[:, 1]
        return out

    def third(self, z):
        n = self.n
        out = np.zeros((z.shape[0],) + (2 * n,) * 3, dtype=np.result_type(z, float))
        for i in range(n):
            plane = (i, n + i)
            x = (z[:, i], z[:, n + i])
            for ia, a in enumerate(plane):
                for ib, b in enumerate(plane):
                    for ic, c in enumerate(plane):
                        value = 0.0
                        if ia == ib:
                            value = value + x[ic]
                        if ia == ic:
                            value = value + x[ib]
                        if ib == ic:
                            value = value + x[ia]
                        out[:, a, b, c] = self.b[i] * value
        eps = self.epsilon
        q1, q2 = z[:, 0], z[:, 1]
        for idx in ((0, 0, 1), (0, 1, 0), (1, 0, 0)):
            out[(slice(None),) + idx] += 4.0 * eps * q2
        for idx in ((0, 1, 1), (1, 0, 1), (1, 1, 0)):
            out[(slice(None),) + idx] += 4.0 * eps * q1
        return out

    def to_dict(self):
        return super().to_dict() | {
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "epsilon": self.epsilon,
        }


class RotationalFamily(OscillatorFamily):
    """
    Tres planos, toro de dimensão 2 e momento p = I_3

    O Hamiltoniano usado pelo Newton é o descontado H - omega_p I_3; o fluxo
    do momento gira o terceiro plano e é 2 pi periodico.
    """

    name = "rotational"
    flow_period = TWO_PI

    def __init__(self, a, b, epsilon=0.0, discount=0.0):
        a = np.asarray(a, dtype=float)
        if a.size != 3:
            raise ValueError("Familia rotacional tem exatamente tres planos")
        self.base_a = a.copy()
        self.discount = float(discount)
        effective = a.copy()
        effective[2] -= self.discount
        super().__init__(effective, b, epsilon, d=2)

    @classmethod
    def tuned(cls, omega, radii, b, epsilon=0.0, a3=1.0):
        """Frequencias omega nos dois primeiros planos; desconto casado com r_3"""
        omega, radii, b = (np.asarray(v, dtype=float) for v in (omega, radii, b))
        a = np.empty(3)
        a[:2] = TWO_PI * omega - b[:2] * radii[:2] ** 2 / 2.0
        a[2] = a3
        discount = a3 + b[2] * radii[2] ** 2 / 2.0
        return cls(a, b, epsilon, discount)

    def with_epsilon(self, epsilon):
        return type(self)(self.base_a, self.b, epsilon, self.discount)

    def undiscounted(self):
        return type(self)(self.base_a, self.b, self.epsilon, 0.0)

    def matched_discount(self, r3):
        """h_3'(r_3^2/2) do Hamiltoniano sem desconto"""
        return float(self.base_a[2] + self.b[2] * r3**2 / 2.0)

    def p(self, z):
        return ((z[:, 2] ** 2 + z[:, 5] ** 2) / 2.0)[:, None]

    def Dp(self, z):
        out = np.zeros((z.shape[0], 1, 6), dtype=np.result_type(z, float))
        out[:, 0, 2] = z[:, 2]
        out[:, 0, 5] = z[:, 5]
        return out

    def moment_hessian(self, z):
        out = np.zeros((z.shape[0], 1, 6, 6), dtype=np.result_type(z, float))
        out[:, 0, 2, 2] = 1.0
        out[:, 0, 5, 5] = 1.0
        return out

    def flow(self, s, z):
        angle = s[:, 0]
        c, sn = np.cos(angle), np.sin(angle)
        out = np.array(z, dtype=np.result_type(z, s, float), copy=True)
        out[:, 2] = c * z[:, 2] + sn * z[:, 5]
        out[:, 5] = -sn * z[:, 2] + c * z[:, 5]
        return out

    def D_flow(self, s, z):
        angle = s[:, 0]
        c, sn = np.cos(angle), np.sin(angle)
        out = np.zeros((z.shape[0], 6, 6), dtype=np.result_type(z, s, float))
        out[:, range(6), range(6)] = 1.0
        out[:, 2, 2] = c
        out[:, 2, 5] = sn
        out[:, 5, 2] = -sn
        out[:, 5, 5] = c
        return out

    def to_dict(self):
        return super().to_dict() | {"a": self.base_a.tolist(), "discount": self.discount}


SYSTEMS = {
    OscillatorFamily.name: OscillatorFamily,
    RotationalFamily.name: RotationalFamily,
}


def build_system(name, omega, radii, b, epsilon=0.0, a=None, a3=1.0):
    """
    Monta uma familia registrada a partir dos parametros da configuração

    Sem a explicito, os perfis sao ajustados pra que o toro de raios r tenha
    frequencia omega.
    """
    if name not in SYSTEMS:
        raise ValueError(f"Sistema desconhecido: {name}")
    family = SYSTEMS[name]
    if a is None:
        if family is RotationalFamily:
            return family.tuned(omega, radii, b, epsilon, a3)
        return family.tuned(omega, radii, b, epsilon)
    if family is RotationalFamily:
        system = family(a, b, epsilon)
        return family(a, b, epsilon, system.matched_discount(radii[2]))
    return family(a, b, epsilon)


def exact_torus(family, radii, grid, cutoffs=None):
    """
    Toro invariante fechado da familia sem acoplamento

    Args:
        family (OscillatorFamily): familia (o acoplamento é ignorado)
        radii (sequence): raios r_i > 0 (n valores)
        grid (tuple): grade de Fourier em T^d

    Returns:
        tuple: (K, omega) com K vetor 2n x 1
    """
    radii = np.asarray(radii, dtype=float)
    n, d = family.n, family.d
    if radii.shape != (n,):
        raise ValueError(f"Precisa de {n} raios")
    if np.any(radii <= 0):
        raise ValueError("Raios precisam ser positivos")
    if len(grid) != d:
        raise ValueError("Grade com dimensão diferente do toro")
    if isinstance(family, RotationalFamily):
        expected = family.matched_discount(radii[2])
        if abs(expected - family.discount) > 1e-12 * max(1.0, abs(expected)):
            raise ValueError("Desconto nao casa com o raio do terceiro plano")

    omega = family.profile_slope(radii**2 / 2.0)[:d] / TWO_PI

    def parameterization(theta):
        values = np.zeros((theta.shape[0], 2 * n))
        for i in range(d):
            values[:, i] = radii[i] * np.cos(TWO_PI * theta[:, i])
            values[:, n + i] = -radii[i] * np.sin(TWO_PI * theta[:, i])
        for i in range(d, n):
            values[:, i] = radii[i]
        return values

    return FourierModel.from_function(parameterization, tuple(grid), cutoffs), omega


@dataclass
class AuditReport:
    """Resultado da auditoria por diferenças finitas"""

    errors: dict = field(default_factory=dict)
    tolerance: float = 1e-6

    @property
    def failures(self):
        return sorted(name for name, value in self.errors.items() if not value <= self.tolerance)

    @property
    def passed(self):
        return not self.failures

    def to_dict(self):
        return {"passed": self.passed, "failures": self.failures, "errors": self.errors}


def _central_difference(func, z, h):
    columns = []
    for k in range(z.shape[1]):
        step = np.zeros_like(z)
        step[:, k] = h
        columns.append((np.asarray(func(z + step)) - np.asarray(func(z - step))) / (2.0 * h))
    return np.stack(columns, axis=-1)


def _relative_error(analytic, numeric):
    analytic = np.asarray(analytic)
    scale = max(1.0, float(np.max(np.abs(analytic), initial=0.0)))
    return float(np.max(np.abs(analytic - numeric), initial=0.0)) / scale


def finite_difference_audit(system, points=50, seed=0, h=1e-5, tolerance=1e-6, spread=1.0):
    """
    Compara cada derivada fechada com diferenças centrais da função mãe

    Returns:
        AuditReport: erro relativo por derivada; failures lista os nomes reprovados
    """
    rng = np.random.default_rng(seed)
    z = rng.uniform(-spread, spread, (points, 2 * system.n))
    report = AuditReport(tolerance=tolerance)
    pairs = {
        "DH": (system.H, system.DH),
        "DX_h": (system.X_h, system.DX_h),
        "D2X_h": (system.DX_h, system.D2X_h),
        "DOmega": (system.omega, system.D_omega),
        "DG": (system.G, system.DG),
        "DJ": (system.J, system.DJ),
        "DT_h": (system.T_h, system.DT_h),
        "Dp": (system.p, system.Dp),
        "DX_p": (system.X_p, system.DX_p),
        "D_action": (system.action_form, system.D_action),
    }
    for name, (parent, derivative) in pairs.items():
        report.errors[name] = _relative_error(derivative(z), _central_difference(parent, z, h))

    s = rng.uniform(-1.0, 1.0, (points, system.moments))
    report.errors["D_zPhi"] = _relative_error(
        system.D_flow(s, z), _central_difference(lambda w: system.flow(s, w), z, h)
    )
    action_jac = system.D_action(z)
    report.errors["action_form"] = _relative_error(
        np.swapaxes(action_jac, 1, 2) - action_jac, system.omega(z)
    )
    if not report.passed:
        logger.warning("auditoria reprovou %s", ",".join(report.failures))
    return report
