"""
Estados do metodo de Newton: referenciais, erro ponderado, correções e veredito
"""

import math
from dataclasses import dataclass, field

import numpy as np

from models.fourier import strip_norm, transpose


@dataclass(frozen=True)
class FrameBundle:
    """
    Referenciais tangente L, normal N e simpletico P = [L N] de uma parametrização

    Guarda tambem B = G_L^{-1}, a torção T, Lambda e os residuos geometricos.
    """

    L: object
    N: object
    B: object
    P: object
    G_L: object
    T: object
    Lambda: object
    omega_L: object
    omega_N: object
    E_sym: object
    E_red: dict = None
    min_singular: float = math.nan
    gram_condition: float = math.nan

    @property
    def n(self):
        return self.L.shape[1]

    def twist_report(self):
        """Determinante e numero de condição de <T>"""
        avg = self.T.average()
        det = float(np.linalg.det(avg))
        cond = float(np.linalg.cond(avg)) if det != 0.0 else math.inf
        return {"det": det, "cond": cond, "average": avg.tolist()}

    def diagnostics(self, rho=0.0):
        report = {
            "omega_L": strip_norm(self.omega_L, rho),
            "omega_N": strip_norm(self.omega_N, rho),
            "E_sym": strip_norm(self.E_sym, rho),
            "T_asym": strip_norm(self.T - transpose(self.T), rho),
            "min_singular": self.min_singular,
            "gram_condition": self.gram_condition,
            "twist_cond": self.twist_report()["cond"],
        }
        if self.E_red:
            report.update({f"E_red_{key}": strip_norm(value, rho) for key, value in self.E_red.items()})
        return report


@dataclass(frozen=True)
class WeightedErrorNorm:
    """
    eps = max(||eta_L||_rho, ||eta_N||_rho/(gamma delta^tau))

    Coeficientes de eta abaixo de floor (piso de arredondamento) nao entram
    na norma.
    """

    tangent: float
    normal: float
    gamma: float
    tau: float
    delta: float
    rho: float
    floor: float = 0.0

    @property
    def value(self):
        return max(self.tangent, self.normal / (self.gamma * self.delta**self.tau))

    @classmethod
    def measure(cls, eta_L, eta_N, dio, delta, rho, floor=0.0):
        tangent = strip_norm(eta_L.clean(floor), rho)
        normal = strip_norm(eta_N.clean(floor), rho)
        return cls(tangent, normal, dio.gamma, dio.tau, delta, rho, floor)

    def to_dict(self):
        return {
            "eps": self.value,
            "eta_L": self.tangent,
            "eta_N": self.normal,
            "delta": self.delta,
            "rho": self.rho,
            "floor": self.floor,
        }


@dataclass(frozen=True)
class TorusState:
    """Snapshot de uma iteração: K, erro de invariancia e projeções"""

    K: object
    E: object
    eta_L: object
    eta_N: object
    weighted: WeightedErrorNorm
    bundle: FrameBundle
    omega: tuple
    rho: float
    delta: float
    iteration: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def weighted_error(self):
        return self.weighted.value

    @property
    def avg_eta_N(self):
        return self.eta_N.average().ravel()

    def to_log(self):
        return {
            "iteration": self.iteration,
            "eps": self.weighted_error,
            "eta_L": self.weighted.tangent,
            "eta_N": self.weighted.normal,
            "rho": self.rho,
            "delta": self.delta,
            "norm_rho": self.weighted.rho,
            "rounding_floor": self.weighted.floor,
            "spectral_tail": self.K.spectral_tail(),
        } | self.diagnostics


@dataclass(frozen=True)
class CorrectionData:
    """Correções xi_L (split em DK e X_p) e xi_N, com <xi_L> = 0"""

    xi_L: object
    xi_N: object
    avg_xi_N: np.ndarray
    d: int

    @property
    def xi_L_DK(self):
        return self.xi_L[: self.d, :]

    @property
    def xi_L_Xp(self):
        return self.xi_L[self.d:, :]


@dataclass
class IterationResult:
    """Sequencia de estados e veredito do metodo"""

    states: list
    verdict: str
    method: str
    reason: str = ""

    @property
    def converged(self):
        return self.verdict == "converged"

    @property
    def final(self):
        return self.states[-1]

    @property
    def last_good(self):
        return min(self.states, key=lambda state: state.weighted_error)

    @property
    def errors(self):
        return [state.weighted_error for state in self.states]

    def to_log(self):
        return [state.to_log() for state in self.states]

    def summary(self):
        return {
            "verdict": self.verdict,
            "method": self.method,
            "reason": self.reason,
            "iterations": len(self.states) - 1,
            "eps": self.errors,
            "order": fit_convergence_order(self.errors),
        }


def fit_convergence_order(errors, floor=1e-11):
    """
    Ordem q ajustada em log eps_{j+1} = q log eps_j + log Q

    Usa so os pares decrescentes com eps_{j+1} acima do piso de arredondamento;
    devolve nan com menos de dois pares.
    """
    pairs = [
        (math.log(a), math.log(b))
        for a, b in zip(errors, errors[1:])
        if b < a and b > floor and math.isfinite(a)
    ]
    if len(pairs) < 2:
        return math.nan
    x, y = np.array(pairs).T
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
