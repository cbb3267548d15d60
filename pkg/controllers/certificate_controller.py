import inspect
import logging
import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy import special

from controllers.geometry_controller import GeometryController
from controllers.newton_controller import NewtonController
from models.errors import CutoffError, HypothesisError, SingularMatrixError, StaleNormError
from models.fourier import FourierModel, shell_divisor_sums, strip_norm, transpose
from models.ledger import (
    ConstantLedger,
    FinalConstants,
    KamReport,
    RussmannConstants,
    twist_factor,
)
from models.system import BOUND_KEYS

logger = logging.getLogger(__name__)

TAIL_RATIO = 1e-2


def hurwitz_zeta(a, b):
    """zeta(a, b) = sum_{j >= 0} (b + j)^{-a}"""
    if b <= 0:
        raise ValueError("b precisa ser positivo")
    return float(special.zeta(a, b))


def upper_incomplete_gamma_integral(x0, s):
    """Integral de u^s e^{-u} em [x0, inf)"""
    if x0 < 0:
        raise ValueError("x0 precisa ser nao negativo")
    return float(special.gammaincc(s + 1.0, x0) * special.gamma(s + 1.0))


def _row_norm(matrix):
    return float(np.max(np.sum(np.abs(matrix), axis=1), initial=0.0))


# Linhas das tabelas, na ordem impressa. Os nomes dos argumentos sao os
# rotulos das dependencias.

GEOMETRY_ROWS = (
    ("C_N_OmegaL", lambda d, n, c1_R_delta: (d + n - 2) * c1_R_delta),
    ("C_N_OmegaN", lambda sigma_B, C_N_OmegaL: sigma_B**2 * C_N_OmegaL),
    ("C_sym", lambda C_N_OmegaL, C_N_OmegaN: max(C_N_OmegaL, C_N_OmegaN)),
    ("C_L_E", lambda C_L, C_N, mu: (C_L + C_N * mu) / (1.0 - mu**2)),
    ("C_N_E", lambda C_L, C_N, mu: (C_N + C_L * mu) / (1.0 - mu**2)),
    ("C_E", lambda C_L_E, C_N_E, gdt: C_L_E + gdt * C_N_E),
    ("C_L_ET", lambda n, C_LT, C_NT, mu: n * (C_LT + mu * C_NT) / (1.0 - mu**2)),
    ("C_N_ET", lambda n, C_LT, C_NT, mu: n * (C_NT + mu * C_LT) / (1.0 - mu**2)),
    ("C_ET", lambda C_L_ET, C_N_ET, gdt: C_L_ET + gdt * C_N_ET),
    ("C_L_DE", lambda d, c_omega, C_NT, C_L_E, C_LT, C_N_E:
        d * (1.0 + c_omega * (C_NT * C_L_E + C_LT * C_N_E)) * C_L_E),
    ("C_N_DE", lambda d, c_omega, C_NT, C_L_E, C_LT, C_N_E:
        d * (1.0 + c_omega * (C_NT * C_L_E + C_LT * C_N_E)) * C_N_E),
    ("C_DE", lambda C_L_DE, C_N_DE, gdt: C_L_DE + gdt * C_N_DE),
    ("C_L_DET", lambda n, c_omega, C_N, C_L_ET, C_L, C_N_ET:
        n * (1.0 + c_omega * (C_N * C_L_ET + C_L * C_N_ET)) * C_L_ET),
    ("C_N_DET", lambda n, c_omega, C_N, C_L_ET, C_L, C_N_ET:
        n * (1.0 + c_omega * (C_N * C_L_ET + C_L * C_N_ET)) * C_N_ET),
    ("C_DET", lambda C_L_DET, C_N_DET, gdt: C_L_DET + gdt * C_N_DET),
    ("C_LieK", lambda C_E, delta, mu, c_xh: C_E * delta * mu + c_xh),
    ("C_LieL", lambda C_DE, mu, c_dxp, C_E, delta, c_dxh, C_L:
        C_DE * mu + c_dxp * C_E * delta * mu + c_dxh * C_L),
    ("C_LieLT", lambda C_DET, mu, c_dxpt, C_E, delta, C_LT, c_dxht:
        max(C_DET * mu, c_dxpt * C_E * delta * mu) + C_LT * c_dxht),
    ("C_LieGL", lambda C_LieLT, c_g, C_L, C_LT, c_dg, C_LieK, C_LieL:
        C_LieLT * c_g * C_L + C_LT * c_dg * C_LieK * C_L + C_LT * c_g * C_LieL),
    ("C_LieB", lambda sigma_B, C_LieGL: sigma_B**2 * C_LieGL),
    ("C_LieN", lambda c_dj, C_LieK, C_L, sigma_B, c_j, C_LieL, C_LieB:
        c_dj * C_LieK * C_L * sigma_B + c_j * C_LieL * sigma_B + c_j * C_L * C_LieB),
    ("C_T", lambda C_NT, c_th, C_N: C_NT * c_th * C_N),
    ("C_L_EredLL", lambda d, delta, c_dxp, C_NT, c_omega, C_L_E:
        d + (d + delta * c_dxp) * C_NT * c_omega * C_L_E),
    ("C_N_EredLL", lambda d, delta, c_dxp, C_NT, c_omega, C_N_E:
        (d + delta * c_dxp) * C_NT * c_omega * C_N_E),
    ("C_L_EredNL", lambda d, delta, c_dxp, C_LT, c_omega, C_L_E:
        (d + delta * c_dxp) * C_LT * c_omega * C_L_E),
    ("C_N_EredNL", lambda d, delta, c_dxp, C_LT, c_omega, C_N_E:
        d + (d + delta * c_dxp) * C_LT * c_omega * C_N_E),
    ("C_L_EredNN", lambda delta, C_LT, c_domega, C_L_E, C_N, n, d, c_omega, C_NT, c_dxpt:
        delta * C_LT * c_domega * C_L_E * C_N
        + max(n + d * C_L_E * c_omega * C_NT, delta * c_dxpt * C_L_E * c_omega * C_N)),
    ("C_N_EredNN", lambda delta, C_LT, c_domega, C_N_E, C_N, d, c_omega, C_NT, c_dxpt:
        delta * C_LT * c_domega * C_N_E * C_N
        + max(d * C_N_E * c_omega * C_NT, delta * c_dxpt * C_N_E * c_omega * C_N)),
    ("C_EredNN", lambda C_L_EredNN, C_N_EredNN, gdt: C_L_EredNN + gdt * C_N_EredNN),
    ("C_L_EredLN", lambda delta, sigma_B, C_LT, c_g, c_dj, C_L, C_L_E, C_L_EredNL:
        delta * sigma_B**2 * C_LT * c_g * c_dj * C_L * C_L_E + sigma_B**2 * C_L_EredNL),
    ("C_N_EredLN", lambda gdt, delta, sigma_B, C_LT, c_g, c_dj, C_L, C_N_E, C_N_EredNL, C_N_OmegaL, C_LieB:
        gdt * delta * sigma_B**2 * C_LT * c_g * c_dj * C_L * C_N_E
        + gdt * sigma_B**2 * C_N_EredNL + sigma_B * C_N_OmegaL * C_LieB),
    ("C_EredLN", lambda C_L_EredLN, C_N_EredLN: C_L_EredLN + C_N_EredLN),
)

INTERMEDIATE_ROWS = (
    ("C_L_avgxiN", lambda sigma_Tinv: sigma_Tinv),
    ("C_N_avgxiN", lambda delta, rho, tau, sigma_Tinv, C_T, c_R_rho:
        (delta / rho) ** tau * sigma_Tinv * C_T * c_R_rho),
    ("C_avgxiN", lambda C_L_avgxiN, C_N_avgxiN: C_L_avgxiN + C_N_avgxiN),
    ("C_L_xiN", lambda C_L_avgxiN: C_L_avgxiN),
    ("C_N_xiN", lambda C_N_avgxiN, c_R_delta: C_N_avgxiN + c_R_delta),
    ("C_xiN", lambda C_L_xiN, C_N_xiN: C_L_xiN + C_N_xiN),
    ("C_L_DeltaKi", lambda C_N, C_L_xiN: C_N * C_L_xiN),
    ("C_N_DeltaKi", lambda C_N, C_N_xiN: C_N * C_N_xiN),
    ("C_DeltaKi", lambda C_L_DeltaKi, C_N_DeltaKi: C_L_DeltaKi + C_N_DeltaKi),
    ("C_L_DeltaDKi", lambda d, C_N, C_L_avgxiN: d * C_N * C_L_avgxiN),
    ("C_N_DeltaDKi", lambda d, C_N, C_N_avgxiN, c1_R_delta: d * C_N * (C_N_avgxiN + c1_R_delta)),
    ("C_DeltaDKi", lambda C_L_DeltaDKi, C_N_DeltaDKi: C_L_DeltaDKi + C_N_DeltaDKi),
    ("C_L_DeltaDKiT", lambda n, C_NT, C_L_avgxiN: n * C_NT * C_L_avgxiN),
    ("C_N_DeltaDKiT", lambda n, C_NT, C_N_avgxiN, c1_R_delta: n * C_NT * (C_N_avgxiN + c1_R_delta)),
    ("C_DeltaDKiT", lambda C_L_DeltaDKiT, C_N_DeltaDKiT: C_L_DeltaDKiT + C_N_DeltaDKiT),
    ("C_L_DeltaLi", lambda C_L_DeltaDKi, delta, c_dxp, C_L_DeltaKi: C_L_DeltaDKi + delta * c_dxp * C_L_DeltaKi),
    ("C_N_DeltaLi", lambda C_N_DeltaDKi, delta, c_dxp, C_N_DeltaKi: C_N_DeltaDKi + delta * c_dxp * C_N_DeltaKi),
    ("C_DeltaLi", lambda C_L_DeltaLi, C_N_DeltaLi: C_L_DeltaLi + C_N_DeltaLi),
    ("C_L_DeltaLiT", lambda C_L_DeltaDKiT, delta, c_dxpt, C_L_DeltaKi:
        max(C_L_DeltaDKiT, delta * c_dxpt * C_L_DeltaKi)),
    ("C_N_DeltaLiT", lambda C_N_DeltaDKiT, delta, c_dxpt, C_N_DeltaKi:
        max(C_N_DeltaDKiT, delta * c_dxpt * C_N_DeltaKi)),
    ("C_DeltaLiT", lambda C_L_DeltaLiT, C_N_DeltaLiT: C_L_DeltaLiT + C_N_DeltaLiT),
    ("C_L_Ei", lambda C_L_E, c_dxh, C_L_DeltaKi, C_LieN, C_L_xiN:
        C_L_E + c_dxh * C_L_DeltaKi + C_LieN * C_L_xiN),
    ("C_N_Ei", lambda gdt, C_N_E, sigma_N, c_dxh, C_N_DeltaKi, C_LieN, C_N_xiN:
        gdt * (C_N_E + sigma_N) + c_dxh * C_N_DeltaKi + C_LieN * C_N_xiN),
    ("C_Ei", lambda C_L_Ei, C_N_Ei: C_L_Ei + C_N_Ei),
    ("Q_etaiN", lambda C_DeltaLiT, c_omega, delta, C_LT, c_domega, C_DeltaKi, C_Ei, C_EredNN, C_xiN, c_d2xh:
        (C_DeltaLiT * c_omega + delta * C_LT * c_domega * C_DeltaKi) * C_Ei
        + C_EredNN * C_xiN + delta * C_LT * c_omega * 0.5 * c_d2xh * C_DeltaKi**2),
)


def _new_pair(stem, left, right, total=None):
    """Linhas C_L_<stem>, C_N_<stem> e C_<stem> (soma, ou total se dado)"""
    rows = [(f"C_L_{stem}", left), (f"C_N_{stem}", right)]
    rows.append((f"C_{stem}", total or _sum_row(f"C_L_{stem}", f"C_N_{stem}")))
    return rows


def _sum_row(left, right):
    def total(**values):
        return values[left] + values[right]

    total.labels = (left, right)
    return total


NEW_OBJECT_ROWS = tuple(
    [
        ("C_L_xiL", lambda c_R_delta, C_T, C_L_xiN: c_R_delta * (1.0 + C_T * C_L_xiN)),
        ("C_N_xiL", lambda c_R_delta, C_T, C_N_xiN: c_R_delta * C_T * C_N_xiN),
        ("C_xiL", lambda C_L_xiL, C_N_xiL: C_L_xiL + C_N_xiL),
    ]
    + _new_pair(
        "DeltaKn",
        lambda c_dphi, C_L, C_L_xiL, gdt, C_L_DeltaKi: c_dphi * C_L * C_L_xiL + gdt * C_L_DeltaKi,
        lambda c_dphi, C_L, C_N_xiL, gdt, C_N_DeltaKi: c_dphi * C_L * C_N_xiL + gdt * C_N_DeltaKi,
    )
    + _new_pair(
        "DeltaDKn",
        lambda d, c_dphi, C_L, C_L_xiL, gdt, C_L_DeltaDKi: d * c_dphi * C_L * C_L_xiL + gdt * C_L_DeltaDKi,
        lambda d, c_dphi, C_L, C_N_xiL, gdt, C_N_DeltaDKi: d * c_dphi * C_L * C_N_xiL + gdt * C_N_DeltaDKi,
    )
    + _new_pair(
        "DeltaDKnT",
        lambda n, c_dphi, C_L, C_L_xiL, gdt, C_L_DeltaDKiT: 2 * n * c_dphi * C_L * C_L_xiL + gdt * C_L_DeltaDKiT,
        lambda n, c_dphi, C_L, C_N_xiL, gdt, C_N_DeltaDKiT: 2 * n * c_dphi * C_L * C_N_xiL + gdt * C_N_DeltaDKiT,
    )
    + _new_pair(
        "DeltaLn",
        lambda C_L_DeltaDKn, delta, c_dxp, C_L_DeltaKn: C_L_DeltaDKn + delta * c_dxp * C_L_DeltaKn,
        lambda C_N_DeltaDKn, delta, c_dxp, C_N_DeltaKn: C_N_DeltaDKn + delta * c_dxp * C_N_DeltaKn,
    )
    + _new_pair(
        "DeltaLnT",
        lambda C_L_DeltaDKnT, delta, c_dxpt, C_L_DeltaKn: max(C_L_DeltaDKnT, delta * c_dxpt * C_L_DeltaKn),
        lambda C_N_DeltaDKnT, delta, c_dxpt, C_N_DeltaKn: max(C_N_DeltaDKnT, delta * c_dxpt * C_N_DeltaKn),
    )
    + _new_pair(
        "DeltaGLn",
        lambda C_L_DeltaLnT, c_g, C_L, delta, C_LT, c_dg, C_L_DeltaKn, C_L_DeltaLn:
            C_L_DeltaLnT * c_g * C_L + delta * C_LT * c_dg * C_L_DeltaKn * C_L + C_LT * c_g * C_L_DeltaLn,
        lambda C_N_DeltaLnT, c_g, C_L, delta, C_LT, c_dg, C_N_DeltaKn, C_N_DeltaLn:
            C_N_DeltaLnT * c_g * C_L + delta * C_LT * c_dg * C_N_DeltaKn * C_L + C_LT * c_g * C_N_DeltaLn,
    )
    + _new_pair(
        "DeltaBn",
        lambda sigma_B, C_L_DeltaGLn: sigma_B**2 * C_L_DeltaGLn,
        lambda sigma_B, C_N_DeltaGLn: sigma_B**2 * C_N_DeltaGLn,
        lambda sigma_B, C_DeltaGLn: sigma_B**2 * C_DeltaGLn,
    )
    + _new_pair(
        "DeltaNn",
        lambda delta, c_dj, C_L_DeltaKn, C_L, sigma_B, c_j, C_L_DeltaLn, C_L_DeltaBn:
            delta * c_dj * C_L_DeltaKn * C_L * sigma_B + c_j * C_L_DeltaLn * sigma_B + c_j * C_L * C_L_DeltaBn,
        lambda delta, c_dj, C_N_DeltaKn, C_L, sigma_B, c_j, C_N_DeltaLn, C_N_DeltaBn:
            delta * c_dj * C_N_DeltaKn * C_L * sigma_B + c_j * C_N_DeltaLn * sigma_B + c_j * C_L * C_N_DeltaBn,
    )
    + _new_pair(
        "DeltaNnT",
        lambda delta, sigma_B, C_L, c_djt, C_L_DeltaKn, C_L_DeltaLn, c_jt, C_L_DeltaBn:
            delta * sigma_B * C_L * c_djt * C_L_DeltaKn + sigma_B * C_L_DeltaLn * c_jt + C_L_DeltaBn * C_L * c_jt,
        lambda delta, sigma_B, C_L, c_djt, C_N_DeltaKn, C_N_DeltaLn, c_jt, C_N_DeltaBn:
            delta * sigma_B * C_L * c_djt * C_N_DeltaKn + sigma_B * C_N_DeltaLn * c_jt + C_N_DeltaBn * C_L * c_jt,
    )
    + _new_pair(
        "DeltaTn",
        lambda C_L_DeltaNnT, c_th, C_N, delta, C_NT, c_dth, C_L_DeltaKn, C_L_DeltaNn:
            C_L_DeltaNnT * c_th * C_N + delta * C_NT * c_dth * C_L_DeltaKn * C_N + C_NT * c_th * C_L_DeltaNn,
        lambda C_N_DeltaNnT, c_th, C_N, delta, C_NT, c_dth, C_N_DeltaKn, C_N_DeltaNn:
            C_N_DeltaNnT * c_th * C_N + delta * C_NT * c_dth * C_N_DeltaKn * C_N + C_NT * c_th * C_N_DeltaNn,
    )
    + _new_pair(
        "DeltaiTn",
        lambda sigma_Tinv, C_L_DeltaTn: sigma_Tinv**2 * C_L_DeltaTn,
        lambda sigma_Tinv, C_N_DeltaTn: sigma_Tinv**2 * C_N_DeltaTn,
        lambda sigma_Tinv, C_DeltaTn: sigma_Tinv**2 * C_DeltaTn,
    )
    + _new_pair(
        "LiexiL",
        lambda C_T, C_L_xiN: 1.0 + C_T * C_L_xiN,
        lambda C_T, C_N_xiN: C_T * C_N_xiN,
    )
    + _new_pair(
        "En",
        lambda c_dphi, C_L_Ei, sigma_L, C_L_LiexiL: c_dphi * (C_L_Ei + sigma_L * C_L_LiexiL),
        lambda c_dphi, C_N_Ei, sigma_L, C_N_LiexiL: c_dphi * (C_N_Ei + sigma_L * C_N_LiexiL),
    )
    + [
        ("Q_etanN", lambda n, C_N_OmegaL, C_LiexiL, mu_etaN, Q_etaiN:
            (1 + n) * (1.0 + C_N_OmegaL * C_LiexiL * mu_etaN) * Q_etaiN),
        ("Q_etanL1", lambda C_EredLN, C_xiN, delta, C_NT, c_omega, c_d2xh, C_DeltaKi, gdt, C_N_OmegaN:
            C_EredLN * C_xiN + delta * C_NT * c_omega * 0.5 * c_d2xh * C_DeltaKi**2 + gdt * C_N_OmegaN),
        ("Q_etanL2", lambda C_NT, c_omega, d, C_Ei, C_xiL: C_NT * c_omega * d * C_Ei * C_xiL),
        ("Q_etanL3", lambda C_NT, c_omega, d, sigma_L, C_xiL, gdt, C_DeltaLi, C_LiexiL:
            C_NT * c_omega * (d * sigma_L * C_xiL + gdt * C_DeltaLi) * C_LiexiL),
        ("Q_etanL4", lambda C_NT, c_omega, c_dxp, c_dphi, C_xiL, C_Ei, sigma_L, C_LiexiL:
            C_NT * c_omega * c_dxp * c_dphi * C_xiL * (C_Ei + sigma_L * C_LiexiL)),
        ("Q_etanL5", lambda C_DeltaNnT, c_omega, delta, C_NT, c_domega, C_DeltaKn, C_En:
            (C_DeltaNnT * c_omega + delta * C_NT * c_domega * C_DeltaKn) * C_En),
        ("Q_etanL", lambda gdt, Q_etanL1, Q_etanL2, Q_etanL3, delta, Q_etanL4, Q_etanL5:
            gdt * Q_etanL1 + Q_etanL2 + Q_etanL3 + delta * Q_etanL4 + Q_etanL5),
    ]
)

TABLES = (GEOMETRY_ROWS, INTERMEDIATE_ROWS, NEW_OBJECT_ROWS)


def _row_labels(func):
    labels = getattr(func, "labels", None)
    if labels is not None:
        return labels
    return tuple(inspect.signature(func).parameters)


def evaluate_rows(ledger, rows):
    """Avalia as linhas em ordem, registrando valor e dependencias"""
    for label, func in rows:
        deps = _row_labels(func)
        ledger.put(label, func(**{dep: ledger[dep] for dep in deps}), deps)
    return ledger


@dataclass(frozen=True)
class TorusMeasurement:
    """Normas de um toro aproximado medidas na faixa rho"""

    rho: float
    delta: float
    DK: float
    DKT: float
    L: float
    LT: float
    B: float
    N: float
    NT: float
    Tinv: float
    dist: float
    eta_L: float
    eta_N: float

    def to_dict(self):
        return asdict(self)


class CertificateController:
    """
    Controlador do certificado KAM

    Avalia as constantes de Rüssmann, monta as tabelas de constantes, as
    constantes finais do teorema e decide a condição KAM pra um toro medido.
    """

    def __init__(self, system, dio, bounds, sigma, controls, mode="sharp"):
        """
        Construtor do controlador

        Args:
            system (HamiltonianSystem): sistema
            dio (DiophantineData): frequencia verificada
            bounds (SystemBounds): constantes H1 e dominio
            sigma (ConditionNumbers): numeros de condição H2
            controls (ControlConstants): constantes de controle H3
            mode (str): 'sharp' usa c_R(delta, m); 'uniform' usa as cotas c^_R
        """
        if mode not in ("sharp", "uniform"):
            raise ValueError(f"Modo de Rüssmann desconhecido: {mode}")
        self.system = system
        self.dio = dio
        self.bounds = bounds
        self.sigma = sigma
        self.controls = controls
        self.mode = mode

    # Constantes de Rüssmann

    def _tail(self, delta, m):
        """2^{d+1-2tau} zeta(2, 2^tau) pi^{-2tau-2} int_{4 pi delta (m+1)}^inf u^{2tau} e^{-u} du"""
        d, tau = self.dio.d, self.dio.tau
        return (
            2.0 ** (d + 1 - 2 * tau)
            * hurwitz_zeta(2.0, 2.0**tau)
            * np.pi ** (-2 * tau - 2)
            * upper_incomplete_gamma_integral(4.0 * np.pi * delta * (m + 1), 2 * tau)
        )

    def _russmann_parts(self, delta, m):
        dio = self.dio
        d, tau, gamma = dio.d, dio.tau, dio.gamma
        sums = shell_divisor_sums(dio.omega, int(m))
        shells = np.arange(sums.size)
        finite = gamma**2 * delta ** (2 * tau) * 2**d * float(np.sum(sums[1:] * np.exp(-4.0 * np.pi * shells[1:] * delta)))
        return finite, self._tail(delta, m)

    def sharp_constant(self, delta, m):
        """c_R(delta, m)"""
        if delta <= 0:
            raise ValueError("delta precisa ser positivo")
        if m < 1:
            raise ValueError("m precisa ser >= 1")
        if m > self.dio.checked_cutoff:
            raise CutoffError(f"m={m} acima do corte diofantino verificado {self.dio.checked_cutoff}")
        finite, tail = self._russmann_parts(delta, m)
        return math.sqrt(finite + tail)

    def uniform_constant(self):
        """c^_R = sqrt(2^{d+1-2tau} zeta(2, 2^tau) pi^{-2tau-2} Gamma(2tau+1))"""
        d, tau = self.dio.d, self.dio.tau
        return math.sqrt(
            2.0 ** (d + 1 - 2 * tau) * hurwitz_zeta(2.0, 2.0**tau) * np.pi ** (-2 * tau - 2) * special.gamma(2 * tau + 1)
        )

    def default_russmann_order(self, delta):
        """Menor m com cauda/soma finita < 1e-2, limitado pelo corte verificado"""
        cap = self.dio.checked_cutoff
        sums = shell_divisor_sums(self.dio.omega, cap)
        d, tau, gamma = self.dio.d, self.dio.tau, self.dio.gamma
        weights = np.cumsum(sums[1:] * np.exp(-4.0 * np.pi * np.arange(1, cap + 1) * delta))
        for m in range(1, cap + 1):
            finite = gamma**2 * delta ** (2 * tau) * 2**d * weights[m - 1]
            if self._tail(delta, m) < TAIL_RATIO * finite:
                return m
        logger.warning("cauda de c_R ainda relevante no corte m=%d (delta=%.3g)", cap, delta)
        return cap

    def compute_russmann(self, delta, m=None, rho=None):
        """
        Constantes de Rüssmann e Rüssmann-Cauchy pra mordida delta

        Args:
            delta (float): mordida
            m (int, optional): ordem da soma finita (padrão: default_russmann_order)
            rho (float, optional): faixa pra c_R(rho, m)

        Returns:
            RussmannConstants: c_R, c1_R, cotas uniformes e c_R(rho)
        """
        tau = self.dio.tau
        m = self.default_russmann_order(delta) if m is None else int(m)
        factor = twist_factor(tau)
        c_R = self.sharp_constant(delta, m)
        c1_R = factor * self.sharp_constant(tau * delta / (tau + 1.0), m)
        c_R_hat = self.uniform_constant()
        c_R_rho = self.sharp_constant(rho, m) if rho is not None else c_R
        russ = RussmannConstants(
            c_R=c_R, c1_R=c1_R, c_R_hat=c_R_hat, c1_R_hat=factor * c_R_hat, c_R_rho=c_R_rho,
            delta=float(delta), m=m, gamma=self.dio.gamma, tau=tau, d=self.dio.d,
        )
        if not russ.chain_ok:
            logger.warning("c_R(delta=%.3g, m=%d)=%.4g acima da cota uniforme %.4g", delta, m, c_R, c_R_hat)
        return russ

    # Tabelas

    def _inputs(self, rho, delta, russ):
        """Entradas do livro-razão: H1, H2, H3, dados diofantinos e faixa"""
        sigma, controls, dio = self.sigma, self.controls, self.dio
        if not 0.0 < delta < rho:
            raise HypothesisError("Precisa 0 < delta < rho")
        if not self.bounds.check_strip(rho):
            raise HypothesisError(f"Faixa rho={rho} precisa estar em (0, r={self.bounds.time_radius})")
        c_R_delta, c1_R_delta, c_R_rho = russ.select(self.mode)
        values = {
            "n": self.system.n,
            "d": dio.d,
            "gamma": dio.gamma,
            "tau": dio.tau,
            "rho": rho,
            "delta": delta,
            "gdt": dio.gamma * delta**dio.tau,
        }
        values.update({key: getattr(self.bounds, key) for key in BOUND_KEYS})
        values.update({
            "sigma_DK": sigma.sigma_DK,
            "sigma_DKT": sigma.sigma_DKT,
            "sigma_L": sigma.sigma_L,
            "sigma_LT": sigma.sigma_LT,
            "sigma_B": sigma.sigma_B,
            "sigma_N": sigma.sigma_N,
            "sigma_NT": sigma.sigma_NT,
            "sigma_Tinv": sigma.sigma_Tinv,
            "mu": controls.mu,
            "mu_E": controls.mu_E,
            "mu_etaN": controls.mu_etaN,
            "c_R_delta": c_R_delta,
            "c1_R_delta": c1_R_delta,
            "c_R_rho": c_R_rho,
        })
        return values

    def assemble_tables(self, rho, delta, russ):
        """
        Avalia todas as linhas das tabelas de constantes, em ordem

        C_L, C_N, C_LT e C_NT sao ligadas a sigma_L, sigma_N, sigma_LT e sigma_NT.

        Returns:
            ConstantLedger: valores e dependencias por rotulo
        """
        ledger = ConstantLedger()
        for label, value in self._inputs(rho, delta, russ).items():
            ledger.put(label, value)
        bindings = {"C_L": "sigma_L", "C_N": "sigma_N", "C_LT": "sigma_LT", "C_NT": "sigma_NT"}
        for label, source in bindings.items():
            ledger.put(label, ledger[source], (source,))
        ledger.notes.append("C_L, C_N, C_LT, C_NT ligadas aos numeros de condição sigma_L, sigma_N, sigma_LT, sigma_NT")
        ledger.notes.append(f"modo de Rüssmann: {self.mode}")
        if not self.bounds.rigorous:
            ledger.notes.append("constantes H1 estimadas por amostragem (nao rigoroso)")

        derived_N = ledger["c_j"] * ledger["sigma_L"] * ledger["sigma_B"]
        if ledger["sigma_N"] < derived_N:
            logger.warning("sigma_N=%.4g abaixo de c_J sigma_L sigma_B=%.4g", ledger["sigma_N"], derived_N)
            ledger.notes.append(f"sigma_N abaixo de c_J sigma_L sigma_B = {derived_N:.6g}")
        derived_NT = ledger["c_jt"] * ledger["sigma_LT"] * ledger["sigma_B"]
        if ledger["sigma_NT"] < derived_NT:
            logger.warning("sigma_NT=%.4g abaixo de c_JT sigma_LT sigma_B=%.4g", ledger["sigma_NT"], derived_NT)
            ledger.notes.append(f"sigma_NT abaixo de c_JT sigma_LT sigma_B = {derived_NT:.6g}")

        for rows in TABLES:
            evaluate_rows(ledger, rows)
        logger.info("tabelas montadas: %d constantes", len(ledger))
        return ledger

    def final_constants(self, ledger, schedule):
        """
        Constantes finais do teorema

        Raises:
            HypothesisError: delta do cronograma diferente do livro-razão
        """
        if abs(schedule.delta0 - ledger["delta"]) > 1e-15 * max(1.0, ledger["delta"]):
            raise HypothesisError("Mordida do cronograma diferente da usada nas tabelas")
        mu_E = ledger["mu_E"]
        a = schedule.ratio_a
        tau = ledger["tau"]
        ledger.put("rho_inf", schedule.rho_inf)
        ledger.put("a", a, ("rho", "rho_inf", "delta"))
        ledger.put("Q_etan", max(ledger["Q_etanL"], a**tau * ledger["Q_etanN"]), ("Q_etanL", "a", "tau", "Q_etanN"))
        ledger.put("C_theoDeltaK", a / (a - mu_E) * ledger["C_DeltaKn"], ("a", "mu_E", "C_DeltaKn"))
        for stem, source in (
            ("DK", "C_DeltaDKn"),
            ("DKT", "C_DeltaDKnT"),
            ("B", "C_DeltaBn"),
            ("N", "C_DeltaNn"),
            ("NT", "C_DeltaNnT"),
            ("iT", "C_DeltaiTn"),
        ):
            ledger.put(f"C_theoDelta{stem}", ledger[source] / (1.0 - mu_E), ("mu_E", source))
        return FinalConstants(
            a=a,
            Q_etan=ledger["Q_etan"],
            C_DeltaK=ledger["C_theoDeltaK"],
            C_DeltaDK=ledger["C_theoDeltaDK"],
            C_DeltaDKT=ledger["C_theoDeltaDKT"],
            C_DeltaB=ledger["C_theoDeltaB"],
            C_DeltaN=ledger["C_theoDeltaN"],
            C_DeltaNT=ledger["C_theoDeltaNT"],
            C_DeltaiT=ledger["C_theoDeltaiT"],
        )

    # Toro

    def measure_torus(self, K, rho, delta, clean_threshold=0.0):
        """
        Normas de DK, L, B, N, <T>^{-1}, distancia ao bordo e projeções do erro na faixa rho

        Com clean_threshold > 0 os coeficientes de eta_L e eta_N abaixo do limiar
        sao zerados antes das normas; o resultado deixa de ser rigoroso.
        """
        geometry = GeometryController(self.system, self.bounds)
        newton = NewtonController(self.system, self.dio, self.bounds)
        bundle = geometry.build_frames(K)
        E = newton.invariance_error(K)
        eta_L, eta_N = newton.project_error(E, bundle, K)
        if clean_threshold > 0:
            eta_L, eta_N = eta_L.clean(clean_threshold), eta_N.clean(clean_threshold)
        d = self.system.d
        DK = bundle.L[:, :d]
        center = FourierModel.constant(self.bounds.center(2 * self.system.n), K.grid_size, K.cutoffs)
        avg_T = bundle.T.average()
        try:
            Tinv = _row_norm(np.linalg.inv(avg_T))
        except np.linalg.LinAlgError:
            Tinv = math.inf
        return TorusMeasurement(
            rho=float(rho),
            delta=float(delta),
            DK=strip_norm(DK, rho),
            DKT=strip_norm(transpose(DK), rho),
            L=strip_norm(bundle.L, rho),
            LT=strip_norm(transpose(bundle.L), rho),
            B=strip_norm(bundle.B, rho),
            N=strip_norm(bundle.N, rho),
            NT=strip_norm(transpose(bundle.N), rho),
            Tinv=Tinv,
            dist=self.bounds.domain_radius - strip_norm(K - center, rho),
            eta_L=strip_norm(eta_L, rho),
            eta_N=strip_norm(eta_N, rho),
        )

    def _check_gaps(self, measured):
        sigma = self.sigma
        pairs = (
            ("sigma_DK", sigma.sigma_DK, measured.DK),
            ("sigma_DKT", sigma.sigma_DKT, measured.DKT),
            ("sigma_L", sigma.sigma_L, measured.L),
            ("sigma_LT", sigma.sigma_LT, measured.LT),
            ("sigma_B", sigma.sigma_B, measured.B),
            ("sigma_N", sigma.sigma_N, measured.N),
            ("sigma_NT", sigma.sigma_NT, measured.NT),
            ("sigma_Tinv", sigma.sigma_Tinv, measured.Tinv),
        )
        for name, bound, value in pairs:
            if not value < bound:
                raise HypothesisError(f"H2 violada: {name}={bound:.6g} nao excede a norma medida {value:.6g}")
        if not measured.dist > 0:
            raise HypothesisError(f"K(T_rho) nao esta dentro do dominio: distancia {measured.dist:.6g}")

    def check_kam(self, measured, ledger, final):
        """
        Condição KAM: V = C_theoE eps / (gamma delta^{tau+1}) < 1

        Raises:
            StaleNormError: normas medidas em outra faixa
            HypothesisError: algum sigma nao excede a norma medida
        """
        rho, delta = ledger["rho"], ledger["delta"]
        if abs(measured.rho - rho) > 1e-15 * max(1.0, rho) or abs(measured.delta - delta) > 1e-15 * max(1.0, delta):
            raise StaleNormError(f"Normas medidas em rho={measured.rho}, delta={measured.delta}; esperado rho={rho}, delta={delta}")
        self._check_gaps(measured)
        sigma, controls = self.sigma, self.controls
        gamma, tau, a = ledger["gamma"], ledger["tau"], final.a
        gdt = gamma * delta**tau
        kappa = controls.mu_E

        terms = {
            "sym": gdt * max(1.0, ledger["C_sym"]) / controls.mu,
            "xiL": ledger["C_xiL"],
            "DeltaK": delta * final.C_DeltaK / measured.dist,
            "DeltaDK": final.C_DeltaDK / (sigma.sigma_DK - measured.DK),
            "DeltaDKT": final.C_DeltaDKT / (sigma.sigma_DKT - measured.DKT),
            "DeltaB": final.C_DeltaB / (sigma.sigma_B - measured.B),
            "DeltaN": final.C_DeltaN / (sigma.sigma_N - measured.N),
            "DeltaNT": final.C_DeltaNT / (sigma.sigma_NT - measured.NT),
            "DeltaiT": final.C_DeltaiT / (sigma.sigma_Tinv - measured.Tinv),
            "etaN": 1.0 / controls.mu_etaN,
            "Q_etan": a ** (tau + 1) * final.Q_etan / kappa,
        }
        C_theoE = max(terms.values())
        dominating = max(terms, key=terms.get)
        epsilon = max(measured.eta_L, measured.eta_N / gdt)
        value = C_theoE * epsilon / (gdt * delta)
        passed = value < 1.0
        radii = {}
        if passed:
            radii = {
                "K": final.C_DeltaK * epsilon / gdt,
                "DK": final.C_DeltaDK * epsilon / (gdt * delta),
                "DKT": final.C_DeltaDKT * epsilon / (gdt * delta),
                "B": final.C_DeltaB * epsilon / (gdt * delta),
                "N": final.C_DeltaN * epsilon / (gdt * delta),
                "NT": final.C_DeltaNT * epsilon / (gdt * delta),
                "iT": final.C_DeltaiT * epsilon / (gdt * delta),
            }
        notes = list(ledger.notes) + ["kappa = mu_E"]
        logger.info("condicao KAM V=%.3e passou=%s dominante=%s", value, passed, dominating)
        return KamReport(
            value=value, passed=passed, C_theoE=C_theoE, terms=terms, dominating=dominating,
            epsilon=epsilon, radii=radii, measured=measured.to_dict(),
            rigorous=self.bounds.rigorous, notes=notes,
        )

    def certify(self, K, schedule, m=None, clean_threshold=0.0):
        """Mede K, monta tabelas e constantes finais e decide a condição KAM"""
        russ = self.compute_russmann(schedule.delta0, m, rho=schedule.rho0)
        ledger = self.assemble_tables(schedule.rho0, schedule.delta0, russ)
        final = self.final_constants(ledger, schedule)
        measured = self.measure_torus(K, schedule.rho0, schedule.delta0, clean_threshold)
        if clean_threshold > 0:
            ledger.notes.append(f"eta_L e eta_N limpos com limiar {clean_threshold:.3g} (nao rigoroso)")
        report = self.check_kam(measured, ledger, final)
        if clean_threshold > 0:
            report.rigorous = False
        return report, ledger, russ

    def certify_history(self, states, schedule, m=None, clean_threshold=0.0):
        """
        V_j e termo dominante pra cada estado do metodo de Newton

        As constantes sao montadas uma vez. Em cada estado eta é limpo com
        max(clean_threshold, piso de arredondamento do estado), entao os
        valores nao sao rigorosos.

        Returns:
            dict: entradas por iteração e se V nao cresce ao longo delas
        """
        russ = self.compute_russmann(schedule.delta0, m, rho=schedule.rho0)
        ledger = self.assemble_tables(schedule.rho0, schedule.delta0, russ)
        final = self.final_constants(ledger, schedule)
        entries = []
        for state in states:
            threshold = max(clean_threshold, state.weighted.floor)
            try:
                measured = self.measure_torus(state.K, schedule.rho0, schedule.delta0, threshold)
                report = self.check_kam(measured, ledger, final)
            except HypothesisError as e:
                logger.warning("iteracao %d sem condição KAM: %s", state.iteration, e)
                entries.append({"iteration": state.iteration, "V": None, "dominating": None, "error": str(e)})
                continue
            entries.append({
                "iteration": state.iteration,
                "V": report.value,
                "dominating": report.dominating,
                "C_theoE": report.C_theoE,
                "epsilon": report.epsilon,
                "clean_threshold": threshold,
            })
        values = [entry["V"] for entry in entries if entry["V"] is not None]
        monotone = all(later <= earlier for earlier, later in zip(values, values[1:]))
        logger.info("historico KAM: %d estados, V monotono=%s", len(entries), monotone)
        return {"entries": entries, "monotone": monotone, "rigorous": False}

    @staticmethod
    def neumann_inverse_check(M, M_bar, sigma):
        """
        Lema da inversa perturbada com norma do maximo das somas de linha

        Se sigma |M^{-1}| |M_bar - M| / (sigma - |M^{-1}|) < 1, M_bar é invertivel com
        |M_bar^{-1}| < sigma e |M_bar^{-1} - M^{-1}| < sigma |M^{-1}| |M_bar - M|.
        Senão o veredito é 'indeterminate'.

        Raises:
            SingularMatrixError: M singular
            HypothesisError: |M^{-1}| >= sigma
        """
        M = np.asarray(M, dtype=float)
        M_bar = np.asarray(M_bar, dtype=float)
        try:
            M_inv = np.linalg.inv(M)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(f"M singular: {exc}") from exc
        if not np.all(np.isfinite(M_inv)):
            raise SingularMatrixError("M singular")
        inverse_norm = _row_norm(M_inv)
        if not inverse_norm < sigma:
            raise HypothesisError(f"|M^-1|={inverse_norm:.6g} nao é menor que sigma={sigma:.6g}")
        gap = _row_norm(M_bar - M)
        condition = sigma * inverse_norm * gap / (sigma - inverse_norm)
        if condition < 1.0:
            return {
                "status": "invertible",
                "condition": condition,
                "inverse_norm": inverse_norm,
                "inverse_bound": sigma,
                "difference_bound": sigma * inverse_norm * gap,
            }
        return {
            "status": "indeterminate",
            "condition": condition,
            "inverse_norm": inverse_norm,
            "inverse_bound": None,
            "difference_bound": None,
        }
