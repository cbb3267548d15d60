"""
Constantes do certificado KAM: Rüssmann, numeros de condição, controles,
livro-razão das tabelas e relatorio final
"""

import logging
import math
from dataclasses import dataclass, field, asdict

from models.errors import HypothesisError

logger = logging.getLogger(__name__)


def twist_factor(tau):
    """(tau + 1)^(tau + 1) / tau^tau"""
    return (tau + 1.0) ** (tau + 1.0) / tau**tau


@dataclass(frozen=True)
class RussmannConstants:
    """
    Constantes da estimativa de Rüssmann pra uma mordida delta

    c_R e c1_R sao as constantes afiadas (soma finita ate m mais cauda);
    c_R_hat e c1_R_hat as cotas uniformes. c_R_rho é c_R avaliada em rho,
    usada na media de xi_N.
    """

    c_R: float
    c1_R: float
    c_R_hat: float
    c1_R_hat: float
    c_R_rho: float
    delta: float
    m: int
    gamma: float
    tau: float
    d: int

    @property
    def chain_ok(self):
        """c_R <= c_R_hat e c1_R <= c1_R_hat"""
        return self.c_R <= self.c_R_hat and self.c1_R <= self.c1_R_hat

    def select(self, mode):
        """(c_R(delta), c1_R(delta), c_R(rho)) no modo 'sharp' ou 'uniform'"""
        if mode == "uniform":
            return self.c_R_hat, self.c1_R_hat, self.c_R_hat
        if mode == "sharp":
            return self.c_R, self.c1_R, self.c_R_rho
        raise ValueError(f"Modo de Rüssmann desconhecido: {mode}")

    def to_dict(self):
        return asdict(self) | {"chain_ok": self.chain_ok}


@dataclass(frozen=True)
class ConditionNumbers:
    """
    Numeros de condição sigma (H2)

    sigma_L = sigma_DK + c_Xp e sigma_LT = max(sigma_DKT, c_XpT) sao derivados.
    """

    sigma_DK: float
    sigma_DKT: float
    sigma_B: float
    sigma_N: float
    sigma_NT: float
    sigma_Tinv: float
    c_xp: float = 0.0
    c_xpt: float = 0.0

    @staticmethod
    def validate_data(data):
        """
        Valida os valores de sigma

        Returns:
            tuple: (is_valid, error_message)
        """
        for key in ("sigma_DK", "sigma_DKT", "sigma_B", "sigma_N", "sigma_NT", "sigma_Tinv"):
            if key not in data:
                return False, f"Numero de condição {key} é obrigatorio"
            value = data[key]
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                return False, f"Numero de condição {key} precisa ser positivo e finito"
        return True, None

    @property
    def sigma_L(self):
        return self.sigma_DK + self.c_xp

    @property
    def sigma_LT(self):
        return max(self.sigma_DKT, self.c_xpt)

    def to_dict(self):
        return asdict(self) | {"sigma_L": self.sigma_L, "sigma_LT": self.sigma_LT}


@dataclass(frozen=True)
class ControlConstants:
    """Constantes de controle (H3): mu, mu_E em (0, 1) e mu_etaN > 0"""

    mu: float
    mu_E: float
    mu_etaN: float

    def __post_init__(self):
        is_valid, message = self.validate_data(asdict(self))
        if not is_valid:
            raise HypothesisError(message)

    @staticmethod
    def validate_data(data):
        for key in ("mu", "mu_E"):
            value = data.get(key)
            if value is None or not 0.0 < value < 1.0:
                return False, f"{key} precisa estar em (0, 1)"
        if not data.get("mu_etaN", 0.0) > 0.0:
            return False, "mu_etaN precisa ser positivo"
        return True, None

    def to_dict(self):
        return asdict(self)


class ConstantLedger:
    """
    Livro-razão das constantes, cada uma com seu rotulo e dependencias

    As entradas sao registradas na ordem das tabelas; uma dependencia precisa
    ja estar registrada, o que mantem o grafo aciclico.
    """

    def __init__(self):
        self._values = {}
        self._deps = {}
        self.notes = []

    def put(self, label, value, deps=()):
        """
        Registra uma constante

        Raises:
            HypothesisError: valor negativo ou nao finito, rotulo repetido ou dependencia ausente
        """
        if label in self._values:
            raise HypothesisError(f"Constante {label} registrada duas vezes")
        missing = [dep for dep in deps if dep not in self._values]
        if missing:
            raise HypothesisError(f"Constante {label} depende de {missing} ainda nao registradas")
        value = float(value)
        if not math.isfinite(value) or value < 0.0:
            raise HypothesisError(f"Constante {label} invalida: {value}")
        self._values[label] = value
        self._deps[label] = tuple(deps)
        return value

    def __getitem__(self, label):
        return self._values[label]

    def __contains__(self, label):
        return label in self._values

    def __len__(self):
        return len(self._values)

    @property
    def labels(self):
        return list(self._values)

    def values(self):
        return dict(self._values)

    def deps(self, label):
        return self._deps[label]

    def trace(self, label):
        """Todas as entradas das quais label depende, em ordem de registro"""
        seen = set()
        pending = [label]
        while pending:
            current = pending.pop()
            for dep in self._deps[current]:
                if dep not in seen:
                    seen.add(dep)
                    pending.append(dep)
        return [name for name in self._values if name in seen]

    def to_dict(self):
        return {
            "values": dict(self._values),
            "deps": {label: list(deps) for label, deps in self._deps.items()},
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class FinalConstants:
    """Constantes do teorema: a, Q_etan, C*_Delta e os pesos ja divididos"""

    a: float
    Q_etan: float
    C_DeltaK: float
    C_DeltaDK: float
    C_DeltaDKT: float
    C_DeltaB: float
    C_DeltaN: float
    C_DeltaNT: float
    C_DeltaiT: float

    def to_dict(self):
        return asdict(self)


@dataclass
class KamReport:
    """Veredito da condição KAM com os 11 termos internos e os raios de proximidade"""

    value: float
    passed: bool
    C_theoE: float
    terms: dict
    dominating: str
    epsilon: float
    radii: dict = field(default_factory=dict)
    measured: dict = field(default_factory=dict)
    rigorous: bool = True
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "V": self.value,
            "pass": self.passed,
            "C_theoE": self.C_theoE,
            "epsilon": self.epsilon,
            "dominating": self.dominating,
            "terms": dict(self.terms),
            "radii": dict(self.radii),
            "measured": dict(self.measured),
            "rigorous": self.rigorous,
            "notes": list(self.notes),
        }
