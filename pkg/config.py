import math
import os

from dotenv import dotenv_values

from models.errors import ConfigError
from models.systems import SYSTEMS

ENV_PREFIX = "KAMTORUS_"
PROFILE_VARIABLE = "KAMTORUS_PROFILE"
AUTO = "auto"
K_MAX_FACTOR = 4


def _floats(text):
    return tuple(float(item) for item in text.split(",") if item.strip())


def _ints(text):
    return tuple(int(item) for item in text.split(",") if item.strip())


def _optional(parser):
    """Aceita 'auto' ou vazio como None"""

    def parse(text):
        text = text.strip()
        if text in ("", AUTO):
            return None
        return parser(text)

    return parse


# Chave pontuada -> conversor
SCHEMA = {
    "system.name": str,
    "system.epsilon": float,
    "system.radii": _floats,
    "system.b": _floats,
    "system.a": _optional(_floats),
    "system.a3": float,
    "torus.omega": _floats,
    "diophantine.gamma": float,
    "diophantine.tau": float,
    "diophantine.k_max": _optional(int),
    "grid.size": _ints,
    "grid.cutoffs": _optional(_ints),
    "strip.rho": float,
    "strip.rho_inf": float,
    "strip.delta": _optional(float),
    "sigma.dk": float,
    "sigma.dkt": float,
    "sigma.b": float,
    "sigma.n": float,
    "sigma.nt": float,
    "sigma.tinv": float,
    "control.mu": float,
    "control.mu_e": float,
    "control.mu_etan": float,
    "solver.max_iter": int,
    "solver.tol": float,
    "solver.method": str,
    "solver.norm_rho": float,
    "solver.clean_threshold": float,
    "certificate.mode": str,
    "certificate.m": _optional(int),
    "certificate.torus": str,
    "certificate.clean_threshold": float,
    "bounds.samples": int,
    "bounds.seed": int,
    "bounds.margin": float,
    "bounds.domain_radius": float,
    "bounds.time_radius": float,
    "lift.omega_p": _optional(_floats),
    "lift.s_points": int,
    "lift.s_max": float,
    "lift.tol": float,
    "bench.epsilons": _floats,
    "bench.methods": lambda text: tuple(item.strip() for item in text.split(",") if item.strip()),
    "bench.delta_steps": int,
    "log.level": str,
}

# Constantes H1 que o usuario pode fixar (vazio = estimar)
BOUND_OVERRIDES = (
    "c_omega", "c_g", "c_j", "c_jt", "c_domega", "c_dg", "c_dj", "c_djt",
    "c_xh", "c_dxh", "c_dxht", "c_d2xh", "c_th", "c_dth",
    "c_xp", "c_dxp", "c_xpt", "c_dxpt", "c_dphi",
)
SCHEMA.update({f"bounds.{key}": _optional(float) for key in BOUND_OVERRIDES})


class Config:
    """Configuração base"""

    DEFAULTS = {
        "system.name": "oscillator",
        "system.epsilon": "0.0",
        "system.radii": "1,1",
        "system.b": "1,1",
        "system.a": AUTO,
        "system.a3": "1.0",
        "torus.omega": "1,1.618033988749895",
        "diophantine.gamma": "0.9",
        "diophantine.tau": "1.0",
        "diophantine.k_max": AUTO,
        "grid.size": "32,32",
        "grid.cutoffs": AUTO,
        "strip.rho": "0.1",
        "strip.rho_inf": "0.04",
        "strip.delta": AUTO,
        "sigma.dk": "20",
        "sigma.dkt": "40",
        "sigma.b": "0.05",
        "sigma.n": "1.0",
        "sigma.nt": "2.0",
        "sigma.tinv": "100",
        "control.mu": "0.5",
        "control.mu_e": "0.5",
        "control.mu_etan": "1.0",
        "solver.max_iter": "12",
        "solver.tol": "1e-10",
        "solver.method": "modified",
        "solver.norm_rho": "0.0",
        "solver.clean_threshold": "0.0",
        "certificate.mode": "sharp",
        "certificate.m": AUTO,
        "certificate.torus": "",
        "certificate.clean_threshold": "0.0",
        "bounds.samples": "2000",
        "bounds.seed": "0",
        "bounds.margin": "0.1",
        "bounds.domain_radius": "3.0",
        "bounds.time_radius": "1.0",
        "lift.omega_p": AUTO,
        "lift.s_points": "8",
        "lift.s_max": "0.5",
        "lift.tol": "1e-8",
        "bench.epsilons": "1e-4,1e-3,1e-2",
        "bench.methods": "classical,modified",
        "bench.delta_steps": "60",
        "log.level": "INFO",
    } | {f"bounds.{key}": "" for key in BOUND_OVERRIDES}


class QuickConfig(Config):
    """Configuração com grades pequenas pra rodadas rapidas"""

    DEFAULTS = Config.DEFAULTS | {
        "grid.size": "16,16",
        "solver.max_iter": "8",
        "bounds.samples": "500",
        "bench.epsilons": "1e-4,1e-3",
        "bench.delta_steps": "30",
    }


class ReferenceConfig(Config):
    """Configuração de referencia: grade 32x32, rho=0.1, rho_inf=0.04, delta automatico"""

    DEFAULTS = Config.DEFAULTS | {
        "grid.size": "32,32",
        "strip.rho": "0.1",
        "strip.rho_inf": "0.04",
        "strip.delta": AUTO,
    }


# Configuração padrão
config = {
    "quick": QuickConfig,
    "reference": ReferenceConfig,
    "default": Config,
}


class RunConfig:
    """
    Configuração de uma execução, ja convertida e validada

    Fontes em ordem de prioridade: overrides explicitos, variaveis
    KAMTORUS_<SECAO>__<CHAVE>, arquivo de configuração e padrões do perfil.
    """

    def __init__(self, values, profile="default"):
        self.values = dict(values)
        self.profile = profile

    def __getitem__(self, key):
        return self.values[key]

    @staticmethod
    def validate_data(data):
        """
        Valida os valores ja convertidos

        Args:
            data (dict): chave pontuada -> valor

        Returns:
            tuple: (is_valid, error_message)
        """
        name = data["system.name"]
        if name not in SYSTEMS:
            return False, f"system.name desconhecido: {name} (conhecidos: {', '.join(sorted(SYSTEMS))})"
        d = len(data["torus.omega"])
        planes = 3 if name == "rotational" else d
        if name == "rotational" and d != 2:
            return False, "Familia rotacional precisa de torus.omega com duas frequencias"
        for key in ("system.radii", "system.b"):
            if len(data[key]) != planes:
                return False, f"{key} precisa ter {planes} valores"
        if data["system.a"] is not None and len(data["system.a"]) != planes:
            return False, f"system.a precisa ter {planes} valores"
        if any(r <= 0 for r in data["system.radii"]):
            return False, "system.radii precisa ser positivo"

        grid = data["grid.size"]
        if len(grid) != d:
            return False, "grid.size precisa ter uma entrada por frequencia"
        if any(size < 4 or size & (size - 1) for size in grid):
            return False, "grid.size precisa de potencias de dois >= 4"
        cutoffs = data["grid.cutoffs"]
        if cutoffs is not None:
            if len(cutoffs) != len(grid):
                return False, "grid.cutoffs precisa ter uma entrada por eixo"
            if any(m < 0 or 2 * m >= size for m, size in zip(cutoffs, grid)):
                return False, "grid.cutoffs precisa satisfazer 0 <= M < N/2"
        if data["diophantine.gamma"] <= 0:
            return False, "diophantine.gamma precisa ser positivo"
        if data["diophantine.tau"] < len(grid) - 1:
            return False, "diophantine.tau precisa ser >= d - 1"
        if data["diophantine.k_max"] is not None and data["diophantine.k_max"] < 1:
            return False, "diophantine.k_max precisa ser >= 1"
        rho, rho_inf, delta = data["strip.rho"], data["strip.rho_inf"], data["strip.delta"]
        if not 0.0 <= rho_inf < rho:
            return False, "strip precisa de 0 <= rho_inf < rho"
        if delta is not None and not 0.0 < delta < (rho - rho_inf) / 3.0:
            return False, "strip.delta precisa estar em (0, (rho - rho_inf)/3)"
        for key in ("sigma.dk", "sigma.dkt", "sigma.b", "sigma.n", "sigma.nt", "sigma.tinv"):
            if not data[key] > 0:
                return False, f"{key} precisa ser positivo"
        for key in ("control.mu", "control.mu_e"):
            if not 0.0 < data[key] < 1.0:
                return False, f"{key} precisa estar em (0, 1)"
        if not data["control.mu_etan"] > 0:
            return False, "control.mu_etan precisa ser positivo"
        if data["solver.method"] not in ("modified", "classical"):
            return False, "solver.method precisa ser 'modified' ou 'classical'"
        if data["solver.max_iter"] < 0 or not data["solver.tol"] > 0:
            return False, "solver.max_iter >= 0 e solver.tol > 0"
        if data["certificate.mode"] not in ("sharp", "uniform"):
            return False, "certificate.mode precisa ser 'sharp' ou 'uniform'"
        if data["lift.s_points"] < 1:
            return False, "lift.s_points precisa ser >= 1"
        for method in data["bench.methods"]:
            if method not in ("modified", "classical"):
                return False, f"bench.methods com metodo desconhecido: {method}"
        if data["bench.delta_steps"] < 0:
            return False, "bench.delta_steps precisa ser >= 0"
        for key, value in data.items():
            if isinstance(value, float) and not math.isfinite(value):
                return False, f"{key} precisa ser finito"
        return True, None

    @classmethod
    def load(cls, path=None, profile=None, environ=None, overrides=None):
        """
        Le, converte e valida a configuração

        Raises:
            ConfigError: chave desconhecida, valor invalido ou faixa violada
        """
        environ = os.environ if environ is None else environ
        profile = profile or environ.get(PROFILE_VARIABLE) or "default"
        if profile not in config:
            raise ConfigError(f"Perfil desconhecido: {profile}")

        raw = dict(config[profile].DEFAULTS)
        sources = []
        if path is not None:
            if not os.path.exists(path):
                raise ConfigError(f"Arquivo de configuração nao encontrado: {path}")
            sources.append(("arquivo", {key.strip(): value for key, value in dotenv_values(path).items()}))
        sources.append(("ambiente", {
            key[len(ENV_PREFIX):].lower().replace("__", "."): value
            for key, value in environ.items()
            if key.startswith(ENV_PREFIX) and key != PROFILE_VARIABLE
        }))
        sources.append(("overrides", {key: str(value) for key, value in (overrides or {}).items()}))

        for origin, values in sources:
            unknown = sorted(set(values) - set(SCHEMA))
            if unknown:
                raise ConfigError(f"Chaves desconhecidas ({origin}): {', '.join(unknown)}")
            raw.update({key: "" if value is None else value for key, value in values.items()})

        parsed = {}
        for key, parser in SCHEMA.items():
            try:
                parsed[key] = parser(raw[key])
            except (TypeError, ValueError) as e:
                raise ConfigError(f"Valor invalido pra {key}: {raw[key]!r} ({str(e)})") from e

        is_valid, error_message = cls.validate_data(parsed)
        if not is_valid:
            raise ConfigError(error_message)

        if parsed["strip.delta"] is None:
            parsed["strip.delta"] = (parsed["strip.rho"] - parsed["strip.rho_inf"]) / 6.0
            parsed["strip.delta_auto"] = True
        else:
            parsed["strip.delta_auto"] = False
        if parsed["grid.cutoffs"] is None:
            parsed["grid.cutoffs"] = tuple(size // 2 - 1 for size in parsed["grid.size"])
        if parsed["diophantine.k_max"] is None:
            parsed["diophantine.k_max"] = K_MAX_FACTOR * int(sum(parsed["grid.cutoffs"]))
        return cls(parsed, profile)

    def bound_overrides(self):
        return {
            key: self.values[f"bounds.{key}"]
            for key in BOUND_OVERRIDES
            if self.values[f"bounds.{key}"] is not None
        }

    def to_dict(self):
        """Valores resolvidos (delta automatico incluido), serializaveis em JSON"""
        data = {"profile": self.profile}
        for key, value in sorted(self.values.items()):
            data[key] = list(value) if isinstance(value, tuple) else value
        return data
