"""
Hierarquia de exceções do kamtorus

Cada operação levanta uma subclasse de KamError; o RunController converte
essas exceções em payloads com 'success': False e no código de saída certo.
"""


class KamError(Exception):
    """Erro base de todas as operações"""


class ConfigError(KamError):
    """Configuração inválida (chave desconhecida, valor fora da faixa)"""


class DimensionError(KamError, ValueError):
    """Formas ou grades incompatíveis"""


class DiophantineError(KamError):
    """
    Desigualdade diofantina violada

    Args:
        k (tuple): multi-indice que violou a desigualdade
        best_gamma (float): maior gamma admissivel no intervalo verificado
    """

    def __init__(self, message, k=None, best_gamma=None):
        super().__init__(message)
        self.k = k
        self.best_gamma = best_gamma


class ErgodicityError(KamError):
    """Ressonancia k·omega = 0 encontrada"""

    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class CutoffError(KamError):
    """Modo fora do corte verificado pela condição diofantina"""


class ShiftBudgetError(KamError):
    """Deslocamento maior que a mordida permitida na composição"""


class DomainError(KamError):
    """Amostras do toro fora do dominio do sistema"""


class DegenerateFrameError(KamError):
    """Referencial tangente sem posto completo"""


class ConditioningError(KamError):
    """Matriz de Gram mal condicionada"""


class TwistError(KamError):
    """Media da torção nao invertivel"""


class StaleNormError(KamError):
    """Normas medidas numa faixa diferente da usada pelo certificado"""


class HypothesisError(KamError):
    """Hipóteses do teorema violadas (numeros de condição, constantes de controle)"""


class LiftError(KamError):
    """Falha no levantamento do toro pelo fluxo do momento"""


class SingularMatrixError(KamError):
    """Matriz singular onde se esperava inversa"""
