"""
Algebra de Fourier em T^d

Modelos de Fourier truncados (escalares, vetoriais ou matriciais), operador de
Lie, solver de pequenos divisores, normas de faixa e utilitarios diofantinos.
Todo modelo é imutavel depois de construido.
"""

import csv
import logging
import math
from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np

from models.errors import (
    CutoffError,
    DimensionError,
    DiophantineError,
    ErgodicityError,
    HypothesisError,
    ShiftBudgetError,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
MAGIC = b"FMD1"
SYNTHESIS_CHUNK = 256


def is_power_of_two(value):
    return value > 0 and (value & (value - 1)) == 0


def axis_modes(size):
    """Frequencias inteiras de um eixo na ordem da FFT do numpy"""
    return np.rint(np.fft.fftfreq(size, d=1.0 / size)).astype(np.int64)


@lru_cache(maxsize=64)
def wavenumbers(grid):
    """
    Numeros de onda k_l de cada eixo, prontos pra broadcast sobre a grade

    Args:
        grid (tuple): tamanhos N_l da grade

    Returns:
        tuple: um array por eixo, forma (1, .., N_l, .., 1)
    """
    d = len(grid)
    result = []
    for axis, size in enumerate(grid):
        shape = [1] * d
        shape[axis] = size
        k = axis_modes(size).reshape(shape)
        k.setflags(write=False)
        result.append(k)
    return tuple(result)


@lru_cache(maxsize=64)
def mode_mask(grid, cutoffs):
    mask = np.ones(grid, dtype=bool)
    for k, cutoff in zip(wavenumbers(grid), cutoffs):
        mask = mask & (np.abs(k) <= cutoff)
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=64)
def l1_index(grid):
    total = np.zeros(grid, dtype=np.int64)
    for k in wavenumbers(grid):
        total = total + np.abs(k)
    total.setflags(write=False)
    return total


def frequency_dot(grid, omega):
    """k·omega avaliado em toda a grade de modos"""
    result = np.zeros(grid)
    for k, w in zip(wavenumbers(grid), omega):
        result = result + w * k
    return result


def grid_points(grid):
    """Pontos theta_j = j/N_l da grade uniforme, forma (P, d) em ordem C"""
    axes = [np.arange(size) / size for size in grid]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def to_nodes(values):
    """(n1, n2, *grid) -> (P, n1, n2)"""
    n1, n2 = values.shape[:2]
    return values.reshape(n1, n2, -1).transpose(2, 0, 1)


def from_nodes(nodes, grid):
    """(P, n1, n2) -> (n1, n2, *grid)"""
    _, n1, n2 = nodes.shape
    return nodes.transpose(1, 2, 0).reshape((n1, n2) + tuple(grid))


def _lex_indices(grid, cutoffs):
    ranges = [np.arange(-m, m + 1) for m in cutoffs]
    mesh = np.meshgrid(*ranges, indexing="ij")
    ks = np.stack([m.ravel() for m in mesh], axis=1)
    index = tuple(ks[:, axis] % size for axis, size in enumerate(grid))
    return ks, index


def _resize_coeffs(coeffs, old_grid, new_grid, cutoffs):
    """Copia os modos |k_l| <= M_l de uma grade pra outra"""
    for cutoff, size in zip(cutoffs, new_grid):
        if 2 * cutoff >= size:
            raise DimensionError(f"Corte {cutoff} nao cabe na grade {size}")
    n1, n2 = coeffs.shape[:2]
    out = np.zeros((n1, n2) + tuple(new_grid), dtype=np.complex128)
    old_idx = [np.arange(-m, m + 1) % n for m, n in zip(cutoffs, old_grid)]
    new_idx = [np.arange(-m, m + 1) % n for m, n in zip(cutoffs, new_grid)]
    full = (slice(None), slice(None))
    out[full + np.ix_(*new_idx)] = coeffs[full + np.ix_(*old_idx)]
    return out


def _reflect(coeffs, axes):
    """Coeficiente em -k, para cada k da grade"""
    flipped = np.flip(coeffs, axis=axes)
    return np.roll(flipped, 1, axis=axes)


class FourierModel:
    """
    Serie de Fourier truncada de uma função real em T^d

    Os coeficientes ficam guardados na ordem da FFT sobre a grade N_1 x .. x N_d,
    com os modos fora do corte |k_l| <= M_l zerados.
    """

    def __init__(self, coeffs, cutoffs=None):
        """
        Construtor do modelo

        Args:
            coeffs (array): coeficientes complexos, forma (n1, n2, N_1, .., N_d)
            cutoffs (tuple, optional): cortes M_l por eixo (padrão N_l/2 - 1)
        """
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.ndim < 4:
            raise DimensionError("Modelo precisa de forma (n1, n2, N_1, .., N_d) com d >= 2")
        grid = tuple(int(n) for n in coeffs.shape[2:])
        for size in grid:
            if not is_power_of_two(size):
                raise DimensionError(f"Tamanho de grade {size} nao é potencia de dois")
        if cutoffs is None:
            cutoffs = tuple(size // 2 - 1 for size in grid)
        cutoffs = tuple(int(m) for m in cutoffs)
        if len(cutoffs) != len(grid):
            raise DimensionError("Numero de cortes diferente da dimensão do toro")
        for cutoff, size in zip(cutoffs, grid):
            if cutoff < 0 or 2 * cutoff >= size:
                raise DimensionError(f"Corte {cutoff} invalido pra grade {size}")

        data = np.where(mode_mask(grid, cutoffs), coeffs, 0.0)
        data.setflags(write=False)
        self._coeffs = data
        self._grid = grid
        self._cutoffs = cutoffs

    # Construtores auxiliares

    @classmethod
    def zeros(cls, shape, grid, cutoffs=None):
        return cls(np.zeros(tuple(shape) + tuple(grid), dtype=np.complex128), cutoffs)

    @classmethod
    def constant(cls, value, grid, cutoffs=None):
        """Modelo constante; value pode ser escalar, vetor (n,) ou matriz"""
        value = np.asarray(value, dtype=float)
        if value.ndim == 0:
            value = value.reshape(1, 1)
        elif value.ndim == 1:
            value = value.reshape(-1, 1)
        coeffs = np.zeros(value.shape + tuple(grid), dtype=np.complex128)
        coeffs[(slice(None), slice(None)) + (0,) * len(grid)] = value
        return cls(coeffs, cutoffs)

    @classmethod
    def from_function(cls, func, grid, cutoffs=None):
        """
        Amostra func na grade e analisa

        Args:
            func (callable): recebe theta (P, d) e devolve (P,), (P, n) ou (P, n1, n2)
            grid (tuple): tamanhos da grade
        """
        values = np.asarray(func(grid_points(grid)), dtype=float)
        if values.ndim == 1:
            values = values[:, None, None]
        elif values.ndim == 2:
            values = values[:, :, None]
        return analyze(from_nodes(values, grid), cutoffs)

    # Propriedades

    @property
    def coeffs(self):
        return self._coeffs

    @property
    def dim_d(self):
        return len(self._grid)

    @property
    def shape(self):
        return self._coeffs.shape[:2]

    @property
    def grid_size(self):
        return self._grid

    @property
    def cutoffs(self):
        return self._cutoffs

    @property
    def _axes(self):
        return tuple(range(2, 2 + self.dim_d))

    def _like(self, coeffs):
        return FourierModel(coeffs, self._cutoffs)

    def _check_compatible(self, other):
        if self._grid != other._grid or self._cutoffs != other._cutoffs:
            raise DimensionError("Modelos com grades ou cortes diferentes")

    # Avaliação

    def samples(self, grid=None):
        """Valores reais na grade uniforme (a propria ou uma mais fina), forma (n1, n2, *grid)"""
        grid = self._grid if grid is None else tuple(grid)
        coeffs = self._coeffs
        if grid != self._grid:
            coeffs = _resize_coeffs(coeffs, self._grid, grid, self._cutoffs)
        values = np.fft.ifftn(coeffs, axes=self._axes) * np.prod(grid)
        return values.real

    def node_values(self, grid=None):
        """Valores por no, forma (P, n1, n2)"""
        return to_nodes(self.samples(grid))

    def padded_grid(self, factor=2):
        return tuple(factor * size for size in self._grid)

    def average(self):
        return self._coeffs[(slice(None), slice(None)) + (0,) * self.dim_d].real.copy()

    def coefficient(self, k):
        """Coeficiente complexo n1 x n2 do modo k"""
        if len(k) != self.dim_d:
            raise DimensionError("Multi-indice com dimensão errada")
        if any(abs(ki) > m for ki, m in zip(k, self._cutoffs)):
            return np.zeros(self.shape, dtype=np.complex128)
        index = tuple(ki % size for ki, size in zip(k, self._grid))
        return self._coeffs[(slice(None), slice(None)) + index].copy()

    # Algebra linear

    def __add__(self, other):
        if isinstance(other, FourierModel):
            self._check_compatible(other)
            if other.shape != self.shape:
                raise DimensionError(f"Soma de formas {self.shape} e {other.shape}")
            return self._like(self._coeffs + other._coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, FourierModel):
            return self + (-other)
        return NotImplemented

    def __neg__(self):
        return self._like(-self._coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, np.floating, np.integer)):
            return self._like(self._coeffs * float(scalar))
        return NotImplemented

    __rmul__ = __mul__

    def __getitem__(self, key):
        rows, cols = key
        rows = slice(rows, rows + 1) if isinstance(rows, int) else rows
        cols = slice(cols, cols + 1) if isinstance(cols, int) else cols
        return self._like(self._coeffs[rows, cols])

    def __repr__(self):
        return f"<FourierModel shape={self.shape} grid={self._grid} cutoffs={self._cutoffs}>"

    def left_multiply(self, matrix):
        """Produto por uma matriz constante a esquerda"""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] != self.shape[0]:
            raise DimensionError(f"Matriz {matrix.shape} incompativel com modelo {self.shape}")
        return self._like(np.tensordot(matrix, self._coeffs, axes=(1, 0)))

    def derivative(self, axis):
        """Derivada parcial em theta_axis: coeficiente k -> 2 pi i k_axis"""
        k = wavenumbers(self._grid)[axis]
        return self._like(self._coeffs * (1j * TWO_PI * k))

    def jacobian(self):
        """DK pra um modelo vetorial n x 1: matriz n x d com as derivadas nas colunas"""
        if self.shape[1] != 1:
            raise DimensionError("Jacobiano so definido pra modelos vetoriais")
        return block([[self.derivative(axis) for axis in range(self.dim_d)]])

    def clean(self, threshold):
        """Zera coeficientes com modulo abaixo de threshold"""
        if threshold <= 0:
            return self
        return self._like(np.where(np.abs(self._coeffs) < threshold, 0.0, self._coeffs))

    def max_abs_difference(self, other):
        self._check_compatible(other)
        return float(np.max(np.abs(self._coeffs - other._coeffs), initial=0.0))

    def spectral_tail(self, width=1):
        """Soma dos |c_k| nos modos a menos de width do corte"""
        near = np.zeros(self._grid, dtype=bool)
        for k, cutoff in zip(wavenumbers(self._grid), self._cutoffs):
            near = near | (np.abs(k) > cutoff - width)
        return float(np.sum(np.abs(self._coeffs[..., near])))

    def to_dict(self):
        return {
            "d": self.dim_d,
            "shape": list(self.shape),
            "grid": list(self._grid),
            "cutoffs": list(self._cutoffs),
        }

    # Artefatos

    def to_bytes(self):
        """Formato binario FMD1: magic, dims (uint32), complexos na ordem lexicografica de k"""
        n1, n2 = self.shape
        header = np.array([self.dim_d, n1, n2, *self._cutoffs, *self._grid], dtype="<u4")
        _, index = _lex_indices(self._grid, self._cutoffs)
        values = self._coeffs[(slice(None), slice(None)) + index].transpose(2, 0, 1)
        return MAGIC + header.tobytes() + np.ascontiguousarray(values).astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, payload):
        if payload[:4] != MAGIC:
            raise DimensionError("Arquivo sem magic FMD1")
        d = int(np.frombuffer(payload, dtype="<u4", count=1, offset=4)[0])
        header = np.frombuffer(payload, dtype="<u4", count=3 + 2 * d, offset=4)
        n1, n2 = int(header[1]), int(header[2])
        cutoffs = tuple(int(v) for v in header[3:3 + d])
        grid = tuple(int(v) for v in header[3 + d:3 + 2 * d])
        offset = 4 + 4 * (3 + 2 * d)
        values = np.frombuffer(payload, dtype="<c16", offset=offset)
        _, index = _lex_indices(grid, cutoffs)
        values = values.reshape(-1, n1, n2).transpose(1, 2, 0)
        coeffs = np.zeros((n1, n2) + grid, dtype=np.complex128)
        coeffs[(slice(None), slice(None)) + index] = values
        return cls(coeffs, cutoffs)

    def to_csv(self, stream):
        """CSV com colunas k1..kd, row, col, re, im; a primeira linha descreve o modelo"""
        n1, n2 = self.shape
        stream.write(
            f"# d={self.dim_d} shape={n1}x{n2} "
            f"cutoffs={','.join(map(str, self._cutoffs))} grid={','.join(map(str, self._grid))}\n"
        )
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow([f"k{axis + 1}" for axis in range(self.dim_d)] + ["row", "col", "re", "im"])
        ks, index = _lex_indices(self._grid, self._cutoffs)
        values = self._coeffs[(slice(None), slice(None)) + index]
        for position, k in enumerate(ks):
            for i in range(n1):
                for j in range(n2):
                    c = values[i, j, position]
                    writer.writerow([*k.tolist(), i, j, repr(float(c.real)), repr(float(c.imag))])

    @classmethod
    def from_csv(cls, stream):
        header = stream.readline().lstrip("#").split()
        fields = dict(item.split("=", 1) for item in header)
        d = int(fields["d"])
        n1, n2 = (int(v) for v in fields["shape"].split("x"))
        cutoffs = tuple(int(v) for v in fields["cutoffs"].split(","))
        grid = tuple(int(v) for v in fields["grid"].split(","))
        coeffs = np.zeros((n1, n2) + grid, dtype=np.complex128)
        reader = csv.reader(stream)
        next(reader)
        for row in reader:
            k = [int(v) for v in row[:d]]
            i, j = int(row[d]), int(row[d + 1])
            index = tuple(ki % size for ki, size in zip(k, grid))
            coeffs[(i, j) + index] = complex(float(row[d + 2]), float(row[d + 3]))
        return cls(coeffs, cutoffs)


# Operações sobre modelos


def synthesize(model, points):
    """
    Avalia a serie diretamente em pontos arbitrarios

    Args:
        model (FourierModel): modelo a avaliar
        points (array): pontos theta, forma (P, d)

    Returns:
        array: valores reais, forma (P, n1, n2)
    """
    n1, n2 = model.shape
    if n1 * n2 == 0:
        raise DimensionError("Modelo vazio")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != model.dim_d:
        raise DimensionError("Pontos com dimensão diferente do toro")
    if not np.all(np.isfinite(points)):
        raise ValueError("Pontos nao finitos")

    mask = mode_mask(model.grid_size, model.cutoffs)
    ks = np.stack([np.broadcast_to(k, model.grid_size)[mask] for k in wavenumbers(model.grid_size)], axis=1)
    coeffs = model.coeffs[:, :, mask].reshape(n1 * n2, -1).T

    out = np.empty((points.shape[0], n1 * n2))
    for start in range(0, points.shape[0], SYNTHESIS_CHUNK):
        chunk = points[start:start + SYNTHESIS_CHUNK]
        phases = np.exp(1j * TWO_PI * (chunk @ ks.T))
        out[start:start + SYNTHESIS_CHUNK] = (phases @ coeffs).real
    return out.reshape(-1, n1, n2)


def analyze(samples, cutoffs=None):
    """
    Extrai os coeficientes de amostras reais na grade uniforme

    Args:
        samples (array): forma (n1, n2, N_1, .., N_d)
        cutoffs (tuple, optional): cortes por eixo

    Returns:
        FourierModel: modelo com simetria real imposta
    """
    samples = np.asarray(samples)
    if samples.ndim < 4:
        raise DimensionError("Amostras precisam de forma (n1, n2, N_1, .., N_d)")
    if np.iscomplexobj(samples):
        if np.max(np.abs(samples.imag), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(samples), initial=0.0)):
            raise DimensionError("Amostras precisam ser reais")
        samples = samples.real
    grid = samples.shape[2:]
    if cutoffs is not None and len(cutoffs) != len(grid):
        raise DimensionError("Numero de cortes diferente da dimensão das amostras")
    for size in grid:
        if not is_power_of_two(size):
            raise DimensionError(f"Tamanho de grade {size} nao é potencia de dois")
    axes = tuple(range(2, samples.ndim))
    coeffs = np.fft.fftn(samples, axes=axes) / np.prod(grid)
    coeffs = 0.5 * (coeffs + np.conj(_reflect(coeffs, axes)))
    return FourierModel(coeffs, cutoffs)


def pointwise(func, *models, pad=2, shape=None):
    """
    Aplica func no a no numa grade com padding e volta pros coeficientes

    func recebe arrays (P, n1, n2), um por modelo, e devolve (P, m1, m2).
    O resultado é truncado nos cortes originais.
    """
    base = models[0]
    for other in models[1:]:
        base._check_compatible(other)
    fine = base.padded_grid(pad)
    values = [m.node_values(fine) for m in models]
    out = np.asarray(func(*values), dtype=float)
    if shape is not None and out.shape[1:] != tuple(shape):
        raise DimensionError(f"Forma {out.shape[1:]} diferente da esperada {shape}")
    coeffs = np.fft.fftn(from_nodes(out, fine), axes=base._axes) / np.prod(fine)
    return FourierModel(_resize_coeffs(coeffs, fine, base.grid_size, base.cutoffs), base.cutoffs)


def matmul(a, b):
    """Produto matricial a·b com dealiasing"""
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"Produto de formas {a.shape} e {b.shape}")
    return pointwise(lambda x, y: np.einsum("pij,pjk->pik", x, y), a, b)


def product(a, b):
    """Produto geral: escalar 1x1 vezes qualquer modelo, senão produto matricial"""
    if a.shape == (1, 1) and b.shape != (1, 1):
        return pointwise(lambda x, y: x * y, a, b)
    if b.shape == (1, 1) and a.shape != (1, 1):
        return pointwise(lambda x, y: x * y, a, b)
    return matmul(a, b)


def transpose(a):
    return a._like(np.swapaxes(a.coeffs, 0, 1))


def block(rows):
    """Composição em blocos a partir de uma lista de linhas de modelos"""
    stacked = []
    for row in rows:
        for other in row[1:]:
            row[0]._check_compatible(other)
            if other.shape[0] != row[0].shape[0]:
                raise DimensionError("Blocos com numero de linhas diferente")
        stacked.append(np.concatenate([m.coeffs for m in row], axis=1))
    widths = {s.shape[1] for s in stacked}
    if len(widths) != 1:
        raise DimensionError("Linhas de blocos com larguras diferentes")
    return rows[0][0]._like(np.concatenate(stacked, axis=0))


def lie_derivative(u, omega):
    """Operador de Lie L_omega u = -Du·omega, diagonal: k -> -2 pi i (k·omega)"""
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (u.dim_d,):
        raise DimensionError("Frequencia com dimensão diferente do toro")
    factor = -1j * TWO_PI * frequency_dot(u.grid_size, omega)
    return u._like(u.coeffs * factor)


def solve_cohomological(v, dio):
    """
    Solução de media zero de L_omega u = v - <v>

    Args:
        v (FourierModel): lado direito
        dio (DiophantineData): dados verificados de omega

    Returns:
        FourierModel: R_omega v
    """
    omega = dio.omega_array
    if omega.shape != (v.dim_d,):
        raise DimensionError("Frequencia com dimensão diferente do toro")
    grid = v.grid_size
    used = np.any(np.abs(v.coeffs) > 0.0, axis=(0, 1))
    if np.any(used):
        top = int(np.max(l1_index(grid)[used]))
        if top > dio.checked_cutoff:
            raise CutoffError(f"Modo com |k|_1={top} acima do corte verificado {dio.checked_cutoff}")
    kdot = frequency_dot(grid, omega)
    nonzero = l1_index(grid) > 0
    resonant = used & nonzero & (kdot == 0.0)
    if np.any(resonant):
        position = np.argwhere(resonant)[0]
        k = tuple(int(wavenumbers(grid)[axis].ravel()[position[axis]]) for axis in range(len(grid)))
        raise ErgodicityError(f"Divisor nulo no modo {k}", k=k)
    divisor = np.where(nonzero, -1j * TWO_PI * kdot, 1.0)
    return v._like(np.where(nonzero, v.coeffs / divisor, 0.0))


def strip_norm(model, rho):
    """
    Cota da norma sup na faixa |Im theta| <= rho

    max sobre linhas i de sum_j sum_k |M_k[i, j]| exp(2 pi |k|_1 rho).
    Em overflow devolve inf (saturado) e registra um aviso.
    """
    if rho < 0:
        raise ValueError("rho precisa ser nao negativo")
    with np.errstate(over="ignore", invalid="ignore"):
        weights = np.exp(TWO_PI * rho * l1_index(model.grid_size))
        entries = np.sum(np.abs(model.coeffs) * weights, axis=model._axes)
        value = float(np.max(np.sum(entries, axis=1), initial=0.0))
    if not math.isfinite(value):
        logger.warning("norma de faixa saturada rho=%.3g", rho)
        return math.inf
    return value


def compose_shift(f, g, budget=None):
    """
    f∘(id + g) por sintese direta nos nos deslocados

    Args:
        f (FourierModel): modelo a compor
        g (FourierModel): deslocamento real d x 1
        budget (float, optional): limite estrito pra norma de g
    """
    f._check_compatible(g)
    if g.shape != (f.dim_d, 1):
        raise DimensionError("Deslocamento precisa ser um vetor d x 1")
    if budget is not None:
        size = strip_norm(g, 0.0)
        if size >= budget:
            raise ShiftBudgetError(f"Deslocamento {size:.3e} excede o limite {budget:.3e}")
    theta = grid_points(f.grid_size)
    shift = g.node_values()[:, :, 0]
    values = synthesize(f, theta + shift)
    return analyze(from_nodes(values, f.grid_size), f.cutoffs)


# Utilitarios diofantinos


def _prefixes(length, budget):
    if length == 0:
        yield ()
        return
    for first in range(-budget, budget + 1):
        for rest in _prefixes(length - 1, budget - abs(first)):
            yield (first,) + rest


def integer_vectors(d, k_max):
    """Gera blocos (m, d) com todos os k, 0 < |k|_1 <= k_max"""
    for prefix in _prefixes(d - 1, k_max):
        budget = k_max - sum(abs(p) for p in prefix)
        last = np.arange(-budget, budget + 1)
        chunk = np.empty((last.size, d), dtype=np.int64)
        chunk[:, :-1] = prefix
        chunk[:, -1] = last
        if not any(prefix):
            chunk = chunk[last != 0]
        if chunk.size:
            yield chunk


def best_gamma(omega, tau, k_max):
    """
    Menor |k|_1^tau |k·omega| sobre 0 < |k|_1 <= k_max

    Returns:
        tuple: (gamma, k) com o minimizador
    """
    omega = np.asarray(omega, dtype=float)
    scale = float(np.max(np.abs(omega)))
    best, best_k = math.inf, None
    for chunk in integer_vectors(omega.size, k_max):
        kdot = chunk @ omega
        norm1 = np.abs(chunk).sum(axis=1)
        resonant = np.abs(kdot) <= 8.0 * np.finfo(float).eps * norm1 * scale
        if np.any(resonant):
            k = tuple(int(v) for v in chunk[np.argmax(resonant)])
            raise ErgodicityError(f"Ressonancia k·omega = 0 em k={k}", k=k)
        values = norm1.astype(float) ** tau * np.abs(kdot)
        position = int(np.argmin(values))
        if values[position] < best:
            best, best_k = float(values[position]), tuple(int(v) for v in chunk[position])
    return best, best_k


@dataclass(frozen=True)
class DiophantineData:
    """Frequencia verificada: |k·omega| >= gamma/|k|_1^tau pra 0 < |k|_1 <= checked_cutoff"""

    omega: tuple
    gamma: float
    tau: float
    checked_cutoff: int
    best_gamma: float = None

    @property
    def omega_array(self):
        return np.asarray(self.omega, dtype=float)

    @property
    def d(self):
        return len(self.omega)

    def to_dict(self):
        return asdict(self) | {"omega": list(self.omega)}


def verify_diophantine(omega, gamma, tau, k_max):
    """
    Verifica a condição diofantina de forma exaustiva ate k_max

    Raises:
        DiophantineError: com o k violador e o melhor gamma admissivel
        ErgodicityError: se k·omega = 0 pra algum k verificado
    """
    omega = tuple(float(w) for w in omega)
    if gamma <= 0:
        raise ValueError("gamma precisa ser positivo")
    if tau < len(omega) - 1:
        raise ValueError("tau precisa ser >= d - 1")
    if k_max < 1:
        raise ValueError("k_max precisa ser >= 1")
    found, k = best_gamma(omega, tau, int(k_max))
    if found < gamma:
        raise DiophantineError(
            f"Condição diofantina violada em k={k}: maior gamma admissivel {found:.6g}",
            k=k,
            best_gamma=found,
        )
    logger.info("omega diofantina gamma=%.4g tau=%.3g k_max=%d melhor=%.4g", gamma, tau, k_max, found)
    return DiophantineData(omega, float(gamma), float(tau), int(k_max), found)


@lru_cache(maxsize=16)
def shell_divisor_sums(omega, k_max):
    """
    Somas S_s = sum_{|k|_1 = s} 1/|2 pi k·omega|^2 pra s = 0..k_max

    O divisor é o mesmo de lie_derivative e solve_cohomological.

    Args:
        omega (tuple): frequencia (hashable pro cache)
        k_max (int): maior |k|_1
    """
    omega_arr = np.asarray(omega, dtype=float)
    sums = np.zeros(k_max + 1)
    for chunk in integer_vectors(omega_arr.size, k_max):
        kdot = TWO_PI * (chunk @ omega_arr)
        sums += np.bincount(np.abs(chunk).sum(axis=1), weights=1.0 / kdot**2, minlength=k_max + 1)
    sums.setflags(write=False)
    return sums


@dataclass(frozen=True)
class StripSchedule:
    """Sequencia geometrica de mordidas delta_j = delta0/a^j"""

    rho0: float
    rho_inf: float
    delta0: float

    def __post_init__(self):
        if not 0.0 <= self.rho_inf < self.rho0:
            raise HypothesisError("Faixas precisam satisfazer 0 <= rho_inf < rho")
        if not 0.0 < self.delta0 < (self.rho0 - self.rho_inf) / 3.0:
            raise HypothesisError("delta precisa estar em (0, (rho - rho_inf)/3)")

    @classmethod
    def optimal(cls, rho0, rho_inf):
        """Mordida inicial (rho - rho_inf)/6, que minimiza a/delta"""
        return cls(rho0, rho_inf, (rho0 - rho_inf) / 6.0)

    @property
    def ratio_a(self):
        return (self.rho0 - self.rho_inf) / (self.rho0 - 3.0 * self.delta0 - self.rho_inf)

    def bite(self, j):
        return self.delta0 / self.ratio_a**j

    def bites(self, count):
        return [self.bite(j) for j in range(count)]

    def strip(self, j):
        """rho_j = rho0 - 3 sum_{i<j} delta_i"""
        a = self.ratio_a
        return self.rho0 - 3.0 * self.delta0 * (1.0 - a ** (-j)) * a / (a - 1.0)

    def limit_strip(self):
        a = self.ratio_a
        return self.rho0 - 3.0 * self.delta0 * a / (a - 1.0)

    def to_dict(self):
        return {
            "rho": self.rho0,
            "rho_inf": self.rho_inf,
            "delta": self.delta0,
            "a": self.ratio_a,
        }
