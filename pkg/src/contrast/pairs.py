"""
Minería de pares positivos por vecino más cercano mutuo sobre anchors
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..errors import ConfigurationError

# vecinos consultados para resolver empates de distancia hacia el índice menor
_VECINOS_EMPATE = 8


@dataclass
class PairSet:
    """Pares uno a uno (índice α, índice β) con anchors a distancia <= match_radius"""

    alpha: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    match_radius: float = 0.0

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.int64).reshape(-1)
        self.beta = np.asarray(self.beta, dtype=np.int64).reshape(-1)
        if len(self.alpha) != len(self.beta):
            raise ConfigurationError("PairSet con listas de distinto largo")

    def __len__(self) -> int:
        return len(self.alpha)

    def as_tuples(self):
        return list(zip(self.alpha.tolist(), self.beta.tolist()))

    def swapped(self) -> "PairSet":
        """Pares con los papeles de α y β intercambiados, ordenados por el nuevo α"""
        orden = np.argsort(self.beta, kind="stable")
        return PairSet(self.beta[orden], self.alpha[orden], self.match_radius)

    def subset(self, seleccion) -> "PairSet":
        return PairSet(self.alpha[seleccion], self.beta[seleccion], self.match_radius)


def _vecino_mas_cercano(origen: np.ndarray, destino: np.ndarray):
    """Vecino más cercano de cada punto de origen en destino (empates -> índice menor)"""
    k = min(_VECINOS_EMPATE, len(destino))
    distancias, indices = cKDTree(destino).query(origen, k=k)
    distancias = distancias.reshape(len(origen), k)
    indices = indices.reshape(len(origen), k)
    minimo = distancias[:, :1]
    # entre los candidatos a distancia mínima se elige el índice menor
    candidatos = np.where(distancias == minimo, indices, np.iinfo(np.int64).max)
    return candidatos.min(axis=1), minimo[:, 0]


def mine_pairs(fs_alpha, fs_beta, match_radius: float) -> PairSet:
    """
    Pares por vecino más cercano mutuo sobre los anchors

    Args:
        fs_alpha: FeatureSet (o arreglo de anchors Mx3) de α
        fs_beta: FeatureSet (o arreglo de anchors Mx3) de β
        match_radius: Distancia máxima en metros

    Returns:
        PairSet ordenado por índice α (puede estar vacío)
    """
    if not match_radius > 0:
        raise ConfigurationError(f"match_radius debe ser > 0, recibido {match_radius}")
    anchors_a = np.asarray(getattr(fs_alpha, "anchors", fs_alpha), dtype=np.float64).reshape(-1, 3)
    anchors_b = np.asarray(getattr(fs_beta, "anchors", fs_beta), dtype=np.float64).reshape(-1, 3)
    if len(anchors_a) == 0 or len(anchors_b) == 0:
        return PairSet(match_radius=match_radius)

    nn_ab, dist_ab = _vecino_mas_cercano(anchors_a, anchors_b)
    nn_ba, _ = _vecino_mas_cercano(anchors_b, anchors_a)

    alpha = np.arange(len(anchors_a))
    mutuo = (nn_ba[nn_ab] == alpha) & (dist_ab <= match_radius)
    return PairSet(alpha[mutuo], nn_ab[mutuo], match_radius)
