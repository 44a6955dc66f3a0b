"""
Pérdidas contrastivas: InfoNCE local densa, InfoNCE global con memory bank y total simétrica
"""
from typing import Optional, Tuple, Union

import numpy as np

from .. import diffmath as dm
from ..diffmath import Tensor
from ..errors import DegenerateBankError, DegenerateBatchError
from .memory_bank import MemoryBank
from .pairs import PairSet


def select_pairs(pairs: PairSet, max_pairs: int, rng: Optional[np.random.Generator] = None) -> PairSet:
    """
    Submuestrea a lo sumo max_pairs pares

    Con rng se eligen al azar (sin reemplazo, orden original); sin rng se
    toman índices equiespaciados.
    """
    n = len(pairs)
    if n <= max_pairs:
        return pairs
    if rng is not None:
        seleccion = np.sort(rng.choice(n, size=max_pairs, replace=False))
    else:
        seleccion = np.arange(max_pairs) * n // max_pairs
    return pairs.subset(seleccion)


def local_infonce(
    fs_alpha,
    fs_beta,
    pairs: PairSet,
    tau: float,
    max_pairs: int = 512,
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """
    InfoNCE local sobre pares emparejados por anchors

    Para cada par i los logits son las similitudes de α_i con todos los β
    emparejados, divididas por tau; la clase correcta es su pareja.

    Args:
        fs_alpha, fs_beta: FeatureSet de cada vista
        pairs: Pares uno a uno
        tau: Temperatura
        max_pairs: Máximo de pares por llamada
        rng: Generador para el submuestreo (None = equiespaciado)

    Returns:
        Pérdida escalar (en la cinta)

    Raises:
        DegenerateBatchError: Con menos de 2 pares
    """
    if len(pairs) < 2:
        raise DegenerateBatchError(f"InfoNCE local necesita al menos 2 pares, hay {len(pairs)}")
    pares = select_pairs(pairs, max_pairs, rng)
    a = dm.l2_normalize(dm.gather(fs_alpha.features, pares.alpha), axis=1)
    b = dm.l2_normalize(dm.gather(fs_beta.features, pares.beta), axis=1)
    logits = dm.scale(dm.matmul(a, dm.transpose(b)), 1.0 / tau)
    return dm.softmax_cross_entropy(logits, np.arange(len(pares)))


def _como_tensor(valor) -> Tensor:
    if isinstance(valor, Tensor):
        return valor
    vector = getattr(valor, "vector", None)
    return vector if vector is not None else Tensor(valor)


def global_infonce(q, k_pos, bank: MemoryBank, tau: float) -> Tensor:
    """
    InfoNCE global de discriminación de instancias

    Args:
        q: GlobalFeature de la rama query (con gradiente)
        k_pos: GlobalFeature positiva de la rama momentum (sin gradiente)
        bank: Banco con los negativos
        tau: Temperatura

    Returns:
        Pérdida escalar; el gradiente sólo fluye hacia q

    Raises:
        DegenerateBankError: Si el banco está vacío
    """
    if bank is None or bank.filled_count == 0:
        raise DegenerateBankError("InfoNCE global con el memory bank vacío")
    q = _como_tensor(q)
    positiva = np.asarray(getattr(k_pos, "data", k_pos), dtype=np.float64).reshape(-1)
    positiva = positiva / np.linalg.norm(positiva)
    claves = np.vstack([positiva[None, :], bank.keys()])

    consulta = dm.l2_normalize(dm.reshape(q, (1, q.size)), axis=1)
    logits = dm.scale(dm.matmul(consulta, Tensor(claves.T)), 1.0 / tau)
    return dm.softmax_cross_entropy(logits, np.array([0]))


def total_loss(l_ab, l_ba, g_ab, g_ba) -> Union[Tensor, float]:
    """Pérdida total: 0.25 por la suma de los cuatro términos"""
    terminos = (l_ab, l_ba, g_ab, g_ba)
    if any(isinstance(t, Tensor) for t in terminos):
        suma = None
        for t in terminos:
            t = t if isinstance(t, Tensor) else Tensor(float(t))
            suma = t if suma is None else dm.add(suma, t)
        return dm.scale(suma, 0.25)
    return 0.25 * (float(l_ab) + float(l_ba) + float(g_ab) + float(g_ba))


def local_matching_accuracy(fs_alpha, fs_beta, pairs: PairSet) -> Tuple[float, int]:
    """
    Precisión top-1 de emparejamiento local

    Para cada par, se busca entre los β emparejados el de mayor similitud
    coseno con α_i; acierta si es su pareja.

    Returns:
        (precisión, cantidad de candidatos); (0.0, 0) sin pares
    """
    if len(pairs) == 0:
        return 0.0, 0
    a = _filas_unitarias(getattr(fs_alpha, "features", fs_alpha), pairs.alpha)
    b = _filas_unitarias(getattr(fs_beta, "features", fs_beta), pairs.beta)
    mejores = np.argmax(a @ b.T, axis=1)
    return float(np.mean(mejores == np.arange(len(pairs)))), len(pairs)


def _filas_unitarias(features, indices) -> np.ndarray:
    datos = np.asarray(getattr(features, "data", features), dtype=np.float64)[indices]
    return datos / np.maximum(np.linalg.norm(datos, axis=1, keepdims=True), 1e-12)
