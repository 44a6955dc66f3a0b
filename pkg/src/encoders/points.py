"""
Encoder de nubes de puntos con forma de U
Dos etapas de submuestreo (FPS + agrupación por radio + MLP compartido +
max local) y una etapa de subida (interpolación al vecino más cercano + MLP)
"""
import numpy as np
from loguru import logger
from scipy.spatial import cKDTree

from .. import diffmath as dm
from ..config import EncoderConfig
from ..errors import ConfigurationError, EmptyInputError
from ..geometry import ViewFormat
from .params import EncoderParams, FeatureSet, init_bias, init_weight

# puntos mínimos para que la segunda etapa tenga al menos un centro
MIN_POINTS = 32


def farthest_point_sampling(puntos: np.ndarray, cantidad: int, inicio: int = 0) -> np.ndarray:
    """
    Muestreo del punto más lejano

    Args:
        puntos: Arreglo Nx3
        cantidad: Puntos a elegir
        inicio: Índice del primer punto

    Returns:
        Índices elegidos en orden de selección (empates hacia el índice menor)
    """
    n = len(puntos)
    cantidad = min(cantidad, n)
    elegidos = np.empty(cantidad, dtype=np.int64)
    elegidos[0] = inicio
    distancia = np.sum((puntos - puntos[inicio]) ** 2, axis=1)
    for i in range(1, cantidad):
        siguiente = int(np.argmax(distancia))
        elegidos[i] = siguiente
        distancia = np.minimum(distancia, np.sum((puntos - puntos[siguiente]) ** 2, axis=1))
    return elegidos


def group_in_radius(puntos: np.ndarray, centros: np.ndarray, k: int, radio: float) -> np.ndarray:
    """
    Agrupa los k vecinos más cercanos de cada centro dentro de un radio

    Los vecinos fuera del radio se reemplazan por el más cercano, así cada
    grupo tiene exactamente k índices.

    Returns:
        Índices (M, k) sobre puntos
    """
    k = min(k, len(puntos))
    distancias, indices = cKDTree(puntos).query(centros, k=k)
    distancias = distancias.reshape(len(centros), k)
    indices = indices.reshape(len(centros), k)
    lejos = distancias > radio
    return np.where(lejos, indices[:, :1], indices)


def init_point_encoder(cfg: EncoderConfig, rng: np.random.Generator) -> EncoderParams:
    c1, c2, c3 = cfg.widths
    params = EncoderParams(
        ViewFormat.POINT.value,
        hyper={
            "widths": tuple(cfg.widths),
            "feature_dim": cfg.feature_dim,
            "k1": cfg.point_k1,
            "k2": cfg.point_k2,
            "radius1": cfg.point_radius1,
            "radius2": cfg.point_radius2,
            "max_points": cfg.max_points,
        },
    )
    params.add("sa1.w1", init_weight(rng, (3, c1)))
    params.add("sa1.b1", init_bias(c1))
    params.add("sa1.w2", init_weight(rng, (c1, c2)))
    params.add("sa1.b2", init_bias(c2))
    params.add("sa2.w1", init_weight(rng, (3 + c2, c2)))
    params.add("sa2.b1", init_bias(c2))
    params.add("sa2.w2", init_weight(rng, (c2, c3)))
    params.add("sa2.b2", init_bias(c3))
    params.add("fp.w1", init_weight(rng, (c2 + c3, c2)))
    params.add("fp.b1", init_bias(c2))
    params.add("fp.w2", init_weight(rng, (c2, cfg.feature_dim)))
    params.add("fp.b2", init_bias(cfg.feature_dim))
    return params


def _densa(x, params: EncoderParams, prefijo: str, capa: int, activar: bool = True):
    salida = dm.add(dm.matmul(x, params[f"{prefijo}.w{capa}"]), params[f"{prefijo}.b{capa}"])
    return dm.relu(salida) if activar else salida


def _agrupar_y_reducir(x, grupos: int, k: int):
    """(grupos*k, C) -> max sobre cada grupo -> (grupos, C)"""
    return dm.max_reduce(dm.reshape(x, (grupos, k, x.shape[1])), axis=1)


def encode_points(view, params: EncoderParams) -> FeatureSet:
    """
    Codifica una vista Point

    Args:
        view: Vista de formato Point
        params: Parámetros del encoder

    Returns:
        FeatureSet con N/8 filas; anchors = anchors de los centros retenidos

    Raises:
        EmptyInputError: Si hay menos de 32 puntos
    """
    if ViewFormat(view.format) is not ViewFormat.POINT:
        raise ConfigurationError(f"encode_points recibió una vista {view.format}")
    h = params.hyper
    puntos = view.payload.points
    anchors = view.anchors

    if len(puntos) > h["max_points"]:
        retenidos = farthest_point_sampling(puntos, h["max_points"])
        puntos, anchors = puntos[retenidos], anchors[retenidos]
    n = len(puntos)
    if n < MIN_POINTS:
        raise EmptyInputError(f"Nube con {n} puntos, mínimo {MIN_POINTS}")

    # Etapa 1: N -> N/8
    idx1 = farthest_point_sampling(puntos, n // 8)
    centros1 = puntos[idx1]
    grupos1 = group_in_radius(puntos, centros1, h["k1"], h["radius1"])
    k1 = grupos1.shape[1]
    relativas1 = (puntos[grupos1] - centros1[:, None, :]) / h["radius1"]
    x = dm.Tensor(relativas1.reshape(-1, 3))
    x = _densa(_densa(x, params, "sa1", 1), params, "sa1", 2)
    f1 = _agrupar_y_reducir(x, len(centros1), k1)

    # Etapa 2: N/8 -> N/32
    idx2 = farthest_point_sampling(centros1, max(1, len(centros1) // 4))
    centros2 = centros1[idx2]
    grupos2 = group_in_radius(centros1, centros2, h["k2"], h["radius2"])
    k2 = grupos2.shape[1]
    relativas2 = (centros1[grupos2] - centros2[:, None, :]) / h["radius2"]
    x = dm.concat([dm.Tensor(relativas2.reshape(-1, 3)), dm.gather(f1, grupos2.reshape(-1))], axis=1)
    x = _densa(_densa(x, params, "sa2", 1), params, "sa2", 2)
    f2 = _agrupar_y_reducir(x, len(centros2), k2)

    # Subida: interpolación al centro de la etapa 2 más cercano
    _, cercano = cKDTree(centros2).query(centros1, k=1)
    x = dm.concat([f1, dm.gather(f2, np.asarray(cercano).reshape(-1))], axis=1)
    salida = _densa(_densa(x, params, "fp", 1), params, "fp", 2, activar=False)

    logger.debug(f"encode_points: {n} puntos -> {len(centros1)} filas")
    return FeatureSet(features=salida, anchors=anchors[idx1])
