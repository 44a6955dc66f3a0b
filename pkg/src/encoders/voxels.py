"""
Encoder de voxels: U-net 3D densa sobre la grilla envolvente
La salida tiene la misma resolución que la entrada (una fila por voxel ocupado)
"""
import numpy as np
from loguru import logger

from .. import diffmath as dm
from ..config import EncoderConfig
from ..errors import ConfigurationError, EmptyInputError, GridOverflowError
from ..geometry import ViewFormat
from .params import EncoderParams, FeatureSet, init_bias, init_weight


def init_voxel_encoder(cfg: EncoderConfig, rng: np.random.Generator) -> EncoderParams:
    c1, c2, c3 = cfg.widths
    params = EncoderParams(
        ViewFormat.VOXEL.value,
        hyper={
            "widths": tuple(cfg.widths),
            "feature_dim": cfg.feature_dim,
            "grid_limit": cfg.voxel_grid_limit,
            "voxel_size": cfg.voxel_size,
        },
    )
    params.add("enc1.w", init_weight(rng, (3, 3, 3, 1, c1)))
    params.add("enc1.b", init_bias(c1))
    params.add("enc2.w", init_weight(rng, (3, 3, 3, c1, c2)))
    params.add("enc2.b", init_bias(c2))
    params.add("enc3.w", init_weight(rng, (3, 3, 3, c2, c3)))
    params.add("enc3.b", init_bias(c3))
    params.add("dec2.w", init_weight(rng, (3, 3, 3, c2 + c3, c2)))
    params.add("dec2.b", init_bias(c2))
    params.add("dec1.w", init_weight(rng, (3, 3, 3, c1 + c2, cfg.feature_dim)))
    params.add("dec1.b", init_bias(cfg.feature_dim))
    return params


def bounding_grid(indices: np.ndarray, limite: int):
    """
    Grilla densa envolvente con lados múltiplos de 4

    Returns:
        (coordenadas locales Mx3, forma de la grilla)

    Raises:
        GridOverflowError: Si algún lado supera el límite
    """
    locales = indices - indices.min(axis=0)
    extension = locales.max(axis=0) + 1
    forma = tuple(int(max(4, -(-e // 4) * 4)) for e in extension)
    if max(forma) > limite:
        raise GridOverflowError(
            f"Grilla de voxels {forma} supera el límite {limite}^3: aumentar voxel_size"
        )
    return locales, forma


def _indices_padre(forma_fina) -> np.ndarray:
    """Índice plano de la celda gruesa (mitad de resolución) de cada celda fina"""
    d, h, w = forma_fina
    ii, jj, kk = np.indices((d, h, w)).reshape(3, -1)
    return np.ravel_multi_index((ii // 2, jj // 2, kk // 2), (d // 2, h // 2, w // 2))


def _subir(x, forma_fina):
    """Sobremuestreo al vecino más cercano x2"""
    canales = x.shape[-1]
    filas = dm.reshape(x, (-1, canales))
    return dm.reshape(dm.gather(filas, _indices_padre(forma_fina)), tuple(forma_fina) + (canales,))


def encode_voxels(view, params: EncoderParams) -> FeatureSet:
    """
    Codifica una vista Voxel

    Args:
        view: Vista de formato Voxel
        params: Parámetros del encoder

    Returns:
        FeatureSet con una fila por voxel ocupado (mismo orden que el payload)

    Raises:
        EmptyInputError: Si no hay voxels
        GridOverflowError: Si la grilla envolvente supera el límite
    """
    if ViewFormat(view.format) is not ViewFormat.VOXEL:
        raise ConfigurationError(f"encode_voxels recibió una vista {view.format}")
    voxels = view.payload
    if len(voxels) == 0:
        raise EmptyInputError("Vista Voxel sin voxels ocupados")

    locales, forma = bounding_grid(voxels.indices, params.hyper["grid_limit"])
    ocupacion = np.zeros(forma + (1,))
    ocupacion[locales[:, 0], locales[:, 1], locales[:, 2], 0] = 1.0
    posiciones = np.ravel_multi_index(tuple(locales.T), forma)

    x = dm.Tensor(ocupacion)
    e1 = dm.relu(dm.conv3d(x, params["enc1.w"], params["enc1.b"], stride=1, padding=1))
    e2 = dm.relu(dm.conv3d(e1, params["enc2.w"], params["enc2.b"], stride=2, padding=1))
    e3 = dm.relu(dm.conv3d(e2, params["enc3.w"], params["enc3.b"], stride=2, padding=1))

    d2 = dm.concat([e2, _subir(e3, e2.shape[:3])], axis=-1)
    d2 = dm.relu(dm.conv3d(d2, params["dec2.w"], params["dec2.b"], stride=1, padding=1))
    d1 = dm.concat([e1, _subir(d2, e1.shape[:3])], axis=-1)
    salida = dm.conv3d(d1, params["dec1.w"], params["dec1.b"], stride=1, padding=1, out_positions=posiciones)

    logger.debug(f"encode_voxels: {len(voxels)} voxels en grilla {forma}")
    return FeatureSet(features=salida, anchors=voxels.anchors)
