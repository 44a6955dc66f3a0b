"""
Encoders de grilla (profundidad e imagen) con paso de salida 8
Cada celda de salida se ancla al píxel central de su campo receptivo
"""
from typing import Tuple

import numpy as np
from loguru import logger

from .. import diffmath as dm
from ..config import EncoderConfig
from ..errors import ConfigurationError, EmptyInputError
from ..geometry import ViewFormat
from .params import EncoderParams, FeatureSet, init_bias, init_weight

STRIDE = 8


def resize_and_pad(valores: np.ndarray, anchor_grid: np.ndarray, lado: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reescala con vecino más cercano conservando el aspecto y rellena con ceros

    Args:
        valores: Arreglo HxW o HxWxC
        anchor_grid: HxWx3 (NaN en inválidos)
        lado: Lado del cuadrado de entrada

    Returns:
        (entrada lado x lado x C, anchors lado x lado x 3 con NaN en el relleno)
    """
    if valores.ndim == 2:
        valores = valores[..., None]
    alto, ancho = valores.shape[:2]
    escala = lado / max(alto, ancho)
    nuevo_alto = max(1, min(lado, int(round(alto * escala))))
    nuevo_ancho = max(1, min(lado, int(round(ancho * escala))))
    filas = np.minimum(((np.arange(nuevo_alto) + 0.5) / escala).astype(np.int64), alto - 1)
    columnas = np.minimum(((np.arange(nuevo_ancho) + 0.5) / escala).astype(np.int64), ancho - 1)

    entrada = np.zeros((lado, lado, valores.shape[2]))
    anchors = np.full((lado, lado, 3), np.nan)
    entrada[:nuevo_alto, :nuevo_ancho] = valores[np.ix_(filas, columnas)]
    anchors[:nuevo_alto, :nuevo_ancho] = anchor_grid[np.ix_(filas, columnas)]
    return entrada, anchors


def _init_grid_encoder(formato: ViewFormat, canales: int, cfg: EncoderConfig, rng: np.random.Generator) -> EncoderParams:
    c1, c2, c3 = cfg.widths
    params = EncoderParams(
        formato.value,
        hyper={
            "widths": tuple(cfg.widths),
            "feature_dim": cfg.feature_dim,
            "input_size": cfg.depth_input_size,
            "channels": canales,
        },
    )
    params.add("conv1.w", init_weight(rng, (3, 3, canales, c1)))
    params.add("conv1.b", init_bias(c1))
    params.add("conv2.w", init_weight(rng, (3, 3, c1, c2)))
    params.add("conv2.b", init_bias(c2))
    params.add("conv3.w", init_weight(rng, (3, 3, c2, c3)))
    params.add("conv3.b", init_bias(c3))
    params.add("out.w", init_weight(rng, (c3, cfg.feature_dim)))
    params.add("out.b", init_bias(cfg.feature_dim))
    return params


def init_depth_encoder(cfg: EncoderConfig, rng: np.random.Generator) -> EncoderParams:
    return _init_grid_encoder(ViewFormat.DEPTH, 1, cfg, rng)


def init_image_encoder(cfg: EncoderConfig, rng: np.random.Generator) -> EncoderParams:
    return _init_grid_encoder(ViewFormat.IMAGE, 3, cfg, rng)


def _forward_grilla(entrada: np.ndarray, anchors: np.ndarray, params: EncoderParams, stem_pool: bool) -> FeatureSet:
    """
    CNN con tres etapas de paso 2 (profundidad) o stem + max-pool + dos etapas (imagen)
    """
    x = dm.Tensor(entrada)
    if stem_pool:
        x = dm.relu(dm.conv2d(x, params["conv1.w"], params["conv1.b"], stride=1, padding=1))
        x = dm.max_pool_2d(x, 2)
    else:
        x = dm.relu(dm.conv2d(x, params["conv1.w"], params["conv1.b"], stride=2, padding=1))
    x = dm.relu(dm.conv2d(x, params["conv2.w"], params["conv2.b"], stride=2, padding=1))
    x = dm.relu(dm.conv2d(x, params["conv3.w"], params["conv3.b"], stride=2, padding=1))

    alto, ancho, canales = x.shape
    filas = dm.reshape(x, (alto * ancho, canales))

    centros = np.arange(alto)[:, None] * STRIDE + STRIDE // 2, np.arange(ancho)[None, :] * STRIDE + STRIDE // 2
    anchors_centro = anchors[centros[0], centros[1]].reshape(-1, 3)
    validas = np.flatnonzero(~np.isnan(anchors_centro[:, 0]))
    if len(validas) == 0:
        raise EmptyInputError("Ninguna celda de salida tiene un píxel central válido")

    salida = dm.add(dm.matmul(dm.gather(filas, validas), params["out.w"]), params["out.b"])
    return FeatureSet(features=salida, anchors=anchors_centro[validas])


def encode_depth(view, params: EncoderParams) -> FeatureSet:
    """
    Codifica una vista Depth

    Args:
        view: Vista de formato Depth
        params: Parámetros del encoder

    Returns:
        FeatureSet con una fila por celda de salida cuyo píxel central es válido

    Raises:
        EmptyInputError: Si la profundidad no tiene píxeles válidos
    """
    if ViewFormat(view.format) is not ViewFormat.DEPTH:
        raise ConfigurationError(f"encode_depth recibió una vista {view.format}")
    depth = view.payload
    if depth.valid_count == 0:
        raise EmptyInputError("Vista Depth sin píxeles válidos")

    # profundidad centrada en los píxeles válidos, cero en los inválidos
    media = depth.values[depth.valid].mean()
    centrada = np.where(depth.valid, depth.values - media, 0.0)
    entrada, anchors = resize_and_pad(centrada, view.anchor_grid, params.hyper["input_size"])
    fs = _forward_grilla(entrada, anchors, params, stem_pool=False)
    logger.debug(f"encode_depth: {depth.width}x{depth.height} -> {len(fs)} filas")
    return fs


def encode_image(view, params: EncoderParams) -> FeatureSet:
    """
    Codifica una vista Image (3 canales); anchors desde la profundidad alineada

    Raises:
        EmptyInputError: Si ningún píxel tiene profundidad válida
    """
    if ViewFormat(view.format) is not ViewFormat.IMAGE:
        raise ConfigurationError(f"encode_image recibió una vista {view.format}")
    if len(view.anchors) == 0:
        raise EmptyInputError("Vista Image sin píxeles con profundidad válida")

    entrada, anchors = resize_and_pad(view.payload.rgb - 0.5, view.anchor_grid, params.hyper["input_size"])
    fs = _forward_grilla(entrada, anchors, params, stem_pool=True)
    logger.debug(f"encode_image: {view.payload.width}x{view.payload.height} -> {len(fs)} filas")
    return fs
