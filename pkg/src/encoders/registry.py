"""
Registro de encoders por formato de vista
"""
from typing import Callable, Dict, NamedTuple

import numpy as np

from ..config import EncoderConfig
from ..errors import ConfigurationError
from ..geometry import ViewFormat
from .grids import encode_depth, encode_image, init_depth_encoder, init_image_encoder
from .params import EncoderParams, FeatureSet
from .points import encode_points, init_point_encoder
from .voxels import encode_voxels, init_voxel_encoder


class EncoderSpec(NamedTuple):
    init: Callable[[EncoderConfig, np.random.Generator], EncoderParams]
    encode: Callable[..., FeatureSet]


ENCODER_REGISTRY: Dict[ViewFormat, EncoderSpec] = {
    ViewFormat.DEPTH: EncoderSpec(init_depth_encoder, encode_depth),
    ViewFormat.POINT: EncoderSpec(init_point_encoder, encode_points),
    ViewFormat.VOXEL: EncoderSpec(init_voxel_encoder, encode_voxels),
    ViewFormat.IMAGE: EncoderSpec(init_image_encoder, encode_image),
}


def _spec(format) -> EncoderSpec:
    try:
        return ENCODER_REGISTRY[ViewFormat(format)]
    except (KeyError, ValueError):
        raise ConfigurationError(f"No hay encoder para el formato '{format}'")


def init_encoder(format, cfg: EncoderConfig, rng: np.random.Generator) -> EncoderParams:
    """Inicializa los parámetros del encoder de un formato"""
    return _spec(format).init(cfg, rng)


def encode(view, params: EncoderParams) -> FeatureSet:
    """Codifica una vista con el encoder de su formato"""
    if ViewFormat(params.format) is not ViewFormat(view.format):
        raise ConfigurationError(f"Encoder {params.format} no sirve vistas {view.format}")
    return _spec(view.format).encode(view, params)
