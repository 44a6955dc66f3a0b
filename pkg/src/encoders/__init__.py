"""
Encoders - Redes de juguete por formato (puntos, profundidad, voxels, imagen) y cabeza de proyección
"""
from .params import EncoderParams, FeatureSet, GlobalFeature
from .points import encode_points, init_point_encoder, farthest_point_sampling, group_in_radius
from .grids import encode_depth, encode_image, init_depth_encoder, init_image_encoder, resize_and_pad
from .voxels import encode_voxels, init_voxel_encoder, bounding_grid
from .head import init_head, pool_project
from .registry import ENCODER_REGISTRY, EncoderSpec, init_encoder, encode

__all__ = [
    # Tipos
    'EncoderParams',
    'FeatureSet',
    'GlobalFeature',

    # Puntos
    'encode_points',
    'init_point_encoder',
    'farthest_point_sampling',
    'group_in_radius',

    # Grillas
    'encode_depth',
    'encode_image',
    'init_depth_encoder',
    'init_image_encoder',
    'resize_and_pad',

    # Voxels
    'encode_voxels',
    'init_voxel_encoder',
    'bounding_grid',

    # Cabeza
    'init_head',
    'pool_project',

    # Registro
    'ENCODER_REGISTRY',
    'EncoderSpec',
    'init_encoder',
    'encode'
]
