"""
Augment - Recortes C1/C2 y vistas aumentadas con procedencia 3D (anchors)
"""
from .crops import CropSpec, sample_crops
from .params import AugmentParams, sample_augment_params
from .views import View, make_view, make_image_view, cross_view_pair

__all__ = [
    # Recortes
    'CropSpec',
    'sample_crops',

    # Parámetros
    'AugmentParams',
    'sample_augment_params',

    # Vistas
    'View',
    'make_view',
    'make_image_view',
    'cross_view_pair'
]
