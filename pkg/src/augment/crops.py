"""
Recortes C1/C2 con cuadrado de dropout
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..config import AugmentSettings
from ..errors import ConfigurationError
from ..geometry import DepthMap


@dataclass(frozen=True)
class CropSpec:
    """
    Rectángulo de recorte en píxeles de la imagen de origen

    dropout_rect = (x, y, lado) en coordenadas de la imagen de origen,
    siempre contenido en el recorte
    """

    x0: int
    y0: int
    w: int
    h: int
    dropout_rect: Optional[Tuple[int, int, int]] = None

    def __post_init__(self):
        if self.w < 1 or self.h < 1 or self.x0 < 0 or self.y0 < 0:
            raise ConfigurationError(f"Recorte inválido: {self}")
        if self.dropout_rect is not None:
            dx, dy, lado = self.dropout_rect
            if lado < 1 or dx < self.x0 or dy < self.y0 or dx + lado > self.x0 + self.w or dy + lado > self.y0 + self.h:
                raise ConfigurationError(f"dropout_rect {self.dropout_rect} fuera del recorte")

    @classmethod
    def full(cls, width: int, height: int) -> "CropSpec":
        """Recorte que cubre toda la imagen, sin dropout"""
        return cls(0, 0, width, height)

    def check_inside(self, width: int, height: int) -> None:
        if self.x0 + self.w > width or self.y0 + self.h > height:
            raise ConfigurationError(f"Recorte {self} fuera de la imagen {width}x{height}")

    def dropout_mask(self) -> np.ndarray:
        """Máscara h x w (coordenadas del recorte) con True dentro del dropout"""
        mascara = np.zeros((self.h, self.w), dtype=bool)
        if self.dropout_rect is not None:
            dx, dy, lado = self.dropout_rect
            mascara[dy - self.y0:dy - self.y0 + lado, dx - self.x0:dx - self.x0 + lado] = True
        return mascara


def _lado(rng: np.random.Generator, total: int, settings: AugmentSettings) -> int:
    fraccion = rng.uniform(settings.crop_min, settings.crop_max)
    return int(min(total, max(settings.min_crop_px, math.ceil(fraccion * total))))


def _un_recorte(ancho: int, alto: int, rng: np.random.Generator, settings: AugmentSettings) -> CropSpec:
    w = _lado(rng, ancho, settings)
    h = _lado(rng, alto, settings)
    x0 = int(rng.integers(0, ancho - w + 1))
    y0 = int(rng.integers(0, alto - h + 1))

    dropout = None
    if settings.use_dropout:
        fraccion = rng.uniform(settings.dropout_min, settings.dropout_max)
        lado = max(1, int(round(fraccion * min(w, h))))
        dx = x0 + int(rng.integers(0, w - lado + 1))
        dy = y0 + int(rng.integers(0, h - lado + 1))
        dropout = (dx, dy, lado)

    return CropSpec(x0, y0, w, h, dropout)


def sample_crops(
    depth: DepthMap,
    rng: np.random.Generator,
    settings: Optional[AugmentSettings] = None,
) -> Tuple[CropSpec, CropSpec]:
    """
    Muestrea dos recortes independientes del mismo mapa de profundidad

    Args:
        depth: Mapa de profundidad de origen
        rng: Generador de números aleatorios
        settings: Rangos de recorte y dropout

    Returns:
        (C1, C2)

    Raises:
        ConfigurationError: Si la imagen es menor que el recorte mínimo
    """
    settings = settings or AugmentSettings()
    if depth.width < settings.min_crop_px or depth.height < settings.min_crop_px:
        raise ConfigurationError(
            f"Imagen {depth.width}x{depth.height} menor que el recorte mínimo de {settings.min_crop_px} px"
        )
    return (
        _un_recorte(depth.width, depth.height, rng, settings),
        _un_recorte(depth.width, depth.height, rng, settings),
    )
