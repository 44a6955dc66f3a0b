"""
Parámetros de aumentación muestreados por vista
"""
from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np

from ..config import AugmentSettings
from ..errors import ConfigurationError


@dataclass(frozen=True)
class AugmentParams:
    """
    Parámetros concretos de una vista

    Args:
        rotation_angle: Rotación de puntos/voxels alrededor del eje y de la cámara (rad)
        scale: Factor de escala de las coordenadas
        flip_x, flip_z: Reflexiones de las coordenadas
        depth_roll_angle: Giro del mapa de profundidad alrededor del punto principal (rad)
        pixel_zero_fraction: Fracción de píxeles válidos que se ponen en cero
        brightness, color_contrast, saturation: Factores multiplicativos (1 = sin cambio)
        grayscale: Convertir la imagen a escala de grises
        blur_sigma: Sigma del desenfoque gaussiano (0 = sin desenfoque)
        seed: Semilla de las elecciones internas de la vista
    """

    rotation_angle: float = 0.0
    scale: float = 1.0
    flip_x: bool = False
    flip_z: bool = False
    depth_roll_angle: float = 0.0
    pixel_zero_fraction: float = 0.0
    brightness: float = 1.0
    color_contrast: float = 1.0
    saturation: float = 1.0
    grayscale: bool = False
    blur_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.pixel_zero_fraction <= 1.0:
            raise ConfigurationError(f"pixel_zero_fraction fuera de [0, 1]: {self.pixel_zero_fraction}")
        if not self.scale > 0:
            raise ConfigurationError(f"scale debe ser > 0, recibido {self.scale}")
        if self.blur_sigma < 0:
            raise ConfigurationError(f"blur_sigma debe ser >= 0, recibido {self.blur_sigma}")

    @classmethod
    def identity(cls, seed: int = 0) -> "AugmentParams":
        return cls(seed=seed)

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def _uniforme_simetrica(rng: np.random.Generator, fuerza: float) -> float:
    return float(rng.uniform(1.0 - fuerza, 1.0 + fuerza)) if fuerza > 0 else 1.0


def sample_augment_params(settings: AugmentSettings, rng: np.random.Generator) -> AugmentParams:
    """
    Muestrea parámetros de aumentación según los rangos configurados

    El orden de consumo del generador es fijo, así la misma semilla produce
    siempre los mismos parámetros.

    Args:
        settings: Rangos de la configuración
        rng: Generador de números aleatorios

    Returns:
        AugmentParams
    """
    angulo = float(rng.uniform(0.0, 2.0 * np.pi))
    escala = float(rng.uniform(settings.scale_min, settings.scale_max))
    flip_x = bool(rng.random() < settings.flip_prob)
    flip_z = bool(rng.random() < settings.flip_prob)
    giro = float(rng.uniform(-settings.depth_roll_max, settings.depth_roll_max))
    brillo = _uniforme_simetrica(rng, settings.brightness)
    contraste = _uniforme_simetrica(rng, settings.color_contrast)
    saturacion = _uniforme_simetrica(rng, settings.saturation)
    gris = bool(rng.random() < settings.grayscale_prob)
    desenfoque = bool(rng.random() < settings.blur_prob)
    sigma = float(rng.uniform(0.1, settings.blur_sigma_max)) if desenfoque and settings.blur_sigma_max > 0.1 else 0.0
    semilla = int(rng.integers(0, 2 ** 31 - 1))

    return AugmentParams(
        rotation_angle=angulo if settings.rotate_points else 0.0,
        scale=escala,
        flip_x=flip_x,
        flip_z=flip_z,
        depth_roll_angle=giro,
        pixel_zero_fraction=settings.pixel_zero_fraction,
        brightness=brillo,
        color_contrast=contraste,
        saturation=saturacion,
        grayscale=gris,
        blur_sigma=sigma,
        seed=semilla,
    )
