"""
Plan de construcción de vistas por estrategia
Convierte un frame (o un par de frames con pose) en las vistas α1, β1, α2, β2
"""
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np
from loguru import logger

from ..augment import View, cross_view_pair, make_image_view, make_view, sample_augment_params, sample_crops
from ..config import AugmentSettings, StrategyKind, TrainConfig
from ..encoders import ENCODER_REGISTRY, EncoderSpec
from ..errors import ConfigurationError
from ..geometry import ViewFormat
from ..synthdata import PosedFrame


def effective_match_radius(match_radius: float, voxel_size: float, format_alpha, format_beta) -> float:
    """
    Radio de emparejamiento efectivo

    Los anchors de una vista Voxel son medias de celda, así que con una rama
    Voxel el radio no puede ser menor que media diagonal de celda.
    """
    if ViewFormat.VOXEL in (ViewFormat(format_alpha), ViewFormat(format_beta)):
        return max(match_radius, voxel_size * math.sqrt(3.0) / 2.0)
    return match_radius


@dataclass(frozen=True)
class ViewPlan:
    """
    Qué vistas construir y cómo emparejarlas

    Args:
        kind: Estrategia
        format_alpha, format_beta: Formatos de cada rama
        augment: Rangos de aumentación
        voxel_size: Tamaño de voxel de las vistas Voxel
        match_radius: Radio efectivo para minar pares
        use_local, use_global: Términos activos
        world_anchors: Pares de frames con pose (PointContrast)
        min_overlap: Solapamiento mínimo de los pares con pose
        registry: Encoders por formato
    """

    kind: StrategyKind
    format_alpha: ViewFormat
    format_beta: ViewFormat
    augment: AugmentSettings
    voxel_size: float
    match_radius: float
    use_local: bool = True
    use_global: bool = True
    world_anchors: bool = False
    min_overlap: float = 0.3
    registry: Dict[ViewFormat, EncoderSpec] = field(default_factory=lambda: dict(ENCODER_REGISTRY), compare=False)

    @classmethod
    def from_config(cls, cfg: TrainConfig, registry: Optional[Dict[ViewFormat, EncoderSpec]] = None) -> "ViewPlan":
        estrategia = cfg.strategy
        return cls(
            kind=estrategia.kind,
            format_alpha=estrategia.format_alpha,
            format_beta=estrategia.format_beta,
            augment=cfg.augment,
            voxel_size=cfg.encoder.voxel_size,
            match_radius=effective_match_radius(
                cfg.contrast.match_radius, cfg.encoder.voxel_size, estrategia.format_alpha, estrategia.format_beta
            ),
            use_local=estrategia.use_local,
            use_global=estrategia.use_global,
            world_anchors=estrategia.world_anchors,
            min_overlap=cfg.contrast.min_overlap,
            registry=dict(registry if registry is not None else ENCODER_REGISTRY),
        )


@dataclass
class FrameViews:
    """Vistas de un frame: α1/β1 del recorte C1 (query), α2/β2 del recorte C2 (momentum)"""

    alpha1: View
    beta1: View
    alpha2: Optional[View] = None
    beta2: Optional[View] = None
    index: int = 0


def _vista(frame: PosedFrame, crop, formato: ViewFormat, params, voxel_size: float) -> View:
    if formato is ViewFormat.IMAGE:
        return make_image_view(frame.color, frame.depth, frame.intrinsics, crop, params)
    return make_view(frame.depth, frame.intrinsics, crop, formato, params, voxel_size=voxel_size)


def build_views(
    item: Union[PosedFrame, tuple],
    plan: ViewPlan,
    rng: np.random.Generator,
) -> FrameViews:
    """
    Construye las vistas de un ítem de datos

    Función pura respecto de (item, plan, estado de rng): puede correr en un
    hilo de trabajo sin tocar parámetros.

    Args:
        item: PosedFrame, o (frame_a, frame_b) para estrategias con pares con pose
        plan: Plan de la estrategia
        rng: Generador de números aleatorios

    Returns:
        FrameViews (α2/β2 en None cuando la rama global está desactivada)

    Raises:
        ConfigurationError: Si PointContrast recibe un frame suelto
        EmptyInputError, PairRejectedError: Vistas degeneradas (el llamador omite el frame)
    """
    if plan.world_anchors:
        if not isinstance(item, tuple) or len(item) != 2:
            raise ConfigurationError(f"{plan.kind.value} necesita pares de frames con pose")
        a, b = item
        params_a = sample_augment_params(plan.augment, rng)
        params_b = sample_augment_params(plan.augment, rng)
        alpha1, beta1 = cross_view_pair(
            a.depth, a.pose, b.depth, b.pose, a.intrinsics,
            min_overlap=plan.min_overlap, params_a=params_a, params_b=params_b,
        )
        return FrameViews(alpha1, beta1, index=a.index)

    frame = item[0] if isinstance(item, tuple) else item
    c1, c2 = sample_crops(frame.depth, rng, plan.augment)

    alpha1 = _vista(frame, c1, plan.format_alpha, sample_augment_params(plan.augment, rng), plan.voxel_size)
    beta1 = _vista(frame, c1, plan.format_beta, sample_augment_params(plan.augment, rng), plan.voxel_size)
    if not plan.use_global:
        return FrameViews(alpha1, beta1, index=frame.index)

    alpha2 = _vista(frame, c2, plan.format_alpha, sample_augment_params(plan.augment, rng), plan.voxel_size)
    beta2 = _vista(frame, c2, plan.format_beta, sample_augment_params(plan.augment, rng), plan.voxel_size)
    logger.trace(f"Frame {frame.index}: vistas {len(alpha1)}/{len(beta1)}/{len(alpha2)}/{len(beta2)}")
    return FrameViews(alpha1, beta1, alpha2, beta2, index=frame.index)
