"""
Evaluación de emparejamiento local sobre frames de validación
"""
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from loguru import logger

from .. import diffmath as dm
from ..config import TrainConfig
from ..contrast import DualEncoderState, local_matching_accuracy, mine_pairs, select_pairs
from ..strategies import DEGENERATE_ERRORS, ViewPlan, build_strategy, build_views, load_state_tensors


@dataclass
class MatchingResult:
    """Precisión top-1 agregada sobre los pares de todos los frames evaluados"""

    accuracy: float = 0.0
    chance: float = 0.0
    pairs: int = 0
    frames: int = 0
    skipped: int = 0

    @property
    def over_chance(self) -> float:
        return self.accuracy / self.chance if self.chance > 0 else 0.0


def evaluate_state(
    state: DualEncoderState,
    plan: ViewPlan,
    frames,
    max_pairs: int = 512,
    seed: int = 0,
) -> MatchingResult:
    """
    Precisión de emparejamiento local de un estado sobre una fuente de frames

    Para cada frame se construyen α1/β1 (rng por índice), se minan los pares
    por anchors y se cuenta cuántos α tienen como β más parecido (coseno) a su
    pareja. El azar es el promedio de 1/candidatos.
    """
    plan_local = replace(plan, use_global=False)
    aciertos = 0.0
    total_pares = 0
    azar = []
    resultado = MatchingResult()

    for indice in range(len(frames)):
        rng = np.random.default_rng([seed, indice])
        try:
            vistas = build_views(frames[indice], plan_local, rng)
            with dm.no_grad():
                fs_a = plan.registry[vistas.alpha1.format].encode(vistas.alpha1, state.alpha.encoder)
                fs_b = plan.registry[vistas.beta1.format].encode(vistas.beta1, state.beta.encoder)
        except DEGENERATE_ERRORS as e:
            logger.debug(f"Evaluación: frame {indice} omitido ({e})")
            resultado.skipped += 1
            continue

        pares = select_pairs(mine_pairs(fs_a, fs_b, plan.match_radius), max_pairs)
        if len(pares) < 2:
            resultado.skipped += 1
            continue
        acc, candidatos = local_matching_accuracy(fs_a, fs_b, pares)
        aciertos += acc * candidatos
        total_pares += candidatos
        azar.append(1.0 / candidatos)
        resultado.frames += 1

    if total_pares:
        resultado.accuracy = aciertos / total_pares
        resultado.chance = float(np.mean(azar))
        resultado.pairs = total_pares
    return resultado


def eval_matching(checkpoint, frames, cfg: TrainConfig, seed: Optional[int] = None) -> MatchingResult:
    """
    Precisión top-1 de emparejamiento local de un checkpoint

    Args:
        checkpoint: Ruta a un .ckpt o diccionario nombre -> arreglo ya cargado
        frames: Fuente de frames de validación
        cfg: Configuración con la que se entrenó el checkpoint
        seed: Semilla de las vistas (por defecto la de cfg)

    Returns:
        MatchingResult
    """
    tensores = checkpoint if isinstance(checkpoint, dict) else dm.load_checkpoint(checkpoint)
    state, plan = build_strategy(cfg, np.random.default_rng(cfg.seed))
    load_state_tensors(state, tensores)

    resultado = evaluate_state(state, plan, frames, cfg.contrast.max_pairs, cfg.seed if seed is None else seed)
    logger.info(
        f"📊 Emparejamiento: acc={resultado.accuracy:.3f} azar={resultado.chance:.4f} "
        f"({resultado.over_chance:.1f}x) en {resultado.frames} frames, {resultado.pairs} pares"
    )
    return resultado
