"""
Paso de entrenamiento del framework unificado
C1 -> encoders query (α1, β1), C2 -> encoders momentum (α2, β2);
pérdida local sobre pares minados por anchors y global contra los memory banks
"""
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from .. import diffmath as dm
from ..config import TrainConfig
from ..contrast import (
    DualEncoderState,
    global_infonce,
    local_infonce,
    local_matching_accuracy,
    mine_pairs,
    select_pairs,
)
from ..encoders import FeatureSet, pool_project
from ..errors import (
    DegenerateBatchError,
    EmptyInputError,
    GridOverflowError,
    PairRejectedError,
)
from .plan import FrameViews, ViewPlan, build_views

# errores que omiten el frame en lugar de abortar el paso
DEGENERATE_ERRORS = (EmptyInputError, DegenerateBatchError, PairRejectedError, GridOverflowError)


@dataclass
class SkippedFrame:
    """Frame cuya construcción de vistas falló de forma degenerada"""

    index: int
    reason: str


@dataclass
class StepReport:
    """Resumen de un paso: promedios por frame de cada término"""

    l_ab: float = 0.0
    l_ba: float = 0.0
    g_ab: float = 0.0
    g_ba: float = 0.0
    total: float = 0.0
    pairs: int = 0
    acc: float = 0.0
    candidates: float = 0.0
    skipped: int = 0
    frames: int = 0
    global_skipped: bool = False

    @property
    def empty(self) -> bool:
        return self.frames == 0

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass
class _Terminos:
    """Términos de un frame y las claves momentum a encolar"""

    index: int
    locales: Dict[str, dm.Tensor] = field(default_factory=dict)
    globales: Dict[str, dm.Tensor] = field(default_factory=dict)
    k_alpha: Optional[object] = None
    k_beta: Optional[object] = None
    pairs: int = 0
    acc: float = 0.0
    candidates: int = 0

    def activos(self) -> List[dm.Tensor]:
        return list(self.locales.values()) + list(self.globales.values())


def prepare_views(item, plan: ViewPlan, rng: np.random.Generator) -> Union[FrameViews, SkippedFrame]:
    """build_views que convierte los errores degenerados en SkippedFrame (apto para hilos)"""
    try:
        return build_views(item, plan, rng)
    except DEGENERATE_ERRORS as e:
        indice = item[0].index if isinstance(item, tuple) else getattr(item, "index", -1)
        return SkippedFrame(index=indice, reason=str(e))


def _codificar(plan: ViewPlan, view, encoder) -> FeatureSet:
    return plan.registry[view.format].encode(view, encoder)


def _terminos_frame(
    state: DualEncoderState,
    plan: ViewPlan,
    vistas: FrameViews,
    cfg: TrainConfig,
    rng: np.random.Generator,
    banco_lleno: bool,
) -> _Terminos:
    terminos = _Terminos(index=vistas.index)
    tau = state.tau

    fs_a1 = _codificar(plan, vistas.alpha1, state.alpha.encoder)
    fs_b1 = _codificar(plan, vistas.beta1, state.beta.encoder)

    if plan.use_local:
        pares = mine_pairs(fs_a1, fs_b1, plan.match_radius)
        if len(pares) < 2:
            raise DegenerateBatchError(f"sólo {len(pares)} pares minados")
        terminos.acc, terminos.candidates = local_matching_accuracy(fs_a1, fs_b1, pares)
        elegidos = select_pairs(pares, cfg.contrast.max_pairs, rng)
        terminos.pairs = len(elegidos)
        terminos.locales["l_ab"] = local_infonce(fs_a1, fs_b1, elegidos, tau, cfg.contrast.max_pairs)
        terminos.locales["l_ba"] = local_infonce(fs_b1, fs_a1, elegidos.swapped(), tau, cfg.contrast.max_pairs)

    if plan.use_global:
        bank_alpha, bank_beta = state.require_banks()
        with dm.no_grad():
            terminos.k_alpha = pool_project(_codificar(plan, vistas.alpha2, state.alpha_m.encoder), state.alpha_m.head)
            terminos.k_beta = pool_project(_codificar(plan, vistas.beta2, state.beta_m.encoder), state.beta_m.head)
        if banco_lleno:
            q_a1 = pool_project(fs_a1, state.alpha.head)
            q_b1 = pool_project(fs_b1, state.beta.head)
            terminos.globales["g_ab"] = global_infonce(q_a1, terminos.k_beta, bank_beta, tau)
            terminos.globales["g_ba"] = global_infonce(q_b1, terminos.k_alpha, bank_alpha, tau)

    return terminos


def _promedio(terminos: Sequence[dm.Tensor]) -> dm.Tensor:
    suma = terminos[0]
    for t in terminos[1:]:
        suma = dm.add(suma, t)
    return dm.scale(suma, 1.0 / len(terminos))


def frame_loss(
    state: DualEncoderState,
    vistas: FrameViews,
    cfg: TrainConfig,
    rng: np.random.Generator,
    plan: Optional[ViewPlan] = None,
) -> dm.Tensor:
    """
    Pérdida total de un frame: promedio de sus términos activos

    No encola claves en los bancos; training_step la usa por frame y la
    suite de gradientes la verifica por diferencias finitas.

    Raises:
        DegenerateBatchError: Si el frame no produce ningún término
    """
    plan = plan or ViewPlan.from_config(cfg)
    banco_lleno = plan.use_global and all(b.filled_count > 0 for b in state.require_banks())
    activos = _terminos_frame(state, plan, vistas, cfg, rng, banco_lleno).activos()
    if not activos:
        raise DegenerateBatchError(f"frame {vistas.index} sin términos activos")
    return _promedio(activos)


def training_step(
    state: DualEncoderState,
    frames: Sequence,
    cfg: TrainConfig,
    rng: np.random.Generator,
    plan: Optional[ViewPlan] = None,
) -> Tuple[StepReport, Dict[str, np.ndarray]]:
    """
    Un paso del framework sobre un lote de frames

    El total de cada frame es el promedio de sus términos activos (0.25 por
    la suma con los cuatro); el del lote es el promedio sobre frames. Los
    bancos se actualizan con k_α2 y k_β2 después de calcular la pérdida.

    Args:
        state: Estado dual (se encolan claves en sus bancos)
        frames: PosedFrame, pares con pose, FrameViews ya construidas o SkippedFrame
        cfg: Configuración de la ejecución
        rng: Generador para construir vistas y submuestrear pares
        plan: Plan de vistas (por defecto derivado de cfg)

    Returns:
        (StepReport, gradientes nombre -> arreglo de cada parámetro entrenable)
    """
    plan = plan or ViewPlan.from_config(cfg)
    reporte = StepReport()
    banco_lleno = False
    if plan.use_global:
        bank_alpha, bank_beta = state.require_banks()
        banco_lleno = bank_alpha.filled_count > 0 and bank_beta.filled_count > 0
    if plan.use_global and not banco_lleno:
        reporte.global_skipped = True
        logger.info("ℹ️ Memory bank vacío: se omite la pérdida global en este paso")

    procesados: List[_Terminos] = []
    with dm.Tape() as cinta:
        for item in frames:
            vistas = item if isinstance(item, (FrameViews, SkippedFrame)) else prepare_views(item, plan, rng)
            if isinstance(vistas, SkippedFrame):
                logger.warning(f"⚠️ Frame {vistas.index} omitido: {vistas.reason}")
                reporte.skipped += 1
                continue
            try:
                procesados.append(_terminos_frame(state, plan, vistas, cfg, rng, banco_lleno))
            except DEGENERATE_ERRORS as e:
                logger.warning(f"⚠️ Frame {vistas.index} omitido: {e}")
                reporte.skipped += 1

        totales = [_promedio(t.activos()) for t in procesados if t.activos()]
        perdida = _promedio(totales) if totales else None

    grads: Dict[str, np.ndarray] = {}
    if perdida is not None:
        por_id = dm.backward(cinta, perdida)
        for nombre, tensor in state.named_parameters():
            grads[nombre] = por_id.get(id(tensor), np.zeros_like(tensor.data))
        reporte.total = perdida.item()

    _resumir(reporte, procesados)

    if plan.use_global:
        for terminos in procesados:
            state.bank_alpha.enqueue([terminos.k_alpha])
            state.bank_beta.enqueue([terminos.k_beta])

    logger.debug(
        f"Paso: total={reporte.total:.4f} pares={reporte.pairs} acc={reporte.acc:.3f} "
        f"frames={reporte.frames} omitidos={reporte.skipped}"
    )
    return reporte, grads


def _resumir(reporte: StepReport, procesados: List[_Terminos]) -> None:
    reporte.frames = len(procesados)
    for clave in ("l_ab", "l_ba", "g_ab", "g_ba"):
        valores = [{**t.locales, **t.globales}[clave].item() for t in procesados if clave in {**t.locales, **t.globales}]
        setattr(reporte, clave, float(np.mean(valores)) if valores else 0.0)
    con_pares = [t for t in procesados if t.candidates > 0]
    reporte.pairs = int(sum(t.pairs for t in procesados))
    if con_pares:
        reporte.acc = float(np.mean([t.acc for t in con_pares]))
        reporte.candidates = float(np.mean([t.candidates for t in con_pares]))
