"""
Loop de pre-entrenamiento: pasos de estrategia, SGD, EMA, checkpoints y métricas
"""
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from loguru import logger

from .. import diffmath as dm
from ..config import TrainConfig, save_run_config
from ..contrast import ema_update
from ..database import Database, crear_ejecucion, database_url_for_run, finalizar_ejecucion, registrar_metricas_batch
from ..strategies import build_strategy, prepare_views, state_tensors, training_step
from .evaluation import MatchingResult, evaluate_state
from .export import CSV_COLUMNS, write_metrics_csv
from .optimizer import init_velocity, lr_schedule, sgd_step

VELOCITY_PREFIX = "optim.velocity."


@dataclass
class RunMetrics:
    """Filas por paso, agregados por época y resultado de la ejecución"""

    rows: List[Dict] = field(default_factory=list)
    epochs: List[Dict] = field(default_factory=list)
    seconds: float = 0.0
    run_id: Optional[int] = None
    output_dir: Optional[Path] = None
    checkpoint: Optional[Path] = None
    holdout: Optional[MatchingResult] = None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=CSV_COLUMNS + ["epoch", "skipped"])

    def epoch_means(self) -> pd.DataFrame:
        return pd.DataFrame(self.epochs)


def _tensores_checkpoint(state, velocity: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    tensores = state_tensors(state)
    for nombre, v in velocity.items():
        tensores[VELOCITY_PREFIX + nombre] = v
    return tensores


def _rng_frame(cfg: TrainConfig, epoca: int, indice: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, epoca + 1, indice, 0])


def _rng_paso(cfg: TrainConfig, epoca: int, lote: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, epoca + 1, lote, 1])


def _vistas_frame(source, indice: int, plan, rng: np.random.Generator):
    return prepare_views(source[indice], plan, rng)


def pretrain(cfg: TrainConfig, source, holdout=None) -> RunMetrics:
    """
    Pre-entrena la estrategia configurada sobre una fuente de frames

    Por época: frames barajados, un paso de estrategia por lote, paso de SGD,
    EMA de los espejos y fila de métricas. Checkpoint al cerrar cada época y
    final.ckpt al terminar. Con (seed, config) fijos todo es reproducible,
    para cualquier cantidad de workers.

    Args:
        cfg: Configuración de la ejecución
        source: Fuente de frames indexable (SyntheticFrames, DirectoryFrames)
        holdout: Fuente de validación para la precisión de emparejamiento final (opcional)

    Returns:
        RunMetrics
    """
    inicio = time.perf_counter()
    salida = Path(cfg.output_dir)
    salida.mkdir(parents=True, exist_ok=True)
    save_run_config(cfg, salida / "run_config.env")

    state, plan = build_strategy(cfg, np.random.default_rng(cfg.seed))
    velocity = init_velocity(state.named_parameters())

    n = len(source)
    pasos_por_epoca = math.ceil(n / cfg.batch_size) if n else 0
    total_pasos = cfg.epochs * pasos_por_epoca
    metricas = RunMetrics(output_dir=salida)

    db = Database(database_url_for_run(salida))
    with db.get_session() as session:
        metricas.run_id = crear_ejecucion(
            session, cfg.strategy.kind.value, cfg.seed, cfg.epochs, str(salida)
        ).id

    logger.info(
        f"🚀 Pre-entrenamiento {cfg.strategy.kind.value}: {n} frames, {cfg.epochs} épocas, "
        f"{total_pasos} pasos, workers={cfg.workers}"
    )

    pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 0 else None
    paso = 0
    try:
        for epoca in range(cfg.epochs):
            orden = np.random.default_rng([cfg.seed, epoca + 1]).permutation(n)
            lotes = [orden[i:i + cfg.batch_size] for i in range(0, n, cfg.batch_size)]

            def preparar(lote):
                if pool is None:
                    return [_vistas_frame(source, int(i), plan, _rng_frame(cfg, epoca, int(i))) for i in lote]
                return [pool.submit(_vistas_frame, source, int(i), plan, _rng_frame(cfg, epoca, int(i))) for i in lote]

            filas_epoca = []
            pendiente = preparar(lotes[0]) if lotes else []
            for b in range(len(lotes)):
                actual = [f.result() for f in pendiente] if pool is not None else pendiente
                # las vistas del lote siguiente se construyen mientras corre este paso
                pendiente = preparar(lotes[b + 1]) if b + 1 < len(lotes) else []

                lr = lr_schedule(paso, total_pasos, cfg.lr0)
                reporte, grads = training_step(state, actual, cfg, _rng_paso(cfg, epoca, b), plan)
                if grads:
                    sgd_step(state.named_parameters(), grads, velocity, lr, cfg.sgd_momentum)
                    ema_update(state)
                else:
                    logger.warning(f"⚠️ Paso {paso}: todos los frames del lote fueron omitidos")

                fila = {
                    "step": paso,
                    "lr": lr,
                    "l_ab": reporte.l_ab,
                    "l_ba": reporte.l_ba,
                    "g_ab": reporte.g_ab,
                    "g_ba": reporte.g_ba,
                    "total": reporte.total,
                    "pairs": reporte.pairs,
                    "acc": reporte.acc,
                    "epoch": epoca,
                    "skipped": reporte.skipped,
                }
                metricas.rows.append(fila)
                filas_epoca.append(fila)
                paso += 1

            _cerrar_epoca(metricas, filas_epoca, epoca, cfg)
            dm.save_checkpoint(salida / f"epoch_{epoca + 1:03d}.ckpt", _tensores_checkpoint(state, velocity))
            with db.get_session() as session:
                registrar_metricas_batch(session, metricas.run_id, [_fila_db(f) for f in filas_epoca])

        metricas.checkpoint = dm.save_checkpoint(salida / "final.ckpt", _tensores_checkpoint(state, velocity))
        write_metrics_csv(metricas.rows, salida / "metrics.csv")

        if holdout is not None and len(holdout):
            metricas.holdout = evaluate_state(state, plan, holdout, cfg.contrast.max_pairs, cfg.seed)
            logger.info(
                f"📊 Validación: acc={metricas.holdout.accuracy:.3f} "
                f"({metricas.holdout.over_chance:.1f}x el azar)"
            )

    except Exception:
        metricas.seconds = time.perf_counter() - inicio
        with db.get_session() as session:
            finalizar_ejecucion(session, metricas.run_id, metricas.seconds, paso, exitosa=False)
        db.cerrar()
        raise
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    metricas.seconds = time.perf_counter() - inicio
    with db.get_session() as session:
        finalizar_ejecucion(session, metricas.run_id, metricas.seconds, paso)
    db.cerrar()

    logger.info(f"✅ Pre-entrenamiento terminado en {metricas.seconds:.1f}s: {metricas.checkpoint}")
    return metricas


def _fila_db(fila: Dict) -> Dict:
    return {
        "paso": fila["step"],
        "epoca": fila["epoch"],
        "lr": fila["lr"],
        "l_ab": fila["l_ab"],
        "l_ba": fila["l_ba"],
        "g_ab": fila["g_ab"],
        "g_ba": fila["g_ba"],
        "total": fila["total"],
        "pares": fila["pairs"],
        "acc": fila["acc"],
        "omitidos": fila["skipped"],
    }


def _cerrar_epoca(metricas: RunMetrics, filas: List[Dict], epoca: int, cfg: TrainConfig) -> None:
    validas = [f for f in filas if f["total"] != 0.0 or f["pairs"] > 0]
    resumen = {
        "epoch": epoca,
        "total": float(np.mean([f["total"] for f in validas])) if validas else 0.0,
        "acc": float(np.mean([f["acc"] for f in validas])) if validas else 0.0,
        "skipped": int(sum(f["skipped"] for f in filas)),
    }
    metricas.epochs.append(resumen)
    logger.info(
        f"📊 Época {epoca + 1}/{cfg.epochs}: total={resumen['total']:.4f} "
        f"acc={resumen['acc']:.3f} omitidos={resumen['skipped']}"
    )
