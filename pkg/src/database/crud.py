"""
Operaciones CRUD de ejecuciones y métricas
"""
from datetime import datetime
from typing import Dict, List, Optional

import pandas as pd
from loguru import logger
from sqlalchemy.orm import Session

from .models import Ejecucion, EstadoEjecucion, MetricaPaso

# Columnas del CSV de métricas y su columna en la tabla
COLUMNAS_CSV = {
    "step": "paso",
    "lr": "lr",
    "l_ab": "l_ab",
    "l_ba": "l_ba",
    "g_ab": "g_ab",
    "g_ba": "g_ba",
    "total": "total",
    "pairs": "pares",
    "acc": "acc",
}


# ========== EJECUCIONES ==========

def crear_ejecucion(
    session: Session,
    estrategia: str,
    semilla: int,
    epocas: int,
    directorio_salida: Optional[str] = None,
) -> Ejecucion:
    """
    Registra una ejecución nueva en estado en curso

    Returns:
        Ejecución creada (con ID asignado)
    """
    ejecucion = Ejecucion(
        estrategia=estrategia,
        semilla=semilla,
        epocas=epocas,
        directorio_salida=directorio_salida,
        estado=EstadoEjecucion.EN_CURSO,
    )
    session.add(ejecucion)
    session.flush()
    logger.info(f"✓ Ejecución registrada: ID {ejecucion.id} ({estrategia}, seed {semilla})")
    return ejecucion


def finalizar_ejecucion(
    session: Session,
    ejecucion_id: int,
    segundos: float,
    pasos: int,
    exitosa: bool = True,
) -> Optional[Ejecucion]:
    """Marca una ejecución como completada o fallida con su duración"""
    ejecucion = obtener_ejecucion(session, ejecucion_id)
    if ejecucion is None:
        logger.warning(f"⚠️ Ejecución {ejecucion_id} no encontrada")
        return None
    ejecucion.estado = EstadoEjecucion.COMPLETADA if exitosa else EstadoEjecucion.FALLIDA
    ejecucion.segundos = segundos
    ejecucion.pasos = pasos
    ejecucion.fecha_fin = datetime.now()
    session.flush()
    return ejecucion


def obtener_ejecucion(session: Session, ejecucion_id: int) -> Optional[Ejecucion]:
    """Obtiene una ejecución por ID"""
    return session.query(Ejecucion).filter(Ejecucion.id == ejecucion_id).first()


def obtener_ultima_ejecucion(session: Session) -> Optional[Ejecucion]:
    """Ejecución más reciente (mayor ID)"""
    return session.query(Ejecucion).order_by(Ejecucion.id.desc()).first()


# ========== MÉTRICAS ==========

def registrar_metricas_batch(session: Session, ejecucion_id: int, filas: List[Dict]) -> int:
    """
    Inserta filas de métricas por paso

    Args:
        session: Sesión de SQLAlchemy
        ejecucion_id: Ejecución a la que pertenecen
        filas: Diccionarios con paso, epoca, lr, l_ab, l_ba, g_ab, g_ba, total, pares, acc, omitidos

    Returns:
        Cantidad de filas insertadas
    """
    metricas = [MetricaPaso(ejecucion_id=ejecucion_id, **fila) for fila in filas]
    session.bulk_save_objects(metricas)
    session.flush()
    logger.debug(f"{len(metricas)} filas de métricas guardadas (ejecución {ejecucion_id})")
    return len(metricas)


def obtener_metricas(session: Session, ejecucion_id: int) -> pd.DataFrame:
    """
    Métricas de una ejecución ordenadas por paso

    Returns:
        DataFrame con las columnas del CSV (step, lr, l_ab, l_ba, g_ab, g_ba, total, pairs, acc)
    """
    filas = (
        session.query(MetricaPaso)
        .filter(MetricaPaso.ejecucion_id == ejecucion_id)
        .order_by(MetricaPaso.paso)
        .all()
    )
    datos = [{csv: getattr(fila, columna) for csv, columna in COLUMNAS_CSV.items()} for fila in filas]
    return pd.DataFrame(datos, columns=list(COLUMNAS_CSV))


def resumen_por_epoca(session: Session, ejecucion_id: int) -> pd.DataFrame:
    """Promedios por época de la pérdida total y la precisión de emparejamiento"""
    filas = (
        session.query(MetricaPaso.epoca, MetricaPaso.total, MetricaPaso.acc, MetricaPaso.omitidos)
        .filter(MetricaPaso.ejecucion_id == ejecucion_id)
        .all()
    )
    df = pd.DataFrame(filas, columns=["epoca", "total", "acc", "omitidos"])
    if df.empty:
        return df
    return df.groupby("epoca", as_index=False).agg(total=("total", "mean"), acc=("acc", "mean"), omitidos=("omitidos", "sum"))
