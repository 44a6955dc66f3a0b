"""
Exportación de métricas a CSV
"""
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

import pandas as pd
from loguru import logger

from ..database import COLUMNAS_CSV, Database, obtener_metricas, obtener_ultima_ejecucion
from ..errors import ConfigurationError

CSV_COLUMNS = list(COLUMNAS_CSV)


def metrics_frame(filas: Iterable[Mapping]) -> pd.DataFrame:
    """DataFrame con las columnas del CSV en orden, a partir de filas de métricas"""
    df = pd.DataFrame(list(filas))
    if df.empty:
        return pd.DataFrame(columns=CSV_COLUMNS)
    faltantes = [c for c in CSV_COLUMNS if c not in df.columns]
    if faltantes:
        raise ConfigurationError(f"Filas de métricas sin columnas {faltantes}")
    return df[CSV_COLUMNS].sort_values("step", kind="stable").reset_index(drop=True)


def write_metrics_csv(filas: Union[pd.DataFrame, Iterable[Mapping]], ruta) -> Path:
    """
    Escribe el CSV de métricas (step, lr, l_ab, l_ba, g_ab, g_ba, total, pairs, acc)

    El formato numérico es fijo, así dos ejecuciones idénticas producen bytes idénticos.
    """
    df = filas if isinstance(filas, pd.DataFrame) else metrics_frame(filas)
    df = df[CSV_COLUMNS].astype({"step": "int64", "pairs": "int64"})
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(ruta, index=False, float_format="%.10g", lineterminator="\n")
    logger.debug(f"💾 Métricas exportadas: {ruta} ({len(df)} filas)")
    return ruta


def export_run_metrics(database_url: str, ruta_csv, ejecucion_id: Optional[int] = None) -> Path:
    """
    Lee las métricas de una ejecución de la base y las escribe como CSV

    Args:
        database_url: URL de la base de ejecuciones
        ruta_csv: Archivo destino
        ejecucion_id: Ejecución a exportar (None = la más reciente)

    Returns:
        Ruta escrita
    """
    db = Database(database_url)
    try:
        with db.get_session() as session:
            if ejecucion_id is None:
                ultima = obtener_ultima_ejecucion(session)
                if ultima is None:
                    raise ConfigurationError(f"No hay ejecuciones registradas en {database_url}")
                ejecucion_id = ultima.id
            df = obtener_metricas(session, ejecucion_id)
    finally:
        db.cerrar()

    if df.empty:
        logger.warning(f"⚠️ La ejecución {ejecucion_id} no tiene métricas")
    ruta = write_metrics_csv(df, ruta_csv)
    logger.info(f"📊 Ejecución {ejecucion_id}: {len(df)} filas exportadas a {ruta}")
    return ruta
