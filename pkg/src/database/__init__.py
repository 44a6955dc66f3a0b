"""
Database - Registro de ejecuciones y métricas con SQLAlchemy
"""
from .models import Ejecucion, EstadoEjecucion, MetricaPaso
from .connection import Database, database_url_for_run
from .crud import (
    COLUMNAS_CSV,
    crear_ejecucion,
    finalizar_ejecucion,
    obtener_ejecucion,
    obtener_ultima_ejecucion,
    registrar_metricas_batch,
    obtener_metricas,
    resumen_por_epoca
)

__all__ = [
    # Modelos
    "Ejecucion",
    "EstadoEjecucion",
    "MetricaPaso",
    # Conexion
    "Database",
    "database_url_for_run",
    # CRUD
    "COLUMNAS_CSV",
    "crear_ejecucion",
    "finalizar_ejecucion",
    "obtener_ejecucion",
    "obtener_ultima_ejecucion",
    "registrar_metricas_batch",
    "obtener_metricas",
    "resumen_por_epoca"
]
