"""
Conexión al registro de ejecuciones
Un engine por archivo de ejecución, sesiones transaccionales
"""
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

from loguru import logger
from sqlalchemy import create_engine, event
from sqlalchemy.engine import Engine
from sqlalchemy.engine.url import make_url
from sqlalchemy.orm import Session, scoped_session, sessionmaker
from sqlalchemy.pool import StaticPool

from ..config import DATABASE_URL
from .models import Base

MEMORIA = "sqlite://"
ARCHIVO_REGISTRO = "runs.db"


def database_url_for_run(output_dir) -> str:
    """
    URL de la base de una ejecución

    CONTRASTA_DATABASE_URL tiene prioridad; si no está definida se usa un
    SQLite dentro del directorio de salida.
    """
    if DATABASE_URL:
        return DATABASE_URL
    return f"sqlite:///{(Path(output_dir) / ARCHIVO_REGISTRO).as_posix()}"


def _activar_claves_foraneas(dbapi_conn, _registro) -> None:
    cursor = dbapi_conn.cursor()
    cursor.execute("PRAGMA foreign_keys=ON")
    cursor.close()


def _engine_para(url: str) -> Engine:
    """
    Arma el engine según el dialecto

    Args:
        url: URL SQLAlchemy

    Returns:
        Engine listo; en SQLite con un único pool estático y claves foráneas activas
    """
    destino = make_url(url)
    if destino.get_backend_name() != "sqlite":
        return create_engine(url, pool_pre_ping=True)

    if destino.database:
        # el directorio de la ejecución puede no existir todavía
        Path(destino.database).parent.mkdir(parents=True, exist_ok=True)

    engine = create_engine(url, connect_args={"check_same_thread": False}, poolclass=StaticPool)
    event.listen(engine, "connect", _activar_claves_foraneas)
    return engine


class Database:
    """Registro persistente de ejecuciones y métricas por paso"""

    def __init__(self, database_url: Optional[str] = None):
        """
        Abre (o crea) el registro

        Args:
            database_url: URL de conexión; None abre un SQLite en memoria
        """
        self.database_url = database_url or MEMORIA
        try:
            self.engine = _engine_para(self.database_url)
        except Exception as e:
            logger.error(f"❌ No se pudo abrir el registro {self.database_url}: {e}")
            raise
        self.SessionLocal = scoped_session(sessionmaker(bind=self.engine, autoflush=False))
        self.crear_tablas()
        logger.debug(f"Registro de ejecuciones abierto: {self.database_url}")

    def crear_tablas(self) -> None:
        """Crea las tablas faltantes; las existentes no se tocan"""
        Base.metadata.create_all(bind=self.engine)

    @contextmanager
    def get_session(self) -> Iterator[Session]:
        """
        Sesión transaccional: commit al salir, rollback ante cualquier excepción

        Uso:
            with db.get_session() as session:
                crear_ejecucion(session, ...)
        """
        session = self.SessionLocal()
        try:
            yield session
            session.commit()
        except Exception as e:
            session.rollback()
            logger.error(f"❌ Transacción revertida en el registro ({type(e).__name__}): {e}")
            raise
        finally:
            session.close()

    def cerrar(self) -> None:
        """Libera sesiones y conexiones del engine"""
        self.SessionLocal.remove()
        self.engine.dispose()
        logger.debug(f"Registro cerrado: {self.database_url}")
