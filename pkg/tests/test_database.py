"""
Tests del registro de ejecuciones en SQLite en memoria
"""
import pytest

from src.database import (
    COLUMNAS_CSV,
    Database,
    EstadoEjecucion,
    crear_ejecucion,
    database_url_for_run,
    finalizar_ejecucion,
    obtener_ejecucion,
    obtener_metricas,
    obtener_ultima_ejecucion,
    registrar_metricas_batch,
    resumen_por_epoca,
)


def _fila(paso: int, epoca: int, total: float) -> dict:
    return {
        "paso": paso,
        "epoca": epoca,
        "lr": 0.03,
        "l_ab": total,
        "l_ba": total,
        "g_ab": 0.0,
        "g_ba": 0.0,
        "total": total,
        "pares": 10,
        "acc": 0.5,
        "omitidos": 1,
    }


@pytest.fixture
def db():
    base = Database()
    yield base
    base.cerrar()


class TestEjecuciones:

    def test_crear_y_finalizar(self, db):
        with db.get_session() as session:
            ejecucion_id = crear_ejecucion(session, "dpco", 7, 3, "runs/x").id
        with db.get_session() as session:
            finalizar_ejecucion(session, ejecucion_id, 12.5, 30)
        with db.get_session() as session:
            ejecucion = obtener_ejecucion(session, ejecucion_id)
            assert ejecucion.estado is EstadoEjecucion.COMPLETADA
            assert (ejecucion.segundos, ejecucion.pasos) == (12.5, 30)
            assert ejecucion.fecha_fin is not None

    def test_fallida(self, db):
        with db.get_session() as session:
            ejecucion_id = crear_ejecucion(session, "ppco", 0, 1).id
            finalizar_ejecucion(session, ejecucion_id, 1.0, 0, exitosa=False)
            assert obtener_ejecucion(session, ejecucion_id).estado is EstadoEjecucion.FALLIDA

    def test_ultima(self, db):
        with db.get_session() as session:
            crear_ejecucion(session, "dpco", 0, 1)
            segunda = crear_ejecucion(session, "dvco", 0, 1).id
        with db.get_session() as session:
            assert obtener_ultima_ejecucion(session).id == segunda

    def test_finalizar_inexistente(self, db):
        with db.get_session() as session:
            assert finalizar_ejecucion(session, 99, 1.0, 0) is None


class TestMetricas:

    def test_orden_por_paso_y_columnas(self, db):
        with db.get_session() as session:
            ejecucion_id = crear_ejecucion(session, "dpco", 0, 2).id
            registrar_metricas_batch(session, ejecucion_id, [_fila(2, 1, 1.0), _fila(0, 0, 3.0), _fila(1, 0, 2.0)])
        with db.get_session() as session:
            df = obtener_metricas(session, ejecucion_id)
        assert list(df.columns) == list(COLUMNAS_CSV)
        assert df["step"].tolist() == [0, 1, 2]
        assert df["total"].tolist() == [3.0, 2.0, 1.0]

    def test_resumen_por_epoca(self, db):
        with db.get_session() as session:
            ejecucion_id = crear_ejecucion(session, "dpco", 0, 2).id
            registrar_metricas_batch(session, ejecucion_id, [_fila(0, 0, 3.0), _fila(1, 0, 2.0), _fila(2, 1, 1.0)])
            resumen = resumen_por_epoca(session, ejecucion_id)
        assert resumen["total"].tolist() == [2.5, 1.0]
        assert resumen["omitidos"].tolist() == [2, 1]

    def test_sin_metricas(self, db):
        with db.get_session() as session:
            ejecucion_id = crear_ejecucion(session, "dpco", 0, 1).id
            assert obtener_metricas(session, ejecucion_id).empty
            assert resumen_por_epoca(session, ejecucion_id).empty


def test_url_por_ejecucion(tmp_path, monkeypatch):
    monkeypatch.setattr("src.database.connection.DATABASE_URL", None)
    assert database_url_for_run(tmp_path) == f"sqlite:///{(tmp_path / 'runs.db').as_posix()}"
    monkeypatch.setattr("src.database.connection.DATABASE_URL", "sqlite:///otra.db")
    assert database_url_for_run(tmp_path) == "sqlite:///otra.db"
